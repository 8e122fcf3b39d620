use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::rational::{ratio, Q};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A rational point strictly inside the center region.
pub fn region_point(rng: &mut impl Rng) -> (Q, Q, Q) {
    let a = rng.gen_range(1..125i64);
    let k3 = ratio(a, 1000);
    let b_max = 1000 - 8 * a;
    let b = rng.gen_range(1..b_max);
    let k4 = ratio(b, 1000);
    let bound = &k4 * (ratio(1, 1) - ratio(8, 1) * &k3 - &k4) / &k3;
    let c = rng.gen_range(1..1000i64);
    let k5 = bound * ratio(c, 1000);
    (k3, k4, k5)
}
