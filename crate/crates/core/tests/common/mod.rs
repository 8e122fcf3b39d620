#![allow(dead_code)]

pub mod props;

use cyclia::model::ModelParams;
use cyclia::rational::{ratio, Q};
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Point strictly inside the center region, from three integer draws.
pub fn region_from(a: i64, b: u32, c: i64) -> (Q, Q, Q) {
    let k3 = ratio(a, 1000);
    let b_max = 1000 - 8 * a;
    let b = 1 + (b as i64) % (b_max - 1);
    let k4 = ratio(b, 1000);
    let bound = &k4 * (ratio(1, 1) - ratio(8, 1) * &k3 - &k4) / &k3;
    (k3, k4, bound * ratio(c, 1000))
}

pub fn region_point(rng: &mut impl Rng) -> (Q, Q, Q) {
    region_from(rng.gen_range(1..125), rng.gen(), rng.gen_range(1..1000))
}

pub fn region_strategy() -> impl Strategy<Value = (Q, Q, Q)> {
    (1i64..125, any::<u32>(), 1i64..1000).prop_map(|(a, b, c)| region_from(a, b, c))
}

/// One-cycle parameters.
pub fn kstar() -> ModelParams {
    ModelParams::with_overrides(
        ratio(1, 10),
        ratio(1, 10),
        ratio(13, 200),
        Some(ratio(71041, 10_000_000)),
        None,
        None,
    )
    .unwrap()
}

/// Two-cycle parameters: `eps` raised by 1e-4 with `k1`, `k2` held.
pub fn kstarstar() -> ModelParams {
    let k = kstar();
    ModelParams::with_overrides(
        k.k3.clone(),
        k.k4.clone(),
        k.k5.clone(),
        Some(ratio(72041, 10_000_000)),
        Some(k.k2.clone()),
        Some(k.k1.clone()),
    )
    .unwrap()
}
