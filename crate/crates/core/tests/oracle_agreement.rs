mod common;

use std::path::Path;

use cyclia::focus::{self, FreePolicy};
use cyclia::model::ModelParams;
use cyclia::oracle::{self, FactorSummary};
use cyclia::rational::{self, ratio};
use num_traits::Signed;
use sha2::{Digest, Sha256};

fn data_dir() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/data"))
}

#[test]
fn data_files_match_pinned_digests() {
    let m = oracle::parse_manifest(oracle::MANIFEST_TEXT).unwrap();
    assert_eq!(m.digests.len(), 2);
    for (file, digest) in &m.digests {
        let bytes = std::fs::read(data_dir().join(file)).unwrap();
        let got = format!("{:x}", Sha256::digest(&bytes));
        assert_eq!(&got, digest, "{file}");
    }
    let embedded = format!("{:x}", Sha256::digest(oracle::G1_DATA_TEXT.as_bytes()));
    assert_eq!(embedded, m.digests[0].1);
}

#[test]
fn factor_summaries_match_manifest() {
    let m = oracle::parse_manifest(oracle::MANIFEST_TEXT).unwrap();
    for (file, data) in [
        ("g1_closed_form.terms", oracle::g1_data()),
        ("g2_closed_form.terms", oracle::g2_data()),
    ] {
        let listed: Vec<FactorSummary> = m
            .factors
            .iter()
            .filter(|f| f.file == file)
            .map(|f| f.summary.clone())
            .collect();
        assert_eq!(listed, data.summaries(), "{file}");
    }
    let long = &oracle::g1_data().summaries()[2];
    assert!(long.numerator);
    assert_eq!(long.bounds[2], 10);
}

#[test]
fn procedure_equals_closed_form_exactly() {
    let mut rng = common::rng(101);
    for _ in 0..8 {
        let (k3, k4, k5) = common::region_point(&mut rng);
        let g1 = focus::g1_procedure(&k3, &k4, &k5).unwrap();
        let closed = oracle::g1_closed_form(&k3, &k4, &k5).unwrap();
        assert_eq!(g1, closed, "k = ({k3}, {k4}, {k5})");
    }
}

#[test]
fn closed_form_dual_mode() {
    let pt = [ratio(1, 10), ratio(1, 10), ratio(13, 200)];
    let exact = rational::to_f64(&oracle::g1_data().evaluate(&pt).unwrap());
    let float = oracle::g1_data()
        .evaluate_f64(&pt.each_ref().map(rational::to_f64))
        .unwrap();
    assert!((exact - float).abs() <= 1e-12 * exact.abs(), "{exact} vs {float}");
}

#[test]
fn root_brackets_overlap() {
    let k = ratio(1, 10);
    let (lo, hi) = (ratio(1, 10_000), ratio(999, 10_000));
    let width = ratio(1, 1_000_000_000);
    let procedure = focus::g1_root_bisect(&k, &k, &lo, &hi, &width).unwrap();
    let closed = focus::bisect_sign_change(|k5| oracle::g1_closed_form(&k, &k, k5), &lo, &hi, &width)
        .unwrap()
        .unwrap();
    assert!(procedure.lo <= closed.hi && closed.lo <= procedure.hi);
}

#[test]
fn g2_data_agrees_at_the_root() {
    let k = ratio(1, 10);
    let b = focus::g1_root_bisect(
        &k,
        &k,
        &ratio(1, 10_000),
        &ratio(999, 10_000),
        &focus::default_root_width(),
    )
    .unwrap();
    let k5 = b.midpoint();
    let p = ModelParams::hopf_normalized(k.clone(), k.clone(), k5.clone()).unwrap();
    let g2 = &focus::model_focus(&p, 2, None, &FreePolicy::default())
        .unwrap()
        .quantities
        .g[1];
    let closed = oracle::g2_closed_form_k5(&k5).unwrap();
    assert!(g2.is_negative());
    assert!((rational::to_f64(g2) - rational::to_f64(&closed)).abs() < 1e-4);
}
