mod common;

use common::sym;
use sdfeas::gen::{canonical_pair, two_direction_family};
use sdfeas::symlin::dist_to_psd;
use sdfeas::{build_sequence, classify, forward_procedure, Config, Error, SymMatrix};

#[test]
fn canonical_distance_has_closed_form() {
    for t in [1.0, 10.0, 1e3, 1e6] {
        let d = dist_to_psd(&sym(&[&[t, 1.0], &[1.0, 0.0]]));
        let closed = ((t * t + 4.0f64).sqrt() - t) / 2.0;
        // Cancellation-free form of the same value for large t.
        let stable = 2.0 / ((t * t + 4.0f64).sqrt() + t);
        assert!((d - closed).abs() <= 1e-9, "t = {t}: {d} vs {closed}");
        assert!((d - stable).abs() <= 1e-12 * stable.max(1.0), "t = {t}");
    }
}

#[test]
fn canonical_sequence_doubles_to_the_reciprocal() {
    let cfg = Config::default();
    let p = canonical_pair();
    let fp = forward_procedure(&p, &cfg).unwrap();
    for eps in [1e-3, 1e-6] {
        let seq = build_sequence(&p, &fp, eps, &cfg).unwrap();
        assert_eq!(seq.alphas.len(), 1);
        assert!(seq.distance < eps);
        // dist ≈ 1/α, reached by doubling from 1.
        let ratio = seq.alphas[0] * eps;
        assert!((0.25..=4.0).contains(&ratio), "eps = {eps}: alpha = {}", seq.alphas[0]);
        assert!(p.contains(&seq.point, 1e-12));
    }
}

#[test]
fn two_direction_sequence_reaches_target() {
    let cfg = Config::default();
    let p = two_direction_family();
    let r = classify(&p, &cfg).unwrap();
    let fp = &r.chain[0].fp;
    for eps in [1e-2, 1e-4] {
        let seq = build_sequence(&p, fp, eps, &cfg).unwrap();
        assert_eq!(seq.alphas.len(), 2);
        assert!(seq.distance < eps);
        assert!((dist_to_psd(&seq.point) - seq.distance).abs() < 1e-15);
        assert!(p.contains(&seq.point, 1e-9));
    }
}

#[test]
fn sequence_needs_a_direction_and_a_positive_target() {
    let cfg = Config::default();
    let feasible = sdfeas::Sdfp::new(2, vec![], SymMatrix::identity(2)).unwrap();
    let fp = forward_procedure(&feasible, &cfg).unwrap();
    assert!(matches!(build_sequence(&feasible, &fp, 1e-3, &cfg), Err(Error::PreconditionViolated(_))));
    let p = canonical_pair();
    let fp = forward_procedure(&p, &cfg).unwrap();
    assert!(matches!(build_sequence(&p, &fp, 0.0, &cfg), Err(Error::PreconditionViolated(_))));
}
