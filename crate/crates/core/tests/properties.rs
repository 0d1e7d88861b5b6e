//! Randomized invariants checked against independent dense linear algebra
//! from nalgebra.

mod common;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sdfeas::gen::{generate, random_congruence, random_orthogonal, sweep_dim};
use sdfeas::procedures::decompose;
use sdfeas::symlin::{is_psd, schur_complement};
use sdfeas::{classify, gordan, verify, Certificate, Config, FeasibilityStatus, GordanOutcome, Sdfp, SymMatrix};

fn min_eig(s: &SymMatrix) -> f64 {
    if s.dim() == 0 {
        return f64::INFINITY;
    }
    SymmetricEigen::new(s.to_dense()).eigenvalues.min()
}

/// `Q diag(values) Qᵀ` with a random orthogonal `Q`.
fn with_spectrum(values: &[f64], rng: &mut ChaCha8Rng) -> SymMatrix {
    let q = random_orthogonal(values.len(), rng);
    let d = DMatrix::from_diagonal(&DVector::from_column_slice(values));
    SymMatrix::from_dense(&(&q * d * q.transpose()))
}

fn random_sym(n: usize, rng: &mut ChaCha8Rng) -> SymMatrix {
    SymMatrix::from_fn(n, |_, _| rng.random_range(-1.0..1.0))
}

/// Orthogonal projection of `x` onto the span of `basis`, by dense least
/// squares.
fn project_onto_span(x: &SymMatrix, basis: &[SymMatrix]) -> DVector<f64> {
    let v = DVector::from_vec(x.svec());
    if basis.is_empty() {
        return DVector::zeros(v.len());
    }
    let cols: Vec<DVector<f64>> = basis.iter().map(|b| DVector::from_vec(b.svec())).collect();
    let a = DMatrix::from_columns(&cols);
    let qr = a.clone().qr();
    let y = qr.r().solve_upper_triangular(&(qr.q().transpose() * &v)).unwrap();
    a * y
}

fn dist_to_span(x: &SymMatrix, basis: &[SymMatrix]) -> f64 {
    (DVector::from_vec(x.svec()) - project_onto_span(x, basis)).norm()
}

fn component_in_span(x: &SymMatrix, basis: &[SymMatrix]) -> f64 {
    project_onto_span(x, basis).norm()
}

fn status_strategy() -> impl Strategy<Value = FeasibilityStatus> {
    prop::sample::select(FeasibilityStatus::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn is_psd_agrees_with_dense_eigenvalues(n in 1usize..7, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // Eigenvalues are either exactly zero or at least 1e-3 away from it.
        let values: Vec<f64> = (0..n)
            .map(|_| match rng.random_range(0..3) {
                0 => 0.0,
                1 => rng.random_range(1e-3..2.0),
                _ => -rng.random_range(1e-3..2.0),
            })
            .collect();
        let s = with_spectrum(&values, &mut rng);
        let expected = values.iter().all(|&v| v >= 0.0);
        prop_assert_eq!(is_psd(&s, 1e-9), expected);
        prop_assert_eq!(min_eig(&s) >= -1e-9, expected);
    }

    #[test]
    fn schur_complement_decides_psd(k in 1usize..4, rest in 1usize..4, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = k + rest;
        let a_vals: Vec<f64> = (0..k).map(|_| rng.random_range(0.1..3.0)).collect();
        let a = with_spectrum(&a_vals, &mut rng).to_dense();
        let b = DMatrix::from_fn(k, rest, |_, _| rng.random_range(-1.0..1.0));
        let psd = rng.random_bool(0.5);
        let d_vals: Vec<f64> = (0..rest)
            .map(|i| if psd || i > 0 { rng.random_range(0.0..2.0) } else { -rng.random_range(0.05..2.0) })
            .map(|v| if (0.0..0.05).contains(&v) { 0.0 } else { v })
            .collect();
        let d = with_spectrum(&d_vals, &mut rng).to_dense();
        let c = b.transpose() * a.clone().try_inverse().unwrap() * &b + d;
        let m = SymMatrix::from_fn(n, |i, j| match (i < k, j < k) {
            (true, true) => a[(i, j)],
            (true, false) => b[(i, j - k)],
            (false, false) => c[(i - k, j - k)],
            (false, true) => unreachable!(),
        });
        let s = schur_complement(&m, k, 1e-9).unwrap();
        prop_assert_eq!(is_psd(&s, 1e-8), psd);
        prop_assert_eq!(is_psd(&m, 1e-8), psd);
        prop_assert_eq!(min_eig(&m) >= -1e-8, psd);
    }

    #[test]
    fn gordan_finds_the_planted_alternative(n in 2usize..6, seed in any::<u64>()) {
        let cfg = Config::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let big = n * (n + 1) / 2;
        let plant_direction = rng.random_bool(0.5);
        let basis: Vec<SymMatrix> = if plant_direction {
            // L ∋ a nonzero PSD matrix of random rank.
            let r = rng.random_range(1..=n);
            let vals: Vec<f64> = (0..n).map(|i| if i < r { rng.random_range(0.2..2.0) } else { 0.0 }).collect();
            let d = rng.random_range(1..big);
            let mut b = vec![with_spectrum(&vals, &mut rng)];
            b.extend((1..d).map(|_| random_sym(n, &mut rng)));
            b
        } else {
            // L ⊥ a positive definite matrix.
            let vals: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..2.0)).collect();
            let sep = with_spectrum(&vals, &mut rng);
            let d = rng.random_range(1..big);
            (0..d)
                .map(|_| {
                    let x = random_sym(n, &mut rng);
                    x.axpy(-x.inner(&sep) / sep.inner(&sep), &sep)
                })
                .collect()
        };
        match gordan(&basis, n, &cfg).unwrap() {
            GordanOutcome::Direction(a) => {
                prop_assert!(plant_direction);
                prop_assert!(min_eig(&a) >= -cfg.tol_amb);
                prop_assert!((a.trace() - 1.0).abs() < 1e-8);
                prop_assert!(dist_to_span(&a, &basis) < 1e-7);
            }
            GordanOutcome::Separator(b) => {
                prop_assert!(!plant_direction);
                prop_assert!(min_eig(&b) >= cfg.tol_pd);
                prop_assert!(component_in_span(&b, &basis) < 1e-7);
            }
            GordanOutcome::NumericallyAmbiguous { lower, upper } => {
                prop_assert!(false, "ambiguous: [{lower:e}, {upper:e}]");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn status_is_invariant_under_congruence(
        status in status_strategy(),
        n in 2usize..6,
        seed in 0u64..1000,
        tseed in any::<u64>(),
    ) {
        let cfg = Config::default();
        let g = generate(status, n, sweep_dim(status, n, seed), seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(tseed);
        let p = random_congruence(n, &mut rng);
        let moved = g.problem.congruence(&p, &cfg).unwrap();
        let a = classify(&g.problem, &cfg);
        let b = classify(&moved, &cfg);
        if let (Ok(a), Ok(b)) = (&a, &b) {
            prop_assert_eq!(a.status, status);
            prop_assert_eq!(b.status, status);
        } else {
            // Ambiguity is allowed only as a flag, never as a wrong answer.
            prop_assert!(a.map(|r| r.status == status).unwrap_or(true));
            prop_assert!(b.map(|r| r.status == status).unwrap_or(true));
        }
    }

    #[test]
    fn leading_definite_block_splits_off(
        status in status_strategy(),
        k in 1usize..3,
        rest in 2usize..5,
        seed in 0u64..1000,
    ) {
        let cfg = Config::default();
        let inner = generate(status, rest, sweep_dim(status, rest, seed), seed).unwrap().problem;
        let n = k + rest;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        // {[[t I + X, B], [Bᵀ, Y]] : Y ∈ inner} with fixed X and free B.
        let lift = |m: &SymMatrix| SymMatrix::from_fn(n, |i, j| if i >= k && j >= k { m.get(i - k, j - k) } else { 0.0 });
        let x = random_sym(k, &mut rng);
        let mut anchor = lift(inner.anchor());
        for i in 0..k {
            for j in i..k {
                anchor.set(i, j, x.get(i, j));
            }
        }
        let mut basis: Vec<SymMatrix> = inner.basis().iter().map(lift).collect();
        basis.push(SymMatrix::identity(k).embed(n, 0));
        for i in 0..k {
            for j in k..n {
                basis.push(SymMatrix::unit(n, i, j));
            }
        }
        let outer = Sdfp::new(n, basis, anchor).unwrap();
        let lower = decompose(&outer, k, &cfg).unwrap();
        prop_assert!(lower.affinely_equal(&inner, 1e-9));
        if let Ok(r) = classify(&outer, &cfg) {
            prop_assert_eq!(r.status.is_weak(), status.is_weak());
            if !status.is_weak() {
                prop_assert_eq!(r.status, status);
            }
        }
    }
}

/// Independent check of what a leaf certificate claims, at the tolerances
/// the verifier uses.
fn leaf_claim_holds(p: &Sdfp, cert: &Certificate, cfg: &Config) -> bool {
    let c = p.anchor();
    let scale = c.frobenius_norm().max(1.0);
    let in_affine = |x: &SymMatrix| dist_to_span(&x.sub(c), p.basis()) <= cfg.tol_lin * x.frobenius_norm().max(scale);
    let res = |x: &SymMatrix| dist_to_span(&x.sub(c), p.basis());
    match cert {
        Certificate::StrongFeas { x } => in_affine(x) && min_eig(x) - res(x) > 0.0,
        Certificate::WeakFeas { x, y } => {
            let ny = y.frobenius_norm();
            in_affine(x)
                && min_eig(x) - res(x) >= -2.0 * cfg.tol_psd * scale
                && min_eig(y) >= -2.0 * cfg.tol_psd * ny
                && component_in_span(y, p.basis()) <= 2.0 * cfg.tol_lin * ny
                && y.inner(c).abs() <= 2.0 * cfg.tol_lin * ny * scale
        }
        Certificate::StrongInfeas { s } => {
            let ns = s.frobenius_norm();
            min_eig(s) >= -2.0 * cfg.tol_psd * ns.max(1.0)
                && component_in_span(s, p.basis()) <= 2.0 * cfg.tol_lin * ns
                && (s.inner(c) + 1.0).abs() <= 2.0 * cfg.tol_lin * (ns * c.frobenius_norm()).max(1.0)
        }
        _ => unreachable!(),
    }
}

fn perturb_leaf(cert: &Certificate, rng: &mut ChaCha8Rng) -> Certificate {
    let first = rng.random_bool(0.5);
    let mut bump = |x: &SymMatrix| {
        let e = random_sym(x.dim(), rng);
        let size = 10f64.powf(rng.random_range(-9.0..0.0)) * x.frobenius_norm().max(1.0);
        x.axpy(size / e.frobenius_norm(), &e)
    };
    match cert {
        Certificate::StrongFeas { x } => Certificate::StrongFeas { x: bump(x) },
        Certificate::WeakFeas { x, y } => {
            if first {
                Certificate::WeakFeas { x: bump(x), y: y.clone() }
            } else {
                Certificate::WeakFeas { x: x.clone(), y: bump(y) }
            }
        }
        Certificate::StrongInfeas { s } => Certificate::StrongInfeas { s: bump(s) },
        _ => unreachable!(),
    }
}

#[test]
fn perturbed_leaf_certificates_are_only_accepted_when_still_valid() {
    let cfg = Config::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut rejected = 0;
    let mut total = 0;
    for status in [FeasibilityStatus::StronglyFeasible, FeasibilityStatus::WeaklyFeasible, FeasibilityStatus::StronglyInfeasible] {
        for n in 2..=5 {
            for seed in 0..4 {
                let g = generate(status, n, sweep_dim(status, n, seed), seed).unwrap();
                let Ok(r) = classify(&g.problem, &cfg) else { continue };
                let leaf = match r.certificate {
                    Certificate::WeakStatus { .. } | Certificate::WeakInfeas { .. } => continue,
                    c => c,
                };
                assert!(leaf_claim_holds(&g.problem, &leaf, &cfg));
                for _ in 0..100 {
                    let bad = perturb_leaf(&leaf, &mut rng);
                    total += 1;
                    if verify(&g.problem, &bad, &cfg).unwrap() {
                        assert!(leaf_claim_holds(&g.problem, &bad, &cfg), "{status} n={n} seed={seed}: {bad:?}");
                    } else {
                        rejected += 1;
                    }
                }
            }
        }
    }
    // The larger perturbations must be caught.
    assert!(rejected * 3 > total, "{rejected}/{total}");
}

#[test]
fn certificates_do_not_transfer_between_statuses() {
    let cfg = Config::default();
    for n in 2..=5 {
        let results: Vec<_> = FeasibilityStatus::ALL
            .iter()
            .filter_map(|&s| {
                let g = generate(s, n, sweep_dim(s, n, 3), 3).unwrap();
                let r = classify(&g.problem, &cfg).ok()?;
                Some((s, g.problem, r.certificate))
            })
            .collect();
        assert!(results.len() >= 3);
        for (s, _, cert) in &results {
            for (t, problem, _) in &results {
                if s != t {
                    assert_ne!(verify(problem, cert, &cfg), Ok(true), "{s} certificate accepted for {t} (n={n})");
                }
            }
        }
    }
}
