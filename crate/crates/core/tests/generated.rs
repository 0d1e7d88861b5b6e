//! Generator and classifier against each other over the seeded sweep.

use sdfeas::gen::{generate, sweep_dim};
use sdfeas::{classify, verify, Config, FeasibilityStatus};

#[test]
fn sweep_is_never_misclassified() {
    let cfg = Config::default();
    let mut total = 0;
    let mut definitive = 0;
    for status in FeasibilityStatus::ALL {
        for n in 2..=8 {
            for seed in 0..20 {
                let g = generate(status, n, sweep_dim(status, n, seed), seed).unwrap();
                total += 1;
                match classify(&g.problem, &cfg) {
                    Ok(r) => {
                        assert_eq!(r.status, status, "n={n} seed={seed}");
                        assert_eq!(verify(&g.problem, &r.certificate, &cfg), Ok(true), "{status} n={n} seed={seed}");
                        definitive += 1;
                    }
                    Err(e) => assert!(
                        matches!(e.source, sdfeas::Error::NumericallyAmbiguous(_)),
                        "{status} n={n} seed={seed}: {e}"
                    ),
                }
            }
        }
    }
    assert!(definitive as f64 >= 0.95 * total as f64, "{definitive}/{total}");
}

#[test]
fn weakly_infeasible_partitions_use_fewer_than_n_directions() {
    let cfg = Config::default();
    for n in 2..=8 {
        for seed in 0..20 {
            let s = FeasibilityStatus::WeaklyInfeasible;
            let g = generate(s, n, sweep_dim(s, n, seed), seed).unwrap();
            let chain = match classify(&g.problem, &cfg) {
                Ok(r) => r.chain,
                Err(e) => e.chain,
            };
            for step in &chain {
                let m = step.fp.m();
                assert!(m < step.order, "n={n} seed={seed}: m={m} at order {}", step.order);
            }
            if let Some(first) = chain.first() {
                assert!(first.fp.m() >= 1, "n={n} seed={seed}");
            }
        }
    }
}
