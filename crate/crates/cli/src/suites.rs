//! Seeded invariant suites run by `sdfeas selftest`.
//!
//! Every suite counts checks, tolerated ambiguities and violations. An
//! ambiguity is a run where the numerics declined to decide; a violation is
//! a definite answer that is wrong. Independent checks use nalgebra's dense
//! routines rather than the library's own.

use std::ops::Range;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sdfeas::gen::{generate, random_congruence, random_orthogonal, sweep_dim};
use sdfeas::procedures::ReductionStep;
use sdfeas::symlin::{eigen, is_psd, packed_len, schur_complement};
use sdfeas::{
    classify, forward_procedure, gordan, verify, Certificate, Config, Error, FeasibilityStatus, GordanOutcome, Sdfp,
    SymMatrix,
};
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub name: String,
    pub checks: usize,
    pub ambiguous: usize,
    pub violations: Vec<String>,
}

impl SuiteReport {
    fn new(name: &str) -> Self {
        SuiteReport { name: name.into(), checks: 0, ambiguous: 0, violations: Vec::new() }
    }

    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    fn absorb(&mut self, outcome: Check) {
        self.checks += 1;
        match outcome {
            Check::Pass => {}
            Check::Ambiguous => self.ambiguous += 1,
            Check::Violation(msg) => self.violations.push(msg),
        }
    }
}

enum Check {
    Pass,
    Ambiguous,
    Violation(String),
}

/// Independent random stream `stream` of `seed`.
fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn random_sym(n: usize, rng: &mut ChaCha8Rng) -> SymMatrix {
    SymMatrix::from_fn(n, |_, _| rng.random_range(-1.0..1.0))
}

/// `Q diag(values) Qᵀ` with a random orthogonal `Q`.
fn with_spectrum(values: &[f64], rng: &mut ChaCha8Rng) -> SymMatrix {
    let q = random_orthogonal(values.len(), rng);
    let d = DMatrix::from_diagonal(&DVector::from_column_slice(values));
    SymMatrix::from_dense(&(&q * d * q.transpose()))
}

fn min_eig(s: &SymMatrix) -> f64 {
    if s.dim() == 0 {
        return f64::INFINITY;
    }
    SymmetricEigen::new(s.to_dense()).eigenvalues.min()
}

/// Orthogonal projection onto the span of `basis` (trace inner product).
fn project(x: &SymMatrix, basis: &[SymMatrix]) -> SymMatrix {
    let n = x.dim();
    if basis.is_empty() {
        return SymMatrix::zeros(n);
    }
    let cols: Vec<DVector<f64>> = basis.iter().map(|b| DVector::from_vec(b.svec())).collect();
    let q = DMatrix::from_columns(&cols).qr().q();
    let v = DVector::from_vec(x.svec());
    let p = &q * (q.transpose() * v);
    SymMatrix::smat(n, p.as_slice())
}

fn unit(m: SymMatrix) -> Option<SymMatrix> {
    let nm = m.frobenius_norm();
    (nm > 1e-10).then(|| m.scale(1.0 / nm))
}

/// Unit matrix orthogonal to `L`, if `L` is not everything.
fn outside_direction(p: &Sdfp, rng: &mut ChaCha8Rng) -> Option<SymMatrix> {
    if p.dim_l() >= packed_len(p.n()) {
        return None;
    }
    let r = random_sym(p.n(), rng);
    unit(r.sub(&project(&r, p.basis())))
}

fn inside_direction(p: &Sdfp, rng: &mut ChaCha8Rng) -> Option<SymMatrix> {
    let mut acc = SymMatrix::zeros(p.n());
    for b in p.basis() {
        acc = acc.axpy(rng.random_range(-1.0..1.0), b);
    }
    unit(acc)
}

/// Unit part of `c` orthogonal to `L` and its length.
fn anchor_direction(p: &Sdfp) -> Option<(SymMatrix, f64)> {
    let c = p.anchor();
    let perp = c.sub(&project(c, p.basis()));
    let len = perp.frobenius_norm();
    (len > 1e-10 * c.frobenius_norm().max(1.0)).then(|| (perp.scale(1.0 / len), len))
}

/// `x` with its smallest eigenvalue moved to `-depth`.
fn push_below(x: &SymMatrix, depth: f64) -> SymMatrix {
    let e = eigen(x);
    let v = e.vectors.column(0);
    let shift = e.min() + depth;
    x.axpy(-shift, &SymMatrix::from_fn(x.dim(), |i, j| v[i] * v[j]))
}

/// Counts per status of one generator/classifier sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub status: FeasibilityStatus,
    pub instances: usize,
    pub correct: usize,
    pub ambiguous: usize,
    pub wrong: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    /// Forward-Procedure runs on weakly infeasible instances whose
    /// direction count was checked against `1 ≤ m ≤ n - 1`.
    pub partition_checks: usize,
    pub partition_ambiguous: usize,
    pub violations: Vec<String>,
}

impl SweepReport {
    pub fn instances(&self) -> usize {
        self.rows.iter().map(|r| r.instances).sum()
    }

    pub fn correct(&self) -> usize {
        self.rows.iter().map(|r| r.correct).sum()
    }

    pub fn ambiguous(&self) -> usize {
        self.rows.iter().map(|r| r.ambiguous).sum()
    }

    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

enum SweepOutcome {
    Correct,
    Ambiguous,
    Wrong(String),
}

fn chain_bound_violation(chain: &[ReductionStep]) -> Option<String> {
    chain.iter().enumerate().find_map(|(i, s)| {
        let m = s.fp.m();
        let bad = m + 1 > s.order || (i == 0 && m == 0);
        bad.then(|| format!("level {i} of order {} has {m} directions", s.order))
    })
}

/// Classifies every `(status, n, seed)` instance with `n ∈ 2..=max_n`.
pub fn sweep(max_n: usize, seeds: Range<u64>, cfg: &Config) -> SweepReport {
    let cases: Vec<(FeasibilityStatus, usize, u64)> = FeasibilityStatus::ALL
        .iter()
        .flat_map(|&s| {
            let seeds = seeds.clone();
            (2..=max_n).flat_map(move |n| seeds.clone().map(move |seed| (s, n, seed)))
        })
        .collect();
    let results: Vec<(SweepOutcome, Option<Check>)> = cases
        .par_iter()
        .map(|&(status, n, seed)| {
            let tag = format!("{status} n={n} seed={seed}");
            let g = match generate(status, n, sweep_dim(status, n, seed), seed) {
                Ok(g) => g,
                Err(e) => return (SweepOutcome::Wrong(format!("{tag}: generator failed: {e}")), None),
            };
            let partition = (status == FeasibilityStatus::WeaklyInfeasible).then(|| match forward_procedure(&g.problem, cfg) {
                Ok(fp) if fp.m() >= 1 && fp.m() < n => Check::Pass,
                Ok(fp) => Check::Violation(format!("{tag}: forward procedure used {} directions", fp.m())),
                Err(_) => Check::Ambiguous,
            });
            let outcome = match classify(&g.problem, cfg) {
                Ok(r) if r.status != status => SweepOutcome::Wrong(format!("{tag}: classified {}", r.status)),
                Ok(r) => match verify(&g.problem, &r.certificate, cfg) {
                    Ok(true) => match chain_bound_violation(&r.chain).filter(|_| status == FeasibilityStatus::WeaklyInfeasible) {
                        Some(msg) => SweepOutcome::Wrong(format!("{tag}: {msg}")),
                        None => SweepOutcome::Correct,
                    },
                    other => SweepOutcome::Wrong(format!("{tag}: certificate does not verify ({other:?})")),
                },
                Err(e) if matches!(e.source, Error::NumericallyAmbiguous(_)) => SweepOutcome::Ambiguous,
                Err(e) => SweepOutcome::Wrong(format!("{tag}: {e}")),
            };
            (outcome, partition)
        })
        .collect();

    let mut rows: Vec<SweepRow> = FeasibilityStatus::ALL
        .iter()
        .map(|&status| SweepRow { status, instances: 0, correct: 0, ambiguous: 0, wrong: 0 })
        .collect();
    let mut report = SweepReport { rows: Vec::new(), partition_checks: 0, partition_ambiguous: 0, violations: Vec::new() };
    for (&(status, _, _), (outcome, partition)) in cases.iter().zip(results) {
        let row = rows.iter_mut().find(|r| r.status == status).expect("every status has a row");
        row.instances += 1;
        match outcome {
            SweepOutcome::Correct => row.correct += 1,
            SweepOutcome::Ambiguous => row.ambiguous += 1,
            SweepOutcome::Wrong(msg) => {
                row.wrong += 1;
                report.violations.push(msg);
            }
        }
        match partition {
            Some(Check::Pass) => report.partition_checks += 1,
            Some(Check::Ambiguous) => report.partition_ambiguous += 1,
            Some(Check::Violation(msg)) => {
                report.partition_checks += 1;
                report.violations.push(msg);
            }
            None => {}
        }
    }
    report.rows = rows;
    report
}

/// Classifies one instance per status and `trials` random congruences of
/// it; a definite status different from the generated one is a violation.
pub fn congruence_invariance(n: usize, trials: usize, seed: u64, cfg: &Config) -> SuiteReport {
    let mut report = SuiteReport::new("congruence invariance");
    for (idx, &status) in FeasibilityStatus::ALL.iter().enumerate() {
        let g = match generate(status, n, sweep_dim(status, n, seed), seed) {
            Ok(g) => g,
            Err(e) => {
                report.absorb(Check::Violation(format!("{status} n={n}: generator failed: {e}")));
                continue;
            }
        };
        let judge = |p: &Sdfp, what: &str| match classify(p, cfg) {
            Ok(r) if r.status == status => Check::Pass,
            Ok(r) => Check::Violation(format!("{status} n={n} seed={seed} {what}: classified {}", r.status)),
            Err(e) if matches!(e.source, Error::NumericallyAmbiguous(_)) => Check::Ambiguous,
            Err(e) => Check::Violation(format!("{status} n={n} seed={seed} {what}: {e}")),
        };
        report.absorb(judge(&g.problem, "original"));
        let outcomes: Vec<Check> = (0..trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = rng_for(seed, (idx * trials + t) as u64);
                let p = random_congruence(n, &mut rng);
                // The transformed instance is ground truth, so it is built at
                // default precision whatever tolerances are under test.
                match g.problem.congruence(&p, &Config::default()) {
                    Ok(moved) => judge(&moved, &format!("congruence {t}")),
                    Err(_) => Check::Ambiguous,
                }
            })
            .collect();
        outcomes.into_iter().for_each(|c| report.absorb(c));
    }
    report
}

/// `M = [[A, B], [Bᵀ, Bᵀ A⁻¹ B + D]]` with `A ≻ 0` is PSD exactly when `D`
/// is; the planted `D` either is PSD or has an eigenvalue at most `-0.05`.
pub fn schur_equivalence(trials: usize, seed: u64) -> SuiteReport {
    let mut report = SuiteReport::new("schur complement");
    let outcomes: Vec<Check> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng_for(seed, t as u64);
            let k = rng.random_range(1..4);
            let rest = rng.random_range(1..4);
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
            let c = b.transpose() * a.clone().try_inverse().expect("A is definite") * &b + d;
            let m = SymMatrix::from_fn(n, |i, j| match (i < k, j < k) {
                (true, true) => a[(i, j)],
                (true, false) => b[(i, j - k)],
                (false, false) => c[(i - k, j - k)],
                (false, true) => unreachable!("upper triangle only"),
            });
            let s = match schur_complement(&m, k, 1e-9) {
                Ok(s) => s,
                Err(e) => return Check::Violation(format!("trial {t}: {e}")),
            };
            let via_schur = is_psd(&s, 1e-8);
            let whole = is_psd(&m, 1e-8);
            let dense = min_eig(&m) >= -1e-8;
            if via_schur == psd && whole == psd && dense == psd {
                Check::Pass
            } else {
                Check::Violation(format!("trial {t}: planted {psd}, schur {via_schur}, whole {whole}, dense {dense}"))
            }
        })
        .collect();
    outcomes.into_iter().for_each(|c| report.absorb(c));
    report
}

/// Plants either a PSD direction in `L` or a definite matrix in `L^⊥` and
/// checks that the alternative found is the planted one and is genuine.
pub fn gordan_exclusivity(trials: usize, seed: u64, cfg: &Config) -> SuiteReport {
    let mut report = SuiteReport::new("gordan alternative");
    let outcomes: Vec<Check> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng_for(seed, t as u64);
            let n = rng.random_range(2..6);
            let big = packed_len(n);
            let plant_direction = rng.random_bool(0.5);
            let basis: Vec<SymMatrix> = if plant_direction {
                let r = rng.random_range(1..=n);
                let vals: Vec<f64> = (0..n).map(|i| if i < r { rng.random_range(0.2..2.0) } else { 0.0 }).collect();
                let d = rng.random_range(1..big);
                let mut b = vec![with_spectrum(&vals, &mut rng)];
                b.extend((1..d).map(|_| random_sym(n, &mut rng)));
                b
            } else {
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
            let tag = format!("trial {t} (n={n}, planted {})", if plant_direction { "direction" } else { "separator" });
            match gordan(&basis, n, cfg) {
                Ok(GordanOutcome::Direction(a)) => {
                    let off = a.sub(&project(&a, &basis)).frobenius_norm();
                    if plant_direction && min_eig(&a) >= -cfg.tol_amb && off < 1e-7 {
                        Check::Pass
                    } else {
                        Check::Violation(format!("{tag}: direction with min eigenvalue {:e}, distance to L {off:e}", min_eig(&a)))
                    }
                }
                Ok(GordanOutcome::Separator(b)) => {
                    let inside = project(&b, &basis).frobenius_norm();
                    if !plant_direction && min_eig(&b) >= cfg.tol_pd && inside < 1e-7 {
                        Check::Pass
                    } else {
                        Check::Violation(format!("{tag}: separator with min eigenvalue {:e}, component in L {inside:e}", min_eig(&b)))
                    }
                }
                Ok(GordanOutcome::NumericallyAmbiguous { .. }) => Check::Ambiguous,
                Err(e) => Check::Violation(format!("{tag}: {e}")),
            }
        })
        .collect();
    outcomes.into_iter().for_each(|c| report.absorb(c));
    report
}

/// Perturbation size: `10` to `10⁴` times the threshold it must cross.
fn factor(rng: &mut ChaCha8Rng) -> f64 {
    10f64.powf(rng.random_range(1.0..4.0))
}

/// Breaks one constraint of a leaf certificate for `p`, by a margin of at
/// least ten times the tolerance that guards it.
fn break_leaf(p: &Sdfp, cert: &Certificate, cfg: &Config, rng: &mut ChaCha8Rng) -> Option<Certificate> {
    let nc = p.anchor().frobenius_norm();
    let scale = nc.max(1.0);
    let f = factor(rng);
    let kind = rng.random_range(0..3);
    match cert {
        Certificate::StrongFeas { x } => {
            if kind == 0 {
                let o = outside_direction(p, rng)?;
                let size = f * cfg.tol_lin * x.frobenius_norm().max(scale);
                Some(Certificate::StrongFeas { x: x.axpy(size, &o) })
            } else {
                Some(Certificate::StrongFeas { x: push_below(x, f * cfg.tol_pd) })
            }
        }
        Certificate::WeakFeas { x, y } => {
            let ny = y.frobenius_norm();
            let (x2, y2) = match (kind, rng.random_bool(0.5)) {
                (0, true) => {
                    let o = outside_direction(p, rng)?;
                    (x.axpy(f * cfg.tol_lin * x.frobenius_norm().max(scale), &o), y.clone())
                }
                (0, false) => (push_below(x, f * cfg.tol_psd * scale), y.clone()),
                (1, true) => {
                    let i = inside_direction(p, rng)?;
                    (x.clone(), y.axpy(f * cfg.tol_lin * ny, &i))
                }
                (1, false) => {
                    let (d, len) = anchor_direction(p)?;
                    (x.clone(), y.axpy(f * cfg.tol_lin * ny * scale / len, &d))
                }
                _ => (x.clone(), push_below(y, f * cfg.tol_psd * ny)),
            };
            Some(Certificate::WeakFeas { x: x2, y: y2 })
        }
        Certificate::StrongInfeas { s } => {
            let ns = s.frobenius_norm();
            let s2 = match kind {
                0 => s.axpy(f * cfg.tol_lin * ns, &inside_direction(p, rng)?),
                1 => {
                    let (d, len) = anchor_direction(p)?;
                    s.axpy(f * cfg.tol_lin * (ns * nc).max(1.0) / len, &d)
                }
                _ => push_below(s, f * cfg.tol_psd * ns.max(1.0)),
            };
            Some(Certificate::StrongInfeas { s: s2 })
        }
        _ => None,
    }
}

/// Breaks one level of a reduction chain: the certificate of a last
/// subproblem or a face normal.
fn break_chain(chain: &[ReductionStep], cfg: &Config, rng: &mut ChaCha8Rng) -> Option<Vec<ReductionStep>> {
    let mut chain = chain.to_vec();
    let idx = rng.random_range(0..chain.len());
    let step = &mut chain[idx];
    let last = step.fp.last.clone();
    if rng.random_bool(0.5) {
        step.last_certificate = break_leaf(&last, &step.last_certificate, cfg, rng)?;
    } else {
        let slice = step.slice.as_mut()?;
        let w = &slice.face_normal;
        let nw = w.frobenius_norm();
        let f = factor(rng);
        slice.face_normal = match rng.random_range(0..3) {
            0 => push_below(w, f * cfg.tol_psd * nw),
            1 => w.axpy(f * cfg.tol_lin * nw, &inside_direction(&last, rng)?),
            _ => {
                let (d, len) = anchor_direction(&last)?;
                w.axpy(f * cfg.tol_lin * nw * last.anchor().frobenius_norm().max(1.0) / len, &d)
            }
        };
    }
    Some(chain)
}

/// Applies `per_cert` constraint-breaking perturbations to the certificate
/// of every instance `(status, n, seed)` with `n ∈ 2..=max_n`, each of which
/// must be rejected, and checks that no certificate verifies for an
/// instance of another status.
pub fn certificate_fuzzing(max_n: usize, seeds: Range<u64>, per_cert: usize, cfg: &Config) -> SuiteReport {
    let mut report = SuiteReport::new("certificate fuzzing");
    let cases: Vec<(FeasibilityStatus, usize, u64)> = (2..=max_n)
        .flat_map(|n| seeds.clone().flat_map(move |seed| FeasibilityStatus::ALL.iter().map(move |&s| (s, n, seed))))
        .collect();
    let solved: Vec<Option<(Sdfp, Certificate)>> = cases
        .par_iter()
        .map(|&(status, n, seed)| {
            let g = generate(status, n, sweep_dim(status, n, seed), seed).ok()?;
            let r = classify(&g.problem, cfg).ok().filter(|r| r.status == status)?;
            Some((g.problem, r.certificate))
        })
        .collect();

    let solved_all = &solved;
    let outcomes: Vec<Vec<Check>> = cases
        .par_iter()
        .zip(&solved)
        .enumerate()
        .map(|(ci, (&(status, n, seed), solved))| {
            let Some((p, cert)) = solved else { return vec![Check::Ambiguous] };
            let tag = format!("{status} n={n} seed={seed}");
            let mut rng = rng_for(seed ^ 0xf022, ci as u64);
            let mut out = Vec::with_capacity(per_cert);
            let mut attempts = 0;
            while out.len() < per_cert && attempts < 20 * per_cert {
                attempts += 1;
                let bad = match cert {
                    Certificate::WeakInfeas { chain } => {
                        break_chain(chain, cfg, &mut rng).map(|chain| Certificate::WeakInfeas { chain })
                    }
                    leaf => break_leaf(p, leaf, cfg, &mut rng),
                };
                let Some(bad) = bad else { continue };
                out.push(match verify(p, &bad, cfg) {
                    Ok(true) => Check::Violation(format!("{tag}: perturbed certificate accepted: {bad:?}")),
                    _ => Check::Pass,
                });
            }
            if out.len() < per_cert {
                out.push(Check::Violation(format!("{tag}: only {} breaking perturbations found", out.len())));
            }
            // Cross-status: the same certificate on the other statuses' instances.
            for (&(other, m, oseed), os) in cases.iter().zip(solved_all) {
                if m == n && oseed == seed && other != status {
                    if let Some((q, _)) = os {
                        out.push(match verify(q, cert, cfg) {
                            Ok(true) => Check::Violation(format!("{tag}: certificate accepted for {other}")),
                            _ => Check::Pass,
                        });
                    }
                }
            }
            out
        })
        .collect();
    outcomes.into_iter().flatten().for_each(|c| report.absorb(c));
    report
}
