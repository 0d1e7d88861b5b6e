//! Optimization oracles: the Gordan alternative for a subspace and the
//! largest attainable minimum eigenvalue over an affine space.

mod barrier;

use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::model::Sdfp;
use crate::subspace::{self, orthonormalize, try_extend};
use crate::symlin::{eigen, SymMatrix};
use crate::{Error, Result};

/// Exactly one of the two alternatives for a subspace `V`: a unit-trace PSD
/// element of `V`, or a unit-trace positive definite element of `V^⊥`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum GordanOutcome {
    /// `A ∈ V ∩ K`, `tr A = 1`, of maximal rank among such elements.
    Direction(SymMatrix),
    /// `B ∈ V^⊥`, `B ≻ 0`, `tr B = 1`.
    Separator(SymMatrix),
    /// Neither witness could be validated; the bounds bracket the optimum
    /// of `max { λ_min(X) : X ∈ V, tr X = 1 }`.
    NumericallyAmbiguous { lower: f64, upper: f64 },
}

/// Residual of `x` against the span of `orth` relative to `max(1, ‖x‖)`.
fn rel_residual(x: &SymMatrix, orth: &[Vec<f64>], inside: bool) -> f64 {
    let v = x.svec();
    let p = subspace::project(&v, orth);
    let r = if inside {
        v.iter().zip(&p).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    } else {
        subspace::norm(&p)
    };
    r / x.frobenius_norm().max(1.0)
}

/// Checks a claimed direction for the subspace spanned by `basis`.
pub fn validate_direction(a: &SymMatrix, basis: &[SymMatrix], cfg: &Config) -> bool {
    let orth = orthonormalize(&subspace::svecs(basis), 1e-12);
    a.dim() > 0
        && (a.trace() - 1.0).abs() <= cfg.tol_lin
        && eigen(a).min() >= -cfg.tol_amb
        && rel_residual(a, &orth, true) <= cfg.tol_lin
}

/// Checks a claimed separator for the subspace spanned by `basis`.
pub fn validate_separator(b: &SymMatrix, basis: &[SymMatrix], cfg: &Config) -> bool {
    let orth = orthonormalize(&subspace::svecs(basis), 1e-12);
    b.dim() > 0
        && (b.trace() - 1.0).abs() <= cfg.tol_lin
        && eigen(b).min() >= cfg.tol_pd
        && rel_residual(b, &orth, false) <= cfg.tol_lin
}

/// Removes oracle noise from a direction.
///
/// Without strict complementarity the barrier iterates carry spurious
/// eigenvalues of order `√μ` or smaller powers of `μ`. The rank is read off
/// the spectrum with a relative cutoff of `√tol_rank`, then the matrix is
/// alternately truncated to that rank and projected back onto `V`. When that
/// stalls short of an exact rank-`r` element of `V` (the subspace is nearly
/// tangent to the rank-`r` matrices there), lower ranks are tried; any
/// nonzero PSD element of `V` serves the Forward Procedure, a lower rank only
/// costs extra steps. Returns `None` when no rank polishes cleanly.
fn clean_direction(a: &SymMatrix, orth: &[Vec<f64>], cfg: &Config) -> Option<SymMatrix> {
    let e = eigen(a);
    let top = e.max();
    if top <= 0.0 {
        return None;
    }
    let cut = cfg.tol_rank.sqrt() * top;
    let max_rank = e.values.iter().filter(|&&l| l > cut).count();
    let start = a.scale(1.0 / a.trace());
    (1..=max_rank).rev().find_map(|rank| {
        let (x, gap) = polish(&start, rank, orth);
        (gap <= cfg.tol_lin).then(|| finish(x, cfg))
    })
}

fn finish(x: SymMatrix, cfg: &Config) -> SymMatrix {
    let x = x.snapped(cfg.tol_snap * x.max_abs());
    x.scale(1.0 / x.trace())
}

/// Alternating projections between rank-`rank` PSD matrices and `V`.
/// Returns the last iterate (in `V`, unit trace) and its distance to the
/// rank-`rank` truncation.
fn polish(start: &SymMatrix, rank: usize, orth: &[Vec<f64>]) -> (SymMatrix, f64) {
    let n = start.dim();
    let truncate = |x: &SymMatrix| {
        let e = eigen(x);
        let floor = e.values[n - rank];
        e.rebuild(|l| if l >= floor { l.max(0.0) } else { 0.0 })
    };
    let mut x = start.clone();
    for _ in 0..POLISH_ITERS {
        let t = truncate(&x);
        let y = SymMatrix::smat(n, &subspace::project(&t.svec(), orth));
        let y = y.scale(1.0 / y.trace());
        let change = y.sub(&x).max_abs();
        x = y;
        if change <= 4.0 * f64::EPSILON {
            break;
        }
    }
    let gap = truncate(&x).sub(&x).max_abs();
    (x, gap)
}

const POLISH_ITERS: usize = 300;

/// Candidate witnesses before validation.
#[derive(Debug, Clone)]
pub struct GordanCandidates {
    pub direction: Option<SymMatrix>,
    pub separator: Option<SymMatrix>,
    pub lower: f64,
    pub upper: f64,
}

/// Runs the oracle for `V = span(basis)` in symmetric `n × n` matrices and
/// returns both candidate witnesses unvalidated.
pub fn gordan_candidates(basis: &[SymMatrix], n: usize, cfg: &Config) -> Result<GordanCandidates> {
    if n == 0 {
        return Err(Error::PreconditionViolated("Gordan oracle needs order at least 1".into()));
    }
    if basis.iter().any(|b| b.dim() != n) {
        return Err(Error::DimensionMismatch { expected: n, found: basis.iter().map(|b| b.dim()).find(|&d| d != n).unwrap() });
    }
    let orth = orthonormalize(&subspace::svecs(basis), 1e-12);
    let id = SymMatrix::identity(n);
    let u = subspace::project(&id.svec(), &orth);
    let u2 = subspace::dot(&u, &u);
    if orth.is_empty() || u2 <= 1e-14 * n as f64 {
        return Ok(GordanCandidates {
            direction: None,
            separator: Some(id.scale(1.0 / n as f64)),
            lower: f64::NEG_INFINITY,
            upper: -1.0,
        });
    }
    // Trace-one slice: x0 + span(V ∩ I^⊥).
    let x0 = SymMatrix::smat(n, &u.iter().map(|v| v / u2).collect::<Vec<_>>());
    let mut ext = vec![u.iter().map(|v| v / u2.sqrt()).collect::<Vec<f64>>()];
    for q in &orth {
        try_extend(&mut ext, q, 1e-10);
    }
    let dirs: Vec<SymMatrix> = ext[1..].iter().map(|v| SymMatrix::smat(n, v)).collect();
    let sol = barrier::solve(&x0, &dirs, cfg);

    let tail = &sol.history[sol.history.len().saturating_sub(3)..];
    let mut avg = SymMatrix::zeros(n);
    for h in tail {
        avg = avg.axpy(1.0 / tail.len() as f64, h);
    }
    let direction = if sol.lower > cfg.tol_amb {
        // A positive definite element already has maximal rank.
        Some(sol.x.scale(1.0 / sol.x.trace()))
    } else if sol.lower >= -cfg.tol_amb {
        // When no rank polishes cleanly but the iterate itself is PSD, it is
        // still an element of V ∩ K, only with some eigenvalues near zero.
        clean_direction(&avg, &orth, cfg).or_else(|| (sol.lower >= 0.0).then(|| sol.x.scale(1.0 / sol.x.trace())))
    } else {
        None
    };

    let separator = match (&sol.dual, sol.upper) {
        (Some(z), delta) if delta < 0.0 => {
            let b = z.axpy(-delta, &id);
            Some(b.scale(1.0 / b.trace()))
        }
        _ => None,
    };
    Ok(GordanCandidates { direction, separator, lower: sol.lower, upper: sol.upper })
}

/// Gordan alternative for `V = span(basis)`.
///
/// The direction is tried first; a separator is returned only when no
/// direction validates, so the two outcomes never both come back.
pub fn gordan(basis: &[SymMatrix], n: usize, cfg: &Config) -> Result<GordanOutcome> {
    let c = gordan_candidates(basis, n, cfg)?;
    if let Some(a) = c.direction {
        if validate_direction(&a, basis, cfg) {
            return Ok(GordanOutcome::Direction(a));
        }
    }
    if let Some(b) = c.separator {
        if validate_separator(&b, basis, cfg) {
            return Ok(GordanOutcome::Separator(b));
        }
    }
    Ok(GordanOutcome::NumericallyAmbiguous { lower: c.lower, upper: c.upper })
}

/// Estimate of `t* = sup { λ_min(X) : X ∈ L + c }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaStarResult {
    /// `λ_min(witness)`, a lower bound on `t*`.
    pub value: f64,
    pub witness: SymMatrix,
    /// Upper bound on `t*` certified by `dual` (`+∞` when unavailable).
    pub upper: f64,
    /// PSD, unit trace, in `L^⊥`, with `⟨dual, c⟩ = upper`.
    pub dual: Option<SymMatrix>,
    pub converged: bool,
}

/// `sup { λ_min(X) : X ∈ L + c }`; requires `L ∩ K = {0}`.
pub fn max_min_eigen_affine(p: &Sdfp, cfg: &Config) -> Result<LambdaStarResult> {
    let n = p.n();
    if n == 0 {
        return Ok(LambdaStarResult {
            value: f64::INFINITY,
            witness: SymMatrix::zeros(0),
            upper: f64::INFINITY,
            dual: None,
            converged: true,
        });
    }
    if p.dim_l() > 0 {
        match gordan(p.basis(), n, cfg)? {
            GordanOutcome::Separator(_) => {}
            GordanOutcome::Direction(_) => return Err(Error::NotBounded),
            GordanOutcome::NumericallyAmbiguous { .. } => {
                return Err(Error::NumericallyAmbiguous("cannot decide whether L meets the PSD cone".into()))
            }
        }
    }
    let dirs: Vec<SymMatrix> = p.orthonormal().iter().map(|v| SymMatrix::smat(n, v)).collect();
    let sol = barrier::solve(p.anchor(), &dirs, cfg);
    if sol.unbounded {
        return Err(Error::NotBounded);
    }
    Ok(LambdaStarResult { value: sol.lower, witness: sol.x, upper: sol.upper, dual: sol.dual, converged: sol.converged })
}

/// A PSD point of `L + c` (within `tol_amb`), if the optimum is not clearly negative.
pub fn find_psd_point(p: &Sdfp, cfg: &Config) -> Result<Option<SymMatrix>> {
    if p.n() == 0 {
        return Ok(Some(SymMatrix::zeros(0)));
    }
    let r = max_min_eigen_affine(p, cfg)?;
    if r.value >= -cfg.tol_amb {
        Ok(Some(r.witness))
    } else if r.upper < -cfg.tol_amb {
        Ok(None)
    } else {
        Err(Error::NumericallyAmbiguous(format!(
            "optimal minimum eigenvalue lies in [{:e}, {:e}]",
            r.value, r.upper
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> Config {
        Config::default()
    }

    #[test]
    fn empty_subspace_separates_with_scaled_identity() {
        let out = gordan(&[], 3, &cfg()).unwrap();
        assert_eq!(out, GordanOutcome::Separator(SymMatrix::identity(3).scale(1.0 / 3.0)));
    }

    #[test]
    fn e11_direction_is_exact() {
        let out = gordan(&[SymMatrix::unit(2, 0, 0)], 2, &cfg()).unwrap();
        assert_eq!(out, GordanOutcome::Direction(SymMatrix::unit(2, 0, 0)));
    }

    #[test]
    fn off_diagonal_subspace_separates() {
        let out = gordan(&[SymMatrix::unit(2, 0, 1)], 2, &cfg()).unwrap();
        match out {
            GordanOutcome::Separator(b) => {
                assert!(b.get(0, 1).abs() < 1e-12);
                assert!((b.trace() - 1.0).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn max_rank_direction() {
        // V = span{e11, e22, e12}: the whole 2×2 space; a max-rank direction is PD.
        let basis = [SymMatrix::unit(3, 0, 0), SymMatrix::unit(3, 1, 1), SymMatrix::unit(3, 0, 1)];
        match gordan(&basis, 3, &cfg()).unwrap() {
            GordanOutcome::Direction(a) => {
                let e = eigen(&a.block(0, 2));
                assert!(e.min() > 1e-3, "{a:?}");
                assert_eq!(a.get(2, 2), 0.0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn lambda_star_requires_bounded() {
        let p = Sdfp::new(2, vec![SymMatrix::identity(2)], SymMatrix::zeros(2)).unwrap();
        assert_eq!(max_min_eigen_affine(&p, &cfg()), Err(Error::NotBounded));
    }
}
