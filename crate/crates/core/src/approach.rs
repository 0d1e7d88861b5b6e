//! Points of a weakly infeasible problem that come arbitrarily close to the
//! PSD cone, built from the Forward-Procedure directions.

use serde::{Deserialize, Serialize};

use crate::certs::back_transform_primal;
use crate::config::Config;
use crate::model::{lift, Sdfp};
use crate::oracle::find_psd_point;
use crate::procedures::FpOutput;
use crate::symlin::{dist_to_psd, SymMatrix};
use crate::{Error, Result};

/// `point = c' + Σ α_i A_i` (mapped back to the original coordinates) with
/// `dist(point, K) < eps`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproachSequence {
    pub eps: f64,
    /// Base point in `L + c`.
    pub cprime: SymMatrix,
    /// `α_1, …, α_m`.
    pub alphas: Vec<f64>,
    pub point: SymMatrix,
    pub distance: f64,
    /// `dist(π̄_{N_{i-1}}(y), K)` in transformed coordinates for stage `i`.
    pub stage_distances: Vec<f64>,
}

/// Point `c'` of `Pᵀ(L + c)P` whose lower-right block `π̄_{N_m}(c')` is a PSD
/// point of the last subproblem. Fails with [`Error::LastInfeasible`] when
/// the last subproblem has no such point.
pub fn choose_cprime(p: &Sdfp, fp: &FpOutput, cfg: &Config) -> Result<SymMatrix> {
    let x_last = find_psd_point(&fp.last, cfg)?.ok_or(Error::LastInfeasible)?;
    let moved = p.congruence(&fp.transform, cfg)?;
    let (c, res) = lift(&moved, fp.total(), &x_last, true)?;
    if res > cfg.tol_lin * x_last.frobenius_norm().max(1.0) {
        return Err(Error::NumericallyAmbiguous(format!("lift residual {res:e}")));
    }
    Ok(c)
}

fn stages(fp: &FpOutput, y0: &SymMatrix, eps: f64, cfg: &Config) -> Result<(SymMatrix, Vec<f64>, Vec<f64>)> {
    let n = y0.dim();
    let m = fp.m();
    let mut y = y0.clone();
    let mut alphas = vec![0.0; m];
    for i in (1..=m).rev() {
        let off = fp.offset(i - 1);
        let target = (m - i + 1) as f64 * eps / m as f64;
        let a = &fp.partition[i - 1];
        let mut alpha = 1.0;
        loop {
            if dist_to_psd(&y.axpy(alpha, a).block(off, n)) < target {
                break;
            }
            alpha *= 2.0;
            if alpha > cfg.alpha_cap {
                return Err(Error::EpsNotReached { alpha });
            }
        }
        y = y.axpy(alpha, a);
        alphas[i - 1] = alpha;
    }
    let dists = (1..=m).map(|i| dist_to_psd(&y.block(fp.offset(i - 1), n))).collect();
    Ok((y, alphas, dists))
}

/// Builds `c' + Σ α_i A_i` with `dist < eps`, choosing `α_m, …, α_1` in turn
/// by doubling from 1 until the `i`-th stage target `(m-i+1)·eps/m` holds on
/// `π̄_{N_{i-1}}`.
pub fn build_sequence(p: &Sdfp, fp: &FpOutput, eps: f64, cfg: &Config) -> Result<ApproachSequence> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::PreconditionViolated("eps must be positive".into()));
    }
    if fp.m() == 0 {
        return Err(Error::PreconditionViolated("no directions to move along".into()));
    }
    let y0 = choose_cprime(p, fp, cfg)?;
    let cprime = back_transform_primal(&fp.transform, &y0)?;
    // A non-orthogonal transform can stretch distances; tighten until the
    // target holds in the original coordinates.
    let mut inner_eps = eps;
    for _ in 0..40 {
        let (y, alphas, stage_distances) = stages(fp, &y0, inner_eps, cfg)?;
        let point = back_transform_primal(&fp.transform, &y)?;
        let distance = dist_to_psd(&point);
        if distance < eps {
            return Ok(ApproachSequence { eps, cprime, alphas, point, distance, stage_distances });
        }
        inner_eps *= 0.5;
    }
    Err(Error::EpsNotReached { alpha: cfg.alpha_cap })
}

/// `(t, dist(c' + t·d, K))` for each `t`.
pub fn dwi_probe(cprime: &SymMatrix, direction: &SymMatrix, ts: &[f64]) -> Vec<(f64, f64)> {
    ts.iter().map(|&t| (t, dist_to_psd(&cprime.axpy(t, direction)))).collect()
}
