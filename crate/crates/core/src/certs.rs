//! Certificates for each feasibility status and their verification.
//!
//! Verification only uses eigenvalues and least squares; it never calls the
//! optimization oracles, so a certificate can be checked independently of
//! the code that produced it.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::model::{lift, project_problem, slice_upper_corner, BlockKind, FeasibilityStatus, Sdfp};
use crate::procedures::{FpOutput, ReductionStep};
use crate::symlin::{check_transform, congruence_unchecked, eigen, extend_identity, is_psd, SymMatrix};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Certificate {
    /// Positive definite `x ∈ L + c`.
    StrongFeas { x: SymMatrix },
    /// PSD `x ∈ L + c` and nonzero PSD `y ∈ L^⊥` with `⟨y, c⟩ = 0`.
    WeakFeas { x: SymMatrix, y: SymMatrix },
    /// PSD `s ∈ L^⊥` with `⟨s, c⟩ = -1`.
    StrongInfeas { s: SymMatrix },
    /// Forward-Procedure output plus a weak feasibility certificate of its
    /// last subproblem; proves the status is weak.
    WeakStatus { partition: FpOutput, last: Box<Certificate> },
    /// Backward-Procedure chain ending in a strongly infeasible subproblem
    /// or an empty slice.
    WeakInfeas { chain: Vec<ReductionStep> },
}

impl Certificate {
    pub fn kind(&self) -> &'static str {
        match self {
            Certificate::StrongFeas { .. } => "StrongFeas",
            Certificate::WeakFeas { .. } => "WeakFeas",
            Certificate::StrongInfeas { .. } => "StrongInfeas",
            Certificate::WeakStatus { .. } => "WeakStatus",
            Certificate::WeakInfeas { .. } => "WeakInfeas",
        }
    }

    /// Status this certificate proves, if it proves a single one.
    pub fn status(&self) -> Option<FeasibilityStatus> {
        match self {
            Certificate::StrongFeas { .. } => Some(FeasibilityStatus::StronglyFeasible),
            Certificate::WeakFeas { .. } => Some(FeasibilityStatus::WeaklyFeasible),
            Certificate::StrongInfeas { .. } => Some(FeasibilityStatus::StronglyInfeasible),
            Certificate::WeakInfeas { .. } => Some(FeasibilityStatus::WeaklyInfeasible),
            Certificate::WeakStatus { .. } => None,
        }
    }
}

/// On-disk form: the certificate with the status it claims and the
/// tolerances it should be checked with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateEnvelope {
    pub format: String,
    pub version: u32,
    pub status: Option<FeasibilityStatus>,
    pub tolerances: Config,
    pub certificate: Certificate,
}

pub const ENVELOPE_FORMAT: &str = "sdfeas-certificate";

impl CertificateEnvelope {
    pub fn new(certificate: Certificate, tolerances: Config) -> Self {
        CertificateEnvelope {
            format: ENVELOPE_FORMAT.into(),
            version: 1,
            status: certificate.status(),
            tolerances,
            certificate,
        }
    }
}

fn malformed(msg: impl Into<String>) -> Error {
    Error::MalformedCertificate(msg.into())
}

fn expect_dim(m: &SymMatrix, n: usize, what: &str) -> Result<()> {
    if m.dim() != n {
        return Err(malformed(format!("{what} has order {} but the problem has order {n}", m.dim())));
    }
    Ok(())
}

/// Bound on the rounding error of a computed eigenvalue of `x`.
fn rounding(x: &SymMatrix) -> f64 {
    64.0 * f64::EPSILON * x.dim() as f64 * x.frobenius_norm()
}

/// `‖y‖`-relative orthogonality of `y` to `L` and to `c`.
fn dual_orthogonal(p: &Sdfp, y: &SymMatrix, tol: f64) -> bool {
    p.component_in_l(y) <= tol * y.frobenius_norm()
}

/// Checks `cert` against `p`. Wrong dimensions are reported as
/// [`Error::MalformedCertificate`]; an invalid but well-formed certificate
/// gives `Ok(false)`.
pub fn verify(p: &Sdfp, cert: &Certificate, cfg: &Config) -> Result<bool> {
    let n = p.n();
    match cert {
        Certificate::StrongFeas { x } => {
            expect_dim(x, n, "x")?;
            if n == 0 {
                return Ok(true);
            }
            // Some point of L + c lies within the residual of x, so x is only
            // a proof when its minimum eigenvalue beats the residual.
            let margin = eigen(x).min() - p.residual(x) - rounding(x);
            Ok(p.contains(x, cfg.tol_lin) && margin > 0.0 && eigen(x).min() >= cfg.tol_pd)
        }
        Certificate::WeakFeas { x, y } => {
            expect_dim(x, n, "x")?;
            expect_dim(y, n, "y")?;
            let ny = y.frobenius_norm();
            let scale = p.anchor().frobenius_norm().max(1.0);
            let margin = eigen(x).min() - p.residual(x) - rounding(x);
            Ok(n > 0
                && p.contains(x, cfg.tol_lin)
                && margin >= -cfg.tol_psd * scale
                && ny > 0.0
                && is_psd(y, cfg.tol_psd * ny)
                && dual_orthogonal(p, y, cfg.tol_lin)
                && y.inner(p.anchor()).abs() <= cfg.tol_lin * ny * scale)
        }
        Certificate::StrongInfeas { s } => {
            expect_dim(s, n, "s")?;
            let ns = s.frobenius_norm();
            let nc = p.anchor().frobenius_norm();
            // `s` proves a distance of at least 1/‖s‖ from L + c to the cone;
            // below `tol_amb` relative to ‖c‖ that is indistinguishable from zero.
            Ok(n > 0
                && ns * nc.max(1.0) * cfg.tol_amb <= 1.0
                && is_psd(s, cfg.tol_psd * ns.max(1.0))
                && dual_orthogonal(p, s, cfg.tol_lin)
                && (s.inner(p.anchor()) + 1.0).abs() <= cfg.tol_lin * (ns * nc).max(1.0))
        }
        Certificate::WeakStatus { partition, last } => {
            let Some(last_problem) = verify_fp(p, partition, cfg)? else { return Ok(false) };
            match last.as_ref() {
                Certificate::WeakFeas { .. } => verify(&last_problem, last, cfg),
                _ => Err(malformed("WeakStatus needs a WeakFeas certificate for the last subproblem")),
            }
        }
        Certificate::WeakInfeas { chain } => verify_chain(p, chain, cfg),
    }
}

/// Replays the structural claims of a Forward-Procedure output. Returns the
/// recomputed last subproblem when every claim holds.
pub fn verify_fp(p: &Sdfp, fp: &FpOutput, cfg: &Config) -> Result<Option<Sdfp>> {
    let n = p.n();
    if fp.transform.nrows() != n || fp.transform.ncols() != n {
        return Err(malformed("transform has the wrong order"));
    }
    if fp.partition.len() != fp.block_sizes.len() {
        return Err(malformed("partition and block sizes differ in length"));
    }
    let total = fp.total();
    if total > n || fp.block_sizes.contains(&0) {
        return Err(malformed("block sizes are inconsistent with the order"));
    }
    for a in &fp.partition {
        expect_dim(a, n, "partition element")?;
    }
    if check_transform(&fp.transform, n, cfg.tol_det).is_err() {
        return Ok(None);
    }
    let moved = p.congruence(&fp.transform, cfg)?;
    let mut off = 0;
    for (a, &k) in fp.partition.iter().zip(&fp.block_sizes) {
        if !moved.contains_linear(a, cfg.tol_lin) {
            return Ok(None);
        }
        let tail = a.block(off, n);
        let scale = a.frobenius_norm().max(1.0);
        let mut outside = 0.0f64;
        for i in 0..tail.dim() {
            for j in i.max(k)..tail.dim() {
                outside = outside.max(tail.get(i, j).abs());
            }
        }
        if outside > cfg.tol_lin * scale || eigen(&tail.block(0, k)).min() < cfg.tol_pd {
            return Ok(None);
        }
        off += k;
    }
    let last = project_problem(&moved, BlockKind::Lower, total, cfg)?;
    if !last.affinely_equal(&fp.last, cfg.tol_lin.sqrt()) {
        return Ok(None);
    }
    if total < n {
        let Some(b) = &fp.separator else { return Ok(None) };
        expect_dim(b, n - total, "separator")?;
        let nb = b.frobenius_norm();
        if eigen(b).min() < cfg.tol_pd * nb || !dual_orthogonal(&last, b, cfg.tol_lin) {
            return Ok(None);
        }
    }
    Ok(Some(last))
}

fn verify_chain(p: &Sdfp, chain: &[ReductionStep], cfg: &Config) -> Result<bool> {
    if chain.is_empty() {
        return Err(Error::IncompleteChain);
    }
    let mut q = p.clone();
    for (idx, step) in chain.iter().enumerate() {
        let final_step = idx + 1 == chain.len();
        if step.order != q.n() {
            if idx == 0 {
                return Err(malformed(format!("chain starts at order {} but the problem has order {}", step.order, q.n())));
            }
            return Ok(false);
        }
        let Some(last) = verify_fp(&q, &step.fp, cfg)? else { return Ok(false) };
        match step.verdict {
            FeasibilityStatus::StronglyInfeasible => {
                if idx == 0 || !final_step || !matches!(step.last_certificate, Certificate::StrongInfeas { .. }) {
                    return Ok(false);
                }
                return verify(&last, &step.last_certificate, cfg);
            }
            FeasibilityStatus::WeaklyFeasible => {
                if !matches!(step.last_certificate, Certificate::WeakFeas { .. })
                    || !verify(&last, &step.last_certificate, cfg)?
                {
                    return Ok(false);
                }
                let Some(slice) = &step.slice else { return Ok(false) };
                let k = step.fp.total();
                let w = &slice.face_normal;
                expect_dim(w, q.n() - k, "face normal")?;
                if slice.split != k || slice.kept >= w.dim() {
                    return Err(malformed("slice sizes are inconsistent"));
                }
                let nw = w.frobenius_norm();
                if nw == 0.0
                    || !is_psd(w, cfg.tol_psd * nw)
                    || !dual_orthogonal(&last, w, cfg.tol_lin)
                    || w.inner(last.anchor()).abs() > cfg.tol_lin * nw * last.anchor().frobenius_norm().max(1.0)
                {
                    return Ok(false);
                }
                let qm = &slice.normalization;
                if qm.nrows() != w.dim() || qm.ncols() != w.dim() {
                    return Err(malformed("normalization has the wrong order"));
                }
                let Some(qinv) = qm.clone().try_inverse() else { return Ok(false) };
                if check_transform(qm, w.dim(), cfg.tol_det).is_err() {
                    return Ok(false);
                }
                let wn = congruence_unchecked(&qinv.transpose(), w);
                let l = slice.kept;
                let zero = wn.block(0, l);
                let mut cross = 0.0f64;
                for i in 0..l {
                    for j in l..wn.dim() {
                        cross = cross.max(wn.get(i, j).abs());
                    }
                }
                if zero.max_abs().max(cross) > cfg.tol_lin * nw || eigen(&wn.block(l, wn.dim())).min() <= cfg.tol_lin * nw {
                    return Ok(false);
                }
                let t: DMatrix<f64> = &step.fp.transform * extend_identity(k, qm);
                let moved = q.congruence(&t, cfg)?;
                match (slice_upper_corner(&moved, k + l, cfg)?, &slice.reduced) {
                    (None, None) => return Ok(final_step),
                    (Some(r), Some(rec)) if !final_step && r.affinely_equal(rec, cfg.tol_lin.sqrt()) => q = r,
                    _ => return Ok(false),
                }
            }
            FeasibilityStatus::StronglyFeasible | FeasibilityStatus::WeaklyInfeasible => return Ok(false),
        }
    }
    Err(Error::IncompleteChain)
}

/// Turns a PD point of the last subproblem into a PD point of `q`, adding
/// multiples of the partition directions from the innermost outwards.
pub fn lift_strictly_feasible(q: &Sdfp, fp: &FpOutput, x_last: &SymMatrix, cfg: &Config) -> Result<SymMatrix> {
    let moved = q.congruence(&fp.transform, cfg)?;
    let n = q.n();
    let total = fp.total();
    let (mut y, res) = lift(&moved, total, x_last, true)?;
    if res > cfg.tol_lin * x_last.frobenius_norm().max(1.0) {
        return Err(Error::NumericallyAmbiguous(format!("lift residual {res:e}")));
    }
    let mut floor = if total == n { 1.0 } else { eigen(x_last).min() };
    if floor <= 0.0 {
        return Err(Error::PreconditionViolated("point of the last subproblem is not positive definite".into()));
    }
    for i in (1..=fp.m()).rev() {
        let off = fp.offset(i - 1);
        let target = 0.5 * floor;
        let a = &fp.partition[i - 1];
        let mut alpha = 0.0;
        loop {
            let trial = y.axpy(alpha, a);
            let lm = eigen(&trial.block(off, n)).min();
            if lm >= target {
                y = trial;
                floor = lm;
                break;
            }
            alpha = if alpha == 0.0 { 1.0 } else { 2.0 * alpha };
            if alpha > cfg.alpha_cap {
                return Err(Error::EpsNotReached { alpha });
            }
        }
    }
    back_transform_primal(&fp.transform, &y)
}

/// `P⁻ᵀ y P⁻¹`: maps a point of `Pᵀ(L + c)P` back to `L + c`.
pub fn back_transform_primal(p: &DMatrix<f64>, y: &SymMatrix) -> Result<SymMatrix> {
    let inv = p.clone().try_inverse().ok_or(Error::SingularTransform)?;
    Ok(congruence_unchecked(&inv, y))
}

/// `P y Pᵀ`: maps a dual matrix for `Pᵀ(L + c)P` back to one for `L + c`.
pub fn back_transform_dual(p: &DMatrix<f64>, y: &SymMatrix) -> SymMatrix {
    congruence_unchecked(&p.transpose(), y)
}

/// Builds the certificate for `status` from a Backward-Procedure chain.
pub fn extract_certificate(
    p: &Sdfp,
    status: FeasibilityStatus,
    chain: &[ReductionStep],
    cfg: &Config,
) -> Result<Certificate> {
    let first = chain.first().ok_or(Error::IncompleteChain)?;
    match status {
        FeasibilityStatus::StronglyFeasible => {
            let Certificate::StrongFeas { x } = &first.last_certificate else {
                return Err(Error::PreconditionViolated("chain does not end strongly feasible".into()));
            };
            Ok(Certificate::StrongFeas { x: lift_strictly_feasible(p, &first.fp, x, cfg)? })
        }
        FeasibilityStatus::StronglyInfeasible => {
            let Certificate::StrongInfeas { s } = &first.last_certificate else {
                return Err(Error::PreconditionViolated("chain does not end strongly infeasible".into()));
            };
            let padded = s.embed(p.n(), first.fp.total());
            Ok(Certificate::StrongInfeas { s: back_transform_dual(&first.fp.transform, &padded) })
        }
        FeasibilityStatus::WeaklyFeasible => {
            let mut levels = vec![p.clone()];
            for step in &chain[..chain.len() - 1] {
                let reduced = step
                    .slice
                    .as_ref()
                    .and_then(|s| s.reduced.clone())
                    .ok_or_else(|| Error::PreconditionViolated("weakly feasible chain has an empty slice".into()))?;
                levels.push(reduced);
            }
            let end = chain.last().expect("nonempty");
            let Certificate::StrongFeas { x } = &end.last_certificate else {
                return Err(Error::PreconditionViolated("weakly feasible chain must end strongly feasible".into()));
            };
            let mut x = lift_strictly_feasible(levels.last().expect("nonempty"), &end.fp, x, cfg)?;
            for (step, q) in chain[..chain.len() - 1].iter().zip(&levels).rev() {
                let slice = step.slice.as_ref().expect("checked above");
                let t = slice.level_transform(&step.fp);
                x = back_transform_primal(&t, &x.embed(q.n(), 0))?;
            }
            let slice = first.slice.as_ref().ok_or(Error::IncompleteChain)?;
            let w = slice.face_normal.embed(p.n(), slice.split);
            let y = back_transform_dual(&first.fp.transform, &w);
            Ok(Certificate::WeakFeas { x, y })
        }
        FeasibilityStatus::WeaklyInfeasible => Ok(Certificate::WeakInfeas { chain: chain.to_vec() }),
    }
}

/// Weak-status certificate from the first level of a chain whose last
/// subproblem was weakly feasible.
pub fn weak_status_certificate(chain: &[ReductionStep]) -> Option<Certificate> {
    let first = chain.first()?;
    matches!(first.last_certificate, Certificate::WeakFeas { .. }).then(|| Certificate::WeakStatus {
        partition: first.fp.clone(),
        last: Box::new(first.last_certificate.clone()),
    })
}
