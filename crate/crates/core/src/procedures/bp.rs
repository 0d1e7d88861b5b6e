//! Backward Procedure: classify the last Forward-Procedure subproblem and,
//! while its status is weak, cut the problem down to a smaller face and
//! repeat.

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::fp::{forward_procedure, FpOutput};
use crate::certs::{extract_certificate, verify, Certificate};
use crate::config::Config;
use crate::model::{project_problem, slice_upper_corner, BlockKind, FeasibilityStatus, Sdfp};
use crate::oracle::{gordan, max_min_eigen_affine, GordanOutcome};
use crate::subspace::{complement, orthonormalize, svecs, try_extend};
use crate::symlin::{dense_serde, extend_identity, face_congruence, packed_len, SymMatrix};
use crate::{Error, Result};

/// Face reduction applied after a weakly feasible last subproblem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceStep {
    /// PSD `w` orthogonal to the last subproblem's subspace and anchor.
    pub face_normal: SymMatrix,
    /// Orthogonal `Q` with `QᵀwQ = diag(0_l, ŵ)`, `ŵ ≻ 0`.
    #[serde(with = "dense_serde")]
    pub normalization: DMatrix<f64>,
    /// `k = N_m` of this level.
    pub split: usize,
    /// Order `l` of the zero block of `QᵀwQ`.
    pub kept: usize,
    /// `π_{k+l}` of the slice, or `None` when the slice is empty.
    pub reduced: Option<Sdfp>,
}

impl SliceStep {
    /// `P · diag(I_k, Q)`, the transform whose leading `k + l` block carries the reduced problem.
    pub fn level_transform(&self, fp: &FpOutput) -> DMatrix<f64> {
        &fp.transform * extend_identity(self.split, &self.normalization)
    }
}

/// One level of the Backward Procedure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionStep {
    pub order: usize,
    pub fp: FpOutput,
    /// Status of `fp.last`: strongly feasible, weakly feasible or strongly infeasible.
    pub verdict: FeasibilityStatus,
    pub last_certificate: Certificate,
    pub slice: Option<SliceStep>,
}

/// Status, the reduction chain that led to it, and a certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationResult {
    pub status: FeasibilityStatus,
    pub chain: Vec<ReductionStep>,
    pub certificate: Certificate,
}

impl ClassificationResult {
    /// Direction count of the first Forward-Procedure run.
    pub fn fp_steps(&self) -> usize {
        self.chain.first().map(|s| s.fp.m()).unwrap_or(0)
    }
}

/// Failure of the Backward Procedure together with the levels already built.
#[derive(Debug, Clone, PartialEq)]
pub struct BpError {
    pub source: Error,
    pub chain: Vec<ReductionStep>,
}

impl fmt::Display for BpError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (after {} reduction level(s))", self.source, self.chain.len())
    }
}

impl std::error::Error for BpError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.source)
    }
}

impl From<Error> for BpError {
    fn from(source: Error) -> Self {
        BpError { source, chain: Vec::new() }
    }
}

/// PSD element of maximal rank in `(L + span{c})^⊥`, normalized to unit trace.
///
/// The anchor joins the span only when its component outside `L` exceeds
/// `√tol_rank · ‖c‖`; below that it is rounding left over from the
/// Forward Procedure.
pub fn face_normal(last: &Sdfp, cfg: &Config) -> Result<SymMatrix> {
    let n = last.n();
    let mut orth = orthonormalize(&svecs(last.basis()), 1e-10);
    try_extend(&mut orth, &last.anchor().svec(), cfg.tol_rank.sqrt());
    let comp: Vec<SymMatrix> = complement(&orth, packed_len(n)).iter().map(|v| SymMatrix::smat(n, v)).collect();
    match gordan(&comp, last.n(), cfg)? {
        GordanOutcome::Direction(w) => Ok(w),
        // The caller saw a weak optimum within tolerance, so a separator here
        // means the two decisions disagree at the current tolerances.
        GordanOutcome::Separator(_) => Err(Error::NumericallyAmbiguous(
            "no PSD matrix is orthogonal to the subspace and anchor".into(),
        )),
        GordanOutcome::NumericallyAmbiguous { .. } => {
            Err(Error::NumericallyAmbiguous("face normal search undecided".into()))
        }
    }
}

/// Status and certificate of a subproblem whose subspace meets the PSD cone
/// only at zero. Weak status here always means weakly feasible.
pub fn classify_last(last: &Sdfp, cfg: &Config) -> Result<(FeasibilityStatus, Certificate)> {
    if last.n() == 0 {
        return Ok((FeasibilityStatus::StronglyFeasible, Certificate::StrongFeas { x: SymMatrix::zeros(0) }));
    }
    let r = match max_min_eigen_affine(last, cfg) {
        Err(Error::NotBounded) => {
            return Err(Error::PreconditionViolated("subspace of the last subproblem meets the PSD cone".into()))
        }
        other => other?,
    };
    if r.value > cfg.tol_amb {
        return Ok((FeasibilityStatus::StronglyFeasible, Certificate::StrongFeas { x: r.witness }));
    }
    if r.upper < -cfg.tol_amb {
        let z = r.dual.expect("finite upper bound comes with a dual matrix");
        let s = z.scale(-1.0 / z.inner(last.anchor()));
        return Ok((FeasibilityStatus::StronglyInfeasible, Certificate::StrongInfeas { s }));
    }
    if r.value >= -cfg.tol_amb && r.upper <= cfg.tol_amb {
        let y = face_normal(last, cfg)?;
        return Ok((FeasibilityStatus::WeaklyFeasible, Certificate::WeakFeas { x: r.witness, y }));
    }
    Err(Error::NumericallyAmbiguous(format!(
        "optimal minimum eigenvalue of the last subproblem lies in [{:e}, {:e}]",
        r.value, r.upper
    )))
}

/// If `π_k(L)` contains a positive definite matrix, `p` has the same status
/// as `π̄_k(p)` (statuses compared up to the weak class). Returns `π̄_k(p)`.
pub fn decompose(p: &Sdfp, k: usize, cfg: &Config) -> Result<Sdfp> {
    let upper = project_problem(p, BlockKind::Upper, k, cfg)?;
    if k > 0 {
        let full_rank = match gordan(upper.basis(), k, cfg)? {
            GordanOutcome::Direction(a) => crate::symlin::eigen(&a).min() > cfg.tol_rank,
            _ => false,
        };
        if !full_rank {
            return Err(Error::PreconditionViolated("leading block of L has no positive definite element".into()));
        }
    }
    project_problem(p, BlockKind::Lower, k, cfg)
}

/// Face reduction for a problem `p` whose lower-right block `π̄_k(p)` is
/// weakly feasible with `w ∈ K ∩ π̄_k(L)^⊥ ∩ π̄_k(c)^⊥`, `w ≠ 0`.
///
/// Returns `Q`, `l`, and `π_{k+l}` of the slice of `diag(I_k, Q)ᵀ p diag(I_k, Q)`
/// (`None` when the slice is empty, in which case `p` is weakly infeasible).
pub fn face_reduce(p: &Sdfp, k: usize, w: &SymMatrix, cfg: &Config) -> Result<(DMatrix<f64>, usize, Option<Sdfp>)> {
    let n = p.n();
    if k > n {
        return Err(Error::IndexOutOfRange { k, n });
    }
    if w.dim() != n - k {
        return Err(Error::DimensionMismatch { expected: n - k, found: w.dim() });
    }
    let (q, l) = face_congruence(w, cfg.tol_rank).map_err(|e| match e {
        Error::NotPsd { min_eig } => {
            Error::NumericallyAmbiguous(format!("face normal has eigenvalue {min_eig:e} below the rank cutoff"))
        }
        e => e,
    })?;
    if l == n - k {
        return Err(Error::PreconditionViolated("face normal is zero".into()));
    }
    let moved = p.congruence(&extend_identity(k, &q), cfg)?;
    let reduced = slice_upper_corner(&moved, k + l, cfg)?;
    Ok((q, l, reduced))
}

fn level(q: &Sdfp, cfg: &Config) -> Result<ReductionStep> {
    let fp = forward_procedure(q, cfg)?;
    let (verdict, last_certificate) = classify_last(&fp.last, cfg)?;
    let slice = if verdict == FeasibilityStatus::WeaklyFeasible {
        let w = match &last_certificate {
            Certificate::WeakFeas { y, .. } => y.clone(),
            _ => unreachable!("weakly feasible verdict carries a weak certificate"),
        };
        let k = fp.total();
        let moved = q.congruence(&fp.transform, cfg)?;
        let (normalization, kept, reduced) = face_reduce(&moved, k, &w, cfg)?;
        Some(SliceStep { face_normal: w, normalization, split: k, kept, reduced })
    } else {
        None
    };
    Ok(ReductionStep { order: q.n(), fp, verdict, last_certificate, slice })
}

/// Runs the Backward Procedure and assembles a certificate for the status.
pub fn backward_procedure(p: &Sdfp, cfg: &Config) -> std::result::Result<ClassificationResult, BpError> {
    cfg.validate()?;
    let mut chain: Vec<ReductionStep> = Vec::new();
    let mut current = p.clone();
    let status = loop {
        if chain.len() > p.n() {
            return Err(BpError { source: Error::NumericallyAmbiguous("reduction did not terminate".into()), chain });
        }
        let step = match level(&current, cfg) {
            Ok(s) => s,
            Err(source) => return Err(BpError { source, chain }),
        };
        let first = chain.is_empty();
        let verdict = step.verdict;
        let next = step.slice.as_ref().map(|s| s.reduced.clone());
        chain.push(step);
        match (verdict, next) {
            (FeasibilityStatus::StronglyFeasible, _) if first => break FeasibilityStatus::StronglyFeasible,
            (FeasibilityStatus::StronglyFeasible, _) => break FeasibilityStatus::WeaklyFeasible,
            (FeasibilityStatus::StronglyInfeasible, _) if first => break FeasibilityStatus::StronglyInfeasible,
            (FeasibilityStatus::StronglyInfeasible, _) => break FeasibilityStatus::WeaklyInfeasible,
            (_, Some(None)) => break FeasibilityStatus::WeaklyInfeasible,
            (_, Some(Some(reduced))) => current = reduced,
            (_, None) => unreachable!("weak verdicts always carry a slice"),
        }
    };
    // A status is only reported together with a certificate that verifies;
    // anything else means the numerics could not settle the question.
    let certificate = match extract_certificate(p, status, &chain, cfg) {
        Ok(c) => c,
        Err(e) => {
            let source = Error::NumericallyAmbiguous(format!("{status} certificate could not be built: {e}"));
            return Err(BpError { source, chain });
        }
    };
    match verify(p, &certificate, cfg) {
        Ok(true) => Ok(ClassificationResult { status, chain, certificate }),
        Ok(false) | Err(_) => {
            let source = Error::NumericallyAmbiguous(format!("{status} certificate failed verification"));
            Err(BpError { source, chain })
        }
    }
}

/// Same as [`backward_procedure`].
pub fn classify(p: &Sdfp, cfg: &Config) -> std::result::Result<ClassificationResult, BpError> {
    backward_procedure(p, cfg)
}
