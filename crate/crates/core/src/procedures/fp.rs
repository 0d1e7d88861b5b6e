//! Forward Procedure: peel off PSD directions of `L` until the remaining
//! lower-right subproblem has no nonzero PSD element in its subspace.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::model::{lift, project_problem, BlockKind, Sdfp};
use crate::oracle::{gordan, GordanOutcome};
use crate::symlin::{congruence_unchecked, dense_serde, extend_identity, rank_revealing_congruence, SymMatrix};
use crate::{Error, Result};

/// Result of the Forward Procedure on `(K_n, L, c)`.
///
/// With `N_i = k_1 + … + k_i`, each `A_i ∈ PᵀLP` has
/// `π̄_{N_{i-1}}(A_i) = diag(Â_i, 0)` with `Â_i` positive definite of order
/// `k_i`. `last` is `π̄_{N_m}(Pᵀ(L + c)P)`, and `separator` (present unless
/// `N_m = n`) is a positive definite element of the orthogonal complement of
/// its subspace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FpOutput {
    #[serde(with = "dense_serde")]
    pub transform: DMatrix<f64>,
    pub block_sizes: Vec<usize>,
    pub partition: Vec<SymMatrix>,
    pub last: Sdfp,
    pub separator: Option<SymMatrix>,
}

impl FpOutput {
    /// Number of directions `m`.
    pub fn m(&self) -> usize {
        self.block_sizes.len()
    }

    /// `N_i = k_1 + … + k_i`.
    pub fn offset(&self, i: usize) -> usize {
        self.block_sizes[..i].iter().sum()
    }

    /// `N_m`.
    pub fn total(&self) -> usize {
        self.block_sizes.iter().sum()
    }
}

pub fn forward_procedure(p: &Sdfp, cfg: &Config) -> Result<FpOutput> {
    let n = p.n();
    let mut transform = DMatrix::identity(n, n);
    let mut block_sizes: Vec<usize> = Vec::new();
    let mut partition: Vec<SymMatrix> = Vec::new();
    let mut separator = None;
    let mut moved = p.clone();

    loop {
        let done: usize = block_sizes.iter().sum();
        if done == n {
            break;
        }
        let cur = project_problem(&moved, BlockKind::Lower, done, cfg)?;
        let a = match gordan(cur.basis(), cur.n(), cfg)? {
            GordanOutcome::Separator(b) => {
                separator = Some(b);
                break;
            }
            GordanOutcome::Direction(a) => a,
            GordanOutcome::NumericallyAmbiguous { lower, upper } => {
                return Err(Error::NumericallyAmbiguous(format!(
                    "Gordan oracle undecided at step {} (bounds [{lower:e}, {upper:e}])",
                    block_sizes.len() + 1
                )))
            }
        };
        // The oracle accepts eigenvalues down to -tol_amb; the split needs them
        // above -tol_rank, and a direction in between is not decisive.
        let (pt, k) = rank_revealing_congruence(&a, cfg.tol_rank).map_err(|e| match e {
            Error::NotPsd { min_eig } => {
                Error::NumericallyAmbiguous(format!("direction has eigenvalue {min_eig:e} below the rank cutoff"))
            }
            e => e,
        })?;
        if k == 0 {
            return Err(Error::NumericallyAmbiguous("oracle returned a zero direction".into()));
        }
        let step = extend_identity(done, &pt);
        transform = &transform * &step;
        for a_j in partition.iter_mut() {
            *a_j = congruence_unchecked(&step, a_j);
        }
        moved = p.congruence(&transform, cfg)?;

        let rotated = congruence_unchecked(&pt, &a);
        let target = rotated.block(0, k).embed(n - done, 0);
        let (a_i, res) = lift(&moved, done, &target, false)?;
        if res > cfg.tol_lin * target.frobenius_norm().max(1.0) {
            return Err(Error::NumericallyAmbiguous(format!("direction lift residual {res:e}")));
        }
        partition.push(a_i);
        block_sizes.push(k);
    }

    let total: usize = block_sizes.iter().sum();
    let last = project_problem(&moved, BlockKind::Lower, total, cfg)?;
    Ok(FpOutput { transform, block_sizes, partition, last, separator })
}
