use nalgebra::DMatrix;

use super::{eigen::eigen, EigenDecomposition, SymMatrix};
use crate::{Error, Result};

/// `C - Bᵀ A⁻¹ B` for `M = [[A, B], [Bᵀ, C]]` with `A = π_k(M)`.
///
/// `A` must be positive definite: its smallest eigenvalue has to exceed `tol_pd`.
pub fn schur_complement(m: &SymMatrix, k: usize, tol_pd: f64) -> Result<SymMatrix> {
    let n = m.dim();
    if k > n {
        return Err(Error::IndexOutOfRange { k, n });
    }
    let a = m.block(0, k);
    if k > 0 && eigen(&a).min() <= tol_pd {
        return Err(Error::SingularBlock);
    }
    let chol = a.to_dense().cholesky().ok_or(Error::SingularBlock)?;
    let b = DMatrix::from_fn(k, n - k, |i, j| m.get(i, k + j));
    let x = chol.solve(&b);
    let btx = b.transpose() * x;
    Ok(SymMatrix::from_fn(n - k, |i, j| m.get(k + i, k + j) - 0.5 * (btx[(i, j)] + btx[(j, i)])))
}

/// Checks that `p` is square of order `n` and numerically nonsingular.
pub fn check_transform(p: &DMatrix<f64>, n: usize, tol_det: f64) -> Result<()> {
    if p.nrows() != n || p.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, found: p.nrows().max(p.ncols()) });
    }
    if n == 0 {
        return Ok(());
    }
    if p.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let sv = crate::subspace::svd(p).singular_values;
    let smax = sv.max();
    let smin = sv.min();
    if !(smin > tol_det * smax) {
        return Err(Error::SingularTransform);
    }
    Ok(())
}

/// `PᵀSP` for nonsingular `p`.
pub fn congruence(p: &DMatrix<f64>, s: &SymMatrix, tol_det: f64) -> Result<SymMatrix> {
    check_transform(p, s.dim(), tol_det)?;
    Ok(congruence_unchecked(p, s))
}

pub(crate) fn congruence_unchecked(p: &DMatrix<f64>, s: &SymMatrix) -> SymMatrix {
    let sp = s.to_dense() * p;
    let r = p.transpose() * sp;
    SymMatrix::from_dense(&r)
}

/// Orthogonal `P` with `PᵀAP = diag(Â, 0)` and `Â` positive definite of order `k`.
///
/// `A` must be PSD within `tol` (relative to its norm). The rank `k` counts
/// eigenvalues above `tol · max(1, ‖A‖₂)`. Inside each group eigenvectors
/// are ordered by their dominant coordinate, so coordinate-aligned inputs
/// that already have this shape get `P = I`.
pub fn rank_revealing_congruence(a: &SymMatrix, tol: f64) -> Result<(DMatrix<f64>, usize)> {
    let (e, large, small) = split_spectrum(a, tol)?;
    let cols: Vec<usize> = large.iter().chain(&small).copied().collect();
    Ok((reorder(&e.vectors, &cols), large.len()))
}

/// Orthogonal `Q` with `QᵀWQ = diag(0, Ŵ)` and `Ŵ` positive definite.
/// Returns `Q` and the order of the zero block.
pub fn face_congruence(w: &SymMatrix, tol: f64) -> Result<(DMatrix<f64>, usize)> {
    let (e, large, small) = split_spectrum(w, tol)?;
    let cols: Vec<usize> = small.iter().chain(&large).copied().collect();
    Ok((reorder(&e.vectors, &cols), small.len()))
}

fn split_spectrum(a: &SymMatrix, tol: f64) -> Result<(EigenDecomposition, Vec<usize>, Vec<usize>)> {
    let e = eigen(a);
    let scale = e.norm2().max(1.0);
    if e.min() < -tol * scale {
        return Err(Error::NotPsd { min_eig: e.min() });
    }
    let cut = tol * scale;
    let dominant = |c: usize| {
        let col = e.vectors.column(c);
        let mut best = 0;
        for i in 0..col.len() {
            if col[i].abs() > col[best].abs() + 1e-12 {
                best = i;
            }
        }
        best
    };
    let mut large: Vec<usize> = (0..e.values.len()).filter(|&i| e.values[i] > cut).collect();
    let mut small: Vec<usize> = (0..e.values.len()).filter(|&i| e.values[i] <= cut).collect();
    large.sort_by_key(|&c| dominant(c));
    small.sort_by_key(|&c| dominant(c));
    Ok((e, large, small))
}

fn reorder(v: &DMatrix<f64>, cols: &[usize]) -> DMatrix<f64> {
    let n = v.nrows();
    let mut out = DMatrix::from_fn(n, cols.len(), |i, c| v[(i, cols[c])]);
    // Fix the sign so each column's dominant entry is positive.
    for c in 0..cols.len() {
        let mut best = 0;
        for i in 0..n {
            if out[(i, c)].abs() > out[(best, c)].abs() + 1e-12 {
                best = i;
            }
        }
        if out[(best, c)] < 0.0 {
            for i in 0..n {
                out[(i, c)] = -out[(i, c)];
            }
        }
    }
    out
}

/// Block diagonal `diag(I_k, q)`.
pub fn extend_identity(k: usize, q: &DMatrix<f64>) -> DMatrix<f64> {
    let n = k + q.nrows();
    let mut m = DMatrix::identity(n, n);
    m.view_mut((k, k), (q.nrows(), q.ncols())).copy_from(q);
    m
}

/// True iff the smallest eigenvalue of `s` exceeds `tol`.
pub fn is_pd(s: &SymMatrix, tol: f64) -> bool {
    s.dim() == 0 || eigen(s).min() > tol
}
