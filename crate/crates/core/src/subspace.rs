//! Subspace arithmetic on coordinate vectors (Gram–Schmidt, complements,
//! least squares).

use nalgebra::{DMatrix, DVector, Dyn, SVD};

use crate::symlin::SymMatrix;

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn remove_components(v: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        for q in basis {
            let c = dot(v, q);
            if c != 0.0 {
                for (x, y) in v.iter_mut().zip(q) {
                    *x -= c * y;
                }
            }
        }
    }
}

/// Extends the orthonormal set `basis` by `v` if its residual exceeds
/// `rel_tol · ‖v‖`. Returns whether `v` was added.
pub(crate) fn try_extend(basis: &mut Vec<Vec<f64>>, v: &[f64], rel_tol: f64) -> bool {
    let nv = norm(v);
    if nv == 0.0 {
        return false;
    }
    let mut r = v.to_vec();
    remove_components(&mut r, basis);
    let nr = norm(&r);
    if nr <= rel_tol * nv {
        return false;
    }
    for x in r.iter_mut() {
        *x /= nr;
    }
    basis.push(r);
    true
}

/// Orthonormal basis of the span of `vs`.
pub(crate) fn orthonormalize(vs: &[Vec<f64>], rel_tol: f64) -> Vec<Vec<f64>> {
    let mut basis = Vec::new();
    for v in vs {
        try_extend(&mut basis, v, rel_tol);
    }
    basis
}

/// Indices of a maximal independent subset of `vs`, chosen greedily in order.
pub(crate) fn independent_subset(vs: &[Vec<f64>], rel_tol: f64) -> Vec<usize> {
    let mut basis = Vec::new();
    (0..vs.len()).filter(|&i| try_extend(&mut basis, &vs[i], rel_tol)).collect()
}

/// Orthonormal basis of the orthogonal complement of span(`orth`) in `R^dim`,
/// built from coordinate vectors so that sparse inputs give sparse outputs.
pub(crate) fn complement(orth: &[Vec<f64>], dim: usize) -> Vec<Vec<f64>> {
    let mut all = orth.to_vec();
    let start = all.len();
    // Visit coordinates with the smallest projection first; they are the most
    // independent of the given span.
    let mut order: Vec<(f64, usize)> = (0..dim).map(|j| (orth.iter().map(|q| q[j] * q[j]).sum(), j)).collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    for (_, j) in order {
        if all.len() == dim {
            break;
        }
        let mut e = vec![0.0; dim];
        e[j] = 1.0;
        try_extend(&mut all, &e, 1e-6);
    }
    all.split_off(start)
}

/// Orthogonal projection of `v` onto span(`orth`).
pub(crate) fn project(v: &[f64], orth: &[Vec<f64>]) -> Vec<f64> {
    let mut p = vec![0.0; v.len()];
    for q in orth {
        let c = dot(v, q);
        for (x, y) in p.iter_mut().zip(q) {
            *x += c * y;
        }
    }
    p
}

/// Singular value decomposition with both factors, checked by reconstruction.
///
/// nalgebra's bidiagonal iteration at its default threshold (`f64::EPSILON`)
/// occasionally stops with factors that do not reproduce the input, even
/// though it reports convergence. A slightly looser threshold avoids this;
/// the result is still checked and the most accurate attempt is kept.
pub(crate) fn svd(a: &DMatrix<f64>) -> SVD<f64, Dyn, Dyn> {
    let tol = 1e-12 * a.norm().max(f64::MIN_POSITIVE) * (a.nrows().max(a.ncols()).max(1) as f64);
    let mut best: Option<(f64, SVD<f64, Dyn, Dyn>)> = None;
    for eps in [1e-13, 1e-11, 1e-9, f64::EPSILON] {
        let Some(s) = a.clone().try_svd(true, true, eps, 10_000) else { continue };
        let (Some(u), Some(vt)) = (s.u.as_ref(), s.v_t.as_ref()) else { continue };
        let err = (u * DMatrix::from_diagonal(&s.singular_values) * vt - a).norm();
        if err <= tol {
            return s;
        }
        if best.as_ref().is_none_or(|(e, _)| err < *e) {
            best = Some((err, s));
        }
    }
    best.map(|(_, s)| s).unwrap_or_else(|| a.clone().svd(true, true))
}

/// Minimum-norm least-squares solution of `a x = b`, with its residual norm.
pub(crate) fn lstsq(a: &DMatrix<f64>, b: &[f64]) -> (Vec<f64>, f64) {
    let cols = a.ncols();
    if cols == 0 || a.nrows() == 0 {
        return (vec![0.0; cols], norm(b));
    }
    let bv = DVector::from_column_slice(b);
    let svd = svd(a);
    let smax = svd.singular_values.max();
    let eps = smax * 1e-12 * (a.nrows().max(cols) as f64);
    let x = svd.solve(&bv, eps.max(f64::MIN_POSITIVE)).expect("svd with both factors");
    let r = a * &x - bv;
    (x.iter().copied().collect(), r.norm())
}

/// Least squares with a single rank decision: singular values at most
/// `rel_tol · σ_max` count as zero, both for the solution and for the
/// returned orthonormal null space basis. Returns `(x, residual, null)`.
pub(crate) fn truncated_solve(a: &DMatrix<f64>, b: &[f64], rel_tol: f64) -> (Vec<f64>, f64, Vec<Vec<f64>>) {
    let cols = a.ncols();
    if cols == 0 || a.nrows() == 0 {
        return (vec![0.0; cols], norm(b), complement(&[], cols));
    }
    let bv = DVector::from_column_slice(b);
    let svd = svd(a);
    let cut = svd.singular_values.max() * rel_tol;
    let u = svd.u.as_ref().expect("computed");
    let vt = svd.v_t.as_ref().expect("computed");
    let mut x = DVector::zeros(cols);
    let mut row_space = Vec::new();
    for (i, &sigma) in svd.singular_values.iter().enumerate() {
        if sigma > cut && sigma > 0.0 {
            let coef = u.column(i).dot(&bv) / sigma;
            x += vt.row(i).transpose() * coef;
            row_space.push(vt.row(i).iter().copied().collect::<Vec<f64>>());
        }
    }
    let r = a * &x - bv;
    (x.iter().copied().collect(), r.norm(), complement(&row_space, cols))
}

/// Null space of `a` as an orthonormal basis.
pub(crate) fn null_space(a: &DMatrix<f64>, rel_tol: f64) -> Vec<Vec<f64>> {
    let rows: Vec<Vec<f64>> = (0..a.nrows()).map(|i| a.row(i).iter().copied().collect()).collect();
    let row_space = orthonormalize(&rows, rel_tol);
    complement(&row_space, a.ncols())
}

pub(crate) fn svecs(ms: &[SymMatrix]) -> Vec<Vec<f64>> {
    ms.iter().map(|m| m.svec()).collect()
}

pub(crate) fn combine(n: usize, coeffs: &[f64], vs: &[Vec<f64>]) -> SymMatrix {
    let mut acc = vec![0.0; crate::symlin::packed_len(n)];
    for (c, v) in coeffs.iter().zip(vs) {
        if *c != 0.0 {
            for (x, y) in acc.iter_mut().zip(v) {
                *x += c * y;
            }
        }
    }
    SymMatrix::smat(n, &acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complement_of_coordinate_axis_is_exact() {
        let c = complement(&[vec![1.0, 0.0, 0.0]], 3);
        assert_eq!(c, vec![vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]);
    }

    #[test]
    fn least_squares_min_norm() {
        let a = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let (x, r) = lstsq(&a, &[2.0]);
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 1.0).abs() < 1e-14);
        assert!(r < 1e-14);
    }
}
