//! Cyclic Jacobi eigensolver.
//!
//! Rotations are accumulated into the diagonal the way Rutishauser's
//! formulation does it, and an off-diagonal entry is only dropped once it is
//! negligible next to both diagonal entries it couples. This keeps small
//! eigenvalues of graded matrices accurate to relative precision, which the
//! approach-sequence distances rely on.

use nalgebra::DMatrix;

use super::SymMatrix;

const DEFAULT_SWEEPS: usize = 100;

/// Eigenvalues in ascending order and the matching orthonormal eigenvectors
/// (as columns).
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
    pub converged: bool,
}

impl EigenDecomposition {
    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(f64::INFINITY)
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(f64::NEG_INFINITY)
    }

    /// Spectral norm.
    pub fn norm2(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `Σ f(λ_i) v_i v_iᵀ`.
    pub fn rebuild(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        let n = self.values.len();
        let w: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        SymMatrix::from_fn(n, |i, j| {
            (0..n).map(|k| w[k] * self.vectors[(i, k)] * self.vectors[(j, k)]).sum()
        })
    }
}

pub fn eigen(a: &SymMatrix) -> EigenDecomposition {
    eigen_with(a, DEFAULT_SWEEPS)
}

pub fn eigen_with(a: &SymMatrix, max_sweeps: usize) -> EigenDecomposition {
    let n = a.dim();
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            m[i * n + j] = a.get(i, j);
        }
    }
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let mut d: Vec<f64> = (0..n).map(|i| m[i * n + i]).collect();
    let mut b = d.clone();
    let mut z = vec![0.0; n];
    let mut converged = n <= 1;

    for sweep in 0..max_sweeps {
        let mut sm = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                sm += m[p * n + q].abs();
            }
        }
        if sm == 0.0 {
            converged = true;
            break;
        }
        let tresh = if sweep < 3 { 0.2 * sm / (n * n) as f64 } else { 0.0 };
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                let g = 100.0 * apq.abs();
                if sweep > 3 && d[p].abs() + g == d[p].abs() && d[q].abs() + g == d[q].abs() {
                    m[p * n + q] = 0.0;
                } else if apq.abs() > tresh {
                    let h = d[q] - d[p];
                    let t = if h.abs() + g == h.abs() {
                        apq / h
                    } else {
                        let theta = 0.5 * h / apq;
                        let t = 1.0 / (theta.abs() + (1.0 + theta * theta).sqrt());
                        if theta < 0.0 {
                            -t
                        } else {
                            t
                        }
                    };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = t * c;
                    let tau = s / (1.0 + c);
                    let h = t * apq;
                    z[p] -= h;
                    z[q] += h;
                    d[p] -= h;
                    d[q] += h;
                    m[p * n + q] = 0.0;
                    let rot = |m: &mut [f64], x: usize, y: usize| {
                        let g = m[x];
                        let h = m[y];
                        m[x] = g - s * (h + g * tau);
                        m[y] = h + s * (g - h * tau);
                    };
                    for j in 0..p {
                        rot(&mut m, j * n + p, j * n + q);
                    }
                    for j in p + 1..q {
                        rot(&mut m, p * n + j, j * n + q);
                    }
                    for j in q + 1..n {
                        rot(&mut m, p * n + j, q * n + j);
                    }
                    for j in 0..n {
                        rot(&mut v, j * n + p, j * n + q);
                    }
                }
            }
        }
        for p in 0..n {
            b[p] += z[p];
            d[p] = b[p];
            z[p] = 0.0;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| d[x].total_cmp(&d[y]));
    let values = order.iter().map(|&k| d[k]).collect();
    let vectors = DMatrix::from_fn(n, n, |i, c| v[i * n + order[c]]);
    EigenDecomposition { values, vectors, converged }
}

/// Smallest eigenvalue; `+∞` for the empty matrix.
pub fn min_eigenvalue(a: &SymMatrix) -> f64 {
    eigen(a).min()
}

/// Nearest positive semidefinite matrix in the Frobenius norm.
pub fn project_psd(a: &SymMatrix) -> SymMatrix {
    eigen(a).rebuild(|l| l.max(0.0))
}

/// Frobenius distance from `a` to the positive semidefinite cone.
pub fn dist_to_psd(a: &SymMatrix) -> f64 {
    eigen(a).values.iter().filter(|&&l| l < 0.0).map(|l| l * l).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_min_eigenvalue() {
        let a = SymMatrix::from_rows(&[&[100.0, 1.0], &[1.0, 0.0]]).unwrap();
        let expected = (100.0 - 10004f64.sqrt()) / 2.0;
        assert!((min_eigenvalue(&a) - expected).abs() < 1e-12);
    }

    #[test]
    fn graded_matrix_small_eigenvalue_has_relative_accuracy() {
        for &t in &[1e3, 1e6, 1e9, 1e12] {
            let a = SymMatrix::from_rows(&[&[t, 1.0], &[1.0, 0.0]]).unwrap();
            let exact = -2.0 / (t + (t * t + 4.0).sqrt());
            let got = min_eigenvalue(&a);
            assert!(((got - exact) / exact).abs() < 1e-12, "t={t}: {got} vs {exact}");
        }
    }

    #[test]
    fn reconstructs_input() {
        let a = SymMatrix::new(3, vec![2.0, -1.0, 0.5, 3.0, 0.25, -4.0]).unwrap();
        let e = eigen(&a);
        assert!(e.converged);
        assert!(e.rebuild(|l| l).sub(&a).frobenius_norm() < 1e-13);
        let vtv = e.vectors.transpose() * &e.vectors;
        assert!((vtv - DMatrix::identity(3, 3)).norm() < 1e-13);
    }

    #[test]
    fn empty_matrix() {
        assert_eq!(min_eigenvalue(&SymMatrix::zeros(0)), f64::INFINITY);
        assert_eq!(dist_to_psd(&SymMatrix::zeros(0)), 0.0);
    }

    #[test]
    fn distance_of_diag() {
        let a = SymMatrix::diag(&[1.0, -3.0, -4.0]);
        assert!((dist_to_psd(&a) - 5.0).abs() < 1e-14);
        assert_eq!(project_psd(&a), SymMatrix::diag(&[1.0, 0.0, 0.0]));
    }
}
