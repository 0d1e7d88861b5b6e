//! Symmetric indefinite factorization `PᵀAP = LDLᵀ` with Bunch–Kaufman pivoting.

use super::{eigen::min_eigenvalue, SymMatrix};

/// Growth-bounding constant `(1 + √17)/8`.
const BK_ALPHA: f64 = 0.640_388_203_202_208;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Pivot {
    One { k: usize, d: f64 },
    Two { k: usize, a: f64, b: f64, c: f64 },
}

/// Result of the factorization. `l` is unit lower triangular and dense,
/// `perm[i]` is the original index placed at position `i`.
#[derive(Debug, Clone)]
pub struct Ldlt {
    pub n: usize,
    pub l: Vec<f64>,
    pub pivots: Vec<Pivot>,
    pub perm: Vec<usize>,
}

pub fn bunch_kaufman(s: &SymMatrix) -> Ldlt {
    let n = s.dim();
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            a[i * n + j] = s.get(i, j);
        }
    }
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        l[i * n + i] = 1.0;
    }
    let mut perm: Vec<usize> = (0..n).collect();
    let mut pivots = Vec::new();

    let swap = |a: &mut [f64], l: &mut [f64], perm: &mut [usize], k: usize, p: usize, x: usize| {
        // Symmetric interchange of indices p and x in the trailing matrix, row swap in L's finished columns.
        if p == x {
            return;
        }
        for j in 0..n {
            a.swap(p * n + j, x * n + j);
        }
        for i in 0..n {
            a.swap(i * n + p, i * n + x);
        }
        for j in 0..k {
            l.swap(p * n + j, x * n + j);
        }
        perm.swap(p, x);
    };

    let mut k = 0;
    while k < n {
        let akk = a[k * n + k].abs();
        let (mut lambda, mut r) = (0.0, k);
        for i in k + 1..n {
            if a[i * n + k].abs() > lambda {
                lambda = a[i * n + k].abs();
                r = i;
            }
        }
        if akk.max(lambda) == 0.0 {
            pivots.push(Pivot::One { k, d: 0.0 });
            k += 1;
            continue;
        }
        let mut size = 1;
        if akk < BK_ALPHA * lambda {
            let mut sigma: f64 = 0.0;
            for j in k..n {
                if j != r {
                    sigma = sigma.max(a[r * n + j].abs());
                }
            }
            if akk * sigma >= BK_ALPHA * lambda * lambda {
            } else if a[r * n + r].abs() >= BK_ALPHA * sigma {
                swap(&mut a, &mut l, &mut perm, k, k, r);
            } else {
                swap(&mut a, &mut l, &mut perm, k, k + 1, r);
                size = 2;
            }
        }
        if size == 1 {
            let d = a[k * n + k];
            for i in k + 1..n {
                l[i * n + k] = a[i * n + k] / d;
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    a[i * n + j] -= l[i * n + k] * d * l[j * n + k];
                }
            }
            pivots.push(Pivot::One { k, d });
        } else {
            let (e11, e12, e22) = (a[k * n + k], a[k * n + k + 1], a[(k + 1) * n + k + 1]);
            let det = e11 * e22 - e12 * e12;
            let (i11, i12, i22) = (e22 / det, -e12 / det, e11 / det);
            for i in k + 2..n {
                let (x, y) = (a[i * n + k], a[i * n + k + 1]);
                l[i * n + k] = x * i11 + y * i12;
                l[i * n + k + 1] = x * i12 + y * i22;
            }
            for i in k + 2..n {
                for j in k + 2..n {
                    let (xi, yi) = (a[i * n + k], a[i * n + k + 1]);
                    a[i * n + j] -= l[j * n + k] * xi + l[j * n + k + 1] * yi;
                }
            }
            pivots.push(Pivot::Two { k, a: e11, b: e12, c: e22 });
        }
        k += size;
    }
    Ldlt { n, l, pivots, perm }
}

impl Ldlt {
    /// Squared norm of `L⁻ᵀ u` for `u` supported on positions `k..k+u.len()`.
    fn back_norm2(&self, k: usize, u: &[f64]) -> f64 {
        let n = self.n;
        let mut v = vec![0.0; n];
        v[k..k + u.len()].copy_from_slice(u);
        for i in (0..n).rev() {
            let mut s = v[i];
            for j in i + 1..n {
                s -= self.l[j * n + i] * v[j];
            }
            v[i] = s;
        }
        v.iter().map(|x| x * x).sum()
    }

    /// Upper bound on the smallest eigenvalue witnessed by a negative pivot:
    /// the Rayleigh quotient of the vector that maps onto that pivot.
    fn pivot_bound(&self, p: &Pivot) -> Option<f64> {
        match *p {
            Pivot::One { k, d } => (d < 0.0).then(|| d / self.back_norm2(k, &[1.0])),
            Pivot::Two { k, a, b, c } => {
                let mean = 0.5 * (a + c);
                let rad = (0.25 * (a - c) * (a - c) + b * b).sqrt();
                let mu = mean - rad;
                if mu >= 0.0 {
                    return None;
                }
                let u = if b.abs() > 0.0 { [b, mu - a] } else if a <= c { [1.0, 0.0] } else { [0.0, 1.0] };
                let nu = (u[0] * u[0] + u[1] * u[1]).sqrt();
                let u = [u[0] / nu, u[1] / nu];
                Some(mu / self.back_norm2(k, &u))
            }
        }
    }
}

/// True iff `λ_min(s) ≥ -tol`.
///
/// The factorization decides clear cases; pivots near zero, or negative
/// pivots whose witnessed eigenvalue bound is within `tol`, fall back to the
/// eigenvalue test.
pub fn is_psd(s: &SymMatrix, tol: f64) -> bool {
    let n = s.dim();
    if n == 0 {
        return true;
    }
    let f = bunch_kaufman(s);
    let amb = tol.max(64.0 * n as f64 * f64::EPSILON * s.max_abs());
    let mut ambiguous = false;
    for p in &f.pivots {
        match *p {
            Pivot::One { d, .. } if d >= amb => {}
            Pivot::One { d, .. } if d > -amb => ambiguous = true,
            _ => match f.pivot_bound(p) {
                Some(bound) if bound < -tol => return false,
                _ => ambiguous = true,
            },
        }
    }
    if ambiguous {
        min_eigenvalue(s) >= -tol
    } else {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reconstruct(f: &Ldlt) -> Vec<f64> {
        let n = f.n;
        let mut d = vec![0.0; n * n];
        for p in &f.pivots {
            match *p {
                Pivot::One { k, d: v } => d[k * n + k] = v,
                Pivot::Two { k, a, b, c } => {
                    d[k * n + k] = a;
                    d[k * n + k + 1] = b;
                    d[(k + 1) * n + k] = b;
                    d[(k + 1) * n + k + 1] = c;
                }
            }
        }
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for p in 0..n {
                    for q in 0..n {
                        s += f.l[i * n + p] * d[p * n + q] * f.l[j * n + q];
                    }
                }
                out[i * n + j] = s;
            }
        }
        out
    }

    #[test]
    fn factorization_reproduces_permuted_matrix() {
        let s = SymMatrix::new(4, vec![0.0, 1.0, 2.0, 0.5, 0.0, 3.0, -1.0, 1e-3, 2.0, -4.0]).unwrap();
        let f = bunch_kaufman(&s);
        let r = reconstruct(&f);
        for i in 0..4 {
            for j in 0..4 {
                let want = s.get(f.perm[i], f.perm[j]);
                assert!((r[i * 4 + j] - want).abs() < 1e-12, "({i},{j})");
            }
        }
    }

    #[test]
    fn psd_decisions() {
        assert!(is_psd(&SymMatrix::identity(3), 0.0));
        assert!(is_psd(&SymMatrix::unit(2, 0, 0), 1e-12));
        assert!(!is_psd(&SymMatrix::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap(), 1e-9));
        assert!(!is_psd(&SymMatrix::diag(&[1.0, -1e-6]), 1e-9));
        assert!(is_psd(&SymMatrix::diag(&[1.0, -1e-10]), 1e-9));
        assert!(is_psd(&SymMatrix::zeros(0), 0.0));
    }
}
