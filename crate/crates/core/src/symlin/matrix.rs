use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{Error, Result};

/// Real symmetric matrix stored as its packed upper triangle, row by row.
///
/// Entry `(i, j)` with `i <= j` lives at `i*n - i*(i-1)/2 + (j - i)`.
#[derive(Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

/// Number of upper-triangle entries of an `n × n` matrix.
#[inline]
pub fn packed_len(n: usize) -> usize {
    n * (n + 1) / 2
}

#[inline]
fn offset(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * n - i * i.saturating_sub(1) / 2 + (j - i)
}

impl SymMatrix {
    /// Builds a matrix from its packed upper triangle.
    pub fn new(n: usize, upper: Vec<f64>) -> Result<Self> {
        if upper.len() != packed_len(n) {
            return Err(Error::DimensionMismatch { expected: packed_len(n), found: upper.len() });
        }
        if upper.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(SymMatrix { n, data: upper })
    }

    pub fn zeros(n: usize) -> Self {
        SymMatrix { n, data: vec![0.0; packed_len(n)] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Symmetric unit matrix with ones at `(i, j)` and `(j, i)`.
    pub fn unit(n: usize, i: usize, j: usize) -> Self {
        let mut m = Self::zeros(n);
        m.set(i, j, 1.0);
        m
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(packed_len(n));
        for i in 0..n {
            for j in i..n {
                data.push(f(i, j));
            }
        }
        SymMatrix { n, data }
    }

    /// Builds from full rows; only the upper triangle is read.
    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        for r in rows {
            if r.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: r.len() });
            }
        }
        let m = Self::from_fn(n, |i, j| rows[i][j]);
        if m.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(m)
    }

    /// Symmetrizes a dense square matrix as `(A + Aᵀ)/2`.
    pub fn from_dense(a: &DMatrix<f64>) -> Self {
        assert_eq!(a.nrows(), a.ncols(), "matrix must be square");
        Self::from_fn(a.nrows(), |i, j| 0.5 * (a[(i, j)] + a[(j, i)]))
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn packed(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[offset(self.n, i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = offset(self.n, i, j);
        self.data[k] = v;
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    /// Trace inner product `⟨A, B⟩ = tr(AB)`.
    pub fn inner(&self, other: &SymMatrix) -> f64 {
        assert_eq!(self.n, other.n);
        let mut s = 0.0;
        for i in 0..self.n {
            for j in i..self.n {
                let p = self.get(i, j) * other.get(i, j);
                s += if i == j { p } else { 2.0 * p };
            }
        }
        s
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.inner(self).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scale(&self, a: f64) -> SymMatrix {
        SymMatrix { n: self.n, data: self.data.iter().map(|v| a * v).collect() }
    }

    /// `self + a * other`.
    pub fn axpy(&self, a: f64, other: &SymMatrix) -> SymMatrix {
        assert_eq!(self.n, other.n);
        SymMatrix {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(x, y)| x + a * y).collect(),
        }
    }

    pub fn add(&self, other: &SymMatrix) -> SymMatrix {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &SymMatrix) -> SymMatrix {
        self.axpy(-1.0, other)
    }

    /// Principal submatrix on rows/columns `start..end`.
    pub fn block(&self, start: usize, end: usize) -> SymMatrix {
        Self::from_fn(end - start, |i, j| self.get(start + i, start + j))
    }

    /// Places `self` as the principal block at `start` of a zero matrix of order `n`.
    pub fn embed(&self, n: usize, start: usize) -> SymMatrix {
        assert!(start + self.n <= n);
        let mut out = SymMatrix::zeros(n);
        for i in 0..self.n {
            for j in i..self.n {
                out.set(start + i, start + j, self.get(i, j));
            }
        }
        out
    }

    /// Isometric coordinates: diagonal entries as is, off-diagonal entries scaled by √2.
    pub fn svec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.data.len());
        for i in 0..self.n {
            for j in i..self.n {
                let x = self.get(i, j);
                v.push(if i == j { x } else { x * std::f64::consts::SQRT_2 });
            }
        }
        v
    }

    /// Inverse of [`SymMatrix::svec`].
    pub fn smat(n: usize, v: &[f64]) -> SymMatrix {
        assert_eq!(v.len(), packed_len(n));
        let mut k = 0;
        SymMatrix::from_fn(n, |i, j| {
            let x = v[k];
            k += 1;
            if i == j {
                x
            } else {
                x * std::f64::consts::FRAC_1_SQRT_2
            }
        })
    }

    /// Sets entries with magnitude at most `thresh` to exactly zero.
    pub fn snapped(&self, thresh: f64) -> SymMatrix {
        SymMatrix {
            n: self.n,
            data: self.data.iter().map(|&v| if v.abs() <= thresh { 0.0 } else { v }).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

impl fmt::Debug for SymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "SymMatrix({}x{})", self.n, self.n)?;
        for i in 0..self.n {
            let row: Vec<String> = (0..self.n).map(|j| format!("{:>12.5e}", self.get(i, j))).collect();
            writeln!(f, "  [{}]", row.join(" "))?;
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct SymRepr {
    n: usize,
    upper: Vec<f64>,
}

impl Serialize for SymMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SymRepr { n: self.n, upper: self.data.clone() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for SymMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = SymRepr::deserialize(d)?;
        SymMatrix::new(r.n, r.upper).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter writing a dense square matrix as `{n, rows}` in row-major order.
pub mod dense_serde {
    use nalgebra::DMatrix;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct DenseRepr {
        n: usize,
        rows: Vec<Vec<f64>>,
    }

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        let rows = (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect();
        DenseRepr { n: m.nrows(), rows }.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        let r = DenseRepr::deserialize(d)?;
        if r.rows.len() != r.n || r.rows.iter().any(|row| row.len() != r.n) {
            return Err(serde::de::Error::custom("dense matrix rows do not match n"));
        }
        if r.rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(serde::de::Error::custom("non-finite entry"));
        }
        Ok(DMatrix::from_fn(r.n, r.n, |i, j| r.rows[i][j]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn packed_layout_is_row_major_upper() {
        let m = SymMatrix::new(3, vec![1., 2., 3., 4., 5., 6.]).unwrap();
        assert_eq!(m.get(0, 2), 3.0);
        assert_eq!(m.get(1, 1), 4.0);
        assert_eq!(m.get(2, 1), 5.0);
        assert_eq!(m.get(2, 2), 6.0);
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(SymMatrix::new(2, vec![1.0, 2.0]), Err(Error::DimensionMismatch { expected: 3, found: 2 }));
        assert_eq!(SymMatrix::new(1, vec![f64::NAN]), Err(Error::NonFinite));
    }

    #[test]
    fn inner_product_matches_dense_trace() {
        let a = SymMatrix::new(3, vec![1., -2., 0.5, 3., 1., -1.]).unwrap();
        let b = SymMatrix::new(3, vec![0., 1., 2., -1., 4., 2.]).unwrap();
        let dense = (a.to_dense() * b.to_dense()).trace();
        assert!((a.inner(&b) - dense).abs() < 1e-14);
        let sa = a.svec();
        let sb = b.svec();
        let dot: f64 = sa.iter().zip(&sb).map(|(x, y)| x * y).sum();
        assert!((dot - dense).abs() < 1e-13);
        assert!(SymMatrix::smat(3, &sa).sub(&a).max_abs() < 1e-15);
    }

    #[test]
    fn serde_round_trip_is_exact() {
        let a = SymMatrix::new(2, vec![0.1, 1.0 / 3.0, -2e-300]).unwrap();
        let s = serde_json::to_string(&a).unwrap();
        let b: SymMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(a, b);
    }
}
