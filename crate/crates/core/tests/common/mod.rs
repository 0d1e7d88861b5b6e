#![allow(dead_code)]

use nalgebra::DMatrix;
use sdfeas::{Config, Sdfp, SymMatrix};

pub fn sym(rows: &[&[f64]]) -> SymMatrix {
    SymMatrix::from_rows(rows).unwrap()
}

/// `{anchor + Σ x_k basis_k}`.
pub fn family(anchor: SymMatrix, basis: Vec<SymMatrix>) -> Sdfp {
    Sdfp::new(anchor.dim(), basis, anchor).unwrap()
}

/// Whether `p` equals `q` after flipping the signs of some coordinates,
/// which is the freedom left in an orthogonal rank-revealing transform.
pub fn equal_up_to_signs(p: &Sdfp, q: &Sdfp, tol: f64) -> bool {
    let n = p.n();
    if n != q.n() {
        return false;
    }
    let cfg = Config::default();
    (0..1u32 << n).any(|mask| {
        let d = DMatrix::from_fn(n, n, |i, j| if i != j { 0.0 } else if mask >> i & 1 == 1 { -1.0 } else { 1.0 });
        p.congruence(&d, &cfg).map(|r| r.affinely_equal(q, tol)).unwrap_or(false)
    })
}
