//! Problem representation: affine subspaces of symmetric matrices, the four
//! feasibility statuses, block projections and the corner slice.

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::subspace::{self, complement, lstsq, null_space, orthonormalize, truncated_solve, try_extend};
use crate::symlin::{congruence_unchecked, eigen, packed_len, SymMatrix};
use crate::{Error, Result};

/// Feasibility status of `{X ⪰ 0} ∩ (L + c)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FeasibilityStatus {
    StronglyFeasible,
    WeaklyFeasible,
    WeaklyInfeasible,
    StronglyInfeasible,
}

impl FeasibilityStatus {
    pub const ALL: [FeasibilityStatus; 4] = [
        FeasibilityStatus::StronglyFeasible,
        FeasibilityStatus::WeaklyFeasible,
        FeasibilityStatus::WeaklyInfeasible,
        FeasibilityStatus::StronglyInfeasible,
    ];

    pub fn is_feasible(self) -> bool {
        matches!(self, FeasibilityStatus::StronglyFeasible | FeasibilityStatus::WeaklyFeasible)
    }

    /// Weakly feasible or weakly infeasible.
    pub fn is_weak(self) -> bool {
        matches!(self, FeasibilityStatus::WeaklyFeasible | FeasibilityStatus::WeaklyInfeasible)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FeasibilityStatus::StronglyFeasible => "StronglyFeasible",
            FeasibilityStatus::WeaklyFeasible => "WeaklyFeasible",
            FeasibilityStatus::WeaklyInfeasible => "WeaklyInfeasible",
            FeasibilityStatus::StronglyInfeasible => "StronglyInfeasible",
        }
    }
}

impl fmt::Display for FeasibilityStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `L + c` in the space of `n × n` symmetric matrices.
///
/// The basis of `L` is kept linearly independent; constructors prune or
/// reject dependent generators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpaceRepr", into = "SpaceRepr")]
pub struct AffineSubspace {
    n: usize,
    basis: Vec<SymMatrix>,
    anchor: SymMatrix,
}

/// A semidefinite feasibility problem is determined by its affine subspace.
pub type Sdfp = AffineSubspace;

#[derive(Serialize, Deserialize)]
struct SpaceRepr {
    n: usize,
    basis: Vec<SymMatrix>,
    anchor: SymMatrix,
}

impl TryFrom<SpaceRepr> for AffineSubspace {
    type Error = Error;
    fn try_from(r: SpaceRepr) -> Result<Self> {
        AffineSubspace::new(r.n, r.basis, r.anchor)
    }
}

impl From<AffineSubspace> for SpaceRepr {
    fn from(a: AffineSubspace) -> Self {
        SpaceRepr { n: a.n, basis: a.basis, anchor: a.anchor }
    }
}

fn prune_tol(cfg: &Config) -> f64 {
    cfg.tol_rank.sqrt()
}

impl AffineSubspace {
    /// Builds `span(basis) + anchor`, rejecting dependent bases.
    pub fn new(n: usize, basis: Vec<SymMatrix>, anchor: SymMatrix) -> Result<Self> {
        Self::with_tol(n, basis, anchor, Config::default().tol_rank)
    }

    /// As [`AffineSubspace::new`]; the Gram matrix of the normalized basis
    /// must have smallest eigenvalue above `tol_rank`.
    pub fn with_tol(n: usize, basis: Vec<SymMatrix>, anchor: SymMatrix, tol_rank: f64) -> Result<Self> {
        check_dim(n, &anchor)?;
        for b in &basis {
            check_dim(n, b)?;
        }
        if !anchor.is_finite() || basis.iter().any(|b| !b.is_finite()) {
            return Err(Error::NonFinite);
        }
        if basis.len() > packed_len(n) {
            return Err(Error::DependentBasis);
        }
        if !basis.is_empty() {
            let normed: Vec<SymMatrix> = basis
                .iter()
                .map(|b| {
                    let nb = b.frobenius_norm();
                    if nb == 0.0 {
                        b.clone()
                    } else {
                        b.scale(1.0 / nb)
                    }
                })
                .collect();
            let gram = SymMatrix::from_fn(basis.len(), |i, j| normed[i].inner(&normed[j]));
            if eigen(&gram).min() <= tol_rank {
                return Err(Error::DependentBasis);
            }
        }
        Ok(AffineSubspace { n, basis, anchor })
    }

    /// Builds `span(generators) + anchor`, dropping generators that depend on
    /// earlier ones.
    pub fn from_spanning(n: usize, generators: Vec<SymMatrix>, anchor: SymMatrix, cfg: &Config) -> Result<Self> {
        check_dim(n, &anchor)?;
        for g in &generators {
            check_dim(n, g)?;
        }
        if !anchor.is_finite() || generators.iter().any(|b| !b.is_finite()) {
            return Err(Error::NonFinite);
        }
        let keep = subspace::independent_subset(&subspace::svecs(&generators), prune_tol(cfg));
        let basis = keep.into_iter().map(|i| generators[i].clone()).collect();
        Ok(AffineSubspace { n, basis, anchor })
    }

    /// Solution set of `⟨A_i, X⟩ = b_i`.
    pub fn from_equations(n: usize, equations: &[(SymMatrix, f64)], cfg: &Config) -> Result<Self> {
        for (a, b) in equations {
            check_dim(n, a)?;
            if !a.is_finite() || !b.is_finite() {
                return Err(Error::NonFinite);
            }
        }
        let dim = packed_len(n);
        let a = DMatrix::from_fn(equations.len(), dim, |i, j| equations[i].0.svec()[j]);
        let rhs: Vec<f64> = equations.iter().map(|e| e.1).collect();
        let (x, res) = lstsq(&a, &rhs);
        let scale = 1.0 + subspace::norm(&rhs);
        if res > cfg.tol_lin * scale {
            return Err(Error::InconsistentEquations);
        }
        let anchor = if equations.is_empty() { SymMatrix::zeros(n) } else { SymMatrix::smat(n, &x) };
        let basis = null_space(&a, prune_tol(cfg)).iter().map(|v| SymMatrix::smat(n, v)).collect();
        Ok(AffineSubspace { n, basis, anchor })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim_l(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[SymMatrix] {
        &self.basis
    }

    pub fn anchor(&self) -> &SymMatrix {
        &self.anchor
    }

    /// Orthonormal basis of `L` in isometric coordinates.
    pub(crate) fn orthonormal(&self) -> Vec<Vec<f64>> {
        orthonormalize(&subspace::svecs(&self.basis), 1e-12)
    }

    /// Same subspace with a different anchor.
    pub fn with_anchor(&self, anchor: SymMatrix) -> Result<Self> {
        check_dim(self.n, &anchor)?;
        Ok(AffineSubspace { n: self.n, basis: self.basis.clone(), anchor })
    }

    /// Distance from `x - c` to `L`.
    pub fn residual(&self, x: &SymMatrix) -> f64 {
        let d = x.sub(&self.anchor).svec();
        let p = subspace::project(&d, &self.orthonormal());
        d.iter().zip(&p).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    }

    /// Distance from `x` to `L`.
    pub fn residual_linear(&self, x: &SymMatrix) -> f64 {
        let d = x.svec();
        let p = subspace::project(&d, &self.orthonormal());
        d.iter().zip(&p).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    }

    /// Norm of the orthogonal projection of `x` onto `L`.
    pub fn component_in_l(&self, x: &SymMatrix) -> f64 {
        subspace::norm(&subspace::project(&x.svec(), &self.orthonormal()))
    }

    /// `x ∈ L + c` up to `tol · max(1, ‖x‖, ‖c‖)`.
    pub fn contains(&self, x: &SymMatrix, tol: f64) -> bool {
        x.dim() == self.n && self.residual(x) <= tol * 1f64.max(x.frobenius_norm()).max(self.anchor.frobenius_norm())
    }

    /// `x ∈ L` up to `tol · max(1, ‖x‖)`.
    pub fn contains_linear(&self, x: &SymMatrix, tol: f64) -> bool {
        x.dim() == self.n && self.residual_linear(x) <= tol * 1f64.max(x.frobenius_norm())
    }

    /// True when both describe the same affine set.
    pub fn affinely_equal(&self, other: &AffineSubspace, tol: f64) -> bool {
        self.n == other.n
            && self.dim_l() == other.dim_l()
            && other.basis.iter().all(|b| self.contains_linear(b, tol))
            && self.contains(&other.anchor, tol)
    }

    /// Applies the same linear map to the anchor and every basis element,
    /// then prunes the basis. Image entries below `tol_snap` times the
    /// preimage norm are set to zero. An image is dropped when what it adds to the
    /// span is negligible next to its preimage, so `f` should not expand
    /// norms much; see [`AffineSubspace::map_with_gain`].
    pub fn map(&self, n: usize, f: impl Fn(&SymMatrix) -> SymMatrix, cfg: &Config) -> Result<Self> {
        self.map_with_gain(n, f, 1.0, cfg)
    }

    /// [`AffineSubspace::map`] for a map whose operator norm is at most `gain`.
    pub fn map_with_gain(
        &self,
        n: usize,
        f: impl Fn(&SymMatrix) -> SymMatrix,
        gain: f64,
        cfg: &Config,
    ) -> Result<Self> {
        // Entries at rounding level relative to the preimage become exact zeros.
        let image = |m: &SymMatrix| {
            let img = f(m);
            let thr = cfg.tol_snap * gain * m.frobenius_norm();
            img.snapped(thr)
        };
        let anchor = image(&self.anchor);
        check_dim(n, &anchor)?;
        if !anchor.is_finite() {
            return Err(Error::NonFinite);
        }
        let tol = prune_tol(cfg);
        let mut orth = Vec::new();
        let mut basis = Vec::new();
        for b in &self.basis {
            let img = image(b);
            check_dim(n, &img)?;
            if !img.is_finite() {
                return Err(Error::NonFinite);
            }
            let ni = img.frobenius_norm();
            if ni == 0.0 {
                continue;
            }
            let rel = tol * gain * b.frobenius_norm() / ni;
            if rel < 1.0 && try_extend(&mut orth, &img.svec(), rel) {
                basis.push(img);
            }
        }
        Ok(AffineSubspace { n, basis, anchor })
    }

    /// `Pᵀ(L + c)P`.
    pub fn congruence(&self, p: &DMatrix<f64>, cfg: &Config) -> Result<Self> {
        crate::symlin::check_transform(p, self.n, cfg.tol_det)?;
        let gain = subspace::svd(p).singular_values.max().powi(2);
        self.map_with_gain(self.n, |s| congruence_unchecked(p, s), gain, cfg)
    }
}

fn check_dim(n: usize, m: &SymMatrix) -> Result<()> {
    if m.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: m.dim() });
    }
    Ok(())
}

/// Which principal block a projection keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockKind {
    /// Upper-left `k × k` block.
    Upper,
    /// Lower-right `(n-k) × (n-k)` block.
    Lower,
}

/// Upper-left `k × k` block.
pub fn pi(s: &SymMatrix, k: usize) -> Result<SymMatrix> {
    if k > s.dim() {
        return Err(Error::IndexOutOfRange { k, n: s.dim() });
    }
    Ok(s.block(0, k))
}

/// Lower-right `(n-k) × (n-k)` block.
pub fn pibar(s: &SymMatrix, k: usize) -> Result<SymMatrix> {
    if k > s.dim() {
        return Err(Error::IndexOutOfRange { k, n: s.dim() });
    }
    Ok(s.block(k, s.dim()))
}

/// Applies `π_k` or `π̄_k` to the whole problem.
pub fn project_problem(p: &Sdfp, kind: BlockKind, k: usize, cfg: &Config) -> Result<Sdfp> {
    let n = p.n();
    if k > n {
        return Err(Error::IndexOutOfRange { k, n });
    }
    match kind {
        BlockKind::Upper => p.map(k, |s| s.block(0, k), cfg),
        BlockKind::Lower => p.map(n - k, |s| s.block(k, n), cfg),
    }
}

/// Basis of `L^⊥` for `L = span(basis)` in symmetric `n × n` matrices.
pub fn orthogonal_complement(basis: &[SymMatrix], n: usize) -> Vec<SymMatrix> {
    let orth = orthonormalize(&subspace::svecs(basis), 1e-10);
    complement(&orth, packed_len(n)).iter().map(|v| SymMatrix::smat(n, v)).collect()
}

/// The problem `(K, L^⊥ ∩ c^⊥, -c/‖c‖²)`; it is feasible exactly when the
/// original problem is strongly infeasible.
pub fn strong_infeasibility_system(p: &Sdfp, cfg: &Config) -> Result<Sdfp> {
    let c = p.anchor();
    let nc = c.frobenius_norm();
    if nc == 0.0 {
        return Err(Error::ZeroAnchor);
    }
    let mut gens = p.basis().to_vec();
    gens.push(c.clone());
    let basis = orthogonal_complement(&gens, p.n());
    AffineSubspace::from_spanning(p.n(), basis, c.scale(-1.0 / (nc * nc)), cfg)
}

/// Coordinates (in isometric order) of entries outside the leading `m × m` block.
fn outside_corner(n: usize, m: usize) -> Vec<usize> {
    let mut idx = Vec::new();
    let mut k = 0;
    for i in 0..n {
        for j in i..n {
            if j >= m {
                idx.push(k);
            }
            k += 1;
        }
    }
    idx
}

/// `π_m(E ∩ (L + c))` where `E` holds the matrices supported on the leading
/// `m × m` block. Returns `None` when the intersection is empty.
pub fn slice_upper_corner(p: &Sdfp, m: usize, cfg: &Config) -> Result<Option<Sdfp>> {
    let n = p.n();
    if m > n {
        return Err(Error::IndexOutOfRange { k: m, n });
    }
    let orth = p.orthonormal();
    let rows = outside_corner(n, m);
    let c = p.anchor().svec();
    let a = DMatrix::from_fn(rows.len(), orth.len(), |r, k| orth[k][rows[r]]);
    let rhs: Vec<f64> = rows.iter().map(|&r| -c[r]).collect();
    let (y, res, null) = truncated_solve(&a, &rhs, prune_tol(cfg));
    let scale = 1f64.max(p.anchor().frobenius_norm());
    if res > cfg.tol_lin * scale {
        return Ok(None);
    }
    let mut point = subspace::combine(n, &y, &orth).add(p.anchor());
    // Entries outside the corner are zero by construction; drop rounding noise.
    for i in 0..n {
        for j in i.max(m)..n {
            point.set(i, j, 0.0);
        }
    }
    let anchor = point.block(0, m);
    let gens: Vec<SymMatrix> = null
        .iter()
        .map(|z| subspace::combine(n, z, &orth).block(0, m))
        .collect();
    Ok(Some(AffineSubspace::from_spanning(m, gens, anchor, cfg)?))
}

/// Element `X` of `L` (or of `L + c` when `affine`) with `π̄_k(X) = target`
/// and minimum Frobenius norm of its `L` part. Returns the residual
/// `‖π̄_k(X) - target‖` alongside.
pub fn lift(p: &Sdfp, k: usize, target: &SymMatrix, affine: bool) -> Result<(SymMatrix, f64)> {
    let n = p.n();
    if k > n {
        return Err(Error::IndexOutOfRange { k, n });
    }
    check_dim(n - k, target)?;
    let orth = p.orthonormal();
    let base = if affine { p.anchor().clone() } else { SymMatrix::zeros(n) };
    let mut rows = Vec::new();
    let mut idx = 0;
    for i in 0..n {
        for _ in i..n {
            if i >= k {
                rows.push(idx);
            }
            idx += 1;
        }
    }
    let t = target.svec();
    let b = base.svec();
    let a = DMatrix::from_fn(rows.len(), orth.len(), |r, q| orth[q][rows[r]]);
    let rhs: Vec<f64> = rows.iter().enumerate().map(|(r, &i)| t[r] - b[i]).collect();
    let (y, res) = lstsq(&a, &rhs);
    Ok((subspace::combine(n, &y, &orth).add(&base), res))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> Config {
        Config::default()
    }

    #[test]
    fn complement_of_e11_in_s2() {
        let c = orthogonal_complement(&[SymMatrix::unit(2, 0, 0)], 2);
        assert_eq!(c.len(), 2);
        let span = AffineSubspace::new(2, c, SymMatrix::zeros(2)).unwrap();
        assert!(span.contains_linear(&SymMatrix::unit(2, 1, 1), 1e-14));
        assert!(span.contains_linear(&SymMatrix::unit(2, 0, 1), 1e-14));
        assert!(!span.contains_linear(&SymMatrix::unit(2, 0, 0), 1e-3));
    }

    #[test]
    fn strong_infeasibility_system_of_negative_diag() {
        let p = AffineSubspace::new(2, vec![], SymMatrix::diag(&[0.0, -1.0])).unwrap();
        let s = strong_infeasibility_system(&p, &cfg()).unwrap();
        assert_eq!(s.anchor(), &SymMatrix::diag(&[0.0, 1.0]));
        assert!(s.contains(&SymMatrix::diag(&[0.0, 1.0]), 1e-14));
        let z = AffineSubspace::new(2, vec![], SymMatrix::zeros(2)).unwrap();
        assert_eq!(strong_infeasibility_system(&z, &cfg()), Err(Error::ZeroAnchor));
    }

    #[test]
    fn dependent_basis_rejected_and_pruned() {
        let e = SymMatrix::unit(2, 0, 0);
        assert_eq!(
            AffineSubspace::new(2, vec![e.clone(), e.scale(2.0)], SymMatrix::zeros(2)),
            Err(Error::DependentBasis)
        );
        let s = AffineSubspace::from_spanning(2, vec![e.clone(), e.scale(2.0)], SymMatrix::zeros(2), &cfg()).unwrap();
        assert_eq!(s.dim_l(), 1);
    }

    #[test]
    fn projections_check_range() {
        let s = SymMatrix::identity(3);
        assert_eq!(pi(&s, 4), Err(Error::IndexOutOfRange { k: 4, n: 3 }));
        assert_eq!(pibar(&s, 1).unwrap(), SymMatrix::identity(2));
        assert_eq!(pi(&s, 0).unwrap().dim(), 0);
    }

    #[test]
    fn corner_slice_of_canonical_pair_is_empty() {
        // [[t, 1], [1, 0]]: entries outside the leading 1×1 block are fixed and nonzero.
        let p = AffineSubspace::new(2, vec![SymMatrix::unit(2, 0, 0)], SymMatrix::unit(2, 0, 1)).unwrap();
        assert_eq!(slice_upper_corner(&p, 1, &cfg()).unwrap(), None);
        let whole = slice_upper_corner(&p, 2, &cfg()).unwrap().unwrap();
        assert!(whole.affinely_equal(&p, 1e-12));
    }

    #[test]
    fn equations_form() {
        // x11 = 1, x22 = 0 in S_2.
        let eqs = vec![(SymMatrix::unit(2, 0, 0), 1.0), (SymMatrix::unit(2, 1, 1), 0.0)];
        let s = AffineSubspace::from_equations(2, &eqs, &cfg()).unwrap();
        assert_eq!(s.dim_l(), 1);
        assert!(s.contains(&SymMatrix::from_rows(&[&[1.0, 5.0], &[5.0, 0.0]]).unwrap(), 1e-12));
        let bad = vec![(SymMatrix::unit(2, 0, 0), 1.0), (SymMatrix::unit(2, 0, 0), 2.0)];
        assert_eq!(AffineSubspace::from_equations(2, &bad, &cfg()), Err(Error::InconsistentEquations));
    }
}
