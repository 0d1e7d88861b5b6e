//! Log-det barrier method for `max { λ_min(X) : X ∈ C + span(D) }`.
//!
//! The variables are `(y, t)` with slack `S = C + Σ y_k D_k - t I ≻ 0`. Each
//! outer iteration maximizes `t + μ log det S` by damped Newton steps and
//! then shrinks `μ`. At a centered point `Z = μ S⁻¹` is a dual estimate with
//! `tr Z = 1` and `⟨Z, D_k⟩ = 0`, so `⟨Z, C⟩` bounds the optimum from above.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::config::Config;
use crate::subspace;
use crate::symlin::{eigen, SymMatrix};

/// Outcome of one barrier solve, in the caller's scale.
#[derive(Debug, Clone)]
pub(crate) struct BarrierSolution {
    pub x: SymMatrix,
    /// Outer iterates, oldest first.
    pub history: Vec<SymMatrix>,
    /// `λ_min(x)`, a lower bound on the optimum.
    pub lower: f64,
    /// Upper bound certified by `dual`, or `+∞`.
    pub upper: f64,
    /// PSD, unit trace, orthogonal to every direction.
    pub dual: Option<SymMatrix>,
    pub converged: bool,
    pub unbounded: bool,
}

const UNBOUNDED_T: f64 = 1e8;
const CENTERED: f64 = 1e-9;
/// Largest negative eigenvalue of the projected dual that is shifted away.
const DUAL_SLACK: f64 = 1e-9;

struct State {
    y: Vec<f64>,
    t: f64,
}

fn slack(c: &SymMatrix, dirs: &[SymMatrix], st: &State) -> DMatrix<f64> {
    let n = c.dim();
    let mut s = c.to_dense();
    for (yk, d) in st.y.iter().zip(dirs) {
        if *yk != 0.0 {
            for i in 0..n {
                for j in 0..n {
                    s[(i, j)] += yk * d.get(i, j);
                }
            }
        }
    }
    for i in 0..n {
        s[(i, i)] -= st.t;
    }
    s
}

fn factor(c: &SymMatrix, dirs: &[SymMatrix], st: &State) -> Option<Cholesky<f64, Dyn>> {
    slack(c, dirs, st).cholesky()
}

fn point(c: &SymMatrix, dirs: &[SymMatrix], y: &[f64]) -> SymMatrix {
    let mut x = c.clone();
    for (yk, d) in y.iter().zip(dirs) {
        x = x.axpy(*yk, d);
    }
    x
}

/// Solves with orthonormal `dirs` (in the trace inner product).
pub(crate) fn solve(anchor: &SymMatrix, dirs: &[SymMatrix], cfg: &Config) -> BarrierSolution {
    let n = anchor.dim();
    let scale = anchor.frobenius_norm().max(1.0);
    let c = anchor.scale(1.0 / scale);
    let d = dirs.len();

    if d == 0 {
        let e = eigen(&c);
        let v = e.vectors.column(0);
        let z = SymMatrix::from_fn(n, |i, j| v[i] * v[j]);
        let lower = e.min() * scale;
        return BarrierSolution {
            x: anchor.clone(),
            history: vec![anchor.clone()],
            lower,
            upper: lower,
            dual: Some(z),
            converged: true,
            unbounded: false,
        };
    }

    let ident = SymMatrix::identity(n);
    let mut st = State { y: vec![0.0; d], t: eigen(&c).min() - 1.0 };
    let mut mu = 1.0 / n as f64;
    let mut history = Vec::new();
    let mut converged = false;
    let mut unbounded = false;
    let mut last_chol = None;

    'outer: loop {
        let last = n as f64 * mu <= cfg.tol_opt;
        let mut steps = 0usize;
        // Centering.
        loop {
            let ch = match factor(&c, dirs, &st) {
                Some(v) => v,
                None => break 'outer,
            };
            let l = ch.l();
            let whiten = |g: &SymMatrix| -> DMatrix<f64> {
                let x = l.solve_lower_triangular(&g.to_dense()).expect("nonsingular factor");
                l.solve_lower_triangular(&x.transpose()).expect("nonsingular factor")
            };
            let mut ghat: Vec<DMatrix<f64>> = dirs.iter().map(whiten).collect();
            ghat.push(-whiten(&ident));
            let m = d + 1;
            let mut gram = DMatrix::zeros(m, m);
            for a in 0..m {
                for b in a..m {
                    let v = ghat[a].dot(&ghat[b]) * mu;
                    gram[(a, b)] = v;
                    gram[(b, a)] = v;
                }
            }
            let mut grad = DVector::from_fn(m, |k, _| mu * ghat[k].trace());
            grad[d] += 1.0;
            let delta = match gram.clone().cholesky() {
                Some(ch) => ch.solve(&grad),
                None => subspace::svd(&gram).solve(&grad, 1e-14).expect("svd solve"),
            };
            let dec2 = grad.dot(&delta);
            last_chol = Some(ch);
            if !(dec2.is_finite()) || dec2 / mu < CENTERED {
                break;
            }
            if steps >= cfg.max_newton {
                if last {
                    break;
                }
                break 'outer;
            }
            steps += 1;

            let mut ds = DMatrix::zeros(n, n);
            for k in 0..m {
                ds += &ghat[k] * delta[k];
            }
            let ds = SymMatrix::from_dense(&ds);
            let emin = eigen(&ds).min();
            let amax = if emin < 0.0 { -1.0 / emin } else { f64::INFINITY };
            // Damped Newton step for the self-concordant function `t/μ + log det S`;
            // objective values are not compared since they lose all precision at small `μ`.
            let lambda = (dec2 / mu).sqrt();
            let damped = if lambda < 0.25 { 1.0 } else { 1.0 / (1.0 + lambda) };
            let mut alpha = damped.min(0.99 * amax);
            let mut accepted = false;
            for _ in 0..60 {
                let trial = State {
                    y: st.y.iter().enumerate().map(|(k, v)| v + alpha * delta[k]).collect(),
                    t: st.t + alpha * delta[d],
                };
                if slack(&c, dirs, &trial).cholesky().is_some() {
                    st = trial;
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if !accepted {
                break;
            }
            if st.t > UNBOUNDED_T {
                unbounded = true;
                break 'outer;
            }
        }
        history.push(point(&c, dirs, &st.y).scale(scale));
        if last {
            converged = true;
            break;
        }
        mu *= cfg.mu_factor;
    }

    let x = point(&c, dirs, &st.y);
    let lower = eigen(&x).min() * scale;
    if history.is_empty() {
        history.push(x.scale(scale));
    }
    let mut sol = BarrierSolution {
        x: x.scale(scale),
        history,
        lower,
        upper: f64::INFINITY,
        dual: None,
        converged,
        unbounded,
    };
    if unbounded {
        return sol;
    }
    if let Some(ch) = last_chol {
        let z = SymMatrix::from_dense(&ch.inverse());
        let z = z.scale(1.0 / z.trace());
        let z = correct_dual(&z, dirs);
        if let Some(zp) = project_dual(&z, dirs) {
            let shift = -eigen(&zp).min();
            if shift <= DUAL_SLACK {
                let zp = if shift > 0.0 {
                    zp.axpy(shift, &ident).scale(1.0 / (1.0 + n as f64 * shift))
                } else {
                    zp
                };
                sol.upper = zp.inner(&c) * scale;
                sol.dual = Some(zp);
            }
        }
    }
    sol
}

/// Moves a dual estimate onto `{⟨Z, D_k⟩ = 0, tr Z = 1}` by `Z + Z M Z` with
/// `M ∈ span(D_k, I)`. Near the central path `Z` is accurate in the metric
/// weighted by `Z⁻¹`, and this correction is the least change in that metric;
/// it keeps the small eigenvalues of `Z` intact where a plain projection
/// would push them negative.
fn correct_dual(z: &SymMatrix, dirs: &[SymMatrix]) -> SymMatrix {
    let n = z.dim();
    let zd = z.to_dense();
    let mut gens: Vec<DMatrix<f64>> = dirs.iter().map(|d| d.to_dense()).collect();
    gens.push(DMatrix::identity(n, n));
    let m = gens.len();
    let sandwiched: Vec<DMatrix<f64>> = gens.iter().map(|g| &zd * g * &zd).collect();
    let mut gram = DMatrix::zeros(m, m);
    let mut rhs = DVector::zeros(m);
    for a in 0..m {
        for b in 0..m {
            gram[(a, b)] = sandwiched[b].dot(&gens[a]);
        }
        rhs[a] = -zd.dot(&gens[a]);
    }
    rhs[m - 1] += 1.0;
    let coef = match subspace::svd(&gram).solve(&rhs, 1e-14) {
        Ok(c) => c,
        Err(_) => return z.clone(),
    };
    let mut out = zd;
    for k in 0..m {
        out += &sandwiched[k] * coef[k];
    }
    SymMatrix::from_dense(&out)
}

/// Projects onto `{Z : ⟨Z, D_k⟩ = 0, tr Z = 1}`.
fn project_dual(z: &SymMatrix, dirs: &[SymMatrix]) -> Option<SymMatrix> {
    let n = z.dim();
    let orth: Vec<Vec<f64>> = dirs.iter().map(|d| d.svec()).collect();
    let remove = |m: &SymMatrix| {
        let v = m.svec();
        let p = subspace::project(&v, &orth);
        SymMatrix::smat(n, &v.iter().zip(&p).map(|(a, b)| a - b).collect::<Vec<_>>())
    };
    let zp = remove(z);
    let iperp = remove(&SymMatrix::identity(n));
    let ni = iperp.inner(&iperp);
    if ni <= 1e-14 {
        return None;
    }
    let zp = zp.axpy((1.0 - zp.trace()) / ni, &iperp);
    Some(zp)
}
