//! Numerical tolerances and iteration limits.
//!
//! A single [`Config`] value is passed to every routine that makes a
//! numerical decision, so a run is fully described by its config and input.

use serde::{Deserialize, Serialize};

/// Tolerances and limits shared by all numerical routines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    /// Relative eigenvalue cutoff used for numerical rank decisions.
    pub tol_rank: f64,
    /// Residual tolerance for linear membership and least-squares checks.
    pub tol_lin: f64,
    /// Minimum eigenvalue for a matrix to count as positive definite.
    pub tol_pd: f64,
    /// Half-width of the band around zero where the optimal value is
    /// considered zero (weak status) rather than clearly signed.
    pub tol_amb: f64,
    /// Duality gap at which the barrier method stops.
    pub tol_opt: f64,
    /// Relative singular-value floor for nonsingular transforms.
    pub tol_det: f64,
    /// Entries below this (relative to the largest entry) are set to zero
    /// when cleaning up directions returned by the oracle.
    pub tol_snap: f64,
    /// Eigenvalue slack used when checking membership in the PSD cone.
    pub tol_psd: f64,
    /// Newton step budget of each centering phase of a barrier solve.
    pub max_newton: usize,
    /// Barrier parameter reduction factor per outer iteration.
    pub mu_factor: f64,
    /// Sweep limit of the Jacobi eigensolver.
    pub max_sweeps: usize,
    /// Largest coefficient the approach-sequence doubling may reach.
    pub alpha_cap: f64,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            tol_rank: 1e-8,
            tol_lin: 1e-8,
            tol_pd: 1e-7,
            tol_amb: 1e-7,
            tol_opt: 1e-11,
            tol_det: 1e-12,
            tol_snap: 1e-9,
            tol_psd: 1e-7,
            max_newton: 200,
            mu_factor: 0.2,
            max_sweeps: 100,
            alpha_cap: 1e20,
        }
    }
}

impl Config {
    /// Checks that every tolerance is positive and finite.
    pub fn validate(&self) -> crate::Result<()> {
        let tols = [
            ("tol_rank", self.tol_rank),
            ("tol_lin", self.tol_lin),
            ("tol_pd", self.tol_pd),
            ("tol_amb", self.tol_amb),
            ("tol_opt", self.tol_opt),
            ("tol_det", self.tol_det),
            ("tol_snap", self.tol_snap),
            ("tol_psd", self.tol_psd),
            ("alpha_cap", self.alpha_cap),
        ];
        for (name, v) in tols {
            if !(v.is_finite() && v > 0.0) {
                return Err(crate::Error::InvalidConfig(format!("{name} must be positive and finite")));
            }
        }
        if !(self.mu_factor > 0.0 && self.mu_factor < 1.0) {
            return Err(crate::Error::InvalidConfig("mu_factor must lie in (0, 1)".into()));
        }
        if self.max_newton == 0 || self.max_sweeps == 0 {
            return Err(crate::Error::InvalidConfig("iteration limits must be positive".into()));
        }
        Ok(())
    }
}
