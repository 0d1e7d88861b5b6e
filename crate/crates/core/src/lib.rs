//! Classification of semidefinite feasibility problems.
//!
//! A problem asks whether the affine space `L + c` of symmetric matrices
//! meets the positive semidefinite cone. The library decides which of four
//! statuses holds (strongly/weakly feasible, weakly/strongly infeasible),
//! produces a certificate that can be checked without any optimization, and
//! for weakly infeasible problems builds points of `L + c` that come within
//! a requested distance of the cone.
//!
//! ```
//! use sdfeas::{classify, Config, FeasibilityStatus, Sdfp, SymMatrix};
//!
//! // {[[t, 1], [1, 0]]}: no member is PSD, yet the distance tends to zero.
//! let p = Sdfp::new(2, vec![SymMatrix::unit(2, 0, 0)], SymMatrix::unit(2, 0, 1)).unwrap();
//! let result = classify(&p, &Config::default()).unwrap();
//! assert_eq!(result.status, FeasibilityStatus::WeaklyInfeasible);
//! ```

pub mod approach;
pub mod certs;
pub mod config;
mod error;
pub mod gen;
pub mod model;
pub mod oracle;
pub mod procedures;
mod subspace;
pub mod symlin;

pub use approach::{build_sequence, choose_cprime, dwi_probe, ApproachSequence};
pub use certs::{extract_certificate, verify, Certificate, CertificateEnvelope};
pub use config::Config;
pub use error::{Error, Result};
pub use model::{AffineSubspace, BlockKind, FeasibilityStatus, Sdfp};
pub use oracle::{find_psd_point, gordan, max_min_eigen_affine, GordanOutcome, LambdaStarResult};
pub use procedures::{backward_procedure, classify, forward_procedure, ClassificationResult, FpOutput};
pub use symlin::SymMatrix;
