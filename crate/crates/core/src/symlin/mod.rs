//! Symmetric-matrix linear algebra: storage, eigenvalues, PSD tests,
//! Schur complements and congruence transforms.

mod eigen;
mod ldlt;
mod matrix;
mod ops;

pub use eigen::{dist_to_psd, eigen, eigen_with, min_eigenvalue, project_psd, EigenDecomposition};
pub use ldlt::{bunch_kaufman, is_psd, Ldlt, Pivot};
pub use matrix::{dense_serde, SymMatrix};
pub use matrix::packed_len;
pub(crate) use ops::congruence_unchecked;
pub use ops::{
    check_transform, congruence, extend_identity, face_congruence, is_pd, rank_revealing_congruence,
    schur_complement,
};
