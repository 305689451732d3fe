//! Point and essential spectrum of the linearization about a rotating wave.

mod arnoldi;
mod classify;
mod dispersion;
mod linearization;
mod symmetry;

pub use arnoldi::{default_krylov_dim, dense_eigenvalues, normalize_vector, residual, shift_invert_eigs, EigenPair, EigenResult};
pub use classify::{classify, classify_and_residual, ClassifiedEig, SpectrumClass, RESIDUAL_COLLAR};
pub use dispersion::{
    determinant_residual, dispersion_essential, distance_to_curves, max_real_part, qcgl_closed_form, DispersionCurve,
};
pub use linearization::{assemble_linearization, LinearizedOperator};
pub use symmetry::{
    listed_modes_3d, mode_eigenvalue, skew_from_entries, symmetry_basis, symmetry_eigenpairs, Generator, ListedMode,
    SymmetryBasis, SymmetryMode, SymmetryModes,
};
