//! Zernike moment layouts, least-squares fitting and serialization.

mod fit;
mod io;
mod layout;
mod pinv;

pub use fit::{
    build_design_matrix, complex_to_real, design_matrix_with, fit_moments, norm_constant, quadrature_moments,
    real_to_complex, reconstruct, reconstruct_complex, reconstruction_error, DesignMatrix, MomentFitter,
    ReconstructionError,
};
pub use io::{from_bytes, from_json, read_moments, to_bytes, to_json, write_moments, MomentFile, MOMENT_MAGIC};
pub(crate) use io::{is_json, ByteReader};
pub use layout::{ComplexMomentSet, MomentLayout, MomentVector, SampleSet, LAYOUT_VERSION};
pub use pinv::{
    pinv_newton_schulz, pinv_newton_schulz_direct, pinv_residual, resolve_alpha, spectral_radius_estimate, Alpha,
    NewtonSchulz, PinvConfig, DEFAULT_ALPHA, SPECTRAL_CHECK_ITERS,
};
