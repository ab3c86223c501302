//! Finite-truncation reconstruction: Borchers algebra over a dictionary, the
//! form `s`, the GNS quotient, operator matrices and the axiom checks.

mod borchers;
mod checks;
mod gram;
mod ops;

pub use borchers::{s_form, BorchersVector, Dictionary, Word};
pub use checks::{cluster_profile, default_window, spectral_residual, SpectralGrid, SpectralReport};
pub use gram::{build_gram, gns_quotient, GnsBasis, GnsOpts, GramMatrix};
pub use ops::{
    build_state_relative, composition_defect, covariance_defect, domain_words, field_matrix, inner, matrix_element,
    translation_matrix, FieldMatrix, StateCoords, TranslationMatrix,
};
