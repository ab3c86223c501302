//! Analytic test functions of polynomial×Gaussian type, tube regions around
//! real base sets, and the norm systems `‖·‖_{O,l,N}` and `‖·‖′_{O,l,N}`.

mod gaussfn;
mod norms;
mod region;

pub use gaussfn::{relative_map, GaussPolyFn};
pub use norms::{
    check_norm_equivalence, mean_value_constant, norm_int, norm_sup, norm_sup_with, sup_constant, EquivalenceReport,
    Inequality, SupOpts,
};
pub use region::{Base, HalfSpace, NormIndex, Piece, TubeRegion};
