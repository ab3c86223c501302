//! Free scalar field of mass `m` in 1+1 dimensions and Wick-series models
//! built from it.

mod model;
mod resum;
mod smear;
mod transfer;
mod two_point;
mod wick;

pub use model::{gaussian_coefficient, FreeFieldSpec, ModelKind, WickSeriesModel};
pub use resum::{gaussian_model_pointwise, series_tail_bound, wick_pointwise};
pub use smear::{npoint_smeared, two_point_smeared, Estimate, Smearing};
pub use two_point::{two_point, two_point_boundary};
pub use wick::{enumerate_contractions, ContractionGraph};
