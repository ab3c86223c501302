//! Reconstruction of quantum field operators from Wightman functionals for a
//! 1+1-dimensional massive scalar field and its normal-ordered nonlocal
//! deformations, together with numerical checks of the Wightman axioms and
//! of quasilocality.
//!
//! Conventions: metric signature `(+,−)`, `p·x = p⁰x⁰ − p¹x¹`, spacetime
//! blocks of dimension [`BLOCK_DIM`], and the max-norm `|z| = max_j |z_j|`.

pub mod error;
pub mod numeric;
pub mod store;
pub mod testfn;
pub mod freefield;
pub mod gns;
pub mod quasiloc;

pub use error::{Error, Result};

/// Number of real coordinates per spacetime point.
pub const BLOCK_DIM: usize = 2;
