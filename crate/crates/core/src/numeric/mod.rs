//! Numerical building blocks shared by the physics modules.

pub mod linalg;
pub mod poly;
pub mod qmc;
pub mod quad;

pub use num_complex::Complex64 as C64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}
