//! Commutator and permutation-difference functionals and carrier profiles
//! against cone-region norms.

mod carrier;
mod commutator;

pub use carrier::{carrier_profile, spacelike_pair, CarrierProfile, Functional};
pub use commutator::{commutator_element, exchange_map, pauli_jordan_smeared, permutation_difference, swapped};
