use num_complex::Complex64 as C64;

use super::commutator::{commutator_element, pauli_jordan_smeared, permutation_difference};
use crate::error::{Error, Result};
use crate::freefield::{FreeFieldSpec, WickSeriesModel};
use crate::gns::{BorchersVector, Dictionary};
use crate::numeric::poly::Poly;
use crate::numeric::ZERO;
use crate::store::Context;
use crate::testfn::{norm_sup, Base, GaussPolyFn, NormIndex};

/// Linear functional whose carrier is probed.
pub enum Functional<'a> {
    Zero,
    /// `f ↦ ⟨Φ, [φ, φ](f) Ψ⟩`.
    Commutator { model: &'a WickSeriesModel, dict: &'a Dictionary, phi: &'a BorchersVector, psi: &'a BorchersVector },
    /// Vacuum commutator of the free field, by direct quadrature.
    PauliJordan { spec: FreeFieldSpec },
    /// `f ↦ (𝒲_n, f) − (𝒲_n, f ∘ swap_k)` in relative coordinates.
    PermutationDifference { model: &'a WickSeriesModel, n: usize, k: usize },
}

impl Functional<'_> {
    pub fn eval(&self, f: &GaussPolyFn, ctx: &Context) -> Result<C64> {
        match self {
            Functional::Zero => Ok(ZERO),
            Functional::Commutator { model, dict, phi, psi } => commutator_element(model, dict, phi, psi, f, ctx),
            Functional::PauliJordan { spec } => pauli_jordan_smeared(spec, f),
            Functional::PermutationDifference { model, n, k } => permutation_difference(model, *n, *k, f, ctx),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Functional::Zero => "zero".into(),
            Functional::Commutator { model, .. } => format!("commutator(g={})", model.g),
            Functional::PauliJordan { spec } => format!("pauli_jordan(m={})", spec.mass),
            Functional::PermutationDifference { model, n, k } => format!("permutation_difference(g={}, n={n}, k={k})", model.g),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CarrierProfile {
    pub family_params: Vec<f64>,
    pub ratios: Vec<f64>,
    pub norm_index: NormIndex,
    pub functional_label: String,
}

/// `|(u, f_s)| / ‖f_s‖_{O,l,N}` for each `s` in `params`; `O` is the base
/// of `idx` and must be `LIGHTCONE_W` or `CONE_VK`.
pub fn carrier_profile(
    functional: &Functional,
    idx: &NormIndex,
    family: impl Fn(f64) -> GaussPolyFn,
    params: &[f64],
    ctx: &Context,
) -> Result<CarrierProfile> {
    if !matches!(idx.base, Base::LightconeW | Base::ConeVk { .. }) {
        return Err(Error::InvalidInput(format!("carrier region must be LIGHTCONE_W or CONE_VK, got {:?}", idx.base)));
    }
    let mut ratios = Vec::with_capacity(params.len());
    for &s in params {
        let f = family(s);
        if f.dim() != idx.base.dim() {
            return Err(Error::BlockMismatch(format!("family function has dimension {}, region {}", f.dim(), idx.base.dim())));
        }
        let u = functional.eval(&f, ctx)?;
        ratios.push(if u == ZERO { 0.0 } else { u.norm() / norm_sup(&f, idx)? });
    }
    Ok(CarrierProfile { family_params: params.to_vec(), ratios, norm_index: idx.clone(), functional_label: functional.label() })
}

/// `f_s(x, x′) = (x⁰ − x′⁰) g(x − (0, s/2)) g(x′ + (0, s/2))` with isotropic
/// Gaussians of width `sigma`: a pair at spacelike separation `s` about the
/// origin. The time-odd factor matters: commutators are odd in `ξ⁰`, so
/// they vanish on the bare time-symmetric Gaussian pair.
pub fn spacelike_pair(s: f64, sigma: f64) -> GaussPolyFn {
    let dt = Poly::variable(4, 0).add(&Poly::variable(4, 2).scale(C64::new(-1.0, 0.0)));
    GaussPolyFn::gaussian(&[0.0, s / 2.0, 0.0, -s / 2.0], sigma).mul_poly(&dt)
}
