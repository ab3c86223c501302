use nalgebra::DVector;
use nlrecon::freefield::*;
use nlrecon::gns::*;
use nlrecon::numeric::poly::Poly;
use nlrecon::quasiloc::*;
use nlrecon::store::Context;
use nlrecon::testfn::{Base, GaussPolyFn, NormIndex};
use nlrecon::Error;
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn free() -> WickSeriesModel {
    WickSeriesModel::free(1.0).unwrap()
}

fn vacuum_commutator(model: &WickSeriesModel, f: &GaussPolyFn, ctx: &Context) -> C64 {
    let vac = BorchersVector::vacuum();
    commutator_element(model, &Dictionary::standard(), &vac, &vac, f, ctx).unwrap()
}

/// Pauli–Jordan smearing of `g(x − c1) g(x′ − c2)` with unit-height
/// Gaussians of width `sigma`, from the closed-form transform
/// `ĝ(b) = 2πσ² e^{−σ²|b|²/2 − i b·c}` and a trapezoid in the rapidity.
fn pauli_jordan_pair(c1: [f64; 2], c2: [f64; 2], sigma: f64) -> C64 {
    let ft = |b: [f64; 2], c: [f64; 2]| {
        C64::from_polar(2.0 * PI * sigma * sigma * (-sigma * sigma * (b[0] * b[0] + b[1] * b[1]) / 2.0).exp(), -(b[0] * c[0] + b[1] * c[1]))
    };
    let n = 40_000;
    let (lo, hi) = (-7.0_f64, 7.0_f64);
    let h = (hi - lo) / n as f64;
    let sum: C64 = (0..=n)
        .map(|k| {
            let u = lo + k as f64 * h;
            let w = if k == 0 || k == n { 0.5 } else { 1.0 };
            let b = [u.cosh(), -u.sinh()];
            let mb = [-b[0], -b[1]];
            (ft(b, c1) * ft(mb, c2) - ft(mb, c1) * ft(b, c2)) * (w * h)
        })
        .sum();
    sum / (4.0 * PI)
}

/// Polynomial × Gaussian on `ℝ⁴` with random center, anisotropic width,
/// a linear polynomial factor and a complex amplitude.
fn random_two_block(rng: &mut ChaCha8Rng) -> GaussPolyFn {
    let center: Vec<f64> = (0..4).map(|_| rng.random_range(-1.5..1.5)).collect();
    let a = nalgebra::DMatrix::from_fn(4, 4, |i, j| {
        if i == j {
            C64::new(rng.random_range(0.4..2.0), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let c = DVector::from_iterator(4, center.iter().map(|&x| C64::new(x, 0.0)));
    let mut p = Poly::constant(4, C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    for j in 0..4 {
        p = p.add(&Poly::variable(4, j).scale(C64::new(rng.random_range(-1.0..1.0), 0.0)));
    }
    GaussPolyFn::new(p, a, c).unwrap()
}

#[test]
fn pauli_jordan_matches_closed_form() {
    for (c1, c2) in [([0.4, 0.0], [-0.3, 0.2]), ([0.5, 1.5], [0.0, -1.5]), ([-1.0, 0.3], [1.0, -0.2])] {
        let f = GaussPolyFn::gaussian(&[c1[0], c1[1], c2[0], c2[1]], 0.5);
        let v = pauli_jordan_smeared(&free().base, &f).unwrap();
        let oracle = pauli_jordan_pair(c1, c2, 0.5);
        assert!((v - oracle).norm() <= 1e-9 * oracle.norm(), "{v} vs {oracle}");
    }
}

#[test]
fn commutator_matches_pauli_jordan_on_vacuum() {
    let ctx = Context::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let f = random_two_block(&mut rng);
        let a = vacuum_commutator(&free(), &f, &ctx);
        let b = pauli_jordan_smeared(&free().base, &f).unwrap();
        assert!((a - b).norm() <= 1e-8 * b.norm(), "{a} vs {b}");
    }
}

#[test]
fn commutator_unfolds_to_two_point_difference() {
    let ctx = Context::default();
    let f = GaussPolyFn::gaussian(&[0.3, 0.1, -0.2, 0.4], 0.7);
    let w = |g: GaussPolyFn| npoint_smeared(&free(), &Smearing::new(vec![g]).unwrap(), &ctx).unwrap().value;
    let expected = w(f.clone()) - w(swapped(&f).unwrap());
    assert!((vacuum_commutator(&free(), &f, &ctx) - expected).norm() < 1e-12);
}

#[test]
fn symmetric_functions_give_exact_zero() {
    let ctx = Context::default();
    let f = GaussPolyFn::gaussian(&[0.2, -0.1, 0.2, -0.1], 0.6);
    assert_eq!(swapped(&f).unwrap(), f);
    assert_eq!(vacuum_commutator(&free(), &f, &ctx), C64::new(0.0, 0.0));
    assert_eq!(pauli_jordan_smeared(&free().base, &f).unwrap(), C64::new(0.0, 0.0));
    let gm = WickSeriesModel::gaussian(1.0, 0.3, 2).unwrap();
    assert_eq!(vacuum_commutator(&gm, &f, &ctx), C64::new(0.0, 0.0));
}

#[test]
fn commutator_is_antisymmetric_bitwise() {
    let ctx = Context::default();
    let gm = WickSeriesModel::gaussian(1.0, 0.3, 2).unwrap();
    let f = GaussPolyFn::gaussian(&[0.5, 0.2, -0.1, -0.4], 0.8);
    let fs = swapped(&f).unwrap();
    assert_eq!(swapped(&fs).unwrap(), f);
    for model in [free(), gm] {
        let a = vacuum_commutator(&model, &f, &ctx);
        let b = vacuum_commutator(&model, &fs, &ctx);
        assert!(a.norm() > 1e-6);
        assert_eq!(a, -b);
    }
}

#[test]
fn commutator_on_excited_states() {
    let ctx = Context::default();
    let dict = Dictionary::standard();
    let phi = BorchersVector::word(&dict, &[0]);
    let psi = BorchersVector::word(&dict, &[1]);
    let f = GaussPolyFn::gaussian(&[0.5, 0.2, -0.1, -0.4], 0.8);
    let a = commutator_element(&free(), &dict, &phi, &psi, &f, &ctx).unwrap();
    let b = commutator_element(&free(), &dict, &phi, &psi, &swapped(&f).unwrap(), &ctx).unwrap();
    assert_eq!(a, -b);
    // the free commutator is a c-number: ⟨Φ, [φ, φ](f) Ψ⟩ = PJ(f) ⟨Φ, Ψ⟩
    let overlap = s_form(&free(), &phi, &psi, &ctx).unwrap().value;
    let expected = pauli_jordan_smeared(&free().base, &f).unwrap() * overlap;
    assert!((a - expected).norm() <= 1e-8 * expected.norm(), "{a} vs {expected}");
}

#[test]
fn commutator_degree_limit() {
    let ctx = Context::default();
    let dict = Dictionary::new(vec![GaussPolyFn::gaussian(&[0.0, 0.0], 1.0)], 2).unwrap();
    let phi = BorchersVector::word(&dict, &[0]);
    let f = GaussPolyFn::gaussian(&[0.5, 0.2, -0.1, -0.4], 0.8);
    let r = commutator_element(&free(), &dict, &phi, &BorchersVector::vacuum(), &f, &ctx);
    assert!(matches!(r, Err(Error::DegreeOverflow(_))));
    let r = commutator_element(&free(), &dict, &BorchersVector::vacuum(), &BorchersVector::vacuum(), &GaussPolyFn::gaussian(&[0.0, 0.0], 1.0), &ctx);
    assert!(matches!(r, Err(Error::BlockMismatch(_))));
}

#[test]
fn spacelike_suppression() {
    // Gaussian pair with a time offset so that the s = 0 value is generic
    let at = |s: f64| pauli_jordan_smeared(&free().base, &GaussPolyFn::gaussian(&[0.3, s / 2.0, -0.2, -s / 2.0], 0.5)).unwrap();
    let (v0, v3) = (at(0.0), at(3.0));
    assert!((v3 - pauli_jordan_pair([0.3, 1.5], [-0.2, -1.5], 0.5)).norm() <= 1e-9 * v3.norm());
    // difference variable has variance 2σ², and its center is s/√2 from the
    // light cone: e^{−s²/(8σ²)}
    let tail = (-9.0_f64 / (8.0 * 0.25)).exp();
    assert!(v3.norm() < 2.0 * tail * v0.norm(), "{} vs {}", v3.norm(), v0.norm());
    assert!(v3.norm() > 0.1 * tail * v0.norm());
}

#[test]
fn exchange_map_is_an_involution() {
    for (n, k) in [(2, 1), (3, 1), (3, 2), (4, 2)] {
        let m = exchange_map(n, k);
        assert_eq!(&m * &m, nalgebra::DMatrix::identity(m.nrows(), m.ncols()));
    }
}

#[test]
fn two_point_permutation_difference_is_pauli_jordan() {
    let ctx = Context::default();
    let t = Poly::variable(2, 0).add(&Poly::constant(2, C64::new(0.3, 0.0)));
    let h = GaussPolyFn::gaussian(&[0.3, 1.0], 0.6).mul_poly(&t);
    let v = permutation_difference(&free(), 2, 1, &h, &ctx).unwrap();
    // the same smearing seen as a two-block function χ(x) h(x − x′)
    let anchor = GaussPolyFn::normalized_gaussian2([0.0, 0.0], 1.0);
    let lifted = anchor.tensor(&h).from_relative().unwrap();
    let oracle = pauli_jordan_smeared(&free().base, &lifted).unwrap();
    assert!((v - oracle).norm() <= 1e-8 * oracle.norm(), "{v} vs {oracle}");
}

#[test]
fn exchange_invariant_functions_give_exact_zero() {
    let ctx = Context::default();
    let even = GaussPolyFn::gaussian(&[0.0, 0.0], 0.7);
    assert_eq!(permutation_difference(&free(), 2, 1, &even, &ctx).unwrap(), C64::new(0.0, 0.0));
    let gm = WickSeriesModel::gaussian(1.0, 0.2, 2).unwrap();
    // exp(−ξ₁²/2 − (ξ₂ + ξ₁/2)²) componentwise is invariant under S₁ for n = 3
    let a = nalgebra::DMatrix::from_fn(4, 4, |i, j| {
        let (bi, bj) = (i / 2, j / 2);
        let v = match (bi, bj) {
            _ if i % 2 != j % 2 => 0.0,
            (0, 0) => 0.75,
            (1, 1) => 1.0,
            _ => 0.5,
        };
        C64::new(v, 0.0)
    });
    let f = GaussPolyFn::new(Poly::one(4), a, DVector::zeros(4)).unwrap();
    assert_eq!(permutation_difference(&gm, 3, 1, &f, &ctx).unwrap(), C64::new(0.0, 0.0));
}

#[test]
fn three_point_difference_separates_models() {
    let ctx = Context::default();
    let gm = WickSeriesModel::gaussian(1.0, 0.2, 2).unwrap();
    // ξ₁ centered at spacelike (0, 2) with a time-odd factor, ξ₂ generic
    let t = Poly::variable(4, 0);
    let f = GaussPolyFn::gaussian(&[0.0, 2.0, 0.5, 0.0], 0.7).mul_poly(&t);
    let nonlocal = permutation_difference(&gm, 3, 1, &f, &ctx).unwrap();
    let local = permutation_difference(&free(), 3, 1, &f, &ctx).unwrap();
    assert!(local.norm() < 1e-12, "{local}");
    assert!(nonlocal.norm() > 1e-6, "{nonlocal}");
}

#[test]
fn permutation_difference_rejects_bad_input() {
    let ctx = Context::default();
    let h = GaussPolyFn::gaussian(&[0.3, 1.0], 0.6);
    for (n, k) in [(2, 0), (2, 2), (1, 1)] {
        assert!(matches!(permutation_difference(&free(), n, k, &h, &ctx), Err(Error::InvalidInput(_))));
    }
    assert!(matches!(permutation_difference(&free(), 3, 1, &h, &ctx), Err(Error::BlockMismatch(_))));
}

#[test]
fn zero_functional_profile() {
    let ctx = Context::default();
    let idx = NormIndex::new(Base::LightconeW, 0.25, 0).unwrap();
    let params = [1.0, 2.0, 3.0];
    let p = carrier_profile(&Functional::Zero, &idx, |s| spacelike_pair(s, 0.5), &params, &ctx).unwrap();
    assert_eq!(p.ratios, vec![0.0; 3]);
    assert_eq!(p.family_params, params.to_vec());
    assert_eq!(p.functional_label, "zero");
    let full = NormIndex::full(4, 0.25, 0).unwrap();
    let r = carrier_profile(&Functional::Zero, &full, |s| spacelike_pair(s, 0.5), &params, &ctx);
    assert!(matches!(r, Err(Error::InvalidInput(_))));
}

#[test]
fn spacelike_pair_is_antisymmetric() {
    let f = spacelike_pair(2.0, 0.5);
    assert_eq!(f.dim(), 4);
    let x = [C64::new(0.3, 0.0), C64::new(0.8, 0.0), C64::new(-0.4, 0.0), C64::new(-1.1, 0.0)];
    let xs = [x[2], x[3], x[0], x[1]];
    // reflecting space about the origin maps the pair onto its swap
    let xr = [xs[0], -xs[1], xs[2], -xs[3]];
    assert!((f.eval(&x) + f.eval(&xr)).norm() < 1e-15);
}

#[test]
fn free_profile_decreases() {
    let ctx = Context::default();
    let idx = NormIndex::new(Base::LightconeW, 0.25, 0).unwrap();
    let params = [1.0, 2.0, 3.0, 4.0, 5.0];
    let pj = Functional::PauliJordan { spec: free().base };
    let p = carrier_profile(&pj, &idx, |s| spacelike_pair(s, 0.5), &params, &ctx).unwrap();
    assert!(p.ratios.windows(2).all(|w| w[1] < w[0]), "{:?}", p.ratios);
    let vac = BorchersVector::vacuum();
    let model = free();
    let dict = Dictionary::standard();
    let c = Functional::Commutator { model: &model, dict: &dict, phi: &vac, psi: &vac };
    let q = carrier_profile(&c, &idx, |s| spacelike_pair(s, 0.5), &params, &ctx).unwrap();
    for (a, b) in p.ratios.iter().zip(&q.ratios) {
        assert!((a - b).abs() <= 1e-8 * a);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]
    #[test]
    fn swapping_negates_pauli_jordan(c in prop::array::uniform4(-1.5f64..1.5), sigma in 0.4f64..1.2) {
        let f = GaussPolyFn::gaussian(&c, sigma);
        let a = pauli_jordan_smeared(&free().base, &f).unwrap();
        let b = pauli_jordan_smeared(&free().base, &swapped(&f).unwrap()).unwrap();
        prop_assert!((a + b).norm() <= 1e-10 * a.norm().max(1e-300) + 1e-15);
    }
}
