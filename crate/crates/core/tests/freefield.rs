use nlrecon::freefield::*;
use nlrecon::numeric::quad::{adaptive, QuadOpts};
use nlrecon::store::Context;
use nlrecon::testfn::GaussPolyFn;
use nlrecon::Error;
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use std::f64::consts::PI;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Power series of the Bessel functions at moderate argument.
fn bessel_series(x: f64) -> (f64, f64, f64, f64) {
    let q = x * x / 4.0;
    let (mut i0, mut j0, mut k_sum, mut y_sum) = (0.0, 0.0, 0.0, 0.0);
    let mut term = 1.0;
    let mut h = 0.0;
    for k in 0..80 {
        if k > 0 {
            term *= q / (k as f64 * k as f64);
            h += 1.0 / k as f64;
        }
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        i0 += term;
        j0 += sign * term;
        k_sum += term * h;
        y_sum -= sign * term * h;
    }
    let lg = (x / 2.0).ln() + EULER_GAMMA;
    let k0 = -lg * i0 + k_sum;
    let y0 = 2.0 / PI * (lg * j0 + y_sum);
    (i0, k0, j0, y0)
}

fn spec() -> FreeFieldSpec {
    FreeFieldSpec::new(1.0).unwrap()
}

#[test]
fn spacelike_two_point_is_bessel_k0() {
    let ctx = Context::uncached();
    for s in [0.5, 1.0, 2.0, 3.5] {
        let w = two_point(&spec(), [c(0.0, 0.0), c(s, 0.0)], &ctx).unwrap();
        let want = bessel_series(s).1 / (2.0 * PI);
        assert!((w.re - want).abs() < 1e-7 * want && w.im.abs() < 1e-12, "s={s}: {w} vs {want}");
    }
    // reference value K₀(2)/2π
    let w = two_point(&spec(), [c(0.0, 0.0), c(2.0, 0.0)], &ctx).unwrap();
    assert!((w.re - 0.018_126_8).abs() < 1e-7);
}

#[test]
fn two_point_parity_and_imaginary_time() {
    let ctx = Context::uncached();
    let a = two_point(&spec(), [c(0.7, -0.4), c(0.3, 0.1)], &ctx).unwrap();
    let b = two_point(&spec(), [c(0.7, -0.4), c(-0.3, -0.1)], &ctx).unwrap();
    assert_eq!(a, b);
    let w = two_point(&spec(), [c(0.0, -1.0), c(0.0, 0.0)], &ctx).unwrap();
    assert!(w.re > 0.0 && w.im.abs() < 1e-14);
    // Euclidean point: W = K₀(m·1)/2π
    assert!((w.re - bessel_series(1.0).1 / (2.0 * PI)).abs() < 1e-9);
}

#[test]
fn two_point_domain_errors() {
    let ctx = Context::uncached();
    assert!(matches!(two_point(&spec(), [c(1.0, 0.0), c(0.5, 0.0)], &ctx), Err(Error::Domain(_))));
    assert!(matches!(two_point(&spec(), [c(0.0, 0.5), c(2.0, 0.0)], &ctx), Err(Error::Domain(_))));
}

#[test]
fn timelike_boundary_value_is_hankel() {
    // W(t − i0, x) = −(Y₀(ms) + i J₀(ms))/4 for future timelike ξ, s = √(t² − x²)
    let ctx = Context::uncached();
    let (t, x): (f64, f64) = (1.3, 0.5);
    let s = (t * t - x * x).sqrt();
    let w = two_point_boundary(&spec(), [t, x], &ctx).unwrap();
    let (_, _, j0, y0) = bessel_series(s);
    let want = c(-y0 / 4.0, -j0 / 4.0);
    assert!((w - want).norm() < 1e-6, "{w} vs {want}");
    // past timelike is the complex conjugate
    let wp = two_point_boundary(&spec(), [-t, x], &ctx).unwrap();
    assert!((wp - want.conj()).norm() < 1e-6);
}

#[test]
fn smeared_two_point_unit_gaussians() {
    let ctx = Context::uncached();
    let f = GaussPolyFn::gaussian(&[0.0, 0.0], 1.0);
    let v = two_point_smeared(&spec(), &f, &f, &ctx).unwrap();
    // momentum space: (1/4π)∫du (2π)² e^{−m² cosh 2u} = π K₀(m²)
    let closed = PI * bessel_series(1.0).1;
    assert!((v - c(closed, 0.0)).norm() < 1e-9 * closed, "{v} vs {closed}");

    // position space: ∫d²ξ π e^{−|ξ|²/4} W(ξ⁰ − i, ξ¹), the time contour shifted
    // into the tube (the Gaussian is entire)
    let opts = QuadOpts { rel_tol: 1e-9, abs_tol: 1e-14, max_intervals: 2000 };
    let outer = adaptive(
        |y| {
            adaptive(
                |t| {
                    let z = c(t, -1.0);
                    let h = (-(z * z + y * y) / 4.0).exp() * PI;
                    h * two_point(&spec(), [z, c(y, 0.0)], &ctx).unwrap()
                },
                -14.0,
                14.0,
                opts,
            )
            .unwrap()
            .value
        },
        -14.0,
        14.0,
        opts,
    )
    .unwrap();
    assert!((outer.value - v).norm() < 1e-6 * v.norm(), "{} vs {v}", outer.value);
}

#[test]
fn smeared_two_point_trivia() {
    let ctx = Context::uncached();
    let f = GaussPolyFn::gaussian(&[0.3, -0.2], 0.8);
    let g = GaussPolyFn::gaussian(&[-0.5, 1.0], 1.2);
    assert_eq!(two_point_smeared(&spec(), &f, &GaussPolyFn::zero(2), &ctx).unwrap(), c(0.0, 0.0));
    let v = two_point_smeared(&spec(), &f, &g, &ctx).unwrap();
    let a = [0.7, -1.9];
    let vt = two_point_smeared(&spec(), &f.translate_st(a), &g.translate_st(a), &ctx).unwrap();
    assert!((v - vt).norm() < 1e-10 * v.norm());
    let p = two_point_smeared(&spec(), &f.dagger_st(), &f, &ctx).unwrap();
    assert!(p.re > 0.0 && p.im.abs() < 1e-10);
}

/// Perfect matchings of labelled legs with no pair inside one vertex.
fn brute_matchings(degrees: &[usize]) -> u128 {
    let owner: Vec<usize> = degrees.iter().enumerate().flat_map(|(v, &r)| std::iter::repeat_n(v, r)).collect();
    fn rec(free: &mut Vec<bool>, owner: &[usize]) -> u128 {
        let Some(first) = free.iter().position(|&f| f) else { return 1 };
        free[first] = false;
        let mut total = 0;
        for j in first + 1..owner.len() {
            if free[j] && owner[j] != owner[first] {
                free[j] = false;
                total += rec(free, owner);
                free[j] = true;
            }
        }
        free[first] = true;
        total
    }
    rec(&mut vec![true; owner.len()], &owner)
}

#[test]
fn contraction_examples() {
    let g = enumerate_contractions(&[2, 2], 16).unwrap();
    assert_eq!(g.len(), 1);
    assert_eq!((g[0].edges[0][1], g[0].weight), (2, 2));
    assert_eq!(brute_matchings(&[2, 2]), 2);
    let g = enumerate_contractions(&[2, 2, 2], 16).unwrap();
    assert_eq!(g.len(), 1);
    assert_eq!(g[0].weight, 8);
    assert_eq!(brute_matchings(&[2, 2, 2]), 8);
    assert!(enumerate_contractions(&[3, 2], 16).unwrap().is_empty());
    assert!(enumerate_contractions(&[4], 16).unwrap().is_empty());
    assert!(matches!(
        enumerate_contractions(&[6, 6, 6], 16),
        Err(Error::CombinatorialBudgetExceeded { total: 18, cap: 16 })
    ));
}

#[test]
fn contraction_weights_count_matchings() {
    // every degree tuple with total ≤ 10 and up to four vertices
    fn tuples(n: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for r in 0..=left {
            cur.push(r);
            tuples(n, left - r, cur, out);
            cur.pop();
        }
    }
    for n in 1..=4 {
        let mut all = Vec::new();
        tuples(n, 10, &mut Vec::new(), &mut all);
        for t in all {
            let graphs = enumerate_contractions(&t, 16).unwrap();
            let total: u128 = graphs.iter().map(|g| g.weight).sum();
            assert_eq!(total, brute_matchings(&t), "degrees {t:?}");
            for g in &graphs {
                for (i, &r) in t.iter().enumerate() {
                    assert_eq!(g.edges[i].iter().sum::<u32>() as usize, r);
                    assert_eq!(g.edges[i][i], 0);
                }
            }
        }
    }
}

#[test]
fn one_point_is_d0_times_integral() {
    let ctx = Context::uncached();
    let model = WickSeriesModel::gaussian(1.0, 0.2, 4).unwrap();
    let f = GaussPolyFn::gaussian(&[0.4, -0.3], 0.7).scale(c(0.5, 0.2));
    let v = npoint_smeared(&model, &Smearing::product(vec![f.clone()]).unwrap(), &ctx).unwrap();
    let want = f.integral().unwrap() * model.coeff(0);
    assert!((v.value - want).norm() < 1e-12 * want.norm());
    let free = WickSeriesModel::free(1.0).unwrap();
    let v = npoint_smeared(&free, &Smearing::product(vec![f]).unwrap(), &ctx).unwrap();
    assert_eq!(v.value, c(0.0, 0.0));
}

#[test]
fn free_two_point_paths_agree() {
    let ctx = Context::uncached();
    let model = WickSeriesModel::free(1.0).unwrap();
    let f = GaussPolyFn::gaussian(&[0.0, 0.0], 0.6);
    let g = GaussPolyFn::gaussian(&[0.5, 1.5], 0.9);
    let direct = two_point_smeared(&spec(), &f, &g, &ctx).unwrap();
    let v = npoint_smeared(&model, &Smearing::product(vec![f.clone(), g.clone()]).unwrap(), &ctx).unwrap();
    assert!((v.value - direct).norm() < 1e-9 * direct.norm() + v.error);
    // joint smearing goes through the tensor rule
    let joint = Smearing::joint(f.tensor(&g)).unwrap();
    let vj = npoint_smeared(&model, &joint, &ctx).unwrap();
    assert!((vj.value - direct).norm() < 1e-8 * direct.norm(), "{} vs {direct}", vj.value);
}

#[test]
fn free_four_point_is_sum_of_pairings() {
    // ⟨φφφφ⟩ = W₁₂W₃₄ + W₁₃W₂₄ + W₁₄W₂₃ for product smearings
    let ctx = Context::uncached();
    let model = WickSeriesModel::free(1.0).unwrap();
    let fs: Vec<GaussPolyFn> =
        (0..4).map(|k| GaussPolyFn::gaussian(&[0.2 * k as f64, 1.1 * k as f64], 0.5 + 0.1 * k as f64)).collect();
    let w = |i: usize, j: usize| two_point_smeared(&spec(), &fs[i], &fs[j], &ctx).unwrap();
    let want = w(0, 1) * w(2, 3) + w(0, 2) * w(1, 3) + w(0, 3) * w(1, 2);
    let v = npoint_smeared(&model, &Smearing::product(fs.clone()).unwrap(), &ctx).unwrap();
    assert!((v.value - want).norm() < 1e-9 * want.norm(), "{} vs {want}", v.value);
}

#[test]
fn narrow_smearing_approaches_pointwise_gaussian_model() {
    let ctx = Context::uncached();
    let (g, s) = (0.3, 2.0);
    // the smearing keeps its mass well away from the light cone
    let model = WickSeriesModel::gaussian(1.0, g, 2).unwrap();
    let value = |sigma: f64| {
        let a = GaussPolyFn::normalized_gaussian2([0.0, 0.0], sigma);
        let b = GaussPolyFn::normalized_gaussian2([0.0, s], sigma);
        npoint_smeared(&model, &Smearing::product(vec![a, b]).unwrap(), &ctx).unwrap()
    };
    let (v1, v2) = (value(0.12), value(0.06));
    // the smearing error is even in σ
    let extrapolated = (v2.value * 4.0 - v1.value) / 3.0;
    let pts = [[c(0.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(s, 0.0)]];
    let exact = gaussian_model_pointwise(&spec(), g, &pts, &ctx).unwrap();
    let w = two_point(&spec(), [c(0.0, 0.0), c(s, 0.0)], &ctx).unwrap().re;
    let binomial: f64 = (0..30).map(|k| binom(2 * k, k) * (g * w).powi(2 * k as i32)).sum();
    assert!((exact.re - binomial).abs() < 1e-12 && exact.im.abs() < 1e-15);
    let tail = series_tail_bound(&model, 2, w).unwrap();
    let dev = (extrapolated - exact).norm();
    assert!(dev < 0.02 * (exact.re - 1.0) + tail, "deviation {dev:e}, tail {tail:e}");
}

fn binom(n: usize, k: usize) -> f64 {
    (0..k).map(|i| (n - i) as f64 / (i + 1) as f64).product()
}

#[test]
fn gaussian_model_series_agreement() {
    // deterministic spread of spacelike configurations
    let ctx = Context::uncached();
    let configs: [&[[f64; 2]]; 4] = [
        &[[0.0, 0.0], [0.3, 1.5]],
        &[[0.0, -1.0], [0.2, 1.2]],
        &[[0.0, 0.0], [0.1, 1.0], [-0.2, 2.3]],
        &[[0.4, -1.5], [0.0, 0.0], [0.3, 1.6]],
    ];
    for pts in configs {
        let n = pts.len();
        let p: Vec<[C64; 2]> = pts.iter().map(|x| [c(x[0], 0.0), c(x[1], 0.0)]).collect();
        let mut w_max: f64 = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                let xi = [p[i][0] - p[j][0], p[i][1] - p[j][1]];
                w_max = w_max.max(two_point(&spec(), xi, &ctx).unwrap().norm());
            }
        }
        // spectral radius of 2gK ≤ 2g(n−1)W_max ≤ 0.5
        let g = 0.5 / (2.0 * (n - 1) as f64 * w_max) * 0.9;
        let exact = gaussian_model_pointwise(&spec(), g, &p, &ctx).unwrap();
        let r = if n == 2 { 6 } else { 4 };
        let model = WickSeriesModel::gaussian(1.0, g, r).unwrap();
        let truncated = wick_pointwise(&model, &p, &ctx).unwrap();
        let bound = series_tail_bound(&model, n, w_max).unwrap();
        assert!(bound > 0.0);
        assert!((exact - truncated).norm() <= bound, "n={n}: |Δ| = {:e} > {bound:e}", (exact - truncated).norm());
    }
}

#[test]
fn gaussian_model_divergence_is_reported() {
    let ctx = Context::uncached();
    let p = [[c(0.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(0.05, 0.0)]];
    let w = two_point(&spec(), [c(0.0, 0.0), c(0.05, 0.0)], &ctx).unwrap().re;
    let g = 0.6 / w;
    assert!(matches!(gaussian_model_pointwise(&spec(), g, &p, &ctx), Err(Error::SeriesDivergent(_))));
}

#[test]
fn tail_bound_matches_direct_series() {
    let (g, w, n): (f64, f64, usize) = (0.3, 0.1, 2);
    let direct = |r_cut: usize| {
        let ln_fact = |k: usize| (1..=k).map(|j| (j as f64).ln()).sum::<f64>();
        let mut sum = 0.0;
        for r1 in (0..=400).step_by(2) {
            for r2 in (0..=400).step_by(2) {
                if r1 <= r_cut && r2 <= r_cut {
                    continue;
                }
                let s = r1 + r2;
                let ln_dfact = ln_fact(s) - (s / 2) as f64 * 2f64.ln() - ln_fact(s / 2);
                let ln_t = 0.5 * s as f64 * (2.0 * g * w).ln() + ln_dfact - 0.5 * (ln_fact(r1) + ln_fact(r2));
                sum += ln_t.exp();
            }
        }
        sum
    };
    let b10 = series_tail_bound(&WickSeriesModel::gaussian(1.0, g, 10).unwrap(), n, w).unwrap();
    let b12 = series_tail_bound(&WickSeriesModel::gaussian(1.0, g, 12).unwrap(), n, w).unwrap();
    assert!(b10 > 0.0 && b12 < b10);
    assert!((b10 - direct(10)).abs() < 1e-9 * b10, "{b10:e} vs {:e}", direct(10));
    assert!((b12 - direct(12)).abs() < 1e-9 * b12);
}

fn small_gaussian(x0: f64, x1: f64, s: f64, phase: f64) -> GaussPolyFn {
    GaussPolyFn::gaussian(&[x0, x1], s).scale(C64::from_polar(1.0, phase))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn smeared_functionals_are_hermitian(
        a in (-1.0f64..1.0, -2.0f64..2.0, 0.4f64..1.0, 0.0f64..6.0),
        b in (-1.0f64..1.0, -2.0f64..2.0, 0.4f64..1.0, 0.0f64..6.0),
        d in (-1.0f64..1.0, -2.0f64..2.0, 0.4f64..1.0, 0.0f64..6.0),
    ) {
        let ctx = Context::uncached();
        let model = WickSeriesModel::gaussian(1.0, 0.2, 2).unwrap();
        let s = Smearing::product(vec![
            small_gaussian(a.0, a.1, a.2, a.3),
            small_gaussian(b.0, b.1, b.2, b.3),
            small_gaussian(d.0, d.1, d.2, d.3),
        ]).unwrap();
        let v = npoint_smeared(&model, &s, &ctx).unwrap();
        let vd = npoint_smeared(&model, &s.dagger(), &ctx).unwrap();
        let tol = 1e-9 * v.value.norm().max(1e-3) + v.error + vd.error;
        prop_assert!((v.value - vd.value.conj()).norm() < tol, "{} vs {}", v.value, vd.value.conj());
    }

    #[test]
    fn smeared_functionals_are_translation_invariant(
        a in (-1.0f64..1.0, -2.0f64..2.0, 0.4f64..1.0),
        b in (-1.0f64..1.0, -2.0f64..2.0, 0.4f64..1.0),
        shift in (-3.0f64..3.0, -3.0f64..3.0),
    ) {
        let ctx = Context::uncached();
        let model = WickSeriesModel::gaussian(1.0, 0.2, 2).unwrap();
        let s = Smearing::product(vec![small_gaussian(a.0, a.1, a.2, 0.0), small_gaussian(b.0, b.1, b.2, 1.0)]).unwrap();
        let v = npoint_smeared(&model, &s, &ctx).unwrap();
        let vt = npoint_smeared(&model, &s.translate([shift.0, shift.1]), &ctx).unwrap();
        prop_assert!((v.value - vt.value).norm() < 1e-9 * v.value.norm());
    }
}
