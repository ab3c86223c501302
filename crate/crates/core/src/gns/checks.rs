//! Spectral condition and cluster decomposition, checked on the Wightman
//! sums that define the translated overlaps.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use super::borchers::{s_form, BorchersVector};
use crate::error::{Error, Result};
use crate::freefield::WickSeriesModel;
use crate::numeric::linalg::real_part;
use crate::numeric::ZERO;
use crate::store::Context;
use crate::testfn::GaussPolyFn;

/// Square lattice of translations `a = ((j₀ − N/2)Δ, (j₁ − N/2)Δ)`.
#[derive(Clone, Copy, Debug)]
pub struct SpectralGrid {
    pub points: usize,
    pub spacing: f64,
}

impl Default for SpectralGrid {
    fn default() -> Self {
        Self { points: 64, spacing: 0.25 }
    }
}

#[derive(Clone, Debug)]
pub struct SpectralReport {
    /// Fraction of windowed spectral power farther than `margin` from `V̄⁺`.
    pub residual: f64,
    /// Momentum resolution of the window, `3/σ_w`.
    pub margin: f64,
    /// Fraction of power in the outer quarter of the frequency band.
    pub outer_band: f64,
}

/// Default window: centered Gaussian of width 2.5 in both directions.
pub fn default_window() -> GaussPolyFn {
    GaussPolyFn::gaussian(&[0.0, 0.0], 2.5)
}

/// Distance of `p` from the closed forward cone `p⁰ ≥ |p¹|`.
fn cone_distance(p0: f64, p1: f64) -> f64 {
    let gap = p1.abs() - p0;
    if gap <= 0.0 {
        return 0.0;
    }
    // nearest point is the apex when p lies in the backward cone
    if p0 <= -p1.abs() {
        (p0 * p0 + p1 * p1).sqrt()
    } else {
        gap / std::f64::consts::SQRT_2
    }
}

/// Samples `E(a) = ⟨Ψ_f, U(a)Ψ_g⟩`, multiplies by the window and returns the
/// share of `|Ê(p)|²` outside the forward cone, where
/// `Ê(p) = Σ_a E(a) w(a) e^{−i a·p}` and `U(a) = e^{i a·P}`.
///
/// A windowed transform resolves momenta only to `~1/σ_w`, so points within
/// `3/σ_w` of the cone count as inside; the residual is zero for the zero
/// state.
pub fn spectral_residual(
    model: &WickSeriesModel,
    f: &BorchersVector,
    g: &BorchersVector,
    grid: SpectralGrid,
    window: &GaussPolyFn,
    ctx: &Context,
) -> Result<SpectralReport> {
    let n = grid.points;
    if n < 8 || n % 2 == 1 {
        return Err(Error::InvalidInput(format!("grid needs an even number ≥ 8 of points, got {n}")));
    }
    let d = grid.spacing;
    let coord = |j: usize| (j as f64 - (n / 2) as f64) * d;
    let cells: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
    let mut data: Vec<C64> = cells
        .par_iter()
        .map(|&(i, j)| {
            let a = [coord(i), coord(j)];
            let e = s_form(model, f, &g.translate(a), ctx)?.value;
            Ok(e * window.eval_real(&a))
        })
        .collect::<Result<_>>()?;
    let sigma_w = window_width(window);
    let margin = 3.0 / sigma_w;
    if data.iter().all(|z| *z == ZERO) {
        return Ok(SpectralReport { residual: 0.0, margin, outer_band: 0.0 });
    }
    fft2(&mut data, n);
    let dp = 2.0 * std::f64::consts::PI / (n as f64 * d);
    let freq = |k: usize| if k < n / 2 { k as f64 } else { k as f64 - n as f64 };
    let (mut total, mut outside, mut outer) = (0.0, 0.0, 0.0);
    for k0 in 0..n {
        for k1 in 0..n {
            let w = data[k0 * n + k1].norm_sqr();
            total += w;
            // e^{−2πi(j₀k₀ + j₁k₁)/N} = e^{−i(a⁰p⁰ − a¹p¹)} with p¹ = −k₁Δp
            let (p0, p1) = (freq(k0) * dp, -freq(k1) * dp);
            if cone_distance(p0, p1) > margin {
                outside += w;
            }
            if freq(k0).abs() >= 0.375 * n as f64 || freq(k1).abs() >= 0.375 * n as f64 {
                outer += w;
            }
        }
    }
    let outer_band = outer / total;
    if outer_band > 0.01 {
        return Err(Error::GridTooCoarse(format!("{:.2}% of the windowed power lies near the Nyquist band", 100.0 * outer_band)));
    }
    Ok(SpectralReport { residual: outside / total, margin, outer_band })
}

/// `σ` of the narrowest direction of a Gaussian window `exp(−xᵀAx)`.
fn window_width(w: &GaussPolyFn) -> f64 {
    let a = real_part(w.quad_form());
    let lmax = a.symmetric_eigenvalues().iter().copied().fold(0.0, f64::max);
    (1.0 / (2.0 * lmax)).sqrt()
}

/// In-place 2-D DFT of a row-major `n × n` array.
fn fft2(data: &mut [C64], n: usize) {
    let fft = FftPlanner::new().plan_fft_forward(n);
    for row in data.chunks_mut(n) {
        fft.process(row);
    }
    let mut col = vec![ZERO; n];
    for j in 0..n {
        for i in 0..n {
            col[i] = data[i * n + j];
        }
        fft.process(&mut col);
        for i in 0..n {
            data[i * n + j] = col[i];
        }
    }
}

/// `|s(f, U(λa)g) − s(f, Ω) s(Ω, g)|` for each `λ`.
pub fn cluster_profile(
    model: &WickSeriesModel,
    f: &BorchersVector,
    g: &BorchersVector,
    a: [f64; 2],
    lambdas: &[f64],
    ctx: &Context,
) -> Result<Vec<(f64, f64)>> {
    if a[0] * a[0] - a[1] * a[1] >= 0.0 {
        return Err(Error::NotSpacelike(format!("a = ({}, {}) has a² ≥ 0", a[0], a[1])));
    }
    let vac = BorchersVector::vacuum();
    let factored = s_form(model, f, &vac, ctx)?.value * s_form(model, &vac, g, ctx)?.value;
    lambdas
        .iter()
        .map(|&l| {
            let v = s_form(model, f, &g.translate([l * a[0], l * a[1]]), ctx)?.value;
            Ok((l, (v - factored).norm()))
        })
        .collect()
}
