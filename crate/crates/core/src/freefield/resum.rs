//! Pointwise Wightman functions of Wick-series models: the truncated Wick sum,
//! the closed determinant form of the Gaussian model, and a rigorous bound
//! on the terms dropped by truncation.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::model::{FreeFieldSpec, ModelKind, WickSeriesModel};
use super::two_point::two_point;
use super::wick::enumerate_contractions;
use crate::error::{Error, Result};
use crate::numeric::linalg::spectral_radius;
use crate::numeric::{ONE, ZERO};
use crate::store::Context;

const HOMOTOPY_STEPS: usize = 16;

/// `K_ij = K_ji = W(x_i − x_j)` for `i < j`, zero diagonal.
fn pair_matrix(spec: &FreeFieldSpec, points: &[[C64; 2]], ctx: &Context) -> Result<DMatrix<C64>> {
    let n = points.len();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let xi = [points[i][0] - points[j][0], points[i][1] - points[j][1]];
            let w = two_point(spec, xi, ctx)?;
            k[(i, j)] = w;
            k[(j, i)] = w;
        }
    }
    Ok(k)
}

/// `⟨Π_i :e^{gφ²}:(x_i)⟩ = det(I − 2gK)^{−1/2}`, the square root continued
/// from `g = 0` along the straight homotopy.
///
/// Points must be ordered so that every `x_i − x_j` with `i < j` lies in the
/// backward tube or is real spacelike.
pub fn gaussian_model_pointwise(spec: &FreeFieldSpec, g: f64, points: &[[C64; 2]], ctx: &Context) -> Result<C64> {
    if points.len() <= 1 || g == 0.0 {
        return Ok(ONE);
    }
    let k = pair_matrix(spec, points, ctx)?;
    let rho = spectral_radius(&(&k * C64::new(2.0 * g, 0.0)));
    if rho >= 1.0 {
        return Err(Error::SeriesDivergent(format!("spectral radius of 2gK is {rho:.6} ≥ 1")));
    }
    let n = points.len();
    let mut root = ONE;
    for step in 1..=HOMOTOPY_STEPS {
        let gs = g * step as f64 / HOMOTOPY_STEPS as f64;
        let m = DMatrix::<C64>::identity(n, n) - &k * C64::new(2.0 * gs, 0.0);
        let s = m.determinant().sqrt();
        root = if (s - root).norm() <= (s + root).norm() { s } else { -s };
    }
    Ok(root.inv())
}

/// Truncated Wick sum `Σ_tuples Π d_{r_i}/r_i! Σ_graphs weight Π W_ij^{l_ij}`
/// at points ordered as for [`gaussian_model_pointwise`].
pub fn wick_pointwise(model: &WickSeriesModel, points: &[[C64; 2]], ctx: &Context) -> Result<C64> {
    let n = points.len();
    if n == 0 {
        return Ok(ONE);
    }
    let k = pair_matrix(&model.base, points, ctx)?;
    let support = model.support();
    let mut total = ZERO;
    let mut tuple = vec![0usize; n];
    let mut idx = vec![0usize; n];
    if support.is_empty() {
        return Ok(ZERO);
    }
    loop {
        for (t, &i) in tuple.iter_mut().zip(&idx) {
            *t = support[i];
        }
        let pref: f64 = tuple.iter().map(|&r| model.coeff(r) / factorial(r)).product();
        for graph in enumerate_contractions(&tuple, ctx.wick_cap)? {
            let mut term = C64::new(graph.weight as f64 * pref, 0.0);
            for (i, j) in graph.edge_list() {
                term *= k[(i, j)];
            }
            total += term;
        }
        // odometer over support^n
        let mut p = 0;
        loop {
            if p == n {
                return Ok(total);
            }
            idx[p] += 1;
            if idx[p] < support.len() {
                break;
            }
            idx[p] = 0;
            p += 1;
        }
    }
}

fn factorial(r: usize) -> f64 {
    (1..=r).map(|k| k as f64).product()
}

fn ln_factorial(r: usize) -> f64 {
    (1..=r).map(|k| (k as f64).ln()).sum()
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

const MAX_TOTAL_DEGREE: usize = 4000;

/// Upper bound on the `n`-point terms dropped by truncating at the model's
/// order `R`.
///
/// With `|d_r| ≤ √(C (2g)^r r!)` and at most `(S−1)!!` contraction patterns
/// of `S` legs, each with `|Π W^{l}| ≤ W_max^{S/2}`, a tuple of total degree
/// `S` contributes at most `C^{n/2} (2g W_max)^{S/2} (S−1)!! Π (r_i!)^{−1/2}`.
/// The bound sums this over tuples with some `r_i > R`; it converges iff
/// `2 g W_max n < 1`.
pub fn series_tail_bound(model: &WickSeriesModel, n: usize, w_max: f64) -> Result<f64> {
    if !(w_max >= 0.0) {
        return Err(Error::InvalidInput(format!("W_max must be non-negative, got {w_max}")));
    }
    if model.kind == ModelKind::Finite || model.g == 0.0 || n == 0 || w_max == 0.0 {
        return Ok(0.0);
    }
    let q = 2.0 * model.g * w_max;
    if q * n as f64 >= 1.0 {
        return Err(Error::SeriesDivergent(format!(
            "bounding series needs 2·g·W_max·n < 1, got {:.6}",
            q * n as f64
        )));
    }
    let r_cut = model.truncation_order();
    // the preset has even orders only
    let step = 2;
    let ln_q = q.ln();
    let ln_c = model.bound_c.ln();
    let max_s = MAX_TOTAL_DEGREE;
    let len = max_s / step + 1;
    // a[k] = ln (r!)^{−1/2} for r = step·k, split at the truncation order
    let a: Vec<f64> = (0..len).map(|k| -0.5 * ln_factorial(step * k)).collect();
    let mut low = vec![f64::NEG_INFINITY; len];
    let mut high = vec![f64::NEG_INFINITY; len];
    low[0] = 0.0;
    for _ in 0..n {
        let mut nl = vec![f64::NEG_INFINITY; len];
        let mut nh = vec![f64::NEG_INFINITY; len];
        for s in 0..len {
            if low[s] == f64::NEG_INFINITY && high[s] == f64::NEG_INFINITY {
                continue;
            }
            for k in 0..len - s {
                let r = step * k;
                let t = s + k;
                if r <= r_cut {
                    nl[t] = log_add(nl[t], low[s] + a[k]);
                    nh[t] = log_add(nh[t], high[s] + a[k]);
                } else {
                    nh[t] = log_add(nh[t], log_add(low[s], high[s]) + a[k]);
                }
            }
        }
        low = nl;
        high = nh;
    }
    let mut ln_sum = f64::NEG_INFINITY;
    let mut last = f64::NEG_INFINITY;
    for (k, &h) in high.iter().enumerate() {
        if h == f64::NEG_INFINITY {
            continue;
        }
        let s = step * k;
        // ln (S−1)!! = ln S! − (S/2) ln 2 − ln (S/2)!
        let ln_dfact = ln_factorial(s) - (s / 2) as f64 * 2f64.ln() - ln_factorial(s / 2);
        let term = 0.5 * n as f64 * ln_c + 0.5 * s as f64 * ln_q + ln_dfact + h;
        ln_sum = log_add(ln_sum, term);
        last = term;
    }
    if last > ln_sum - 36.0 {
        return Err(Error::SeriesDivergent(format!(
            "bounding series not summed to precision within total degree {max_s}"
        )));
    }
    Ok(ln_sum.exp())
}
