use num_complex::Complex64 as C64;

use super::model::FreeFieldSpec;
use crate::error::{Error, Result};
use crate::numeric::quad::{adaptive, QuadOpts};
use crate::store::{Context, KeyBuilder};

/// `W(ξ) = (1/4π) ∫ dk/ω_k e^{−iω_k ξ⁰ + i k ξ¹}` for `ξ` in the backward tube
/// `Im ξ ∈ −V⁺` or real spacelike.
///
/// On-shell, `k = m sinh u`; shifting the rapidity contour to the saddle
/// gives `W(ξ) = (1/4π) ∫ dv exp(−m ζ cosh v)` with `ζ = √(−ξ²)`, `Re ζ > 0`,
/// a non-oscillatory, doubly exponentially decaying integrand.
pub fn two_point(spec: &FreeFieldSpec, xi: [C64; 2], ctx: &Context) -> Result<C64> {
    let xi = [round12(xi[0]), round12(xi[1])];
    let in_tube = xi[0].im < -xi[1].im.abs();
    let spacelike = xi[0].im == 0.0 && xi[1].im == 0.0 && xi[1].re.abs() > xi[0].re.abs();
    if !in_tube && !spacelike {
        return Err(Error::Domain(format!(
            "ξ = ({}, {}) is neither in the backward tube nor real spacelike",
            xi[0], xi[1]
        )));
    }
    let key = ctx.salt(KeyBuilder::new("two_point").f64(spec.mass).c64(xi[0]).c64(xi[1])).finish();
    let v = ctx.memo(key, || {
        let w = contour_integral(spec.mass, xi, ctx.rel_tol)?;
        Ok::<_, Error>(vec![w.re, w.im])
    })?;
    Ok(C64::new(v[0], v[1]))
}

/// Boundary value at a real point: spacelike points directly, timelike points
/// by Richardson extrapolation of `ξ⁰ − iη` over `η = η₀, η₀/2, η₀/4`.
pub fn two_point_boundary(spec: &FreeFieldSpec, xi: [f64; 2], ctx: &Context) -> Result<C64> {
    if xi[1].abs() > xi[0].abs() {
        return two_point(spec, [C64::new(xi[0], 0.0), C64::new(xi[1], 0.0)], ctx);
    }
    let s = (xi[0] * xi[0] - xi[1] * xi[1]).abs().sqrt();
    if s == 0.0 {
        return Err(Error::Domain("W is singular on the light cone".into()));
    }
    let eta0 = 1e-2 * s.min(1.0 / spec.mass);
    let at = |eta: f64| two_point(spec, [C64::new(xi[0], -eta), C64::new(xi[1], 0.0)], ctx);
    let (a0, a1, a2) = (at(eta0)?, at(eta0 / 2.0)?, at(eta0 / 4.0)?);
    // eliminate the O(η) and O(η²) terms
    let r1 = [a1 * 2.0 - a0, a2 * 2.0 - a1];
    Ok((r1[1] * 4.0 - r1[0]) / 3.0)
}

fn round12(z: C64) -> C64 {
    let r = |x: f64| {
        if x == 0.0 || !x.is_finite() {
            x
        } else {
            format!("{x:.11e}").parse().unwrap_or(x)
        }
    };
    C64::new(r(z.re), r(z.im))
}

fn contour_integral(m: f64, xi: [C64; 2], rel_tol: f64) -> Result<C64> {
    let minus_sq = xi[1] * xi[1] - xi[0] * xi[0];
    let zeta = minus_sq.sqrt();
    let a = m * zeta;
    if !(a.re > 0.0) {
        return Err(Error::Domain(format!("√(−ξ²) = {zeta} has no positive real part")));
    }
    // beyond |v| = V the integrand is below e^{−45} of its peak
    let v_max = (45.0 / a.re).max(1.0).acosh() + 1.0;
    let opts = QuadOpts { rel_tol, abs_tol: 1e-300, max_intervals: 2000 };
    let r = adaptive(|v| (-a * v.cosh()).exp(), 0.0, v_max, opts)?;
    Ok(r.value * 2.0 / (4.0 * std::f64::consts::PI))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_points_outside_domain() {
        let spec = FreeFieldSpec::new(1.0).unwrap();
        let ctx = Context::default();
        let r = two_point(&spec, [C64::new(1.0, 0.0), C64::new(0.5, 0.0)], &ctx);
        assert!(matches!(r, Err(Error::Domain(_))));
        let r = two_point(&spec, [C64::new(0.0, 0.5), C64::new(0.0, 0.0)], &ctx);
        assert!(matches!(r, Err(Error::Domain(_))));
    }
}
