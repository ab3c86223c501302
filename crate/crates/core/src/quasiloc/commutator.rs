use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::freefield::{npoint_smeared, Estimate, FreeFieldSpec, Smearing, WickSeriesModel};
use crate::gns::{s_form, BorchersVector, Dictionary};
use crate::numeric::linalg::{min_sym_eigenvalue, real_part};
use crate::numeric::quad::{adaptive, QuadOpts};
use crate::numeric::{ONE, ZERO};
use crate::store::Context;
use crate::testfn::GaussPolyFn;
use crate::BLOCK_DIM;

fn check_blocks(f: &GaussPolyFn, n: usize) -> Result<()> {
    if f.dim() != n * BLOCK_DIM {
        return Err(Error::BlockMismatch(format!("expected a function of {n} blocks, got dimension {}", f.dim())));
    }
    Ok(())
}

/// `f(x′, x)` for a two-block `f(x, x′)`.
pub fn swapped(f: &GaussPolyFn) -> Result<GaussPolyFn> {
    check_blocks(f, 2)?;
    f.permute_blocks(BLOCK_DIM, &[1, 0])
}

/// `⟨Φ, [φ, φ](f) Ψ⟩ = s(Φ, f⊗Ψ) − s(Φ, f_swapped⊗Ψ)`, evaluated on the
/// Wightman sums so that no operator truncation enters.
pub fn commutator_element(
    model: &WickSeriesModel,
    dict: &Dictionary,
    phi: &BorchersVector,
    psi: &BorchersVector,
    f: &GaussPolyFn,
    ctx: &Context,
) -> Result<C64> {
    let fs = swapped(f)?;
    let limit = dict.max_degree().saturating_sub(2);
    if phi.max_degree() > limit || psi.max_degree() > limit {
        return Err(Error::DegreeOverflow(format!(
            "states of degree {} and {} exceed D − 2 = {limit}",
            phi.max_degree(),
            psi.max_degree()
        )));
    }
    if fs == *f {
        return Ok(ZERO);
    }
    let a = s_form(model, phi, &psi.left_mul(f)?, ctx)?.value;
    let b = s_form(model, phi, &psi.left_mul(&fs)?, ctx)?.value;
    Ok(a - b)
}

/// `∫ (W(x − x′) − W(x′ − x)) f(x, x′)` for the free field, as a rapidity
/// integral of the Fourier transform:
/// `(1/4π) ∫ du [F(b, −b) − F(−b, b)]` with `b = (ω, −k)` on shell.
pub fn pauli_jordan_smeared(spec: &FreeFieldSpec, f: &GaussPolyFn) -> Result<C64> {
    check_blocks(f, 2)?;
    if f.is_zero() || swapped(f)? == *f {
        return Ok(ZERO);
    }
    let m = spec.mass;
    let ft = f.fourier()?;
    // |F(b, −b)| ≤ C exp(−2λ|b|²) with λ the smallest decay rate of F
    let decay = min_sym_eigenvalue(&real_part(ft.quad_form()));
    let u_max = ((20.0 / decay).sqrt() / m).asinh() + 1.0;
    let integrand = |u: f64| {
        let b = [C64::new(m * u.cosh(), 0.0), C64::new(-m * u.sinh(), 0.0)];
        ft.eval(&[b[0], b[1], -b[0], -b[1]]) - ft.eval(&[-b[0], -b[1], b[0], b[1]])
    };
    let rough = QuadOpts { rel_tol: 1e-3, ..QuadOpts::default() };
    let l1 = adaptive(|u| C64::new(integrand(u).norm(), 0.0), -u_max, u_max, rough)?.value.re;
    let opts = QuadOpts { rel_tol: 1e-12, abs_tol: 1e-13 * l1, max_intervals: 4000 };
    let r = adaptive(integrand, -u_max, u_max, opts)?;
    Ok(r.value / (4.0 * std::f64::consts::PI))
}

/// Linear map on relative coordinates `ξ_1 … ξ_{n−1}` realizing the exchange
/// of `x_k` and `x_{k+1}`: `ξ_{k−1} → ξ_{k−1} + ξ_k`, `ξ_k → −ξ_k`,
/// `ξ_{k+1} → ξ_k + ξ_{k+1}`. It is an involution.
pub fn exchange_map(n: usize, k: usize) -> DMatrix<C64> {
    let d = (n - 1) * BLOCK_DIM;
    let mut m = DMatrix::<C64>::identity(d, d);
    let at = |block: usize, i: usize| block * BLOCK_DIM + i;
    for i in 0..BLOCK_DIM {
        m[(at(k - 1, i), at(k - 1, i))] = -ONE;
        if k >= 2 {
            m[(at(k - 2, i), at(k - 1, i))] = ONE;
        }
        if k < n - 1 {
            m[(at(k, i), at(k - 1, i))] = ONE;
        }
    }
    m
}

/// `(𝒲_n, f) − (𝒲_n, f ∘ S_k)` for `f` in relative coordinates, with `S_k`
/// the [`exchange_map`].
///
/// The relative function is lifted to `n` points with a unit-integral
/// Gaussian in `x₁`, which translation invariance integrates out.
pub fn permutation_difference(model: &WickSeriesModel, n: usize, k: usize, f: &GaussPolyFn, ctx: &Context) -> Result<C64> {
    if n < 2 || k < 1 || k > n - 1 {
        return Err(Error::InvalidInput(format!("need 1 ≤ k ≤ n − 1 with n ≥ 2, got n={n}, k={k}")));
    }
    check_blocks(f, n - 1)?;
    let exchanged = f.linear_change(&exchange_map(n, k), &DVector::zeros(f.dim()))?;
    if exchanged == *f {
        return Ok(ZERO);
    }
    let anchor = GaussPolyFn::normalized_gaussian2([0.0, 0.0], 1.0);
    let lift = |g: &GaussPolyFn| -> Result<Estimate> {
        npoint_smeared(model, &Smearing::new(vec![anchor.tensor(g).from_relative()?])?, ctx)
    };
    Ok(lift(f)?.value - lift(&exchanged)?.value)
}
