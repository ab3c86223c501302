use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::numeric::linalg::{inverse, min_sym_eigenvalue, real_part, sqrt_det_sym};
use crate::numeric::poly::{binomial, sub_indices, MultiIndex, Poly};
use crate::numeric::{ONE, ZERO};
use crate::store::KeyBuilder;
use crate::BLOCK_DIM;

/// Polynomial times complex Gaussian on `ℂ^d`:
/// `f(z) = P(z) · exp(λ − (z−c)ᵀ A (z−c))`.
///
/// `λ` is a complex log-amplitude kept separate from `P` so that Fourier
/// transforms of very narrow or very wide Gaussians do not overflow.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussPolyFn {
    poly: Poly,
    a: DMatrix<C64>,
    center: DVector<C64>,
    log_amp: C64,
}

impl GaussPolyFn {
    /// Validates that `Re A` is positive definite and symmetrizes `A`.
    pub fn new(poly: Poly, a: DMatrix<C64>, center: DVector<C64>) -> Result<Self> {
        Self::with_log_amp(poly, a, center, ZERO)
    }

    pub fn with_log_amp(poly: Poly, a: DMatrix<C64>, center: DVector<C64>, log_amp: C64) -> Result<Self> {
        let d = poly.dim();
        if d == 0 {
            return Err(Error::InvalidInput("dimension must be positive".into()));
        }
        if a.nrows() != d || a.ncols() != d || center.len() != d {
            return Err(Error::InvalidInput(format!(
                "shape mismatch: dim {d}, quad_form {}x{}, center {}",
                a.nrows(),
                a.ncols(),
                center.len()
            )));
        }
        let a = (&a + a.transpose()) * C64::new(0.5, 0.0);
        let min = min_sym_eigenvalue(&real_part(&a));
        if !(min > 0.0) {
            return Err(Error::InvalidInput(format!(
                "real part of quad_form must be positive definite (smallest eigenvalue {min:e})"
            )));
        }
        Ok(Self { poly, a, center, log_amp })
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            poly: Poly::zero(dim),
            a: DMatrix::identity(dim, dim),
            center: DVector::zeros(dim),
            log_amp: ZERO,
        }
    }

    /// Function of no variables, the degree-zero component of a state.
    pub fn constant(c: C64) -> Self {
        let one = Self { poly: Poly::one(0), a: DMatrix::zeros(0, 0), center: DVector::zeros(0), log_amp: ZERO };
        one.scale(c)
    }

    /// `exp(−Σ_j (x_j − c_j)² / (2σ²))`.
    pub fn gaussian(center: &[f64], sigma: f64) -> Self {
        let d = center.len();
        let a = DMatrix::from_diagonal_element(d, d, C64::new(1.0 / (2.0 * sigma * sigma), 0.0));
        let c = DVector::from_iterator(d, center.iter().map(|&x| C64::new(x, 0.0)));
        Self::new(Poly::one(d), a, c).expect("isotropic Gaussian is valid")
    }

    /// Normalized isotropic Gaussian on `ℝ^2` with unit integral.
    pub fn normalized_gaussian2(center: [f64; 2], sigma: f64) -> Self {
        let norm = 1.0 / (2.0 * std::f64::consts::PI * sigma * sigma);
        Self::gaussian(&center, sigma).scale(C64::new(norm, 0.0))
    }

    pub fn dim(&self) -> usize {
        self.poly.dim()
    }

    pub fn poly(&self) -> &Poly {
        &self.poly
    }

    pub fn quad_form(&self) -> &DMatrix<C64> {
        &self.a
    }

    pub fn center(&self) -> &DVector<C64> {
        &self.center
    }

    pub fn log_amp(&self) -> C64 {
        self.log_amp
    }

    pub fn is_zero(&self) -> bool {
        self.poly.is_zero()
    }

    pub fn eval(&self, z: &[C64]) -> C64 {
        assert_eq!(z.len(), self.dim());
        if self.poly.is_zero() {
            return ZERO;
        }
        let v = DVector::from_iterator(z.len(), z.iter().zip(self.center.iter()).map(|(a, b)| a - b));
        let q = (v.transpose() * &self.a * &v)[(0, 0)];
        self.poly.eval(z) * (self.log_amp - q).exp()
    }

    pub fn eval_real(&self, x: &[f64]) -> C64 {
        let z: Vec<C64> = x.iter().map(|&t| C64::new(t, 0.0)).collect();
        self.eval(&z)
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { poly: self.poly.scale(s), ..self.clone() }
    }

    /// Multiplies the polynomial prefactor by `q`.
    pub fn mul_poly(&self, q: &Poly) -> Self {
        Self { poly: self.poly.mul(q), ..self.clone() }
    }

    /// Pointwise product.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        let a = &self.a + &other.a;
        let rhs = &self.a * &self.center + &other.a * &other.center;
        let c = inverse(&a)? * rhs;
        let quad = |m: &DMatrix<C64>, v: &DVector<C64>| (v.transpose() * m * v)[(0, 0)];
        let k = quad(&self.a, &self.center) + quad(&other.a, &other.center) - quad(&a, &c);
        Self::with_log_amp(self.poly.mul(&other.poly), a, c, self.log_amp + other.log_amp - k)
    }

    /// `(f ⊗ g)(z, w) = f(z) g(w)`.
    pub fn tensor(&self, other: &Self) -> Self {
        let (d1, d2) = (self.dim(), other.dim());
        let mut a = DMatrix::zeros(d1 + d2, d1 + d2);
        a.view_mut((0, 0), (d1, d1)).copy_from(&self.a);
        a.view_mut((d1, d1), (d2, d2)).copy_from(&other.a);
        let center = DVector::from_iterator(d1 + d2, self.center.iter().chain(other.center.iter()).copied());
        Self { poly: self.poly.tensor(&other.poly), a, center, log_amp: self.log_amp + other.log_amp }
    }

    /// `g(x) = f(M x + b)` for an invertible square `M`.
    pub fn linear_change(&self, m: &DMatrix<C64>, b: &DVector<C64>) -> Result<Self> {
        let d = self.dim();
        if m.nrows() != d || m.ncols() != d || b.len() != d {
            return Err(Error::InvalidInput("linear change must be square of matching dimension".into()));
        }
        let minv = inverse(m)?;
        let a = m.transpose() * &self.a * m;
        let c = &minv * (&self.center - b);
        Self::with_log_amp(self.poly.compose_affine(m, b), a, c, self.log_amp)
    }

    /// `g(z) = f(z − a)`; complex shifts allowed.
    pub fn translate(&self, a: &[C64]) -> Self {
        let d = self.dim();
        assert_eq!(a.len(), d);
        let shift = DVector::from_iterator(d, a.iter().map(|x| -x));
        let center = &self.center + DVector::from_column_slice(a);
        let poly = self.poly.compose_affine(&DMatrix::identity(d, d), &shift);
        Self { poly, a: self.a.clone(), center, log_amp: self.log_amp }
    }

    fn blocks(&self, block_dim: usize) -> Result<usize> {
        if block_dim == 0 || self.dim() % block_dim != 0 {
            return Err(Error::BlockMismatch(format!(
                "dimension {} is not a multiple of block dimension {block_dim}",
                self.dim()
            )));
        }
        Ok(self.dim() / block_dim)
    }

    /// `g(z) = f(z_{π(0)}, …, z_{π(d−1)})` for a permutation `π`.
    pub fn permute_vars(&self, pi: &[usize]) -> Self {
        let d = self.dim();
        assert_eq!(pi.len(), d);
        // with (P z)_i = z_{π(i)}: A' = Pᵀ A P and c' = Pᵀ c
        let inv = invert_perm(pi);
        let a = DMatrix::from_fn(d, d, |k, l| self.a[(inv[k], inv[l])]);
        let mut center = DVector::zeros(d);
        for (i, &p) in pi.iter().enumerate() {
            center[p] = self.center[i];
        }
        Self { poly: self.poly.permute(pi), a, center, log_amp: self.log_amp }
    }

    /// Reorders argument blocks: `g(z) = f(z_{B(order[0])}, z_{B(order[1])}, …)`
    /// with `z_{B(k)}` the `k`-th block of the argument.
    pub fn permute_blocks(&self, block_dim: usize, order: &[usize]) -> Result<Self> {
        let n = self.blocks(block_dim)?;
        if order.len() != n {
            return Err(Error::BlockMismatch(format!("{} block indices for {n} blocks", order.len())));
        }
        let pi: Vec<usize> = (0..self.dim()).map(|i| order[i / block_dim] * block_dim + i % block_dim).collect();
        Ok(self.permute_vars(&pi))
    }

    /// `f†(z₁,…,z_n) = conj f(z̄_n,…,z̄₁)`.
    pub fn dagger(&self, block_dim: usize) -> Result<Self> {
        let n = self.blocks(block_dim)?;
        let order: Vec<usize> = (0..n).rev().collect();
        let conj = Self {
            poly: self.poly.conj_coeffs(),
            a: self.a.map(|z| z.conj()),
            center: self.center.map(|z| z.conj()),
            log_amp: self.log_amp.conj(),
        };
        conj.permute_blocks(block_dim, &order)
    }

    /// Spacetime dagger with blocks of [`BLOCK_DIM`].
    pub fn dagger_st(&self) -> Self {
        self.dagger(BLOCK_DIM).expect("spacetime function has whole blocks")
    }

    /// `f_{(a,Λ)}(x₁,…,x_n) = f(Λ⁻¹(x₁−a),…,Λ⁻¹(x_n−a))` with `Λ` the boost of
    /// rapidity `chi`.
    pub fn poincare(&self, a: [f64; 2], chi: f64) -> Result<Self> {
        let n = self.blocks(BLOCK_DIM)?;
        let (ch, sh) = (chi.cosh(), chi.sinh());
        // Λ⁻¹ is the boost of rapidity −chi
        let linv = [[ch, -sh], [-sh, ch]];
        let d = self.dim();
        let mut m = DMatrix::zeros(d, d);
        let mut b = DVector::zeros(d);
        let la = [linv[0][0] * a[0] + linv[0][1] * a[1], linv[1][0] * a[0] + linv[1][1] * a[1]];
        for k in 0..n {
            for i in 0..2 {
                for j in 0..2 {
                    m[(2 * k + i, 2 * k + j)] = C64::new(linv[i][j], 0.0);
                }
                b[2 * k + i] = C64::new(-la[i], 0.0);
            }
        }
        self.linear_change(&m, &b)
    }

    /// Spacetime translation by `a` in every block.
    pub fn translate_st(&self, a: [f64; 2]) -> Self {
        let n = self.dim() / BLOCK_DIM;
        let shift: Vec<C64> = (0..n).flat_map(|_| [C64::new(a[0], 0.0), C64::new(a[1], 0.0)]).collect();
        self.translate(&shift)
    }

    /// `g^{(r)}(x₁,…,x_n) = g(x₁, x₁−x₂, …, x_{n−1}−x_n)`.
    pub fn to_relative(&self) -> Result<Self> {
        let n = self.blocks(BLOCK_DIM)?;
        self.linear_change(&relative_map(n), &DVector::zeros(self.dim()))
    }

    /// Inverse of [`to_relative`](Self::to_relative).
    pub fn from_relative(&self) -> Result<Self> {
        let n = self.blocks(BLOCK_DIM)?;
        let t = relative_map(n);
        self.linear_change(&inverse(&t)?, &DVector::zeros(self.dim()))
    }

    /// `F(b) = ∫ f(x) e^{−i bᵀx} dx` over `ℝ^d`, again of this family.
    pub fn fourier(&self) -> Result<Self> {
        let d = self.dim();
        if self.is_zero() {
            return Ok(Self::zero(d));
        }
        let ainv = inverse(&self.a)?;
        let sigma = &ainv * C64::new(0.5, 0.0);
        let a_f = &ainv * C64::new(0.25, 0.0);
        let c_f = (&self.a * &self.center) * C64::new(0.0, -2.0);
        let cac = (self.center.transpose() * &self.a * &self.center)[(0, 0)];
        let log_pref = C64::new(0.5 * d as f64 * std::f64::consts::PI.ln(), 0.0) - sqrt_det_sym(&self.a)?.ln();
        let smoothed = gaussian_smooth(&self.poly, &sigma);
        let lmap = &ainv * C64::new(0.0, -0.5);
        let q = smoothed.compose_affine(&lmap, &self.center);
        Self::with_log_amp(q, a_f, c_f, self.log_amp - cac + log_pref)
    }

    /// `∫_{ℝ^d} f(x) dx`.
    pub fn integral(&self) -> Result<C64> {
        let d = self.dim();
        Ok(self.fourier()?.eval(&vec![ZERO; d]))
    }

    pub fn check_dim(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::InvalidInput(format!("dimension mismatch: {} vs {}", self.dim(), other.dim())));
        }
        Ok(())
    }

    /// True when all data are real, so `f` is real on `ℝ^d`.
    pub fn is_real(&self) -> bool {
        self.poly.terms().all(|(_, c)| c.im == 0.0)
            && self.a.iter().all(|z| z.im == 0.0)
            && self.center.iter().all(|z| z.im == 0.0)
            && self.log_amp.im == 0.0
    }

    /// Feeds the coefficient data into a cache key.
    pub fn hash_into(&self, mut kb: KeyBuilder) -> KeyBuilder {
        kb = kb.u64(self.dim() as u64).u64(self.poly.num_terms() as u64);
        for (k, c) in self.poly.terms() {
            for &e in k {
                kb = kb.u64(e as u64);
            }
            kb = kb.c64(*c);
        }
        for z in self.a.iter().chain(self.center.iter()) {
            kb = kb.c64(*z);
        }
        kb.c64(self.log_amp)
    }
}

fn invert_perm(pi: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; pi.len()];
    for (i, &p) in pi.iter().enumerate() {
        inv[p] = i;
    }
    inv
}

/// Matrix of `(x₁,…,x_n) ↦ (x₁, x₁−x₂, …, x_{n−1}−x_n)` on 2-vector blocks.
pub fn relative_map(n: usize) -> DMatrix<C64> {
    let d = n * BLOCK_DIM;
    let mut t = DMatrix::zeros(d, d);
    for i in 0..BLOCK_DIM {
        t[(i, i)] = ONE;
    }
    for k in 1..n {
        for i in 0..BLOCK_DIM {
            t[(k * BLOCK_DIM + i, (k - 1) * BLOCK_DIM + i)] = ONE;
            t[(k * BLOCK_DIM + i, k * BLOCK_DIM + i)] = -ONE;
        }
    }
    t
}

/// `P̃(s) = E[P(s + w)]` for a centred Gaussian `w` with covariance `Σ`.
fn gaussian_smooth(p: &Poly, sigma: &DMatrix<C64>) -> Poly {
    let d = p.dim();
    let mut moments: HashMap<MultiIndex, C64> = HashMap::new();
    let mut out = Poly::zero(d);
    for (kappa, coeff) in p.terms() {
        for beta in sub_indices(kappa) {
            let m = moment(&beta, sigma, &mut moments);
            if m == ZERO {
                continue;
            }
            let mut w = *coeff * m;
            let mut rest = vec![0u16; d];
            for j in 0..d {
                w *= binomial(kappa[j], beta[j]);
                rest[j] = kappa[j] - beta[j];
            }
            out = out.add(&Poly::from_terms(d, [(w, rest)]));
        }
    }
    out
}

/// `E[w^β]` by the recursion `E[w_j w^γ] = Σ_k Σ_{jk} γ_k E[w^{γ−e_k}]`.
fn moment(beta: &[u16], sigma: &DMatrix<C64>, memo: &mut HashMap<MultiIndex, C64>) -> C64 {
    let total: u32 = beta.iter().map(|&b| b as u32).sum();
    if total == 0 {
        return ONE;
    }
    if total % 2 == 1 {
        return ZERO;
    }
    if let Some(v) = memo.get(beta) {
        return *v;
    }
    let j = beta.iter().position(|&b| b > 0).expect("non-zero index");
    let mut gamma = beta.to_vec();
    gamma[j] -= 1;
    let mut acc = ZERO;
    for k in 0..beta.len() {
        if gamma[k] == 0 || sigma[(j, k)] == ZERO {
            continue;
        }
        let mut rest = gamma.clone();
        rest[k] -= 1;
        acc += sigma[(j, k)] * gamma[k] as f64 * moment(&rest, sigma, memo);
    }
    memo.insert(beta.to_vec(), acc);
    acc
}

impl GaussPolyFn {
    /// `ln |f(z)|`, finite even where `|f(z)|` underflows; `−∞` at zeros.
    pub fn log_abs(&self, z: &[C64]) -> f64 {
        if self.poly.is_zero() {
            return f64::NEG_INFINITY;
        }
        let p = self.poly.eval(z).norm();
        if p == 0.0 {
            return f64::NEG_INFINITY;
        }
        let d = z.len();
        let mut q = ZERO;
        for i in 0..d {
            let vi = z[i] - self.center[i];
            for j in 0..d {
                q += vi * self.a[(i, j)] * (z[j] - self.center[j]);
            }
        }
        p.ln() + (self.log_amp - q).re
    }
}
