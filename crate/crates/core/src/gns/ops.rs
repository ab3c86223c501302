//! Field and translation operators in GNS coordinates, and states built from
//! joint smearings.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use super::borchers::{s_form, BorchersVector, Dictionary};
use super::gram::{GnsBasis, GnsOpts};
use crate::error::{Error, Result};
use crate::freefield::WickSeriesModel;
use crate::numeric::ZERO;
use crate::store::Context;
use crate::testfn::GaussPolyFn;

/// `⟨Ψ_{word_i}, X_j⟩` for all basis words `i` and the given vectors `X_j`.
fn overlaps(model: &WickSeriesModel, dict: &Dictionary, basis: &GnsBasis, cols: &[BorchersVector], ctx: &Context) -> Result<DMatrix<C64>> {
    let rows: Vec<BorchersVector> = basis.words.iter().map(|w| BorchersVector::word(dict, w)).collect();
    let (nr, nc) = (rows.len(), cols.len());
    let cells: Vec<(usize, usize)> = (0..nr).flat_map(|i| (0..nc).map(move |j| (i, j))).collect();
    let vals: Vec<C64> = cells
        .par_iter()
        .map(|&(i, j)| s_form(model, &rows[i], &cols[j], ctx).map(|e| e.value))
        .collect::<Result<_>>()?;
    Ok(DMatrix::from_fn(nr, nc, |i, j| vals[i * nc + j]))
}

/// Indices of the basis words of degree below `D`, the domain on which a
/// field operator stays inside the truncation.
pub fn domain_words(dict: &Dictionary, basis: &GnsBasis) -> Vec<usize> {
    (0..basis.words.len()).filter(|&i| basis.words[i].len() < dict.max_degree()).collect()
}

/// Matrix of `φ(h)` in orthonormal GNS coordinates, defined on the span of
/// the words of degree `< D`.
#[derive(Clone, Debug)]
pub struct FieldMatrix {
    pub matrix: DMatrix<C64>,
    /// Orthogonal projector onto the domain, in GNS coordinates.
    pub domain: DMatrix<C64>,
    /// Basis words whose image would exceed degree `D`; their directions are
    /// outside the domain.
    pub overflow_words: Vec<usize>,
}

fn pseudo_inverse(a: &DMatrix<C64>, basis: &GnsBasis, tolerance: f64) -> DMatrix<C64> {
    let eps = (tolerance * basis.max_eigenvalue).sqrt();
    a.clone().pseudo_inverse(eps).expect("non-negative threshold")
}

/// `Ψ_f ↦ Ψ_{h⊗f}`: overlaps `s(word_i, h⊗word_j)` for words `j` in the
/// domain, mapped to coordinates and composed with the least-squares
/// inverse of the domain embedding.
pub fn field_matrix(model: &WickSeriesModel, dict: &Dictionary, basis: &GnsBasis, h: &GaussPolyFn, opts: &GnsOpts, ctx: &Context) -> Result<FieldMatrix> {
    let low = domain_words(dict, basis);
    let overflow_words = (0..basis.words.len()).filter(|i| !low.contains(i)).collect();
    let cols: Vec<BorchersVector> = low
        .iter()
        .map(|&j| BorchersVector::word(dict, &basis.words[j]).left_mul(h))
        .collect::<Result<_>>()?;
    let o = overlaps(model, dict, basis, &cols, ctx)?;
    let x = &basis.dual_map * o;
    let a = basis.iso_map.select_columns(&low);
    let a_pinv = pseudo_inverse(&a, basis, opts.tolerance);
    Ok(FieldMatrix { matrix: x * &a_pinv, domain: &a * a_pinv, overflow_words })
}

/// Matrix of `U(a, I)` in GNS coordinates, with the defect `max|T†T − I|`
/// that measures how far translated words leave the dictionary span.
#[derive(Clone, Debug)]
pub struct TranslationMatrix {
    pub matrix: DMatrix<C64>,
    pub isometry_defect: f64,
}

pub fn translation_matrix(model: &WickSeriesModel, dict: &Dictionary, basis: &GnsBasis, a: [f64; 2], ctx: &Context) -> Result<TranslationMatrix> {
    let cols: Vec<BorchersVector> = basis.words.iter().map(|w| BorchersVector::word(dict, w).translate(a)).collect();
    let o = overlaps(model, dict, basis, &cols, ctx)?;
    let matrix = &basis.dual_map * o * basis.dual_map.adjoint();
    let n = matrix.nrows();
    let defect = (matrix.adjoint() * &matrix - DMatrix::<C64>::identity(n, n)).iter().map(|z| z.norm()).fold(0.0, f64::max);
    Ok(TranslationMatrix { matrix, isometry_defect: defect })
}

/// Largest `|A_ij − B_ij| / √(G_ii G_jj)`: the deviation between two
/// sesquilinear forms on words, measured between normalized word states.
fn normalized_deviation(a: &DMatrix<C64>, b: &DMatrix<C64>, norms: &[f64], cols: &[usize]) -> f64 {
    let mut dev: f64 = 0.0;
    for i in 0..a.nrows() {
        for (jj, &j) in cols.iter().enumerate() {
            dev = dev.max((a[(i, jj)] - b[(i, jj)]).norm() / (norms[i] * norms[j]).sqrt());
        }
    }
    dev
}

fn word_norms(model: &WickSeriesModel, dict: &Dictionary, basis: &GnsBasis, ctx: &Context) -> Result<Vec<f64>> {
    basis
        .words
        .iter()
        .map(|w| {
            let v = BorchersVector::word(dict, w);
            s_form(model, &v, &v, ctx).map(|e| e.value.re.max(f64::MIN_POSITIVE))
        })
        .collect()
}

/// Covariance `U(a)φ(h)U(a)⁻¹ = φ(h_{(a,I)})` on the domain, evaluated as
/// matrix elements `⟨U(−a)Ψ_i, φ(h)U(−a)Ψ_j⟩` against `⟨Ψ_i, φ(h_a)Ψ_j⟩`.
pub fn covariance_defect(model: &WickSeriesModel, dict: &Dictionary, basis: &GnsBasis, h: &GaussPolyFn, a: [f64; 2], ctx: &Context) -> Result<f64> {
    let low = domain_words(dict, basis);
    let words: Vec<BorchersVector> = basis.words.iter().map(|w| BorchersVector::word(dict, w)).collect();
    let back = [-a[0], -a[1]];
    let h_a = h.translate_st(a);
    let n = words.len();
    let cells: Vec<(usize, usize)> = (0..n).flat_map(|i| low.iter().map(move |&j| (i, j))).collect();
    let pairs: Vec<(C64, C64)> = cells
        .par_iter()
        .map(|&(i, j)| {
            let lhs = s_form(model, &words[i].translate(back), &words[j].translate(back).left_mul(h)?, ctx)?;
            let rhs = s_form(model, &words[i], &words[j].left_mul(&h_a)?, ctx)?;
            Ok((lhs.value, rhs.value))
        })
        .collect::<Result<_>>()?;
    let m = low.len();
    let lhs = DMatrix::from_fn(n, m, |i, j| pairs[i * m + j].0);
    let rhs = DMatrix::from_fn(n, m, |i, j| pairs[i * m + j].1);
    let norms = word_norms(model, dict, basis, ctx)?;
    Ok(normalized_deviation(&lhs, &rhs, &norms, &low))
}

/// Group law `U(a)U(b) = U(a+b)` as matrix elements `⟨U(−a)Ψ_i, U(b)Ψ_j⟩`
/// against `⟨Ψ_i, U(a+b)Ψ_j⟩`.
pub fn composition_defect(model: &WickSeriesModel, dict: &Dictionary, basis: &GnsBasis, a: [f64; 2], b: [f64; 2], ctx: &Context) -> Result<f64> {
    let words: Vec<BorchersVector> = basis.words.iter().map(|w| BorchersVector::word(dict, w)).collect();
    let n = words.len();
    let ab = [a[0] + b[0], a[1] + b[1]];
    let cells: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
    let pairs: Vec<(C64, C64)> = cells
        .par_iter()
        .map(|&(i, j)| {
            let lhs = s_form(model, &words[i].translate([-a[0], -a[1]]), &words[j].translate(b), ctx)?;
            let rhs = s_form(model, &words[i], &words[j].translate(ab), ctx)?;
            Ok((lhs.value, rhs.value))
        })
        .collect::<Result<_>>()?;
    let lhs = DMatrix::from_fn(n, n, |i, j| pairs[i * n + j].0);
    let rhs = DMatrix::from_fn(n, n, |i, j| pairs[i * n + j].1);
    let norms = word_norms(model, dict, basis, ctx)?;
    let all: Vec<usize> = (0..n).collect();
    Ok(normalized_deviation(&lhs, &rhs, &norms, &all))
}

/// GNS coordinates of a state together with the part of its norm the
/// dictionary does not capture.
#[derive(Clone, Debug)]
pub struct StateCoords {
    pub coords: Vec<C64>,
    /// `‖Ψ‖²` from the Wightman sum.
    pub norm_sq: f64,
    /// `(‖Ψ‖² − ‖PΨ‖²)/‖Ψ‖²`.
    pub residual: f64,
}

/// `Ψ(g) = ∫ g(x₁, x₁−x₂, …) Π φ(x_i) Ψ_base` for `g` given in relative
/// coordinates over `n` blocks.
pub fn build_state_relative(
    model: &WickSeriesModel,
    dict: &Dictionary,
    basis: &GnsBasis,
    g: &GaussPolyFn,
    base: &BorchersVector,
    opts: &GnsOpts,
    ctx: &Context,
) -> Result<StateCoords> {
    let n = g.dim() / crate::BLOCK_DIM;
    if n + base.max_degree() > dict.max_degree() {
        return Err(Error::DegreeOverflow(format!(
            "state of degree {} exceeds the truncation degree {}",
            n + base.max_degree(),
            dict.max_degree()
        )));
    }
    let state = if n == 0 { base.scale(g.eval(&[])) } else { base.left_mul(&g.from_relative()?)? };
    let o = overlaps(model, dict, basis, std::slice::from_ref(&state), ctx)?;
    let coords = basis.coords_from_overlaps(o.column(0).as_slice());
    let norm_sq = s_form(model, &state, &state, ctx)?.value.re;
    let captured: f64 = coords.iter().map(|z| z.norm_sqr()).sum();
    let residual = if norm_sq > 0.0 { ((norm_sq - captured) / norm_sq).max(0.0) } else { 0.0 };
    if residual > opts.projection_limit {
        return Err(Error::ProjectionResidualExceeded { residual, limit: opts.projection_limit });
    }
    Ok(StateCoords { coords, norm_sq, residual })
}

/// `⟨x, M y⟩` for coordinate vectors.
pub fn matrix_element(x: &[C64], m: &DMatrix<C64>, y: &[C64]) -> C64 {
    let xv = DVector::from_column_slice(x);
    let yv = DVector::from_column_slice(y);
    (xv.adjoint() * m * yv)[(0, 0)]
}

/// `Σ_k conj(x_k) y_k`.
pub fn inner(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y).fold(ZERO, |acc, (a, b)| acc + a.conj() * b)
}
