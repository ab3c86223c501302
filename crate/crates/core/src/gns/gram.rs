//! Gram matrix of the form `s` on dictionary words and the finite-rank GNS
//! quotient.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use super::borchers::{s_form, BorchersVector, Dictionary, Word};
use crate::error::{Error, Result};
use crate::freefield::WickSeriesModel;
use crate::numeric::linalg::hermitian_eigen;
use crate::store::Context;

/// Truncation settings.
#[derive(Clone, Copy, Debug)]
pub struct GnsOpts {
    /// Maximal number of basis words.
    pub word_cap: usize,
    /// Relative eigenvalue cutoff for the kernel of `s`.
    pub tolerance: f64,
    /// Allowed relative projection residual for states built outside the
    /// dictionary.
    pub projection_limit: f64,
}

impl Default for GnsOpts {
    fn default() -> Self {
        Self { word_cap: 200, tolerance: 1e-9, projection_limit: 1e-3 }
    }
}

#[derive(Clone, Debug)]
pub struct GramMatrix {
    pub words: Vec<Word>,
    /// Hermitized `s(word_i, word_j)`.
    pub entries: DMatrix<C64>,
    pub tolerance: f64,
    /// `max |a_ij − conj(a_ji)|` before averaging.
    pub asymmetry: f64,
    /// Largest quadrature error estimate over the entries.
    pub max_error: f64,
}

impl GramMatrix {
    pub fn dim(&self) -> usize {
        self.words.len()
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigen(&self.entries).0
    }

    /// Gram of explicitly given entries, e.g. for tests or reloaded data.
    pub fn from_entries(words: Vec<Word>, entries: DMatrix<C64>, tolerance: f64) -> Result<Self> {
        if entries.nrows() != words.len() || entries.ncols() != words.len() {
            return Err(Error::InvalidInput("Gram entries do not match the word list".into()));
        }
        let (herm, asymmetry) = hermitize(&entries);
        Ok(Self { words, entries: herm, tolerance, asymmetry, max_error: 0.0 })
    }
}

fn hermitize(a: &DMatrix<C64>) -> (DMatrix<C64>, f64) {
    let adj = a.adjoint();
    let asym = (a - &adj).iter().map(|z| z.norm()).fold(0.0, f64::max);
    ((a + adj) * C64::new(0.5, 0.0), asym)
}

/// `s(word_i, word_j)` over all words of degree `≤ D`.
pub fn build_gram(model: &WickSeriesModel, dict: &Dictionary, opts: &GnsOpts, ctx: &Context) -> Result<GramMatrix> {
    let count = dict.word_count();
    if count > opts.word_cap {
        return Err(Error::CapExceeded(format!("{count} words exceed the cap of {}", opts.word_cap)));
    }
    let words = dict.words();
    let vecs: Vec<BorchersVector> = words.iter().map(|w| BorchersVector::word(dict, w)).collect();
    let n = words.len();
    let cells: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
    let values: Vec<(C64, f64)> = cells
        .par_iter()
        .map(|&(i, j)| s_form(model, &vecs[i], &vecs[j], ctx).map(|e| (e.value, e.error)))
        .collect::<Result<_>>()?;
    let raw = DMatrix::from_fn(n, n, |i, j| values[i * n + j].0);
    let max_error = values.iter().map(|v| v.1).fold(0.0, f64::max);
    let (entries, asymmetry) = hermitize(&raw);
    Ok(GramMatrix { words, entries, tolerance: opts.tolerance, asymmetry, max_error })
}

/// Orthonormal coordinates on the quotient by the numerical kernel of `s`.
///
/// With `G = V Λ V†` restricted to the retained eigenpairs, `iso_map =
/// Λ^{1/2} V†` sends word coefficients to Hilbert coordinates (so that
/// `iso_map† iso_map = G` on the retained part) and `dual_map = Λ^{−1/2} V†`
/// sends overlaps `⟨Ψ_{word_i}, X⟩` to the coordinates of the projection of
/// `X`.
#[derive(Clone, Debug)]
pub struct GnsBasis {
    pub words: Vec<Word>,
    pub rank: usize,
    pub dropped_dimension: usize,
    pub iso_map: DMatrix<C64>,
    pub dual_map: DMatrix<C64>,
    /// Retained eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
}

impl GnsBasis {
    /// Hilbert coordinates of `Σ_i c_i Ψ_{word_i}`.
    pub fn coords(&self, coeffs: &[C64]) -> Vec<C64> {
        let c = nalgebra::DVector::from_column_slice(coeffs);
        (&self.iso_map * c).iter().copied().collect()
    }

    /// Coordinates of the projection of `X` given its overlaps with the words.
    pub fn coords_from_overlaps(&self, overlaps: &[C64]) -> Vec<C64> {
        let o = nalgebra::DVector::from_column_slice(overlaps);
        (&self.dual_map * o).iter().copied().collect()
    }

    /// Coordinates of the vacuum word.
    pub fn vacuum(&self) -> Vec<C64> {
        self.iso_map.column(0).iter().copied().collect()
    }
}

pub fn gns_quotient(gram: &GramMatrix) -> Result<GnsBasis> {
    let (vals, vecs) = hermitian_eigen(&gram.entries);
    let n = vals.len();
    let max = vals.last().copied().unwrap_or(0.0);
    let min = vals.first().copied().unwrap_or(0.0);
    if min < -gram.tolerance * max.max(0.0) {
        return Err(Error::NotPsd { min, max });
    }
    let cut = gram.tolerance * max;
    let keep: Vec<usize> = (0..n).filter(|&k| vals[k] > cut).collect();
    let rank = keep.len();
    let iso_map = DMatrix::from_fn(rank, n, |r, c| vecs[(c, keep[r])].conj() * vals[keep[r]].sqrt());
    let dual_map = DMatrix::from_fn(rank, n, |r, c| vecs[(c, keep[r])].conj() / vals[keep[r]].sqrt());
    Ok(GnsBasis {
        words: gram.words.clone(),
        rank,
        dropped_dimension: n - rank,
        iso_map,
        dual_map,
        eigenvalues: keep.iter().map(|&k| vals[k]).collect(),
        min_eigenvalue: min,
        max_eigenvalue: max,
    })
}
