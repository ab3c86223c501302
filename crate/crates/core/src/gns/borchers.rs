//! Truncated Borchers algebra over a finite dictionary of one-block test
//! functions, and the hermitian form `s`.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::freefield::{npoint_smeared, Estimate, Smearing, WickSeriesModel};
use crate::numeric::{ONE, ZERO};
use crate::store::Context;
use crate::testfn::GaussPolyFn;
use crate::BLOCK_DIM;

/// Tensor word `f_{i₁} ⊗ ⋯ ⊗ f_{i_n}` as dictionary indices; empty is the
/// vacuum word.
pub type Word = Vec<usize>;

/// One-block functions and the maximal tensor degree `D`.
#[derive(Clone, Debug)]
pub struct Dictionary {
    one_particle: Vec<GaussPolyFn>,
    max_degree: usize,
}

impl Dictionary {
    pub fn new(one_particle: Vec<GaussPolyFn>, max_degree: usize) -> Result<Self> {
        if one_particle.is_empty() {
            return Err(Error::InvalidInput("dictionary must contain at least one function".into()));
        }
        if let Some(f) = one_particle.iter().find(|f| f.dim() != BLOCK_DIM) {
            return Err(Error::BlockMismatch(format!("dictionary functions need dimension 2, got {}", f.dim())));
        }
        Ok(Self { one_particle, max_degree })
    }

    /// Four unit-width Gaussians at `(0,0)`, `(0,1)`, `(1,0)`, `(0.5,−0.5)`,
    /// degree 3.
    pub fn standard() -> Self {
        let centers = [[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [0.5, -0.5]];
        let fs = centers.iter().map(|c| GaussPolyFn::gaussian(c, 1.0)).collect();
        Self { one_particle: fs, max_degree: 3 }
    }

    pub fn functions(&self) -> &[GaussPolyFn] {
        &self.one_particle
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn len(&self) -> usize {
        self.one_particle.len()
    }

    pub fn is_empty(&self) -> bool {
        self.one_particle.is_empty()
    }

    /// Number of words of degree `≤ D`.
    pub fn word_count(&self) -> usize {
        (0..=self.max_degree).map(|n| self.len().pow(n as u32)).sum()
    }

    /// All words of degree `≤ D`, by degree and then lexicographically.
    pub fn words(&self) -> Vec<Word> {
        let mut out = vec![Vec::new()];
        let mut layer: Vec<Word> = vec![Vec::new()];
        for _ in 0..self.max_degree {
            let mut next = Vec::with_capacity(layer.len() * self.len());
            for w in &layer {
                for i in 0..self.len() {
                    let mut v = w.clone();
                    v.push(i);
                    next.push(v);
                }
            }
            out.extend(next.iter().cloned());
            layer = next;
        }
        out
    }

    pub fn smearing(&self, word: &[usize]) -> Smearing {
        Smearing::product(word.iter().map(|&i| self.one_particle[i].clone()).collect())
            .expect("dictionary functions are one-block")
    }
}

/// Finite linear combination of tensor words `c · f₁ ⊗ ⋯ ⊗ f_n`, with
/// arbitrary one- or multi-block factors.
#[derive(Clone, Debug, Default)]
pub struct BorchersVector {
    terms: Vec<(C64, Smearing)>,
}

impl BorchersVector {
    pub fn zero() -> Self {
        Self { terms: Vec::new() }
    }

    /// The vacuum `(1, 0, 0, …)`.
    pub fn vacuum() -> Self {
        Self::from_smearing(ONE, Smearing::empty())
    }

    pub fn from_smearing(c: C64, s: Smearing) -> Self {
        Self { terms: vec![(c, s)] }
    }

    pub fn word(dict: &Dictionary, word: &[usize]) -> Self {
        Self::from_smearing(ONE, dict.smearing(word))
    }

    /// `Σ_i c_i · word_i`.
    pub fn combination(dict: &Dictionary, words: &[Word], coeffs: &[C64]) -> Self {
        let terms = words
            .iter()
            .zip(coeffs)
            .filter(|(_, c)| **c != ZERO)
            .map(|(w, c)| (*c, dict.smearing(w)))
            .collect();
        Self { terms }
    }

    pub fn terms(&self) -> &[(C64, Smearing)] {
        &self.terms
    }

    pub fn max_degree(&self) -> usize {
        self.terms.iter().map(|(_, s)| s.blocks()).max().unwrap_or(0)
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Self { terms }
    }

    pub fn scale(&self, c: C64) -> Self {
        Self { terms: self.terms.iter().map(|(a, s)| (a * c, s.clone())).collect() }
    }

    /// `(𝐟 ⊗ 𝐠)_n = Σ_k f_k ⊗ g_{n−k}`.
    pub fn tensor(&self, other: &Self) -> Self {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (a, s) in &self.terms {
            for (b, t) in &other.terms {
                terms.push((a * b, s.tensor(t)));
            }
        }
        Self { terms }
    }

    /// `h ⊗ 𝐟` for a function `h` of one or more blocks.
    pub fn left_mul(&self, h: &GaussPolyFn) -> Result<Self> {
        Ok(Self::from_smearing(ONE, Smearing::new(vec![h.clone()])?).tensor(self))
    }

    /// `(f†)_n = f̄_n(x_n, …, x_1)`.
    pub fn dagger(&self) -> Self {
        Self { terms: self.terms.iter().map(|(a, s)| (a.conj(), s.dagger())).collect() }
    }

    /// `U(a)`: every block translated by `a`.
    pub fn translate(&self, a: [f64; 2]) -> Self {
        Self { terms: self.terms.iter().map(|(c, s)| (*c, s.translate(a))).collect() }
    }
}

/// `s(𝐟, 𝐠) = Σ_{k,m} (𝒲_{k+m}, f_k† ⊗ g_m)`, with the summed error estimate.
pub fn s_form(model: &WickSeriesModel, f: &BorchersVector, g: &BorchersVector, ctx: &Context) -> Result<Estimate> {
    let mut value = ZERO;
    let mut error = 0.0;
    for (a, s) in &f.terms {
        let sd = s.dagger();
        for (b, t) in &g.terms {
            let coef = a.conj() * b;
            let e = npoint_smeared(model, &sd.tensor(t), ctx)?;
            value += coef * e.value;
            error += coef.norm() * e.error;
        }
    }
    Ok(Estimate { value, error })
}
