//! Sparse multivariate polynomials with complex coefficients.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

/// Exponent vector of a monomial.
pub type MultiIndex = Vec<u16>;

/// `Σ coeff · z^κ` over `dim` complex variables.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly {
    dim: usize,
    terms: BTreeMap<MultiIndex, C64>,
}

impl Poly {
    pub fn zero(dim: usize) -> Self {
        Self { dim, terms: BTreeMap::new() }
    }

    pub fn constant(dim: usize, c: C64) -> Self {
        let mut p = Self::zero(dim);
        p.add_term(vec![0; dim], c);
        p
    }

    pub fn one(dim: usize) -> Self {
        Self::constant(dim, C64::new(1.0, 0.0))
    }

    /// The coordinate function `z_j`.
    pub fn variable(dim: usize, j: usize) -> Self {
        let mut k = vec![0; dim];
        k[j] = 1;
        let mut p = Self::zero(dim);
        p.add_term(k, C64::new(1.0, 0.0));
        p
    }

    pub fn from_terms<I: IntoIterator<Item = (C64, MultiIndex)>>(dim: usize, terms: I) -> Self {
        let mut p = Self::zero(dim);
        for (c, k) in terms {
            assert_eq!(k.len(), dim, "multi-index length must equal dimension");
            p.add_term(k, c);
        }
        p
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &C64)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Total degree; zero for the zero polynomial.
    pub fn degree(&self) -> usize {
        self.terms.keys().map(|k| k.iter().map(|&e| e as usize).sum()).max().unwrap_or(0)
    }

    /// Largest exponent of each variable.
    pub fn max_exponents(&self) -> Vec<u16> {
        let mut m = vec![0u16; self.dim];
        for k in self.terms.keys() {
            for (mj, &kj) in m.iter_mut().zip(k) {
                *mj = (*mj).max(kj);
            }
        }
        m
    }

    fn add_term(&mut self, k: MultiIndex, c: C64) {
        if c == C64::new(0.0, 0.0) {
            return;
        }
        let sum = self.terms.get(&k).copied().unwrap_or_default() + c;
        // exact cancellation drops the monomial
        if sum == C64::new(0.0, 0.0) {
            self.terms.remove(&k);
        } else {
            self.terms.insert(k, sum);
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        assert_eq!(self.dim, other.dim);
        let mut out = self.clone();
        for (k, c) in &other.terms {
            out.add_term(k.clone(), *c);
        }
        out
    }

    pub fn scale(&self, s: C64) -> Poly {
        let mut out = Poly::zero(self.dim);
        for (k, c) in &self.terms {
            out.add_term(k.clone(), c * s);
        }
        out
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        assert_eq!(self.dim, other.dim);
        let mut out = Poly::zero(self.dim);
        for (ka, ca) in &self.terms {
            for (kb, cb) in &other.terms {
                let k: MultiIndex = ka.iter().zip(kb).map(|(a, b)| a + b).collect();
                out.add_term(k, ca * cb);
            }
        }
        out
    }

    pub fn pow(&self, e: u16) -> Poly {
        let mut out = Poly::one(self.dim);
        for _ in 0..e {
            out = out.mul(self);
        }
        out
    }

    /// Coefficient-wise complex conjugation.
    pub fn conj_coeffs(&self) -> Poly {
        Poly { dim: self.dim, terms: self.terms.iter().map(|(k, c)| (k.clone(), c.conj())).collect() }
    }

    /// `(p ⊗ q)(z, w) = p(z) q(w)`.
    pub fn tensor(&self, other: &Poly) -> Poly {
        let dim = self.dim + other.dim;
        let mut out = Poly::zero(dim);
        for (ka, ca) in &self.terms {
            for (kb, cb) in &other.terms {
                let mut k = ka.clone();
                k.extend_from_slice(kb);
                out.add_term(k, ca * cb);
            }
        }
        out
    }

    /// New polynomial `q(z) = p(z_{perm[0]}, …, z_{perm[d-1]})`.
    pub fn permute(&self, perm: &[usize]) -> Poly {
        assert_eq!(perm.len(), self.dim);
        let mut out = Poly::zero(self.dim);
        for (k, c) in &self.terms {
            let mut nk = vec![0u16; self.dim];
            for (j, &pj) in perm.iter().enumerate() {
                nk[pj] += k[j];
            }
            out.add_term(nk, *c);
        }
        out
    }

    /// `q(x) = p(M x + shift)`, where `M` is `dim × new_dim`.
    pub fn compose_affine(&self, m: &DMatrix<C64>, shift: &DVector<C64>) -> Poly {
        assert_eq!(m.nrows(), self.dim);
        assert_eq!(shift.len(), self.dim);
        let new_dim = m.ncols();
        let maxe = self.max_exponents();
        // powers[j][e] = (row_j · x + shift_j)^e
        let mut powers: Vec<Vec<Poly>> = Vec::with_capacity(self.dim);
        for j in 0..self.dim {
            let mut lin = Poly::constant(new_dim, shift[j]);
            for k in 0..new_dim {
                if m[(j, k)] != C64::new(0.0, 0.0) {
                    lin = lin.add(&Poly::variable(new_dim, k).scale(m[(j, k)]));
                }
            }
            let mut pj = vec![Poly::one(new_dim)];
            for e in 1..=maxe[j] as usize {
                let next = pj[e - 1].mul(&lin);
                pj.push(next);
            }
            powers.push(pj);
        }
        let mut out = Poly::zero(new_dim);
        for (k, c) in &self.terms {
            let mut t = Poly::constant(new_dim, *c);
            for (j, &e) in k.iter().enumerate() {
                if e > 0 {
                    t = t.mul(&powers[j][e as usize]);
                }
            }
            out = out.add(&t);
        }
        out
    }

    pub fn eval(&self, z: &[C64]) -> C64 {
        assert_eq!(z.len(), self.dim);
        let mut acc = C64::new(0.0, 0.0);
        for (k, c) in &self.terms {
            let mut t = *c;
            for (zj, &e) in z.iter().zip(k) {
                if e > 0 {
                    t *= zj.powu(e as u32);
                }
            }
            acc += t;
        }
        acc
    }
}

/// Binomial coefficient as `f64`.
pub fn binomial(n: u16, k: u16) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut r = 1.0;
    for i in 0..k {
        r = r * (n - i) as f64 / (i + 1) as f64;
    }
    r
}

/// Iterates over all multi-indices `β ≤ κ` componentwise.
pub fn sub_indices(kappa: &[u16]) -> Vec<MultiIndex> {
    let mut out = vec![Vec::with_capacity(kappa.len())];
    for &kj in kappa {
        let mut next = Vec::with_capacity(out.len() * (kj as usize + 1));
        for prefix in &out {
            for b in 0..=kj {
                let mut p = prefix.clone();
                p.push(b);
                next.push(p);
            }
        }
        out = next;
    }
    out
}

/// All multi-indices of length `dim` with total degree at most `n`.
pub fn indices_up_to(dim: usize, n: usize) -> Vec<MultiIndex> {
    fn rec(dim: usize, left: usize, cur: &mut MultiIndex, out: &mut Vec<MultiIndex>) {
        if cur.len() == dim {
            out.push(cur.clone());
            return;
        }
        for e in 0..=left {
            cur.push(e as u16);
            rec(dim, left - e, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(dim, n, &mut Vec::with_capacity(dim), &mut out);
    out
}
