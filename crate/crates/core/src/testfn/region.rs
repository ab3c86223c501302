use nalgebra::DVector;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::BLOCK_DIM;

/// Real base set `O` of a tube.
#[derive(Clone, Debug, PartialEq)]
pub enum Base {
    /// All of `ℝ^d`.
    Full(usize),
    /// `{ξ ∈ ℝ^{2(n−1)} : ξ_k² > 0}` in relative coordinates, `1 ≤ k ≤ n−1`.
    ConeVk { k: usize, n: usize },
    /// Pairs `(x, x′) ∈ ℝ^{2·2}` with `(x − x′)² > 0`.
    LightconeW,
    /// Cartesian product; coordinates are concatenated in order.
    Product(Vec<Base>),
}

/// Linear inequality `aᵀx ≤ b`.
#[derive(Clone, Debug)]
pub struct HalfSpace {
    pub a: DVector<f64>,
    pub b: f64,
}

/// Intersection of half-spaces; an empty list is the whole space.
pub type Piece = Vec<HalfSpace>;

impl Base {
    pub fn dim(&self) -> usize {
        match self {
            Base::Full(d) => *d,
            Base::ConeVk { n, .. } => BLOCK_DIM * (n - 1),
            Base::LightconeW => 2 * BLOCK_DIM,
            Base::Product(parts) => parts.iter().map(Base::dim).sum(),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Base::Full(0) => Err(Error::InvalidInput("FULL region needs positive dimension".into())),
            Base::ConeVk { k, n } if *n < 2 || *k < 1 || *k > n - 1 => {
                Err(Error::InvalidInput(format!("CONE_VK needs 1 ≤ k ≤ n−1, got k={k}, n={n}")))
            }
            Base::Product(parts) => parts.iter().try_for_each(Base::validate),
            _ => Ok(()),
        }
    }

    /// Max-norm distance from a real point to the closure of the base set.
    pub fn distance(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.dim());
        match self {
            Base::Full(_) => 0.0,
            Base::ConeVk { k, .. } => {
                let o = BLOCK_DIM * (k - 1);
                cone_gap(x[o], x[o + 1]) / 2.0
            }
            // both points of the pair move, so ξ = x − x′ moves twice as fast
            Base::LightconeW => cone_gap(x[0] - x[2], x[1] - x[3]) / 4.0,
            Base::Product(parts) => {
                let mut off = 0;
                let mut d: f64 = 0.0;
                for p in parts {
                    let n = p.dim();
                    d = d.max(p.distance(&x[off..off + n]));
                    off += n;
                }
                d
            }
        }
    }

    /// The closed `l`-neighbourhood of the base set in max-norm, as a union
    /// of convex polyhedra.
    pub fn neighbourhood_pieces(&self, l: f64) -> Vec<Piece> {
        let d = self.dim();
        match self {
            Base::Full(_) => vec![Vec::new()],
            Base::ConeVk { k, .. } => {
                let o = BLOCK_DIM * (k - 1);
                cone_pieces(d, &[(o, 1.0)], &[(o + 1, 1.0)], 2.0 * l)
            }
            Base::LightconeW => cone_pieces(d, &[(0, 1.0), (2, -1.0)], &[(1, 1.0), (3, -1.0)], 4.0 * l),
            Base::Product(parts) => {
                let mut out: Vec<Piece> = vec![Vec::new()];
                let mut off = 0;
                for p in parts {
                    let n = p.dim();
                    let sub = p.neighbourhood_pieces(l);
                    let mut next = Vec::with_capacity(out.len() * sub.len());
                    for base in &out {
                        for s in &sub {
                            let mut piece = base.clone();
                            for h in s {
                                let mut a = DVector::zeros(d);
                                a.rows_mut(off, n).copy_from(&h.a);
                                piece.push(HalfSpace { a, b: h.b });
                            }
                            next.push(piece);
                        }
                    }
                    out = next;
                    off += n;
                }
                out
            }
        }
    }
}

/// `max(0, |s| − |t|)`: twice the max-norm distance of `(t, s)` to the closed cone.
fn cone_gap(t: f64, s: f64) -> f64 {
    (s.abs() - t.abs()).max(0.0)
}

/// `{|s| ≤ |t| + c}` for linear forms `t`, `s`, split by the sign of `t`.
fn cone_pieces(d: usize, t: &[(usize, f64)], s: &[(usize, f64)], c: f64) -> Vec<Piece> {
    let form = |terms: &[(usize, f64)], scale: f64| {
        let mut v = DVector::zeros(d);
        for &(i, w) in terms {
            v[i] += w * scale;
        }
        v
    };
    [1.0, -1.0]
        .iter()
        .map(|&sigma| {
            // ±s − σ t ≤ c
            vec![
                HalfSpace { a: form(s, 1.0) - form(t, sigma), b: c },
                HalfSpace { a: form(s, -1.0) - form(t, sigma), b: c },
            ]
        })
        .collect()
}

/// Complex `l`-neighbourhood `Õ^l` of a base set.
#[derive(Clone, Debug, PartialEq)]
pub struct TubeRegion {
    pub base: Base,
    pub radius: f64,
}

impl TubeRegion {
    pub fn new(base: Base, radius: f64) -> Result<Self> {
        base.validate()?;
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidInput(format!("tube radius must be positive, got {radius}")));
        }
        Ok(Self { base, radius })
    }

    pub fn full(d: usize, radius: f64) -> Result<Self> {
        Self::new(Base::Full(d), radius)
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    /// Open-tube membership: `|Im z|_∞ < l` and the real part within
    /// max-norm distance `< l` of the base set (or on it).
    pub fn contains(&self, z: &[C64]) -> Result<bool> {
        if z.len() != self.dim() {
            return Err(Error::InvalidInput(format!("point of dimension {} for region of dimension {}", z.len(), self.dim())));
        }
        let l = self.radius;
        if z.iter().any(|w| w.im.abs() >= l) {
            return Ok(false);
        }
        let x: Vec<f64> = z.iter().map(|w| w.re).collect();
        let dist = self.base.distance(&x);
        Ok(dist == 0.0 || dist < l)
    }
}

/// Index `(O, l, N)` of a norm `‖·‖_{O,l,N}`.
#[derive(Clone, Debug, PartialEq)]
pub struct NormIndex {
    pub base: Base,
    pub l: f64,
    pub n: usize,
}

impl NormIndex {
    pub fn new(base: Base, l: f64, n: usize) -> Result<Self> {
        base.validate()?;
        if !(l > 0.0) || !l.is_finite() {
            return Err(Error::InvalidInput(format!("norm index l must be positive, got {l}")));
        }
        Ok(Self { base, l, n })
    }

    /// Checks `l < ell` for a space `A_ell`.
    pub fn within(&self, ell: f64) -> Result<()> {
        if self.l < ell {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("norm index l = {} must be below ℓ = {ell}", self.l)))
        }
    }

    pub fn full(d: usize, l: f64, n: usize) -> Result<Self> {
        Self::new(Base::Full(d), l, n)
    }
}
