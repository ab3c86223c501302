use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use super::gaussfn::GaussPolyFn;
use super::region::{Base, HalfSpace, NormIndex, Piece};
use crate::error::{Error, Result};
use crate::numeric::linalg::{imag_part, min_sym_eigenvalue, real_part};
use crate::numeric::poly::indices_up_to;
use crate::numeric::quad::{adaptive, adaptive_real_line, QuadOpts};

/// Settings of the tube maximization behind [`norm_sup`].
#[derive(Clone, Copy, Debug)]
pub struct SupOpts {
    /// Grid points per axis for the coarse scan.
    pub grid: usize,
    /// Golden-section tolerance, relative to the scanned interval.
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for SupOpts {
    fn default() -> Self {
        Self { grid: 201, tol: 1e-10, max_sweeps: 200 }
    }
}

fn check_dims(f: &GaussPolyFn, idx: &NormIndex) -> Result<()> {
    if f.dim() != idx.base.dim() {
        return Err(Error::InvalidInput(format!(
            "function of dimension {} against region of dimension {}",
            f.dim(),
            idx.base.dim()
        )));
    }
    Ok(())
}

/// `‖f‖_{O,l,N} = max_{|κ|≤N} sup_{z∈Õ^l} |z^κ f(z)|` over the closed tube.
pub fn norm_sup(f: &GaussPolyFn, idx: &NormIndex) -> Result<f64> {
    norm_sup_with(f, idx, SupOpts::default())
}

pub fn norm_sup_with(f: &GaussPolyFn, idx: &NormIndex, opts: SupOpts) -> Result<f64> {
    check_dims(f, idx)?;
    if f.is_zero() {
        return Ok(0.0);
    }
    let pieces = idx.base.neighbourhood_pieces(idx.l);
    if let Some(v) = analytic_sup(f, idx, &pieces)? {
        return Ok(v);
    }
    let mut best = f64::NEG_INFINITY;
    for kappa in indices_up_to(f.dim(), idx.n) {
        for piece in &pieces {
            best = best.max(maximize_piece(f, &kappa, piece, idx.l, opts)?);
        }
    }
    Ok(best.exp())
}

/// Closed form for a real Gaussian with constant prefactor at `N = 0`:
/// `|f(x+iy)| = |p| e^{Re λ} e^{−(x−c)ᵀA(x−c) + yᵀAy}` separates in `x` and `y`.
fn analytic_sup(f: &GaussPolyFn, idx: &NormIndex, pieces: &[Piece]) -> Result<Option<f64>> {
    let constant = f.poly().num_terms() == 1 && f.poly().degree() == 0;
    let real = f.quad_form().iter().all(|z| z.im == 0.0) && f.center().iter().all(|z| z.im == 0.0);
    if idx.n != 0 || !constant || !real {
        return Ok(None);
    }
    let d = f.dim();
    let r = real_part(f.quad_form());
    let c = f.center().map(|z| z.re);
    let p0 = f.poly().terms().next().map(|(_, c)| c.norm()).unwrap_or(0.0);
    let mut ymax = f64::NEG_INFINITY;
    for mask in 0..(1usize << d) {
        let y = DVector::from_fn(d, |i, _| if mask >> i & 1 == 1 { idx.l } else { -idx.l });
        ymax = ymax.max((y.transpose() * &r * &y)[(0, 0)]);
    }
    let mut xmin = f64::INFINITY;
    for piece in pieces {
        if let Some((_, v)) = min_quadratic(&r, &c, piece) {
            xmin = xmin.min(v);
        }
    }
    if !xmin.is_finite() {
        return Err(Error::OptimizerNotConverged("empty feasible region".into()));
    }
    Ok(Some((p0.ln() + f.log_amp().re + ymax - xmin).exp()))
}

/// Minimizes `(x−c)ᵀR(x−c)` over a polyhedron by active-set enumeration.
pub(crate) fn min_quadratic(r: &DMatrix<f64>, c: &DVector<f64>, piece: &Piece) -> Option<(DVector<f64>, f64)> {
    let d = c.len();
    let m = piece.len();
    let feasible = |x: &DVector<f64>| {
        piece.iter().all(|h| h.a.dot(x) <= h.b + 1e-10 * (1.0 + h.b.abs() + h.a.amax() * x.amax()))
    };
    let obj = |x: &DVector<f64>| {
        let v = x - c;
        (v.transpose() * r * &v)[(0, 0)]
    };
    let mut best: Option<(DVector<f64>, f64)> = None;
    for mask in 0..(1usize << m) {
        let active: Vec<&HalfSpace> = (0..m).filter(|i| mask >> i & 1 == 1).map(|i| &piece[i]).collect();
        if active.len() > d {
            continue;
        }
        let k = active.len();
        let mut kkt = DMatrix::zeros(d + k, d + k);
        let mut rhs = DVector::zeros(d + k);
        kkt.view_mut((0, 0), (d, d)).copy_from(&(r * 2.0));
        rhs.rows_mut(0, d).copy_from(&(r * c * 2.0));
        for (j, h) in active.iter().enumerate() {
            for i in 0..d {
                kkt[(d + j, i)] = h.a[i];
                kkt[(i, d + j)] = h.a[i];
            }
            rhs[d + j] = h.b;
        }
        let Some(sol) = kkt.lu().solve(&rhs) else { continue };
        let x = sol.rows(0, d).into_owned();
        if !x.iter().all(|v| v.is_finite()) || !feasible(&x) {
            continue;
        }
        let v = obj(&x);
        if best.as_ref().is_none_or(|(_, b)| v < *b) {
            best = Some((x, v));
        }
    }
    best
}

struct Objective<'a> {
    f: &'a GaussPolyFn,
    kappa: &'a [u16],
    z: Vec<C64>,
}

impl Objective<'_> {
    /// `ln |z^κ f(z)|` at `z = x + i y`, with `v = (x, y)`.
    fn value(&mut self, v: &[f64]) -> f64 {
        let d = self.kappa.len();
        for j in 0..d {
            self.z[j] = C64::new(v[j], v[d + j]);
        }
        let mut s = self.f.log_abs(&self.z);
        for (zj, &k) in self.z.iter().zip(self.kappa) {
            if k > 0 {
                s += k as f64 * zj.norm().ln();
            }
        }
        if s.is_nan() {
            f64::NEG_INFINITY
        } else {
            s
        }
    }
}

fn axis_interval(piece: &Piece, v: &[f64], j: usize, lo: f64, hi: f64) -> (f64, f64) {
    let (mut lo, mut hi) = (lo, hi);
    for h in piece {
        let aj = h.a[j];
        if aj == 0.0 {
            continue;
        }
        let rest: f64 = (0..h.a.len()).filter(|&i| i != j).map(|i| h.a[i] * v[i]).sum();
        let bound = (h.b - rest) / aj;
        if aj > 0.0 {
            hi = hi.min(bound);
        } else {
            lo = lo.max(bound);
        }
    }
    (lo, hi)
}

fn golden_max(obj: &mut Objective, v: &mut [f64], j: usize, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let probe = |t: f64, v: &mut [f64], obj: &mut Objective| {
        v[j] = t;
        obj.value(v)
    };
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let mut f1 = probe(x1, v, obj);
    let mut f2 = probe(x2, v, obj);
    while (b - a) > tol {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = probe(x1, v, obj);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = probe(x2, v, obj);
        }
    }
    let (t, ft) = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
    v[j] = t;
    ft
}

fn maximize_piece(f: &GaussPolyFn, kappa: &[u16], piece: &Piece, l: f64, opts: SupOpts) -> Result<f64> {
    let d = f.dim();
    let r = real_part(f.quad_form());
    let s = imag_part(f.quad_form());
    let cre = f.center().map(|z| z.re);
    let cim_max = f.center().iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    let lam = min_sym_eigenvalue(&r);
    let sigma = (0.5 / lam).sqrt();
    let rinv_s = r.clone().try_inverse().map(|ri| ri * &s).unwrap_or_else(|| DMatrix::zeros(d, d));
    let shear = rinv_s.row_iter().map(|row| row.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max);
    let kdeg: usize = kappa.iter().map(|&k| k as usize).sum();
    let deg = (f.poly().degree() + kdeg) as f64;
    let half = 6.0 * sigma * (1.0 + (deg / 2.0).sqrt()) + shear * (l + cim_max) + 1e-9;
    let Some((xq, _)) = min_quadratic(&r, &cre, piece) else {
        return Ok(f64::NEG_INFINITY);
    };
    let lo: Vec<f64> = (0..d).map(|j| cre[j].min(xq[j]) - half).collect();
    let hi: Vec<f64> = (0..d).map(|j| cre[j].max(xq[j]) + half).collect();
    let mut obj = Objective { f, kappa, z: vec![C64::new(0.0, 0.0); d] };

    let mut starts: Vec<Vec<f64>> = Vec::new();
    let base: Vec<f64> = xq.iter().copied().chain(std::iter::repeat_n(0.0, d)).collect();
    starts.push(base.clone());
    if d == 1 {
        // dense scan of the whole (x, y) rectangle
        let (a, b) = axis_interval(piece, &base, 0, lo[0], hi[0]);
        let mut best = (f64::NEG_INFINITY, base.clone());
        let n = opts.grid;
        for ix in 0..n {
            for iy in 0..n {
                let x = a + (b - a) * ix as f64 / (n - 1) as f64;
                let y = -l + 2.0 * l * iy as f64 / (n - 1) as f64;
                let val = obj.value(&[x, y]);
                if val > best.0 {
                    best = (val, vec![x, y]);
                }
            }
        }
        starts.push(best.1);
    } else if d <= 4 {
        for mask in 0..(1usize << d) {
            let mut v = base.clone();
            for i in 0..d {
                v[d + i] = if mask >> i & 1 == 1 { l } else { -l };
            }
            starts.push(v);
        }
    } else {
        for sgn in [1.0, -1.0] {
            let mut v = base.clone();
            v[d..].iter_mut().for_each(|y| *y = sgn * l);
            starts.push(v);
        }
    }

    let mut best = f64::NEG_INFINITY;
    for start in starts {
        best = best.max(coordinate_ascent(&mut obj, start, piece, &lo, &hi, l, opts)?);
    }
    Ok(best)
}

fn coordinate_ascent(
    obj: &mut Objective,
    mut v: Vec<f64>,
    piece: &Piece,
    lo: &[f64],
    hi: &[f64],
    l: f64,
    opts: SupOpts,
) -> Result<f64> {
    let d = lo.len();
    let mut current = obj.value(&v);
    for _ in 0..opts.max_sweeps {
        let before = current;
        let moved_before = v.clone();
        for j in 0..2 * d {
            let (a, b) = if j < d { axis_interval(piece, &v, j, lo[j], hi[j]) } else { (-l, l) };
            if !(b > a) {
                continue;
            }
            let n = opts.grid;
            let h = (b - a) / (n - 1) as f64;
            let keep = v[j];
            let mut best = (obj.value(&v), keep);
            for i in 0..n {
                v[j] = a + h * i as f64;
                let val = obj.value(&v);
                if val > best.0 {
                    best = (val, v[j]);
                }
            }
            let lo_j = (best.1 - h).max(a);
            let hi_j = (best.1 + h).min(b);
            let refined = golden_max(obj, &mut v, j, lo_j, hi_j, opts.tol * (b - a).max(1e-300));
            if refined >= best.0 {
                current = refined;
            } else {
                v[j] = best.1;
                current = best.0;
            }
        }
        // pattern move along the sweep displacement accelerates ridge following
        let dir: Vec<f64> = v.iter().zip(&moved_before).map(|(a, b)| a - b).collect();
        if dir.iter().any(|&x| x != 0.0) && current.is_finite() {
            let tmax = pattern_limit(piece, &v, &dir, lo, hi, l).min(8.0);
            if tmax > 0.0 {
                let base = v.clone();
                let mut line = |t: f64| {
                    let p: Vec<f64> = base.iter().zip(&dir).map(|(b, d)| b + t * d).collect();
                    obj.value(&p)
                };
                let (t, val) = golden_line(&mut line, 0.0, tmax, 1e-10 * tmax);
                if val > current {
                    for (vi, (b, d)) in v.iter_mut().zip(base.iter().zip(&dir)) {
                        *vi = b + t * d;
                    }
                    current = val;
                }
            }
        }
        if current == f64::NEG_INFINITY || (current - before).abs() <= 1e-12 * (1.0 + current.abs()) {
            return Ok(current);
        }
    }
    Err(Error::OptimizerNotConverged(format!("no convergence after {} sweeps", opts.max_sweeps)))
}

/// Largest `t ≥ 0` keeping `v + t·dir` inside the piece, the box and the
/// imaginary range.
fn pattern_limit(piece: &Piece, v: &[f64], dir: &[f64], lo: &[f64], hi: &[f64], l: f64) -> f64 {
    let d = lo.len();
    let mut t = f64::INFINITY;
    let mut cap = |slack: f64, rate: f64| {
        if rate > 0.0 {
            t = t.min((slack / rate).max(0.0));
        }
    };
    for j in 0..d {
        cap(hi[j] - v[j], dir[j]);
        cap(v[j] - lo[j], -dir[j]);
        cap(l - v[d + j], dir[d + j]);
        cap(l + v[d + j], -dir[d + j]);
    }
    for h in piece {
        let ax: f64 = (0..d).map(|i| h.a[i] * v[i]).sum();
        let ad: f64 = (0..d).map(|i| h.a[i] * dir[i]).sum();
        cap(h.b - ax, ad);
    }
    t
}

fn golden_line(g: &mut impl FnMut(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let (mut f1, mut f2) = (g(x1), g(x2));
    while b - a > tol {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = g(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = g(x2);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Integrates `g(z)` over `x ∈ ℝ^d`, `y ∈ [−l, l]^d` by nested adaptive
/// quadrature; `centers` and `scales` set the real-line map per axis.
fn tube_integral<G: Fn(&[C64]) -> f64>(g: &G, d: usize, l: f64, centers: &[f64], scales: &[f64], opts: QuadOpts) -> Result<f64> {
    fn rec<G: Fn(&[C64]) -> f64>(
        g: &G,
        axis: usize,
        d: usize,
        l: f64,
        centers: &[f64],
        scales: &[f64],
        v: &mut Vec<f64>,
        opts: QuadOpts,
    ) -> Result<f64> {
        if axis == 2 * d {
            let z: Vec<C64> = (0..d).map(|j| C64::new(v[j], v[d + j])).collect();
            return Ok(g(&z));
        }
        let mut err = None;
        let mut inner = |t: f64, v: &mut Vec<f64>| -> f64 {
            v[axis] = t;
            match rec(g, axis + 1, d, l, centers, scales, v, opts) {
                Ok(x) => x,
                Err(e) => {
                    err.get_or_insert(e);
                    0.0
                }
            }
        };
        let mut vv = v.clone();
        let r = if axis < d {
            let (c, s) = (centers[axis], scales[axis]);
            adaptive_real_line(|t| C64::new(s * inner(c + s * t, &mut vv), 0.0), opts)?
        } else {
            adaptive(|t| C64::new(inner(t, &mut vv), 0.0), -l, l, opts)?
        };
        if let Some(e) = err {
            return Err(e);
        }
        Ok(r.value.re)
    }
    let mut v = vec![0.0; 2 * d];
    rec(g, 0, d, l, centers, scales, &mut v, opts)
}

fn max_abs(z: &[C64]) -> f64 {
    z.iter().map(|w| w.norm()).fold(0.0, f64::max)
}

/// `‖f‖′_{ℝ^d,l,N} = ∫_{|y|≤l} (1+|z|)^N |f(z)| dx dy` for `d ≤ 2`.
pub fn norm_int(f: &GaussPolyFn, idx: &NormIndex, rel_tol: f64) -> Result<f64> {
    check_dims(f, idx)?;
    let d = f.dim();
    if !matches!(idx.base, Base::Full(_)) {
        return Err(Error::InvalidInput("integral norm is implemented for the FULL region only".into()));
    }
    if d > 2 {
        return Err(Error::InvalidInput(format!("integral norm supports d ≤ 2, got {d}")));
    }
    if f.is_zero() {
        return Ok(0.0);
    }
    let lam = min_sym_eigenvalue(&real_part(f.quad_form()));
    let sigma = (0.5 / lam).sqrt();
    let centers: Vec<f64> = f.center().iter().map(|z| z.re).collect();
    let scales = vec![sigma * (1.0 + (f.poly().degree() as f64).sqrt()); d];
    let n = idx.n as i32;
    let g = |z: &[C64]| {
        let la = f.log_abs(z);
        if la == f64::NEG_INFINITY {
            0.0
        } else {
            (1.0 + max_abs(z)).powi(n) * la.exp()
        }
    };
    let opts = QuadOpts { rel_tol: rel_tol / 10.0, abs_tol: 1e-300, max_intervals: 2000 };
    tube_integral(&g, d, idx.l, &centers, &scales, opts)
}

/// One side-by-side inequality `lhs ≤ rhs`.
#[derive(Clone, Debug, PartialEq)]
pub struct Inequality {
    pub lhs: f64,
    pub rhs: f64,
    pub constant: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EquivalenceReport {
    /// `‖f‖′_{l,N} ≤ C ‖f‖_{l,N+d+1}`.
    pub integral_by_sup: Inequality,
    /// `‖f‖_{l,N} ≤ C′ ‖f‖′_{l′,N}`.
    pub sup_by_integral: Inequality,
}

impl EquivalenceReport {
    pub fn holds(&self) -> bool {
        self.integral_by_sup.holds && self.sup_by_integral.holds
    }
}

/// `C = 2^{N+d+1} ∫_{|y|≤l} (1+|z|)^{−(d+1)} dx dy`; the power of two converts
/// `(1+|z|)^{N+d+1}` into `max_{|κ|≤N+d+1} |z^κ|`.
pub fn sup_constant(d: usize, l: f64, n: usize, rel_tol: f64) -> Result<f64> {
    let p = -(d as i32 + 1);
    let g = |z: &[C64]| (1.0 + max_abs(z)).powi(p);
    let opts = QuadOpts { rel_tol: rel_tol / 10.0, abs_tol: 1e-300, max_intervals: 2000 };
    let base = tube_integral(&g, d, l, &vec![0.0; d], &vec![1.0; d], opts)?;
    Ok(2f64.powi((n + d + 1) as i32) * base)
}

/// `C′ = (π (l′ − l)²)^{−d}` from the sub-mean-value property on polydiscs.
pub fn mean_value_constant(d: usize, l: f64, l_prime: f64) -> f64 {
    (std::f64::consts::PI * (l_prime - l).powi(2)).powi(-(d as i32))
}

/// Checks both inequalities between the sup-norm and integral-norm systems
/// on `ℝ^d`; `rel_tol` is the allowance for quadrature and optimizer error.
pub fn check_norm_equivalence(f: &GaussPolyFn, l: f64, l_prime: f64, n: usize, rel_tol: f64) -> Result<EquivalenceReport> {
    if !(l > 0.0 && l < l_prime) {
        return Err(Error::InvalidInput(format!("need 0 < l < l′, got l={l}, l′={l_prime}")));
    }
    let d = f.dim();
    let quad_tol = 1e-8;
    let int_l = norm_int(f, &NormIndex::full(d, l, n)?, quad_tol)?;
    let sup_hi = norm_sup(f, &NormIndex::full(d, l, n + d + 1)?)?;
    let c = sup_constant(d, l, n, quad_tol)?;
    let sup_l = norm_sup(f, &NormIndex::full(d, l, n)?)?;
    let int_lp = norm_int(f, &NormIndex::full(d, l_prime, n)?, quad_tol)?;
    let cp = mean_value_constant(d, l, l_prime);
    let ineq = |lhs: f64, constant: f64, norm: f64| {
        let rhs = constant * norm;
        Inequality { lhs, rhs, constant, holds: lhs <= rhs * (1.0 + rel_tol) }
    };
    Ok(EquivalenceReport { integral_by_sup: ineq(int_l, c, sup_hi), sup_by_integral: ineq(sup_l, cp, int_lp) })
}
