//! Smeared Wightman functionals of Wick-series models, evaluated in momentum
//! space: one on-shell rapidity `u_e` per contraction edge, position
//! integrals done in closed form through the Fourier transforms of the
//! test functions.


use num_complex::Complex64 as C64;
use rayon::prelude::*;

use super::model::{FreeFieldSpec, WickSeriesModel};
use super::transfer::transfer_matrix;
use super::wick::{enumerate_contractions, ContractionGraph};
use crate::error::{Error, Result};
use crate::numeric::linalg::{min_sym_eigenvalue, real_part};
use crate::numeric::qmc::Rd;
use crate::numeric::quad::{adaptive, GaussLegendre, QuadOpts};
use crate::numeric::{ONE, ZERO};
use crate::store::{Context, Key, KeyBuilder};
use crate::testfn::GaussPolyFn;
use crate::BLOCK_DIM;

pub(super) const FOUR_PI: f64 = 4.0 * std::f64::consts::PI;

/// Value with an absolute error estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: C64,
    pub error: f64,
}

impl Estimate {
    pub fn exact(value: C64) -> Self {
        Self { value, error: 0.0 }
    }
}

/// Test function on `n` spacetime blocks, stored as an ordered product of
/// factors each covering one or more consecutive blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct Smearing {
    factors: Vec<GaussPolyFn>,
}

impl Smearing {
    pub fn new(factors: Vec<GaussPolyFn>) -> Result<Self> {
        for f in &factors {
            if f.dim() % BLOCK_DIM != 0 {
                return Err(Error::BlockMismatch(format!("factor of dimension {} is not a union of blocks", f.dim())));
            }
        }
        Ok(Self { factors })
    }

    /// `f_1 ⊗ ⋯ ⊗ f_n` of one-block functions.
    pub fn product(factors: Vec<GaussPolyFn>) -> Result<Self> {
        for f in &factors {
            if f.dim() != BLOCK_DIM {
                return Err(Error::BlockMismatch(format!("expected a one-block factor, got dimension {}", f.dim())));
            }
        }
        Ok(Self { factors })
    }

    pub fn joint(f: GaussPolyFn) -> Result<Self> {
        Self::new(vec![f])
    }

    /// The vacuum component: no blocks, value 1.
    pub fn empty() -> Self {
        Self { factors: Vec::new() }
    }

    pub fn factors(&self) -> &[GaussPolyFn] {
        &self.factors
    }

    pub fn blocks(&self) -> usize {
        self.factors.iter().map(|f| f.dim() / BLOCK_DIM).sum()
    }

    /// `(f_1 ⊗ ⋯ ⊗ f_k)† = f_k† ⊗ ⋯ ⊗ f_1†`.
    pub fn dagger(&self) -> Self {
        Self { factors: self.factors.iter().rev().map(GaussPolyFn::dagger_st).collect() }
    }

    pub fn tensor(&self, other: &Self) -> Self {
        let mut factors = self.factors.clone();
        factors.extend(other.factors.iter().cloned());
        Self { factors }
    }

    pub fn scale(&self, c: C64) -> Self {
        let mut s = self.clone();
        if let Some(f) = s.factors.first_mut() {
            *f = f.scale(c);
        }
        s
    }

    /// All factors merged into one function of all blocks.
    pub fn to_joint(&self) -> Option<GaussPolyFn> {
        let mut it = self.factors.iter();
        let first = it.next()?.clone();
        Some(it.fold(first, |acc, f| acc.tensor(f)))
    }

    pub fn translate(&self, a: [f64; 2]) -> Self {
        Self { factors: self.factors.iter().map(|f| f.translate_st(a)).collect() }
    }

    pub fn is_zero(&self) -> bool {
        self.factors.iter().any(GaussPolyFn::is_zero)
    }

    pub fn hash_into(&self, mut kb: KeyBuilder) -> KeyBuilder {
        kb = kb.u64(self.factors.len() as u64);
        for f in &self.factors {
            kb = f.hash_into(kb);
        }
        kb
    }
}

/// Fourier data of one factor.
pub(super) struct FactorFt {
    pub(super) ft: GaussPolyFn,
    pub(super) fp: Key,
    pub(super) blocks: usize,
    /// `λ_min(Re A_F)`, the Gaussian decay rate in momentum space.
    pub(super) decay: f64,
}

pub(super) struct Prepared {
    pub(super) factors: Vec<FactorFt>,
    /// `(factor, position)` of every block.
    pub(super) owner: Vec<(usize, usize)>,
}

impl Prepared {
    fn new(s: &Smearing) -> Result<Self> {
        let mut factors = Vec::with_capacity(s.factors.len());
        let mut owner = Vec::new();
        for (fi, f) in s.factors.iter().enumerate() {
            let ft = f.fourier()?;
            let decay = min_sym_eigenvalue(&real_part(ft.quad_form()));
            let fp = f.hash_into(KeyBuilder::new("factor")).finish();
            let blocks = f.dim() / BLOCK_DIM;
            for k in 0..blocks {
                owner.push((fi, k));
            }
            factors.push(FactorFt { ft, fp, blocks, decay });
        }
        Ok(Self { factors, owner })
    }

    /// `Π_factors F̃(b)` with `b_i = (Q_i⁰, −Q_i¹)` for vertex momenta `q`.
    fn eval(&self, q: &[[f64; 2]], buf: &mut Vec<C64>) -> C64 {
        let mut out = ONE;
        let mut v = 0;
        for f in &self.factors {
            buf.clear();
            for _ in 0..f.blocks {
                buf.push(C64::new(q[v][0], 0.0));
                buf.push(C64::new(-q[v][1], 0.0));
                v += 1;
            }
            out *= f.ft.eval(buf);
            if out == ZERO {
                return out;
            }
        }
        out
    }
}

pub(super) fn on_shell(m: f64, u: f64) -> [f64; 2] {
    [m * u.cosh(), m * u.sinh()]
}

/// Rapidity cutoff beyond which every factor transform is negligible, rounded
/// up to a multiple of 1/2 so that nearby smearings share grids.
fn rapidity_cutoff(m: f64, n: usize, decay: f64) -> f64 {
    let u = (n.max(1) as f64 * (60.0 / decay).sqrt() / m).asinh() + 0.5;
    (u * 2.0).ceil() / 2.0
}

/// `(W₂, f⊗g) = (1/4π) ∫ du F(p)·G(−p)` with `p = (m cosh u, m sinh u)`.
pub fn two_point_smeared(spec: &FreeFieldSpec, f: &GaussPolyFn, g: &GaussPolyFn, ctx: &Context) -> Result<C64> {
    if f.dim() != BLOCK_DIM || g.dim() != BLOCK_DIM {
        return Err(Error::BlockMismatch("two-point smearing needs one-block functions".into()));
    }
    if f.is_zero() || g.is_zero() {
        return Ok(ZERO);
    }
    Ok(two_point_estimate(spec.mass, f, g, ctx)?.value)
}

pub(super) fn two_point_estimate(m: f64, f: &GaussPolyFn, g: &GaussPolyFn, ctx: &Context) -> Result<Estimate> {
    let key = ctx.salt(g.hash_into(f.hash_into(KeyBuilder::new("two_point_smeared").f64(m)))).finish();
    let v = ctx.memo(key, || {
        let e = single_edge(m, f, g, ctx)?;
        Ok::<_, Error>(vec![e.value.re, e.value.im, e.error])
    })?;
    Ok(Estimate { value: C64::new(v[0], v[1]), error: v[2] })
}

fn single_edge(m: f64, f: &GaussPolyFn, g: &GaussPolyFn, ctx: &Context) -> Result<Estimate> {
    let ff = f.fourier()?;
    let gf = g.fourier()?;
    let decay = min_sym_eigenvalue(&real_part(ff.quad_form())).min(min_sym_eigenvalue(&real_part(gf.quad_form())));
    let u_max = rapidity_cutoff(m, 1, decay);
    let integrand = |u: f64| {
        let p = on_shell(m, u);
        let b = [C64::new(p[0], 0.0), C64::new(-p[1], 0.0)];
        ff.eval(&b) * gf.eval(&[-b[0], -b[1]])
    };
    // oscillating integrands cancel below rounding of ∫|·|; aim at that floor
    let rough = QuadOpts { rel_tol: 1e-3, abs_tol: 1e-300, max_intervals: 4000 };
    let l1 = adaptive(|u| C64::new(integrand(u).norm(), 0.0), -u_max, u_max, rough)?.value.re;
    let opts = QuadOpts { rel_tol: ctx.rel_tol, abs_tol: 1e-12 * l1, max_intervals: 4000 };
    let r = adaptive(integrand, -u_max, u_max, opts)?;
    Ok(Estimate { value: r.value / FOUR_PI, error: r.error / FOUR_PI })
}

/// `(𝒲_n, f)` for `φ = Σ_r d_r/r! :φ^r:`: a sum over degree tuples of
/// `Π d_{r_i}/r_i!` times the Wick sum of contraction graphs.
pub fn npoint_smeared(model: &WickSeriesModel, s: &Smearing, ctx: &Context) -> Result<Estimate> {
    let n = s.blocks();
    if n == 0 {
        return Ok(Estimate::exact(ONE));
    }
    if s.is_zero() {
        return Ok(Estimate::exact(ZERO));
    }
    let total = degree_tuples(&model.support(), n).iter().map(|t| t.iter().sum::<usize>()).max().unwrap_or(0);
    if total > ctx.wick_cap {
        return Err(Error::CombinatorialBudgetExceeded { total, cap: ctx.wick_cap });
    }
    let key = ctx
        .salt(s.hash_into(model_key(model, KeyBuilder::new("npoint_smeared"))))
        .finish();
    let v = ctx.memo(key, || {
        let e = npoint_uncached(model, s, ctx)?;
        Ok::<_, Error>(vec![e.value.re, e.value.im, e.error])
    })?;
    Ok(Estimate { value: C64::new(v[0], v[1]), error: v[2] })
}

pub(crate) fn model_key(model: &WickSeriesModel, mut kb: KeyBuilder) -> KeyBuilder {
    kb = kb.f64(model.mass()).f64(model.g).u64(model.coeffs.len() as u64);
    for d in &model.coeffs {
        kb = kb.f64(*d);
    }
    kb
}

/// Degree tuples over the model support with an even total.
fn degree_tuples(support: &[usize], n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(n);
    fn rec(support: &[usize], n: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == n {
            if cur.iter().sum::<usize>() % 2 == 0 {
                out.push(cur.clone());
            }
            return;
        }
        for &r in support {
            cur.push(r);
            rec(support, n, cur, out);
            cur.pop();
        }
    }
    rec(support, n, &mut cur, &mut out);
    out
}

fn npoint_uncached(model: &WickSeriesModel, s: &Smearing, ctx: &Context) -> Result<Estimate> {
    let n = s.blocks();
    let prep = Prepared::new(s)?;
    let support = model.support();
    let m = model.mass();
    let skey = s.hash_into(KeyBuilder::new("smearing")).finish();
    let mut value = ZERO;
    let mut error = 0.0;
    for tuple in degree_tuples(&support, n) {
        let pref: f64 = tuple.iter().map(|&r| model.coeff(r) / factorial(r)).product();
        for graph in enumerate_contractions(&tuple, ctx.wick_cap)? {
            let w = graph.weight as f64 * pref;
            let e = graph_integral(m, &graph, s, &skey, &prep, ctx)?;
            value += e.value * w;
            error += e.error * w.abs();
        }
    }
    Ok(Estimate { value, error })
}

fn factorial(r: usize) -> f64 {
    (1..=r).map(|k| k as f64).product()
}

/// `(4π)^{−E} ∫ Π_e du_e Π_factors F̃(Q)` for one contraction graph.
///
/// Graphs of maximal degree two over one-block factors factorize into paths
/// and cycles and go through the transfer-matrix rule, which is cheap once
/// its kernels are sampled; only the generic rules are memoized per graph.
fn graph_integral(m: f64, graph: &ContractionGraph, s: &Smearing, skey: &Key, prep: &Prepared, ctx: &Context) -> Result<Estimate> {
    let edges = graph.edge_list();
    let e = edges.len();
    if e == 0 {
        let q = vec![[0.0, 0.0]; graph.n()];
        return Ok(Estimate::exact(prep.eval(&q, &mut Vec::new())));
    }
    if prep.factors.iter().all(|f| f.blocks == 1) && graph.degrees.iter().all(|&r| r <= 2) {
        return transfer_matrix(m, graph, prep, s, ctx);
    }
    let key = ctx.salt(graph_key(graph, KeyBuilder::new("graph_integral").f64(m).bytes(skey))).finish();
    let v = ctx.memo(key, || {
        let est = if e <= 3 {
            tensor_rule(m, &edges, graph.n(), prep, ctx)?
        } else if e <= 8 {
            quasi_random(m, &edges, graph.n(), prep, ctx)?
        } else {
            return Err(Error::QuadratureBudgetExceeded(format!("{e} edge momenta exceed the sampling limit of 8")));
        };
        Ok::<_, Error>(vec![est.value.re, est.value.im, est.error])
    })?;
    Ok(Estimate { value: C64::new(v[0], v[1]), error: v[2] })
}

fn graph_key(graph: &ContractionGraph, mut kb: KeyBuilder) -> KeyBuilder {
    kb = kb.u64(graph.n() as u64);
    for row in &graph.edges {
        for &l in row {
            kb = kb.u64(l as u64);
        }
    }
    kb
}

pub(super) fn min_decay(prep: &Prepared) -> f64 {
    prep.factors.iter().map(|f| f.decay).fold(f64::INFINITY, f64::min)
}

fn vertex_momenta(m: f64, edges: &[(usize, usize)], n: usize, u: &[f64], q: &mut Vec<[f64; 2]>) {
    q.clear();
    q.resize(n, [0.0, 0.0]);
    for (&(i, j), &ue) in edges.iter().zip(u) {
        let p = on_shell(m, ue);
        q[i][0] += p[0];
        q[i][1] += p[1];
        q[j][0] -= p[0];
        q[j][1] -= p[1];
    }
}

fn tensor_rule(m: f64, edges: &[(usize, usize)], n: usize, prep: &Prepared, ctx: &Context) -> Result<Estimate> {
    let u_max = rapidity_cutoff(m, n, min_decay(prep));
    let rule = |nodes: usize| {
        let gl = GaussLegendre::get(nodes);
        let (x, w) = gl.mapped(-u_max, u_max);
        let e = edges.len();
        let total = nodes.pow(e as u32);
        let chunk = |start: usize, end: usize| {
            let mut q = Vec::new();
            let mut buf = Vec::new();
            let mut u = vec![0.0; e];
            let mut acc = ZERO;
            for idx in start..end {
                let mut k = idx;
                let mut wt = 1.0;
                for ue in u.iter_mut() {
                    let i = k % nodes;
                    k /= nodes;
                    *ue = x[i];
                    wt *= w[i];
                }
                vertex_momenta(m, edges, n, &u, &mut q);
                acc += prep.eval(&q, &mut buf) * wt;
            }
            acc
        };
        let step = nodes;
        let parts: Vec<C64> = (0..total.div_ceil(step))
            .into_par_iter()
            .map(|c| chunk(c * step, ((c + 1) * step).min(total)))
            .collect();
        parts.into_iter().fold(ZERO, |a, b| a + b) / FOUR_PI.powi(e as i32)
    };
    let mut nodes = ctx.gl_nodes;
    let mut fine = rule(nodes);
    let mut coarse = rule(nodes / 2);
    // escalation is capped so that a three-edge rule stays below ~10⁷ points
    let limit = if edges.len() <= 2 { 8 * ctx.gl_nodes } else { 2 * ctx.gl_nodes };
    while (fine - coarse).norm() > 1e-9 * fine.norm() && nodes < limit {
        nodes *= 2;
        coarse = fine;
        fine = rule(nodes);
    }
    Ok(Estimate { value: fine, error: (fine - coarse).norm() })
}

fn quasi_random(m: f64, edges: &[(usize, usize)], n: usize, prep: &Prepared, ctx: &Context) -> Result<Estimate> {
    let e = edges.len();
    let u_max = rapidity_cutoff(m, n, min_decay(prep));
    let vol = (2.0 * u_max).powi(e as i32);
    let npts = ctx.qmc_points.max(1 << 16);
    let family = Rd::shifted_family(e, ctx.seed, 2);
    let estimates: Vec<C64> = family
        .iter()
        .map(|rd| {
            let blocks = 64;
            let per = npts.div_ceil(blocks);
            let parts: Vec<C64> = (0..blocks)
                .into_par_iter()
                .map(|b| {
                    let mut q = Vec::new();
                    let mut buf = Vec::new();
                    let mut t = vec![0.0; e];
                    let mut u = vec![0.0; e];
                    let mut acc = ZERO;
                    for i in (b * per)..((b + 1) * per).min(npts) {
                        rd.point(i as u64, &mut t);
                        // periodizing tent map keeps the lattice rule accurate
                        // for non-periodic integrands
                        for (uj, tj) in u.iter_mut().zip(&t) {
                            let s = 1.0 - (2.0 * tj - 1.0).abs();
                            *uj = -u_max + 2.0 * u_max * s;
                        }
                        vertex_momenta(m, edges, n, &u, &mut q);
                        acc += prep.eval(&q, &mut buf);
                    }
                    acc
                })
                .collect();
            parts.into_iter().fold(ZERO, |a, b| a + b) * vol / npts as f64 / FOUR_PI.powi(e as i32)
        })
        .collect();
    let value = (estimates[0] + estimates[1]) * 0.5;
    Ok(Estimate { value, error: 0.5 * (estimates[0] - estimates[1]).norm() })
}
