//! Transfer-matrix rule for contraction graphs of maximal degree two over
//! one-block factors.
//!
//! Such a graph is a disjoint union of paths and cycles. Along a component
//! every vertex couples the momenta of its two edges through
//! `F̃_v(b(s_in p_in + s_out p_out))`, so after sampling each edge momentum on
//! a common grid the component is a trace (cycle) or a bilinear form (path)
//! of a product of kernel matrices sampled on a rapidity grid.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::smear::{min_decay, on_shell, two_point_estimate, Estimate, FactorFt, Prepared, Smearing, FOUR_PI};
use super::wick::ContractionGraph;
use crate::error::Result;
use crate::numeric::linalg::complex_mul;
use crate::numeric::quad::GaussLegendre;
use crate::numeric::{ONE, ZERO};
use crate::store::{Context, Key, KeyBuilder};

/// Walk through one connected component: its vertex sequence and the edges
/// between consecutive vertices, oriented along the walk.
struct Walk {
    vertices: Vec<usize>,
    edges: Vec<(usize, usize)>,
    cycle: bool,
}

fn components(graph: &ContractionGraph) -> (Vec<Walk>, Vec<usize>) {
    let n = graph.n();
    let edges = graph.edge_list();
    let mut used = vec![false; edges.len()];
    let mut seen = vec![false; n];
    let mut walks = Vec::new();
    let isolated: Vec<usize> = (0..n).filter(|&v| graph.degrees[v] == 0).collect();
    let incident = |v: usize, used: &[bool]| edges.iter().enumerate().position(|(k, &(a, b))| !used[k] && (a == v || b == v));
    // paths first, from their lower-indexed end; then cycles from their
    // lowest vertex
    let mut starts: Vec<usize> = (0..n).filter(|&v| graph.degrees[v] == 1).collect();
    starts.extend((0..n).filter(|&v| graph.degrees[v] == 2));
    for start in starts {
        if seen[start] {
            continue;
        }
        let cycle = graph.degrees[start] == 2;
        let mut vertices = vec![start];
        let mut wedges = Vec::new();
        seen[start] = true;
        let mut cur = start;
        while let Some(k) = incident(cur, &used) {
            used[k] = true;
            let (a, b) = edges[k];
            let next = if a == cur { b } else { a };
            wedges.push((cur, next));
            if next == start {
                break;
            }
            seen[next] = true;
            vertices.push(next);
            cur = next;
        }
        walks.push(Walk { vertices, edges: wedges, cycle });
    }
    (walks, isolated)
}

/// `+1` if `v` is the lower endpoint of its edge to `other`: the edge
/// momentum enters `Q_v` with a plus sign.
fn sign(v: usize, other: usize) -> f64 {
    if v < other {
        1.0
    } else {
        -1.0
    }
}

struct Grid {
    p: Vec<[f64; 2]>,
    w: Vec<f64>,
    key: Key,
}

/// Gauss–Legendre in the rapidity on `|k| ≤ k_max`, where `dk/ω = du`.
fn grid(m: f64, nodes: usize, k_max: f64) -> Grid {
    let gl = GaussLegendre::get(nodes);
    let u_max = (k_max / m).asinh();
    let (u, w) = gl.mapped(-u_max, u_max);
    let p = u.iter().map(|&u| on_shell(m, u)).collect();
    let key = KeyBuilder::new("tm_grid").f64(m).u64(nodes as u64).f64(k_max).finish();
    Grid { p, w, key }
}

/// Momentum cutoff where every factor transform is below `e^{−40}`, with
/// room for the drift along ridges; rounded up so nearby smearings share
/// grids.
fn momentum_cutoff(m: f64, decay: f64) -> f64 {
    (1.25 * (40.0 / decay).sqrt() + m).ceil()
}

fn eval_at(f: &FactorFt, q: [f64; 2]) -> C64 {
    f.ft.eval(&[C64::new(q[0], 0.0), C64::new(-q[1], 0.0)])
}

/// A vertex as seen by a walk: factor and the signs of its incoming and
/// outgoing edge momenta.
#[derive(Clone, Copy)]
struct Letter<'a> {
    f: &'a FactorFt,
    s_in: f64,
    s_out: f64,
}

impl Letter<'_> {
    fn key(&self, g: &Grid) -> Key {
        KeyBuilder::new("tm_letter").bytes(&g.key).bytes(&self.f.fp).f64(self.s_in).f64(self.s_out).finish()
    }
}

/// `N(i, j) = F̃(b(s_in p_i + s_out p_j)) w_j`.
fn kernel(l: Letter, g: &Grid, ctx: &Context) -> Arc<DMatrix<C64>> {
    ctx.kernel(l.key(g), || {
        let n = g.p.len();
        DMatrix::from_fn(n, n, |i, j| {
            let q = [l.s_in * g.p[i][0] + l.s_out * g.p[j][0], l.s_in * g.p[i][1] + l.s_out * g.p[j][1]];
            eval_at(l.f, q) * g.w[j]
        })
    })
}

/// `N_{l₀} N_{l₁} ⋯`; products of up to three letters are cached because
/// every longer cycle splits into two of them.
fn chain(letters: &[Letter], g: &Grid, ctx: &Context) -> Arc<DMatrix<C64>> {
    match letters.len() {
        0 => unreachable!("empty chain"),
        1 => kernel(letters[0], g, ctx),
        2 | 3 => {
            let mut kb = KeyBuilder::new("tm_chain");
            for l in letters {
                kb = kb.bytes(&l.key(g));
            }
            ctx.kernel(kb.finish(), || {
                let head = chain(&letters[..letters.len() - 1], g, ctx);
                complex_mul(&head, &kernel(letters[letters.len() - 1], g, ctx))
            })
        }
        _ => {
            let head = chain(&letters[..3], g, ctx);
            let tail = chain(&letters[3..], g, ctx);
            Arc::new(complex_mul(&head, &tail))
        }
    }
}

fn letters<'a>(walk: &Walk, prep: &'a Prepared) -> Vec<Letter<'a>> {
    let k = walk.edges.len();
    walk.vertices
        .iter()
        .enumerate()
        .map(|(idx, &v)| {
            let other = |e: (usize, usize)| if e.0 == v { e.1 } else { e.0 };
            let s_in = if walk.cycle || idx > 0 { sign(v, other(walk.edges[(idx + k - 1) % k])) } else { 0.0 };
            let s_out = if idx < k { sign(v, other(walk.edges[idx])) } else { 0.0 };
            Letter { f: &prep.factors[prep.owner[v].0], s_in, s_out }
        })
        .collect()
}

/// Unnormalized walk integral on one grid (no `(4π)^{−E}`).
fn walk_value(walk: &Walk, letters: &[Letter], g: &Grid, ctx: &Context) -> C64 {
    if walk.cycle {
        let h = letters.len().div_ceil(2);
        let a = chain(&letters[..h], g, ctx);
        let b = chain(&letters[h..], g, ctx);
        let n = g.p.len();
        let mut tr = ZERO;
        for i in 0..n {
            for j in 0..n {
                tr += a[(i, j)] * b[(j, i)];
            }
        }
        tr
    } else {
        let first = letters[0];
        let last = letters[letters.len() - 1];
        let mut row: Vec<C64> = g.p.iter().zip(&g.w).map(|(p, w)| eval_at(first.f, scaled(first.s_out, p)) * *w).collect();
        if letters.len() > 2 {
            let mid = chain(&letters[1..letters.len() - 1], g, ctx);
            let n = g.p.len();
            let mut next = vec![ZERO; n];
            for (i, ri) in row.iter().enumerate() {
                for (j, nj) in next.iter_mut().enumerate() {
                    *nj += ri * mid[(i, j)];
                }
            }
            row = next;
        }
        row.iter().zip(&g.p).map(|(r, p)| r * eval_at(last.f, scaled(last.s_in, p))).sum()
    }
}

fn scaled(s: f64, p: &[f64; 2]) -> [f64; 2] {
    [s * p[0], s * p[1]]
}

/// Walk integrals depend only on the letter sequence, which recurs across
/// graphs and across smearings built from the same factors.
fn walk_estimate(m: f64, walk: &Walk, prep: &Prepared, k_max: f64, ctx: &Context) -> Estimate {
    let letters = letters(walk, prep);
    let mut kb = ctx.salt(KeyBuilder::new("tm_walk").f64(m).f64(k_max).u64(walk.cycle as u64));
    for l in &letters {
        kb = kb.bytes(&l.f.fp).f64(l.s_in).f64(l.s_out);
    }
    let v = ctx.transient(kb.finish(), || {
        let e = walk_uncached(m, walk, &letters, k_max, ctx);
        vec![e.value.re, e.value.im, e.error]
    });
    Estimate { value: C64::new(v[0], v[1]), error: v[2] }
}

fn walk_uncached(m: f64, walk: &Walk, letters: &[Letter], k_max: f64, ctx: &Context) -> Estimate {
    let mut nodes = ctx.gl_nodes;
    let mut fine = walk_value(walk, letters, &grid(m, nodes, k_max), ctx);
    let mut coarse = walk_value(walk, letters, &grid(m, nodes / 2, k_max), ctx);
    // refine while the two rules disagree beyond the working tolerance
    while (fine - coarse).norm() > 1e-9 * fine.norm() && nodes < 4 * ctx.gl_nodes {
        nodes *= 2;
        coarse = fine;
        fine = walk_value(walk, letters, &grid(m, nodes, k_max), ctx);
    }
    let scale = FOUR_PI.powi(walk.edges.len() as i32);
    Estimate { value: fine / scale, error: (fine - coarse).norm() / scale }
}

pub(super) fn transfer_matrix(m: f64, graph: &ContractionGraph, prep: &Prepared, s: &Smearing, ctx: &Context) -> Result<Estimate> {
    let (walks, isolated) = components(graph);
    let k_max = momentum_cutoff(m, min_decay(prep));
    let mut parts = Vec::with_capacity(walks.len() + isolated.len());
    for &v in &isolated {
        parts.push(Estimate::exact(eval_at(&prep.factors[prep.owner[v].0], [0.0, 0.0])));
    }
    for walk in &walks {
        let est = if walk.edges.len() == 1 && !walk.cycle {
            let (a, b) = walk.edges[0];
            let (lo, hi) = (a.min(b), a.max(b));
            two_point_estimate(m, &s.factors()[prep.owner[lo].0], &s.factors()[prep.owner[hi].0], ctx)?
        } else {
            walk_estimate(m, walk, prep, k_max, ctx)
        };
        parts.push(est);
    }
    let value = parts.iter().fold(ONE, |acc, p| acc * p.value);
    let error = (0..parts.len())
        .map(|i| {
            let others: f64 = parts.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, p)| p.value.norm()).product();
            parts[i].error * others
        })
        .sum();
    Ok(Estimate { value, error })
}
