//! One-dimensional quadrature: adaptive Gauss–Kronrod (21-point) for
//! complex-valued integrands, and Gauss–Legendre node tables for the tensor
//! and transfer-matrix rules.

use std::collections::{BinaryHeap, HashMap};
use std::sync::{Arc, OnceLock};

use num_complex::Complex64 as C64;
use parking_lot::RwLock;

use crate::error::{Error, Result};

const XGK: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.000000000000000000000000000000000,
];

const WGK: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077208067952890,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];

// Gauss weights belonging to XGK[1], XGK[3], …, XGK[9].
const WG: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];

/// Tolerances and budget for [`adaptive`].
#[derive(Clone, Copy, Debug)]
pub struct QuadOpts {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOpts {
    fn default() -> Self {
        Self { rel_tol: 1e-10, abs_tol: 1e-300, max_intervals: 4000 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadResult {
    pub value: C64,
    pub error: f64,
    pub evals: usize,
}

fn gk21<F: FnMut(f64) -> C64>(f: &mut F, a: f64, b: f64) -> (C64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[10];
    let mut gauss = C64::new(0.0, 0.0);
    for j in 0..10 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron += s * WGK[j];
        if j % 2 == 1 {
            gauss += s * WG[j / 2];
        }
    }
    let err = ((kron - gauss) * h).norm();
    (kron * h, err)
}

#[derive(PartialEq)]
struct Segment {
    err: f64,
    a: f64,
    b: f64,
    val: C64,
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Globally adaptive Gauss–Kronrod quadrature of `f` over `[a, b]`, started
/// from `initial` equal subintervals.
pub fn adaptive_split<F: FnMut(f64) -> C64>(
    mut f: F,
    a: f64,
    b: f64,
    initial: usize,
    opts: QuadOpts,
) -> Result<QuadResult> {
    if a == b {
        return Ok(QuadResult { value: C64::new(0.0, 0.0), error: 0.0, evals: 0 });
    }
    let n0 = initial.max(1);
    let mut heap = BinaryHeap::new();
    let mut total = C64::new(0.0, 0.0);
    let mut total_err = 0.0;
    let mut evals = 0;
    for i in 0..n0 {
        let lo = a + (b - a) * i as f64 / n0 as f64;
        let hi = a + (b - a) * (i + 1) as f64 / n0 as f64;
        let (v, e) = gk21(&mut f, lo, hi);
        evals += 21;
        total += v;
        total_err += e;
        heap.push(Segment { err: e, a: lo, b: hi, val: v });
    }
    loop {
        let tol = opts.abs_tol.max(opts.rel_tol * total.norm());
        if total_err <= tol {
            break;
        }
        if heap.len() >= opts.max_intervals {
            return Err(Error::QuadratureBudgetExceeded(format!(
                "{} subintervals on [{a}, {b}], error estimate {total_err:e} > {tol:e}",
                heap.len()
            )));
        }
        let seg = heap.pop().expect("heap is non-empty");
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a || mid >= seg.b {
            // interval exhausted at machine resolution
            heap.push(Segment { err: 0.0, ..seg });
            total_err = heap.iter().map(|s| s.err).sum();
            continue;
        }
        let (v1, e1) = gk21(&mut f, seg.a, mid);
        let (v2, e2) = gk21(&mut f, mid, seg.b);
        evals += 42;
        total += v1 + v2 - seg.val;
        heap.push(Segment { err: e1, a: seg.a, b: mid, val: v1 });
        heap.push(Segment { err: e2, a: mid, b: seg.b, val: v2 });
        // re-summing avoids drift from repeated subtraction
        total_err = heap.iter().map(|s| s.err).sum();
    }
    let value = heap.iter().map(|s| s.val).sum();
    Ok(QuadResult { value, error: total_err, evals })
}

pub fn adaptive<F: FnMut(f64) -> C64>(f: F, a: f64, b: f64, opts: QuadOpts) -> Result<QuadResult> {
    adaptive_split(f, a, b, 1, opts)
}

/// Real-valued convenience wrapper.
pub fn adaptive_real<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, opts: QuadOpts) -> Result<(f64, f64)> {
    let r = adaptive(|x| C64::new(f(x), 0.0), a, b, opts)?;
    Ok((r.value.re, r.error))
}

/// Integral over the whole real line through `x = t / (1 - t²)`.
pub fn adaptive_real_line<F: FnMut(f64) -> C64>(mut f: F, opts: QuadOpts) -> Result<QuadResult> {
    adaptive_split(
        |t| {
            let d = 1.0 - t * t;
            if d <= 0.0 {
                return C64::new(0.0, 0.0);
            }
            let x = t / d;
            let jac = (1.0 + t * t) / (d * d);
            let v = f(x);
            if v == C64::new(0.0, 0.0) {
                v
            } else {
                v * jac
            }
        },
        -1.0,
        1.0,
        8,
        opts,
    )
}

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    fn compute(n: usize) -> Self {
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Cached rule with `n` nodes.
    pub fn get(n: usize) -> Arc<GaussLegendre> {
        static CACHE: OnceLock<RwLock<HashMap<usize, Arc<GaussLegendre>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| RwLock::new(HashMap::new()));
        if let Some(r) = cache.read().get(&n) {
            return r.clone();
        }
        let rule = Arc::new(Self::compute(n));
        cache.write().insert(n, rule.clone());
        rule
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        (self.nodes.iter().map(|x| c + h * x).collect(), self.weights.iter().map(|w| w * h).collect())
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}
