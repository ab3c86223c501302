//! Execution of the configured checks and their report records.

use std::time::Instant;

use nlrecon::freefield::{enumerate_contractions, npoint_smeared, Smearing, WickSeriesModel};
use nlrecon::gns::{build_gram, cluster_profile, spectral_residual, BorchersVector, Dictionary, GnsOpts, SpectralGrid};
use nlrecon::quasiloc::{carrier_profile, spacelike_pair, Functional};
use nlrecon::store::Context;
use nlrecon::testfn::{check_norm_equivalence, Base, GaussPolyFn, NormIndex};
use nlrecon::Error;
use serde_json::{json, Value};

use crate::config::{CheckConfig, ModelKindConfig, Scenario};

/// Flat table emitted next to the report.
#[derive(Clone, Debug)]
pub struct Profile {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Profile {
    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|x| format!("{x:e}")).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct CheckRecord {
    pub name: String,
    pub kind: &'static str,
    pub inputs: Value,
    pub values: Value,
    pub error_estimates: Value,
    /// `None` for purely informational checks.
    pub pass: Option<bool>,
    pub error: Option<String>,
    pub wall_time: f64,
    pub profile: Option<Profile>,
}

impl CheckRecord {
    pub fn to_json(&self) -> Value {
        json!({
            "name": self.name,
            "kind": self.kind,
            "inputs": self.inputs,
            "values": self.values,
            "error_estimates": self.error_estimates,
            "pass": self.pass,
            "error": self.error,
            "wall_time_s": self.wall_time,
        })
    }
}

/// A check that ran out of an integration or combinatorial budget.
#[derive(Debug)]
pub struct BudgetExceeded {
    pub check: String,
    pub error: Error,
}

fn is_budget(e: &Error) -> bool {
    matches!(e, Error::QuadratureBudgetExceeded(_) | Error::CombinatorialBudgetExceeded { .. } | Error::CapExceeded(_))
}

pub struct Env<'a> {
    pub scenario: &'a Scenario,
    pub model: WickSeriesModel,
    pub dict: Dictionary,
    pub opts: GnsOpts,
    pub ctx: Context,
    pub tolerance_scale: f64,
}

struct Outcome {
    values: Value,
    errors: Value,
    pass: Option<bool>,
    profile: Option<Profile>,
}

pub fn run_check(env: &Env, index: usize, check: &CheckConfig) -> Result<CheckRecord, BudgetExceeded> {
    let name = format!("{index:02}_{}", check.kind());
    let start = Instant::now();
    let inputs = serde_json::to_value(check).expect("check serializes");
    let result = match check {
        CheckConfig::Norms { functions, triples, rel_tol } => norms(functions, triples, rel_tol * env.tolerance_scale),
        CheckConfig::Wick { max_total, max_points, points, width } => wick(env, *max_total, *max_points, points, *width),
        CheckConfig::Gns {} => gns(env),
        CheckConfig::Spectrum { word_f, word_g, points, spacing, window_width, threshold } => {
            spectrum(env, word_f, word_g, *points, *spacing, *window_width, threshold * env.tolerance_scale)
        }
        CheckConfig::Cluster { word_f, word_g, a, lambdas, threshold } => {
            cluster(env, word_f, word_g, *a, lambdas, threshold * env.tolerance_scale)
        }
        CheckConfig::Quasiloc { separations, sigma, l, n, compare_free, require_decreasing, require_above_free } => {
            quasiloc(env, separations, *sigma, *l, *n, *compare_free, *require_decreasing, *require_above_free)
        }
    };
    let wall_time = start.elapsed().as_secs_f64();
    match result {
        Ok(o) => Ok(CheckRecord {
            name,
            kind: check.kind(),
            inputs,
            values: o.values,
            error_estimates: o.errors,
            pass: o.pass,
            error: None,
            wall_time,
            profile: o.profile,
        }),
        Err(e) if is_budget(&e) => Err(BudgetExceeded { check: name, error: e }),
        Err(e) => Ok(CheckRecord {
            name,
            kind: check.kind(),
            inputs,
            values: Value::Null,
            error_estimates: Value::Null,
            pass: Some(false),
            error: Some(e.to_string()),
            wall_time,
            profile: None,
        }),
    }
}

fn norms(functions: &[crate::config::NormFunctionSpec], triples: &[[f64; 3]], rel_tol: f64) -> Result<Outcome, Error> {
    let mut rows = Vec::new();
    let mut held = 0;
    let mut total = 0;
    for (i, spec) in functions.iter().enumerate() {
        let f = spec.function();
        for t in triples {
            let r = check_norm_equivalence(&f, t[0], t[1], t[2] as usize, rel_tol)?;
            for (label, q) in [("integral_by_sup", &r.integral_by_sup), ("sup_by_integral", &r.sup_by_integral)] {
                total += 1;
                held += q.holds as usize;
                rows.push(json!({
                    "function": i, "l": t[0], "l_prime": t[1], "n": t[2],
                    "inequality": label, "lhs": q.lhs, "rhs": q.rhs, "holds": q.holds,
                }));
            }
        }
    }
    Ok(Outcome {
        values: json!({ "inequalities": rows, "held": held, "total": total }),
        errors: json!({ "rel_tol": rel_tol }),
        pass: Some(held == total),
        profile: None,
    })
}

/// Perfect matchings of `Σ r_i` labelled points that never pair two points
/// of the same vertex, by direct recursion.
pub fn count_matchings(degrees: &[usize]) -> u128 {
    fn rec(left: &mut [usize]) -> u128 {
        let Some(i) = left.iter().position(|&r| r > 0) else {
            return 1;
        };
        // pair one point of vertex i with any point of a later vertex
        left[i] -= 1;
        let mut count = 0;
        for j in i + 1..left.len() {
            if left[j] > 0 {
                let r = left[j] as u128;
                left[j] -= 1;
                count += r * rec(left);
                left[j] += 1;
            }
        }
        left[i] += 1;
        count
    }
    rec(&mut degrees.to_vec())
}

fn degree_tuples(n: usize, max_total: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|t: Vec<usize>| {
                let used: usize = t.iter().sum();
                (0..=max_total - used).map(move |r| {
                    let mut u = t.clone();
                    u.push(r);
                    u
                })
            })
            .collect();
    }
    out
}

fn wick(env: &Env, max_total: usize, max_points: usize, points: &[[f64; 2]], width: f64) -> Result<Outcome, Error> {
    let mut checked = 0usize;
    let mut mismatches = Vec::new();
    for n in 1..=max_points {
        for t in degree_tuples(n, max_total) {
            let graphs = enumerate_contractions(&t, max_total)?;
            let weight: u128 = graphs.iter().map(|g| g.weight).sum();
            let direct = count_matchings(&t);
            checked += 1;
            if weight != direct {
                mismatches.push(json!({ "degrees": t, "enumerated": weight.to_string(), "direct": direct.to_string() }));
            }
        }
    }
    let mut values = json!({ "tuples_checked": checked, "mismatches": mismatches });
    let mut errors = json!({});
    if !points.is_empty() {
        let factors = points.iter().map(|c| GaussPolyFn::gaussian(c, width)).collect();
        let e = npoint_smeared(&env.model, &Smearing::product(factors)?, &env.ctx)?;
        values["smeared_value"] = json!([e.value.re, e.value.im]);
        errors["smeared_value"] = json!(e.error);
    }
    Ok(Outcome { values, errors, pass: Some(mismatches.is_empty()), profile: None })
}

fn gns(env: &Env) -> Result<Outcome, Error> {
    let gram = build_gram(&env.model, &env.dict, &env.opts, &env.ctx)?;
    let eig = gram.eigenvalues();
    let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
    let max = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let rank = eig.iter().filter(|&&l| l > env.opts.tolerance * max).count();
    let psd_tol = env.scenario.gns.psd_tolerance * env.tolerance_scale;
    Ok(Outcome {
        values: json!({
            "dimension": gram.dim(),
            "min_eigenvalue": min,
            "max_eigenvalue": max,
            "rank": rank,
        }),
        errors: json!({ "asymmetry": gram.asymmetry, "max_entry_error": gram.max_error, "psd_tolerance": psd_tol }),
        pass: Some(min >= -psd_tol * max),
        profile: None,
    })
}

fn spectrum(
    env: &Env,
    word_f: &[usize],
    word_g: &[usize],
    points: usize,
    spacing: f64,
    window_width: f64,
    threshold: f64,
) -> Result<Outcome, Error> {
    let f = BorchersVector::word(&env.dict, word_f);
    let g = BorchersVector::word(&env.dict, word_g);
    let window = GaussPolyFn::gaussian(&[0.0, 0.0], window_width);
    let r = spectral_residual(&env.model, &f, &g, SpectralGrid { points, spacing }, &window, &env.ctx)?;
    Ok(Outcome {
        values: json!({ "residual": r.residual, "outer_band": r.outer_band }),
        errors: json!({ "margin": r.margin, "threshold": threshold }),
        pass: Some(r.residual < threshold),
        profile: None,
    })
}

fn cluster(env: &Env, word_f: &[usize], word_g: &[usize], a: [f64; 2], lambdas: &[f64], threshold: f64) -> Result<Outcome, Error> {
    let f = BorchersVector::word(&env.dict, word_f);
    let g = BorchersVector::word(&env.dict, word_g);
    let profile = cluster_profile(&env.model, &f, &g, a, lambdas, &env.ctx)?;
    let devs: Vec<f64> = profile.iter().map(|p| p.1).collect();
    let decreasing = devs.windows(2).all(|w| w[1] < w[0]);
    let last = *devs.last().expect("validated non-empty");
    Ok(Outcome {
        values: json!({ "lambdas": lambdas, "deviations": devs, "strictly_decreasing": decreasing }),
        errors: json!({ "threshold": threshold }),
        pass: Some(decreasing && last < threshold),
        profile: Some(Profile { columns: vec!["lambda".into(), "deviation".into()], rows: profile.iter().map(|p| vec![p.0, p.1]).collect() }),
    })
}

#[allow(clippy::too_many_arguments)]
fn quasiloc(
    env: &Env,
    separations: &[f64],
    sigma: f64,
    l: Option<f64>,
    n: usize,
    compare_free: bool,
    require_decreasing: bool,
    require_above_free: bool,
) -> Result<Outcome, Error> {
    let default_l = |m: &WickSeriesModel| if env.scenario.model.kind == ModelKindConfig::Gaussian && m.g > 0.0 { m.ell() / 2.0 } else { 0.25 };
    let vac = BorchersVector::vacuum();
    let family = |s: f64| spacelike_pair(s, sigma);
    let idx = NormIndex::new(Base::LightconeW, l.unwrap_or_else(|| default_l(&env.model)), n)?;
    let fun = Functional::Commutator { model: &env.model, dict: &env.dict, phi: &vac, psi: &vac };
    let p = carrier_profile(&fun, &idx, family, separations, &env.ctx)?;
    let decreasing = |r: &[f64]| r.windows(2).all(|w| w[1] < w[0]);
    let mut values = json!({
        "separations": separations,
        "ratios": p.ratios,
        "norm_l": idx.l,
        "norm_n": idx.n,
        "functional": p.functional_label,
        "decreasing": decreasing(&p.ratios),
    });
    let mut columns = vec!["s".to_string(), "ratio".to_string()];
    let mut rows: Vec<Vec<f64>> = separations.iter().zip(&p.ratios).map(|(s, r)| vec![*s, *r]).collect();
    let mut pass = None;
    let mut ok = true;
    if require_decreasing {
        ok &= decreasing(&p.ratios);
        pass = Some(ok);
    }
    if compare_free || require_above_free {
        let free = WickSeriesModel::free(env.model.mass())?;
        let free_idx = NormIndex::new(Base::LightconeW, l.unwrap_or(0.25), n)?;
        let ff = Functional::Commutator { model: &free, dict: &env.dict, phi: &vac, psi: &vac };
        let q = carrier_profile(&ff, &free_idx, family, separations, &env.ctx)?;
        values["free_ratios"] = json!(q.ratios);
        values["free_norm_l"] = json!(free_idx.l);
        values["free_decreasing"] = json!(decreasing(&q.ratios));
        let above = p.ratios.iter().zip(&q.ratios).all(|(m, f)| f <= m);
        values["above_free"] = json!(above);
        columns.push("free_ratio".into());
        for (row, r) in rows.iter_mut().zip(&q.ratios) {
            row.push(*r);
        }
        if require_decreasing {
            ok &= decreasing(&q.ratios);
        }
        if require_above_free {
            ok &= above;
        }
        if require_decreasing || require_above_free {
            pass = Some(ok);
        }
    }
    Ok(Outcome { values, errors: json!({}), pass, profile: Some(Profile { columns, rows }) })
}
