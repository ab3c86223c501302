//! Scenario runner for the reconstruction toolkit: parses scenario files,
//! runs the requested checks in dependency order, caches integrals on disk
//! and writes a JSON report plus CSV profiles.

pub mod cache;
pub mod checks;
pub mod config;

use std::path::{Path, PathBuf};
use std::sync::Arc;

use nlrecon::store::{Context, MemoryStore};
use serde_json::{json, Value};

use checks::{run_check, CheckRecord, Env};
use config::{ConfigError, Scenario};

pub const REPORT_SCHEMA_VERSION: u32 = 1;
pub const REPORT_FILE: &str = "report.json";
/// Environment variable overriding the scenario's `output_dir`.
pub const OUTPUT_DIR_ENV: &str = "NLRECON_OUTPUT_DIR";

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG_INVALID: i32 = 2;
pub const EXIT_BUDGET_EXCEEDED: i32 = 3;

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub no_cache: bool,
    pub seed: Option<u64>,
    pub tolerance_scale: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { no_cache: false, seed: None, tolerance_scale: 1.0 }
    }
}

/// Result of a run: exit code, message lines for stderr, and where the
/// report went.
#[derive(Debug)]
pub struct RunSummary {
    pub code: i32,
    pub messages: Vec<String>,
    pub output_dir: Option<PathBuf>,
}

pub fn output_dir(scenario: &Scenario) -> PathBuf {
    if let Some(dir) = std::env::var_os(OUTPUT_DIR_ENV).filter(|d| !d.is_empty()) {
        return PathBuf::from(dir);
    }
    PathBuf::from(scenario.output_dir.clone().unwrap_or_else(|| "nlrecon-out".into()))
}

fn config_failure(e: ConfigError) -> RunSummary {
    RunSummary { code: EXIT_CONFIG_INVALID, messages: vec![e.to_string()], output_dir: None }
}

pub fn validate(path: &Path) -> RunSummary {
    match Scenario::load(path) {
        Ok(s) => RunSummary {
            code: EXIT_OK,
            messages: vec![format!("valid scenario {} ({} checks)", s.hash(), s.checks.len())],
            output_dir: None,
        },
        Err(e) => config_failure(e),
    }
}

pub fn run(path: &Path, opts: &RunOptions) -> RunSummary {
    let scenario = match Scenario::load(path) {
        Ok(s) => s,
        Err(e) => return config_failure(e),
    };
    if !(opts.tolerance_scale > 0.0) || !opts.tolerance_scale.is_finite() {
        return config_failure(ConfigError { key: "--tolerance-scale".into(), message: "must be positive".into() });
    }
    let dir = output_dir(&scenario);
    let mut messages = Vec::new();
    let mut ctx = Context::default();
    ctx.seed = opts.seed.unwrap_or(scenario.seed);
    if opts.no_cache {
        ctx.store = Some(Arc::new(MemoryStore::new()));
    } else {
        match cache::FileStore::open(&dir, |w| messages.push(format!("warning: {w}"))) {
            Ok(store) => ctx.store = Some(Arc::new(store)),
            Err(e) => {
                return config_failure(ConfigError { key: "output_dir".into(), message: format!("{}: {e}", dir.display()) });
            }
        }
    }
    let env = Env {
        scenario: &scenario,
        model: scenario.model().expect("validated"),
        dict: scenario.dictionary().expect("validated"),
        opts: scenario.gns_opts(),
        ctx,
        tolerance_scale: opts.tolerance_scale,
    };
    let mut order: Vec<usize> = (0..scenario.checks.len()).collect();
    order.sort_by_key(|&i| scenario.checks[i].rank());
    let mut records: Vec<CheckRecord> = Vec::new();
    let mut code = EXIT_OK;
    for i in order {
        match run_check(&env, i, &scenario.checks[i]) {
            Ok(r) => {
                if r.pass == Some(false) {
                    code = EXIT_CHECK_FAILED;
                    let why = r.error.clone().unwrap_or_else(|| "criterion not met".into());
                    messages.push(format!("CHECK_FAILED: check `{}`: {why}", r.name));
                }
                records.push(r);
            }
            Err(b) => {
                messages.push(format!("BUDGET_EXCEEDED: check `{}`: {}", b.check, b.error));
                code = EXIT_BUDGET_EXCEEDED;
                break;
            }
        }
    }
    if let Err(e) = write_outputs(&dir, &scenario, env.ctx.seed, &records, code) {
        messages.push(format!("error: writing report to {}: {e}", dir.display()));
        if code == EXIT_OK {
            code = EXIT_CHECK_FAILED;
        }
    }
    RunSummary { code, messages, output_dir: Some(dir) }
}

pub fn report_json(scenario: &Scenario, seed: u64, records: &[CheckRecord], code: i32) -> Value {
    json!({
        "schema_version": REPORT_SCHEMA_VERSION,
        "tool_version": env!("CARGO_PKG_VERSION"),
        "scenario_hash": scenario.hash(),
        "seed": seed,
        "checks": records.iter().map(CheckRecord::to_json).collect::<Vec<_>>(),
        "all_pass": records.iter().all(|r| r.pass != Some(false)) && code == EXIT_OK,
        "exit_code": code,
    })
}

fn write_outputs(dir: &Path, scenario: &Scenario, seed: u64, records: &[CheckRecord], code: i32) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let report = report_json(scenario, seed, records, code);
    let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
    text.push('\n');
    std::fs::write(dir.join(REPORT_FILE), text)?;
    for r in records {
        if let Some(p) = &r.profile {
            std::fs::write(dir.join(format!("{}.csv", r.name)), p.to_csv())?;
        }
    }
    Ok(())
}

/// One line per check from a report directory.
pub fn summary(dir: &Path) -> Result<Vec<String>, String> {
    let path = dir.join(REPORT_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    let report: Value = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut lines = vec![format!(
        "scenario {} (schema {}, tool {})",
        report["scenario_hash"].as_str().unwrap_or("?"),
        report["schema_version"],
        report["tool_version"].as_str().unwrap_or("?"),
    )];
    for c in report["checks"].as_array().into_iter().flatten() {
        let status = match c["pass"].as_bool() {
            Some(true) => "PASS",
            Some(false) => "FAIL",
            None => "INFO",
        };
        let detail = match &c["error"] {
            Value::String(e) => e.clone(),
            _ => headline(c),
        };
        lines.push(format!("{status} {} {detail}", c["name"].as_str().unwrap_or("?")));
    }
    lines.push(format!("all_pass = {}", report["all_pass"]));
    Ok(lines)
}

/// The scalar values of a check record, `key=value` in key order.
fn headline(c: &Value) -> String {
    c["values"]
        .as_object()
        .map(|m| {
            m.iter()
                .filter(|(_, v)| v.is_number() || v.is_boolean())
                .map(|(k, v)| format!("{k}={v}"))
                .collect::<Vec<_>>()
                .join(" ")
        })
        .unwrap_or_default()
}
