//! Scenario files: TOML with a fixed set of sections, validated before any
//! computation starts. See `docs/formats.md` for the grammar.

use std::path::Path;

use nlrecon::freefield::WickSeriesModel;
use nlrecon::gns::{Dictionary, GnsOpts};
use nlrecon::numeric::poly::Poly;
use nlrecon::testfn::GaussPolyFn;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const SCHEMA_VERSION: u32 = 1;

/// A configuration problem, tagged with the offending key.
#[derive(Debug)]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "CONFIG_INVALID: key `{}`: {}", self.key, self.message)
    }
}

fn invalid(key: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError { key: key.into(), message: message.into() }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<String>,
    pub model: ModelConfig,
    /// Empty means the standard four-Gaussian dictionary.
    #[serde(default)]
    pub dictionary: Vec<GaussianSpec>,
    #[serde(default)]
    pub gns: GnsConfig,
    #[serde(default)]
    pub checks: Vec<CheckConfig>,
}

fn default_seed() -> u64 {
    0x5eed
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKindConfig {
    Free,
    Gaussian,
    Finite,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelKindConfig,
    #[serde(default = "one")]
    pub mass: f64,
    #[serde(default)]
    pub g: Option<f64>,
    /// Truncation order of the Gaussian preset.
    #[serde(default)]
    pub r_max: Option<usize>,
    /// `d_0 … d_R` for a finite series.
    #[serde(default)]
    pub coeffs: Option<Vec<f64>>,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianSpec {
    pub center: Vec<f64>,
    #[serde(default = "one")]
    pub width: f64,
}

impl GaussianSpec {
    pub fn function(&self) -> GaussPolyFn {
        GaussPolyFn::gaussian(&self.center, self.width)
    }
}

/// `z^power · exp(−(z − center)²/(2 width²))` on `ℂ`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormFunctionSpec {
    pub center: f64,
    #[serde(default = "one")]
    pub width: f64,
    #[serde(default)]
    pub power: u16,
}

impl NormFunctionSpec {
    pub fn function(&self) -> GaussPolyFn {
        GaussPolyFn::gaussian(&[self.center], self.width).mul_poly(&Poly::variable(1, 0).pow(self.power))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GnsConfig {
    #[serde(default = "default_degree")]
    pub max_degree: usize,
    #[serde(default = "default_word_cap")]
    pub word_cap: usize,
    /// Relative eigenvalue cutoff for the null space.
    #[serde(default = "default_kernel_tol")]
    pub tolerance: f64,
    /// Positivity passes when `λ_min ≥ −psd_tolerance · λ_max`.
    #[serde(default = "default_psd_tol")]
    pub psd_tolerance: f64,
}

fn default_degree() -> usize {
    3
}
fn default_word_cap() -> usize {
    200
}
fn default_kernel_tol() -> f64 {
    1e-9
}
fn default_psd_tol() -> f64 {
    1e-8
}

impl Default for GnsConfig {
    fn default() -> Self {
        Self {
            max_degree: default_degree(),
            word_cap: default_word_cap(),
            tolerance: default_kernel_tol(),
            psd_tolerance: default_psd_tol(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CheckConfig {
    /// Both norm-equivalence inequalities for each function and triple.
    Norms {
        functions: Vec<NormFunctionSpec>,
        /// `[l, l′, N]` triples.
        triples: Vec<[f64; 3]>,
        #[serde(default = "default_norm_tol")]
        rel_tol: f64,
    },
    /// Graph weights against a direct matching count for every degree tuple
    /// up to `max_total`, plus one smeared `n`-point value.
    Wick {
        #[serde(default = "default_wick_total")]
        max_total: usize,
        #[serde(default = "default_wick_arity")]
        max_points: usize,
        /// Centers of the width-`width` Gaussians smearing `𝒲_n`.
        #[serde(default)]
        points: Vec<[f64; 2]>,
        #[serde(default = "one")]
        width: f64,
    },
    /// Gram matrix positivity.
    Gns {},
    /// Spectral residual of `⟨φ(f)Ω, U(a) φ(g)Ω⟩` for dictionary words.
    Spectrum {
        word_f: Vec<usize>,
        word_g: Vec<usize>,
        #[serde(default = "default_grid_points")]
        points: usize,
        #[serde(default = "default_grid_spacing")]
        spacing: f64,
        #[serde(default = "default_window")]
        window_width: f64,
        #[serde(default = "default_spectrum_threshold")]
        threshold: f64,
    },
    /// Cluster deviation along `λa`.
    Cluster {
        word_f: Vec<usize>,
        word_g: Vec<usize>,
        a: [f64; 2],
        lambdas: Vec<f64>,
        #[serde(default = "default_cluster_threshold")]
        threshold: f64,
    },
    /// Vacuum commutator carrier profile over the spacelike pair family.
    Quasiloc {
        separations: Vec<f64>,
        #[serde(default = "default_sigma")]
        sigma: f64,
        /// Tube radius; defaults to `ℓ/2` for a Gaussian model and 0.25
        /// otherwise.
        #[serde(default)]
        l: Option<f64>,
        #[serde(default)]
        n: usize,
        /// Also compute the free-field profile of the same family.
        #[serde(default)]
        compare_free: bool,
        #[serde(default)]
        require_decreasing: bool,
        /// Fail unless the model ratio is at least the free one everywhere.
        #[serde(default)]
        require_above_free: bool,
    },
}

fn default_norm_tol() -> f64 {
    1e-6
}
fn default_wick_total() -> usize {
    10
}
fn default_wick_arity() -> usize {
    4
}
fn default_grid_points() -> usize {
    64
}
fn default_grid_spacing() -> f64 {
    0.25
}
fn default_window() -> f64 {
    2.5
}
fn default_spectrum_threshold() -> f64 {
    1e-2
}
fn default_cluster_threshold() -> f64 {
    1e-4
}
fn default_sigma() -> f64 {
    0.5
}

impl CheckConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            CheckConfig::Norms { .. } => "norms",
            CheckConfig::Wick { .. } => "wick",
            CheckConfig::Gns {} => "gns",
            CheckConfig::Spectrum { .. } => "spectrum",
            CheckConfig::Cluster { .. } => "cluster",
            CheckConfig::Quasiloc { .. } => "quasiloc",
        }
    }

    /// Execution rank: the Gram matrix before anything built on it.
    pub fn rank(&self) -> usize {
        match self {
            CheckConfig::Norms { .. } => 0,
            CheckConfig::Wick { .. } => 1,
            CheckConfig::Gns {} => 2,
            CheckConfig::Spectrum { .. } => 3,
            CheckConfig::Cluster { .. } => 4,
            CheckConfig::Quasiloc { .. } => 5,
        }
    }
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let s: Scenario = toml::from_str(text).map_err(|e| {
            let msg = e.message().to_string();
            invalid(key_of_message(&msg), msg)
        })?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| invalid("<file>", format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// SHA-256 of the canonical JSON form (sorted keys, defaults filled in).
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_value(self).expect("scenario serializes").to_string();
        Sha256::digest(canonical.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn model(&self) -> Result<WickSeriesModel, ConfigError> {
        let m = &self.model;
        let r = match m.kind {
            ModelKindConfig::Free => WickSeriesModel::free(m.mass),
            ModelKindConfig::Gaussian => {
                let g = m.g.ok_or_else(|| invalid("model.g", "required for kind = \"gaussian\""))?;
                WickSeriesModel::gaussian(m.mass, g, m.r_max.unwrap_or(2))
            }
            ModelKindConfig::Finite => {
                let coeffs = m.coeffs.clone().ok_or_else(|| invalid("model.coeffs", "required for kind = \"finite\""))?;
                nlrecon::freefield::FreeFieldSpec::new(m.mass)
                    .and_then(|spec| WickSeriesModel::new(spec, m.g.unwrap_or(0.0), coeffs))
            }
        };
        r.map_err(|e| invalid("model", e.to_string()))
    }

    pub fn dictionary(&self) -> Result<Dictionary, ConfigError> {
        if self.dictionary.is_empty() {
            let d = Dictionary::standard();
            return Dictionary::new(d.functions().to_vec(), self.gns.max_degree).map_err(|e| invalid("dictionary", e.to_string()));
        }
        let fs = self.dictionary.iter().map(GaussianSpec::function).collect();
        Dictionary::new(fs, self.gns.max_degree).map_err(|e| invalid("dictionary", e.to_string()))
    }

    pub fn gns_opts(&self) -> GnsOpts {
        GnsOpts { word_cap: self.gns.word_cap, tolerance: self.gns.tolerance, ..GnsOpts::default() }
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(invalid("schema_version", format!("expected {SCHEMA_VERSION}, got {}", self.schema_version)));
        }
        positive("model.mass", self.model.mass)?;
        if let Some(g) = self.model.g {
            if !(g >= 0.0) || !g.is_finite() {
                return Err(invalid("model.g", format!("must be non-negative, got {g}")));
            }
        }
        self.model()?;
        for (i, d) in self.dictionary.iter().enumerate() {
            if d.center.len() != 2 {
                return Err(invalid(format!("dictionary[{i}].center"), "needs two coordinates"));
            }
            positive(&format!("dictionary[{i}].width"), d.width)?;
        }
        positive("gns.tolerance", self.gns.tolerance)?;
        positive("gns.psd_tolerance", self.gns.psd_tolerance)?;
        if self.gns.word_cap == 0 || self.gns.word_cap > 2000 {
            return Err(invalid("gns.word_cap", format!("must lie in 1..=2000, got {}", self.gns.word_cap)));
        }
        if self.gns.max_degree > 4 {
            return Err(invalid("gns.max_degree", format!("must be at most 4, got {}", self.gns.max_degree)));
        }
        let dict = self.dictionary()?;
        for (i, c) in self.checks.iter().enumerate() {
            validate_check(&format!("checks[{i}]"), c, &dict)?;
        }
        Ok(())
    }
}

fn positive(key: &str, x: f64) -> Result<(), ConfigError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(invalid(key, format!("must be positive and finite, got {x}")))
    }
}

fn validate_word(key: &str, w: &[usize], dict: &Dictionary) -> Result<(), ConfigError> {
    if w.len() > dict.max_degree() {
        return Err(invalid(key, format!("word of length {} exceeds gns.max_degree = {}", w.len(), dict.max_degree())));
    }
    if let Some(&i) = w.iter().find(|&&i| i >= dict.len()) {
        return Err(invalid(key, format!("index {i} outside the dictionary of {} functions", dict.len())));
    }
    Ok(())
}

fn validate_check(at: &str, c: &CheckConfig, dict: &Dictionary) -> Result<(), ConfigError> {
    let key = |k: &str| format!("{at}.{k}");
    match c {
        CheckConfig::Norms { functions, triples, rel_tol } => {
            positive(&key("rel_tol"), *rel_tol)?;
            if functions.is_empty() {
                return Err(invalid(key("functions"), "must not be empty"));
            }
            for (i, f) in functions.iter().enumerate() {
                if !f.center.is_finite() {
                    return Err(invalid(key(&format!("functions[{i}].center")), "must be finite"));
                }
                positive(&key(&format!("functions[{i}].width")), f.width)?;
                if f.power > 8 {
                    return Err(invalid(key(&format!("functions[{i}].power")), "must be at most 8"));
                }
            }
            for (i, t) in triples.iter().enumerate() {
                if !(t[0] > 0.0 && t[0] < t[1]) || t[2] < 0.0 || t[2].fract() != 0.0 {
                    return Err(invalid(key(&format!("triples[{i}]")), "needs 0 < l < l′ and an integer N ≥ 0"));
                }
            }
        }
        CheckConfig::Wick { max_total, max_points, points, width } => {
            if *max_total > 12 {
                return Err(invalid(key("max_total"), format!("must be at most 12, got {max_total}")));
            }
            if *max_points == 0 || *max_points > 6 {
                return Err(invalid(key("max_points"), format!("must lie in 1..=6, got {max_points}")));
            }
            if points.len() > 4 {
                return Err(invalid(key("points"), "at most four smearing points"));
            }
            positive(&key("width"), *width)?;
        }
        CheckConfig::Gns {} => {}
        CheckConfig::Spectrum { word_f, word_g, points, spacing, window_width, threshold } => {
            validate_word(&key("word_f"), word_f, dict)?;
            validate_word(&key("word_g"), word_g, dict)?;
            if *points < 8 || points % 2 == 1 || *points > 256 {
                return Err(invalid(key("points"), format!("must be even in 8..=256, got {points}")));
            }
            positive(&key("spacing"), *spacing)?;
            positive(&key("window_width"), *window_width)?;
            positive(&key("threshold"), *threshold)?;
        }
        CheckConfig::Cluster { word_f, word_g, a, lambdas, threshold } => {
            validate_word(&key("word_f"), word_f, dict)?;
            validate_word(&key("word_g"), word_g, dict)?;
            if a[0] * a[0] - a[1] * a[1] >= 0.0 {
                return Err(invalid(key("a"), "must be spacelike"));
            }
            if lambdas.is_empty() || lambdas.iter().any(|l| !l.is_finite() || *l < 0.0) {
                return Err(invalid(key("lambdas"), "needs finite non-negative values"));
            }
            positive(&key("threshold"), *threshold)?;
        }
        CheckConfig::Quasiloc { separations, sigma, l, .. } => {
            if separations.is_empty() || separations.iter().any(|s| !s.is_finite()) {
                return Err(invalid(key("separations"), "needs finite values"));
            }
            positive(&key("sigma"), *sigma)?;
            if let Some(l) = l {
                positive(&key("l"), *l)?;
            }
        }
    }
    Ok(())
}

/// Best-effort key extraction from a deserializer message such as
/// "missing field `model`".
fn key_of_message(msg: &str) -> String {
    msg.split('`').nth(1).map_or_else(|| "<document>".to_string(), str::to_string)
}
