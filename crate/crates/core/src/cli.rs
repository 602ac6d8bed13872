//! Experiment configuration, CSV output and the self-test used by the
//! `irs-chanest` binary.
//!
//! Configuration comes from an optional TOML file plus command-line flags;
//! flags win over file values.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::agmp::{self, AgmpConfig, ProbeDesign, SelectionRule};
use crate::beam_training::{AdiErrorModel, CoarseADI};
use crate::channel_model::{
    complex_gaussian, ArrayConfig, CascadeScenario, PathComponent, PathSet,
};
use crate::evaluation::{nmse, run_sweep, ResultTable, Scheme, SweepAxis, TrialConfig};
use crate::linalg::{lstsq, CMatrix, CVector};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_UNKNOWN_KEY: i32 = 4;

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "IRS_CHANEST_THREADS";

/// Every accepted configuration key with its description.
pub const CONFIG_KEYS: &[(&str, &str)] = &[
    ("n_bs", "BS antennas (default 64)"),
    ("n_irs", "IRS elements (default 64)"),
    ("n_ue", "user antennas (default 16)"),
    (
        "spacing_over_wavelength",
        "element spacing d/λ (default 0.5)",
    ),
    (
        "snr_db",
        "pilot SNR in dB for single trials and non-SNR sweeps (default 10)",
    ),
    ("g_tilde", "adaptive grid points per axis (default 5)"),
    ("zeta", "pursuit iterations (default 7)"),
    (
        "m_probes",
        "pilot probes per estimate (default max(4·g_tilde, 2·zeta))",
    ),
    ("r_irs", "IRS phase levels (default 64)"),
    (
        "r_ue",
        "user phase levels and narrow-beam count (default 16)",
    ),
    (
        "rician_k_db",
        "Rician K-factor of the UE–IRS link in dB (default 20)",
    ),
    ("n_paths", "UE–IRS paths including LOS (default 3)"),
    ("beta_magnitude", "IRS–BS gain magnitude (default 1)"),
    (
        "direct_link_db",
        "direct-link power relative to the cascade for no_irs (default -20)",
    ),
    ("seed", "base seed; trial t uses seed + t (default 1)"),
    (
        "adi_error_model",
        "`paper` (2π/R) or `cosine` (2/R) (default paper)",
    ),
    (
        "normalize_selection",
        "`on` or `off` column-norm normalized selection (default on)",
    ),
    ("sweep", "`snr`, `g_tilde` or `zeta` (default snr)"),
    ("values", "sweep values (default [0, 5, 10, 15, 20])"),
    ("trials", "trials per value and scheme (default 200)"),
    ("schemes", "schemes to run (default all five)"),
    ("out", "CSV output path (default results.csv)"),
];

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Io(String),
    UnknownKey(String),
    InvalidValue { key: String, message: String },
    Parse(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => EXIT_IO,
            CliError::UnknownKey(_) => EXIT_UNKNOWN_KEY,
            CliError::InvalidValue { .. } | CliError::Parse(_) => EXIT_CONFIG,
        }
    }

    fn invalid(key: &str, message: impl Into<String>) -> Self {
        CliError::InvalidValue {
            key: key.to_string(),
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Io(m) => write!(f, "I/O error: {m}"),
            CliError::UnknownKey(k) => write!(f, "unknown config key `{k}`"),
            CliError::InvalidValue { key, message } => {
                write!(f, "invalid value for `{key}`: {message}")
            }
            CliError::Parse(m) => write!(f, "config parse error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

/// Fully resolved experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub base: TrialConfig,
    pub sweep_axis: SweepAxis,
    pub sweep_values: Vec<f64>,
    pub n_trials: usize,
    pub schemes: Vec<Scheme>,
    pub output_path: PathBuf,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            base: TrialConfig::default(),
            sweep_axis: SweepAxis::Snr,
            sweep_values: vec![0.0, 5.0, 10.0, 15.0, 20.0],
            n_trials: 200,
            schemes: Scheme::ALL.to_vec(),
            output_path: PathBuf::from("results.csv"),
        }
    }
}

/// Command-line overrides, all as raw strings so file and flag values share
/// one validation path.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub config: Option<PathBuf>,
    pub values: BTreeMap<String, String>,
}

impl Overrides {
    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.values.insert(key.to_string(), value.into());
    }
}

/// Value of one key, from the file (TOML) or a flag (string).
enum Raw<'a> {
    Toml(&'a toml::Value),
    Flag(&'a str),
}

impl Raw<'_> {
    fn float(&self, key: &str) -> Result<f64, CliError> {
        match self {
            Raw::Toml(toml::Value::Float(x)) => Ok(*x),
            Raw::Toml(toml::Value::Integer(i)) => Ok(*i as f64),
            Raw::Flag(s) => s
                .trim()
                .parse()
                .map_err(|_| CliError::invalid(key, format!("`{s}` is not a number"))),
            Raw::Toml(v) => Err(CliError::invalid(
                key,
                format!("expected a number, got {v}"),
            )),
        }
    }

    fn uint(&self, key: &str) -> Result<u64, CliError> {
        match self {
            Raw::Toml(toml::Value::Integer(i)) if *i >= 0 => Ok(*i as u64),
            Raw::Flag(s) => s.trim().parse().map_err(|_| {
                CliError::invalid(key, format!("`{s}` is not a non-negative integer"))
            }),
            Raw::Toml(v) => Err(CliError::invalid(
                key,
                format!("expected a non-negative integer, got {v}"),
            )),
        }
    }

    fn string(&self, key: &str) -> Result<String, CliError> {
        match self {
            Raw::Toml(toml::Value::String(s)) => Ok(s.clone()),
            Raw::Flag(s) => Ok(s.to_string()),
            Raw::Toml(v) => Err(CliError::invalid(
                key,
                format!("expected a string, got {v}"),
            )),
        }
    }

    /// Comma list from a flag, or a TOML array / scalar.
    fn list(&self, key: &str) -> Result<Vec<String>, CliError> {
        match self {
            Raw::Flag(s) => Ok(s
                .split(',')
                .map(|x| x.trim().to_string())
                .filter(|x| !x.is_empty())
                .collect()),
            Raw::Toml(toml::Value::Array(a)) => a
                .iter()
                .map(|v| match v {
                    toml::Value::String(s) => Ok(s.clone()),
                    toml::Value::Integer(i) => Ok(i.to_string()),
                    toml::Value::Float(x) => Ok(x.to_string()),
                    other => Err(CliError::invalid(
                        key,
                        format!("unsupported list element {other}"),
                    )),
                })
                .collect(),
            Raw::Toml(toml::Value::String(s)) => Raw::Flag(s).list(key),
            Raw::Toml(v) => Err(CliError::invalid(key, format!("expected a list, got {v}"))),
        }
    }
}

fn positive(key: &str, v: u64) -> Result<usize, CliError> {
    if v == 0 {
        Err(CliError::invalid(key, "must be at least 1"))
    } else {
        Ok(v as usize)
    }
}

fn levels(key: &str, v: u64) -> Result<u32, CliError> {
    if !(2..=1 << 20).contains(&v) {
        Err(CliError::invalid(key, "must be between 2 and 2^20"))
    } else {
        Ok(v as u32)
    }
}

fn apply_key(spec: &mut ExperimentSpec, key: &str, raw: &Raw<'_>) -> Result<(), CliError> {
    let b = &mut spec.base;
    match key {
        "n_bs" => b.arrays.n_bs = positive(key, raw.uint(key)?)?,
        "n_irs" => b.arrays.n_irs = positive(key, raw.uint(key)?)?,
        "n_ue" => b.arrays.n_ue = positive(key, raw.uint(key)?)?,
        "spacing_over_wavelength" => {
            let d = raw.float(key)?;
            if !(d > 0.0 && d.is_finite()) {
                return Err(CliError::invalid(key, "must be positive"));
            }
            b.arrays.spacing_over_wavelength = d;
        }
        "snr_db" => {
            let s = raw.float(key)?;
            if !s.is_finite() {
                return Err(CliError::invalid(key, "must be finite"));
            }
            b.snr_db = s;
        }
        "g_tilde" => b.g_tilde = positive(key, raw.uint(key)?)?,
        "zeta" => b.zeta = positive(key, raw.uint(key)?)?,
        "m_probes" => b.m_probes = Some(positive(key, raw.uint(key)?)?),
        "r_irs" => b.r_irs = levels(key, raw.uint(key)?)?,
        "r_ue" => b.r_ue = levels(key, raw.uint(key)?)?,
        "rician_k_db" => b.rician_k_db = raw.float(key)?,
        "n_paths" => b.n_paths = positive(key, raw.uint(key)?)?,
        "beta_magnitude" => {
            let m = raw.float(key)?;
            if !(m > 0.0 && m.is_finite()) {
                return Err(CliError::invalid(key, "must be positive"));
            }
            b.beta_magnitude = m;
        }
        "direct_link_db" => b.direct_link_db = raw.float(key)?,
        "seed" => b.seed = raw.uint(key)?,
        "adi_error_model" => {
            b.adi_error_model = match raw.string(key)?.as_str() {
                "paper" => AdiErrorModel::Paper,
                "cosine" => AdiErrorModel::Cosine,
                other => {
                    return Err(CliError::invalid(
                        key,
                        format!("`{other}` is not paper|cosine"),
                    ))
                }
            }
        }
        "normalize_selection" => {
            b.selection = match raw.string(key)?.as_str() {
                "on" => SelectionRule::Normalized,
                "off" => SelectionRule::Unnormalized,
                other => return Err(CliError::invalid(key, format!("`{other}` is not on|off"))),
            }
        }
        "sweep" => {
            spec.sweep_axis = raw
                .string(key)?
                .parse()
                .map_err(|e: crate::Error| CliError::invalid(key, e.to_string()))?
        }
        "values" => {
            let vals = raw
                .list(key)?
                .iter()
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|_| CliError::invalid(key, format!("`{s}` is not a number")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            if vals.is_empty() {
                return Err(CliError::invalid(key, "must not be empty"));
            }
            spec.sweep_values = vals;
        }
        "trials" => spec.n_trials = positive(key, raw.uint(key)?)?,
        "schemes" => {
            let s = raw
                .list(key)?
                .iter()
                .map(|s| {
                    s.parse::<Scheme>()
                        .map_err(|e| CliError::invalid(key, e.to_string()))
                })
                .collect::<Result<Vec<_>, _>>()?;
            if s.is_empty() {
                return Err(CliError::invalid(key, "must not be empty"));
            }
            spec.schemes = s;
        }
        "out" => spec.output_path = PathBuf::from(raw.string(key)?),
        other => return Err(CliError::UnknownKey(other.to_string())),
    }
    Ok(())
}

fn check_cross_field(spec: &ExperimentSpec) -> Result<(), CliError> {
    for &v in &spec.sweep_values {
        let cfg = spec
            .sweep_axis
            .apply(&spec.base, v)
            .map_err(|e| CliError::invalid("values", e.to_string()))?;
        cfg.validate()
            .map_err(|e| CliError::invalid(spec.sweep_axis.as_str(), e.to_string()))?;
    }
    Ok(())
}

/// Resolves defaults, the optional config file and flag overrides.
///
/// Returns the spec plus warnings (one per flag that overrode a file value).
pub fn parse_config(overrides: &Overrides) -> Result<(ExperimentSpec, Vec<String>), CliError> {
    let mut spec = ExperimentSpec::default();
    let mut warnings = Vec::new();
    let file_table = match &overrides.config {
        Some(path) => Some(load_table(path)?),
        None => None,
    };
    if let Some(table) = &file_table {
        for (key, value) in table {
            apply_key(&mut spec, key, &Raw::Toml(value))?;
        }
    }
    for (key, value) in &overrides.values {
        if file_table.as_ref().is_some_and(|t| t.contains_key(key)) {
            warnings.push(format!("flag value for `{key}` overrides the config file"));
        }
        apply_key(&mut spec, key, &Raw::Flag(value))?;
    }
    check_cross_field(&spec)?;
    Ok((spec, warnings))
}

/// Parses TOML text into a spec (no flags).
pub fn parse_config_str(text: &str) -> Result<ExperimentSpec, CliError> {
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| CliError::Parse(e.to_string()))?;
    let mut spec = ExperimentSpec::default();
    for (key, value) in &table {
        apply_key(&mut spec, key, &Raw::Toml(value))?;
    }
    check_cross_field(&spec)?;
    Ok(spec)
}

fn load_table(path: &Path) -> Result<toml::Table, CliError> {
    let text =
        fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    text.parse()
        .map_err(|e: toml::de::Error| CliError::Parse(e.to_string()))
}

/// Runs the sweep, writes the CSV and returns the table.
pub fn run(spec: &ExperimentSpec) -> Result<ResultTable, CliError> {
    let table = run_sweep(
        &spec.base,
        spec.sweep_axis,
        &spec.sweep_values,
        &spec.schemes,
        spec.n_trials,
    )
    .map_err(|e| CliError::invalid("config", e.to_string()))?;
    fs::write(&spec.output_path, table.to_csv())
        .map_err(|e| CliError::Io(format!("{}: {e}", spec.output_path.display())))?;
    Ok(table)
}

/// Thread count from [`THREADS_ENV`], if set and valid.
pub fn threads_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()?
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
}

/// Outcome of one self-test check.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Noiseless, LOS-only, on-grid recovery in one iteration.
pub fn check_exact_recovery() -> CheckResult {
    let arrays = ArrayConfig::default();
    let g_tilde = 5;
    let coarse = CoarseADI::from_resolutions(0.31, -0.42, 16, 64, AdiErrorModel::Paper);
    let mut worst = f64::NEG_INFINITY;
    let mut ok = true;
    for seed in 0..5u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dict = agmp::build_adaptive_grid(&coarse, g_tilde, &arrays).expect("valid grid");
        let gi = rng.random_range(0..dict.irs_len());
        let gu = rng.random_range(0..dict.ue_len());
        let los = PathSet::new(
            vec![PathComponent::new(
                complex_gaussian(&mut rng, 1.0),
                dict.irs_grid[gi],
                dict.ue_grid[gu],
            )
            .expect("grid in range")],
            20.0,
        )
        .expect("one path");
        let beta = PathComponent::new(Complex64::from_polar(1.0, 0.3), 0.2, -0.5).expect("valid");
        let scenario = CascadeScenario::new(beta, los, arrays, 0.0).expect("valid scenario");
        let cfg = AgmpConfig {
            g_tilde,
            zeta: 1,
            m_probes: Some(g_tilde * g_tilde),
            selection: SelectionRule::Normalized,
            design: ProbeDesign::default(),
        };
        match agmp::estimate(&scenario, &coarse, &cfg, &mut rng) {
            Ok(run) => {
                let e = nmse(scenario.effective_channel(), &run.estimate.h_hat)
                    .unwrap_or(f64::INFINITY);
                worst = worst.max(e);
                ok &= e <= -250.0;
            }
            Err(_) => ok = false,
        }
    }
    CheckResult {
        name: "exact_recovery",
        passed: ok,
        detail: format!("worst NMSE {worst:.1} dB (threshold -250 dB)"),
    }
}

/// Greedy pursuit against exhaustive least-squares search on small random
/// instances with a clear greedy margin.
pub fn check_oracle_equivalence() -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut tested = 0;
    let mut mismatches = 0;
    while tested < 100 {
        let cols = 12;
        let rows = 8;
        let q = CMatrix::from_fn(rows, cols, |_, _| complex_gaussian(&mut rng, 1.0));
        let a = rng.random_range(0..cols);
        let b = (a + rng.random_range(1..cols)) % cols;
        let y = q.column(a) * complex_gaussian(&mut rng, 1.0)
            + q.column(b) * complex_gaussian(&mut rng, 1.0);
        if !clear_margin(&q, &y, 2) {
            continue;
        }
        tested += 1;
        let greedy = agmp::matching_pursuit(&y, &q, 2, SelectionRule::Normalized).expect("valid");
        let mut g = greedy.support.clone();
        g.sort_unstable();
        if g != best_pair(&q, &y) {
            mismatches += 1;
        }
    }
    CheckResult {
        name: "oracle_equivalence",
        passed: mismatches == 0,
        detail: format!("{mismatches} mismatches over {tested} instances"),
    }
}

fn clear_margin(q: &CMatrix, y: &CVector, zeta: usize) -> bool {
    let mut support: Vec<usize> = Vec::new();
    let mut r = y.clone();
    for _ in 0..zeta {
        let mut scores: Vec<(f64, usize)> = q
            .column_iter()
            .enumerate()
            .map(|(g, c)| (c.dotc(&r).norm() / c.norm(), g))
            .collect();
        scores.sort_by(|x, y| y.0.total_cmp(&x.0));
        if scores[0].0 - scores[1].0 <= 1e-6 {
            return false;
        }
        support.push(scores[0].1);
        let sub = q.select_columns(support.iter());
        let (h, _) = lstsq(&sub, y);
        r = y - sub * h;
    }
    true
}

fn best_pair(q: &CMatrix, y: &CVector) -> Vec<usize> {
    let mut best = (f64::INFINITY, vec![]);
    for i in 0..q.ncols() {
        for j in i + 1..q.ncols() {
            let sub = q.select_columns([i, j].iter());
            let (h, _) = lstsq(&sub, y);
            let r = (y - sub * h).norm();
            if r < best.0 {
                best = (r, vec![i, j]);
            }
        }
    }
    best.1
}

pub fn selftest() -> Vec<CheckResult> {
    vec![check_exact_recovery(), check_oracle_equivalence()]
}
