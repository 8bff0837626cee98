//! Sweep orchestration, the `key = value` configuration format and CSV
//! output.
//!
//! Config files are line oriented. `#` starts a comment, blank lines are
//! ignored, and every other line must be `key = value` with a known key.
//! Missing keys take the defaults of [`SystemParams::default`] and
//! [`EstimatorConfig::default`], sweeping SNR from 0 to 30 dB.

use std::fmt;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

use crate::analytic;
use crate::model::{db_to_linear, variances_from_distances, ModelError, SystemParams};
use crate::montecarlo::{
    estimate_metrics, validate_estimates, EstimatorConfig, EstimatorError, MetricEstimates,
    MetricId, ValidationReport,
};
use crate::protocols::{thresholds, Protocol};

/// SNR used for α and d₁ sweeps unless the config overrides it.
pub const FIXED_SWEEP_SNR_DB: f64 = crate::model::DEFAULT_SNR_DB;

pub const CSV_HEADER: &str =
    "variable,value,protocol,metric,symbol,analytic,simulated,std_error,trials,seed";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Malformed { line: usize, text: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}` given more than once")]
    DuplicateKey { line: usize, key: String },
    #[error("line {line}: invalid value `{value}` for `{key}`: {reason}")]
    InvalidValue {
        line: usize,
        key: String,
        value: String,
        reason: String,
    },
    #[error("`rho` and `snr_db` both set; give one of them")]
    ConflictingSnr,
    #[error("invalid `{key}`: {source}")]
    Constraint {
        key: &'static str,
        #[source]
        source: ModelError,
    },
    #[error(transparent)]
    Sweep(#[from] SweepError),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
}

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("sweep grid is empty (start = {start}, stop = {stop}, step = {step})")]
    EmptyGrid { start: f64, stop: f64, step: f64 },
    #[error("{variable} sweep must stay inside {range} (got {start}..{stop})")]
    OutOfRange {
        variable: SweepVariable,
        range: String,
        start: f64,
        stop: f64,
    },
    #[error("no protocols selected")]
    NoProtocols,
    #[error("no metrics selected")]
    NoMetrics,
    #[error("at {variable} = {value}: {source}")]
    Point {
        variable: SweepVariable,
        value: f64,
        #[source]
        source: ModelError,
    },
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVariable {
    SnrDb,
    Alpha,
    D1,
}

impl SweepVariable {
    pub fn name(self) -> &'static str {
        match self {
            SweepVariable::SnrDb => "snr_db",
            SweepVariable::Alpha => "alpha",
            SweepVariable::D1 => "d1",
        }
    }

    /// Default `(start, stop, step)` covering the corresponding figure axis.
    pub fn default_range(self) -> (f64, f64, f64) {
        match self {
            SweepVariable::SnrDb => (0.0, 30.0, 5.0),
            SweepVariable::Alpha => (0.1, 0.8, 0.1),
            SweepVariable::D1 => (0.1, 0.9, 0.1),
        }
    }

    fn apply(self, params: &SystemParams, value: f64) -> SystemParams {
        let mut p = *params;
        match self {
            SweepVariable::SnrDb => p.rho = db_to_linear(value),
            SweepVariable::Alpha => p.alpha = value,
            SweepVariable::D1 => p.d1 = value,
        }
        p
    }
}

impl fmt::Display for SweepVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepVariable {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "snr" | "snr_db" => Ok(SweepVariable::SnrDb),
            "alpha" => Ok(SweepVariable::Alpha),
            "d1" => Ok(SweepVariable::D1),
            other => Err(format!(
                "unknown sweep variable `{other}` (expected snr, alpha or d1)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum MetricKind {
    Esc,
    Op,
    Ee,
}

impl MetricKind {
    pub const ALL: [MetricKind; 3] = [MetricKind::Esc, MetricKind::Op, MetricKind::Ee];

    pub fn name(self) -> &'static str {
        match self {
            MetricKind::Esc => "esc",
            MetricKind::Op => "op",
            MetricKind::Ee => "ee",
        }
    }
}

/// Parses `esc`, `op`, `ee`, `all`, or a comma-separated list of them.
pub fn parse_metric_list(s: &str) -> Result<Vec<MetricKind>, String> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim) {
        match part {
            "all" => out.extend(MetricKind::ALL),
            "esc" => out.push(MetricKind::Esc),
            "op" => out.push(MetricKind::Op),
            "ee" => out.push(MetricKind::Ee),
            other => {
                return Err(format!(
                    "unknown metric `{other}` (expected esc, op, ee or all)"
                ))
            }
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}

/// Parses `ehs-mrc`, `hs-sc` or `both`.
pub fn parse_protocol_list(s: &str) -> Result<Vec<Protocol>, String> {
    match s.trim() {
        "both" => Ok(Protocol::ALL.to_vec()),
        one => one.parse().map(|p| vec![p]),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub start: f64,
    pub stop: f64,
    pub step: f64,
    pub protocols: Vec<Protocol>,
    pub metrics: Vec<MetricKind>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        let variable = SweepVariable::SnrDb;
        let (start, stop, step) = variable.default_range();
        Self {
            variable,
            start,
            stop,
            step,
            protocols: Protocol::ALL.to_vec(),
            metrics: MetricKind::ALL.to_vec(),
        }
    }
}

impl SweepSpec {
    pub fn grid(&self) -> Result<Vec<f64>, SweepError> {
        let empty = || SweepError::EmptyGrid {
            start: self.start,
            stop: self.stop,
            step: self.step,
        };
        if !(self.step > 0.0 && self.start.is_finite() && self.stop.is_finite())
            || self.start > self.stop
        {
            return Err(empty());
        }
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        Ok((0..count)
            .map(|i| {
                let v = self.start + i as f64 * self.step;
                // strip accumulated representation error, e.g. 0.30000000000000004
                (v * 1e12).round() / 1e12
            })
            .collect())
    }

    pub fn validate(&self, params: &SystemParams) -> Result<(), SweepError> {
        let grid = self.grid()?;
        if self.protocols.is_empty() {
            return Err(SweepError::NoProtocols);
        }
        if self.metrics.is_empty() {
            return Err(SweepError::NoMetrics);
        }
        let (lo, hi) = (grid[0], grid[grid.len() - 1]);
        let out_of_range = |range: String| SweepError::OutOfRange {
            variable: self.variable,
            range,
            start: lo,
            stop: hi,
        };
        match self.variable {
            SweepVariable::SnrDb => {}
            SweepVariable::Alpha => {
                if !(lo > 0.0 && hi < 1.0) {
                    return Err(out_of_range("(0, 1)".into()));
                }
            }
            SweepVariable::D1 => {
                if !(lo > 0.0 && hi < params.d2) {
                    return Err(out_of_range(format!("(0, d2 = {})", params.d2)));
                }
            }
        }
        Ok(())
    }
}

/// Sweep settings as written, before defaults are filled in.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepSettings {
    pub variable: Option<SweepVariable>,
    pub start: Option<f64>,
    pub stop: Option<f64>,
    pub step: Option<f64>,
    pub protocols: Option<Vec<Protocol>>,
    pub metrics: Option<Vec<MetricKind>>,
}

impl SweepSettings {
    /// Fills gaps with the defaults for the chosen variable.
    pub fn resolve(&self) -> SweepSpec {
        let variable = self.variable.unwrap_or(SweepVariable::SnrDb);
        let (start, stop, step) = variable.default_range();
        SweepSpec {
            variable,
            start: self.start.unwrap_or(start),
            stop: self.stop.unwrap_or(stop),
            step: self.step.unwrap_or(step),
            protocols: self
                .protocols
                .clone()
                .unwrap_or_else(|| Protocol::ALL.to_vec()),
            metrics: self
                .metrics
                .clone()
                .unwrap_or_else(|| MetricKind::ALL.to_vec()),
        }
    }
}

/// A parsed config file. Parameters are not validated until
/// [`ConfigFile::resolve`], so command-line overrides can be applied first.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    pub params: SystemParams,
    pub estimator: EstimatorConfig,
    pub sweep: SweepSettings,
}

const KNOWN_KEYS: &[&str] = &[
    "rho", "snr_db", "alpha", "delta", "eta", "p_n", "p_f", "p_total", "d1", "d2", "v", "r1", "r2",
    "r3", "sigma_sq", "t_total", "trials", "seed", "sweep", "start", "stop", "step", "protocol",
    "metrics",
];

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = ConfigFile::default();
        let mut seen: Vec<&str> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .filter(|(k, v)| !k.is_empty() && !v.is_empty())
                .ok_or_else(|| ConfigError::Malformed {
                    line,
                    text: raw.trim().to_string(),
                })?;
            let key: &'static str =
                KNOWN_KEYS
                    .iter()
                    .copied()
                    .find(|k| *k == key)
                    .ok_or_else(|| ConfigError::UnknownKey {
                        line,
                        key: key.to_string(),
                    })?;
            if seen.contains(&key) {
                return Err(ConfigError::DuplicateKey {
                    line,
                    key: key.to_string(),
                });
            }
            if (key == "rho" && seen.contains(&"snr_db"))
                || (key == "snr_db" && seen.contains(&"rho"))
            {
                return Err(ConfigError::ConflictingSnr);
            }
            seen.push(key);
            cfg.set(line, key, value)?;
        }
        Ok(cfg)
    }

    fn set(&mut self, line: usize, key: &str, value: &str) -> Result<(), ConfigError> {
        let invalid = |reason: String| ConfigError::InvalidValue {
            line,
            key: key.to_string(),
            value: value.to_string(),
            reason,
        };
        let real = || value.parse::<f64>().map_err(|e| invalid(e.to_string()));
        let integer = || value.parse::<u64>().map_err(|e| invalid(e.to_string()));
        let p = &mut self.params;
        match key {
            "rho" => p.rho = real()?,
            "snr_db" => p.rho = db_to_linear(real()?),
            "alpha" => p.alpha = real()?,
            "delta" => p.delta = real()?,
            "eta" => p.eta = real()?,
            "p_n" => p.p_n = real()?,
            "p_f" => p.p_f = real()?,
            "p_total" => p.p_total = real()?,
            "d1" => p.d1 = real()?,
            "d2" => p.d2 = real()?,
            "v" => p.v = real()?,
            "r1" => p.r1 = real()?,
            "r2" => p.r2 = real()?,
            "r3" => p.r3 = real()?,
            "sigma_sq" => p.sigma_sq = real()?,
            "t_total" => p.t_total = real()?,
            "trials" => self.estimator.trials = integer()?,
            "seed" => self.estimator.seed = integer()?,
            "sweep" => self.sweep.variable = Some(value.parse().map_err(invalid)?),
            "start" => self.sweep.start = Some(real()?),
            "stop" => self.sweep.stop = Some(real()?),
            "step" => self.sweep.step = Some(real()?),
            "protocol" => self.sweep.protocols = Some(parse_protocol_list(value).map_err(invalid)?),
            "metrics" => self.sweep.metrics = Some(parse_metric_list(value).map_err(invalid)?),
            _ => unreachable!("key checked against KNOWN_KEYS"),
        }
        Ok(())
    }

    /// Validates everything and fills sweep defaults.
    pub fn resolve(&self) -> Result<(SystemParams, EstimatorConfig, SweepSpec), ConfigError> {
        self.params
            .validate()
            .map_err(|source| ConfigError::Constraint {
                key: source.field(),
                source,
            })?;
        let estimator = EstimatorConfig::new(
            self.estimator.trials,
            self.estimator.seed,
            self.estimator.protocol,
        )?;
        let estimator = EstimatorConfig {
            workers: self.estimator.workers,
            ..estimator
        };
        let spec = self.sweep.resolve();
        spec.validate(&self.params)?;
        Ok((self.params, estimator, spec))
    }
}

pub fn parse_config(text: &str) -> Result<(SystemParams, EstimatorConfig, SweepSpec), ConfigError> {
    ConfigFile::parse(text)?.resolve()
}

/// Renders a configuration that [`parse_config`] reads back exactly.
pub fn render_config(params: &SystemParams, cfg: &EstimatorConfig, spec: &SweepSpec) -> String {
    let protocol = if spec.protocols.len() == Protocol::ALL.len() {
        "both".to_string()
    } else {
        spec.protocols
            .iter()
            .map(|p| p.name())
            .collect::<Vec<_>>()
            .join(",")
    };
    let metrics = spec
        .metrics
        .iter()
        .map(|m| m.name())
        .collect::<Vec<_>>()
        .join(",");
    let p = params;
    let mut out = String::new();
    let mut kv = |k: &str, v: String| {
        out.push_str(k);
        out.push_str(" = ");
        out.push_str(&v);
        out.push('\n');
    };
    kv("rho", p.rho.to_string());
    kv("alpha", p.alpha.to_string());
    kv("delta", p.delta.to_string());
    kv("eta", p.eta.to_string());
    kv("p_n", p.p_n.to_string());
    kv("p_f", p.p_f.to_string());
    kv("p_total", p.p_total.to_string());
    kv("d1", p.d1.to_string());
    kv("d2", p.d2.to_string());
    kv("v", p.v.to_string());
    kv("r1", p.r1.to_string());
    kv("r2", p.r2.to_string());
    kv("r3", p.r3.to_string());
    kv("sigma_sq", p.sigma_sq.to_string());
    kv("t_total", p.t_total.to_string());
    kv("trials", cfg.trials.to_string());
    kv("seed", cfg.seed.to_string());
    kv("sweep", spec.variable.name().to_string());
    kv("start", spec.start.to_string());
    kv("stop", spec.stop.to_string());
    kv("step", spec.step.to_string());
    kv("protocol", protocol);
    kv("metrics", metrics);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symbol {
    X1,
    X2,
    X3,
    Sum,
    /// Whole-system quantity (energy efficiency).
    System,
}

impl Symbol {
    pub fn label(self) -> &'static str {
        match self {
            Symbol::X1 => "x1",
            Symbol::X2 => "x2",
            Symbol::X3 => "x3",
            Symbol::Sum => "sum",
            Symbol::System => "-",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub variable: SweepVariable,
    pub value: f64,
    pub protocol: Protocol,
    pub metric: MetricKind,
    pub symbol: Symbol,
    pub analytic: Option<f64>,
    pub simulated: f64,
    pub std_error: f64,
    pub trials: u64,
    pub seed: u64,
}

/// Everything one sweep produces; `reports` is filled only when validation
/// was requested.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutput {
    pub rows: Vec<SweepRow>,
    pub reports: Vec<(f64, ValidationReport)>,
}

impl SweepOutput {
    pub fn has_failures(&self) -> bool {
        self.reports.iter().any(|(_, r)| r.has_failures())
    }
}

/// `(symbol, simulated metric, closed form if one exists)` for one metric
/// family under one protocol.
fn row_layout(
    kind: MetricKind,
    protocol: Protocol,
    params: &SystemParams,
    vars: &crate::model::ChannelVariances,
) -> Vec<(Symbol, MetricId, Option<f64>)> {
    let psi = thresholds(params);
    let enhanced = protocol.carries_x1();
    let only_enhanced = |v: f64| enhanced.then_some(v);
    match kind {
        MetricKind::Esc => {
            let esc = analytic::ergodic_sum(params, vars, protocol);
            let mut rows = Vec::with_capacity(4);
            if enhanced {
                rows.push((
                    Symbol::X1,
                    MetricId::CX1,
                    Some(analytic::ergodic_c_x1(params, vars).value),
                ));
            }
            rows.push((
                Symbol::X2,
                MetricId::CX2,
                Some(analytic::ergodic_c_x2(params, vars).value),
            ));
            rows.push((
                Symbol::X3,
                MetricId::CX3,
                only_enhanced(analytic::ergodic_c_x3(params, vars).value),
            ));
            rows.push((Symbol::Sum, MetricId::EscTotal, only_enhanced(esc)));
            rows
        }
        MetricKind::Op => {
            let mut rows = Vec::with_capacity(3);
            if enhanced {
                rows.push((
                    Symbol::X1,
                    MetricId::OpX1,
                    Some(analytic::op_ceu_x1(params, vars, &psi).value),
                ));
            }
            rows.push((
                Symbol::X2,
                MetricId::OpX2Ccu,
                Some(analytic::op_ccu(params, vars, &psi).value),
            ));
            rows.push((
                Symbol::X3,
                MetricId::OpX3Ceu,
                only_enhanced(analytic::op_ceu_x3(params, vars, &psi).value),
            ));
            rows
        }
        MetricKind::Ee => {
            let esc = analytic::ergodic_sum(params, vars, protocol);
            let ee = analytic::energy_efficiency(params, vars, esc).ok();
            vec![(Symbol::System, MetricId::Ee, ee.filter(|_| enhanced))]
        }
    }
}

fn point_rows(
    spec: &SweepSpec,
    value: f64,
    params: &SystemParams,
    vars: &crate::model::ChannelVariances,
    protocol: Protocol,
    cfg: &EstimatorConfig,
    estimates: &MetricEstimates,
) -> Vec<SweepRow> {
    let mut rows = Vec::new();
    for &kind in &spec.metrics {
        for (symbol, metric, analytic) in row_layout(kind, protocol, params, vars) {
            let est = estimates.get(metric);
            rows.push(SweepRow {
                variable: spec.variable,
                value,
                protocol,
                metric: kind,
                symbol,
                analytic,
                simulated: est.mean,
                std_error: est.std_error,
                trials: est.n,
                seed: cfg.seed,
            });
        }
    }
    rows
}

/// Runs every grid point for every selected protocol. Rows are ordered by
/// point, then protocol, metric family and symbol. With `validate`, each
/// point's estimates are also scored against the closed forms.
pub fn run_sweep_detailed(
    spec: &SweepSpec,
    params: &SystemParams,
    cfg: &EstimatorConfig,
    validate: bool,
) -> Result<SweepOutput, SweepError> {
    spec.validate(params)?;
    let mut protocols = spec.protocols.clone();
    protocols.sort();
    protocols.dedup();
    let mut metrics = spec.metrics.clone();
    metrics.sort();
    metrics.dedup();
    let spec = SweepSpec {
        protocols,
        metrics,
        ..spec.clone()
    };

    let mut output = SweepOutput {
        rows: Vec::new(),
        reports: Vec::new(),
    };
    for value in spec.grid()? {
        let point = spec.variable.apply(params, value);
        let point_err = |source| SweepError::Point {
            variable: spec.variable,
            value,
            source,
        };
        point.validate().map_err(point_err)?;
        let vars = variances_from_distances(&point).map_err(point_err)?;
        for &protocol in &spec.protocols {
            let run_cfg = cfg.with_protocol(protocol);
            let estimates = estimate_metrics(&point, &vars, &run_cfg)?;
            output.rows.extend(point_rows(
                &spec, value, &point, &vars, protocol, &run_cfg, &estimates,
            ));
            if validate {
                output.reports.push((
                    value,
                    validate_estimates(&point, &vars, protocol, &estimates),
                ));
            }
        }
    }
    Ok(output)
}

pub fn run_sweep(
    spec: &SweepSpec,
    params: &SystemParams,
    cfg: &EstimatorConfig,
) -> Result<Vec<SweepRow>, SweepError> {
    run_sweep_detailed(spec, params, cfg, false).map(|o| o.rows)
}

/// Formats like C's `%.9g`: nine significant digits, trailing zeros dropped,
/// scientific notation below 1e−4 or at and above 1e9.
pub fn format_sig9(x: f64) -> String {
    const PRECISION: i32 = 9;
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{:.*e}", (PRECISION - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..PRECISION).contains(&exp) {
        let mantissa = trim_fraction(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (PRECISION - 1 - exp) as usize;
        trim_fraction(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn csv_line(row: &SweepRow) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{}\n",
        row.variable.name(),
        format_sig9(row.value),
        row.protocol.name(),
        row.metric.name(),
        row.symbol.label(),
        row.analytic.map(format_sig9).unwrap_or_default(),
        format_sig9(row.simulated),
        format_sig9(row.std_error),
        row.trials,
        row.seed
    )
}

/// Writes the header and one LF-terminated line per row.
pub fn write_csv<W: Write>(rows: &[SweepRow], mut out: W) -> io::Result<()> {
    if rows.is_empty() {
        return Err(io::Error::new(
            io::ErrorKind::InvalidInput,
            "no rows to write",
        ));
    }
    out.write_all(CSV_HEADER.as_bytes())?;
    out.write_all(b"\n")?;
    for row in rows {
        out.write_all(csv_line(row).as_bytes())?;
    }
    out.flush()
}

pub fn write_csv_file(rows: &[SweepRow], path: &Path) -> io::Result<()> {
    write_csv(rows, BufWriter::new(File::create(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_gives_defaults() {
        let (params, cfg, spec) = parse_config("").unwrap();
        assert_eq!(params, SystemParams::default());
        assert_eq!(params.alpha, 0.3);
        assert_eq!(params.eta, 0.7);
        assert_eq!(params.v, 2.0);
        assert_eq!((params.d1, params.d2), (0.5, 1.0));
        assert_eq!((params.p_n, params.p_f), (0.1, 0.9));
        assert_eq!((params.r1, params.r2, params.r3), (1.0, 1.0, 1.0));
        assert_eq!((cfg.trials, cfg.seed), (100_000, 42));
        assert_eq!(spec, SweepSpec::default());
    }

    #[test]
    fn comments_and_blank_lines() {
        let text = "# header\n\nalpha = 0.3 # comment\n   delta=0.25\n";
        let (params, _, _) = parse_config(text).unwrap();
        assert_eq!(params.alpha, 0.3);
        assert_eq!(params.delta, 0.25);
    }

    #[test]
    fn constraint_violation_names_key() {
        let err = parse_config("p_n = 0.6").unwrap_err();
        assert!(
            matches!(err, ConfigError::Constraint { key: "p_n", .. }),
            "{err}"
        );
        let err = parse_config("d1 = 1.5").unwrap_err();
        assert!(
            matches!(err, ConfigError::Constraint { key: "d1", .. }),
            "{err}"
        );
        let err = parse_config("alpha = 1.0").unwrap_err();
        assert!(
            matches!(err, ConfigError::Constraint { key: "alpha", .. }),
            "{err}"
        );
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        match parse_config("alpha = 0.3\nnot a pair\n").unwrap_err() {
            ConfigError::Malformed { line, .. } => assert_eq!(line, 2),
            other => panic!("{other}"),
        }
        match parse_config("\n\nbogus = 1\n").unwrap_err() {
            ConfigError::UnknownKey { line, key } => assert_eq!((line, key.as_str()), (3, "bogus")),
            other => panic!("{other}"),
        }
        match parse_config("trials = lots").unwrap_err() {
            ConfigError::InvalidValue { line, key, .. } => {
                assert_eq!((line, key.as_str()), (1, "trials"))
            }
            other => panic!("{other}"),
        }
        assert!(matches!(
            parse_config("alpha =").unwrap_err(),
            ConfigError::Malformed { .. }
        ));
        assert!(matches!(
            parse_config("alpha = 0.2\nalpha = 0.3").unwrap_err(),
            ConfigError::DuplicateKey { line: 2, .. }
        ));
        assert!(matches!(
            parse_config("rho = 10\nsnr_db = 10").unwrap_err(),
            ConfigError::ConflictingSnr
        ));
        assert!(matches!(
            parse_config("trials = 0").unwrap_err(),
            ConfigError::Estimator(EstimatorError::ZeroTrials)
        ));
    }

    #[test]
    fn snr_and_sweep_keys() {
        let text = "snr_db = 10\nsweep = alpha\nprotocol = hs-sc\nmetrics = op,esc\n";
        let (params, _, spec) = parse_config(text).unwrap();
        assert!((params.rho - 10.0).abs() < 1e-12);
        assert_eq!(spec.variable, SweepVariable::Alpha);
        assert_eq!((spec.start, spec.stop, spec.step), (0.1, 0.8, 0.1));
        assert_eq!(spec.protocols, vec![Protocol::HsSc]);
        assert_eq!(spec.metrics, vec![MetricKind::Esc, MetricKind::Op]);
        assert!(parse_config("sweep = alpha\nstart = 0\n").is_err());
        assert!(parse_config("sweep = d1\nstop = 1.0\n").is_err());
    }

    #[test]
    fn render_round_trips_defaults() {
        let (params, cfg, spec) = parse_config("").unwrap();
        let text = render_config(&params, &cfg, &spec);
        assert_eq!(parse_config(&text).unwrap(), (params, cfg, spec));
        let custom =
            parse_config("snr_db = 7.3\nsweep = d1\nstep = 0.05\nprotocol = ehs-mrc\nmetrics = ee")
                .unwrap();
        assert_eq!(
            parse_config(&render_config(&custom.0, &custom.1, &custom.2)).unwrap(),
            custom
        );
    }

    #[test]
    fn grid_arithmetic() {
        let spec = SweepSpec::default();
        assert_eq!(
            spec.grid().unwrap(),
            vec![0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0]
        );
        let alpha = SweepSpec {
            variable: SweepVariable::Alpha,
            start: 0.1,
            stop: 0.8,
            step: 0.1,
            ..SweepSpec::default()
        };
        let g = alpha.grid().unwrap();
        assert_eq!(g.len(), 8);
        assert_eq!(g[2], 0.3);
        assert_eq!(g[7], 0.8);
        let single = SweepSpec {
            start: 3.0,
            stop: 3.0,
            ..SweepSpec::default()
        };
        assert_eq!(single.grid().unwrap(), vec![3.0]);
        for bad in [
            SweepSpec {
                start: 5.0,
                stop: 0.0,
                ..SweepSpec::default()
            },
            SweepSpec {
                step: 0.0,
                ..SweepSpec::default()
            },
            SweepSpec {
                step: -1.0,
                ..SweepSpec::default()
            },
        ] {
            assert!(matches!(bad.grid(), Err(SweepError::EmptyGrid { .. })));
        }
    }

    #[test]
    fn sig9_formatting() {
        assert_eq!(format_sig9(0.179_227_410_663_659_55), "0.179227411");
        assert_eq!(format_sig9(0.0), "0");
        assert_eq!(format_sig9(1.0), "1");
        assert_eq!(format_sig9(15.0), "15");
        assert_eq!(format_sig9(0.3), "0.3");
        assert_eq!(format_sig9(-2.5), "-2.5");
        assert_eq!(format_sig9(123_456_789.4), "123456789");
        assert_eq!(format_sig9(1_234_567_890.0), "1.23456789e+09");
        assert_eq!(format_sig9(0.000_123_456_789_12), "0.000123456789");
        assert_eq!(format_sig9(1.5e-5), "1.5e-05");
        assert_eq!(format_sig9(9.999_999_999_9), "10");
        assert_eq!(format_sig9(3.162_277_660_168_379_5e1), "31.6227766");
    }

    fn sample_row() -> SweepRow {
        SweepRow {
            variable: SweepVariable::SnrDb,
            value: 15.0,
            protocol: Protocol::EhsMrc,
            metric: MetricKind::Op,
            symbol: Symbol::X1,
            analytic: Some(0.179_227_410_663_659_55),
            simulated: 0.1792,
            std_error: 0.000_38,
            trials: 1_000_000,
            seed: 42,
        }
    }

    #[test]
    fn one_row_csv() {
        let mut buf = Vec::new();
        write_csv(&[sample_row()], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "variable,value,protocol,metric,symbol,analytic,simulated,std_error,trials,seed\n\
             snr_db,15,ehs-mrc,op,x1,0.179227411,0.1792,0.00038,1000000,42\n"
        );
        assert_eq!(text.lines().count(), 2);
    }

    #[test]
    fn missing_analytic_is_empty_cell() {
        let row = SweepRow {
            protocol: Protocol::HsSc,
            symbol: Symbol::X3,
            analytic: None,
            ..sample_row()
        };
        assert_eq!(
            csv_line(&row),
            "snr_db,15,hs-sc,op,x3,,0.1792,0.00038,1000000,42\n"
        );
    }

    #[test]
    fn empty_rows_rejected() {
        assert!(write_csv(&[], Vec::new()).is_err());
    }

    #[test]
    fn row_layout_and_order() {
        let params = SystemParams::default();
        let cfg = EstimatorConfig::new(2_000, 1, Protocol::EhsMrc).unwrap();
        let spec = SweepSpec {
            start: 10.0,
            stop: 15.0,
            ..SweepSpec::default()
        };
        let rows = run_sweep(&spec, &params, &cfg).unwrap();
        // per point: ehs 4 esc + 3 op + 1 ee, hs 3 esc + 2 op + 1 ee
        assert_eq!(rows.len(), 2 * (8 + 6));
        let first: Vec<_> = rows[..14]
            .iter()
            .map(|r| {
                (
                    r.protocol.name(),
                    r.metric.name(),
                    r.symbol.label(),
                    r.analytic.is_some(),
                )
            })
            .collect();
        assert_eq!(
            first,
            vec![
                ("ehs-mrc", "esc", "x1", true),
                ("ehs-mrc", "esc", "x2", true),
                ("ehs-mrc", "esc", "x3", true),
                ("ehs-mrc", "esc", "sum", true),
                ("ehs-mrc", "op", "x1", true),
                ("ehs-mrc", "op", "x2", true),
                ("ehs-mrc", "op", "x3", true),
                ("ehs-mrc", "ee", "-", true),
                ("hs-sc", "esc", "x2", true),
                ("hs-sc", "esc", "x3", false),
                ("hs-sc", "esc", "sum", false),
                ("hs-sc", "op", "x2", true),
                ("hs-sc", "op", "x3", false),
                ("hs-sc", "ee", "-", false),
            ]
        );
        assert!(rows[..14]
            .iter()
            .all(|r| r.value == 10.0 && r.trials == 2_000 && r.seed == 1));
        assert!(rows[14..].iter().all(|r| r.value == 15.0));
    }

    #[test]
    fn sweeps_rederive_point_parameters() {
        let params = SystemParams::default();
        let cfg = EstimatorConfig::new(1_000, 1, Protocol::EhsMrc).unwrap();
        let spec = SweepSpec {
            variable: SweepVariable::D1,
            start: 0.25,
            stop: 0.25,
            protocols: vec![Protocol::EhsMrc],
            metrics: vec![MetricKind::Esc],
            ..SweepSpec::default()
        };
        let rows = run_sweep(&spec, &params, &cfg).unwrap();
        let at = SystemParams { d1: 0.25, ..params };
        let vars = variances_from_distances(&at).unwrap();
        assert_eq!(
            rows[1].analytic,
            Some(analytic::ergodic_c_x2(&at, &vars).value)
        );

        let spec = SweepSpec {
            variable: SweepVariable::Alpha,
            start: 0.5,
            stop: 0.5,
            protocols: vec![Protocol::EhsMrc],
            metrics: vec![MetricKind::Op],
            ..SweepSpec::default()
        };
        let rows = run_sweep(&spec, &params, &cfg).unwrap();
        let at = SystemParams {
            alpha: 0.5,
            ..params
        };
        let vars = variances_from_distances(&at).unwrap();
        let psi = thresholds(&at);
        assert_eq!(
            rows[0].analytic,
            Some(analytic::op_ceu_x1(&at, &vars, &psi).value)
        );
    }
}
