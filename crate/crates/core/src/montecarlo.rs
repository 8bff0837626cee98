//! Deterministic Monte-Carlo estimation of capacities, outage probabilities
//! and energy efficiency.
//!
//! Trials are grouped into fixed-size blocks. Each block is accumulated
//! sequentially and the blocks are merged in index order, so the output is a
//! pure function of `(params, variances, seed, trials, protocol)` no matter
//! how many worker threads run the blocks.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::analytic::{self, AnalyticReport, Exactness};
use crate::model::{sample_realization, ChannelVariances, SystemParams};
use crate::protocols::{evaluate_realization, thresholds, Protocol};

/// Trials per accumulation block. Part of the determinism contract: changing
/// it changes the low-order bits of every estimate.
pub const BLOCK_TRIALS: u64 = 4096;

pub const DEFAULT_TRIALS: u64 = 100_000;
pub const DEFAULT_SEED: u64 = 42;

/// |z| above which an exact closed form is declared inconsistent with the
/// simulation.
pub const Z_FAIL: f64 = 3.0;

#[derive(Debug, Error)]
pub enum EstimatorError {
    #[error("trial count must be at least 1")]
    ZeroTrials,
    #[error("energy efficiency undefined: mean relay power is zero")]
    UndefinedEnergyEfficiency,
    #[error("failed to build worker pool: {0}")]
    WorkerPool(#[from] rayon::ThreadPoolBuildError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EstimatorConfig {
    pub trials: u64,
    pub seed: u64,
    pub protocol: Protocol,
    /// Worker threads; `None` uses the global rayon pool. Does not affect
    /// results.
    pub workers: Option<usize>,
}

impl EstimatorConfig {
    pub fn new(trials: u64, seed: u64, protocol: Protocol) -> Result<Self, EstimatorError> {
        if trials == 0 {
            return Err(EstimatorError::ZeroTrials);
        }
        Ok(Self {
            trials,
            seed,
            protocol,
            workers: None,
        })
    }

    pub fn with_protocol(self, protocol: Protocol) -> Self {
        Self { protocol, ..self }
    }

    pub fn with_workers(self, workers: usize) -> Self {
        Self {
            workers: Some(workers),
            ..self
        }
    }
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            trials: DEFAULT_TRIALS,
            seed: DEFAULT_SEED,
            protocol: Protocol::EhsMrc,
            workers: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MetricId {
    EscTotal,
    CX1,
    CX2,
    CX3,
    OpX1,
    OpX2Ccu,
    OpX3Ceu,
    MeanPRelay,
    Ee,
}

impl MetricId {
    pub const ALL: [MetricId; 9] = [
        MetricId::EscTotal,
        MetricId::CX1,
        MetricId::CX2,
        MetricId::CX3,
        MetricId::OpX1,
        MetricId::OpX2Ccu,
        MetricId::OpX3Ceu,
        MetricId::MeanPRelay,
        MetricId::Ee,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MetricId::EscTotal => "esc_total",
            MetricId::CX1 => "c_x1",
            MetricId::CX2 => "c_x2",
            MetricId::CX3 => "c_x3",
            MetricId::OpX1 => "op_x1",
            MetricId::OpX2Ccu => "op_x2_ccu",
            MetricId::OpX3Ceu => "op_x3_ceu",
            MetricId::MeanPRelay => "mean_p_relay",
            MetricId::Ee => "ee",
        }
    }
}

impl fmt::Display for MetricId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    /// Sample standard deviation over `√n`.
    pub std_error: f64,
    pub n: u64,
}

/// Per-trial samples, in accumulator slot order.
const SLOTS: usize = 8;
const ESC: usize = 0;
const P_RELAY: usize = 7;

/// Single-pass moments of the per-trial samples, plus the co-moment of ESC and
/// relay power needed for the ratio-of-means standard error.
#[derive(Debug, Clone, Copy)]
struct Accumulator {
    n: u64,
    mean: [f64; SLOTS],
    m2: [f64; SLOTS],
    co_esc_power: f64,
}

impl Accumulator {
    fn new() -> Self {
        Self {
            n: 0,
            mean: [0.0; SLOTS],
            m2: [0.0; SLOTS],
            co_esc_power: 0.0,
        }
    }

    fn push(&mut self, sample: &[f64; SLOTS]) {
        self.n += 1;
        let inv_n = 1.0 / self.n as f64;
        let esc_delta = sample[ESC] - self.mean[ESC];
        for (k, &x) in sample.iter().enumerate() {
            let delta = x - self.mean[k];
            self.mean[k] += delta * inv_n;
            self.m2[k] += delta * (x - self.mean[k]);
        }
        self.co_esc_power += esc_delta * (sample[P_RELAY] - self.mean[P_RELAY]);
    }

    fn merge(&mut self, other: &Accumulator) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let (na, nb) = (self.n as f64, other.n as f64);
        let n = na + nb;
        let weight = na * nb / n;
        let mut delta = [0.0; SLOTS];
        for k in 0..SLOTS {
            delta[k] = other.mean[k] - self.mean[k];
            self.mean[k] += delta[k] * nb / n;
            self.m2[k] += other.m2[k] + delta[k] * delta[k] * weight;
        }
        self.co_esc_power += other.co_esc_power + delta[ESC] * delta[P_RELAY] * weight;
        self.n += other.n;
    }

    fn sample_variance(&self, k: usize) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.m2[k] / (self.n - 1) as f64).max(0.0)
        }
    }

    fn estimate(&self, k: usize) -> Estimate {
        Estimate {
            mean: self.mean[k],
            std_error: (self.sample_variance(k) / self.n as f64).sqrt(),
            n: self.n,
        }
    }

    /// Ratio of mean ESC to mean relay power, with a delta-method standard
    /// error.
    fn energy_efficiency(&self) -> Option<Estimate> {
        let (esc, power) = (self.mean[ESC], self.mean[P_RELAY]);
        if !(power > 0.0) {
            return None;
        }
        let ratio = esc / power;
        let cov = if self.n < 2 {
            0.0
        } else {
            self.co_esc_power / (self.n - 1) as f64
        };
        let var = (self.sample_variance(ESC) - 2.0 * ratio * cov
            + ratio * ratio * self.sample_variance(P_RELAY))
            / (power * power * self.n as f64);
        Some(Estimate {
            mean: ratio,
            std_error: var.max(0.0).sqrt(),
            n: self.n,
        })
    }
}

/// Estimates, one per [`MetricId`].
#[derive(Debug, Clone, PartialEq)]
pub struct MetricEstimates {
    map: BTreeMap<MetricId, Estimate>,
}

impl MetricEstimates {
    pub fn get(&self, id: MetricId) -> Estimate {
        self.map[&id]
    }

    pub fn iter(&self) -> impl Iterator<Item = (MetricId, Estimate)> + '_ {
        self.map.iter().map(|(k, v)| (*k, *v))
    }
}

fn indicator(flag: bool) -> f64 {
    if flag {
        1.0
    } else {
        0.0
    }
}

fn run_block(
    params: &SystemParams,
    vars: &ChannelVariances,
    cfg: &EstimatorConfig,
    block: u64,
) -> Accumulator {
    let psi = thresholds(params);
    let start = block * BLOCK_TRIALS;
    let end = (start + BLOCK_TRIALS).min(cfg.trials);
    let mut acc = Accumulator::new();
    for trial in start..end {
        let real = sample_realization(vars, cfg.seed, trial);
        let out = evaluate_realization(params, &psi, &real, cfg.protocol);
        let c = out.capacities;
        acc.push(&[
            c.sum(),
            c.c_x1,
            c.c_x2,
            c.c_x3,
            indicator(out.outage.out_x1),
            indicator(out.outage.out_x2_ccu),
            indicator(out.outage.out_x3_ceu),
            out.p_relay,
        ]);
    }
    acc
}

fn accumulate(
    params: &SystemParams,
    vars: &ChannelVariances,
    cfg: &EstimatorConfig,
) -> Accumulator {
    let blocks = cfg.trials.div_ceil(BLOCK_TRIALS);
    let partials: Vec<Accumulator> = (0..blocks)
        .into_par_iter()
        .map(|b| run_block(params, vars, cfg, b))
        .collect();
    partials.iter().fold(Accumulator::new(), |mut total, part| {
        total.merge(part);
        total
    })
}

/// Averages per-realization outcomes over `cfg.trials` channel draws.
///
/// Trial `i` always uses the realization keyed by `(cfg.seed, i)`, so two
/// protocols run with the same config see identical channels.
pub fn estimate_metrics(
    params: &SystemParams,
    vars: &ChannelVariances,
    cfg: &EstimatorConfig,
) -> Result<MetricEstimates, EstimatorError> {
    if cfg.trials == 0 {
        return Err(EstimatorError::ZeroTrials);
    }
    let acc = match cfg.workers {
        Some(workers) => rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()?
            .install(|| accumulate(params, vars, cfg)),
        None => accumulate(params, vars, cfg),
    };
    let ee = acc
        .energy_efficiency()
        .ok_or(EstimatorError::UndefinedEnergyEfficiency)?;
    let slots = [
        MetricId::EscTotal,
        MetricId::CX1,
        MetricId::CX2,
        MetricId::CX3,
        MetricId::OpX1,
        MetricId::OpX2Ccu,
        MetricId::OpX3Ceu,
        MetricId::MeanPRelay,
    ];
    let mut map: BTreeMap<MetricId, Estimate> = slots
        .iter()
        .enumerate()
        .map(|(k, id)| (*id, acc.estimate(k)))
        .collect();
    map.insert(MetricId::Ee, ee);
    Ok(MetricEstimates { map })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValidationStatus {
    Pass,
    Fail,
    /// Published approximation: gap reported only.
    Approx,
}

impl ValidationStatus {
    pub fn label(self) -> &'static str {
        match self {
            ValidationStatus::Pass => "PASS",
            ValidationStatus::Fail => "FAIL",
            ValidationStatus::Approx => "APPROX",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationEntry {
    pub metric: MetricId,
    pub analytic: f64,
    pub exactness: Exactness,
    pub simulated: Estimate,
    /// `(simulated − analytic) / std_error`.
    pub z: f64,
    pub status: ValidationStatus,
}

impl ValidationEntry {
    pub fn gap(&self) -> f64 {
        self.simulated.mean - self.analytic
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub protocol: Protocol,
    pub entries: Vec<ValidationEntry>,
}

impl ValidationReport {
    pub fn has_failures(&self) -> bool {
        self.entries
            .iter()
            .any(|e| e.status == ValidationStatus::Fail)
    }

    pub fn entry(&self, metric: MetricId) -> Option<&ValidationEntry> {
        self.entries.iter().find(|e| e.metric == metric)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<8} {:<13} {:>14} {:>14} {:>12} {:>9} {:>7}",
            "protocol", "metric", "analytic", "simulated", "gap", "z", "status"
        )?;
        for e in &self.entries {
            writeln!(
                f,
                "{:<8} {:<13} {:>14.8} {:>14.8} {:>12.3e} {:>9.3} {:>7}",
                self.protocol.name(),
                e.metric.name(),
                e.analytic,
                e.simulated.mean,
                e.gap(),
                e.z,
                e.status.label()
            )?;
        }
        Ok(())
    }
}

fn z_score(simulated: &Estimate, analytic: f64) -> f64 {
    let diff = simulated.mean - analytic;
    if simulated.std_error > 0.0 {
        diff / simulated.std_error
    } else if diff == 0.0 {
        0.0
    } else {
        diff.signum() * f64::INFINITY
    }
}

/// Closed-form counterparts of the simulated metrics for one protocol.
///
/// The baseline only has counterparts for quantities whose physics it shares
/// with the enhanced protocol.
pub fn analytic_counterparts(
    params: &SystemParams,
    vars: &ChannelVariances,
    protocol: Protocol,
) -> Vec<(MetricId, AnalyticReport)> {
    let psi = thresholds(params);
    let relay = AnalyticReport {
        value: analytic::mean_relay_power(params, vars),
        exactness: Exactness::ExactForPrintedSinr,
    };
    match protocol {
        Protocol::EhsMrc => {
            let esc = analytic::ergodic_sum(params, vars, protocol);
            let approx = |value| AnalyticReport {
                value,
                exactness: Exactness::PaperApproximation,
            };
            let mut out = vec![
                (MetricId::EscTotal, approx(esc)),
                (MetricId::CX1, analytic::ergodic_c_x1(params, vars)),
                (MetricId::CX2, analytic::ergodic_c_x2(params, vars)),
                (MetricId::CX3, analytic::ergodic_c_x3(params, vars)),
                (MetricId::OpX1, analytic::op_ceu_x1(params, vars, &psi)),
                (MetricId::OpX2Ccu, analytic::op_ccu(params, vars, &psi)),
                (MetricId::OpX3Ceu, analytic::op_ceu_x3(params, vars, &psi)),
                (MetricId::MeanPRelay, relay),
            ];
            if let Ok(ee) = analytic::energy_efficiency(params, vars, esc) {
                out.push((MetricId::Ee, approx(ee)));
            }
            out
        }
        Protocol::HsSc => vec![
            (MetricId::CX2, analytic::ergodic_c_x2(params, vars)),
            (MetricId::OpX2Ccu, analytic::op_ccu(params, vars, &psi)),
            (MetricId::MeanPRelay, relay),
        ],
    }
}

/// Scores existing estimates against the closed forms.
pub fn validate_estimates(
    params: &SystemParams,
    vars: &ChannelVariances,
    protocol: Protocol,
    estimates: &MetricEstimates,
) -> ValidationReport {
    let entries = analytic_counterparts(params, vars, protocol)
        .into_iter()
        .map(|(metric, report)| {
            let simulated = estimates.get(metric);
            let z = z_score(&simulated, report.value);
            let status = match report.exactness {
                Exactness::PaperApproximation => ValidationStatus::Approx,
                Exactness::ExactForPrintedSinr if z.abs() <= Z_FAIL => ValidationStatus::Pass,
                Exactness::ExactForPrintedSinr => ValidationStatus::Fail,
            };
            ValidationEntry {
                metric,
                analytic: report.value,
                exactness: report.exactness,
                simulated,
                z,
                status,
            }
        })
        .collect();
    ValidationReport { protocol, entries }
}

pub fn compare_with_analytic(
    params: &SystemParams,
    vars: &ChannelVariances,
    cfg: &EstimatorConfig,
) -> Result<ValidationReport, EstimatorError> {
    let estimates = estimate_metrics(params, vars, cfg)?;
    Ok(validate_estimates(params, vars, cfg.protocol, &estimates))
}
