//! Per-realization link physics for the enhanced hybrid protocol with MRC and
//! the hybrid baseline with selection combining.
//!
//! Everything here works at the SINR level: a [`ChannelRealization`] goes in,
//! SINRs, relay power, instantaneous capacities and outage indicators come
//! out. The CCU always spends its harvested power on the relay hop, whether
//! or not it decoded `x3`.

use std::f64::consts::LN_2;
use std::fmt;
use std::str::FromStr;

use crate::model::{ChannelRealization, ModelError, SystemParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Protocol {
    /// Enhanced hybrid SWIPT: `x1` on the TS-phase BS→CEU link, MRC for `x3`.
    EhsMrc,
    /// Hybrid SWIPT baseline: idle TS-phase BS→CEU link, selection combining.
    HsSc,
}

impl Protocol {
    pub const ALL: [Protocol; 2] = [Protocol::EhsMrc, Protocol::HsSc];

    pub fn name(self) -> &'static str {
        match self {
            Protocol::EhsMrc => "ehs-mrc",
            Protocol::HsSc => "hs-sc",
        }
    }

    /// Whether the protocol transmits `x1`.
    pub fn carries_x1(self) -> bool {
        matches!(self, Protocol::EhsMrc)
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Protocol {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ehs-mrc" => Ok(Protocol::EhsMrc),
            "hs-sc" => Ok(Protocol::HsSc),
            other => Err(format!(
                "unknown protocol `{other}` (expected ehs-mrc or hs-sc)"
            )),
        }
    }
}

/// Decode thresholds `ψ = 2^(2R/(1−α)) − 1` for the three target rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub psi_r1: f64,
    pub psi_r2: f64,
    pub psi_r3: f64,
}

fn psi(rate: f64, alpha: f64) -> f64 {
    (2.0 * rate / (1.0 - alpha) * LN_2).exp_m1()
}

/// All three thresholds share the `(1−α)/2` prelog, `ψ_R1` included.
pub fn thresholds(params: &SystemParams) -> Thresholds {
    Thresholds {
        psi_r1: psi(params.r1, params.alpha),
        psi_r2: psi(params.r2, params.alpha),
        psi_r3: psi(params.r3, params.alpha),
    }
}

/// SINRs and relay power for one realization under one protocol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkMetrics {
    /// CEU SNR for `x1` during the TS phase (zero when the link is idle).
    pub snr_x1_ceu: f64,
    /// CCU SINR for `x3`, the first SIC stage.
    pub sinr_x3_ccu: f64,
    /// CCU SNR for `x2` after cancelling `x3`.
    pub snr_x2_ccu: f64,
    /// CEU SINR for `x3` on the direct link, `x2` treated as noise.
    pub sinr_x3_ceu_direct: f64,
    pub p_relay: f64,
    pub snr_x3_relay: f64,
    /// Combined CEU SINR for `x3`: sum under MRC, max under SC.
    pub snr_x3_combined: f64,
}

/// CCU transmit power `η·ρ·|h_CCU|²·(2α/(1−α) + δ)` funded by the harvest.
pub fn relay_power(params: &SystemParams, g_ccu: f64) -> Result<f64, ModelError> {
    Ok(params.eta * params.snr() * g_ccu * params.harvest_factor()?)
}

fn relay_power_unchecked(params: &SystemParams, g_ccu: f64) -> f64 {
    params.eta * params.snr() * g_ccu * (2.0 * params.alpha / (1.0 - params.alpha) + params.delta)
}

/// Energy banked by the CCU over the block, `P_CCU·(1−α)·T/2`.
pub fn harvested_energy(params: &SystemParams, g_ccu: f64) -> f64 {
    relay_power_unchecked(params, g_ccu) * (1.0 - params.alpha) * params.t_total / 2.0
}

pub fn link_metrics(
    params: &SystemParams,
    real: &ChannelRealization,
    protocol: Protocol,
) -> LinkMetrics {
    let rho = params.snr();
    let rx_ccu = rho * real.g_ccu;
    let rx_ceu = rho * real.g_ceu;
    // the (1−δ) PS factors cancel in both CCU expressions
    let sinr_x3_ccu = params.p_f * rx_ccu / (params.p_n * rx_ccu + 1.0);
    let snr_x2_ccu = params.p_n * rx_ccu;
    let sinr_x3_ceu_direct = params.p_f * rx_ceu / (params.p_n * rx_ceu + 1.0);
    let p_relay = relay_power_unchecked(params, real.g_ccu);
    let snr_x3_relay = p_relay * real.g_relay;
    let (snr_x1_ceu, snr_x3_combined) = match protocol {
        Protocol::EhsMrc => (rx_ceu * params.p_total, sinr_x3_ceu_direct + snr_x3_relay),
        Protocol::HsSc => (0.0, sinr_x3_ceu_direct.max(snr_x3_relay)),
    };
    LinkMetrics {
        snr_x1_ceu,
        sinr_x3_ccu,
        snr_x2_ccu,
        sinr_x3_ceu_direct,
        p_relay,
        snr_x3_relay,
        snr_x3_combined,
    }
}

pub fn ehs_link_metrics(params: &SystemParams, real: &ChannelRealization) -> LinkMetrics {
    link_metrics(params, real, Protocol::EhsMrc)
}

pub fn hs_link_metrics(params: &SystemParams, real: &ChannelRealization) -> LinkMetrics {
    link_metrics(params, real, Protocol::HsSc)
}

/// Instantaneous capacities in bits/s/Hz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Capacities {
    pub c_x1: f64,
    pub c_x2: f64,
    pub c_x3: f64,
}

impl Capacities {
    pub fn sum(&self) -> f64 {
        self.c_x1 + self.c_x2 + self.c_x3
    }
}

fn log2_1p(x: f64) -> f64 {
    x.ln_1p() / LN_2
}

pub fn instantaneous_capacities(
    params: &SystemParams,
    metrics: &LinkMetrics,
    protocol: Protocol,
) -> Capacities {
    let half_info = (1.0 - params.alpha) / 2.0;
    let c_x1 = if protocol.carries_x1() {
        params.alpha * log2_1p(metrics.snr_x1_ceu)
    } else {
        0.0
    };
    Capacities {
        c_x1,
        c_x2: half_info * log2_1p(metrics.snr_x2_ccu),
        c_x3: half_info * log2_1p(metrics.snr_x3_combined),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OutageFlags {
    pub out_x1: bool,
    pub out_x2_ccu: bool,
    pub out_x3_ceu: bool,
}

/// Outage indicators. Decoding succeeds when the SINR reaches the threshold
/// (`≥`). The CEU is in outage for `x3` whenever the CCU fails to decode it,
/// regardless of the direct link.
pub fn outage_flags(
    metrics: &LinkMetrics,
    thresholds: &Thresholds,
    protocol: Protocol,
) -> OutageFlags {
    let ccu_has_x3 = metrics.sinr_x3_ccu >= thresholds.psi_r3;
    OutageFlags {
        out_x1: !protocol.carries_x1() || metrics.snr_x1_ceu < thresholds.psi_r1,
        out_x2_ccu: !(ccu_has_x3 && metrics.snr_x2_ccu >= thresholds.psi_r2),
        out_x3_ceu: !(ccu_has_x3 && metrics.snr_x3_combined >= thresholds.psi_r3),
    }
}

/// Everything the estimator averages for one realization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealizationOutcome {
    pub capacities: Capacities,
    pub outage: OutageFlags,
    pub energy_harvested: f64,
    pub p_relay: f64,
}

pub fn evaluate_realization(
    params: &SystemParams,
    thresholds: &Thresholds,
    real: &ChannelRealization,
    protocol: Protocol,
) -> RealizationOutcome {
    let metrics = link_metrics(params, real, protocol);
    RealizationOutcome {
        capacities: instantaneous_capacities(params, &metrics, protocol),
        outage: outage_flags(&metrics, thresholds, protocol),
        energy_harvested: harvested_energy(params, real.g_ccu),
        p_relay: metrics.p_relay,
    }
}
