//! Closed-form ergodic capacities, outage probabilities and energy efficiency.
//!
//! The expressions are evaluated as published, including the ones that do
//! not match the simulated physics. Each result carries an [`Exactness`] tag
//! so the validation layer knows which values must agree with Monte-Carlo
//! and which are only reported next to it.
//!
//! Two readings are fixed here:
//! - the scale of the `x2` capacity is `q = λ_CCU·ρ·p_N`, the scale of the
//!   `x2` SNR distribution; the published note for `q` drops `p_N`.
//! - every `Ps` in an exponent is the transmit SNR `ρ`.

use std::f64::consts::LN_2;

use thiserror::Error;

use crate::model::{ChannelVariances, SystemParams};
use crate::protocols::{Protocol, Thresholds};
use crate::specfun::neg_ei_exp;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exactness {
    /// Exact for the SINR model used by the simulator; Monte-Carlo must agree.
    ExactForPrintedSinr,
    /// Published approximation; the gap to Monte-Carlo is reported, not tested.
    PaperApproximation,
}

impl Exactness {
    pub fn label(self) -> &'static str {
        match self {
            Exactness::ExactForPrintedSinr => "exact",
            Exactness::PaperApproximation => "approx",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticReport {
    pub value: f64,
    pub exactness: Exactness,
}

impl AnalyticReport {
    fn exact(value: f64) -> Self {
        Self {
            value,
            exactness: Exactness::ExactForPrintedSinr,
        }
    }

    fn approx(value: f64) -> Self {
        Self {
            value,
            exactness: Exactness::PaperApproximation,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum AnalyticError {
    #[error("energy efficiency undefined: mean relay power is zero")]
    UndefinedEnergyEfficiency,
}

/// Scale parameters of the ergodic-capacity closed forms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErgodicTerms {
    /// Mean `x1` SNR at the CEU.
    pub g: f64,
    /// Mean `x2` SNR at the CCU.
    pub q: f64,
    pub r: f64,
    pub z: f64,
    pub s: f64,
}

impl ErgodicTerms {
    pub fn new(params: &SystemParams, vars: &ChannelVariances) -> Self {
        let rho = params.snr();
        Self {
            g: vars.lambda_ceu * rho * params.p_total,
            q: vars.lambda_ccu * rho * params.p_n,
            r: params.eta * rho * vars.lambda_ceu * harvest(params),
            z: params.p_n / params.p_f,
            s: vars.lambda_relay,
        }
    }
}

fn harvest(params: &SystemParams) -> f64 {
    2.0 * params.alpha / (1.0 - params.alpha) + params.delta
}

/// `E[ln(1+X)]` for exponential `X` with the given mean, zero at zero mean.
fn mean_ln1p(mean: f64) -> f64 {
    if mean == 0.0 {
        0.0
    } else {
        neg_ei_exp(mean).expect("exponential mean must be positive")
    }
}

pub fn ergodic_c_x1(params: &SystemParams, vars: &ChannelVariances) -> AnalyticReport {
    let t = ErgodicTerms::new(params, vars);
    AnalyticReport::exact(params.alpha / LN_2 * mean_ln1p(t.g))
}

pub fn ergodic_c_x2(params: &SystemParams, vars: &ChannelVariances) -> AnalyticReport {
    let t = ErgodicTerms::new(params, vars);
    AnalyticReport::exact((1.0 - params.alpha) / (2.0 * LN_2) * mean_ln1p(t.q))
}

/// Treats the MRC output as if it were exponential, so it is tagged as an
/// approximation.
pub fn ergodic_c_x3(params: &SystemParams, vars: &ChannelVariances) -> AnalyticReport {
    let t = ErgodicTerms::new(params, vars);
    let bracket = mean_ln1p(t.r) * (1.0 + t.z) + mean_ln1p(t.s);
    AnalyticReport::approx((1.0 - params.alpha) / (2.0 * LN_2) * bracket)
}

/// Ergodic sum capacity; the baseline omits the `x1` term.
pub fn ergodic_sum(params: &SystemParams, vars: &ChannelVariances, protocol: Protocol) -> f64 {
    let x1 = if protocol.carries_x1() {
        ergodic_c_x1(params, vars).value
    } else {
        0.0
    };
    x1 + ergodic_c_x2(params, vars).value + ergodic_c_x3(params, vars).value
}

/// `p_F·ρλ / (p_F·ρλ + p_N·ρλ)`, the prefactor of both SIC outage closed forms.
pub(crate) fn sic_prefactor(params: &SystemParams, rho: f64, lambda: f64) -> f64 {
    let strong = params.p_f * rho * lambda;
    let weak = params.p_n * rho * lambda;
    let a = strong / (strong + weak);
    if a.is_finite() {
        a
    } else {
        params.p_f / (params.p_f + params.p_n)
    }
}

/// Union of two event probabilities treated as independent.
fn either(a: f64, b: f64) -> f64 {
    a + b - a * b
}

/// CCU outage as published. The first term carries no complement, so this
/// grows toward `p_F/P` as ρ falls and is tagged as an approximation.
pub fn op_ccu(
    params: &SystemParams,
    vars: &ChannelVariances,
    thresholds: &Thresholds,
) -> AnalyticReport {
    let rho = params.snr();
    let a = sic_prefactor(params, rho, vars.lambda_ccu);
    let term1 = a * (-thresholds.psi_r3 / (rho * vars.lambda_ccu * params.p_f)).exp();
    let term2 = a * -(-thresholds.psi_r2 / (rho * vars.lambda_ccu * params.p_n)).exp_m1();
    AnalyticReport::approx(either(term1, term2))
}

pub fn op_ceu_x1(
    params: &SystemParams,
    vars: &ChannelVariances,
    thresholds: &Thresholds,
) -> AnalyticReport {
    let mean_snr = params.snr() * vars.lambda_ceu * params.p_total;
    AnalyticReport::exact(-(-thresholds.psi_r1 / mean_snr).exp_m1())
}

/// CEU `x3` outage as published: the relay tail is modeled as one exponential
/// in the product of the CCU and relay gains.
pub fn op_ceu_x3(
    params: &SystemParams,
    vars: &ChannelVariances,
    thresholds: &Thresholds,
) -> AnalyticReport {
    let rho = params.snr();
    let b = sic_prefactor(params, rho, vars.lambda_ceu);
    let t1 = b * -(-thresholds.psi_r3 / (rho * vars.lambda_ceu * params.p_f)).exp_m1();
    let relay_scale = rho * vars.lambda_ccu * vars.lambda_relay * params.eta * harvest(params);
    let t2 = -(-thresholds.psi_r3 / relay_scale).exp_m1();
    AnalyticReport::approx(either(t1, t2))
}

/// `E[P_CCU] = η·ρ·λ_CCU·(2α/(1−α) + δ)`.
pub fn mean_relay_power(params: &SystemParams, vars: &ChannelVariances) -> f64 {
    params.eta * params.snr() * vars.lambda_ccu * harvest(params)
}

/// Energy efficiency as a ratio of means: `esc / E[P_CCU]`.
pub fn energy_efficiency(
    params: &SystemParams,
    vars: &ChannelVariances,
    esc: f64,
) -> Result<f64, AnalyticError> {
    let power = mean_relay_power(params, vars);
    if power > 0.0 {
        Ok(esc / power)
    } else {
        Err(AnalyticError::UndefinedEnergyEfficiency)
    }
}
