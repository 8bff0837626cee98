//! System constants, the distance to channel-variance map, and the Rayleigh
//! block-fading sampler.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("`{field}` = {value} is outside its valid range {range}")]
    OutOfRange {
        field: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("power allocation requires 0 < p_n < p_f and p_n + p_f = p_total (got p_n = {p_n}, p_f = {p_f}, p_total = {p_total})")]
    PowerAllocation { p_n: f64, p_f: f64, p_total: f64 },
    #[error("invalid geometry: need 0 < d1 < d2 (got d1 = {d1}, d2 = {d2})")]
    InvalidGeometry { d1: f64, d2: f64 },
    #[error("time-switching fraction alpha = {0} leaves no information phase")]
    NoInformationPhase(f64),
}

impl ModelError {
    /// Name of the configuration key responsible for the error.
    pub fn field(&self) -> &'static str {
        match self {
            ModelError::OutOfRange { field, .. } => field,
            ModelError::PowerAllocation { .. } => "p_n",
            ModelError::InvalidGeometry { .. } => "d1",
            ModelError::NoInformationPhase(_) => "alpha",
        }
    }
}

/// Scalar protocol and channel constants.
///
/// Fields are public so sweeps can vary them; call [`SystemParams::validate`]
/// after editing. Every other function in the crate assumes validated
/// parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    /// Linear transmit SNR.
    pub rho: f64,
    /// Time-switching fraction of the block.
    pub alpha: f64,
    /// Power-splitting fraction routed to the harvester.
    pub delta: f64,
    /// Energy-conversion efficiency.
    pub eta: f64,
    /// NOMA power coefficient of the CCU symbol `x2`.
    pub p_n: f64,
    /// NOMA power coefficient of the CEU symbol `x3`.
    pub p_f: f64,
    pub p_total: f64,
    /// Normalized BS→CCU distance.
    pub d1: f64,
    /// Normalized BS→CEU distance.
    pub d2: f64,
    /// Path-loss exponent.
    pub v: f64,
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
    pub sigma_sq: f64,
    pub t_total: f64,
}

pub const DEFAULT_SNR_DB: f64 = 15.0;

/// Converts decibels to a linear power ratio.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

impl Default for SystemParams {
    fn default() -> Self {
        Self {
            rho: db_to_linear(DEFAULT_SNR_DB),
            alpha: 0.3,
            delta: 0.3,
            eta: 0.7,
            p_n: 0.1,
            p_f: 0.9,
            p_total: 1.0,
            d1: 0.5,
            d2: 1.0,
            v: 2.0,
            r1: 1.0,
            r2: 1.0,
            r3: 1.0,
            sigma_sq: 1.0,
            t_total: 1.0,
        }
    }
}

fn open_unit(field: &'static str, value: f64) -> Result<(), ModelError> {
    if value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(ModelError::OutOfRange {
            field,
            value,
            range: "(0, 1)",
        })
    }
}

fn positive(field: &'static str, value: f64) -> Result<(), ModelError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(ModelError::OutOfRange {
            field,
            value,
            range: "(0, inf)",
        })
    }
}

impl SystemParams {
    pub fn with_snr_db(mut self, snr_db: f64) -> Self {
        self.rho = db_to_linear(snr_db);
        self
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.rho >= 0.0 && self.rho.is_finite()) {
            return Err(ModelError::OutOfRange {
                field: "rho",
                value: self.rho,
                range: "[0, inf)",
            });
        }
        open_unit("alpha", self.alpha)?;
        open_unit("delta", self.delta)?;
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(ModelError::OutOfRange {
                field: "eta",
                value: self.eta,
                range: "(0, 1]",
            });
        }
        positive("p_total", self.p_total)?;
        let sum_tol = 1e-9 * self.p_total.max(1.0);
        if !(self.p_n > 0.0
            && self.p_n < self.p_f
            && (self.p_n + self.p_f - self.p_total).abs() <= sum_tol)
        {
            return Err(ModelError::PowerAllocation {
                p_n: self.p_n,
                p_f: self.p_f,
                p_total: self.p_total,
            });
        }
        if !(self.d1 > 0.0 && self.d1 < self.d2 && self.d2.is_finite()) {
            return Err(ModelError::InvalidGeometry {
                d1: self.d1,
                d2: self.d2,
            });
        }
        if !(self.v >= 0.0 && self.v.is_finite()) {
            return Err(ModelError::OutOfRange {
                field: "v",
                value: self.v,
                range: "[0, inf)",
            });
        }
        positive("r1", self.r1)?;
        positive("r2", self.r2)?;
        positive("r3", self.r3)?;
        positive("sigma_sq", self.sigma_sq)?;
        positive("t_total", self.t_total)?;
        Ok(())
    }

    /// Transmit SNR referred to the receiver noise variance.
    ///
    /// With the default `sigma_sq = 1` this is `rho` itself.
    pub fn snr(&self) -> f64 {
        self.rho / self.sigma_sq
    }

    /// Harvest gain `2α/(1−α) + δ` shared by the relay power and the
    /// closed forms built on it.
    pub fn harvest_factor(&self) -> Result<f64, ModelError> {
        if self.alpha >= 1.0 {
            return Err(ModelError::NoInformationPhase(self.alpha));
        }
        Ok(2.0 * self.alpha / (1.0 - self.alpha) + self.delta)
    }

    /// The CEU interference-limited SINR ceiling `p_f / p_n`.
    pub fn sic_ceiling(&self) -> f64 {
        self.p_f / self.p_n
    }
}

/// Mean squared channel gains of the three links.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelVariances {
    pub lambda_ccu: f64,
    pub lambda_ceu: f64,
    pub lambda_relay: f64,
}

impl ChannelVariances {
    pub fn new(lambda_ccu: f64, lambda_ceu: f64, lambda_relay: f64) -> Result<Self, ModelError> {
        positive("lambda_ccu", lambda_ccu)?;
        positive("lambda_ceu", lambda_ceu)?;
        positive("lambda_relay", lambda_relay)?;
        Ok(Self {
            lambda_ccu,
            lambda_ceu,
            lambda_relay,
        })
    }

    fn of(&self, channel: ChannelId) -> f64 {
        match channel {
            ChannelId::Ccu => self.lambda_ccu,
            ChannelId::Ceu => self.lambda_ceu,
            ChannelId::Relay => self.lambda_relay,
        }
    }
}

/// Collinear path-loss map `λ = d^(−v)`, with the CCU→CEU hop spanning
/// `d2 − d1`.
pub fn variances_from_distances(params: &SystemParams) -> Result<ChannelVariances, ModelError> {
    if !(params.d1 > 0.0 && params.d2 > params.d1) {
        return Err(ModelError::InvalidGeometry {
            d1: params.d1,
            d2: params.d2,
        });
    }
    ChannelVariances::new(
        params.d1.powf(-params.v),
        params.d2.powf(-params.v),
        (params.d2 - params.d1).powf(-params.v),
    )
}

/// Squared channel gains `|h|²` for one fading block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelRealization {
    pub g_ccu: f64,
    pub g_ceu: f64,
    pub g_relay: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum ChannelId {
    Ccu = 0,
    Ceu = 1,
    Relay = 2,
}

/// Words of ChaCha keystream reserved per channel inside one trial's stream.
const WORDS_PER_CHANNEL: u128 = 2;

fn unit_uniform(bits: u64) -> f64 {
    // top 53 bits, U in [0, 1)
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Draws one block of Rayleigh fading.
///
/// The stream is ChaCha8 keyed by `seed`, with `trial_index` selecting the
/// stream and the channel id selecting the word offset, so any trial can be
/// regenerated in isolation. Each squared gain is `−λ·ln(1−U)`.
pub fn sample_realization(
    vars: &ChannelVariances,
    seed: u64,
    trial_index: u64,
) -> ChannelRealization {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial_index);
    let mut draw = |channel: ChannelId| {
        rng.set_word_pos(channel as u128 * WORDS_PER_CHANNEL);
        let u = unit_uniform(rng.next_u64());
        -vars.of(channel) * (-u).ln_1p()
    };
    ChannelRealization {
        g_ccu: draw(ChannelId::Ccu),
        g_ceu: draw(ChannelId::Ceu),
        g_relay: draw(ChannelId::Relay),
    }
}
