//! Simulation and closed-form analysis of a two-user cooperative NOMA
//! downlink in which the cell-center user (CCU) harvests energy with a hybrid
//! time-switching / power-splitting receiver and relays the cell-edge user's
//! (CEU) strong symbol.
//!
//! Two protocols are modeled:
//!
//! - [`Protocol::EhsMrc`]: the otherwise idle BS→CEU link carries an extra
//!   symbol `x1` during the time-switching phase, and the CEU combines the
//!   direct and relayed copies of `x3` with maximal ratio combining.
//! - [`Protocol::HsSc`]: the baseline, with the BS→CEU link idle during the
//!   time-switching phase and selection combining at the CEU.
//!
//! Ergodic sum capacity, per-symbol outage probabilities and energy
//! efficiency are estimated by Monte-Carlo over Rayleigh block fading
//! ([`montecarlo`]) and evaluated from closed forms ([`analytic`]).

pub mod analytic;
pub mod cli;
pub mod model;
pub mod montecarlo;
pub mod protocols;
pub mod specfun;

pub use model::{ChannelRealization, ChannelVariances, ModelError, SystemParams};
pub use protocols::Protocol;
