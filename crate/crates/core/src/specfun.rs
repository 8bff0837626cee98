//! Exponential integral `Ei(x)` and the fused `−Ei(−1/u)·e^(1/u)` kernel that
//! every ergodic-capacity closed form is built from.

use thiserror::Error;

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Largest `|x|` accepted by [`exp_int_ei`]; `e^x` overflows shortly after.
pub const EI_ARG_LIMIT: f64 = 700.0;

const SERIES_LIMIT: f64 = 40.0;
const MAX_ITER: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum SpecFunError {
    #[error("Ei has a logarithmic singularity at x = 0")]
    Singular,
    #[error("Ei argument {0} outside |x| <= 700")]
    OutOfRange(f64),
    #[error("argument must be strictly positive, got {0}")]
    NonPositive(f64),
}

/// `Σ_{k≥1} x^k / (k·k!)`, the non-logarithmic part of the Ei series.
fn ei_series_tail(x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 0.0;
    for k in 1..MAX_ITER {
        let kf = k as f64;
        term *= x / kf;
        let contrib = term / kf;
        sum += contrib;
        if contrib.abs() <= f64::EPSILON * 0.5 * sum.abs() {
            break;
        }
    }
    sum
}

/// `e^u·E₁(u)` for `u ≥ 1` by the continued fraction, evaluated with the
/// modified Lentz algorithm.
fn e1_scaled_cf(u: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = u + 1.0;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -((i * i) as f64);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() <= f64::EPSILON {
            break;
        }
    }
    h
}

/// `e^(−x)·Ei(x)` for large positive `x` from the asymptotic series, truncated
/// at its smallest term.
fn ei_scaled_asymptotic(x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..MAX_ITER {
        let next = term * k as f64 / x;
        if next >= term || next <= f64::EPSILON * 0.5 * sum {
            break;
        }
        term = next;
        sum += term;
    }
    sum / x
}

/// Exponential integral `Ei(x) = −∫_{−x}^∞ e^(−t)/t dt` (principal value).
///
/// Power series for `−1 ≤ x ≤ 40`, continued fraction for `E₁(−x)` when
/// `x < −1`, and the asymptotic expansion above 40.
pub fn exp_int_ei(x: f64) -> Result<f64, SpecFunError> {
    if x == 0.0 {
        return Err(SpecFunError::Singular);
    }
    if !(x.abs() <= EI_ARG_LIMIT) {
        return Err(SpecFunError::OutOfRange(x));
    }
    let value = if x < -1.0 {
        -e1_scaled_cf(-x) * x.exp()
    } else if x <= SERIES_LIMIT {
        EULER_GAMMA + x.abs().ln() + ei_series_tail(x)
    } else {
        ei_scaled_asymptotic(x) * x.exp()
    };
    Ok(value)
}

/// `−Ei(−1/u)·e^(1/u) = e^(1/u)·E₁(1/u)`, which equals `E[ln(1+X)]` for `X`
/// exponential with mean `u`.
///
/// Never forms `e^(1/u)` on its own, so it stays finite for arbitrarily small
/// `u`.
pub fn neg_ei_exp(u: f64) -> Result<f64, SpecFunError> {
    if !(u > 0.0) {
        return Err(SpecFunError::NonPositive(u));
    }
    let w = u.recip();
    let value = if w > 1.0 {
        e1_scaled_cf(w)
    } else {
        w.exp() * (-EULER_GAMMA - w.ln() - ei_series_tail(-w))
    };
    Ok(value)
}
