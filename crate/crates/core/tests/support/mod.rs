//! Independent numerical oracles shared by the integration tests.
//!
//! Nothing here calls into the crate's special-function code: integrals are
//! evaluated by adaptive Gauss–Kronrod quadrature and random draws come
//! straight from ChaCha8.

#![allow(dead_code, clippy::excessive_precision)]

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const XGK: [f64; 8] = [
    0.991455371120812639,
    0.949107912342758524,
    0.864864423359769072,
    0.741531185599394439,
    0.586087235467691130,
    0.405845151377397166,
    0.207784955007898467,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224,
    0.063092092629978553,
    0.104790010322250183,
    0.140653259715525918,
    0.169004726639267902,
    0.190350578064785409,
    0.204432940075298892,
    0.209482141084727828,
];
/// Gauss weights for the Kronrod nodes at odd indices (1, 3, 5, 7).
const WG: [f64; 4] = [
    0.129484966168869693,
    0.279705391489276667,
    0.381830050505118944,
    0.417959183673469387,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

fn adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let (value, err) = gk15(f, a, b);
    if err <= tol.max(1e-15 * value.abs()) || depth == 0 {
        return value;
    }
    let mid = 0.5 * (a + b);
    adaptive(f, a, mid, 0.5 * tol, depth - 1) + adaptive(f, mid, b, 0.5 * tol, depth - 1)
}

/// Adaptive quadrature over consecutive breakpoints.
pub fn integrate<F: Fn(f64) -> f64>(f: F, breakpoints: &[f64], tol: f64) -> f64 {
    breakpoints
        .windows(2)
        .map(|w| adaptive(&f, w[0], w[1], tol, 60))
        .sum()
}

/// `E[ln(1+X)]` for `X ~ Exp(mean u)`, as `∫₀^∞ ln(1+u·t)·e^(−t) dt`.
pub fn expected_ln1p_quadrature(u: f64) -> f64 {
    let upper = 60.0;
    let mut points = vec![0.0];
    let mut p = 1e-3 / u;
    while p < upper {
        if p > 1e-300 {
            points.push(p);
        }
        p *= 4.0;
    }
    points.push(upper);
    // rough magnitude, for an absolute tolerance that is relative in effect
    let scale = if u < 1.0 { u } else { u.ln_1p() };
    integrate(|t| (u * t).ln_1p() * (-t).exp(), &points, 1e-15 * scale)
}

/// `E₁(u) = e^(−u)·∫₀^∞ e^(−u·s)/(1+s) ds` for `u > 0`.
pub fn e1_quadrature(u: f64) -> f64 {
    let upper = 45.0 / u;
    let mut points = vec![0.0];
    let mut p = 0.01;
    while p < upper {
        points.push(p);
        p *= 2.0;
    }
    points.push(upper);
    let scaled = integrate(|s| (-u * s).exp() / (1.0 + s), &points, 1e-17);
    scaled * (-u).exp()
}

/// `Ei(x)` by quadrature: through `E₁` for `x ≤ −1`, otherwise as
/// `γ + ln|x| + ∫₀^x (e^t − 1)/t dt`.
pub fn ei_quadrature(x: f64) -> f64 {
    if x <= -1.0 {
        return -e1_quadrature(-x);
    }
    let n = (x.abs().ceil() as usize).max(1) * 4;
    let points: Vec<f64> = (0..=n).map(|i| x * i as f64 / n as f64).collect();
    let (points, sign) = if x < 0.0 {
        (points.into_iter().rev().collect::<Vec<_>>(), -1.0)
    } else {
        (points, 1.0)
    };
    let integral = integrate(
        |t| if t == 0.0 { 1.0 } else { t.exp_m1() / t },
        &points,
        1e-16,
    );
    EULER_GAMMA + x.abs().ln() + sign * integral
}

/// Streams exponential variates with the given mean, independent of the
/// crate's sampler.
pub struct ExpStream {
    rng: ChaCha8Rng,
}

impl ExpStream {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn next(&mut self, mean: f64) -> f64 {
        let u = (self.rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
        -mean * (1.0 - u).ln()
    }
}

/// Mean and standard error of `f(X)` over `n` exponential draws.
pub fn mc_mean<F: Fn(f64) -> f64>(n: usize, mean: f64, seed: u64, f: F) -> (f64, f64) {
    let mut stream = ExpStream::new(seed);
    let (mut s, mut s2) = (0.0, 0.0);
    for _ in 0..n {
        let y = f(stream.next(mean));
        s += y;
        s2 += y * y;
    }
    let m = s / n as f64;
    let var = (s2 / n as f64 - m * m) * n as f64 / (n - 1) as f64;
    (m, (var / n as f64).sqrt())
}
