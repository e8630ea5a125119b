//! Dawson's integral `D(x) = exp(-x^2) * int_0^x exp(y^2) dy`.
//!
//! Three regimes: the Maclaurin series below |x| = 1, Rybicki's sampling
//! sum up to |x| = 50, and the asymptotic series beyond. All branches are
//! evaluated on |x| and the sign restored afterwards, so `D(-x) == -D(x)`
//! holds bit for bit.

use crate::error::{domain, Result};
use crate::quadrature::{integrate, QuadOptions};

const FRAC_1_SQRT_PI: f64 = 0.564_189_583_547_756_286_948_079_451_560_772_6;

/// Rybicki sampling step. The discretization error is ~exp(-(pi / 2h)^2).
const RYBICKI_H: f64 = 0.2;
const RYBICKI_TERMS: usize = 20;
const SERIES_LIMIT: f64 = 1.0;
const ASYMPTOTIC_LIMIT: f64 = 50.0;

/// `exp(-((2i - 1) h)^2)` for i = 1..=RYBICKI_TERMS.
fn rybicki_weights() -> &'static [f64; RYBICKI_TERMS] {
    use std::sync::OnceLock;
    static WEIGHTS: OnceLock<[f64; RYBICKI_TERMS]> = OnceLock::new();
    WEIGHTS.get_or_init(|| {
        let mut c = [0.0; RYBICKI_TERMS];
        for (i, ci) in c.iter_mut().enumerate() {
            let t = (2 * i + 1) as f64 * RYBICKI_H;
            *ci = (-t * t).exp();
        }
        c
    })
}

static CORRUPTED: std::sync::atomic::AtomicBool = std::sync::atomic::AtomicBool::new(false);

/// Test hook: perturb the mid-range coefficients so that accuracy checks
/// can be shown to fail.
#[doc(hidden)]
pub fn set_coefficient_corruption(on: bool) {
    CORRUPTED.store(on, std::sync::atomic::Ordering::Relaxed);
}

/// A Dawson value together with its derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DawsonEval {
    pub x: f64,
    pub value: f64,
    pub derivative: f64,
}

fn maclaurin(x: f64) -> f64 {
    // D(x) = sum_n (-1)^n 2^n x^(2n+1) / (2n+1)!!
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut n = 0.0;
    loop {
        n += 1.0;
        term *= -2.0 * x2 / (2.0 * n + 1.0);
        sum += term;
        if term.abs() <= 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

fn rybicki(x: f64) -> f64 {
    let c = rybicki_weights();
    let n0 = 2.0 * (0.5 * x / RYBICKI_H).round();
    let xp = x - n0 * RYBICKI_H;
    let mut e1 = (2.0 * xp * RYBICKI_H).exp();
    let e2 = e1 * e1;
    let mut d1 = n0 + 1.0;
    let mut d2 = d1 - 2.0;
    let mut sum = 0.0;
    for &ci in c {
        sum += ci * (e1 / d1 + 1.0 / (d2 * e1));
        d1 += 2.0;
        d2 -= 2.0;
        e1 *= e2;
    }
    let value = FRAC_1_SQRT_PI * (-xp * xp).exp() * sum;
    if CORRUPTED.load(std::sync::atomic::Ordering::Relaxed) {
        value * (1.0 + 1e-6)
    } else {
        value
    }
}

fn asymptotic_sum(x: f64, n_terms: usize) -> f64 {
    // 1/(2x) * sum_k (2k-1)!! / (2x^2)^k
    let inv = 1.0 / (2.0 * x * x);
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..n_terms {
        term *= (2 * k - 1) as f64 * inv;
        sum += term;
    }
    sum / (2.0 * x)
}

/// Dawson's integral for finite `x`; NaN propagates.
pub fn dawson_unchecked(x: f64) -> f64 {
    let ax = x.abs();
    let value = if ax < SERIES_LIMIT {
        maclaurin(ax)
    } else if ax <= ASYMPTOTIC_LIMIT {
        rybicki(ax)
    } else {
        asymptotic_sum(ax, 8)
    };
    if x < 0.0 {
        -value
    } else {
        value
    }
}

/// `D'(x) = 1 - 2 x D(x)`. Beyond the asymptotic limit the leading 1
/// cancels, so the series tail is summed directly.
pub fn dawson_derivative_unchecked(x: f64) -> f64 {
    let ax = x.abs();
    if ax <= ASYMPTOTIC_LIMIT {
        return 1.0 - 2.0 * x * dawson_unchecked(x);
    }
    let inv = 1.0 / (2.0 * ax * ax);
    let mut term = 1.0;
    let mut sum = 0.0;
    for k in 1..8 {
        term *= (2 * k - 1) as f64 * inv;
        sum += term;
    }
    -sum
}

/// Dawson's integral. Non-finite input is a domain error.
pub fn dawson(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(domain(format!("dawson: non-finite argument {x}")));
    }
    Ok(dawson_unchecked(x))
}

/// `D'(x) = 1 - 2 x D(x)`.
pub fn dawson_derivative(x: f64) -> Result<f64> {
    dawson(x)?;
    Ok(dawson_derivative_unchecked(x))
}

pub fn dawson_eval(x: f64) -> Result<DawsonEval> {
    let value = dawson(x)?;
    Ok(DawsonEval {
        x,
        value,
        derivative: dawson_derivative_unchecked(x),
    })
}

/// Truncated large-argument expansion `1/(2x) + 1/(4x^3) + 3/(8x^5)` with
/// one to three terms. Requires |x| >= 3.
pub fn dawson_asymptotic(x: f64, n_terms: usize) -> Result<f64> {
    if !x.is_finite() || x.abs() < 3.0 {
        return Err(domain(format!(
            "dawson_asymptotic: |x| >= 3 required (x = {x})"
        )));
    }
    if !(1..=3).contains(&n_terms) {
        return Err(domain(format!(
            "dawson_asymptotic: n_terms must be 1..=3 (got {n_terms})"
        )));
    }
    Ok(asymptotic_sum(x, n_terms))
}

/// Reference value by adaptive quadrature of `int_0^x exp(-(x-y)(x+y)) dy`.
/// The prefactor is folded into the exponent so nothing overflows. This
/// shares no code with [`dawson`] and serves as its oracle.
pub fn dawson_quadrature(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let ax = x.abs();
    // substitute t = x - y, integrand exp(-t (2x - t)) decays on a 1/(2x) scale
    let scale = 1.0 / (2.0 * ax).max(1.0);
    let breaks: Vec<f64> = [1.0, 4.0, 16.0, 64.0].iter().map(|k| k * scale).collect();
    let r = integrate(
        |t: f64| (-t * (2.0 * ax - t)).exp(),
        0.0,
        ax,
        &breaks,
        QuadOptions {
            abs_tol: 1e-17,
            rel_tol: 1e-15,
            max_intervals: 4000,
        },
    );
    x.signum() * r.value
}
