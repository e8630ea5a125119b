//! Cavity self-energy `Sigma(w) = sum_i |V_i|^2 / (w - eps_i)`.
//!
//! Three sources: the direct sum over one realization, the large-N
//! Gaussian-ensemble form, and the orientation/position averaged sum. The
//! retarded branch is used throughout, so `Im Sigma <= 0`.
//!
//! Lifetimes enter as `eps_a -> eps_a - i gamma_a`, i.e. every molecular
//! resolvent is evaluated at `w + i (eta + gamma_a)`.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;

use crate::error::{domain, Result};
use crate::model::{DisorderRealization, ModelParams};
use crate::quadrature::{integrate, QuadOptions};
use crate::special::{dawson_derivative_unchecked, dawson_unchecked};

const SQRT_PI: f64 = 1.772_453_850_905_516_f64;
const SQRT_FRAC_PI_2: f64 = 1.253_314_137_315_500_3_f64;
/// Gaussian support used by the quadrature route, in units of sigma.
const SUPPORT: f64 = 12.0;

/// Self-energy at one frequency together with its frequency derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelfEnergyValue {
    pub omega: f64,
    /// Real part, eV.
    pub re: f64,
    /// Imaginary part, eV (non-positive).
    pub im: f64,
    /// dSigma/dw, dimensionless.
    pub d_omega: Complex64,
}

impl SelfEnergyValue {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }

    fn from_parts(omega: f64, sigma: Complex64, d_omega: Complex64) -> Self {
        SelfEnergyValue {
            omega,
            re: sigma.re,
            im: sigma.im,
            d_omega,
        }
    }
}

/// Everything the Green's functions need from a molecular source at one
/// complex frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolventSample {
    /// `Sigma(z)`.
    pub sigma: Complex64,
    /// `dSigma/dz`.
    pub d_sigma: Complex64,
    /// Bright-state resolvent `<mol|(z - eps_M)^-1|mol>`; equals `Sigma / g^2`
    /// whenever the coupling is nonzero.
    pub bright: Complex64,
    /// `sum_i 1/(z - eps_i)`: the uncoupled molecular trace.
    pub background: Complex64,
}

/// Normalized Gaussian resolvent `F(z) = int P(xi) / (z - xi) dxi` and its
/// derivative, for `z = delta + i gamma` with `gamma >= 0` and `P` a centred
/// Gaussian of width `sigma`.
///
/// `gamma = 0` uses the Dawson closed form, `sigma = 0` the bare pole, and
/// otherwise the integral is done by adaptive quadrature after subtracting
/// the value of the numerator at the near-singular point.
pub fn gaussian_resolvent(delta: f64, sigma: f64, gamma: f64) -> (Complex64, Complex64) {
    if sigma == 0.0 {
        let z = Complex64::new(delta, gamma);
        let inv = z.inv();
        return (inv, -inv * inv);
    }
    if gamma == 0.0 {
        return gaussian_resolvent_real_axis(delta, sigma);
    }
    let density = |xi: f64| (-0.5 * (xi / sigma).powi(2)).exp() / (SQRT_2 * SQRT_PI * sigma);
    let slope = |xi: f64| -xi / (sigma * sigma) * density(xi);
    let f = subtracted_cauchy(&density, delta, sigma, gamma);
    // integration by parts: int P/(z - xi)^2 = -int P'/(z - xi)
    let df = subtracted_cauchy(&slope, delta, sigma, gamma);
    (f, df)
}

fn gaussian_resolvent_real_axis(delta: f64, sigma: f64) -> (Complex64, Complex64) {
    let x = delta / (SQRT_2 * sigma);
    let d = dawson_unchecked(x);
    let gauss = (-x * x).exp();
    let f = Complex64::new(SQRT_2 / sigma * d, -SQRT_FRAC_PI_2 / sigma * gauss);
    let df = Complex64::new(
        dawson_derivative_unchecked(x) / (sigma * sigma),
        SQRT_PI * x * gauss / (sigma * sigma),
    );
    (f, df)
}

/// `int_{-L}^{L} h(xi) / (delta + i gamma - xi) dxi` for a smooth `h` that
/// is negligible beyond `L = SUPPORT * sigma`.
fn subtracted_cauchy<H: Fn(f64) -> f64>(h: &H, delta: f64, sigma: f64, gamma: f64) -> Complex64 {
    let half = SUPPORT * sigma;
    let z = Complex64::new(delta, gamma);
    let inside = delta.abs() < half;
    let h0 = if inside { h(delta) } else { 0.0 };
    let integrand = |xi: f64| {
        let num = h(xi) - h0;
        num / (z - xi)
    };
    let mut breaks = vec![-4.0 * sigma, 0.0, 4.0 * sigma];
    if inside {
        breaks.extend([delta - 100.0 * gamma, delta, delta + 100.0 * gamma]);
    }
    let scale = 1.0 / sigma.max(gamma);
    let r = integrate(
        integrand,
        -half,
        half,
        &breaks,
        QuadOptions {
            abs_tol: 1e-13 * scale,
            rel_tol: 1e-12,
            max_intervals: 4000,
        },
    );
    let log_term = if inside {
        h0 * ((z + half).ln() - (z - half).ln())
    } else {
        Complex64::new(0.0, 0.0)
    };
    r.value + log_term
}

/// Precomputed molecular energies and squared couplings of a realization.
#[derive(Debug, Clone)]
pub struct MolecularLevels {
    energies: Vec<f64>,
    weights: Vec<f64>,
    total_weight: f64,
    /// Imaginary shift applied to every molecular resolvent (gamma_a).
    gamma_a: f64,
}

impl MolecularLevels {
    pub fn new(realization: &DisorderRealization, params: &ModelParams) -> Result<Self> {
        realization.validate(params)?;
        let weights = realization.couplings_squared(params);
        Ok(Self::from_parts(realization.energies(params), weights, params.gamma_a))
    }

    /// Orientation/position averaged levels: every squared coupling replaced
    /// by its average `g^2 / (6 N)` (or `g^2 / N` for uniform realizations).
    pub fn averaged(realization: &DisorderRealization, params: &ModelParams) -> Result<Self> {
        realization.validate(params)?;
        let n = realization.len() as f64;
        let w = params.g_squared() / n * realization.model().mean_coupling_factor();
        Ok(Self::from_parts(
            realization.energies(params),
            vec![w; realization.len()],
            params.gamma_a,
        ))
    }

    pub fn from_parts(energies: Vec<f64>, weights: Vec<f64>, gamma_a: f64) -> Self {
        let total_weight = pairwise_sum(&weights);
        MolecularLevels {
            energies,
            weights,
            total_weight,
            gamma_a,
        }
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `sum_i |V_i|^2`, the squared collective coupling of this realization.
    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    /// All source quantities at `omega + i eta`.
    pub fn sample(&self, omega: f64, eta: f64) -> ResolventSample {
        let z = Complex64::new(omega, eta + self.gamma_a);
        let mut acc = Accumulator::default();
        for (&e, &w) in self.energies.iter().zip(&self.weights) {
            let inv = (z - e).inv();
            acc.push(inv, w);
        }
        let (s0, s1, s2) = acc.finish();
        let bright = if self.total_weight > 0.0 {
            s1 / self.total_weight
        } else {
            s0 / self.energies.len().max(1) as f64
        };
        ResolventSample {
            sigma: s1,
            d_sigma: -s2,
            bright,
            background: s0,
        }
    }
}

/// Blocked summation of the three resolvent moments. Blocks of fixed size
/// are summed in order and then combined pairwise, so the result does not
/// depend on anything but the input order.
#[derive(Default)]
struct Accumulator {
    block: [Complex64; 3],
    count: usize,
    partials: Vec<[Complex64; 3]>,
}

const BLOCK: usize = 128;

impl Accumulator {
    #[inline]
    fn push(&mut self, inv: Complex64, w: f64) {
        let wi = inv * w;
        self.block[0] += inv;
        self.block[1] += wi;
        self.block[2] += wi * inv;
        self.count += 1;
        if self.count == BLOCK {
            self.partials.push(self.block);
            self.block = Default::default();
            self.count = 0;
        }
    }

    fn finish(mut self) -> (Complex64, Complex64, Complex64) {
        if self.count > 0 || self.partials.is_empty() {
            self.partials.push(self.block);
        }
        let mut level = self.partials;
        while level.len() > 1 {
            level = level
                .chunks(2)
                .map(|c| {
                    if c.len() == 2 {
                        [c[0][0] + c[1][0], c[0][1] + c[1][1], c[0][2] + c[1][2]]
                    } else {
                        c[0]
                    }
                })
                .collect();
        }
        let [a, b, c] = level[0];
        (a, b, c)
    }
}

pub(crate) fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= BLOCK {
        values.iter().sum()
    } else {
        let mid = values.len() / 2;
        pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
    }
}

/// Large-N Gaussian-ensemble source at `omega + i broadening` (the molecular
/// width gamma_a is added on top).
pub fn analytic_sample(omega: f64, params: &ModelParams, broadening: f64) -> ResolventSample {
    let g2 = params.g_squared();
    let (f, df) = gaussian_resolvent(omega - params.eps_a, params.sigma, broadening + params.gamma_a);
    ResolventSample {
        sigma: f * g2,
        d_sigma: df * g2,
        bright: f,
        background: f * params.n_molecules as f64,
    }
}

fn check_eta(eta: f64) -> Result<()> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(domain(format!("eta > 0 required (eta = {eta})")));
    }
    Ok(())
}

/// Direct sum over one realization at `omega + i eta`.
pub fn sigma_empirical(
    omega: f64,
    realization: &DisorderRealization,
    params: &ModelParams,
    eta: f64,
) -> Result<SelfEnergyValue> {
    check_eta(eta)?;
    let levels = MolecularLevels::new(realization, params)?;
    let s = levels.sample(omega, eta);
    Ok(SelfEnergyValue::from_parts(omega, s.sigma, s.d_sigma))
}

/// Ensemble-averaged Gaussian self-energy on the real axis:
/// `Sigma_R = sqrt(2) g^2 / sigma * D((w - eps_a) / (sqrt(2) sigma))`,
/// `Sigma_I = -g^2 sqrt(pi/2) / sigma * exp(-(w - eps_a)^2 / (2 sigma^2))`.
///
/// With `gamma_a > 0` the molecular resolvents are shifted off the axis and
/// the Gaussian average is done by quadrature.
pub fn sigma_analytic(omega: f64, params: &ModelParams) -> Result<SelfEnergyValue> {
    sigma_analytic_broadened(omega, params, 0.0)
}

/// As [`sigma_analytic`], evaluated at `omega + i eta`. This is the exact
/// expectation of [`sigma_empirical`] at the same `eta`.
pub fn sigma_analytic_broadened(omega: f64, params: &ModelParams, eta: f64) -> Result<SelfEnergyValue> {
    if params.sigma <= 0.0 {
        return Err(domain(
            "sigma_analytic requires sigma > 0; use sigma_resonant_limit",
        ));
    }
    if !(eta >= 0.0 && eta.is_finite()) {
        return Err(domain(format!("eta >= 0 required (eta = {eta})")));
    }
    let s = analytic_sample(omega, params, eta);
    Ok(SelfEnergyValue::from_parts(omega, s.sigma, s.d_sigma))
}

/// Zero-disorder self-energy `g^2 / (w + i eta - eps_a)`.
pub fn sigma_resonant_limit(omega: f64, params: &ModelParams, eta: f64) -> Result<SelfEnergyValue> {
    check_eta(eta)?;
    let z = Complex64::new(omega - params.eps_a, eta + params.gamma_a);
    let inv = z.inv();
    let g2 = params.g_squared();
    Ok(SelfEnergyValue::from_parts(omega, inv * g2, -inv * inv * g2))
}

/// Orientation/position averaged self-energy `(g^2 / 6N) sum_i 1/(w - eps_i)`.
pub fn sigma_model2_averaged(
    omega: f64,
    realization: &DisorderRealization,
    params: &ModelParams,
    eta: f64,
) -> Result<SelfEnergyValue> {
    check_eta(eta)?;
    realization.validate(params)?;
    let n = realization.len();
    let levels = MolecularLevels::from_parts(
        realization.energies(params),
        vec![params.g_squared() / (6.0 * n as f64); n],
        params.gamma_a,
    );
    let s = levels.sample(omega, eta);
    Ok(SelfEnergyValue::from_parts(omega, s.sigma, s.d_sigma))
}

/// Imaginary part of the Gaussian self-energy magnitude at detuning `delta`,
/// `g^2 pi / (sqrt(2 pi) sigma) exp(-delta^2 / 2 sigma^2)`.
pub fn gaussian_linewidth(g2: f64, sigma: f64, delta: f64) -> f64 {
    g2 * PI / ((2.0 * PI).sqrt() * sigma) * (-0.5 * (delta / sigma).powi(2)).exp()
}
