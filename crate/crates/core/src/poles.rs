//! Real poles of the disorder-averaged cavity Green's function, their
//! closed-form approximations, and complex poles with lifetimes.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::model::ModelParams;
use crate::quadrature::{integrate, QuadOptions};
use crate::self_energy::{analytic_sample, gaussian_linewidth};

/// Ratio of local width to polariton gap below which a root counts as a
/// long-lived polariton.
pub const POLARITONIC_WIDTH_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoleKind {
    Polaritonic,
    Virtual,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pole {
    /// Root of `w - eps_c - Sigma_R(w)`, eV.
    pub energy: f64,
    pub kind: PoleKind,
    /// Cavity weight from the single-pole form, `[1 + g^2/(w - eps_a)^2]^-1`.
    pub residue: f64,
    /// `1 / (1 - Sigma_R'(w))`; negative for roots where the real part
    /// crosses from above.
    pub local_residue: f64,
    /// `2 |Sigma_I(w) * local_residue|`, eV.
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoleReport {
    pub poles: Vec<Pole>,
    /// `g^2 / sigma^2`.
    pub existence_ratio: f64,
    /// Distance between the outermost roots when three roots exist.
    pub gap: Option<f64>,
    /// True when the real axis carries the three-root structure.
    pub pair_found: bool,
}

impl PoleReport {
    pub fn polaritons(&self) -> impl Iterator<Item = &Pole> {
        self.poles.iter().filter(|p| p.kind == PoleKind::Polaritonic)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExistenceCheck {
    pub exists_pair: bool,
    pub ratio: f64,
}

/// On-resonance criterion `g^2 / sigma^2 > 1`.
pub fn existence_check(params: &ModelParams) -> ExistenceCheck {
    if params.sigma == 0.0 {
        return ExistenceCheck {
            exists_pair: true,
            ratio: f64::INFINITY,
        };
    }
    let ratio = params.g_squared() / (params.sigma * params.sigma);
    ExistenceCheck {
        exists_pair: ratio > 1.0,
        ratio,
    }
}

/// `w - eps_c - Sigma_R(w)` for the Gaussian ensemble.
pub fn pole_condition(omega: f64, params: &ModelParams) -> f64 {
    omega - params.eps_c - analytic_sample(omega, params, 0.0).sigma.re
}

fn bisect(params: &ModelParams, mut a: f64, mut b: f64, mut fa: f64) -> f64 {
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = pole_condition(m, params);
        if fm == 0.0 {
            return m;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    // endpoint with the smaller residual
    if pole_condition(a, params).abs() <= pole_condition(b, params).abs() {
        a
    } else {
        b
    }
}

/// Scan grid: coarse over the whole search window, fine across the band
/// where roots can crowd together near the existence threshold.
fn scan_points(params: &ModelParams, lo: f64, hi: f64) -> Vec<f64> {
    const COARSE: usize = 20_000;
    const FINE_PER_SIGMA: f64 = 200.0;
    const FINE_HALF_WIDTH: f64 = 12.0;
    let mut pts: Vec<f64> = (0..=COARSE)
        .map(|i| lo + (hi - lo) * i as f64 / COARSE as f64)
        .collect();
    let s = params.sigma;
    let n_fine = (2.0 * FINE_HALF_WIDTH * FINE_PER_SIGMA) as usize;
    for i in 0..=n_fine {
        let w = params.eps_a - FINE_HALF_WIDTH * s + i as f64 * s / FINE_PER_SIGMA;
        if w > lo && w < hi {
            pts.push(w);
        }
    }
    pts.push(params.eps_a);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// All real roots of the pole condition, classified.
pub fn find_poles(params: &ModelParams) -> Result<PoleReport> {
    params.validate()?;
    if params.sigma <= 0.0 {
        return Err(domain("find_poles requires sigma > 0"));
    }
    let g = params.g();
    let s = params.sigma;
    let lo = params.eps_a.min(params.eps_c) - 3.0 * g - 5.0 * s;
    let hi = params.eps_a.max(params.eps_c) + 3.0 * g + 5.0 * s;

    let pts = scan_points(params, lo, hi);
    let vals: Vec<f64> = pts.iter().map(|&w| pole_condition(w, params)).collect();
    let mut roots = Vec::new();
    for i in 0..pts.len() {
        if vals[i] == 0.0 {
            roots.push(pts[i]);
            continue;
        }
        if i + 1 < pts.len() && vals[i + 1] != 0.0 && (vals[i] < 0.0) != (vals[i + 1] < 0.0) {
            roots.push(bisect(params, pts[i], pts[i + 1], vals[i]));
        }
    }

    let pair_found = roots.len() >= 3;
    let gap = if pair_found {
        Some(roots[roots.len() - 1] - roots[0])
    } else {
        None
    };
    let reference_gap = gap.unwrap_or(2.0 * g);
    let g2 = params.g_squared();
    let poles = roots
        .iter()
        .map(|&w| {
            let sample = analytic_sample(w, params, 0.0);
            let local_residue = 1.0 / (1.0 - sample.d_sigma.re);
            let width = 2.0 * (sample.sigma.im * local_residue).abs();
            let detuning = w - params.eps_a;
            let residue = if detuning == 0.0 {
                0.0
            } else {
                1.0 / (1.0 + g2 / (detuning * detuning))
            };
            let kind = if width < POLARITONIC_WIDTH_FRACTION * reference_gap {
                PoleKind::Polaritonic
            } else {
                PoleKind::Virtual
            };
            Pole {
                energy: w,
                kind,
                residue,
                local_residue,
                width,
            }
        })
        .collect();
    Ok(PoleReport {
        poles,
        existence_ratio: existence_check(params).ratio,
        gap,
        pair_found,
    })
}

/// Zero-disorder polariton energies `(eps_plus, eps_minus)`.
pub fn polariton_energies_closed(params: &ModelParams) -> (f64, f64) {
    let mean = 0.5 * (params.eps_a + params.eps_c);
    let half = 0.5 * (params.eps_a - params.eps_c);
    let r = (params.g_squared() + half * half).sqrt();
    (mean + r, mean - r)
}

/// Cavity weights `[1 + g^2/(eps_pm - eps_a)^2]^-1` at the closed-form poles.
pub fn closed_residues(params: &ModelParams) -> (f64, f64) {
    let (p, m) = polariton_energies_closed(params);
    let g2 = params.g_squared();
    let weight = |e: f64| {
        let d = e - params.eps_a;
        if d == 0.0 {
            0.0
        } else {
            1.0 / (1.0 + g2 / (d * d))
        }
    };
    (weight(p), weight(m))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SecondOrderPoles {
    pub eps_plus: f64,
    pub eps_minus: f64,
    pub gap: f64,
    /// Set when sigma > g/3 and the expansion is unreliable.
    pub warning: Option<String>,
}

fn disorder_warning(params: &ModelParams) -> Option<String> {
    let g = params.g();
    (params.sigma > g / 3.0).then(|| {
        format!(
            "sigma = {} eV exceeds g/3 = {} eV; second-order energies unreliable",
            params.sigma,
            g / 3.0
        )
    })
}

/// Polariton energies including the `sigma^2` correction in the form
/// `s sigma^2 (d (d + s R) + g^2) / (g^2 R)` with `d = (eps_a - eps_c)/2`,
/// `R = sqrt(g^2 + d^2)`. On resonance this is `eps_c +- (g + sigma^2/g)`.
pub fn polariton_energies_second_order(params: &ModelParams) -> SecondOrderPoles {
    let g2 = params.g_squared();
    let d = 0.5 * (params.eps_a - params.eps_c);
    let r = (g2 + d * d).sqrt();
    let mean = 0.5 * (params.eps_a + params.eps_c);
    let s2 = params.sigma * params.sigma;
    let energy = |s: f64| {
        let correction = if s2 == 0.0 {
            0.0
        } else {
            s * s2 * (d * (d + s * r) + g2) / (g2 * r)
        };
        mean + s * r + correction
    };
    let (p, m) = (energy(1.0), energy(-1.0));
    SecondOrderPoles {
        eps_plus: p,
        eps_minus: m,
        gap: p - m,
        warning: disorder_warning(params),
    }
}

/// Polariton energies from first-order perturbation of the closed-form
/// roots by the `sigma^2 / (w - eps_a)^2` term of the large-detuning
/// self-energy: `s sigma^2 (d (d + s R) + g^2/2) / (g^2 R)`. On resonance
/// this is `eps_c +- (g + sigma^2/(2g))`.
pub fn polariton_energies_perturbative(params: &ModelParams) -> SecondOrderPoles {
    let g2 = params.g_squared();
    let d = 0.5 * (params.eps_a - params.eps_c);
    let r = (g2 + d * d).sqrt();
    let mean = 0.5 * (params.eps_a + params.eps_c);
    let s2 = params.sigma * params.sigma;
    let energy = |s: f64| {
        let correction = if s2 == 0.0 {
            0.0
        } else {
            s * s2 * (d * (d + s * r) + 0.5 * g2) / (g2 * r)
        };
        mean + s * r + correction
    };
    let (p, m) = (energy(1.0), energy(-1.0));
    SecondOrderPoles {
        eps_plus: p,
        eps_minus: m,
        gap: p - m,
        warning: disorder_warning(params),
    }
}

/// Disorder width estimate `g^2 pi / (sqrt(2 pi) sigma) exp(-g^2 / 2 sigma^2)`.
pub fn width_estimate(params: &ModelParams) -> Result<f64> {
    if params.sigma <= 0.0 {
        return Err(domain("width_estimate requires sigma > 0"));
    }
    Ok(gaussian_linewidth(params.g_squared(), params.sigma, params.g()))
}

/// Complex poles `(eps_plus, eps_minus)` of the cavity Green's function with
/// `eps_c -> eps_c - i gamma_c` and `eps_a -> eps_a - i gamma_a`.
pub fn complex_poles_with_lifetimes(params: &ModelParams) -> Result<(Complex64, Complex64)> {
    if params.gamma_a < 0.0 || params.gamma_c < 0.0 {
        return Err(domain("lifetime widths must be non-negative"));
    }
    let base = Complex64::new(params.eps_a + params.eps_c, -(params.gamma_a + params.gamma_c));
    let diff = Complex64::new(params.eps_c - params.eps_a, params.gamma_a - params.gamma_c);
    let root = (diff * diff + 4.0 * params.g_squared()).sqrt();
    // principal root has Re >= 0, so the + branch is the upper polariton
    Ok((0.5 * (base + root), 0.5 * (base - root)))
}

/// Split of the frequency-weighted bright-state spectral weight (the
/// integrated absorption) between the polariton poles and the band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbsorptionPartition {
    /// `sum_pm w_pm * Z_pm (w_pm - eps_c)^2 / g^2`.
    pub polaritonic: f64,
    /// First moment of the bright-state density, `eps_a`.
    pub total: f64,
    /// Band contribution by direct quadrature, excluding the poles.
    pub grey_quadrature: f64,
    pub polaritonic_fraction: f64,
    pub grey_fraction: f64,
}

/// Integrated absorption of the Gaussian ensemble (no lifetimes) split into
/// polaritonic and grey-state parts.
pub fn absorption_partition(params: &ModelParams) -> Result<AbsorptionPartition> {
    if params.gamma_a != 0.0 || params.gamma_c != 0.0 {
        return Err(domain("absorption partition requires gamma_a = gamma_c = 0"));
    }
    let report = find_poles(params)?;
    let g2 = params.g_squared();
    let polaritons: Vec<Pole> = report.polaritons().copied().collect();
    let polaritonic: f64 = polaritons
        .iter()
        .map(|p| p.energy * p.local_residue * (p.energy - params.eps_c).powi(2) / g2)
        .sum();
    let total = params.eps_a;

    // -Im G_mol,mol / pi on the real axis, times w
    let density = |w: f64| {
        let s = analytic_sample(w, params, 0.0);
        let den = Complex64::new(w - params.eps_c, params.gamma_c) - s.sigma;
        let gcc = den.inv();
        let gmm = (Complex64::new(1.0, 0.0) + s.sigma * gcc) * s.bright;
        -w * gmm.im / std::f64::consts::PI
    };
    let g = params.g();
    let excl = 1e-4 * g;
    let far = 40.0 * params.sigma.max(g);
    let mut edges = vec![params.eps_a - far];
    for p in &polaritons {
        edges.push(p.energy - excl);
        edges.push(p.energy + excl);
    }
    edges.push(params.eps_a + far);
    edges.sort_by(f64::total_cmp);
    let opts = QuadOptions {
        abs_tol: 1e-13,
        rel_tol: 1e-10,
        max_intervals: 4000,
    };
    let breaks: Vec<f64> = (-8..=8)
        .map(|k| params.eps_a + k as f64 * params.sigma)
        .collect();
    let mut grey_quadrature = 0.0;
    for (i, w) in edges.windows(2).enumerate() {
        if i % 2 == 1 {
            continue; // excluded neighbourhood of a pole
        }
        grey_quadrature += integrate(density, w[0], w[1], &breaks, opts).value;
    }
    Ok(AbsorptionPartition {
        polaritonic,
        total,
        grey_quadrature,
        polaritonic_fraction: polaritonic / total,
        grey_fraction: 1.0 - polaritonic / total,
    })
}
