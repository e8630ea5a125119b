//! Cavity and bright-state Green's functions.

use num_complex::Complex64;

use crate::error::{domain, Error, Result};
use crate::model::ModelParams;
use crate::self_energy::{ResolventSample, SelfEnergyValue};

/// Green's function values at one frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreensValue {
    pub omega: f64,
    /// `G_cc`, 1/eV.
    pub g_cc: Complex64,
    /// `G_mol,mol`, 1/eV.
    pub g_molmol: Complex64,
    pub sigma: SelfEnergyValue,
}

/// `G_cc = [w + i eta - (eps_c - i gamma_c) - Sigma]^-1`.
pub fn g_cc(
    omega: f64,
    sigma_value: &SelfEnergyValue,
    params: &ModelParams,
    eta: f64,
) -> Result<Complex64> {
    if !(eta >= 0.0) {
        return Err(domain(format!("eta >= 0 required (eta = {eta})")));
    }
    cavity_resolvent(omega, sigma_value.value(), params, eta)
}

pub(crate) fn cavity_resolvent(
    omega: f64,
    sigma: Complex64,
    params: &ModelParams,
    eta: f64,
) -> Result<Complex64> {
    let den = Complex64::new(omega - params.eps_c, eta + params.gamma_c) - sigma;
    if den.re == 0.0 && den.im == 0.0 {
        return Err(Error::Singular { omega });
    }
    Ok(den.inv())
}

/// `G_mol,mol = (w+ - eps_c) G_cc Sigma / g^2`, written as
/// `(1 + Sigma G_cc) Sigma / g^2` so it needs no separate broadening.
pub fn g_molmol(
    _omega: f64,
    sigma_value: &SelfEnergyValue,
    g_cc_value: Complex64,
    params: &ModelParams,
) -> Result<Complex64> {
    let g2 = params.g_squared();
    if g2 == 0.0 {
        return Err(domain("g_molmol undefined for zero coupling"));
    }
    let s = sigma_value.value();
    Ok((Complex64::new(1.0, 0.0) + s * g_cc_value) * s / g2)
}

/// Green's functions from a full resolvent sample; the bright-state form
/// stays finite as the coupling goes to zero.
pub fn greens_from_sample(
    omega: f64,
    sample: &ResolventSample,
    params: &ModelParams,
    eta: f64,
) -> Result<GreensValue> {
    let gcc = cavity_resolvent(omega, sample.sigma, params, eta)?;
    let gmm = (Complex64::new(1.0, 0.0) + sample.sigma * gcc) * sample.bright;
    Ok(GreensValue {
        omega,
        g_cc: gcc,
        g_molmol: gmm,
        sigma: SelfEnergyValue {
            omega,
            re: sample.sigma.re,
            im: sample.sigma.im,
            d_omega: sample.d_sigma,
        },
    })
}
