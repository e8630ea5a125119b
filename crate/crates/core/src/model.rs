//! Physical parameters, disorder realizations and spectral grids.
//!
//! Energies are in eV throughout. The collective coupling `g = sqrt(density) * v_tilde`
//! is the single quantity through which the molecular density enters every
//! formula; the finite-N ensemble path uses the per-molecule coupling
//! `V = g / sqrt(N)`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Reduced Planck constant, eV s.
pub const HBAR_EV_S: f64 = 6.582119569e-16;
/// Speed of light, m/s.
pub const SPEED_OF_LIGHT: f64 = 2.99792458e8;
/// Vacuum permittivity, F/m.
pub const VACUUM_PERMITTIVITY: f64 = 8.8541878128e-12;
/// One Debye in C m.
pub const DEBYE: f64 = 3.33564e-30;
/// Elementary charge, C (J per eV).
pub const ELEMENTARY_CHARGE: f64 = 1.602176634e-19;

/// Default resolvent broadening, eV.
pub const DEFAULT_ETA: f64 = 0.001;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Cavity excitation energy, eV.
    pub eps_c: f64,
    /// Mean molecular excitation energy, eV.
    pub eps_a: f64,
    /// Standard deviation of the Gaussian detunings, eV.
    pub sigma: f64,
    /// Volume-independent coupling, eV m^(3/2).
    pub v_tilde: f64,
    /// Molecules per unit volume, m^-3.
    pub number_density: f64,
    /// Number of molecules used by the finite-N paths.
    pub n_molecules: usize,
    /// Molecular homogeneous width, eV.
    pub gamma_a: f64,
    /// Cavity mode width, eV.
    pub gamma_c: f64,
    /// Transition dipole magnitude, Debye.
    pub mu_eg: Option<f64>,
}

impl Default for ModelParams {
    fn default() -> Self {
        presets::simulated_density(0.05)
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("eps_c", self.eps_c),
            ("eps_a", self.eps_a),
            ("sigma", self.sigma),
            ("v_tilde", self.v_tilde),
            ("number_density", self.number_density),
            ("gamma_a", self.gamma_a),
            ("gamma_c", self.gamma_c),
        ];
        for (name, value) in finite {
            if !value.is_finite() {
                return Err(invalid(format!("{name} must be finite (got {value})")));
            }
        }
        if self.sigma < 0.0 {
            return Err(invalid(format!("sigma >= 0 violated (sigma = {})", self.sigma)));
        }
        if self.number_density <= 0.0 {
            return Err(invalid(format!(
                "number_density > 0 violated (number_density = {})",
                self.number_density
            )));
        }
        if self.n_molecules < 1 {
            return Err(invalid("n_molecules >= 1 violated"));
        }
        if self.gamma_a < 0.0 {
            return Err(invalid(format!("gamma_a >= 0 violated (gamma_a = {})", self.gamma_a)));
        }
        if self.gamma_c < 0.0 {
            return Err(invalid(format!("gamma_c >= 0 violated (gamma_c = {})", self.gamma_c)));
        }
        if let Some(mu) = self.mu_eg {
            if !mu.is_finite() || mu < 0.0 {
                return Err(invalid(format!("mu_eg >= 0 violated (mu_eg = {mu})")));
            }
        }
        Ok(())
    }

    /// Collective coupling `g = sqrt(number_density) * v_tilde`, eV.
    pub fn g(&self) -> f64 {
        collective_coupling(self)
    }

    /// `g^2 = density * v_tilde^2`, eV^2.
    pub fn g_squared(&self) -> f64 {
        self.number_density * self.v_tilde * self.v_tilde
    }

    /// Rabi splitting `2 g`, eV.
    pub fn rabi_splitting(&self) -> f64 {
        2.0 * self.g()
    }

    /// Cavity volume implied by `N / density`, m^3.
    pub fn volume(&self) -> f64 {
        self.n_molecules as f64 / self.number_density
    }

    /// Per-molecule coupling of the finite-N path, `v_tilde / sqrt(volume)`.
    pub fn per_molecule_coupling(&self) -> f64 {
        self.v_tilde / self.volume().sqrt()
    }

    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.sigma = sigma;
        self
    }

    /// Copy with the density chosen so that the Rabi splitting equals `omega_rabi`.
    pub fn with_rabi_splitting(mut self, omega_rabi: f64) -> Result<Self> {
        if self.v_tilde == 0.0 {
            return Err(invalid("cannot set a Rabi splitting with v_tilde = 0"));
        }
        let g = 0.5 * omega_rabi;
        self.number_density = (g / self.v_tilde).powi(2);
        Ok(self)
    }

    /// Copy with the coupling rescaled so that `g` becomes `g * factor`.
    pub fn with_coupling_scaled(mut self, factor: f64) -> Self {
        self.v_tilde *= factor;
        self
    }
}

/// `g = sqrt(number_density) * v_tilde` in eV.
pub fn collective_coupling(params: &ModelParams) -> f64 {
    params.number_density.sqrt() * params.v_tilde
}

/// Parameter sets used throughout the examples and the acceptance suite.
pub mod presets {
    use super::ModelParams;

    /// Low density (1500 molecules per unit volume) that is small enough to
    /// simulate molecule by molecule: eps_c = eps_a = 2.0 eV,
    /// v_tilde = 3.56e-3 eV m^(3/2), g ~ 0.1379 eV.
    pub fn simulated_density(sigma: f64) -> ModelParams {
        ModelParams {
            eps_c: 2.0,
            eps_a: 2.0,
            sigma,
            v_tilde: 3.56e-3,
            number_density: 1500.0,
            n_molecules: 1500,
            gamma_a: 0.0,
            gamma_c: 0.0,
            mu_eg: None,
        }
    }

    /// Experimentally realistic density 1.15e25 m^-3 on resonance at 2.1 eV
    /// with v_tilde = 4.06e-14 eV m^(3/2), g ~ 0.1377 eV. `sigma_rel` is the
    /// disorder width as a fraction of eps_a.
    pub fn experimental_density(sigma_rel: f64) -> ModelParams {
        ModelParams {
            eps_c: 2.1,
            eps_a: 2.1,
            sigma: sigma_rel * 2.1,
            v_tilde: 4.06e-14,
            number_density: 1.15e25,
            n_molecules: 1,
            gamma_a: 0.0,
            gamma_c: 0.0,
            mu_eg: Some(10.0),
        }
    }

    /// Same as [`experimental_density`] with density 1.16e25 m^-3, used for
    /// the molecular density-of-states change.
    pub fn experimental_density_dos_change(sigma_rel: f64) -> ModelParams {
        ModelParams {
            number_density: 1.16e25,
            ..experimental_density(sigma_rel)
        }
    }

    /// Lifetime-broadened set: gamma_a = 0.3 meV, gamma_c = 0.1 eV, with the
    /// density chosen to give the requested Rabi splitting.
    pub fn lifetime_broadened(sigma_rel: f64, omega_rabi: f64) -> ModelParams {
        let base = ModelParams {
            gamma_a: 0.3e-3,
            gamma_c: 0.1,
            ..experimental_density(sigma_rel)
        };
        base.with_rabi_splitting(omega_rabi)
            .expect("preset has nonzero v_tilde")
    }
}

/// Which coupling law the molecules follow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CouplingModel {
    /// Identical coupling `g / sqrt(N)` for every molecule.
    Uniform,
    /// Coupling `~ cos(theta) sin(pi z)` from dipole orientation and position.
    Oriented,
}

impl CouplingModel {
    pub fn from_index(index: u8) -> Result<Self> {
        match index {
            1 => Ok(CouplingModel::Uniform),
            2 => Ok(CouplingModel::Oriented),
            other => Err(invalid(format!("model must be 1 or 2 (got {other})"))),
        }
    }

    pub fn index(self) -> u8 {
        match self {
            CouplingModel::Uniform => 1,
            CouplingModel::Oriented => 2,
        }
    }

    /// Ratio between the orientation/position averaged coupling variance and
    /// the uniform one: `<cos^2 theta> <sin^2 pi z> = 1/3 * 1/2`.
    pub fn mean_coupling_factor(self) -> f64 {
        match self {
            CouplingModel::Uniform => 1.0,
            CouplingModel::Oriented => 1.0 / 6.0,
        }
    }
}

/// Dipole angles and positions of an oriented realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Orientation {
    /// Polar angles between dipole and field, radians.
    pub theta: Vec<f64>,
    /// Positions as fractions of the cavity length, in [0, 1].
    pub z: Vec<f64>,
    /// Multiply each coupling by sqrt(6) so that the mean squared coupling
    /// equals the uniform one.
    pub renormalized: bool,
}

/// One sampled set of molecular detunings (and orientations, if any).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisorderRealization {
    /// Detunings `xi_i`, eV; molecule energies are `eps_a + xi_i`.
    pub xi: Vec<f64>,
    pub orientation: Option<Orientation>,
    pub seed: u64,
}

impl DisorderRealization {
    pub fn uniform(xi: Vec<f64>, seed: u64) -> Self {
        DisorderRealization {
            xi,
            orientation: None,
            seed,
        }
    }

    pub fn len(&self) -> usize {
        self.xi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xi.is_empty()
    }

    pub fn model(&self) -> CouplingModel {
        match self.orientation {
            None => CouplingModel::Uniform,
            Some(_) => CouplingModel::Oriented,
        }
    }

    pub fn validate(&self, params: &ModelParams) -> Result<()> {
        if self.xi.len() != params.n_molecules {
            return Err(invalid(format!(
                "realization length {} != n_molecules {}",
                self.xi.len(),
                params.n_molecules
            )));
        }
        if let Some(o) = &self.orientation {
            if o.theta.len() != self.xi.len() || o.z.len() != self.xi.len() {
                return Err(invalid(
                    "theta and z must have the same length as xi".to_string(),
                ));
            }
        }
        if self.xi.iter().any(|x| !x.is_finite()) {
            return Err(invalid("realization contains non-finite detunings"));
        }
        Ok(())
    }

    /// Molecular excitation energies `eps_a + xi_i`.
    pub fn energies(&self, params: &ModelParams) -> Vec<f64> {
        self.xi.iter().map(|x| params.eps_a + x).collect()
    }

    /// Squared couplings `|V_i|^2`, eV^2.
    pub fn couplings_squared(&self, params: &ModelParams) -> Vec<f64> {
        let n = self.xi.len().max(1) as f64;
        let v2 = params.g_squared() / n;
        match &self.orientation {
            None => vec![v2; self.xi.len()],
            Some(o) => {
                let scale = if o.renormalized { 6.0 } else { 1.0 };
                o.theta
                    .iter()
                    .zip(&o.z)
                    .map(|(theta, z)| {
                        let profile = theta.cos() * (std::f64::consts::PI * z).sin();
                        scale * v2 * profile * profile
                    })
                    .collect()
            }
        }
    }
}

/// Uniform frequency axis with the resolvent broadening `eta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralGrid {
    pub omega_min: f64,
    pub omega_max: f64,
    pub n_points: usize,
    pub eta: f64,
}

impl SpectralGrid {
    pub fn new(omega_min: f64, omega_max: f64, n_points: usize, eta: f64) -> Result<Self> {
        let grid = SpectralGrid {
            omega_min,
            omega_max,
            n_points,
            eta,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega_min.is_finite() && self.omega_max.is_finite()) {
            return Err(invalid("grid bounds must be finite"));
        }
        if self.omega_min >= self.omega_max {
            return Err(invalid(format!(
                "omega_min < omega_max violated ({} >= {})",
                self.omega_min, self.omega_max
            )));
        }
        if self.n_points < 2 {
            return Err(invalid("n_points >= 2 violated"));
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(invalid(format!("eta > 0 violated (eta = {})", self.eta)));
        }
        Ok(())
    }

    pub fn step(&self) -> f64 {
        (self.omega_max - self.omega_min) / (self.n_points - 1) as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        if i + 1 == self.n_points {
            self.omega_max
        } else {
            self.omega_min + i as f64 * self.step()
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.point(i)).collect()
    }
}

/// Paired samples of a spectral quantity on a frequency axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub omega: Vec<f64>,
    pub value: Vec<f64>,
    pub label: String,
}

impl Spectrum {
    pub fn new(omega: Vec<f64>, value: Vec<f64>, label: impl Into<String>) -> Self {
        debug_assert_eq!(omega.len(), value.len());
        Spectrum {
            omega,
            value,
            label: label.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    /// Trapezoidal integral over the sampled window.
    pub fn integral(&self) -> f64 {
        self.omega
            .windows(2)
            .zip(self.value.windows(2))
            .map(|(w, v)| 0.5 * (w[1] - w[0]) * (v[0] + v[1]))
            .sum()
    }

    pub fn scaled(&self, factor: f64, label: impl Into<String>) -> Spectrum {
        Spectrum::new(
            self.omega.clone(),
            self.value.iter().map(|v| v * factor).collect(),
            label,
        )
    }
}

/// Fraction of a unit-weight Lorentzian of half-width `eta` that falls
/// outside a window extending `left` below and `right` above its centre.
pub fn lorentzian_tail_deficit(left: f64, right: f64, eta: f64) -> f64 {
    1.0 - (left / eta).atan() / std::f64::consts::PI - (right / eta).atan() / std::f64::consts::PI
}
