//! Densities of states and absorption spectra built from the cavity and
//! bright-state Green's functions.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::greens::{greens_from_sample, GreensValue};
use crate::model::{
    CouplingModel, DisorderRealization, ModelParams, SpectralGrid, Spectrum, DEBYE,
    ELEMENTARY_CHARGE, HBAR_EV_S, SPEED_OF_LIGHT, VACUUM_PERMITTIVITY,
};
use crate::quadrature::{integrate, QuadOptions};
use crate::self_energy::{analytic_sample, MolecularLevels, ResolventSample};

/// Where the self-energy comes from.
#[derive(Debug, Clone, Copy)]
pub enum SpectralSource<'a> {
    /// Large-N Gaussian ensemble.
    Analytic,
    /// Direct sum over one realization.
    Empirical(&'a DisorderRealization),
    /// One realization's energies with couplings replaced by their
    /// orientation/position average `g^2 / 6N`.
    Model2Averaged(&'a DisorderRealization),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumKind {
    RhoC,
    RhoMol,
    RhoT,
    DeltaRhoM,
    DeltaRhoT,
    Absorption,
}

impl SpectrumKind {
    pub const ALL: [SpectrumKind; 6] = [
        SpectrumKind::RhoC,
        SpectrumKind::RhoMol,
        SpectrumKind::RhoT,
        SpectrumKind::DeltaRhoM,
        SpectrumKind::DeltaRhoT,
        SpectrumKind::Absorption,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SpectrumKind::RhoC => "rho_c",
            SpectrumKind::RhoMol => "rho_mol",
            SpectrumKind::RhoT => "rho_t",
            SpectrumKind::DeltaRhoM => "delta_rho_m",
            SpectrumKind::DeltaRhoT => "delta_rho_t",
            SpectrumKind::Absorption => "alpha",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        SpectrumKind::ALL
            .into_iter()
            .find(|k| k.name() == name)
            .ok_or_else(|| crate::error::invalid(format!("unknown spectrum kind '{name}'")))
    }
}

/// A source with its per-molecule data precomputed.
pub(crate) enum Prepared {
    Analytic,
    Levels(MolecularLevels),
}

impl Prepared {
    pub(crate) fn new(source: SpectralSource<'_>, params: &ModelParams) -> Result<Self> {
        Ok(match source {
            SpectralSource::Analytic => Prepared::Analytic,
            SpectralSource::Empirical(r) => Prepared::Levels(MolecularLevels::new(r, params)?),
            SpectralSource::Model2Averaged(r) => {
                r.validate(params)?;
                let n = r.len();
                let w = params.g_squared() / (6.0 * n as f64);
                Prepared::Levels(MolecularLevels::from_parts(
                    r.energies(params),
                    vec![w; n],
                    params.gamma_a,
                ))
            }
        })
    }

    pub(crate) fn sample(&self, omega: f64, params: &ModelParams, eta: f64) -> ResolventSample {
        match self {
            Prepared::Analytic => analytic_sample(omega, params, eta),
            Prepared::Levels(levels) => levels.sample(omega, eta),
        }
    }
}

/// Prefactor turning `-Im G_mol,mol` (1/eV) at energy `omega` into an
/// absorption cross section in m^2.
pub fn absorption_prefactor(omega: f64, params: &ModelParams, mu_debye: f64) -> f64 {
    let mu = mu_debye * DEBYE;
    let angular = omega / HBAR_EV_S;
    angular * params.n_molecules as f64 * mu * mu
        / (VACUUM_PERMITTIVITY * SPEED_OF_LIGHT * ELEMENTARY_CHARGE)
}

pub(crate) fn point_value(
    kind: SpectrumKind,
    omega: f64,
    prepared: &Prepared,
    params: &ModelParams,
    model: CouplingModel,
    eta: f64,
) -> Result<f64> {
    let s = prepared.sample(omega, params, eta);
    let gv = greens_from_sample(omega, &s, params, eta)?;
    Ok(kind_value(kind, omega, &s, &gv, params, model))
}

/// One spectral quantity from an already evaluated sample.
pub(crate) fn kind_value(
    kind: SpectrumKind,
    omega: f64,
    s: &ResolventSample,
    gv: &GreensValue,
    params: &ModelParams,
    model: CouplingModel,
) -> f64 {
    let rho_c = -gv.g_cc.im / PI;
    let delta_m = (s.d_sigma * gv.g_cc).im / PI;
    match kind {
        SpectrumKind::RhoC => rho_c,
        SpectrumKind::RhoMol => -gv.g_molmol.im / PI,
        SpectrumKind::RhoT => rho_c - s.background.im / PI + delta_m,
        SpectrumKind::DeltaRhoM => delta_m,
        SpectrumKind::DeltaRhoT => rho_c + delta_m,
        SpectrumKind::Absorption => {
            let line = -gv.g_molmol.im * model.mean_coupling_factor();
            match params.mu_eg {
                Some(mu) => absorption_prefactor(omega, params, mu) * line,
                None => line / PI,
            }
        }
    }
}

/// Any spectrum on `grid`. `model` only affects the absorption prefactor.
pub fn spectrum(
    kind: SpectrumKind,
    grid: &SpectralGrid,
    source: SpectralSource<'_>,
    params: &ModelParams,
    model: CouplingModel,
) -> Result<Spectrum> {
    params.validate()?;
    grid.validate()?;
    let prepared = Prepared::new(source, params)?;
    let omega = grid.points();
    let value = omega
        .par_iter()
        .map(|&w| point_value(kind, w, &prepared, params, model, grid.eta))
        .collect::<Result<Vec<f64>>>()?;
    Ok(Spectrum::new(omega, value, kind.name()))
}

pub fn rho_c(grid: &SpectralGrid, source: SpectralSource<'_>, params: &ModelParams) -> Result<Spectrum> {
    spectrum(SpectrumKind::RhoC, grid, source, params, CouplingModel::Uniform)
}

pub fn rho_mol(grid: &SpectralGrid, source: SpectralSource<'_>, params: &ModelParams) -> Result<Spectrum> {
    spectrum(SpectrumKind::RhoMol, grid, source, params, CouplingModel::Uniform)
}

pub fn rho_t(grid: &SpectralGrid, source: SpectralSource<'_>, params: &ModelParams) -> Result<Spectrum> {
    spectrum(SpectrumKind::RhoT, grid, source, params, CouplingModel::Uniform)
}

pub fn delta_rho_m(grid: &SpectralGrid, source: SpectralSource<'_>, params: &ModelParams) -> Result<Spectrum> {
    spectrum(SpectrumKind::DeltaRhoM, grid, source, params, CouplingModel::Uniform)
}

pub fn delta_rho_t(grid: &SpectralGrid, source: SpectralSource<'_>, params: &ModelParams) -> Result<Spectrum> {
    spectrum(SpectrumKind::DeltaRhoT, grid, source, params, CouplingModel::Uniform)
}

/// Absorption in m^2 when `mu_eg` is set, otherwise `-Im G_mol,mol / pi`.
/// The oriented model carries the extra average factor 1/6.
pub fn absorption(
    grid: &SpectralGrid,
    source: SpectralSource<'_>,
    params: &ModelParams,
    model: CouplingModel,
) -> Result<Spectrum> {
    spectrum(SpectrumKind::Absorption, grid, source, params, model)
}

/// Integral of an analytic spectrum over `[a, b]` by adaptive quadrature,
/// evaluated at `omega + i eta` (`eta = 0` allowed away from real poles).
pub fn analytic_window_integral(
    kind: SpectrumKind,
    params: &ModelParams,
    a: f64,
    b: f64,
    eta: f64,
) -> Result<f64> {
    params.validate()?;
    if !(eta >= 0.0 && eta.is_finite()) {
        return Err(domain(format!("eta >= 0 required (eta = {eta})")));
    }
    let failed = std::cell::Cell::new(None);
    let f = |w: f64| match point_value(kind, w, &Prepared::Analytic, params, CouplingModel::Uniform, eta) {
        Ok(v) => v,
        Err(e) => {
            failed.set(Some(e.to_string()));
            0.0
        }
    };
    let s = params.sigma;
    let mut breaks: Vec<f64> = (-6..=6).map(|k| params.eps_a + k as f64 * s).collect();
    breaks.push(params.eps_c);
    let r = integrate(
        f,
        a,
        b,
        &breaks,
        QuadOptions {
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            max_intervals: 4000,
        },
    );
    if let Some(msg) = failed.take() {
        return Err(domain(msg));
    }
    if !r.converged {
        return Err(domain(format!(
            "window integral did not converge (error estimate {:.3e})",
            r.error
        )));
    }
    Ok(r.value)
}

/// `G_cc` and `dSigma/dw` of the analytic source at one frequency; exposed
/// for diagnostics.
pub fn analytic_cavity_green(omega: f64, params: &ModelParams, eta: f64) -> Result<(Complex64, Complex64)> {
    let s = analytic_sample(omega, params, eta);
    let gv = greens_from_sample(omega, &s, params, eta)?;
    Ok((gv.g_cc, s.d_sigma))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{lorentzian_tail_deficit, presets};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn realization(n: usize, sigma: f64, seed: u64) -> DisorderRealization {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = Normal::new(0.0, sigma).unwrap();
        DisorderRealization::uniform((0..n).map(|_| d.sample(&mut rng)).collect(), seed)
    }

    fn wide_grid(p: &ModelParams, points: usize) -> SpectralGrid {
        let g = p.g();
        SpectralGrid::new(p.eps_c - 20.0 * g, p.eps_c + 20.0 * g, points, 1e-3).unwrap()
    }

    #[test]
    fn analytic_sum_rules() {
        let p = presets::simulated_density(0.05);
        let grid = wide_grid(&p, 40_001);
        let half = 20.0 * p.g();
        let deficit = lorentzian_tail_deficit(half, half, grid.eta);
        for kind in [SpectrumKind::RhoC, SpectrumKind::RhoMol, SpectrumKind::DeltaRhoT] {
            let s = spectrum(kind, &grid, SpectralSource::Analytic, &p, CouplingModel::Uniform).unwrap();
            let total = s.integral() + deficit;
            assert!((total - 1.0).abs() < 0.02, "{kind:?}: {total}");
        }
    }

    #[test]
    fn empirical_sum_rules() {
        let n = 40;
        let p = ModelParams {
            n_molecules: n,
            ..presets::simulated_density(0.05)
        };
        let r = realization(n, 0.05, 5);
        let grid = wide_grid(&p, 40_001);
        let half = 20.0 * p.g();
        let deficit = lorentzian_tail_deficit(half, half, grid.eta);
        let src = SpectralSource::Empirical(&r);
        let c = rho_c(&grid, src, &p).unwrap().integral() + deficit;
        let m = rho_mol(&grid, src, &p).unwrap().integral() + deficit;
        let t = rho_t(&grid, src, &p).unwrap().integral() + (n + 1) as f64 * deficit;
        assert!((c - 1.0).abs() < 0.02, "{c}");
        assert!((m - 1.0).abs() < 0.02, "{m}");
        assert!((t - (n + 1) as f64).abs() < 0.02 * (n + 1) as f64, "{t}");
    }

    #[test]
    fn positivity() {
        let n = 30;
        let p = ModelParams {
            n_molecules: n,
            ..presets::simulated_density(0.04)
        };
        let r = realization(n, 0.04, 2);
        let grid = SpectralGrid::new(1.6, 2.4, 801, 1e-3).unwrap();
        for src in [SpectralSource::Analytic, SpectralSource::Empirical(&r)] {
            for kind in [SpectrumKind::RhoC, SpectrumKind::RhoMol, SpectrumKind::RhoT, SpectrumKind::Absorption] {
                let s = spectrum(kind, &grid, src, &p, CouplingModel::Uniform).unwrap();
                assert!(s.value.iter().all(|&v| v >= 0.0), "{kind:?}");
            }
        }
    }

    #[test]
    fn mirror_symmetry_on_resonance() {
        let p = presets::simulated_density(0.05);
        for d in [0.003, 0.05, 0.1379, 0.21, 0.5] {
            let up = point_value(SpectrumKind::RhoC, p.eps_c + d, &Prepared::Analytic, &p, CouplingModel::Uniform, 1e-3).unwrap();
            let down = point_value(SpectrumKind::RhoC, p.eps_c - d, &Prepared::Analytic, &p, CouplingModel::Uniform, 1e-3).unwrap();
            assert!((up - down).abs() < 1e-12, "{d}: {up} {down}");
        }
    }

    #[test]
    fn total_change_is_cavity_plus_molecular_change() {
        let n = 25;
        let p = ModelParams {
            n_molecules: n,
            ..presets::simulated_density(0.05)
        };
        let r = realization(n, 0.05, 8);
        let grid = SpectralGrid::new(1.7, 2.3, 301, 1e-3).unwrap();
        for src in [SpectralSource::Analytic, SpectralSource::Empirical(&r)] {
            let c = rho_c(&grid, src, &p).unwrap();
            let m = delta_rho_m(&grid, src, &p).unwrap();
            let t = delta_rho_t(&grid, src, &p).unwrap();
            for i in 0..grid.n_points {
                assert!((t.value[i] - c.value[i] - m.value[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn decoupled_limits() {
        let p = ModelParams {
            v_tilde: 0.0,
            ..presets::simulated_density(0.05)
        };
        let grid = SpectralGrid::new(1.8, 2.2, 101, 1e-3).unwrap();
        let src = SpectralSource::Analytic;
        let c = rho_c(&grid, src, &p).unwrap();
        let dm = delta_rho_m(&grid, src, &p).unwrap();
        let dt = delta_rho_t(&grid, src, &p).unwrap();
        let mol = rho_mol(&grid, src, &p).unwrap();
        for (i, &w) in grid.points().iter().enumerate() {
            let lorentz = grid.eta / PI / ((w - p.eps_c).powi(2) + grid.eta.powi(2));
            assert!((c.value[i] - lorentz).abs() < 1e-9);
            assert_eq!(dm.value[i], 0.0);
            assert!((dt.value[i] - lorentz).abs() < 1e-9);
            // bright state is the bare band: Gaussian convolved with the eta Lorentzian
            let peak = (-(w - p.eps_a).powi(2) / (2.0 * p.sigma * p.sigma)).exp() / ((2.0 * PI).sqrt() * p.sigma);
            if (w - p.eps_a).abs() <= 2.0 * p.sigma {
                assert!((mol.value[i] - peak).abs() < 0.05 * peak, "{w}");
            }
        }
    }

    #[test]
    fn oriented_absorption_is_one_sixth() {
        let p = presets::simulated_density(0.05);
        let grid = SpectralGrid::new(1.8, 2.2, 51, 1e-3).unwrap();
        let one = absorption(&grid, SpectralSource::Analytic, &p, CouplingModel::Uniform).unwrap();
        let two = absorption(&grid, SpectralSource::Analytic, &p, CouplingModel::Oriented).unwrap();
        for i in 0..51 {
            assert!((two.value[i] - one.value[i] / 6.0).abs() <= 1e-15 * one.value[i].abs().max(1e-300));
        }
        // absolute units follow the dipole prefactor
        let abs = ModelParams {
            mu_eg: Some(10.0),
            ..p
        };
        let a = absorption(&grid, SpectralSource::Analytic, &abs, CouplingModel::Uniform).unwrap();
        for i in 0..51 {
            let w = grid.point(i);
            let expect = absorption_prefactor(w, &abs, 10.0) * PI * one.value[i];
            assert!((a.value[i] - expect).abs() <= 1e-12 * expect.abs());
        }
    }

    #[test]
    fn averaged_source_matches_reduced_coupling() {
        let n = 50;
        let p = ModelParams {
            n_molecules: n,
            ..presets::simulated_density(0.05)
        };
        let reduced = p.with_coupling_scaled(1.0 / 6f64.sqrt());
        let r = realization(n, 0.05, 4);
        let grid = SpectralGrid::new(1.8, 2.2, 81, 1e-3).unwrap();
        let a = rho_c(&grid, SpectralSource::Model2Averaged(&r), &p).unwrap();
        let b = rho_c(&grid, SpectralSource::Empirical(&r), &reduced).unwrap();
        for i in 0..81 {
            assert!((a.value[i] - b.value[i]).abs() < 1e-10 * b.value[i].abs().max(1.0));
        }
    }

    #[test]
    fn molecular_change_window_integral() {
        // on resonance the molecular band loses one state to the polaritons
        let p = presets::experimental_density_dos_change(0.01);
        let v = analytic_window_integral(SpectrumKind::DeltaRhoM, &p, 2.0, 2.2, 0.0).unwrap();
        assert!((v + 1.0).abs() < 0.05, "{v}");
        // independent high-precision evaluation of the same integral
        assert!((v + 1.024_871_711_582_771).abs() < 1e-8, "{v}");
    }

    #[test]
    fn kind_names_round_trip() {
        for k in SpectrumKind::ALL {
            assert_eq!(SpectrumKind::from_name(k.name()).unwrap(), k);
        }
        assert!(SpectrumKind::from_name("nope").is_err());
    }
}
