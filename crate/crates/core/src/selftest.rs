//! Built-in consistency checks run by `polariton-lab self-test`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::Result;
use crate::model::{lorentzian_tail_deficit, presets, DisorderRealization, ModelParams, SpectralGrid};
use crate::oracle::exact_diagonalization_oracle;
use crate::spectra::{rho_c, rho_mol, rho_t, SpectralSource};
use crate::special::{dawson, dawson_quadrature};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// 200 evenly spaced points in [-10, 10] against the quadrature reference,
/// plus the finite-difference ODE residual.
pub fn check_dawson() -> CheckResult {
    let mut worst: f64 = 0.0;
    let mut ode: f64 = 0.0;
    for i in 0..200 {
        let x = -10.0 + 20.0 * i as f64 / 199.0;
        let d = dawson(x).unwrap_or(f64::NAN);
        worst = worst.max((d - dawson_quadrature(x)).abs());
        let h = 1e-5;
        let fd = (dawson(x + h).unwrap_or(f64::NAN) - dawson(x - h).unwrap_or(f64::NAN)) / (2.0 * h);
        ode = ode.max((fd + 2.0 * x * d - 1.0).abs());
    }
    CheckResult {
        name: "dawson_accuracy",
        passed: worst <= 1e-12 && ode < 1e-6,
        detail: format!("max_abs_err={worst:.3e} ode_residual={ode:.3e}"),
    }
}

pub fn random_realization(n: usize, sigma: f64, seed: u64) -> DisorderRealization {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma).expect("sigma >= 0");
    DisorderRealization::uniform((0..n).map(|_| normal.sample(&mut rng)).collect(), seed)
}

/// Largest pointwise deviation between the Green's-function spectra and
/// the diagonalization oracle for one realization.
pub fn oracle_deviation(
    realization: &DisorderRealization,
    params: &ModelParams,
    grid: &SpectralGrid,
) -> Result<f64> {
    let (_, oracle) = exact_diagonalization_oracle(realization, params, grid)?;
    let src = SpectralSource::Empirical(realization);
    let pairs = [
        (rho_c(grid, src, params)?, oracle.rho_c),
        (rho_mol(grid, src, params)?, oracle.rho_mol),
        (rho_t(grid, src, params)?, oracle.rho_t),
    ];
    Ok(pairs
        .iter()
        .flat_map(|(a, b)| a.value.iter().zip(&b.value).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max))
}

/// Ten seeds, N = 50: closed-form spectra against the oracle.
pub fn check_oracle() -> CheckResult {
    let params = ModelParams {
        n_molecules: 50,
        ..presets::simulated_density(0.05)
    };
    let grid = SpectralGrid::new(1.6, 2.4, 801, 1e-3).expect("valid grid");
    let mut worst: f64 = 0.0;
    for seed in 0..10 {
        let r = random_realization(50, params.sigma, seed);
        match oracle_deviation(&r, &params, &grid) {
            Ok(d) => worst = worst.max(d),
            Err(e) => {
                return CheckResult {
                    name: "oracle_equivalence",
                    passed: false,
                    detail: e.to_string(),
                }
            }
        }
    }
    CheckResult {
        name: "oracle_equivalence",
        passed: worst < 1e-8,
        detail: format!("max_abs_dev={worst:.3e}"),
    }
}

/// Completeness of the analytic cavity density on a +-20 g window.
pub fn check_sum_rules() -> CheckResult {
    let params = presets::simulated_density(0.05);
    let g = params.g();
    let half = 20.0 * g;
    let eta = 1e-3;
    let result = SpectralGrid::new(params.eps_c - half, params.eps_c + half, 40_001, eta)
        .and_then(|grid| rho_c(&grid, SpectralSource::Analytic, &params));
    match result {
        Ok(s) => {
            let total = s.integral() + lorentzian_tail_deficit(half, half, eta);
            CheckResult {
                name: "sum_rule_rho_c",
                passed: (total - 1.0).abs() < 0.02,
                detail: format!("integral={total:.6}"),
            }
        }
        Err(e) => CheckResult {
            name: "sum_rule_rho_c",
            passed: false,
            detail: e.to_string(),
        },
    }
}

pub fn run_all() -> Vec<CheckResult> {
    vec![check_dawson(), check_oracle(), check_sum_rules()]
}
