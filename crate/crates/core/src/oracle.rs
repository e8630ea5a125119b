//! Exact diagonalization of the single-excitation Hamiltonian
//!
//! ```text
//!     | eps_c  V_1  ...  V_N |
//! H = | V_1    eps_1         |
//!     | ...          ...     |
//!     | V_N              eps_N |
//! ```
//!
//! The arrow structure reduces the spectrum to the secular equation
//! `w - eps_c = sum_k W_k / (w - d_k)` over the distinct coupled molecular
//! energies `d_k` (with pooled weights `W_k`), which has exactly one root
//! between consecutive poles and one beyond each end. Exactly degenerate or
//! uncoupled molecules contribute dark eigenvalues at their own energy.
//! Each root is found by safeguarded Newton iteration in coordinates
//! shifted to the nearer pole, so roots hugging a pole keep full relative
//! accuracy in their distance to it.
//!
//! A dense symmetric eigensolver is kept as a second, independent route
//! for small systems.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{domain, Result};
use crate::model::{DisorderRealization, ModelParams, SpectralGrid, Spectrum};
use crate::self_energy::MolecularLevels;

/// Above this size only the secular route is available.
pub const DENSE_LIMIT: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    /// All N+1 eigenvalues, ascending, eV.
    pub eigenvalues: Vec<f64>,
    /// `|<c|m>|^2` per eigenvalue.
    pub cavity_weights: Vec<f64>,
    /// `|<mol|m>|^2` per eigenvalue, `|mol>` being the coupling-weighted
    /// bright combination of molecular states.
    pub mol_weights: Vec<f64>,
}

impl OracleResult {
    fn sorted(mut triples: Vec<(f64, f64, f64)>) -> Self {
        triples.sort_by(|a, b| a.0.total_cmp(&b.0));
        OracleResult {
            eigenvalues: triples.iter().map(|t| t.0).collect(),
            cavity_weights: triples.iter().map(|t| t.1).collect(),
            mol_weights: triples.iter().map(|t| t.2).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }
}

/// Lorentzian-broadened spectra rebuilt from the eigen-decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleSpectra {
    pub rho_c: Spectrum,
    pub rho_mol: Spectrum,
    pub rho_t: Spectrum,
}

struct Pole {
    energy: f64,
    weight: f64,
}

/// Secular function and its derivative at `pole + tau`, with all
/// pole differences taken relative to `pole`.
fn secular(tau: f64, origin: f64, eps_c: f64, poles: &[Pole]) -> (f64, f64) {
    let mut f = tau + (origin - eps_c);
    let mut df = 1.0;
    for p in poles {
        let d = tau + (origin - p.energy);
        let inv = 1.0 / d;
        f -= p.weight * inv;
        df += p.weight * inv * inv;
    }
    (f, df)
}

/// Root of the increasing function `f(origin + tau)` with `tau` in `(lo, hi)`
/// where `f(lo) < 0 < f(hi)` (endpoints may be poles).
fn bracketed_root(mut lo: f64, mut hi: f64, origin: f64, eps_c: f64, poles: &[Pole]) -> f64 {
    let mut tau = 0.5 * (lo + hi);
    for _ in 0..200 {
        let (f, df) = secular(tau, origin, eps_c, poles);
        if f == 0.0 {
            return tau;
        }
        if f < 0.0 {
            lo = tau;
        } else {
            hi = tau;
        }
        let newton = tau - f / df;
        let next = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if next == tau || hi - lo <= 4.0 * f64::EPSILON * tau.abs().max(f64::MIN_POSITIVE) {
            return next;
        }
        tau = next;
    }
    tau
}

/// Eigen-decomposition from molecular levels via the secular equation.
pub fn secular_oracle(levels: &MolecularLevels, eps_c: f64) -> Result<OracleResult> {
    let energies = levels.energies();
    let weights = levels.weights();
    if energies.iter().chain(weights).any(|v| !v.is_finite()) || !eps_c.is_finite() {
        return Err(domain("oracle: non-finite matrix entries"));
    }
    let n = energies.len();
    let total_weight: f64 = levels.total_weight();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| energies[a].total_cmp(&energies[b]));

    let mut triples: Vec<(f64, f64, f64)> = Vec::with_capacity(n + 1);
    if total_weight == 0.0 {
        triples.push((eps_c, 1.0, 0.0));
        let uniform = 1.0 / n.max(1) as f64;
        for &i in &order {
            // decoupled: each site carries 1/N of the uniform bright state
            triples.push((energies[i], 0.0, uniform));
        }
        return Ok(OracleResult::sorted(triples));
    }

    // pool exactly degenerate levels; the remainder of each group is dark
    let mut poles: Vec<Pole> = Vec::new();
    let mut k = 0;
    while k < n {
        let e = energies[order[k]];
        let mut w = 0.0;
        let mut members = 0;
        while k < n && energies[order[k]] == e {
            w += weights[order[k]];
            members += 1;
            k += 1;
        }
        let dark = if w > 0.0 { members - 1 } else { members };
        triples.extend(std::iter::repeat_n((e, 0.0, 0.0), dark));
        if w > 0.0 {
            poles.push(Pole { energy: e, weight: w });
        }
    }

    let m = poles.len();
    let spread = total_weight.sqrt() + (eps_c - poles[0].energy).abs() + (eps_c - poles[m - 1].energy).abs() + 1.0;
    let roots: Vec<f64> = (0..=m)
        .into_par_iter()
        .map(|j| {
            if j == 0 {
                // below the lowest pole, shifted to it
                let origin = poles[0].energy;
                let mut lo = -spread;
                while secular(lo, origin, eps_c, &poles).0 >= 0.0 {
                    lo *= 2.0;
                }
                origin + bracketed_root(lo, 0.0, origin, eps_c, &poles)
            } else if j == m {
                let origin = poles[m - 1].energy;
                let mut hi = spread;
                while secular(hi, origin, eps_c, &poles).0 <= 0.0 {
                    hi *= 2.0;
                }
                origin + bracketed_root(0.0, hi, origin, eps_c, &poles)
            } else {
                let left = poles[j - 1].energy;
                let right = poles[j].energy;
                let gap = right - left;
                let (fmid, _) = secular(0.5 * gap, left, eps_c, &poles);
                if fmid >= 0.0 {
                    left + bracketed_root(0.0, 0.5 * gap, left, eps_c, &poles)
                } else {
                    right + bracketed_root(-0.5 * gap, 0.0, right, eps_c, &poles)
                }
            }
        })
        .collect();

    for lambda in roots {
        let mut norm2 = 1.0;
        let mut overlap = 0.0;
        for p in &poles {
            let inv = 1.0 / (lambda - p.energy);
            norm2 += p.weight * inv * inv;
            overlap += p.weight * inv;
        }
        let cavity = 1.0 / norm2;
        let mol = overlap * overlap / (total_weight * norm2);
        triples.push((lambda, cavity, mol));
    }
    Ok(OracleResult::sorted(triples))
}

/// Same decomposition by dense symmetric diagonalization (N <= 200).
pub fn dense_oracle(levels: &MolecularLevels, eps_c: f64) -> Result<OracleResult> {
    let n = levels.len();
    if n > DENSE_LIMIT {
        return Err(domain(format!(
            "dense oracle limited to N <= {DENSE_LIMIT} (N = {n})"
        )));
    }
    let energies = levels.energies();
    let couplings: Vec<f64> = levels.weights().iter().map(|w| w.sqrt()).collect();
    let mut h = DMatrix::<f64>::zeros(n + 1, n + 1);
    h[(0, 0)] = eps_c;
    for i in 0..n {
        h[(0, i + 1)] = couplings[i];
        h[(i + 1, 0)] = couplings[i];
        h[(i + 1, i + 1)] = energies[i];
    }
    if h.iter().any(|v| !v.is_finite()) {
        return Err(domain("oracle: non-finite matrix entries"));
    }
    let norm_v = levels.total_weight().sqrt();
    let eig = SymmetricEigen::new(h);
    let triples = (0..=n)
        .map(|m| {
            let v = eig.eigenvectors.column(m);
            let cavity = v[0] * v[0];
            let overlap: f64 = if norm_v > 0.0 {
                (0..n).map(|i| couplings[i] * v[i + 1]).sum::<f64>() / norm_v
            } else {
                (0..n).map(|i| v[i + 1]).sum::<f64>() / (n as f64).sqrt()
            };
            (eig.eigenvalues[m], cavity, overlap * overlap)
        })
        .collect();
    Ok(OracleResult::sorted(triples))
}

fn lorentzian(x: f64, eta: f64) -> f64 {
    eta / std::f64::consts::PI / (x * x + eta * eta)
}

/// Broaden an eigen-decomposition into spectra on `grid`.
pub fn oracle_spectra(result: &OracleResult, grid: &SpectralGrid) -> OracleSpectra {
    let omega = grid.points();
    let eta = grid.eta;
    let build = |weights: Option<&[f64]>| -> Vec<f64> {
        omega
            .iter()
            .map(|&w| {
                result
                    .eigenvalues
                    .iter()
                    .enumerate()
                    .map(|(m, &e)| weights.map_or(1.0, |ws| ws[m]) * lorentzian(w - e, eta))
                    .sum()
            })
            .collect()
    };
    OracleSpectra {
        rho_c: Spectrum::new(omega.clone(), build(Some(&result.cavity_weights)), "rho_c_oracle"),
        rho_mol: Spectrum::new(omega.clone(), build(Some(&result.mol_weights)), "rho_mol_oracle"),
        rho_t: Spectrum::new(omega.clone(), build(None), "rho_t_oracle"),
    }
}

/// Diagonalize the realization's Hamiltonian and rebuild the spectra.
/// Lifetimes make the Hamiltonian non-Hermitian and are rejected.
pub fn exact_diagonalization_oracle(
    realization: &DisorderRealization,
    params: &ModelParams,
    grid: &SpectralGrid,
) -> Result<(OracleResult, OracleSpectra)> {
    params.validate()?;
    grid.validate()?;
    if params.gamma_a != 0.0 || params.gamma_c != 0.0 {
        return Err(domain("oracle requires gamma_a = gamma_c = 0"));
    }
    let levels = MolecularLevels::new(realization, params)?;
    let result = secular_oracle(&levels, params.eps_c)?;
    let spectra = oracle_spectra(&result, grid);
    Ok((result, spectra))
}
