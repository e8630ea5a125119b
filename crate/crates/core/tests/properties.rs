use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

use polariton_lab::ensemble::{ensemble_average, EnsembleSpec};
use polariton_lab::greens::greens_from_sample;
use polariton_lab::model::{presets, CouplingModel, ModelParams, SpectralGrid};
use polariton_lab::oracle::{dense_oracle, secular_oracle};
use polariton_lab::poles::{find_poles, pole_condition, polariton_energies_second_order, PoleKind};
use polariton_lab::self_energy::{analytic_sample, MolecularLevels};
use polariton_lab::selftest::random_realization;
use polariton_lab::spectra::{delta_rho_m, delta_rho_t, rho_c, spectrum, SpectralSource, SpectrumKind};

fn params_strategy() -> impl Strategy<Value = ModelParams> {
    (1.8f64..2.2, 1.9f64..2.1, 0.005f64..0.1, 0.0f64..0.01, 0.0f64..0.05).prop_map(
        |(eps_c, eps_a, sigma, gamma_a, gamma_c)| ModelParams {
            eps_c,
            eps_a,
            sigma,
            gamma_a,
            gamma_c,
            ..presets::simulated_density(sigma)
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cavity_and_bright_greens_are_retarded(p in params_strategy(), w in 1.0f64..3.0, eta in 1e-4f64..0.05) {
        let s = analytic_sample(w, &p, eta);
        let g = greens_from_sample(w, &s, &p, eta).unwrap();
        prop_assert!(g.g_cc.im <= 0.0);
        prop_assert!(g.g_molmol.im <= 0.0);
    }

    #[test]
    fn empirical_greens_are_retarded(seed in 0u64..1000, w in 1.5f64..2.5, eta in 1e-4f64..0.05) {
        let p = ModelParams { n_molecules: 30, ..presets::simulated_density(0.05) };
        let r = random_realization(30, p.sigma, seed);
        let levels = MolecularLevels::new(&r, &p).unwrap();
        let g = greens_from_sample(w, &levels.sample(w, eta), &p, eta).unwrap();
        prop_assert!(g.g_cc.im <= 0.0);
        prop_assert!(g.g_molmol.im <= 0.0);
    }

    #[test]
    fn partitioned_inverse_matches_direct_inverse(seed in 0u64..1000, n in 2usize..60, w in 1.6f64..2.4) {
        let p = ModelParams { n_molecules: n, ..presets::simulated_density(0.05) };
        let eta = 1e-3;
        let r = random_realization(n, p.sigma, seed);
        let levels = MolecularLevels::new(&r, &p).unwrap();
        let z = Complex64::new(w, eta);
        let mut m = DMatrix::<Complex64>::zeros(n + 1, n + 1);
        m[(0, 0)] = z - p.eps_c;
        for (i, (e, v2)) in levels.energies().iter().zip(levels.weights()).enumerate() {
            let v = Complex64::new(v2.sqrt(), 0.0);
            m[(0, i + 1)] = -v;
            m[(i + 1, 0)] = -v;
            m[(i + 1, i + 1)] = z - e;
        }
        let direct = m.try_inverse().unwrap()[(0, 0)];
        let g = greens_from_sample(w, &levels.sample(w, eta), &p, eta).unwrap().g_cc;
        prop_assert!((g - direct).norm() <= 1e-10 * direct.norm(), "{g} vs {direct}");
    }

    #[test]
    fn oracle_weights_are_normalized(seed in 0u64..1000, n in 1usize..120) {
        let p = ModelParams { n_molecules: n, ..presets::simulated_density(0.05) };
        let r = random_realization(n, p.sigma, seed);
        let levels = MolecularLevels::new(&r, &p).unwrap();
        for res in [secular_oracle(&levels, p.eps_c).unwrap(), dense_oracle(&levels, p.eps_c).unwrap()] {
            prop_assert_eq!(res.len(), n + 1);
            prop_assert!(res.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
            prop_assert!((res.cavity_weights.iter().sum::<f64>() - 1.0).abs() < 1e-10);
            prop_assert!((res.mol_weights.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn total_change_identity(p in params_strategy()) {
        let grid = SpectralGrid::new(1.6, 2.4, 81, 1e-3).unwrap();
        let c = rho_c(&grid, SpectralSource::Analytic, &p).unwrap();
        let m = delta_rho_m(&grid, SpectralSource::Analytic, &p).unwrap();
        let t = delta_rho_t(&grid, SpectralSource::Analytic, &p).unwrap();
        for i in 0..grid.n_points {
            prop_assert!((t.value[i] - c.value[i] - m.value[i]).abs() <= 1e-12 * (1.0 + t.value[i].abs()));
        }
    }

    #[test]
    fn densities_are_nonnegative(p in params_strategy()) {
        let grid = SpectralGrid::new(1.5, 2.5, 101, 1e-3).unwrap();
        for kind in [SpectrumKind::RhoC, SpectrumKind::RhoMol, SpectrumKind::RhoT, SpectrumKind::Absorption] {
            let s = spectrum(kind, &grid, SpectralSource::Analytic, &p, CouplingModel::Uniform).unwrap();
            prop_assert!(s.value.iter().all(|v| *v >= 0.0), "{kind:?}");
        }
    }

    #[test]
    fn reported_poles_are_roots(sigma in 0.005f64..0.12, eps_c in 1.9f64..2.1) {
        let p = ModelParams { eps_c, ..presets::simulated_density(sigma) };
        let report = find_poles(&p).unwrap();
        for pole in &report.poles {
            prop_assert!(pole_condition(pole.energy, &p).abs() < 1e-10);
        }
    }

    #[test]
    fn resonant_polaritons_are_symmetric(sigma in 0.005f64..0.12) {
        let p = presets::simulated_density(sigma);
        let report = find_poles(&p).unwrap();
        let pol: Vec<f64> = report.polaritons().map(|q| q.energy).collect();
        if pol.len() == 2 {
            prop_assert!(((pol[0] + pol[1]) / 2.0 - p.eps_c).abs() < 1e-10);
        }
    }
}

#[test]
fn resonant_gap_is_nondecreasing_in_sigma() {
    let g = presets::simulated_density(0.0).g();
    let mut last = 0.0;
    for i in 1..=10 {
        let p = presets::simulated_density(g / 3.0 * i as f64 / 10.0);
        let gap = find_poles(&p).unwrap().gap.expect("pair exists");
        assert!(gap >= last);
        last = gap;
    }
}

#[test]
fn second_order_gap_tracks_numeric_gap_at_weak_disorder() {
    let g = presets::simulated_density(0.0).g();
    for ratio in [12.0, 25.0, 100.0, 400.0] {
        let sigma = g / f64::sqrt(ratio);
        let p = presets::simulated_density(sigma);
        let numeric = find_poles(&p).unwrap().gap.unwrap();
        let second = polariton_energies_second_order(&p).gap;
        // the second-order correction overshoots by sigma^2 / g (see poles unit tests)
        let corrected = second - sigma * sigma / g;
        assert!((numeric - corrected).abs() < 10.0 * sigma.powi(4) / g.powi(3), "ratio {ratio}");
    }
}

#[test]
fn large_disorder_leaves_only_virtual_roots() {
    let p = presets::simulated_density(0.3);
    let report = find_poles(&p).unwrap();
    assert!(!report.pair_found);
    assert!(report.poles.iter().all(|q| q.kind == PoleKind::Virtual));
}

#[test]
fn ensemble_is_reproducible() {
    let p = ModelParams { n_molecules: 50, ..presets::simulated_density(0.05) };
    let grid = SpectralGrid::new(1.7, 2.3, 61, 1e-3).unwrap();
    let spec = EnsembleSpec { n_realizations: 70, base_seed: 11, model: CouplingModel::Oriented, renormalized: true };
    let a = ensemble_average(&spec, &p, &grid, SpectrumKind::RhoC).unwrap();
    let b = ensemble_average(&spec, &p, &grid, SpectrumKind::RhoC).unwrap();
    assert_eq!(a, b);
    assert!(a.stderr.iter().all(|s| *s >= 0.0));
    assert_eq!(a.mean.len(), grid.n_points);
}
