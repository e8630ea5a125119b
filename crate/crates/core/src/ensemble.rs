//! Disorder ensembles: seeded realizations and reproducible averages.
//!
//! Realization `k` draws from a ChaCha8 stream keyed by `(base_seed, k)`,
//! so any subset can be regenerated independently. Averages are reduced
//! over fixed-size chunks of consecutive realizations; each chunk is summed
//! in index order with compensated sums and the chunks are merged in chunk
//! order, which makes the result independent of the thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::greens::greens_from_sample;
use crate::model::{CouplingModel, DisorderRealization, ModelParams, Orientation, SpectralGrid};
use crate::spectra::{kind_value, spectrum, Prepared, SpectralSource, SpectrumKind};

/// Realizations per reduction chunk.
const CHUNK: usize = 32;

pub const DEFAULT_REALIZATIONS: usize = 3000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub n_realizations: usize,
    pub base_seed: u64,
    pub model: CouplingModel,
    /// Oriented couplings carry the factor sqrt(6) so that their mean
    /// square matches the uniform coupling.
    pub renormalized: bool,
}

impl Default for EnsembleSpec {
    fn default() -> Self {
        EnsembleSpec {
            n_realizations: DEFAULT_REALIZATIONS,
            base_seed: 0,
            model: CouplingModel::Uniform,
            renormalized: true,
        }
    }
}

impl EnsembleSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_realizations == 0 {
            return Err(invalid("n_realizations >= 1 violated"));
        }
        Ok(())
    }

    /// Parameters of the uniform-coupling model with the same mean squared
    /// coupling as this ensemble.
    pub fn equivalent_uniform(&self, params: &ModelParams) -> ModelParams {
        match (self.model, self.renormalized) {
            (CouplingModel::Oriented, false) => params.with_coupling_scaled(1.0 / 6f64.sqrt()),
            _ => *params,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpectrum {
    pub omega: Vec<f64>,
    pub mean: Vec<f64>,
    /// Standard error of the mean per grid point (zero for one realization).
    pub stderr: Vec<f64>,
    pub n_realizations: usize,
    pub label: String,
}

/// Realization `index` of the ensemble.
pub fn sample_realization(
    spec: &EnsembleSpec,
    index: usize,
    params: &ModelParams,
) -> Result<DisorderRealization> {
    if index >= spec.n_realizations {
        return Err(invalid(format!(
            "realization index {index} out of range (n_realizations = {})",
            spec.n_realizations
        )));
    }
    let n = params.n_molecules;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.base_seed);
    rng.set_stream(index as u64);
    let xi: Vec<f64> = (0..n)
        .map(|_| params.sigma * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let orientation = match spec.model {
        CouplingModel::Uniform => None,
        CouplingModel::Oriented => {
            // isotropic directions: cos(theta) uniform on [-1, 1]
            let theta = (0..n)
                .map(|_| rng.random_range(-1.0..=1.0f64).acos())
                .collect();
            let z = (0..n).map(|_| rng.random::<f64>()).collect();
            Some(Orientation {
                theta,
                z,
                renormalized: spec.renormalized,
            })
        }
    };
    Ok(DisorderRealization {
        xi,
        orientation,
        seed: spec.base_seed,
    })
}

/// Compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
struct Kahan {
    sum: f64,
    comp: f64,
}

impl Kahan {
    fn add(&mut self, x: f64) {
        let y = x - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }

    fn merge(&mut self, other: &Kahan) {
        self.add(other.sum);
        self.add(-other.comp);
    }
}

/// Shifted first and second moments over a set of realizations.
#[derive(Debug, Clone)]
struct Moments {
    count: usize,
    first: Vec<Kahan>,
    second: Vec<Kahan>,
}

impl Moments {
    fn new(len: usize) -> Self {
        Moments {
            count: 0,
            first: vec![Kahan::default(); len],
            second: vec![Kahan::default(); len],
        }
    }

    fn push(&mut self, values: &[f64], shift: &[f64]) {
        self.count += 1;
        for (i, (&v, &s)) in values.iter().zip(shift).enumerate() {
            let d = v - s;
            self.first[i].add(d);
            self.second[i].add(d * d);
        }
    }

    fn merge(&mut self, other: &Moments) {
        self.count += other.count;
        for i in 0..self.first.len() {
            self.first[i].merge(&other.first[i]);
            self.second[i].merge(&other.second[i]);
        }
    }

    fn mean_and_stderr(&self, shift: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = self.count as f64;
        let mut mean = Vec::with_capacity(shift.len());
        let mut stderr = Vec::with_capacity(shift.len());
        for i in 0..shift.len() {
            let m = self.first[i].sum / n;
            mean.push(shift[i] + m);
            let se = if self.count > 1 {
                let var = (self.second[i].sum - n * m * m) / (n - 1.0);
                (var.max(0.0) / n).sqrt()
            } else {
                0.0
            };
            stderr.push(se);
        }
        (mean, stderr)
    }
}

/// Deterministic reduction of `observe` over realizations `range`.
/// `observe` writes `len` values for one realization.
fn reduce_range<F>(
    spec: &EnsembleSpec,
    params: &ModelParams,
    range: std::ops::Range<usize>,
    len: usize,
    shift: &[f64],
    observe: &F,
) -> Result<Moments>
where
    F: Fn(&DisorderRealization, &mut [f64]) -> Result<()> + Sync,
{
    let starts: Vec<usize> = range.clone().step_by(CHUNK).collect();
    let partials = starts
        .par_iter()
        .map(|&start| {
            let end = (start + CHUNK).min(range.end);
            let mut moments = Moments::new(len);
            let mut buf = vec![0.0; len];
            for k in start..end {
                let r = sample_realization(spec, k, params)?;
                observe(&r, &mut buf)?;
                moments.push(&buf, shift);
            }
            Ok(moments)
        })
        .collect::<Result<Vec<Moments>>>()?;
    let mut total = Moments::new(len);
    for p in &partials {
        total.merge(p);
    }
    Ok(total)
}

/// Mean and standard error of arbitrary per-realization observables.
/// Checkpoints (ascending, each <= n_realizations) yield the running mean
/// after that many realizations; the final entry always covers the whole
/// ensemble.
pub fn ensemble_statistics<F>(
    spec: &EnsembleSpec,
    params: &ModelParams,
    len: usize,
    checkpoints: &[usize],
    observe: F,
) -> Result<Vec<(usize, Vec<f64>, Vec<f64>)>>
where
    F: Fn(&DisorderRealization, &mut [f64]) -> Result<()> + Sync,
{
    spec.validate()?;
    params.validate()?;
    let mut marks: Vec<usize> = checkpoints.to_vec();
    if marks.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("checkpoints must be strictly ascending"));
    }
    if marks.iter().any(|&c| c == 0 || c > spec.n_realizations) {
        return Err(invalid("checkpoints must lie in 1..=n_realizations"));
    }
    if marks.last() != Some(&spec.n_realizations) {
        marks.push(spec.n_realizations);
    }
    // realization 0 sets the shift that keeps the second moments well conditioned
    let mut shift = vec![0.0; len];
    observe(&sample_realization(spec, 0, params)?, &mut shift)?;

    let mut running = Moments::new(len);
    let mut done = 0;
    let mut out = Vec::with_capacity(marks.len());
    for &mark in &marks {
        let part = reduce_range(spec, params, done..mark, len, &shift, &observe)?;
        running.merge(&part);
        done = mark;
        let (mean, stderr) = running.mean_and_stderr(&shift);
        out.push((mark, mean, stderr));
    }
    Ok(out)
}

fn observe_kinds<'a>(
    spec: &'a EnsembleSpec,
    params: &'a ModelParams,
    grid: &'a SpectralGrid,
    kinds: &'a [SpectrumKind],
) -> impl Fn(&DisorderRealization, &mut [f64]) -> Result<()> + Sync + 'a {
    let omega = grid.points();
    move |r, out| {
        let prepared = Prepared::new(SpectralSource::Empirical(r), params)?;
        let np = omega.len();
        for (j, &w) in omega.iter().enumerate() {
            let s = prepared.sample(w, params, grid.eta);
            let gv = greens_from_sample(w, &s, params, grid.eta)?;
            for (k, &kind) in kinds.iter().enumerate() {
                out[k * np + j] = kind_value(kind, w, &s, &gv, params, spec.model);
            }
        }
        Ok(())
    }
}

fn split_kinds(
    omega: &[f64],
    kinds: &[SpectrumKind],
    n: usize,
    mean: &[f64],
    stderr: &[f64],
) -> Vec<EnsembleSpectrum> {
    let np = omega.len();
    kinds
        .iter()
        .enumerate()
        .map(|(k, kind)| EnsembleSpectrum {
            omega: omega.to_vec(),
            mean: mean[k * np..(k + 1) * np].to_vec(),
            stderr: stderr[k * np..(k + 1) * np].to_vec(),
            n_realizations: n,
            label: kind.name().to_string(),
        })
        .collect()
}

/// Ensemble mean of several spectra sharing one pass over the realizations.
pub fn ensemble_average_kinds(
    spec: &EnsembleSpec,
    params: &ModelParams,
    grid: &SpectralGrid,
    kinds: &[SpectrumKind],
) -> Result<Vec<EnsembleSpectrum>> {
    grid.validate()?;
    let omega = grid.points();
    let len = omega.len() * kinds.len();
    let stats = ensemble_statistics(spec, params, len, &[], observe_kinds(spec, params, grid, kinds))?;
    let (n, mean, stderr) = stats.into_iter().next_back().expect("final checkpoint");
    Ok(split_kinds(&omega, kinds, n, &mean, &stderr))
}

pub fn ensemble_average(
    spec: &EnsembleSpec,
    params: &ModelParams,
    grid: &SpectralGrid,
    kind: SpectrumKind,
) -> Result<EnsembleSpectrum> {
    Ok(ensemble_average_kinds(spec, params, grid, &[kind])?.remove(0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergencePoint {
    pub realizations: usize,
    /// `sqrt(int (mean - analytic)^2 dw)` over the grid.
    pub l2_distance: f64,
}

/// Distance between the running ensemble mean and the large-N analytic
/// spectrum at each checkpoint.
pub fn convergence_report(
    spec: &EnsembleSpec,
    params: &ModelParams,
    grid: &SpectralGrid,
    kind: SpectrumKind,
    checkpoints: &[usize],
) -> Result<Vec<ConvergencePoint>> {
    grid.validate()?;
    let reference_params = spec.equivalent_uniform(params);
    let reference = spectrum(kind, grid, SpectralSource::Analytic, &reference_params, spec.model)?;
    let kinds = [kind];
    let stats = ensemble_statistics(
        spec,
        params,
        grid.n_points,
        checkpoints,
        observe_kinds(spec, params, grid, &kinds),
    )?;
    let dw = grid.step();
    Ok(stats
        .into_iter()
        .filter(|(n, _, _)| checkpoints.contains(n))
        .map(|(n, mean, _)| {
            let sq: f64 = mean
                .iter()
                .zip(&reference.value)
                .map(|(m, a)| (m - a) * (m - a))
                .sum();
            ConvergencePoint {
                realizations: n,
                l2_distance: (sq * dw).sqrt(),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::presets;
    use crate::self_energy::{sigma_analytic_broadened, sigma_empirical};

    fn small(n: usize, sigma: f64) -> ModelParams {
        ModelParams {
            n_molecules: n,
            ..presets::simulated_density(sigma)
        }
    }

    #[test]
    fn realizations_are_keyed_by_seed_and_index() {
        let p = small(20, 0.05);
        let spec = EnsembleSpec {
            n_realizations: 10,
            base_seed: 7,
            ..Default::default()
        };
        let a = sample_realization(&spec, 3, &p).unwrap();
        let b = sample_realization(&spec, 3, &p).unwrap();
        let c = sample_realization(&spec, 4, &p).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.xi, c.xi);
        assert!(sample_realization(&spec, 10, &p).is_err());
        let zero = sample_realization(&spec, 0, &small(20, 0.0)).unwrap();
        assert!(zero.xi.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn detuning_mean_obeys_clt() {
        let n = 1_000_000;
        let p = small(n, 0.05);
        let spec = EnsembleSpec {
            n_realizations: 1,
            base_seed: 1,
            ..Default::default()
        };
        let r = sample_realization(&spec, 0, &p).unwrap();
        let mean = r.xi.iter().sum::<f64>() / n as f64;
        assert!(mean.abs() < 3.0 * 0.05 / (n as f64).sqrt());
        let var = r.xi.iter().map(|x| x * x).sum::<f64>() / n as f64;
        assert!((var.sqrt() / 0.05 - 1.0).abs() < 0.01);
    }

    #[test]
    fn orientation_factor_is_one_sixth() {
        let n = 1_000_000;
        let p = small(n, 0.0);
        let spec = EnsembleSpec {
            n_realizations: 1,
            base_seed: 2,
            model: CouplingModel::Oriented,
            renormalized: false,
        };
        let r = sample_realization(&spec, 0, &p).unwrap();
        let o = r.orientation.as_ref().unwrap();
        let mean = o
            .theta
            .iter()
            .zip(&o.z)
            .map(|(t, z)| (t.cos() * (std::f64::consts::PI * z).sin()).powi(2))
            .sum::<f64>()
            / n as f64;
        assert!((mean - 1.0 / 6.0).abs() < 1e-3, "{mean}");
    }

    #[test]
    fn reproducible_across_thread_counts() {
        let p = small(60, 0.05);
        let grid = SpectralGrid::new(1.8, 2.2, 41, 1e-3).unwrap();
        let spec = EnsembleSpec {
            n_realizations: 100,
            base_seed: 11,
            ..Default::default()
        };
        let run = |threads: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| ensemble_average(&spec, &p, &grid, SpectrumKind::RhoC).unwrap())
        };
        let one = run(1);
        let three = run(3);
        assert_eq!(one, three);
        assert!(one.stderr.iter().all(|&s| s >= 0.0));
    }

    #[test]
    fn single_clean_realization_is_exact() {
        let p = small(30, 0.0);
        let grid = SpectralGrid::new(1.7, 2.3, 61, 1e-3).unwrap();
        let spec = EnsembleSpec {
            n_realizations: 1,
            ..Default::default()
        };
        let e = ensemble_average(&spec, &p, &grid, SpectrumKind::RhoC).unwrap();
        let g = p.g();
        for (i, &w) in e.omega.iter().enumerate() {
            // two Lorentzians of weight 1/2 at eps_c +- g
            let l = |c: f64| grid.eta / std::f64::consts::PI / ((w - c).powi(2) + grid.eta.powi(2));
            let expect = 0.5 * (l(p.eps_c + g) + l(p.eps_c - g));
            assert!((e.mean[i] - expect).abs() < 1e-9 * expect.max(1.0));
            assert_eq!(e.stderr[i], 0.0);
        }
    }

    #[test]
    fn self_energy_is_unbiased() {
        let p = small(200, 0.05);
        let spec = EnsembleSpec {
            n_realizations: 400,
            base_seed: 5,
            ..Default::default()
        };
        let eta = 1e-3;
        let freqs: Vec<f64> = (0..20).map(|k| 1.8 + 0.4 * k as f64 / 19.0).collect();
        let stats = ensemble_statistics(&spec, &p, 40, &[], |r, out| {
            for (j, &w) in freqs.iter().enumerate() {
                let s = sigma_empirical(w, r, &p, eta)?;
                out[2 * j] = s.re;
                out[2 * j + 1] = s.im;
            }
            Ok(())
        })
        .unwrap();
        let (_, mean, stderr) = &stats[0];
        for (j, &w) in freqs.iter().enumerate() {
            let a = sigma_analytic_broadened(w, &p, eta).unwrap();
            assert!((mean[2 * j] - a.re).abs() < 3.0 * stderr[2 * j] + 1e-12, "re at {w}");
            assert!((mean[2 * j + 1] - a.im).abs() < 3.0 * stderr[2 * j + 1] + 1e-12, "im at {w}");
        }
    }

    #[test]
    fn stderr_scales_as_inverse_root() {
        let p = small(40, 0.05);
        let grid = SpectralGrid::new(1.85, 2.15, 31, 5e-3).unwrap();
        let spec = EnsembleSpec {
            n_realizations: 4000,
            base_seed: 9,
            ..Default::default()
        };
        let kinds = [SpectrumKind::RhoC];
        let stats = ensemble_statistics(&spec, &p, 31, &[1000], observe_kinds(&spec, &p, &grid, &kinds)).unwrap();
        let (_, _, se1000) = &stats[0];
        let (_, _, se4000) = &stats[1];
        let ratio: f64 = se4000.iter().zip(se1000).map(|(a, b)| a / b).sum::<f64>() / 31.0;
        assert!((0.45..=0.55).contains(&ratio), "{ratio}");
    }

    #[test]
    fn checkpoints_validated() {
        let p = small(5, 0.05);
        let spec = EnsembleSpec {
            n_realizations: 10,
            ..Default::default()
        };
        let f = |_: &DisorderRealization, out: &mut [f64]| {
            out[0] = 1.0;
            Ok(())
        };
        assert!(ensemble_statistics(&spec, &p, 1, &[5, 3], f).is_err());
        assert!(ensemble_statistics(&spec, &p, 1, &[11], f).is_err());
        let ok = ensemble_statistics(&spec, &p, 1, &[2, 10], f).unwrap();
        assert_eq!(ok.len(), 2);
        assert_eq!(ok[1].1, vec![1.0]);
    }

    #[test]
    fn convergence_improves_with_realizations() {
        let p = small(100, 0.05);
        let grid = SpectralGrid::new(1.8, 2.2, 41, 5e-3).unwrap();
        let spec = EnsembleSpec {
            n_realizations: 1600,
            base_seed: 3,
            ..Default::default()
        };
        let rows = convergence_report(&spec, &p, &grid, SpectrumKind::RhoC, &[100, 1600]).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows[1].l2_distance < rows[0].l2_distance);
    }
}
