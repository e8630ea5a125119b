//! Command-line front end.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::ensemble::{ensemble_average, EnsembleSpec, DEFAULT_REALIZATIONS};
use crate::error::{invalid, Error, Result};
use crate::model::{presets, CouplingModel, ModelParams, SpectralGrid, DEFAULT_ETA};
use crate::output::{
    fmt_f64, grid_metadata, manifest_path, params_metadata, poles_csv, read_file, spectrum_csv,
    write_file, TOOL_NAME, TOOL_VERSION,
};
use crate::poles::{
    closed_residues, complex_poles_with_lifetimes, find_poles, polariton_energies_closed,
    polariton_energies_second_order, width_estimate,
};
use crate::selftest;
use crate::spectra::{spectrum, SpectralSource, SpectrumKind};

pub const THREADS_ENV: &str = "POLARITON_LAB_THREADS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_SELF_TEST: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "polariton-lab", version, about = "Spectra and polariton poles of molecules coupled to a cavity mode")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Analytic density of states (or any spectrum kind) on a grid.
    Dos(RunArgs),
    /// Analytic absorption spectrum.
    Absorption(RunArgs),
    /// Real poles, closed-form energies and widths.
    Poles(RunArgs),
    /// Disorder-ensemble mean and standard error of a spectrum.
    Ensemble(RunArgs),
    /// One analytic spectrum per value of a swept parameter.
    Sweep(SweepArgs),
    /// Run the built-in consistency checks.
    SelfTest {
        #[arg(long, hide = true)]
        corrupt_dawson: bool,
    },
    /// Re-run the configuration stored in a manifest.
    Replay {
        manifest: PathBuf,
        /// Write to this path instead of the recorded one.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum KindArg {
    RhoC,
    RhoMol,
    RhoT,
    DeltaRhoM,
    DeltaRhoT,
    Alpha,
}

impl From<KindArg> for SpectrumKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::RhoC => SpectrumKind::RhoC,
            KindArg::RhoMol => SpectrumKind::RhoMol,
            KindArg::RhoT => SpectrumKind::RhoT,
            KindArg::DeltaRhoM => SpectrumKind::DeltaRhoM,
            KindArg::DeltaRhoT => SpectrumKind::DeltaRhoT,
            KindArg::Alpha => SpectrumKind::Absorption,
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// Flat key=value file; command-line flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub eps_c: Option<f64>,
    #[arg(long)]
    pub eps_a: Option<f64>,
    /// Disorder width in eV.
    #[arg(long, conflicts_with = "sigma_rel")]
    pub sigma: Option<f64>,
    /// Disorder width as a fraction of eps_a.
    #[arg(long)]
    pub sigma_rel: Option<f64>,
    #[arg(long)]
    pub v_tilde: Option<f64>,
    #[arg(long)]
    pub density: Option<f64>,
    #[arg(long)]
    pub n_molecules: Option<usize>,
    #[arg(long)]
    pub gamma_a: Option<f64>,
    #[arg(long)]
    pub gamma_c: Option<f64>,
    /// Transition dipole in Debye; switches absorption to absolute units.
    #[arg(long)]
    pub mu_debye: Option<f64>,
    #[arg(long)]
    pub omega_min: Option<f64>,
    #[arg(long)]
    pub omega_max: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub realizations: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// 1: uniform coupling, 2: orientation and position dependent.
    #[arg(long)]
    pub model: Option<u8>,
    /// Oriented couplings without the sqrt(6) renormalization.
    #[arg(long)]
    pub raw_coupling: bool,
    #[arg(long, value_enum)]
    pub kind: Option<KindArg>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum SweepVar {
    Sigma,
    OmegaRabi,
    Detuning,
}

impl SweepVar {
    fn name(self) -> &'static str {
        match self {
            SweepVar::Sigma => "sigma",
            SweepVar::OmegaRabi => "omega_rabi",
            SweepVar::Detuning => "detuning",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long, value_enum)]
    pub var: SweepVar,
    #[arg(long, value_delimiter = ',', required = true)]
    pub values: Vec<f64>,
    /// Values are fractions of eps_a (sigma, detuning).
    #[arg(long)]
    pub relative: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Dos,
    Absorption,
    Poles,
    Ensemble,
    Sweep,
}

impl Scenario {
    fn name(self) -> &'static str {
        match self {
            Scenario::Dos => "dos",
            Scenario::Absorption => "absorption",
            Scenario::Poles => "poles",
            Scenario::Ensemble => "ensemble",
            Scenario::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub var: SweepVar,
    pub values: Vec<f64>,
    pub relative: bool,
}

/// Everything needed to reproduce one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub params: ModelParams,
    pub grid: SpectralGrid,
    pub kind: SpectrumKind,
    pub model: CouplingModel,
    pub ensemble: Option<EnsembleSpec>,
    pub sweep: Option<SweepSpec>,
    pub output_path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config: RunConfig,
    pub files: Vec<PathBuf>,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.grid.validate()?;
        match self.scenario {
            Scenario::Sweep if self.sweep.is_none() => {
                return Err(invalid("sweep scenario requires a sweep variable"))
            }
            Scenario::Ensemble if self.ensemble.is_none() => {
                return Err(invalid("ensemble scenario requires an ensemble spec"))
            }
            _ => {}
        }
        if let Some(e) = &self.ensemble {
            e.validate()?;
        }
        if let Some(s) = &self.sweep {
            if s.values.is_empty() {
                return Err(invalid("sweep requires at least one value"));
            }
        }
        Ok(())
    }
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| invalid(format!("config key '{key}': cannot parse '{value}'")))
}

/// Parse a flat `key = value` file. Keys may use '-' or '_'; '#' starts a
/// comment.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| invalid(format!("config line {}: expected key=value", lineno + 1)))?;
        map.insert(k.trim().replace('-', "_"), v.trim().to_string());
    }
    Ok(map)
}

/// Fill unset fields of `args` from a parsed config file.
pub fn merge_config(args: &mut RunArgs, map: &BTreeMap<String, String>) -> Result<()> {
    let sigma_from_flags = args.sigma.is_some() || args.sigma_rel.is_some();
    for (k, v) in map {
        match k.as_str() {
            "eps_c" => set(&mut args.eps_c, k, v)?,
            "eps_a" => set(&mut args.eps_a, k, v)?,
            "sigma" if !sigma_from_flags => set(&mut args.sigma, k, v)?,
            "sigma_rel" if !sigma_from_flags => set(&mut args.sigma_rel, k, v)?,
            "sigma" | "sigma_rel" => {}
            "v_tilde" => set(&mut args.v_tilde, k, v)?,
            "density" => set(&mut args.density, k, v)?,
            "n_molecules" => set(&mut args.n_molecules, k, v)?,
            "gamma_a" => set(&mut args.gamma_a, k, v)?,
            "gamma_c" => set(&mut args.gamma_c, k, v)?,
            "mu_debye" => set(&mut args.mu_debye, k, v)?,
            "omega_min" => set(&mut args.omega_min, k, v)?,
            "omega_max" => set(&mut args.omega_max, k, v)?,
            "points" => set(&mut args.points, k, v)?,
            "eta" => set(&mut args.eta, k, v)?,
            "realizations" => set(&mut args.realizations, k, v)?,
            "seed" => set(&mut args.seed, k, v)?,
            "model" => set(&mut args.model, k, v)?,
            "raw_coupling" => {
                if !args.raw_coupling {
                    args.raw_coupling = parse_value(k, v)?;
                }
            }
            "kind" => {
                if args.kind.is_none() {
                    args.kind = Some(
                        KindArg::from_str(v, true)
                            .map_err(|_| invalid(format!("config key 'kind': unknown value '{v}'")))?,
                    );
                }
            }
            "out" => {
                if args.out.is_none() {
                    args.out = Some(PathBuf::from(v));
                }
            }
            other => return Err(invalid(format!("unknown config key '{other}'"))),
        }
    }
    if args.sigma.is_some() && args.sigma_rel.is_some() {
        return Err(invalid("sigma and sigma_rel are mutually exclusive"));
    }
    Ok(())
}

fn set<T: std::str::FromStr>(slot: &mut Option<T>, key: &str, value: &str) -> Result<()> {
    if slot.is_none() {
        *slot = Some(parse_value(key, value)?);
    }
    Ok(())
}

/// Resolve flags (plus config file) into a run configuration.
pub fn resolve(scenario: Scenario, args: &RunArgs, sweep: Option<SweepSpec>) -> Result<RunConfig> {
    let mut args = args.clone();
    if let Some(path) = &args.config {
        let map = parse_config(&read_file(path)?)?;
        merge_config(&mut args, &map)?;
    }
    let base = presets::simulated_density(0.05);
    let eps_a = args.eps_a.unwrap_or(base.eps_a);
    let sigma = match (args.sigma, args.sigma_rel) {
        (Some(s), _) => s,
        (None, Some(r)) => r * eps_a,
        (None, None) => base.sigma,
    };
    let params = ModelParams {
        eps_c: args.eps_c.unwrap_or(base.eps_c),
        eps_a,
        sigma,
        v_tilde: args.v_tilde.unwrap_or(base.v_tilde),
        number_density: args.density.unwrap_or(base.number_density),
        n_molecules: args.n_molecules.unwrap_or(base.n_molecules),
        gamma_a: args.gamma_a.unwrap_or(0.0),
        gamma_c: args.gamma_c.unwrap_or(0.0),
        mu_eg: args.mu_debye,
    };
    let centre = 0.5 * (params.eps_a + params.eps_c);
    let grid = SpectralGrid {
        omega_min: args.omega_min.unwrap_or(centre - 0.5),
        omega_max: args.omega_max.unwrap_or(centre + 0.5),
        n_points: args.points.unwrap_or(1001),
        eta: args.eta.unwrap_or(DEFAULT_ETA),
    };
    let model = CouplingModel::from_index(args.model.unwrap_or(1))?;
    let kind = match scenario {
        Scenario::Absorption => SpectrumKind::Absorption,
        _ => args.kind.map_or(SpectrumKind::RhoC, SpectrumKind::from),
    };
    let ensemble = (scenario == Scenario::Ensemble).then(|| EnsembleSpec {
        n_realizations: args.realizations.unwrap_or(DEFAULT_REALIZATIONS),
        base_seed: args.seed.unwrap_or(0),
        model,
        renormalized: !args.raw_coupling,
    });
    let output_path = args
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{}.csv", scenario.name())));
    let config = RunConfig {
        scenario,
        params,
        grid,
        kind,
        model,
        ensemble,
        sweep,
        output_path,
    };
    config.validate()?;
    Ok(config)
}

fn base_metadata(config: &RunConfig) -> Vec<(String, String)> {
    let mut meta = vec![
        ("scenario".to_string(), config.scenario.name().to_string()),
        ("kind".to_string(), config.kind.name().to_string()),
        ("model".to_string(), config.model.index().to_string()),
        (
            "units".to_string(),
            match (config.kind, config.params.mu_eg) {
                (SpectrumKind::Absorption, Some(_)) => "m^2",
                _ => "1/eV",
            }
            .to_string(),
        ),
    ];
    meta.extend(params_metadata(&config.params));
    meta.extend(grid_metadata(&config.grid));
    meta
}

fn sweep_path(out: &Path, var: SweepVar, index: usize) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "sweep".to_string());
    let ext = out
        .extension()
        .map(|e| e.to_string_lossy().into_owned())
        .unwrap_or_else(|| "csv".to_string());
    out.with_file_name(format!("{stem}_{}_{index}.{ext}", var.name()))
}

fn swept_params(params: &ModelParams, sweep: &SweepSpec, value: f64) -> Result<ModelParams> {
    let scale = if sweep.relative { params.eps_a } else { 1.0 };
    Ok(match sweep.var {
        SweepVar::Sigma => params.with_sigma(value * scale),
        SweepVar::OmegaRabi => params.with_rabi_splitting(value)?,
        SweepVar::Detuning => ModelParams {
            eps_c: params.eps_a + value * scale,
            ..*params
        },
    })
}

fn poles_file(config: &RunConfig) -> Result<String> {
    let p = &config.params;
    let mut meta = base_metadata(config);
    let (up, down) = polariton_energies_closed(p);
    let (r_up, r_down) = closed_residues(p);
    let second = polariton_energies_second_order(p);
    meta.push(("closed_plus_eV".into(), fmt_f64(up)));
    meta.push(("closed_minus_eV".into(), fmt_f64(down)));
    meta.push(("closed_residue_plus".into(), fmt_f64(r_up)));
    meta.push(("closed_residue_minus".into(), fmt_f64(r_down)));
    meta.push(("second_order_plus_eV".into(), fmt_f64(second.eps_plus)));
    meta.push(("second_order_minus_eV".into(), fmt_f64(second.eps_minus)));
    meta.push(("second_order_gap_eV".into(), fmt_f64(second.gap)));
    if let Some(w) = &second.warning {
        meta.push(("warning".into(), w.clone()));
    }
    if p.gamma_a > 0.0 || p.gamma_c > 0.0 {
        let (cu, cd) = complex_poles_with_lifetimes(p)?;
        meta.push(("lifetime_plus_re_eV".into(), fmt_f64(cu.re)));
        meta.push(("lifetime_plus_im_eV".into(), fmt_f64(cu.im)));
        meta.push(("lifetime_minus_re_eV".into(), fmt_f64(cd.re)));
        meta.push(("lifetime_minus_im_eV".into(), fmt_f64(cd.im)));
    }
    let mut rows: Vec<(f64, &str, f64, f64, f64)> = Vec::new();
    if p.sigma > 0.0 {
        let report = find_poles(p)?;
        meta.push(("existence_ratio".into(), fmt_f64(report.existence_ratio)));
        meta.push(("pair_found".into(), report.pair_found.to_string()));
        meta.push((
            "gap_eV".into(),
            report.gap.map_or_else(|| "none".to_string(), fmt_f64),
        ));
        meta.push(("width_estimate_eV".into(), fmt_f64(width_estimate(p)?)));
        for pole in &report.poles {
            let kind = match pole.kind {
                crate::poles::PoleKind::Polaritonic => "polaritonic",
                crate::poles::PoleKind::Virtual => "virtual",
            };
            rows.push((pole.energy, kind, pole.residue, pole.local_residue, pole.width));
        }
    } else {
        meta.push(("existence_ratio".into(), "inf".into()));
        meta.push(("pair_found".into(), "true".into()));
        meta.push(("gap_eV".into(), fmt_f64(up - down)));
        rows.push((down, "polaritonic", r_down, r_down, 0.0));
        rows.push((up, "polaritonic", r_up, r_up, 0.0));
    }
    Ok(poles_csv(&meta, &rows))
}

/// Execute a configuration, writing its files and manifest. Returns the
/// data files written.
pub fn run(config: &RunConfig) -> Result<Vec<PathBuf>> {
    config.validate()?;
    let out = &config.output_path;
    let mut files = Vec::new();
    match config.scenario {
        Scenario::Dos | Scenario::Absorption => {
            let s = spectrum(config.kind, &config.grid, SpectralSource::Analytic, &config.params, config.model)?;
            write_file(out, &spectrum_csv(&base_metadata(config), &s.omega, &s.value, None))?;
            files.push(out.clone());
        }
        Scenario::Poles => {
            write_file(out, &poles_file(config)?)?;
            files.push(out.clone());
        }
        Scenario::Ensemble => {
            let spec = config.ensemble.expect("validated");
            let e = ensemble_average(&spec, &config.params, &config.grid, config.kind)?;
            let mut meta = base_metadata(config);
            meta.push(("realizations".into(), spec.n_realizations.to_string()));
            meta.push(("seed".into(), spec.base_seed.to_string()));
            meta.push(("renormalized".into(), spec.renormalized.to_string()));
            write_file(out, &spectrum_csv(&meta, &e.omega, &e.mean, Some(&e.stderr)))?;
            files.push(out.clone());
        }
        Scenario::Sweep => {
            let sweep = config.sweep.as_ref().expect("validated");
            for (i, &v) in sweep.values.iter().enumerate() {
                let params = swept_params(&config.params, sweep, v)?;
                let step = RunConfig {
                    params,
                    ..config.clone()
                };
                let s = spectrum(config.kind, &config.grid, SpectralSource::Analytic, &params, config.model)?;
                let mut meta = base_metadata(&step);
                meta.push(("sweep_var".into(), sweep.var.name().to_string()));
                meta.push(("sweep_value".into(), fmt_f64(v)));
                meta.push(("sweep_relative".into(), sweep.relative.to_string()));
                let path = sweep_path(out, sweep.var, i);
                write_file(&path, &spectrum_csv(&meta, &s.omega, &s.value, None))?;
                files.push(path);
            }
        }
    }
    let manifest = Manifest {
        tool: TOOL_NAME.to_string(),
        version: TOOL_VERSION.to_string(),
        config: config.clone(),
        files: files.clone(),
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write_file(&manifest_path(out), &(json + "\n"))?;
    Ok(files)
}

pub fn replay(manifest: &Path, out: Option<PathBuf>) -> Result<Vec<PathBuf>> {
    let text = read_file(manifest)?;
    let m: Manifest = serde_json::from_str(&text)
        .map_err(|e| invalid(format!("manifest {}: {e}", manifest.display())))?;
    let mut config = m.config;
    if let Some(o) = out {
        config.output_path = o;
    }
    run(&config)
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io { .. } => EXIT_IO,
        _ => EXIT_INVALID,
    }
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| invalid(format!("{THREADS_ENV} must be a positive integer (got '{v}')")))?;
        // a pool may already exist when called twice in one process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn self_test(corrupt: bool) -> i32 {
    crate::special::set_coefficient_corruption(corrupt);
    let results = selftest::run_all();
    crate::special::set_coefficient_corruption(false);
    let mut ok = true;
    for r in &results {
        println!("{} {:<20} {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
        ok &= r.passed;
    }
    if ok {
        EXIT_OK
    } else {
        EXIT_SELF_TEST
    }
}

pub fn execute(cli: Cli) -> i32 {
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return EXIT_INVALID;
    }
    let result = match cli.command {
        Command::SelfTest { corrupt_dawson } => return self_test(corrupt_dawson),
        Command::Replay { manifest, out } => replay(&manifest, out),
        Command::Dos(a) => resolve(Scenario::Dos, &a, None).and_then(|c| run(&c)),
        Command::Absorption(a) => resolve(Scenario::Absorption, &a, None).and_then(|c| run(&c)),
        Command::Poles(a) => resolve(Scenario::Poles, &a, None).and_then(|c| run(&c)),
        Command::Ensemble(a) => resolve(Scenario::Ensemble, &a, None).and_then(|c| run(&c)),
        Command::Sweep(s) => {
            let spec = SweepSpec {
                var: s.var,
                values: s.values,
                relative: s.relative,
            };
            resolve(Scenario::Sweep, &s.run, Some(spec)).and_then(|c| run(&c))
        }
    };
    match result {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn main_entry() -> i32 {
    execute(Cli::parse())
}
