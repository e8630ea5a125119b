//! CSV and manifest writers.
//!
//! CSV layout: a block of `# key: value` metadata lines, one header row,
//! then data rows. Floats are written with 17 significant digits and lines
//! end in LF, so identical inputs give identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{ModelParams, SpectralGrid};

pub const TOOL_NAME: &str = env!("CARGO_PKG_NAME");
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Column layout of spectrum files.
pub const SPECTRUM_SCHEMA: &str = "spectrum/v1";
/// Column layout of pole tables.
pub const POLES_SCHEMA: &str = "poles/v1";

pub const SPECTRUM_HEADER: &str = "omega_eV,value";
pub const ENSEMBLE_HEADER: &str = "omega_eV,value,stderr";
pub const POLES_HEADER: &str = "energy_eV,kind,residue,local_residue,width_eV";

/// Full-precision float formatting.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn params_metadata(params: &ModelParams) -> Vec<(String, String)> {
    let mut meta = vec![
        ("eps_c_eV".to_string(), fmt_f64(params.eps_c)),
        ("eps_a_eV".to_string(), fmt_f64(params.eps_a)),
        ("sigma_eV".to_string(), fmt_f64(params.sigma)),
        ("v_tilde".to_string(), fmt_f64(params.v_tilde)),
        ("number_density".to_string(), fmt_f64(params.number_density)),
        ("n_molecules".to_string(), params.n_molecules.to_string()),
        ("gamma_a_eV".to_string(), fmt_f64(params.gamma_a)),
        ("gamma_c_eV".to_string(), fmt_f64(params.gamma_c)),
        ("g_eV".to_string(), fmt_f64(params.g())),
    ];
    meta.push((
        "mu_debye".to_string(),
        params.mu_eg.map_or_else(|| "none".to_string(), fmt_f64),
    ));
    meta
}

pub fn grid_metadata(grid: &SpectralGrid) -> Vec<(String, String)> {
    vec![
        ("omega_min_eV".to_string(), fmt_f64(grid.omega_min)),
        ("omega_max_eV".to_string(), fmt_f64(grid.omega_max)),
        ("points".to_string(), grid.n_points.to_string()),
        ("eta_eV".to_string(), fmt_f64(grid.eta)),
    ]
}

fn header_block(schema: &str, meta: &[(String, String)]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# {TOOL_NAME} {TOOL_VERSION}");
    let _ = writeln!(out, "# schema: {schema}");
    for (k, v) in meta {
        let _ = writeln!(out, "# {k}: {v}");
    }
    out
}

/// Render a spectrum table; `stderr` adds the third column.
pub fn spectrum_csv(
    meta: &[(String, String)],
    omega: &[f64],
    value: &[f64],
    stderr: Option<&[f64]>,
) -> String {
    let mut out = header_block(SPECTRUM_SCHEMA, meta);
    match stderr {
        None => {
            out.push_str(SPECTRUM_HEADER);
            out.push('\n');
            for (w, v) in omega.iter().zip(value) {
                let _ = writeln!(out, "{},{}", fmt_f64(*w), fmt_f64(*v));
            }
        }
        Some(se) => {
            out.push_str(ENSEMBLE_HEADER);
            out.push('\n');
            for ((w, v), s) in omega.iter().zip(value).zip(se) {
                let _ = writeln!(out, "{},{},{}", fmt_f64(*w), fmt_f64(*v), fmt_f64(*s));
            }
        }
    }
    out
}

pub fn poles_csv(meta: &[(String, String)], rows: &[(f64, &str, f64, f64, f64)]) -> String {
    let mut out = header_block(POLES_SCHEMA, meta);
    out.push_str(POLES_HEADER);
    out.push('\n');
    for (e, kind, r, lr, w) in rows {
        let _ = writeln!(out, "{},{kind},{},{},{}", fmt_f64(*e), fmt_f64(*r), fmt_f64(*lr), fmt_f64(*w));
    }
    out
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|source| Error::Io {
            path: parent.display().to_string(),
            source,
        })?;
    }
    fs::write(path, contents).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Path of the manifest written next to `out`.
pub fn manifest_path(out: &Path) -> std::path::PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    name.into()
}
