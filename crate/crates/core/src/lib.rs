//! Green's functions, densities of states, absorption spectra and polariton
//! poles for N molecules with Gaussian energetic disorder coupled to a
//! single cavity mode.
//!
//! The analytic path uses the large-N Gaussian-ensemble self-energy; the
//! ensemble path sums over sampled realizations; the oracle diagonalizes
//! the single-excitation Hamiltonian exactly.

pub mod cli;
pub mod ensemble;
pub mod error;
pub mod greens;
pub mod model;
pub mod oracle;
pub mod output;
pub mod poles;
pub mod quadrature;
pub mod selftest;
pub mod self_energy;
pub mod special;
pub mod spectra;

pub use error::{Error, Result};
pub use model::{CouplingModel, DisorderRealization, ModelParams, SpectralGrid, Spectrum};
