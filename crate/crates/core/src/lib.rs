//! Wavefront shaping for spatially entangled photon pairs.
//!
//! A far-field phase plate scrambles the position correlations of photon
//! pairs, but only the part of the phase that is even under inversion
//! about the beam center matters: the odd part adds equal and opposite
//! phases to the two photons. This crate simulates that physics and the
//! genetic optimizers that exploit it.
//!
//! - [`grid`]: phase screens, parity split, coma patterns, genome expansion.
//! - [`genome`]: super-pixel genomes and their inversion orbits.
//! - [`physics`]: coincidence rates (delta model, finite-sigma model,
//!   advanced-wave path), Poisson counts, EMCCD frames, contrast.
//! - [`optim`]: GA and symmetrized GA over noisy coincidence feedback.
//! - [`center`]: locating the beam center with odd coma scans.
//! - [`harness`]: configured experiments, statistics and output files.
//!
//! Runnable walkthroughs live in `examples/`.

pub mod center;
pub mod error;
pub mod genome;
pub mod grid;
pub mod harness;
pub mod optim;
pub mod physics;
pub mod rng;

pub use error::{Error, Result};
pub use genome::{free_parameter_count, SlmGenome, Symmetry};
pub use grid::{expand_genome, make_screen, parity_decompose, zernike_screen, Center, GridSpec, Layout, PhaseScreen, ZernikeKind};
pub use rng::Stream;
