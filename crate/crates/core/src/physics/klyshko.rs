//! Advanced-wave evaluation of the delta-correlated rate.
//!
//! Detector 1 is replaced by a source: a plane-wave spectrum crosses the
//! phase plane, reflects off the crystal (momentum inversion, filtered by
//! the pump envelope and the beam aperture), crosses the phase plane a
//! second time and is projected onto detector 2. The fields are carried as
//! complex arrays over the whole grid, so this path shares nothing with
//! [`super::DeltaKernel`] beyond the model geometry.

use num_complex::Complex64;

use super::model::TwinPhotonModel;
use crate::grid::PhaseScreen;

fn propagate(model: &TwinPhotonModel, phase: &[f64], x1: (f64, f64), x2: (f64, f64)) -> Complex64 {
    let spec = model.spec();
    let (rows, cols) = (spec.rows(), spec.cols());
    let s2 = model.sigma_minus() * model.sigma_minus();

    // Launch from detector 1 and cross the phase plane.
    let mut launched = vec![Complex64::new(0.0, 0.0); spec.len()];
    for row in 0..rows {
        for col in 0..cols {
            let (kx, ky) = model.momentum(row, col);
            let i = spec.index(row, col);
            launched[i] = Complex64::from_polar(1.0, -(kx * x1.0 + ky * x1.1)) * Complex64::from_polar(1.0, phase[i]);
        }
    }

    // Crystal mirror, then second pass through the phase plane.
    let c = model.beam_center();
    let mut returned = vec![Complex64::new(0.0, 0.0); spec.len()];
    for row in 0..rows {
        for col in 0..cols {
            if !model.in_beam(row, col) {
                continue;
            }
            let (kx, ky) = model.momentum(row, col);
            let filter = (-2.0 * (kx * kx + ky * ky) * s2).exp();
            let i = spec.index(row, col);
            let src = spec.mirror(row, col, c).expect("beam disk mirrors onto the grid");
            returned[i] = launched[src] * filter * Complex64::from_polar(1.0, phase[i]);
        }
    }

    // Project onto detector 2.
    let mut amp = Complex64::new(0.0, 0.0);
    for row in 0..rows {
        for col in 0..cols {
            let (kx, ky) = model.momentum(row, col);
            amp += returned[spec.index(row, col)] * Complex64::from_polar(1.0, -(kx * x2.0 + ky * x2.1));
        }
    }
    amp
}

/// Detected intensity at detector 2 in the advanced-wave picture,
/// normalized to the flat-phase value at zero separation.
pub fn rate_klyshko(model: &TwinPhotonModel, total_phase: &PhaseScreen, dx: (f64, f64)) -> f64 {
    assert_eq!(total_phase.spec(), model.spec(), "phase screen is not on the model grid");
    let flat = vec![0.0; model.spec().len()];
    let reference = propagate(model, &flat, (0.0, 0.0), (0.0, 0.0)).norm_sqr();
    propagate(model, total_phase.values(), dx, (0.0, 0.0)).norm_sqr() / reference
}
