use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Center, GridSpec, Layout};

/// Ratio sigma_+/sigma_- whose two-dimensional Schmidt number is 300.
pub const DEFAULT_SIGMA_RATIO: f64 = 34.61212454147936;

/// Solve `[(r + 1/r) / 2]^2 = k2d` for `r >= 1`.
pub fn sigma_ratio_for_schmidt(k2d: f64) -> f64 {
    let k1 = k2d.sqrt();
    k1 + (k1 * k1 - 1.0).sqrt()
}

/// Double-Gaussian pair source seen through a circular aperture (the beam
/// footprint) on a phase grid.
///
/// `sigma_plus` and `sigma_minus` are in inverse momentum units of the grid
/// (momentum = pixel offset from the beam center times `pitch`). The beam
/// center must lie on the half-pixel lattice so that inversion about it
/// maps pixels onto pixels exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwinPhotonModel {
    spec: GridSpec,
    sigma_plus: f64,
    sigma_minus: f64,
    beam_center: Center,
    beam_radius: f64,
}

impl TwinPhotonModel {
    pub fn new(spec: GridSpec, sigma_plus: f64, sigma_minus: f64, beam_center: Center, beam_radius: f64) -> Result<Self> {
        if !(sigma_minus > 0.0 && sigma_plus > sigma_minus && sigma_plus.is_finite()) {
            return Err(Error::config(format!(
                "need sigma_plus > sigma_minus > 0, got {sigma_plus} and {sigma_minus}"
            )));
        }
        if !(beam_radius > 0.0 && beam_radius.is_finite()) {
            return Err(Error::config(format!("beam radius must be positive, got {beam_radius}")));
        }
        let on_half_lattice = |v: f64| (2.0 * v).fract() == 0.0;
        if !beam_center.is_finite() || !on_half_lattice(beam_center.cx) || !on_half_lattice(beam_center.cy) {
            return Err(Error::config(format!(
                "beam center ({}, {}) must be a multiple of half a pixel",
                beam_center.cx, beam_center.cy
            )));
        }
        let x_ok = beam_center.cx - beam_radius >= 0.0 && beam_center.cx + beam_radius <= (spec.cols() - 1) as f64;
        let y_ok = match spec.layout() {
            Layout::Square => {
                beam_center.cy - beam_radius >= 0.0 && beam_center.cy + beam_radius <= (spec.rows() - 1) as f64
            }
            Layout::Line => beam_center.cy == 0.0,
        };
        if !(x_ok && y_ok) {
            return Err(Error::config(format!(
                "beam of radius {beam_radius} at ({}, {}) does not fit the grid",
                beam_center.cx, beam_center.cy
            )));
        }
        Ok(TwinPhotonModel {
            spec,
            sigma_plus,
            sigma_minus,
            beam_center,
            beam_radius,
        })
    }

    /// Beam centered on the grid, pump envelope `exp(-2 k^2 sigma_-^2)` at 1/e on
    /// the beam edge, and `sigma_plus = ratio * sigma_minus`.
    pub fn standard(spec: GridSpec, beam_radius: f64, ratio: f64) -> Result<Self> {
        let sigma_minus = 1.0 / (std::f64::consts::SQRT_2 * beam_radius * spec.pitch());
        Self::new(spec, ratio * sigma_minus, sigma_minus, spec.midpoint(), beam_radius)
    }

    pub fn with_beam_center(&self, c: Center) -> Result<Self> {
        Self::new(self.spec, self.sigma_plus, self.sigma_minus, c, self.beam_radius)
    }

    pub fn with_sigma_plus(&self, sigma_plus: f64) -> Result<Self> {
        Self::new(self.spec, sigma_plus, self.sigma_minus, self.beam_center, self.beam_radius)
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn sigma_plus(&self) -> f64 {
        self.sigma_plus
    }

    pub fn sigma_minus(&self) -> f64 {
        self.sigma_minus
    }

    pub fn beam_center(&self) -> Center {
        self.beam_center
    }

    pub fn beam_radius(&self) -> f64 {
        self.beam_radius
    }

    /// Momentum of a pixel relative to the beam center.
    pub fn momentum(&self, row: usize, col: usize) -> (f64, f64) {
        let p = self.spec.pitch();
        (
            (col as f64 - self.beam_center.cx) * p,
            (row as f64 - self.beam_center.cy) * p,
        )
    }

    pub fn in_beam(&self, row: usize, col: usize) -> bool {
        let dx = col as f64 - self.beam_center.cx;
        let dy = row as f64 - self.beam_center.cy;
        dx * dx + dy * dy <= self.beam_radius * self.beam_radius
    }

    /// Row-major `(row, col)` list of pixels inside the beam.
    pub fn beam_pixels(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for row in 0..self.spec.rows() {
            for col in 0..self.spec.cols() {
                if self.in_beam(row, col) {
                    out.push((row, col));
                }
            }
        }
        out
    }

    /// `[(s + 1/s) / 2]^2` with `s = sigma_plus / sigma_minus`.
    pub fn schmidt_number_2d(&self) -> f64 {
        let s = self.sigma_plus / self.sigma_minus;
        let k1 = (s + 1.0 / s) / 2.0;
        k1 * k1
    }

    /// 1/e radius of the coincidence envelope `exp(-x^2 / sigma_+^2)` seen when
    /// both detectors move together in the detector plane.
    pub fn detector_beam_radius(&self) -> f64 {
        self.sigma_plus
    }
}

/// Detector pair placement and rate calibration.
///
/// `x1`, `x2` are detector-plane positions in units conjugate to the grid
/// momentum (a phase `k . x` is in radians).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionModel {
    pub x1: Center,
    pub x2: Center,
    /// Expected coincidence counts per second at unit rate.
    pub kappa: f64,
    pub t_int: f64,
    pub t_final: f64,
}

impl DetectionModel {
    pub fn new(x1: Center, x2: Center, kappa: f64, t_int: f64, t_final: f64) -> Result<Self> {
        let d = DetectionModel { x1, x2, kappa, t_int, t_final };
        d.validate()?;
        Ok(d)
    }

    /// Both detectors on the beam axis.
    pub fn on_axis(kappa: f64, t_int: f64, t_final: f64) -> Result<Self> {
        Self::new(Center::new(0.0, 0.0), Center::new(0.0, 0.0), kappa, t_int, t_final)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("kappa", self.kappa), ("t_int", self.t_int), ("t_final", self.t_final)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(format!("{name} must be positive, got {v}")));
            }
        }
        if !self.x1.is_finite() || !self.x2.is_finite() {
            return Err(Error::config("detector positions must be finite"));
        }
        Ok(())
    }

    pub fn with_t_int(&self, t_int: f64) -> Result<Self> {
        Self::new(self.x1, self.x2, self.kappa, t_int, self.t_final)
    }

    /// Difference coordinate `x1 - x2`.
    pub fn separation(&self) -> (f64, f64) {
        (self.x1.cx - self.x2.cx, self.x1.cy - self.x2.cy)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schmidt_ratio_round_trip() {
        let r = sigma_ratio_for_schmidt(300.0);
        assert!((r - DEFAULT_SIGMA_RATIO).abs() < 1e-9);
        let spec = GridSpec::new(96, 1.0).unwrap();
        let m = TwinPhotonModel::standard(spec, 40.0, r).unwrap();
        assert!((m.schmidt_number_2d() - 300.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_models() {
        let spec = GridSpec::new(96, 1.0).unwrap();
        let c = spec.midpoint();
        assert!(TwinPhotonModel::new(spec, 0.1, 0.2, c, 40.0).is_err());
        assert!(TwinPhotonModel::new(spec, 1.0, 0.0, c, 40.0).is_err());
        assert!(TwinPhotonModel::new(spec, 1.0, 0.1, c, 48.0).is_err());
        assert!(TwinPhotonModel::new(spec, 1.0, 0.1, Center::new(47.3, 47.5), 40.0).is_err());
        assert!(TwinPhotonModel::new(spec, 1.0, 0.1, Center::new(47.0, 47.5), 40.0).is_ok());
        let line = GridSpec::line(64, 1.0).unwrap();
        assert!(TwinPhotonModel::new(line, 1.0, 0.1, Center::new(31.5, 1.0), 20.0).is_err());
        assert!(TwinPhotonModel::new(line, 1.0, 0.1, line.midpoint(), 20.0).is_ok());
    }

    #[test]
    fn detection_validation() {
        assert!(DetectionModel::on_axis(50.0, 1.0, 50.0).is_ok());
        assert!(DetectionModel::on_axis(0.0, 1.0, 50.0).is_err());
        assert!(DetectionModel::on_axis(50.0, -1.0, 50.0).is_err());
        assert!(DetectionModel::on_axis(50.0, 1.0, 0.0).is_err());
    }
}
