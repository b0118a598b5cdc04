use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::model::TwinPhotonModel;
use crate::error::{Error, Result};
use crate::grid::{Layout, PhaseScreen};
use crate::rng::Stream;

/// Random phase plate: smoothed Gaussian noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffuserSpec {
    pub seed: u64,
    /// 1/e width of the phase autocorrelation, in pixels.
    pub corr_len: f64,
    /// Pixel standard deviation of the phase, radians.
    pub phase_std: f64,
}

impl DiffuserSpec {
    pub fn new(seed: u64, corr_len: f64, phase_std: f64) -> Result<Self> {
        if !(corr_len >= 1.0 && corr_len.is_finite()) {
            return Err(Error::config(format!("diffuser corr_len must be >= 1 pixel, got {corr_len}")));
        }
        if !(phase_std >= 0.0 && phase_std.is_finite()) {
            return Err(Error::config(format!("diffuser phase_std must be >= 0, got {phase_std}")));
        }
        Ok(DiffuserSpec { seed, corr_len, phase_std })
    }
}

fn gaussian_kernel(width: f64) -> Vec<f64> {
    let half = (3.0 * width).ceil() as isize;
    (-half..=half)
        .map(|i| (-(i as f64 / width).powi(2)).exp())
        .collect()
}

fn smooth_rows(data: &[f64], rows: usize, cols: usize, kernel: &[f64]) -> Vec<f64> {
    let half = kernel.len() / 2;
    let out_cols = cols - 2 * half;
    let mut out = vec![0.0; rows * out_cols];
    for r in 0..rows {
        let line = &data[r * cols..(r + 1) * cols];
        for c in 0..out_cols {
            out[r * out_cols + c] = kernel.iter().zip(&line[c..]).map(|(k, v)| k * v).sum();
        }
    }
    out
}

fn transpose(data: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut out = vec![0.0; rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            out[c * rows + r] = data[r * cols + c];
        }
    }
    out
}

/// Smoothed random phase on the model grid, zero mean and pixel standard
/// deviation `phase_std`. Deterministic in `seed`.
///
/// White noise smoothed by `exp(-r^2 / w^2)` has autocorrelation
/// `exp(-r^2 / (2 w^2))`, so `w = corr_len / sqrt(2)` puts the 1/e point of
/// the phase autocorrelation at `corr_len`.
pub fn make_diffuser(model: &TwinPhotonModel, d: &DiffuserSpec) -> PhaseScreen {
    let spec = *model.spec();
    if d.phase_std == 0.0 {
        return PhaseScreen::from_fn(spec, |_, _| 0.0);
    }
    let width = d.corr_len / std::f64::consts::SQRT_2;
    let kernel = gaussian_kernel(width);
    let pad = kernel.len() / 2;
    let mut rng = Stream::root(d.seed).label("diffuser").rng();
    let (rows, cols) = (spec.rows(), spec.cols());

    let mut field = match spec.layout() {
        Layout::Line => {
            let noise: Vec<f64> = (0..cols + 2 * pad).map(|_| StandardNormal.sample(&mut rng)).collect();
            smooth_rows(&noise, 1, cols + 2 * pad, &kernel)
        }
        Layout::Square => {
            let (pr, pc) = (rows + 2 * pad, cols + 2 * pad);
            let noise: Vec<f64> = (0..pr * pc).map(|_| StandardNormal.sample(&mut rng)).collect();
            let along_x = smooth_rows(&noise, pr, pc, &kernel);
            let t = transpose(&along_x, pr, cols);
            let along_y = smooth_rows(&t, cols, pr, &kernel);
            transpose(&along_y, cols, rows)
        }
    };

    let n = field.len() as f64;
    let mean = field.iter().sum::<f64>() / n;
    field.iter_mut().for_each(|v| *v -= mean);
    let std = (field.iter().map(|v| v * v).sum::<f64>() / n).sqrt();
    let scale = if std > 0.0 { d.phase_std / std } else { 0.0 };
    field.iter_mut().for_each(|v| *v *= scale);
    PhaseScreen::from_values(spec, field).expect("diffuser values are finite")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    fn model(n: usize) -> TwinPhotonModel {
        TwinPhotonModel::standard(GridSpec::new(n, 1.0).unwrap(), 40.0, 34.6).unwrap()
    }

    #[test]
    fn zero_strength_is_flat() {
        let m = model(96);
        let s = make_diffuser(&m, &DiffuserSpec::new(1, 32.0, 0.0).unwrap());
        assert_eq!(s.max_abs(), 0.0);
    }

    #[test]
    fn deterministic_and_scaled() {
        let m = model(96);
        let d = DiffuserSpec::new(7, 32.0, 2.5).unwrap();
        let a = make_diffuser(&m, &d);
        assert_eq!(a, make_diffuser(&m, &d));
        let n = a.values().len() as f64;
        let mean = a.values().iter().sum::<f64>() / n;
        let std = (a.values().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        assert!(mean.abs() < 1e-12);
        assert!((std - 2.5).abs() < 1e-9);
        let other = make_diffuser(&m, &DiffuserSpec::new(8, 32.0, 2.5).unwrap());
        assert_ne!(a, other);
    }

    #[test]
    fn rejects_bad_spec() {
        assert!(DiffuserSpec::new(0, 0.5, 1.0).is_err());
        assert!(DiffuserSpec::new(0, 4.0, -1.0).is_err());
    }

    #[test]
    fn line_diffuser_has_requested_std() {
        let m = TwinPhotonModel::standard(GridSpec::line(256, 1.0).unwrap(), 40.0, 34.6).unwrap();
        let s = make_diffuser(&m, &DiffuserSpec::new(2, 32.0, 1.5).unwrap());
        let n = s.values().len() as f64;
        let std = (s.energy() / n).sqrt();
        assert!((std - 1.5).abs() < 1e-9);
    }
}
