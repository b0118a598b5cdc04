use num_complex::Complex64;

use super::model::TwinPhotonModel;
use crate::error::{Error, Result};
use crate::grid::{Center, GridSpec, Layout, PhaseScreen};

/// Largest line grid accepted by the finite-sigma model.
pub const FULL_MAX_LINE: usize = 512;
/// Largest square grid accepted by the finite-sigma model.
pub const FULL_MAX_SQUARE: usize = 48;

#[derive(Debug, Clone, Copy)]
struct BeamPixel {
    index: usize,
    mirror: usize,
    kx: f64,
    ky: f64,
    weight: f64,
}

/// Precomputed geometry for the delta-correlated rate
///
/// `R(dx) = |sum_k exp(i k.dx) exp(i(phi(k) + phi(-k))) exp(-2|k|^2 sigma_-^2)|^2 / Z`
///
/// over the pixels of the beam, with `-k` the inversion about the beam
/// center and `Z` the flat-phase value at `dx = 0`.
#[derive(Debug, Clone)]
pub struct DeltaKernel {
    spec: GridSpec,
    pixels: Vec<BeamPixel>,
    norm: f64,
}

impl DeltaKernel {
    pub fn new(model: &TwinPhotonModel) -> Self {
        let spec = *model.spec();
        let c = model.beam_center();
        let s2 = model.sigma_minus() * model.sigma_minus();
        let pixels: Vec<BeamPixel> = model
            .beam_pixels()
            .into_iter()
            .map(|(row, col)| {
                let (kx, ky) = model.momentum(row, col);
                BeamPixel {
                    index: spec.index(row, col),
                    mirror: spec.mirror(row, col, c).expect("beam disk is symmetric and on the grid"),
                    kx,
                    ky,
                    weight: (-2.0 * (kx * kx + ky * ky) * s2).exp(),
                }
            })
            .collect();
        let total: f64 = pixels.iter().map(|p| p.weight).sum();
        DeltaKernel {
            spec,
            pixels,
            norm: total * total,
        }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn pixel_count(&self) -> usize {
        self.pixels.len()
    }

    /// Rate for a phase screen on the model grid.
    pub fn rate(&self, phase: &PhaseScreen, dx: (f64, f64)) -> f64 {
        assert_eq!(phase.spec(), &self.spec, "phase screen is not on the model grid");
        let v = phase.values();
        self.rate_with(|i| v[i], dx)
    }

    /// Rate for a phase given as a function of linear pixel index. Only
    /// pixels in the beam and their mirrors are queried.
    pub fn rate_with(&self, phase: impl Fn(usize) -> f64, dx: (f64, f64)) -> f64 {
        let (mut re, mut im) = (0.0, 0.0);
        for p in &self.pixels {
            let arg = p.kx * dx.0 + p.ky * dx.1 + (phase(p.index) + phase(p.mirror));
            let (s, c) = arg.sin_cos();
            re += p.weight * c;
            im += p.weight * s;
        }
        (re * re + im * im) / self.norm
    }
}

pub fn rate_delta(model: &TwinPhotonModel, total_phase: &PhaseScreen, dx: (f64, f64)) -> f64 {
    DeltaKernel::new(model).rate(total_phase, dx)
}

fn check_cap(spec: &GridSpec) -> Result<()> {
    let (limit, shape) = match spec.layout() {
        Layout::Line => (FULL_MAX_LINE, "line"),
        Layout::Square => (FULL_MAX_SQUARE, "square"),
    };
    if spec.n() > limit {
        return Err(Error::PhysicsCap(format!(
            "finite-sigma model is capped at n = {limit} for {shape} grids (got {}); use the delta model or a smaller grid",
            spec.n()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy)]
struct Mode {
    index: usize,
    kx: f64,
    ky: f64,
}

fn beam_modes(model: &TwinPhotonModel) -> Vec<Mode> {
    model
        .beam_pixels()
        .into_iter()
        .map(|(row, col)| {
            let (kx, ky) = model.momentum(row, col);
            Mode {
                index: model.spec().index(row, col),
                kx,
                ky,
            }
        })
        .collect()
}

fn pair_amplitude(model: &TwinPhotonModel, a: &Mode, b: &Mode) -> f64 {
    let (sx, sy) = (a.kx + b.kx, a.ky + b.ky);
    let (dx, dy) = (a.kx - b.kx, a.ky - b.ky);
    let sp = model.sigma_plus();
    let sm = model.sigma_minus();
    (-(sx * sx + sy * sy) * sp * sp / 2.0 - (dx * dx + dy * dy) * sm * sm / 2.0).exp()
}

/// Finite-sigma coincidence rate for detectors at fixed positions, as the
/// bilinear form `|v^T M v|^2 / Z` with `v_k = exp(i phi(k))`.
#[derive(Debug, Clone)]
pub struct FullKernel {
    spec: GridSpec,
    modes: Vec<Mode>,
    matrix: Vec<Complex64>,
    norm: f64,
}

impl FullKernel {
    pub fn new(model: &TwinPhotonModel, x1: Center, x2: Center) -> Result<Self> {
        check_cap(model.spec())?;
        let modes = beam_modes(model);
        let n = modes.len();
        let mut matrix = Vec::with_capacity(n * n);
        let mut axis_sum = 0.0;
        for a in &modes {
            for b in &modes {
                let amp = pair_amplitude(model, a, b);
                axis_sum += amp;
                let arg = a.kx * x1.cx + a.ky * x1.cy + b.kx * x2.cx + b.ky * x2.cy;
                matrix.push(Complex64::from_polar(amp, arg));
            }
        }
        Ok(FullKernel {
            spec: *model.spec(),
            modes,
            matrix,
            norm: axis_sum * axis_sum,
        })
    }

    pub fn rate(&self, phase: &PhaseScreen) -> f64 {
        assert_eq!(phase.spec(), &self.spec, "phase screen is not on the model grid");
        let values = phase.values();
        let v: Vec<Complex64> = self
            .modes
            .iter()
            .map(|m| Complex64::from_polar(1.0, values[m.index]))
            .collect();
        let n = v.len();
        let mut amp = Complex64::new(0.0, 0.0);
        for (a, row) in self.matrix.chunks_exact(n).enumerate() {
            let inner: Complex64 = row.iter().zip(&v).map(|(m, vb)| m * vb).sum();
            amp += v[a] * inner;
        }
        amp.norm_sqr() / self.norm
    }
}

/// Coincidence rate of the double-Gaussian state with finite sigma_+.
/// Normalized to 1 for a flat phase with both detectors on the beam axis.
pub fn rate_full(model: &TwinPhotonModel, total_phase: &PhaseScreen, x1: Center, x2: Center) -> Result<f64> {
    Ok(FullKernel::new(model, x1, x2)?.rate(total_phase))
}

/// Singles rate at one detector: `sum_k2 |sum_k1 psi(k1,k2) exp(i k1.x) exp(i phi(k1))|^2`,
/// normalized to the flat-phase on-axis value.
pub fn single_rate(model: &TwinPhotonModel, phase: &PhaseScreen, x: Center) -> Result<f64> {
    check_cap(model.spec())?;
    let modes = beam_modes(model);
    let values = phase.values();
    let mut total = 0.0;
    let mut reference = 0.0;
    for b in &modes {
        let mut amp = Complex64::new(0.0, 0.0);
        let mut amp0 = 0.0;
        for a in &modes {
            let psi = pair_amplitude(model, a, b);
            amp += Complex64::from_polar(psi, a.kx * x.cx + a.ky * x.cy + values[a.index]);
            amp0 += psi;
        }
        total += amp.norm_sqr();
        reference += amp0 * amp0;
    }
    Ok(total / reference)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_screen, parity_decompose, zernike_screen, ZernikeKind};
    use crate::physics::{make_diffuser, DiffuserSpec};
    use std::f64::consts::PI;

    fn model() -> TwinPhotonModel {
        TwinPhotonModel::standard(GridSpec::new(64, 1.0).unwrap(), 24.0, 34.6).unwrap()
    }

    #[test]
    fn flat_phase_is_unity() {
        let m = model();
        let zero = make_screen(*m.spec(), 0.0).unwrap();
        assert_eq!(rate_delta(&m, &zero, (0.0, 0.0)), 1.0);
        let pi = make_screen(*m.spec(), PI).unwrap();
        assert!((rate_delta(&m, &pi, (0.0, 0.0)) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn coma_about_beam_center_is_invisible() {
        let m = model();
        let z = zernike_screen(*m.spec(), ZernikeKind::ComaX, 20.0, m.beam_center(), 6.0).unwrap();
        assert!((rate_delta(&m, &z, (0.0, 0.0)) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn rate_bounded_by_unity() {
        let m = model();
        let d = make_diffuser(&m, &DiffuserSpec::new(3, 8.0, 2.5).unwrap());
        let k = DeltaKernel::new(&m);
        for i in 0..20 {
            let dx = (0.01 * i as f64, -0.02 * i as f64);
            let r = k.rate(&d, dx);
            assert!((0.0..=1.0 + 1e-12).contains(&r));
        }
    }

    #[test]
    fn full_model_cap() {
        let big = TwinPhotonModel::standard(GridSpec::new(64, 1.0).unwrap(), 20.0, 34.6).unwrap();
        let zero = make_screen(*big.spec(), 0.0).unwrap();
        let o = Center::new(0.0, 0.0);
        assert!(matches!(rate_full(&big, &zero, o, o), Err(Error::PhysicsCap(_))));
        let line = TwinPhotonModel::standard(GridSpec::line(1024, 1.0).unwrap(), 40.0, 34.6).unwrap();
        let zero = make_screen(*line.spec(), 0.0).unwrap();
        assert!(matches!(rate_full(&line, &zero, o, o), Err(Error::PhysicsCap(_))));
    }

    #[test]
    fn full_model_flat_axis_is_unity() {
        let m = TwinPhotonModel::standard(GridSpec::new(24, 1.0).unwrap(), 8.0, 20.0).unwrap();
        let zero = make_screen(*m.spec(), 0.0).unwrap();
        let o = Center::new(0.0, 0.0);
        assert!((rate_full(&m, &zero, o, o).unwrap() - 1.0).abs() < 1e-12);
        assert!((single_rate(&m, &zero, o).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn off_axis_singles_drop() {
        let m = TwinPhotonModel::standard(GridSpec::line(128, 1.0).unwrap(), 40.0, 34.6).unwrap();
        let zero = make_screen(*m.spec(), 0.0).unwrap();
        let shift = Center::new(m.detector_beam_radius() / 2.0, 0.0);
        let on = single_rate(&m, &zero, Center::new(0.0, 0.0)).unwrap();
        let off = single_rate(&m, &zero, shift).unwrap();
        assert!(off < on);
        let d = parity_decompose(&zero, m.beam_center()).unwrap().0;
        assert!(rate_full(&m, &d, shift, shift).unwrap() < 1.0);
    }
}
