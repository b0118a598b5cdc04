//! Photon-counting camera frames and the background-subtracted coincidence
//! estimator `C(d) = sum_p <A(p) B(p+d)> - <A(p)> <B(p+d)>`.

use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::{Distribution, Normal, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::contrast::CorrelationMap;
use super::model::TwinPhotonModel;
use super::rate::DeltaKernel;
use crate::error::{Error, Result};
use crate::grid::{Layout, PhaseScreen};
use crate::rng::Stream;

const MAX_DETECTOR: usize = 64;
const FRAMES_PER_TASK: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmccdSpec {
    pub n_frames: usize,
    pub mean_photons_per_pixel: f64,
    pub pairs_per_frame_mean: f64,
    /// Pixels per side of each detection channel (at most 64).
    pub detector_pixels: usize,
    /// Detector-plane extent of one pixel.
    pub pixel_pitch: f64,
    /// Half-width of the output map in pixels.
    pub map_radius: usize,
}

impl EmccdSpec {
    /// 64x64 pixels of pitch `2 sigma_-` (the 1/e half-width of the flat
    /// correlation peak), with the pair flux set for 0.1 photons per pixel.
    pub fn for_model(model: &TwinPhotonModel, n_frames: usize) -> Self {
        let detector_pixels = 64;
        let mean_photons_per_pixel = 0.1;
        EmccdSpec {
            n_frames,
            mean_photons_per_pixel,
            pairs_per_frame_mean: mean_photons_per_pixel * (detector_pixels * detector_pixels) as f64 / 2.0,
            detector_pixels,
            pixel_pitch: 2.0 * model.sigma_minus(),
            map_radius: 16,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_frames == 0 {
            return Err(Error::config("EMCCD capture needs at least one frame"));
        }
        if !(self.mean_photons_per_pixel > 0.0 && self.mean_photons_per_pixel < 1.0) {
            return Err(Error::config("mean photons per pixel must lie in (0, 1)"));
        }
        if !(self.pairs_per_frame_mean > 0.0 && self.pairs_per_frame_mean.is_finite()) {
            return Err(Error::config("pairs per frame must be positive"));
        }
        if self.detector_pixels < 2 || self.detector_pixels > MAX_DETECTOR {
            return Err(Error::config(format!("detector size must be in 2..={MAX_DETECTOR}")));
        }
        if self.map_radius == 0 || self.map_radius >= self.detector_pixels {
            return Err(Error::config("map radius must be in 1..detector_pixels"));
        }
        if !(self.pixel_pitch > 0.0 && self.pixel_pitch.is_finite()) {
            return Err(Error::config("pixel pitch must be positive"));
        }
        Ok(())
    }
}

struct Accum {
    hist: Vec<u64>,
    sum_a: Vec<u64>,
    sum_b: Vec<u64>,
}

impl Accum {
    fn new(d: usize, m: usize) -> Self {
        Accum {
            hist: vec![0; m * m],
            sum_a: vec![0; d * d],
            sum_b: vec![0; d * d],
        }
    }

    fn merge(mut self, other: Accum) -> Accum {
        for (a, b) in self.hist.iter_mut().zip(other.hist) {
            *a += b;
        }
        for (a, b) in self.sum_a.iter_mut().zip(other.sum_a) {
            *a += b;
        }
        for (a, b) in self.sum_b.iter_mut().zip(other.sum_b) {
            *a += b;
        }
        self
    }
}

struct FrameSampler<'a> {
    d: usize,
    pairs: Poisson<f64>,
    separation: &'a WeightedAliasIndex<f64>,
    sum_coord: Normal<f64>,
    two_d: bool,
}

impl FrameSampler<'_> {
    /// One thresholded frame per channel, as row bitmasks.
    fn frame(&self, stream: Stream) -> (Vec<u64>, Vec<u64>) {
        let d = self.d;
        let span = 2 * d - 1;
        let mut rng = stream.rng();
        let mut a = vec![0u64; d];
        let mut b = vec![0u64; d];
        let n_pairs = self.pairs.sample(&mut rng) as u64;
        let mid = (d as f64 - 1.0) / 2.0;
        for _ in 0..n_pairs {
            let cell = self.separation.sample(&mut rng);
            let sep_x = (cell % span) as i64 - (d as i64 - 1);
            let sep_y = (cell / span) as i64 - (d as i64 - 1);
            let sx: f64 = self.sum_coord.sample(&mut rng);
            let sy: f64 = if self.two_d { self.sum_coord.sample(&mut rng) } else { 0.0 };
            let x2 = (sx - sep_x as f64 / 2.0 + mid).round() as i64;
            let y2 = if self.two_d { (sy - sep_y as f64 / 2.0 + mid).round() as i64 } else { 0 };
            for (x, y) in [(x2 + sep_x, y2 + sep_y), (x2, y2)] {
                let to_a: bool = rng.random();
                if x < 0 || y < 0 || x >= d as i64 || y >= d as i64 {
                    continue;
                }
                let target = if to_a { &mut a } else { &mut b };
                target[y as usize] |= 1u64 << x;
            }
        }
        (a, b)
    }
}

fn bits(mut word: u64) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if word == 0 {
            None
        } else {
            let i = word.trailing_zeros() as usize;
            word &= word - 1;
            Some(i)
        }
    })
}

fn accumulate(acc: &mut Accum, a: &[u64], b: &[u64], d: usize, radius: usize) {
    let m = 2 * radius + 1;
    for (row, (&wa, &wb)) in a.iter().zip(b).enumerate() {
        for col in bits(wa) {
            acc.sum_a[row * d + col] += 1;
        }
        for col in bits(wb) {
            acc.sum_b[row * d + col] += 1;
        }
    }
    for (ar, &wa) in a.iter().enumerate() {
        for ac in bits(wa) {
            let lo_r = ar.saturating_sub(radius);
            let hi_r = (ar + radius).min(d - 1);
            let lo_c = ac.saturating_sub(radius);
            let hi_c = (ac + radius).min(d - 1);
            let width = hi_c - lo_c + 1;
            let mask = if width == 64 { u64::MAX } else { ((1u64 << width) - 1) << lo_c };
            for (br, &wb) in b.iter().enumerate().take(hi_r + 1).skip(lo_r) {
                for bc in bits(wb & mask) {
                    let dy = br + radius - ar;
                    let dx = bc + radius - ac;
                    acc.hist[dy * m + dx] += 1;
                }
            }
        }
    }
}

/// Simulate `e.n_frames` camera frames of pairs scattered by `total_phase`
/// and return the background-subtracted correlation over pixel separations.
///
/// Per frame, a Poisson number of pairs is drawn. Each pair's separation
/// follows the delta-model rate over the detector lattice, its mean position
/// the Gaussian pair envelope (std `sigma_+ / sqrt(2)`); each photon then
/// lands in channel A or B with equal probability and every pixel is
/// thresholded to fired / not fired.
pub fn emccd_capture(model: &TwinPhotonModel, total_phase: &PhaseScreen, e: &EmccdSpec, stream: Stream) -> Result<CorrelationMap> {
    e.validate()?;
    let two_d = model.spec().layout() == Layout::Square;
    let d = e.detector_pixels;
    let radius = e.map_radius;
    let m = 2 * radius + 1;
    let span = 2 * d - 1;

    let kernel = DeltaKernel::new(model);
    let weights: Vec<f64> = (0..span * span)
        .into_par_iter()
        .map(|cell| {
            let sx = (cell % span) as f64 - (d as f64 - 1.0);
            let sy = (cell / span) as f64 - (d as f64 - 1.0);
            if !two_d && sy != 0.0 {
                return 0.0;
            }
            kernel.rate(total_phase, (sx * e.pixel_pitch, sy * e.pixel_pitch))
        })
        .collect();
    let separation = WeightedAliasIndex::new(weights)
        .map_err(|err| Error::domain(format!("separation distribution: {err}")))?;
    let sampler = FrameSampler {
        d,
        pairs: Poisson::new(e.pairs_per_frame_mean).map_err(|err| Error::config(format!("pair flux: {err}")))?,
        separation: &separation,
        sum_coord: Normal::new(0.0, model.sigma_plus() / std::f64::consts::SQRT_2 / e.pixel_pitch)
            .map_err(|err| Error::config(format!("pair envelope: {err}")))?,
        two_d,
    };

    let frames = stream.label("emccd");
    let tasks = e.n_frames.div_ceil(FRAMES_PER_TASK);
    let acc = (0..tasks)
        .into_par_iter()
        .map(|t| {
            let mut acc = Accum::new(d, m);
            let start = t * FRAMES_PER_TASK;
            let end = (start + FRAMES_PER_TASK).min(e.n_frames);
            for f in start..end {
                let (a, b) = sampler.frame(frames.index(f as u64));
                accumulate(&mut acc, &a, &b, d, radius);
            }
            acc
        })
        .reduce(|| Accum::new(d, m), Accum::merge);

    let n = e.n_frames as f64;
    let mean_a: Vec<f64> = acc.sum_a.iter().map(|&v| v as f64 / n).collect();
    let mean_b: Vec<f64> = acc.sum_b.iter().map(|&v| v as f64 / n).collect();
    let mut values = vec![0.0; m * m];
    for dy in -(radius as isize)..=radius as isize {
        for dx in -(radius as isize)..=radius as isize {
            let mut background = 0.0;
            for r in 0..d as isize {
                let qr = r + dy;
                if qr < 0 || qr >= d as isize {
                    continue;
                }
                for c in 0..d as isize {
                    let qc = c + dx;
                    if qc < 0 || qc >= d as isize {
                        continue;
                    }
                    background += mean_a[(r * d as isize + c) as usize] * mean_b[(qr * d as isize + qc) as usize];
                }
            }
            let bin = ((dy + radius as isize) * m as isize + dx + radius as isize) as usize;
            values[bin] = acc.hist[bin] as f64 / n - background;
        }
    }
    CorrelationMap::new(m, e.pixel_pitch, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_screen, GridSpec};
    use crate::physics::contrast;

    fn model() -> TwinPhotonModel {
        TwinPhotonModel::standard(GridSpec::new(96, 1.0).unwrap(), 40.0, 34.6).unwrap()
    }

    #[test]
    fn single_frame_is_finite() {
        let m = model();
        let zero = make_screen(*m.spec(), 0.0).unwrap();
        let spec = EmccdSpec::for_model(&m, 1);
        let map = emccd_capture(&m, &zero, &spec, Stream::root(1)).unwrap();
        assert_eq!(map.size(), 33);
        assert!(map.values().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn flat_phase_gives_central_peak() {
        let m = model();
        let zero = make_screen(*m.spec(), 0.0).unwrap();
        let spec = EmccdSpec::for_model(&m, 20_000);
        let map = emccd_capture(&m, &zero, &spec, Stream::root(2)).unwrap();
        assert_eq!(map.argmax(), (0, 0));
        assert!(contrast(&map, 1).unwrap() > 5.0);
    }

    #[test]
    fn rejects_oversized_detector() {
        let m = model();
        let zero = make_screen(*m.spec(), 0.0).unwrap();
        let mut spec = EmccdSpec::for_model(&m, 10);
        spec.detector_pixels = 65;
        assert!(matches!(emccd_capture(&m, &zero, &spec, Stream::root(1)), Err(Error::Config(_))));
    }

    #[test]
    fn capture_is_deterministic() {
        let m = model();
        let zero = make_screen(*m.spec(), 0.0).unwrap();
        let spec = EmccdSpec::for_model(&m, 1500);
        let a = emccd_capture(&m, &zero, &spec, Stream::root(5)).unwrap();
        let b = emccd_capture(&m, &zero, &spec, Stream::root(5)).unwrap();
        assert_eq!(a, b);
    }
}
