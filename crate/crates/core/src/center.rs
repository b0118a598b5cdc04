//! Locating the beam center on the SLM with odd coma scans.
//!
//! A coma pattern centered exactly on the beam is odd about it and leaves
//! the coincidence rate untouched; anywhere else it acquires an even part
//! and the rate drops. Scanning the coma center and keeping the point of
//! highest counts therefore finds the beam center. [`locate_center`] does
//! this coarse to fine: every stage scans a ComaX and a ComaY pattern over
//! the same disk of trial centers around the current estimate, and takes
//! `cx` from the ComaX maximum and `cy` from the ComaY maximum.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{zernike_value, Center, PhaseScreen, ZernikeKind};
use crate::optim::Feedback;
use crate::physics::{sample_counts, DeltaKernel, DetectionModel, TwinPhotonModel};
use crate::rng::Stream;

/// Inclusive rectangle of integer coma centers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: i64,
    pub x1: i64,
    pub y0: i64,
    pub y1: i64,
}

impl Rect {
    pub fn new(x0: i64, x1: i64, y0: i64, y1: i64) -> Result<Self> {
        if x1 < x0 || y1 < y0 {
            return Err(Error::config(format!("empty scan region x {x0}..{x1}, y {y0}..{y1}")));
        }
        Ok(Rect { x0, x1, y0, y1 })
    }

    pub fn around(cx: i64, cy: i64, half_x: i64, half_y: i64) -> Self {
        Rect {
            x0: cx - half_x,
            x1: cx + half_x,
            y0: cy - half_y,
            y1: cy + half_y,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanRegion {
    Fixed(Rect),
    /// Lattice points within `radius` of the current estimate.
    Disk { radius: i64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanStage {
    pub r: f64,
    pub step: i64,
    pub t_int: f64,
    pub region: ScanRegion,
}

impl ScanStage {
    pub fn validate(&self) -> Result<()> {
        if self.step < 1 {
            return Err(Error::config(format!("scan step must be at least 1, got {}", self.step)));
        }
        if !(self.r > 0.0 && self.t_int > 0.0) {
            return Err(Error::config("scan radius and integration time must be positive"));
        }
        match self.region {
            ScanRegion::Fixed(r) => Rect::new(r.x0, r.x1, r.y0, r.y1).map(|_| ()),
            ScanRegion::Disk { radius } if radius >= 0 => Ok(()),
            ScanRegion::Disk { .. } => Err(Error::config("scan radius must be non-negative")),
        }
    }

    /// Trial centers of this stage, row-major, for the estimate `est`.
    pub fn points(&self, est: (i64, i64)) -> Vec<(i64, i64)> {
        match self.region {
            ScanRegion::Fixed(r) => {
                let xs = lattice(r.x0, r.x1, self.step);
                lattice(r.y0, r.y1, self.step)
                    .into_iter()
                    .flat_map(|y| xs.iter().map(move |&x| (x, y)))
                    .collect()
            }
            ScanRegion::Disk { radius } => {
                let k = radius / self.step;
                let offsets: Vec<i64> = (-k..=k).map(|i| i * self.step).collect();
                offsets
                    .iter()
                    .flat_map(|&dy| offsets.iter().map(move |&dx| (dx, dy)))
                    .filter(|&(dx, dy)| dx * dx + dy * dy <= radius * radius)
                    .map(|(dx, dy)| (est.0 + dx, est.1 + dy))
                    .collect()
            }
        }
    }
}

/// Coarse-to-fine schedule: coma radii 160, 80, 40 and 20 pixels with steps
/// 64, 8, 1 and 1, the last stage integrating five times longer.
pub fn default_schedule() -> Vec<ScanStage> {
    let stage = |r, step, t_int, radius| ScanStage {
        r,
        step,
        t_int,
        region: ScanRegion::Disk { radius },
    };
    vec![
        stage(160.0, 64, 1.0, 128),
        stage(80.0, 8, 1.0, 48),
        stage(40.0, 1, 1.0, 12),
        stage(20.0, 1, 5.0, 4),
    ]
}

/// Correlation quality at a list of trial coma centers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityMap {
    pub kind: ZernikeKind,
    pub r: f64,
    pub points: Vec<(i64, i64)>,
    pub values: Vec<f64>,
}

impl QualityMap {
    /// Point of the highest value; ties go to the earliest point.
    pub fn argmax(&self) -> (i64, i64) {
        let mut best = 0;
        for (i, v) in self.values.iter().enumerate() {
            if *v > self.values[best] {
                best = i;
            }
        }
        self.points[best]
    }

    /// Argmax coordinate along the axis this coma kind measures (x for
    /// ComaX, y for ComaY), and whether it is the extreme scanned value of
    /// that axis. An axis with a single scanned value never counts as an
    /// edge.
    pub fn axis_argmax(&self) -> (i64, bool) {
        let coord = |p: &(i64, i64)| match self.kind {
            ZernikeKind::ComaX => p.0,
            ZernikeKind::ComaY => p.1,
        };
        let v = coord(&self.argmax());
        let lo = self.points.iter().map(coord).min().unwrap_or(v);
        let hi = self.points.iter().map(coord).max().unwrap_or(v);
        (v, lo < hi && (v == lo || v == hi))
    }
}

/// Setup for a center scan: the bare (or diffused) source and detectors.
#[derive(Debug, Clone)]
pub struct Scene {
    model: TwinPhotonModel,
    kernel: DeltaKernel,
    diffuser: Option<PhaseScreen>,
    det: DetectionModel,
    amplitude: f64,
    feedback: Feedback,
}

impl Scene {
    pub fn new(model: TwinPhotonModel, det: DetectionModel, amplitude: f64, feedback: Feedback) -> Result<Self> {
        det.validate()?;
        if !amplitude.is_finite() {
            return Err(Error::config("coma amplitude must be finite"));
        }
        Ok(Scene {
            kernel: DeltaKernel::new(&model),
            model,
            diffuser: None,
            det,
            amplitude,
            feedback,
        })
    }

    /// Scan through a diffuser as well. Experimental: the even part of the
    /// diffuser biases the quality map.
    pub fn with_diffuser(mut self, d: PhaseScreen) -> Result<Self> {
        if d.spec() != self.model.spec() {
            return Err(Error::config("diffuser is not on the model grid"));
        }
        self.diffuser = Some(d);
        Ok(self)
    }

    pub fn model(&self) -> &TwinPhotonModel {
        &self.model
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn feedback(&self) -> Feedback {
        self.feedback
    }

    pub fn with_feedback(mut self, feedback: Feedback) -> Self {
        self.feedback = feedback;
        self
    }

    /// Expected rate with the coma pattern centered at `c`.
    pub fn rate(&self, kind: ZernikeKind, r: f64, c: Center) -> f64 {
        let cols = self.model.spec().cols();
        let amp = self.amplitude;
        let z = |i: usize| zernike_value(kind, r, c, amp, i / cols, i % cols);
        let dx = self.det.separation();
        match &self.diffuser {
            None => self.kernel.rate_with(z, dx),
            Some(d) => {
                let v = d.values();
                self.kernel.rate_with(|i| v[i] + z(i), dx)
            }
        }
    }
}

/// Coincidence counts over `t_int` with a coma pattern of radius `r`
/// centered at `c`.
pub fn correlation_quality(kind: ZernikeKind, r: f64, c: Center, t_int: f64, scene: &Scene, stream: Stream) -> Result<f64> {
    let rate = scene.rate(kind, r, c);
    match scene.feedback {
        Feedback::Poisson => Ok(sample_counts(rate, &scene.det, t_int, stream)? as f64),
        Feedback::Exact => Ok(rate * scene.det.kappa * t_int),
    }
}

fn lattice(lo: i64, hi: i64, step: i64) -> Vec<i64> {
    (0..).map(|i| lo + i * step).take_while(|&v| v <= hi).collect()
}

/// Quality at every trial center of `stage` around `est`, one stream per
/// point.
pub fn scan_stage(kind: ZernikeKind, stage: &ScanStage, est: (i64, i64), scene: &Scene, stream: Stream) -> Result<QualityMap> {
    stage.validate()?;
    let points = stage.points(est);
    let values = points
        .par_iter()
        .enumerate()
        .map(|(i, &(x, y))| {
            correlation_quality(kind, stage.r, Center::new(x as f64, y as f64), stage.t_int, scene, stream.index(i as u64))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(QualityMap {
        kind,
        r: stage.r,
        points,
        values,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CenterEstimate {
    pub center: Center,
    /// Two maps per stage: the ComaX scan, then the ComaY scan.
    pub maps: Vec<QualityMap>,
}

/// Lower-left-biased integer midpoint of the SLM frame, where the first
/// `Disk` region is placed.
pub fn frame_start(model: &TwinPhotonModel) -> (i64, i64) {
    let spec = model.spec();
    ((spec.cols() / 2) as i64, (spec.rows() / 2) as i64)
}

/// Run `schedule` and return the final estimate with every map.
///
/// If a stage's argmax lands on the edge of its region along the measured
/// axis the scan stops after that stage with [`Error::ScanBoundary`]
/// carrying the updated estimate.
pub fn locate_center(schedule: &[ScanStage], scene: &Scene, stream: Stream) -> Result<CenterEstimate> {
    locate_center_from(schedule, frame_start(&scene.model), scene, stream).map_err(|(e, _)| e)
}

/// As [`locate_center`], starting from `start`; on failure the maps
/// collected so far come back with the error.
pub fn locate_center_from(
    schedule: &[ScanStage],
    start: (i64, i64),
    scene: &Scene,
    stream: Stream,
) -> std::result::Result<CenterEstimate, (Error, Vec<QualityMap>)> {
    if schedule.is_empty() {
        return Err((Error::config("scan schedule is empty"), Vec::new()));
    }
    let mut est = start;
    let mut maps = Vec::with_capacity(2 * schedule.len());
    for (s, stage) in schedule.iter().enumerate() {
        let stage_stream = stream.index(s as u64);
        let mut next = est;
        let mut boundary = false;
        for (kind, label) in [(ZernikeKind::ComaX, "x"), (ZernikeKind::ComaY, "y")] {
            let map = match scan_stage(kind, stage, est, scene, stage_stream.label(label)) {
                Ok(m) => m,
                Err(e) => return Err((e, maps)),
            };
            let (value, edge) = map.axis_argmax();
            maps.push(map);
            match kind {
                ZernikeKind::ComaX => next.0 = value,
                ZernikeKind::ComaY => next.1 = value,
            }
            boundary |= edge;
        }
        est = next;
        if boundary {
            return Err((Error::ScanBoundary { cx: est.0, cy: est.1 }, maps));
        }
    }
    Ok(CenterEstimate {
        center: Center::new(est.0 as f64, est.1 as f64),
        maps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use crate::physics::DEFAULT_SIGMA_RATIO;

    fn scene(n: usize, radius: f64, center: Center, feedback: Feedback) -> Scene {
        let spec = GridSpec::new(n, 1.0).unwrap();
        let model = TwinPhotonModel::standard(spec, radius, DEFAULT_SIGMA_RATIO)
            .unwrap()
            .with_beam_center(center)
            .unwrap();
        let det = DetectionModel::on_axis(50.0, 1.0, 50.0).unwrap();
        Scene::new(model, det, 6.0, feedback).unwrap()
    }

    #[test]
    fn quality_is_unity_at_the_true_center() {
        let s = scene(128, 20.0, Center::new(60.0, 70.0), Feedback::Exact);
        for kind in [ZernikeKind::ComaX, ZernikeKind::ComaY] {
            assert!((s.rate(kind, 30.0, Center::new(60.0, 70.0)) - 1.0).abs() < 1e-12);
            assert!(s.rate(kind, 30.0, Center::new(60.0 + 30.0, 70.0)) < 1.0);
        }
        let p = s.clone().with_feedback(Feedback::Poisson);
        let c = Center::new(61.0, 70.0);
        let a = correlation_quality(ZernikeKind::ComaX, 30.0, c, 1.0, &p, Stream::root(3)).unwrap();
        let b = correlation_quality(ZernikeKind::ComaX, 30.0, c, 1.0, &p, Stream::root(3)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn dense_lattice_peaks_at_truth() {
        let truth = Center::new(60.0, 70.0);
        let s = scene(128, 20.0, truth, Feedback::Exact);
        for kind in [ZernikeKind::ComaX, ZernikeKind::ComaY] {
            let stage = ScanStage {
                r: 30.0,
                step: 1,
                t_int: 1.0,
                region: ScanRegion::Fixed(Rect::around(60, 70, 10, 10)),
            };
            let map = scan_stage(kind, &stage, (0, 0), &s, Stream::root(1)).unwrap();
            assert_eq!(map.argmax(), (60, 70), "{kind:?}");
        }
    }

    #[test]
    fn flat_map_takes_first_point() {
        let truth = Center::new(60.0, 70.0);
        let spec = GridSpec::new(128, 1.0).unwrap();
        let model = TwinPhotonModel::standard(spec, 20.0, DEFAULT_SIGMA_RATIO)
            .unwrap()
            .with_beam_center(truth)
            .unwrap();
        let det = DetectionModel::on_axis(50.0, 1.0, 50.0).unwrap();
        let s = Scene::new(model, det, 0.0, Feedback::Exact).unwrap();
        let stage = ScanStage {
            r: 30.0,
            step: 2,
            t_int: 1.0,
            region: ScanRegion::Disk { radius: 6 },
        };
        let map = scan_stage(ZernikeKind::ComaX, &stage, (64, 64), &s, Stream::root(1)).unwrap();
        assert_eq!(map.argmax(), (64, 58));
        assert_eq!(map.axis_argmax(), (64, false));
        let map = scan_stage(ZernikeKind::ComaY, &stage, (64, 64), &s, Stream::root(1)).unwrap();
        assert_eq!(map.axis_argmax(), (58, true));
        match locate_center(&[stage], &s, Stream::root(1)) {
            Err(Error::ScanBoundary { cx, cy }) => assert_eq!((cx, cy), (64, 58)),
            other => panic!("expected boundary error, got {other:?}"),
        }
    }

    #[test]
    fn smaller_coma_sharpens_the_peak() {
        let truth = Center::new(256.0, 256.0);
        let s = scene(512, 40.0, truth, Feedback::Exact);
        let fwhm = |r: f64| {
            let peak = s.rate(ZernikeKind::ComaX, r, truth);
            let half = |d: i64| s.rate(ZernikeKind::ComaX, r, truth.offset(d as f64, 0.0)) < peak / 2.0;
            (1..400).find(|&d| half(d)).unwrap_or(400)
        };
        let widths: Vec<i64> = [160.0, 80.0, 40.0, 20.0].iter().map(|&r| fwhm(r)).collect();
        assert!(widths.windows(2).all(|w| w[1] <= w[0]), "{widths:?}");
    }

    #[test]
    fn disk_regions_follow_the_estimate() {
        let s = default_schedule()[3];
        let pts = s.points((10, -3));
        assert_eq!(pts.len(), 49);
        assert!(pts.contains(&(14, -3)) && pts.contains(&(10, 1)) && !pts.contains(&(13, 0)));
        let coarse = default_schedule()[0].points((512, 512));
        assert_eq!(coarse.len(), 13);
        let bad = ScanStage { step: 0, ..s };
        assert!(bad.validate().is_err());
    }
}
