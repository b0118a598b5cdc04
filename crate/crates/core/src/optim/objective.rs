use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genome::SlmGenome;
use crate::grid::{expand_genome, GridSpec, PhaseScreen};
use crate::physics::{sample_counts, DeltaKernel, DetectionModel, FullKernel, TwinPhotonModel};
use crate::rng::Stream;

/// What the optimizer can ask of an experiment: counts for a displayed
/// genome over some window.
pub trait Objective: Sync {
    fn grid(&self) -> GridSpec;

    /// Counts recorded with `phenotype` on the SLM over `window` seconds.
    fn measure(&self, phenotype: &SlmGenome, window: f64, stream: Stream) -> Result<f64>;

    fn t_int(&self) -> f64;

    fn t_final(&self) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RateModel {
    /// Delta-correlated pairs, detectors compared at their separation.
    #[default]
    Delta,
    /// Finite pump width, detectors at their absolute positions.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Feedback {
    #[default]
    Poisson,
    /// Expected counts, no shot noise.
    Exact,
}

#[derive(Debug, Clone)]
enum Kernel {
    Delta(DeltaKernel),
    Full(FullKernel),
}

/// Coincidence counts behind a fixed diffuser.
#[derive(Debug, Clone)]
pub struct CoincidenceObjective {
    model: TwinPhotonModel,
    diffuser: PhaseScreen,
    det: DetectionModel,
    feedback: Feedback,
    kernel: Kernel,
}

impl CoincidenceObjective {
    pub fn new(
        model: TwinPhotonModel,
        diffuser: PhaseScreen,
        det: DetectionModel,
        rate: RateModel,
        feedback: Feedback,
    ) -> Result<Self> {
        if diffuser.spec() != model.spec() {
            return Err(Error::config("diffuser is not on the model grid"));
        }
        det.validate()?;
        let kernel = match rate {
            RateModel::Delta => Kernel::Delta(DeltaKernel::new(&model)),
            RateModel::Full => Kernel::Full(FullKernel::new(&model, det.x1, det.x2)?),
        };
        Ok(CoincidenceObjective {
            model,
            diffuser,
            det,
            feedback,
            kernel,
        })
    }

    pub fn model(&self) -> &TwinPhotonModel {
        &self.model
    }

    pub fn diffuser(&self) -> &PhaseScreen {
        &self.diffuser
    }

    pub fn detection(&self) -> &DetectionModel {
        &self.det
    }

    /// Expected rate for an arbitrary SLM screen (diffuser added).
    pub fn rate_of_screen(&self, slm: &PhaseScreen) -> Result<f64> {
        let total = self.diffuser.add(slm)?;
        Ok(match &self.kernel {
            Kernel::Delta(k) => k.rate(&total, self.det.separation()),
            Kernel::Full(k) => k.rate(&total),
        })
    }

    pub fn rate_of(&self, g: &SlmGenome) -> Result<f64> {
        self.rate_of_screen(&expand_genome(g, *self.model.spec())?)
    }
}

impl Objective for CoincidenceObjective {
    fn grid(&self) -> GridSpec {
        *self.model.spec()
    }

    fn measure(&self, phenotype: &SlmGenome, window: f64, stream: Stream) -> Result<f64> {
        let rate = self.rate_of(phenotype)?;
        match self.feedback {
            Feedback::Poisson => Ok(sample_counts(rate, &self.det, window, stream)? as f64),
            Feedback::Exact => Ok(rate * self.det.kappa * window),
        }
    }

    fn t_int(&self) -> f64 {
        self.det.t_int
    }

    fn t_final(&self) -> f64 {
        self.det.t_final
    }
}

/// Counts for one genome over `det.t_int` behind `diffuser`.
pub fn fitness(
    g: &SlmGenome,
    diffuser: &PhaseScreen,
    model: &TwinPhotonModel,
    det: &DetectionModel,
    stream: Stream,
) -> Result<u64> {
    let total = diffuser.add(&expand_genome(g, *model.spec())?)?;
    let on_axis = det.x1.cx == 0.0 && det.x1.cy == 0.0 && det.x2.cx == 0.0 && det.x2.cy == 0.0;
    let rate = if on_axis {
        DeltaKernel::new(model).rate(&total, det.separation())
    } else {
        FullKernel::new(model, det.x1, det.x2)?.rate(&total)
    };
    sample_counts(rate, det, det.t_int, stream)
}

/// Flat-genome counts over `window`, widened once to `2 * window` if the
/// first draw is empty.
pub(crate) fn flat_reference(obj: &dyn Objective, flat: &SlmGenome, window: f64, stream: Stream) -> Result<(f64, f64)> {
    let first = obj.measure(flat, window, stream.index(0))?;
    if first > 0.0 {
        return Ok((first, window));
    }
    let wide = 2.0 * window;
    let second = obj.measure(flat, wide, stream.index(1))?;
    if second > 0.0 {
        Ok((second, wide))
    } else {
        Err(Error::ZeroReference { window: wide })
    }
}

/// Ratio of `t_final` counts with `best` displayed to those with a flat SLM.
pub fn final_enhancement(obj: &dyn Objective, best: &SlmGenome, stream: Stream) -> Result<f64> {
    let flat = SlmGenome::from_levels(best, vec![0; best.len()])?;
    let (flat_counts, window) = flat_reference(obj, &flat, obj.t_final(), stream.label("flat"))?;
    let best_counts = obj.measure(best, window, stream.label("best"))?;
    Ok(best_counts / flat_counts)
}

/// Genome whose expanded phase best matches `target` one block at a time:
/// each super-pixel takes the level nearest the circular mean of the target
/// over its block.
pub fn quantize_screen(template: &SlmGenome, target: &PhaseScreen) -> Result<SlmGenome> {
    let (br, bc) = template.block();
    let spec = target.spec();
    if template.rows() * br != spec.rows() || template.cols() * bc != spec.cols() {
        return Err(Error::config("genome does not tile the target screen"));
    }
    let l = f64::from(template.num_levels());
    let mut levels = Vec::with_capacity(template.len());
    for r in 0..template.rows() {
        for c in 0..template.cols() {
            let (mut sx, mut sy) = (0.0, 0.0);
            for row in r * br..(r + 1) * br {
                for col in c * bc..(c + 1) * bc {
                    let (s, co) = target.get(row, col).sin_cos();
                    sx += co;
                    sy += s;
                }
            }
            let angle = sy.atan2(sx).rem_euclid(std::f64::consts::TAU);
            levels.push(((angle / std::f64::consts::TAU * l).round() as u64 % l as u64) as u8);
        }
    }
    SlmGenome::from_levels(template, levels)
}
