use rand_distr::{Distribution, Poisson};

use super::model::DetectionModel;
use crate::error::{Error, Result};
use crate::rng::Stream;

/// Poisson count with mean `rate * kappa * window`.
pub fn sample_counts(rate: f64, det: &DetectionModel, window: f64, stream: Stream) -> Result<u64> {
    if !(rate >= 0.0) || !rate.is_finite() {
        return Err(Error::domain(format!("coincidence rate must be non-negative, got {rate}")));
    }
    if !(window > 0.0) {
        return Err(Error::domain(format!("integration window must be positive, got {window}")));
    }
    let mean = rate * det.kappa * window;
    if mean == 0.0 {
        return Ok(0);
    }
    let poisson = Poisson::new(mean).map_err(|e| Error::domain(format!("poisson mean {mean}: {e}")))?;
    Ok(poisson.sample(&mut stream.rng()) as u64)
}
