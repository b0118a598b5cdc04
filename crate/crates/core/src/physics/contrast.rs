use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Square map over difference coordinates; bin `(radius, radius)` is zero separation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMap {
    size: usize,
    /// Detector-plane extent of one bin.
    pub bin_pitch: f64,
    values: Vec<f64>,
}

impl CorrelationMap {
    pub fn new(size: usize, bin_pitch: f64, values: Vec<f64>) -> Result<Self> {
        if size % 2 == 0 || values.len() != size * size {
            return Err(Error::config(format!(
                "correlation map must be odd-sized and square, got size {size} with {} values",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("correlation map holds non-finite values"));
        }
        Ok(CorrelationMap { size, bin_pitch, values })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn radius(&self) -> usize {
        self.size / 2
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value at offset `(dx, dy)` bins from the center.
    pub fn at(&self, dx: isize, dy: isize) -> f64 {
        let r = self.radius() as isize;
        self.values[((dy + r) * self.size as isize + dx + r) as usize]
    }

    /// Offset of the largest bin; first in row-major order on ties.
    pub fn argmax(&self) -> (isize, isize) {
        let mut best = 0;
        for (i, v) in self.values.iter().enumerate() {
            if *v > self.values[best] {
                best = i;
            }
        }
        let r = self.radius() as isize;
        ((best % self.size) as isize - r, (best / self.size) as isize - r)
    }

    /// Map scaled so its values sum to one (left unchanged if the sum is not positive).
    pub fn normalized(&self) -> CorrelationMap {
        let total: f64 = self.values.iter().sum();
        let values = if total > 0.0 {
            self.values.iter().map(|v| v / total).collect()
        } else {
            self.values.clone()
        };
        CorrelationMap { values, ..self.clone() }
    }
}

/// `(mean(peak) - mean(bg)) / std(bg)` with the peak the central square of
/// side `2 * peak_halfwidth + 1` and the background everything else.
pub fn contrast(map: &CorrelationMap, peak_halfwidth: usize) -> Result<f64> {
    if 2 * peak_halfwidth + 1 >= map.size {
        return Err(Error::domain(format!(
            "peak window of half-width {peak_halfwidth} does not fit strictly inside a {} map",
            map.size
        )));
    }
    let r = map.radius() as isize;
    let h = peak_halfwidth as isize;
    let (mut peak, mut bg) = (Vec::new(), Vec::new());
    for (i, &v) in map.values.iter().enumerate() {
        let dx = (i % map.size) as isize - r;
        let dy = (i / map.size) as isize - r;
        if dx.abs() <= h && dy.abs() <= h {
            peak.push(v);
        } else {
            bg.push(v);
        }
    }
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    let mu_bg = mean(&bg);
    let sigma_bg = (bg.iter().map(|v| (v - mu_bg).powi(2)).sum::<f64>() / bg.len() as f64).sqrt();
    if sigma_bg == 0.0 {
        return Err(Error::UndefinedContrast);
    }
    Ok((mean(&peak) - mu_bg) / sigma_bg)
}
