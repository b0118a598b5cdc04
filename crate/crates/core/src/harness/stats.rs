use serde::{Deserialize, Serialize};

/// Mean and across-run standard deviation of one condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatSummary {
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator); zero for a single run.
    pub std: f64,
    pub runs: usize,
}

impl StatSummary {
    pub fn of(values: &[f64]) -> StatSummary {
        let n = values.len();
        if n == 0 {
            return StatSummary {
                mean: f64::NAN,
                std: f64::NAN,
                runs: 0,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        StatSummary { mean, std, runs: n }
    }
}

/// `sqrt((s_a^2 + s_b^2) / 2)` for equal-size groups, weighted by degrees of
/// freedom otherwise.
pub fn pooled_std(groups: &[StatSummary]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for g in groups {
        if g.runs > 1 {
            num += (g.runs - 1) as f64 * g.std * g.std;
            den += (g.runs - 1) as f64;
        }
    }
    if den == 0.0 {
        0.0
    } else {
        (num / den).sqrt()
    }
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_matches_hand_computation() {
        let s = StatSummary::of(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]);
        assert_eq!(s.mean, 5.0);
        assert!((s.std - (32.0f64 / 7.0).sqrt()).abs() < 1e-12);
        assert_eq!(StatSummary::of(&[3.0]).std, 0.0);
    }

    #[test]
    fn pooled_and_median() {
        let a = StatSummary { mean: 0.0, std: 1.0, runs: 5 };
        let b = StatSummary { mean: 0.0, std: 3.0, runs: 5 };
        assert!((pooled_std(&[a, b]) - 5.0f64.sqrt()).abs() < 1e-12);
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
