use serde::{Deserialize, Serialize};

use super::matching::ClassTally;
use super::EvalError;

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// `tp / (tp + fp)`, 0 when there are no detections.
pub fn precision(t: &ClassTally) -> f64 {
    ratio(t.tp, t.tp + t.fp)
}

/// `tp / (tp + fn)`, 0 when there is no ground truth.
pub fn recall(t: &ClassTally) -> f64 {
    ratio(t.tp, t.tp + t.fn_)
}

/// Harmonic mean of precision and recall, 0 when both are 0.
pub fn f1(p: f64, r: f64) -> f64 {
    if p + r <= 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Arithmetic mean of per-class AP values.
pub fn mean_ap(per_class_ap: &[f64]) -> Result<f64, EvalError> {
    if per_class_ap.is_empty() {
        return Err(EvalError::EmptyApList);
    }
    Ok(per_class_ap.iter().sum::<f64>() / per_class_ap.len() as f64)
}

/// Observed / predicted pairs `(y, y_hat)`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RegressionPairs(pub Vec<(f64, f64)>);

impl FromIterator<(f64, f64)> for RegressionPairs {
    fn from_iter<I: IntoIterator<Item = (f64, f64)>>(iter: I) -> Self {
        RegressionPairs(iter.into_iter().collect())
    }
}

/// Coefficient of determination `1 - SS_res / SS_tot`.
///
/// Single pass: the total sum of squares is accumulated with Welford's update
/// so no second sweep over the data is needed. Negative for predictors worse
/// than the mean.
pub fn r_squared(pairs: &RegressionPairs) -> Result<f64, EvalError> {
    let n = pairs.0.len();
    if n < 2 {
        return Err(EvalError::TooFewPairs(n));
    }
    let mut mean = 0.0;
    let mut ss_tot = 0.0;
    let mut ss_res = 0.0;
    for (k, &(y, y_hat)) in pairs.0.iter().enumerate() {
        let delta = y - mean;
        mean += delta / (k + 1) as f64;
        ss_tot += delta * (y - mean);
        ss_res += (y - y_hat) * (y - y_hat);
    }
    let first = pairs.0[0].0;
    if pairs.0.iter().all(|&(y, _)| y == first) {
        return Err(EvalError::ConstantObservations);
    }
    Ok(1.0 - ss_res / ss_tot)
}
