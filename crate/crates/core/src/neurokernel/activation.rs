use super::NnError;

/// Probabilities are floored at this value before taking the log.
pub const LOG_FLOOR: f64 = 1e-12;

pub fn relu(x: f64) -> f64 {
    x.max(0.0)
}

pub fn relu_vec(xs: &[f64]) -> Vec<f64> {
    xs.iter().map(|&x| relu(x)).collect()
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Softmax with max subtraction.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&o| (o - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// `-ln p[true_class]` with the probability floored at [`LOG_FLOOR`].
pub fn cross_entropy(probs: &[f64], true_class: usize) -> Result<f64, NnError> {
    if true_class >= probs.len() {
        return Err(NnError::LabelOutOfRange {
            label: true_class,
            classes: probs.len(),
        });
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > 1e-9 || probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(NnError::InvalidDistribution(sum));
    }
    Ok(-probs[true_class].max(LOG_FLOOR).ln())
}
