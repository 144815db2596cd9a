//! Central finite-difference verification of analytic gradients.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::exact::{refined_derivative, Refined};
use super::se::{FeatureMap, SeClassifier};
use super::{MLPModel, NnError};

pub const GRADCHECK_EPS: f64 = 1e-5;
pub const GRADCHECK_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradCheckReport {
    pub checked: usize,
    pub max_rel_error: f64,
    pub worst_param: usize,
    pub worst_analytic: f64,
    pub worst_numeric: f64,
    /// Parameters whose plain difference was replaced by the accurate one.
    pub refined: usize,
    /// Parameters sitting exactly on a ReLU kink, left out of the maximum.
    pub kinks: usize,
}

impl GradCheckReport {
    pub fn passed(&self, tolerance: f64) -> bool {
        self.max_rel_error < tolerance
    }
}

/// `|a − n| / max(|a|, |n|, 1e-8)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

/// `(L(θ + ε e_i) − L(θ − ε e_i)) / 2ε` for every `i`.
pub fn numeric_gradient<F>(params: &[f64], eps: f64, mut loss: F) -> Vec<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut theta = params.to_vec();
    (0..theta.len())
        .map(|i| {
            let orig = theta[i];
            theta[i] = orig + eps;
            let up = loss(&theta);
            theta[i] = orig - eps;
            let down = loss(&theta);
            theta[i] = orig;
            (up - down) / (2.0 * eps)
        })
        .collect()
}

/// Worst relative error over the parameters not listed in `skip`.
fn compare(analytic: &[f64], numeric: &[f64], skip: &[bool]) -> GradCheckReport {
    let mut report = GradCheckReport {
        checked: 0,
        max_rel_error: 0.0,
        worst_param: 0,
        worst_analytic: 0.0,
        worst_numeric: 0.0,
        refined: 0,
        kinks: skip.iter().filter(|&&s| s).count(),
    };
    for i in (0..analytic.len()).filter(|&i| !skip.get(i).copied().unwrap_or(false)) {
        let err = relative_error(analytic[i], numeric[i]);
        report.checked += 1;
        if err > report.max_rel_error || report.checked == 1 {
            report.max_rel_error = err;
            report.worst_param = i;
            report.worst_analytic = analytic[i];
            report.worst_numeric = numeric[i];
        }
    }
    report
}

/// Compares `analytic` to central differences of `loss` for every parameter.
pub fn check_gradients<F>(params: &[f64], analytic: &[f64], eps: f64, loss: F) -> GradCheckReport
where
    F: FnMut(&[f64]) -> f64,
{
    assert_eq!(params.len(), analytic.len());
    compare(analytic, &numeric_gradient(params, eps, loss), &[])
}

/// Plain differences above this relative error are recomputed accurately.
const REFINE_ABOVE: f64 = 1e-6;

/// Gradient check of an MLP on one batch. Plain central differences in f64
/// lose most of their digits on gradients near 1e-8 and are wrong across
/// ReLU kinks; entries that disagree with the analytic value are recomputed
/// with the accurate difference before comparing.
pub fn check_mlp(model: &MLPModel, xs: &[Vec<f64>], ys: &[usize], eps: f64) -> Result<GradCheckReport, NnError> {
    let (_, grads) = model.backward(xs, ys)?;
    let analytic = grads.flat();
    let mut probe = model.clone();
    let mut numeric = numeric_gradient(&model.params(), eps, |p| {
        probe.set_params(p).expect("same parameter count");
        probe.loss(xs, ys).expect("batch validated above")
    });
    let mut skip = vec![false; numeric.len()];
    let mut refined = 0;
    for i in 0..numeric.len() {
        if relative_error(analytic[i], numeric[i]) <= REFINE_ABOVE {
            continue;
        }
        refined += 1;
        match refined_derivative(model, xs, ys, i, eps) {
            Refined::Derivative(d) => numeric[i] = d,
            Refined::Kink => skip[i] = true,
        }
    }
    let mut report = compare(&analytic, &numeric, &skip);
    report.refined = refined;
    Ok(report)
}

fn random_batch(rng: &mut ChaCha8Rng, batch: usize, features: usize, classes: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
    let xs = (0..batch)
        .map(|_| (0..features).map(|_| rng.random_range(-1.5..1.5)).collect())
        .collect();
    let ys = (0..batch).map(|_| rng.random_range(0..classes)).collect();
    (xs, ys)
}

/// Gradient check of a He-initialised MLP with the given widths on a random
/// batch derived from `seed`.
pub fn gradcheck_mlp(widths: &[usize], seed: u64, batch: usize) -> Result<GradCheckReport, NnError> {
    let mut model = MLPModel::he_uniform(widths, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    // non-zero biases so every bias gradient is exercised
    for layer in model.layers_mut() {
        for b in &mut layer.bias {
            *b = rng.random_range(-0.1..0.1);
        }
    }
    let (xs, ys) = random_batch(&mut rng, batch, model.input_width(), model.num_classes());
    check_mlp(&model, &xs, &ys, GRADCHECK_EPS)
}

/// Gradient check of `input → SE → flatten → dense → softmax`.
pub fn gradcheck_se(seed: u64) -> Result<GradCheckReport, NnError> {
    let (c, h, w, classes) = (8, 3, 3, 4);
    let clf = SeClassifier::random(c, h, w, classes, 4, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(17));
    let xs: Vec<FeatureMap> = (0..3)
        .map(|_| {
            let data = (0..c * h * w).map(|_| rng.random_range(-1.0..2.0)).collect();
            FeatureMap::new(c, h, w, data)
        })
        .collect::<Result<_, _>>()?;
    let ys: Vec<usize> = (0..xs.len()).map(|_| rng.random_range(0..classes)).collect();
    let (_, grads) = clf.backward(&xs, &ys)?;
    let mut probe = clf.clone();
    Ok(check_gradients(&clf.params(), &grads, GRADCHECK_EPS, |p| {
        probe.set_params(p).expect("same parameter count");
        probe.loss(&xs, &ys).expect("batch validated above")
    }))
}
