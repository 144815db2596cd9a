use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::activation::{cross_entropy, relu, softmax};
use super::{NnError, Tensor2};

/// Fully connected layer `y = W x + b`, `W` is `out × in`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub weights: Tensor2,
    pub bias: Vec<f64>,
}

impl DenseLayer {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            weights: Tensor2::zeros(outputs, inputs),
            bias: vec![0.0; outputs],
        }
    }

    /// He-uniform weights `U(-√(6/in), √(6/in))`, zero bias.
    pub fn he_uniform<R: Rng>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let limit = (6.0 / inputs as f64).sqrt();
        let mut layer = Self::zeros(inputs, outputs);
        for w in layer.weights.data_mut() {
            *w = rng.random_range(-limit..limit);
        }
        layer
    }

    pub fn inputs(&self) -> usize {
        self.weights.cols()
    }

    pub fn outputs(&self) -> usize {
        self.weights.rows()
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let mut z = self.weights.matvec(x);
        for (zi, b) in z.iter_mut().zip(&self.bias) {
            *zi += b;
        }
        z
    }

    pub fn num_params(&self) -> usize {
        self.weights.data().len() + self.bias.len()
    }

    fn append_params(&self, out: &mut Vec<f64>) {
        out.extend_from_slice(self.weights.data());
        out.extend_from_slice(&self.bias);
    }

    fn load_params(&mut self, src: &[f64]) -> usize {
        let nw = self.weights.data().len();
        self.weights.data_mut().copy_from_slice(&src[..nw]);
        let nb = self.bias.len();
        self.bias.copy_from_slice(&src[nw..nw + nb]);
        nw + nb
    }
}

/// Dense network: ReLU after every hidden layer, softmax on the output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MLPModel {
    layers: Vec<DenseLayer>,
}

/// Gradients with the same layout as the model's layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<DenseLayer>,
}

impl Gradients {
    /// Flattened in [`MLPModel::params`] order.
    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for l in &self.layers {
            l.append_params(&mut out);
        }
        out
    }
}

/// Intermediate values of one forward pass.
struct Trace {
    /// Input to each layer (index 0 is the network input).
    inputs: Vec<Vec<f64>>,
    /// Pre-activation of each layer.
    pre: Vec<Vec<f64>>,
    probs: Vec<f64>,
}

fn check_widths(widths: &[usize]) -> Result<(), NnError> {
    if widths.len() < 2 || widths.contains(&0) {
        return Err(NnError::Shape(format!(
            "layer widths must list at least input and output, all positive: {widths:?}"
        )));
    }
    Ok(())
}

impl MLPModel {
    /// `widths` = `[input, hidden..., classes]`.
    pub fn zeros(widths: &[usize]) -> Result<Self, NnError> {
        check_widths(widths)?;
        Ok(Self {
            layers: widths.windows(2).map(|w| DenseLayer::zeros(w[0], w[1])).collect(),
        })
    }

    pub fn he_uniform(widths: &[usize], seed: u64) -> Result<Self, NnError> {
        check_widths(widths)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(Self {
            layers: widths
                .windows(2)
                .map(|w| DenseLayer::he_uniform(w[0], w[1], &mut rng))
                .collect(),
        })
    }

    pub fn from_layers(layers: Vec<DenseLayer>) -> Result<Self, NnError> {
        if layers.is_empty() {
            return Err(NnError::Shape("model needs at least one layer".into()));
        }
        for (k, l) in layers.iter().enumerate() {
            if l.bias.len() != l.outputs() {
                return Err(NnError::Shape(format!(
                    "layer {k}: bias has {} entries for {} outputs",
                    l.bias.len(),
                    l.outputs()
                )));
            }
        }
        for (k, pair) in layers.windows(2).enumerate() {
            if pair[0].outputs() != pair[1].inputs() {
                return Err(NnError::Shape(format!(
                    "layer {k} outputs {} but layer {} takes {}",
                    pair[0].outputs(),
                    k + 1,
                    pair[1].inputs()
                )));
            }
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [DenseLayer] {
        &mut self.layers
    }

    pub fn widths(&self) -> Vec<usize> {
        std::iter::once(self.layers[0].inputs())
            .chain(self.layers.iter().map(DenseLayer::outputs))
            .collect()
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn num_classes(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs()
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(DenseLayer::num_params).sum()
    }

    /// All parameters, layer by layer, weights (row-major) then bias.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for l in &self.layers {
            l.append_params(&mut out);
        }
        out
    }

    pub fn set_params(&mut self, flat: &[f64]) -> Result<(), NnError> {
        if flat.len() != self.num_params() {
            return Err(NnError::Shape(format!(
                "expected {} parameters, got {}",
                self.num_params(),
                flat.len()
            )));
        }
        let mut offset = 0;
        for l in &mut self.layers {
            offset += l.load_params(&flat[offset..]);
        }
        Ok(())
    }

    fn check_input(&self, x: &[f64]) -> Result<(), NnError> {
        if x.len() != self.input_width() {
            return Err(NnError::Shape(format!(
                "input has {} features, model expects {}",
                x.len(),
                self.input_width()
            )));
        }
        Ok(())
    }

    fn trace(&self, x: &[f64]) -> Trace {
        let last = self.layers.len() - 1;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut a = x.to_vec();
        for (k, layer) in self.layers.iter().enumerate() {
            let z = layer.forward(&a);
            let next = if k == last { Vec::new() } else { z.iter().map(|&v| relu(v)).collect() };
            inputs.push(std::mem::replace(&mut a, next));
            pre.push(z);
        }
        let probs = softmax(&pre[last]);
        Trace { inputs, pre, probs }
    }

    /// Class probabilities for one input vector.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, NnError> {
        self.check_input(x)?;
        Ok(self.trace(x).probs)
    }

    /// Pre-activations of every layer, for kink detection in gradient checks.
    pub fn pre_activations(&self, x: &[f64]) -> Result<Vec<Vec<f64>>, NnError> {
        self.check_input(x)?;
        Ok(self.trace(x).pre)
    }

    fn check_batch(&self, inputs: &[Vec<f64>], labels: &[usize]) -> Result<(), NnError> {
        if inputs.is_empty() {
            return Err(NnError::EmptyBatch);
        }
        if inputs.len() != labels.len() {
            return Err(NnError::Shape(format!(
                "{} inputs but {} labels",
                inputs.len(),
                labels.len()
            )));
        }
        for (x, &y) in inputs.iter().zip(labels) {
            self.check_input(x)?;
            if y >= self.num_classes() {
                return Err(NnError::LabelOutOfRange {
                    label: y,
                    classes: self.num_classes(),
                });
            }
        }
        Ok(())
    }

    /// Mean cross-entropy over a batch.
    pub fn loss(&self, inputs: &[Vec<f64>], labels: &[usize]) -> Result<f64, NnError> {
        self.check_batch(inputs, labels)?;
        let mut total = 0.0;
        for (x, &y) in inputs.iter().zip(labels) {
            total += cross_entropy(&self.trace(x).probs, y)?;
        }
        Ok(total / inputs.len() as f64)
    }

    /// Mean batch loss and its gradient with respect to every parameter.
    ///
    /// Samples are accumulated in batch order so results are bit-reproducible.
    pub fn backward(&self, inputs: &[Vec<f64>], labels: &[usize]) -> Result<(f64, Gradients), NnError> {
        self.check_batch(inputs, labels)?;
        let scale = 1.0 / inputs.len() as f64;
        let mut grads = Gradients {
            layers: self
                .layers
                .iter()
                .map(|l| DenseLayer::zeros(l.inputs(), l.outputs()))
                .collect(),
        };
        let mut total = 0.0;
        for (x, &y) in inputs.iter().zip(labels) {
            let tr = self.trace(x);
            total += cross_entropy(&tr.probs, y)?;
            let mut delta = tr.probs.clone();
            delta[y] -= 1.0;
            for k in (0..self.layers.len()).rev() {
                let g = &mut grads.layers[k];
                g.weights.add_outer(&delta, &tr.inputs[k], scale);
                for (gb, d) in g.bias.iter_mut().zip(&delta) {
                    *gb += scale * d;
                }
                if k > 0 {
                    let mut back = self.layers[k].weights.matvec_t(&delta);
                    for (b, z) in back.iter_mut().zip(&tr.pre[k - 1]) {
                        if *z <= 0.0 {
                            *b = 0.0;
                        }
                    }
                    delta = back;
                }
            }
        }
        Ok((total * scale, grads))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_model_is_uniform() {
        let m = MLPModel::zeros(&[4, 8, 5]).unwrap();
        let p = m.forward(&[1.0, -2.0, 3.0, 0.5]).unwrap();
        assert!(p.iter().all(|&v| (v - 0.2).abs() < 1e-15));
    }

    #[test]
    fn hand_computed_two_by_two() {
        // input 2 -> hidden 1 -> output 2
        let hidden = DenseLayer {
            weights: Tensor2::new(1, 2, vec![1.0, -1.0]).unwrap(),
            bias: vec![0.5],
        };
        let out = DenseLayer {
            weights: Tensor2::new(2, 1, vec![2.0, 0.0]).unwrap(),
            bias: vec![0.0, 3f64.ln()],
        };
        let m = MLPModel::from_layers(vec![hidden, out]).unwrap();
        // h = relu(3 - 1 + 0.5) = 2.5; logits = (5, ln 3)
        let p = m.forward(&[3.0, 1.0]).unwrap();
        let e5 = 5f64.exp();
        assert!((p[0] - e5 / (e5 + 3.0)).abs() < 1e-15);
        // negative pre-activation is clipped: logits = (0, ln 3) -> (0.25, 0.75)
        let p = m.forward(&[0.0, 3.0]).unwrap();
        assert!((p[0] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn output_layer_gradient_closed_form() {
        let m = MLPModel::he_uniform(&[3, 4, 3], 7).unwrap();
        let xs = vec![vec![0.1, -0.4, 0.9], vec![1.0, 0.2, -0.3]];
        let ys = [2, 0];
        let (_, g) = m.backward(&xs, &ys).unwrap();
        let mut expected = vec![0.0; 3];
        for (x, &y) in xs.iter().zip(&ys) {
            let p = m.forward(x).unwrap();
            for c in 0..3 {
                expected[c] += (p[c] - if c == y { 1.0 } else { 0.0 }) / 2.0;
            }
        }
        for (a, b) in g.layers[1].bias.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn degenerate_net_gradients() {
        let m = MLPModel::zeros(&[4, 6, 6, 5]).unwrap();
        let (_, g) = m.backward(&[vec![0.0; 4]], &[1]).unwrap();
        for l in &g.layers {
            assert!(l.weights.data().iter().all(|&v| v == 0.0));
        }
        for l in &g.layers[..2] {
            assert!(l.bias.iter().all(|&v| v == 0.0));
        }
        let expected = [0.2, -0.8, 0.2, 0.2, 0.2];
        for (a, b) in g.layers[2].bias.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn shape_errors() {
        let m = MLPModel::zeros(&[4, 3]).unwrap();
        assert!(matches!(m.forward(&[1.0]), Err(NnError::Shape(_))));
        assert!(matches!(m.backward(&[], &[]), Err(NnError::EmptyBatch)));
        assert!(matches!(
            m.backward(&[vec![0.0; 4]], &[3]),
            Err(NnError::LabelOutOfRange { .. })
        ));
        let bad = vec![DenseLayer::zeros(4, 3), DenseLayer::zeros(2, 2)];
        assert!(MLPModel::from_layers(bad).is_err());
    }

    #[test]
    fn params_round_trip() {
        let mut m = MLPModel::he_uniform(&[4, 5, 3], 1).unwrap();
        let p = m.params();
        assert_eq!(p.len(), 4 * 5 + 5 + 5 * 3 + 3);
        let doubled: Vec<f64> = p.iter().map(|v| v * 2.0).collect();
        m.set_params(&doubled).unwrap();
        assert_eq!(m.params(), doubled);
    }
}
