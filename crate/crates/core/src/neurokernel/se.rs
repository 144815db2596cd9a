//! Squeeze-and-Excitation channel attention.
//!
//! squeeze: per-channel global average pool `z ∈ R^C`;
//! excitation: `s = sigmoid(fc2 · relu(fc1 · z))`;
//! scale: output channel `c` is `s_c` times input channel `c`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::activation::{cross_entropy, relu, sigmoid, softmax};
use super::{DenseLayer, NnError, Tensor2};

pub const DEFAULT_SE_REDUCTION: usize = 4;

/// Channel-major `C × H × W` activation map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMap {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<f64>,
}

impl FeatureMap {
    pub fn new(channels: usize, height: usize, width: usize, data: Vec<f64>) -> Result<Self, NnError> {
        if channels * height * width == 0 || data.len() != channels * height * width {
            return Err(NnError::Shape(format!(
                "feature map {channels}x{height}x{width} cannot hold {} values",
                data.len()
            )));
        }
        Ok(Self {
            channels,
            height,
            width,
            data,
        })
    }

    pub fn plane(&self, c: usize) -> &[f64] {
        let hw = self.height * self.width;
        &self.data[c * hw..(c + 1) * hw]
    }

    pub fn channel_means(&self) -> Vec<f64> {
        let hw = (self.height * self.width) as f64;
        (0..self.channels)
            .map(|c| self.plane(c).iter().sum::<f64>() / hw)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SEBlock {
    pub channels: usize,
    pub reduction: usize,
    /// `hidden × C`
    pub fc1: Tensor2,
    /// `C × hidden`
    pub fc2: Tensor2,
}

/// Intermediate values of an SE forward pass.
#[derive(Debug, Clone)]
pub struct SeTrace {
    pub squeeze: Vec<f64>,
    pub hidden_pre: Vec<f64>,
    pub hidden: Vec<f64>,
    pub scale: Vec<f64>,
    pub output: FeatureMap,
}

impl SEBlock {
    /// Hidden width `ceil(C / r)`, at least 1.
    pub fn hidden_width(channels: usize, reduction: usize) -> usize {
        channels.div_ceil(reduction.max(1)).max(1)
    }

    pub fn zeros(channels: usize, reduction: usize) -> Result<Self, NnError> {
        if channels == 0 || reduction == 0 {
            return Err(NnError::Shape(format!(
                "SE block needs positive channels and reduction, got C={channels}, r={reduction}"
            )));
        }
        let hidden = Self::hidden_width(channels, reduction);
        Ok(Self {
            channels,
            reduction,
            fc1: Tensor2::zeros(hidden, channels),
            fc2: Tensor2::zeros(channels, hidden),
        })
    }

    /// He-uniform initialised block.
    pub fn random(channels: usize, reduction: usize, seed: u64) -> Result<Self, NnError> {
        let mut block = Self::zeros(channels, reduction)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for t in [&mut block.fc1, &mut block.fc2] {
            let limit = (6.0 / t.cols() as f64).sqrt();
            for w in t.data_mut() {
                *w = rng.random_range(-limit..limit);
            }
        }
        Ok(block)
    }

    pub fn hidden(&self) -> usize {
        self.fc1.rows()
    }

    pub fn trace(&self, x: &FeatureMap) -> Result<SeTrace, NnError> {
        if x.channels != self.channels {
            return Err(NnError::Shape(format!(
                "SE block has {} channels, feature map has {}",
                self.channels, x.channels
            )));
        }
        let squeeze = x.channel_means();
        let hidden_pre = self.fc1.matvec(&squeeze);
        let hidden: Vec<f64> = hidden_pre.iter().map(|&v| relu(v)).collect();
        let scale: Vec<f64> = self.fc2.matvec(&hidden).into_iter().map(sigmoid).collect();
        let hw = x.height * x.width;
        let data = x
            .data
            .iter()
            .enumerate()
            .map(|(i, v)| v * scale[i / hw])
            .collect();
        Ok(SeTrace {
            squeeze,
            hidden_pre,
            hidden,
            scale,
            output: FeatureMap { data, ..x.clone() },
        })
    }
}

/// Applies the SE block to a feature map.
pub fn se_forward(block: &SEBlock, x: &FeatureMap) -> Result<FeatureMap, NnError> {
    Ok(block.trace(x)?.output)
}

/// `input → SE → flatten → dense → softmax`, used to verify SE gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct SeClassifier {
    pub se: SEBlock,
    pub head: DenseLayer,
}

impl SeClassifier {
    pub fn random(channels: usize, height: usize, width: usize, classes: usize, reduction: usize, seed: u64) -> Result<Self, NnError> {
        let se = SEBlock::random(channels, reduction, seed)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5e5e_5e5e);
        let head = DenseLayer::he_uniform(channels * height * width, classes, &mut rng);
        let mut clf = Self { se, head };
        // small non-zero bias so bias gradients are exercised away from symmetry
        for b in &mut clf.head.bias {
            *b = rng.random_range(-0.1..0.1);
        }
        Ok(clf)
    }

    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::new();
        out.extend_from_slice(self.se.fc1.data());
        out.extend_from_slice(self.se.fc2.data());
        out.extend_from_slice(self.head.weights.data());
        out.extend_from_slice(&self.head.bias);
        out
    }

    pub fn set_params(&mut self, flat: &[f64]) -> Result<(), NnError> {
        let sizes = [
            self.se.fc1.data().len(),
            self.se.fc2.data().len(),
            self.head.weights.data().len(),
            self.head.bias.len(),
        ];
        if flat.len() != sizes.iter().sum::<usize>() {
            return Err(NnError::Shape(format!(
                "expected {} parameters, got {}",
                sizes.iter().sum::<usize>(),
                flat.len()
            )));
        }
        let (a, rest) = flat.split_at(sizes[0]);
        let (b, rest) = rest.split_at(sizes[1]);
        let (c, d) = rest.split_at(sizes[2]);
        self.se.fc1.data_mut().copy_from_slice(a);
        self.se.fc2.data_mut().copy_from_slice(b);
        self.head.weights.data_mut().copy_from_slice(c);
        self.head.bias.copy_from_slice(d);
        Ok(())
    }

    pub fn forward(&self, x: &FeatureMap) -> Result<Vec<f64>, NnError> {
        let tr = self.se.trace(x)?;
        Ok(softmax(&self.head.forward(&tr.output.data)))
    }

    pub fn loss(&self, xs: &[FeatureMap], labels: &[usize]) -> Result<f64, NnError> {
        if xs.is_empty() || xs.len() != labels.len() {
            return Err(NnError::EmptyBatch);
        }
        let mut total = 0.0;
        for (x, &y) in xs.iter().zip(labels) {
            total += cross_entropy(&self.forward(x)?, y)?;
        }
        Ok(total / xs.len() as f64)
    }

    /// Mean loss and flat gradient in [`SeClassifier::params`] order.
    pub fn backward(&self, xs: &[FeatureMap], labels: &[usize]) -> Result<(f64, Vec<f64>), NnError> {
        if xs.is_empty() || xs.len() != labels.len() {
            return Err(NnError::EmptyBatch);
        }
        let scale = 1.0 / xs.len() as f64;
        let mut g_fc1 = Tensor2::zeros(self.se.fc1.rows(), self.se.fc1.cols());
        let mut g_fc2 = Tensor2::zeros(self.se.fc2.rows(), self.se.fc2.cols());
        let mut g_head = DenseLayer::zeros(self.head.inputs(), self.head.outputs());
        let mut total = 0.0;
        for (x, &y) in xs.iter().zip(labels) {
            let tr = self.se.trace(x)?;
            let probs = softmax(&self.head.forward(&tr.output.data));
            total += cross_entropy(&probs, y)?;
            let mut delta = probs;
            delta[y] -= 1.0;
            g_head.weights.add_outer(&delta, &tr.output.data, scale);
            for (g, d) in g_head.bias.iter_mut().zip(&delta) {
                *g += scale * d;
            }
            // dL/d(SE output), then dL/ds_c = Σ_hw dy · x
            let d_out = self.head.weights.matvec_t(&delta);
            let hw = x.height * x.width;
            let d_scale: Vec<f64> = (0..x.channels)
                .map(|c| {
                    d_out[c * hw..(c + 1) * hw]
                        .iter()
                        .zip(x.plane(c))
                        .map(|(a, b)| a * b)
                        .sum()
                })
                .collect();
            let d_exc: Vec<f64> = d_scale
                .iter()
                .zip(&tr.scale)
                .map(|(d, s)| d * s * (1.0 - s))
                .collect();
            g_fc2.add_outer(&d_exc, &tr.hidden, scale);
            let mut d_hidden = self.se.fc2.matvec_t(&d_exc);
            for (d, z) in d_hidden.iter_mut().zip(&tr.hidden_pre) {
                if *z <= 0.0 {
                    *d = 0.0;
                }
            }
            g_fc1.add_outer(&d_hidden, &tr.squeeze, scale);
        }
        let mut flat = Vec::new();
        flat.extend_from_slice(g_fc1.data());
        flat.extend_from_slice(g_fc2.data());
        flat.extend_from_slice(g_head.weights.data());
        flat.extend_from_slice(&g_head.bias);
        Ok((total * scale, flat))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(c: usize, h: usize, w: usize) -> FeatureMap {
        let data = (0..c * h * w).map(|i| (i as f64 * 0.37).sin() * 2.0).collect();
        FeatureMap::new(c, h, w, data).unwrap()
    }

    #[test]
    fn zero_weights_halve_the_input() {
        let block = SEBlock::zeros(4, 4).unwrap();
        let x = ramp(4, 3, 2);
        let y = se_forward(&block, &x).unwrap();
        for (a, b) in y.data.iter().zip(&x.data) {
            assert_eq!(*a, 0.5 * b);
        }
    }

    #[test]
    fn squeeze_of_constant_channel() {
        let data: Vec<f64> = [1.5, -2.0, 7.25].iter().flat_map(|&v| vec![v; 6]).collect();
        let x = FeatureMap::new(3, 2, 3, data).unwrap();
        let tr = SEBlock::random(3, 4, 9).unwrap().trace(&x).unwrap();
        assert_eq!(tr.squeeze, vec![1.5, -2.0, 7.25]);
    }

    #[test]
    fn hidden_width_rounds_up() {
        assert_eq!(SEBlock::hidden_width(4, 4), 1);
        assert_eq!(SEBlock::hidden_width(6, 4), 2);
        assert_eq!(SEBlock::hidden_width(3, 4), 1);
        assert_eq!(SEBlock::zeros(6, 4).unwrap().fc1.rows(), 2);
    }

    #[test]
    fn channel_mismatch() {
        let block = SEBlock::zeros(4, 2).unwrap();
        assert!(matches!(se_forward(&block, &ramp(3, 2, 2)), Err(NnError::Shape(_))));
    }

    #[test]
    fn classifier_params_round_trip() {
        let mut clf = SeClassifier::random(4, 2, 2, 3, 2, 1).unwrap();
        let p = clf.params();
        assert_eq!(p.len(), 2 * 4 + 4 * 2 + 16 * 3 + 3);
        clf.set_params(&p).unwrap();
        assert_eq!(clf.params(), p);
    }
}
