//! A small, fully verified neural-network kernel: dense layers, ReLU,
//! softmax, cross-entropy, backpropagation, Adam, the Squeeze-and-Excitation
//! block and a versioned weight format.

mod activation;
mod adam;
mod exact;
pub mod gradcheck;
mod mlp;
mod se;
mod tensor;
mod weights;

pub use activation::{cross_entropy, relu, relu_vec, sigmoid, softmax, LOG_FLOOR};
pub use adam::{AdamConfig, AdamState};
pub use gradcheck::{
    check_gradients, check_mlp, gradcheck_mlp, gradcheck_se, numeric_gradient, relative_error, GradCheckReport, GRADCHECK_EPS, GRADCHECK_TOLERANCE,
};
pub use mlp::{DenseLayer, Gradients, MLPModel};
pub use se::{se_forward, FeatureMap, SEBlock, SeClassifier, SeTrace, DEFAULT_SE_REDUCTION};
pub use tensor::Tensor2;
pub use weights::{load_weights, save_weights, LayerRecord, WeightFile, WEIGHTS_FORMAT, WEIGHTS_VERSION};

pub(crate) use weights::parse_versioned;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NnError {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("batch is empty")]
    EmptyBatch,
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("probabilities sum to {0}, not 1")]
    InvalidDistribution(f64),
    #[error("non-finite values in {0}")]
    NonFinite(String),
    #[error("unsupported weight file {found}, expected {expected}")]
    Version { found: String, expected: String },
    #[error("weight file is truncated")]
    Truncated,
    #[error("weight file dimensions inconsistent: {0}")]
    Dimension(String),
    #[error("malformed weight file: {0}")]
    Malformed(String),
}
