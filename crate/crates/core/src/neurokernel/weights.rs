//! Versioned JSON weight files.
//!
//! ```json
//! {
//!   "format": "florimeter-mlp",
//!   "version": 1,
//!   "widths": [4, 32, ..., 5],
//!   "layers": [{"weights": [...], "bias": [...]}, ...]
//! }
//! ```
//!
//! Weights are row-major `out × in`. Floats are written in shortest
//! round-trip form, so a load reproduces the model bit for bit.

use serde::{Deserialize, Serialize};

use super::{DenseLayer, MLPModel, NnError, Tensor2};

pub const WEIGHTS_FORMAT: &str = "florimeter-mlp";
pub const WEIGHTS_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerRecord {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightFile {
    pub format: String,
    pub version: u32,
    pub widths: Vec<usize>,
    pub layers: Vec<LayerRecord>,
}

#[derive(Deserialize)]
struct Header {
    format: String,
    version: u32,
}

impl WeightFile {
    pub fn from_model(model: &MLPModel) -> Self {
        Self {
            format: WEIGHTS_FORMAT.to_string(),
            version: WEIGHTS_VERSION,
            widths: model.widths(),
            layers: model
                .layers()
                .iter()
                .map(|l| LayerRecord {
                    weights: l.weights.data().to_vec(),
                    bias: l.bias.clone(),
                })
                .collect(),
        }
    }

    pub fn check_header(format: &str, version: u32) -> Result<(), NnError> {
        if format != WEIGHTS_FORMAT || version != WEIGHTS_VERSION {
            return Err(NnError::Version {
                found: format!("{format} v{version}"),
                expected: format!("{WEIGHTS_FORMAT} v{WEIGHTS_VERSION}"),
            });
        }
        Ok(())
    }

    pub fn into_model(self) -> Result<MLPModel, NnError> {
        Self::check_header(&self.format, self.version)?;
        if self.widths.len() < 2 || self.widths.len() != self.layers.len() + 1 {
            return Err(NnError::Dimension(format!(
                "{} widths do not describe {} layers",
                self.widths.len(),
                self.layers.len()
            )));
        }
        let mut layers = Vec::with_capacity(self.layers.len());
        for (k, rec) in self.layers.into_iter().enumerate() {
            let (inp, out) = (self.widths[k], self.widths[k + 1]);
            if rec.weights.len() != inp * out || rec.bias.len() != out {
                return Err(NnError::Dimension(format!(
                    "layer {k}: expected {}x{} weights and {} biases, got {} and {}",
                    out,
                    inp,
                    out,
                    rec.weights.len(),
                    rec.bias.len()
                )));
            }
            let weights = Tensor2::new(out, inp, rec.weights)
                .map_err(|e| NnError::Dimension(format!("layer {k}: {e}")))?;
            layers.push(DenseLayer {
                weights,
                bias: rec.bias,
            });
        }
        MLPModel::from_layers(layers)
    }
}

fn json_error(e: serde_json::Error) -> NnError {
    if e.is_eof() {
        NnError::Truncated
    } else {
        NnError::Malformed(e.to_string())
    }
}

/// Parses `bytes`, checking the format/version header before the body.
pub(crate) fn parse_versioned<T: for<'de> Deserialize<'de>>(
    bytes: &[u8],
    check: impl Fn(&str, u32) -> Result<(), NnError>,
) -> Result<T, NnError> {
    let header: Header = serde_json::from_slice(bytes).map_err(json_error)?;
    check(&header.format, header.version)?;
    serde_json::from_slice(bytes).map_err(json_error)
}

pub fn save_weights(model: &MLPModel) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(&WeightFile::from_model(model))
        .expect("weight file serialization cannot fail");
    out.push(b'\n');
    out
}

pub fn load_weights(bytes: &[u8]) -> Result<MLPModel, NnError> {
    parse_versioned::<WeightFile>(bytes, WeightFile::check_header)?.into_model()
}
