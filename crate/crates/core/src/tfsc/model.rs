//! Trained classifier: network, scaler and stage order in one versioned file.

use serde::{Deserialize, Serialize};

use super::dataset::Scaler;
use super::TfscError;
use crate::neurokernel::{parse_versioned, MLPModel, NnError, WeightFile};
use crate::stage::{StageLabel, NUM_STAGES};

pub const MODEL_FORMAT: &str = "florimeter-tfsc";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct StageClassifier {
    pub model: MLPModel,
    pub scaler: Scaler,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    stages: Vec<StageLabel>,
    scaler: Scaler,
    network: WeightFile,
}

fn check_header(format: &str, version: u32) -> Result<(), NnError> {
    if format != MODEL_FORMAT || version != MODEL_VERSION {
        return Err(NnError::Version {
            found: format!("{format} v{version}"),
            expected: format!("{MODEL_FORMAT} v{MODEL_VERSION}"),
        });
    }
    Ok(())
}

pub fn save_classifier(clf: &StageClassifier) -> Vec<u8> {
    let file = ModelFile {
        format: MODEL_FORMAT.into(),
        version: MODEL_VERSION,
        stages: StageLabel::ALL.to_vec(),
        scaler: clf.scaler.clone(),
        network: WeightFile::from_model(&clf.model),
    };
    let mut out = serde_json::to_vec_pretty(&file).expect("model serialization cannot fail");
    out.push(b'\n');
    out
}

pub fn load_classifier(bytes: &[u8]) -> Result<StageClassifier, TfscError> {
    let file: ModelFile = parse_versioned(bytes, check_header)?;
    if file.stages != StageLabel::ALL {
        return Err(NnError::Dimension(format!("unexpected stage order {:?}", file.stages)).into());
    }
    let model = file.network.into_model()?;
    if model.num_classes() != NUM_STAGES || model.input_width() != file.scaler.mean.len() {
        return Err(NnError::Dimension(format!(
            "network maps {} features to {} classes, scaler has {} features",
            model.input_width(),
            model.num_classes(),
            file.scaler.mean.len()
        ))
        .into());
    }
    if file.scaler.std.len() != file.scaler.mean.len() || file.scaler.std.iter().any(|s| s.is_nan() || *s <= 0.0) {
        return Err(NnError::Dimension("scaler std must be positive for every feature".into()).into());
    }
    Ok(StageClassifier {
        model,
        scaler: file.scaler,
    })
}

/// Index of the largest entry; ties go to the lowest index.
pub(crate) fn argmax_index(probs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > probs[best] {
            best = i;
        }
    }
    best
}

pub fn argmax_stage(probs: &[f64]) -> StageLabel {
    StageLabel::from_index(argmax_index(probs)).expect("five-way output")
}

/// Standardizes raw `[bud, b_flower, w_flower, time]` and classifies it.
pub fn predict_stage(model: &MLPModel, scaler: &Scaler, raw: &[f64]) -> Result<(StageLabel, Vec<f64>), TfscError> {
    let x = scaler.transform(raw)?;
    let probs = model.forward(&x)?;
    Ok((argmax_stage(&probs), probs))
}

impl StageClassifier {
    pub fn predict(&self, raw: &[f64]) -> Result<(StageLabel, Vec<f64>), TfscError> {
        predict_stage(&self.model, &self.scaler, raw)
    }
}
