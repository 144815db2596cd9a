use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dataset::{StageDataset, NUM_FEATURES};
use super::TfscError;
use crate::neurokernel::{AdamConfig, AdamState, MLPModel};
use crate::stage::NUM_STAGES;

pub const DEFAULT_HIDDEN: [usize; 6] = [32, 64, 64, 32, 16, 8];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainParams {
    pub hidden: Vec<usize>,
    pub batch_size: usize,
    pub epochs: usize,
    pub adam: AdamConfig,
    pub seed: u64,
}

impl Default for TrainParams {
    fn default() -> Self {
        Self {
            hidden: DEFAULT_HIDDEN.to_vec(),
            batch_size: 16,
            epochs: 80,
            adam: AdamConfig::default(),
            seed: 42,
        }
    }
}

impl TrainParams {
    pub fn widths(&self) -> Vec<usize> {
        let mut w = vec![NUM_FEATURES];
        w.extend_from_slice(&self.hidden);
        w.push(NUM_STAGES);
        w
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    /// Mean loss over the whole training split after the epoch's updates.
    pub train_loss: f64,
    pub val_accuracy: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochLog>,
}

impl TrainReport {
    pub fn final_val_accuracy(&self) -> Option<f64> {
        self.epochs.last().and_then(|e| e.val_accuracy)
    }

    /// `epoch,train_loss,val_accuracy`; a missing accuracy is an empty field.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,val_accuracy\n");
        for e in &self.epochs {
            let acc = e.val_accuracy.map(|a| a.to_string()).unwrap_or_default();
            out.push_str(&format!("{},{},{}\n", e.epoch, e.train_loss, acc));
        }
        out
    }
}

fn split_accuracy(model: &MLPModel, xs: &[Vec<f64>], ys: &[usize]) -> Result<Option<f64>, TfscError> {
    if xs.is_empty() {
        return Ok(None);
    }
    let mut correct = 0;
    for (x, &y) in xs.iter().zip(ys) {
        if super::model::argmax_index(&model.forward(x)?) == y {
            correct += 1;
        }
    }
    Ok(Some(correct as f64 / xs.len() as f64))
}

/// Mini-batch Adam on cross-entropy with a seeded shuffle each epoch.
/// Returns the model after the final epoch.
pub fn train_tfsc(ds: &StageDataset, params: &TrainParams) -> Result<(MLPModel, TrainReport), TfscError> {
    if ds.train.is_empty() {
        return Err(TfscError::EmptyTrain);
    }
    if params.batch_size == 0 || params.epochs == 0 {
        return Err(TfscError::Config("batch size and epochs must be positive".into()));
    }
    let lr = params.adam.lr;
    if !(lr.is_finite() && lr >= 0.0) {
        return Err(TfscError::Config(format!("learning rate must be finite and >= 0, got {lr}")));
    }
    let (train_x, train_y) = ds.standardized(&ds.train)?;
    let (val_x, val_y) = ds.standardized(&ds.val)?;

    let mut model = MLPModel::he_uniform(&params.widths(), params.seed)?;
    let mut theta = model.params();
    let mut adam = AdamState::new(theta.len(), params.adam);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed.wrapping_add(0x9e37_79b9_7f4a_7c15));
    let mut order: Vec<usize> = (0..train_x.len()).collect();
    let mut report = TrainReport::default();

    for epoch in 1..=params.epochs {
        order.shuffle(&mut rng);
        for (batch, idx) in order.chunks(params.batch_size).enumerate() {
            let xs: Vec<Vec<f64>> = idx.iter().map(|&i| train_x[i].clone()).collect();
            let ys: Vec<usize> = idx.iter().map(|&i| train_y[i]).collect();
            let (loss, grads) = model.backward(&xs, &ys)?;
            if !loss.is_finite() {
                return Err(TfscError::NonFiniteLoss { epoch, batch, loss });
            }
            adam.step(&mut theta, &grads.flat())?;
            model.set_params(&theta)?;
        }
        let train_loss = model.loss(&train_x, &train_y)?;
        if !train_loss.is_finite() {
            return Err(TfscError::NonFiniteLoss {
                epoch,
                batch: usize::MAX,
                loss: train_loss,
            });
        }
        report.epochs.push(EpochLog {
            epoch,
            train_loss,
            val_accuracy: split_accuracy(&model, &val_x, &val_y)?,
        });
    }
    Ok((model, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tfsc::{build_stage_dataset, synthetic_stage_rows, ClusterMode, DatasetConfig, SynthConfig};

    fn small_dataset() -> StageDataset {
        let rows = synthetic_stage_rows(&SynthConfig {
            accessions: 4,
            ..SynthConfig::new(ClusterMode::Separable, 3)
        });
        build_stage_dataset(&rows, &DatasetConfig::default()).unwrap()
    }

    fn short(seed: u64) -> TrainParams {
        TrainParams {
            epochs: 3,
            seed,
            ..TrainParams::default()
        }
    }

    #[test]
    fn same_seed_same_curve() {
        let ds = small_dataset();
        let (m1, r1) = train_tfsc(&ds, &short(7)).unwrap();
        let (m2, r2) = train_tfsc(&ds, &short(7)).unwrap();
        assert_eq!(r1, r2);
        assert_eq!(m1, m2);
        let (_, r3) = train_tfsc(&ds, &short(8)).unwrap();
        assert_ne!(r1, r3);
    }

    #[test]
    fn zero_learning_rate_is_flat() {
        let ds = small_dataset();
        let mut p = short(1);
        p.adam.lr = 0.0;
        let (model, report) = train_tfsc(&ds, &p).unwrap();
        assert_eq!(model, MLPModel::he_uniform(&p.widths(), 1).unwrap());
        let first = report.epochs[0].train_loss;
        assert!(report.epochs.iter().all(|e| e.train_loss == first));
    }

    #[test]
    fn report_csv_layout() {
        let r = TrainReport {
            epochs: vec![
                EpochLog { epoch: 1, train_loss: 1.5, val_accuracy: Some(0.25) },
                EpochLog { epoch: 2, train_loss: 1.25, val_accuracy: None },
            ],
        };
        assert_eq!(r.to_csv(), "epoch,train_loss,val_accuracy\n1,1.5,0.25\n2,1.25,\n");
    }

    #[test]
    fn rejects_bad_params() {
        let ds = small_dataset();
        let mut p = short(1);
        p.batch_size = 0;
        assert!(matches!(train_tfsc(&ds, &p), Err(TfscError::Config(_))));
        let mut p = short(1);
        p.adam.lr = f64::NAN;
        assert!(matches!(train_tfsc(&ds, &p), Err(TfscError::Config(_))));
    }
}
