use serde::{Deserialize, Serialize};

use super::TfscError;
use crate::stage::{StageLabel, NUM_STAGES};

/// Rows are true stages, columns predicted stages, both in ordinal order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassConfusion {
    pub matrix: [[u64; NUM_STAGES]; NUM_STAGES],
}

impl ClassConfusion {
    pub fn get(&self, truth: StageLabel, pred: StageLabel) -> u64 {
        self.matrix[truth.index()][pred.index()]
    }

    pub fn total(&self) -> u64 {
        self.matrix.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..NUM_STAGES).map(|i| self.matrix[i][i]).sum()
    }

    pub fn row_total(&self, truth: StageLabel) -> u64 {
        self.matrix[truth.index()].iter().sum()
    }

    pub fn accuracy(&self) -> f64 {
        self.trace() as f64 / self.total() as f64
    }

    pub fn off_diagonal(&self) -> u64 {
        self.total() - self.trace()
    }

    /// Off-diagonal entries whose true and predicted stages are one step apart.
    pub fn adjacent_errors(&self) -> u64 {
        (0..NUM_STAGES)
            .flat_map(|i| (0..NUM_STAGES).map(move |j| (i, j)))
            .filter(|&(i, j)| i.abs_diff(j) == 1)
            .map(|(i, j)| self.matrix[i][j])
            .sum()
    }

    /// Share of misclassifications on adjacent stages; `None` without errors.
    pub fn adjacent_fraction(&self) -> Option<f64> {
        let off = self.off_diagonal();
        (off > 0).then(|| self.adjacent_errors() as f64 / off as f64)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("true\\pred");
        for s in StageLabel::ALL {
            out.push(',');
            out.push_str(s.as_str());
        }
        out.push('\n');
        for s in StageLabel::ALL {
            out.push_str(s.as_str());
            for v in self.matrix[s.index()] {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }
}

fn check(preds: &[StageLabel], labels: &[StageLabel]) -> Result<(), TfscError> {
    if preds.len() != labels.len() {
        return Err(TfscError::LengthMismatch {
            preds: preds.len(),
            labels: labels.len(),
        });
    }
    if preds.is_empty() {
        return Err(TfscError::Empty);
    }
    Ok(())
}

/// Fraction of predictions equal to their label.
pub fn accuracy(preds: &[StageLabel], labels: &[StageLabel]) -> Result<f64, TfscError> {
    check(preds, labels)?;
    let correct = preds.iter().zip(labels).filter(|(p, l)| p == l).count();
    Ok(correct as f64 / preds.len() as f64)
}

pub fn confusion(preds: &[StageLabel], labels: &[StageLabel]) -> Result<ClassConfusion, TfscError> {
    check(preds, labels)?;
    let mut c = ClassConfusion::default();
    for (p, l) in preds.iter().zip(labels) {
        c.matrix[l.index()][p.index()] += 1;
    }
    Ok(c)
}
