use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Manually observed flowering stage, in ordinal order.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub enum StageLabel {
    /// Initial flowering stage.
    IFS,
    /// Early peak.
    EFS,
    /// Mid peak.
    MFS,
    /// Late peak.
    LFS,
    /// Terminal flowering stage.
    TFS,
}

pub const NUM_STAGES: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown stage '{0}', expected one of IFS, EFS, MFS, LFS, TFS")]
pub struct UnknownStage(pub String);

impl StageLabel {
    pub const ALL: [StageLabel; NUM_STAGES] = [
        StageLabel::IFS,
        StageLabel::EFS,
        StageLabel::MFS,
        StageLabel::LFS,
        StageLabel::TFS,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            StageLabel::IFS => "IFS",
            StageLabel::EFS => "EFS",
            StageLabel::MFS => "MFS",
            StageLabel::LFS => "LFS",
            StageLabel::TFS => "TFS",
        }
    }

    /// EFS, MFS and LFS together make up the peak flowering stage.
    pub fn is_peak(self) -> bool {
        matches!(self, StageLabel::EFS | StageLabel::MFS | StageLabel::LFS)
    }
}

impl fmt::Display for StageLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StageLabel {
    type Err = UnknownStage;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| UnknownStage(s.to_string()))
    }
}
