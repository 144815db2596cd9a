//! Tea-flowering quantification downstream of an object detector.
//!
//! * [`geom`]: boxes, IoU, confidence composition, NMS
//! * [`annotio`]: YOLO label/detection files, counts and stage CSVs, tiling
//! * [`evalkit`]: matching, P/R/F1, AP, mAP50, mAP50-95, R²
//! * [`neurokernel`]: a small dense network with backprop, Adam and an SE block
//! * [`tfsc`]: flowering-stage dataset construction and classifier
//! * [`dynamics`]: per-accession time series, stage timelines and group tests

pub mod annotio;
pub mod dynamics;
pub mod evalkit;
pub mod geom;
pub mod neurokernel;
pub mod stage;
pub mod tfsc;

pub use stage::StageLabel;
