use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use florimeter_core::geom::{DEFAULT_CONF_THRESHOLD, DEFAULT_NMS_IOU};
use florimeter_core::neurokernel::GRADCHECK_TOLERANCE;

use crate::config::DEFAULT_SEED;

#[derive(Debug, Parser)]
#[command(name = "florimeter", version, about = "Tea-flowering quantification pipeline")]
pub struct Cli {
    /// TOML configuration file; flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Worker threads for per-image work (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,

    /// RNG seed; overrides FLORIMETER_SEED and the config file.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate detections against YOLO labels (P, R, F1, AP, mAP).
    Eval(EvalArgs),
    /// Count detections per class and image into a CSV.
    Count(CountArgs),
    /// Build the train/val/test stage dataset from a stage CSV.
    BuildStageDs(BuildStageArgs),
    /// Train the stage classifier on a built dataset.
    TrainTfsc(TrainArgs),
    /// Predict flowering stages with a trained model.
    PredictStage(PredictArgs),
    /// Flowering time series, stage timelines and condition comparisons.
    Dynamics(DynamicsArgs),
    /// Verify analytic gradients against central finite differences.
    Gradcheck(GradcheckArgs),
    /// Write a synthetic labeled stage CSV.
    SynthStages(SynthArgs),
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Directory of ground-truth label files (<image_id>.txt).
    #[arg(long, value_name = "DIR")]
    pub labels: Option<PathBuf>,
    /// Directory of detection files (<image_id>.txt, with confidence).
    #[arg(long, value_name = "DIR")]
    pub detections: Option<PathBuf>,
    /// Manifest CSV, required with --per-dataset.
    #[arg(long, value_name = "FILE")]
    pub manifest: Option<PathBuf>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Confidence floor for P/R/F1.
    #[arg(long, default_value_t = DEFAULT_CONF_THRESHOLD)]
    pub conf: f64,
    /// IoU threshold for P/R/F1 matching.
    #[arg(long, default_value_t = 0.5)]
    pub pr_iou: f64,
    /// IoU threshold for an extra AP column; repeatable.
    #[arg(long, default_values_t = [0.5])]
    pub iou: Vec<f64>,
    /// Also report each dataset group on its own.
    #[arg(long, default_value_t = false)]
    pub per_dataset: bool,
    /// Manifest column defining a dataset group.
    #[arg(long, default_value = "accession", value_parser = ["accession", "condition", "date"])]
    pub group_by: String,
}

#[derive(Debug, Args)]
pub struct CountArgs {
    /// Directory of detection files.
    #[arg(long, value_name = "DIR")]
    pub detections: Option<PathBuf>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Minimum confidence of a counted detection.
    #[arg(long, default_value_t = DEFAULT_CONF_THRESHOLD)]
    pub conf: f64,
    /// IoU above which a same-class detection is suppressed.
    #[arg(long, default_value_t = DEFAULT_NMS_IOU)]
    pub nms_iou: f64,
    /// Count detections as given, without suppression.
    #[arg(long, default_value_t = false)]
    pub no_nms: bool,
}

#[derive(Debug, Args)]
pub struct BuildStageArgs {
    /// Stage CSV (accession,date,bud,b_flower,w_flower,stage).
    #[arg(long, value_name = "FILE")]
    pub stage_csv: PathBuf,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Drop accession/date groups with a lower mean total count.
    #[arg(long, default_value_t = 5.0)]
    pub min_mean_total: f64,
    /// Validation share of the non-test samples.
    #[arg(long, default_value_t = 0.2)]
    pub val_fraction: f64,
    /// Season year routed to the test split; repeatable.
    #[arg(long, default_values_t = [2024])]
    pub test_year: Vec<i32>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Dataset written by build-stage-ds.
    #[arg(long, value_name = "FILE")]
    pub dataset: PathBuf,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Hidden layer widths.
    #[arg(long, value_delimiter = ',', default_values_t = [32usize, 64, 64, 32, 16, 8])]
    pub hidden: Vec<usize>,
    #[arg(long, default_value_t = 16)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 0.001)]
    pub lr: f64,
    #[arg(long, default_value_t = 80)]
    pub epochs: usize,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Model file written by train-tfsc.
    #[arg(long, value_name = "FILE")]
    pub model: PathBuf,
    /// Stage CSV to classify (stage column may be empty).
    #[arg(long, value_name = "FILE", conflicts_with = "dataset")]
    pub input: Option<PathBuf>,
    /// Dataset written by build-stage-ds, classified split by split.
    #[arg(long, value_name = "FILE")]
    pub dataset: Option<PathBuf>,
    /// Split of --dataset to classify.
    #[arg(long, value_enum, default_value_t = Split::Test)]
    pub split: Split,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Split {
    Train,
    Val,
    Test,
}

#[derive(Debug, Args)]
pub struct DynamicsArgs {
    /// Counts CSV (image_id,bud,b_flower,w_flower).
    #[arg(long, value_name = "FILE")]
    pub counts: PathBuf,
    /// Manifest CSV (image_id,accession,date,condition).
    #[arg(long, value_name = "FILE")]
    pub manifest: Option<PathBuf>,
    /// Trained stage model; enables stage timelines.
    #[arg(long, value_name = "FILE")]
    pub model: Option<PathBuf>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Ascending quantity-level thresholds on mean total count.
    #[arg(long, value_delimiter = ',', default_values_t = [5.0, 20.0, 50.0])]
    pub levels: Vec<f64>,
    /// Skip the SVG charts.
    #[arg(long, default_value_t = false)]
    pub no_svg: bool,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    /// Number of seeds checked, starting at --seed.
    #[arg(long, default_value_t = 20)]
    pub seeds: u64,
    /// Batch size of each check.
    #[arg(long, default_value_t = 4)]
    pub batch: usize,
    /// Hidden layer widths of the checked network.
    #[arg(long, value_delimiter = ',', default_values_t = [32usize, 64, 64, 32, 16, 8])]
    pub hidden: Vec<usize>,
    /// Largest accepted relative error.
    #[arg(long, default_value_t = GRADCHECK_TOLERANCE)]
    pub tolerance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Separable,
    Overlapping,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output stage CSV.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Mode::Separable)]
    pub mode: Mode,
    #[arg(long, default_value_t = 30)]
    pub accessions: usize,
    /// Season years to generate; repeatable.
    #[arg(long, default_values_t = [2023])]
    pub year: Vec<i32>,
}
