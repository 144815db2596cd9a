use std::fmt::Write as _;
use std::path::Path;

use clap::ArgMatches;
use serde::Serialize;

use florimeter_core::annotio::{parse_stage_csv, write_stage_csv};
use florimeter_core::neurokernel::AdamConfig;
use florimeter_core::tfsc::{
    accuracy, build_stage_dataset, confusion, encode_time, load_classifier, save_classifier, season_start_for,
    synthetic_stage_rows, train_tfsc, triplet_average, ClassConfusion, ClusterMode, DatasetConfig, StageClassifier,
    StageDataset, StageLabel, SynthConfig, TrainParams,
};

use super::eval::to_json;
use crate::args::{BuildStageArgs, Mode, PredictArgs, Split, SynthArgs, TrainArgs};
use crate::config::{self, RunConfig};
use crate::error::{CliError, CliResult, Context};
use crate::fsio;

pub const DATASET_FILE: &str = "stage_dataset.json";
pub const MODEL_FILE: &str = "tfsc_model.json";
pub const TRAIN_LOG: &str = "training_log.csv";
pub const TRAIN_REPORT: &str = "train_report.json";
pub const PREDICTIONS: &str = "predictions.csv";
pub const PREDICT_REPORT: &str = "predict_report.json";

fn out_dir(m: &ArgMatches, cfg: &mut RunConfig) -> CliResult<std::path::PathBuf> {
    config::apply_path(m, "out", &mut cfg.paths.out);
    let out = config::require(&cfg.paths.out, "out", "out")?;
    fsio::ensure_dir(&out)?;
    Ok(out)
}

pub fn build(a: &BuildStageArgs, m: &ArgMatches, mut cfg: RunConfig) -> CliResult<()> {
    config::apply(m, "min_mean_total", &mut cfg.stage.min_mean_total);
    config::apply(m, "val_fraction", &mut cfg.stage.val_fraction);
    config::apply_many(m, "test_year", &mut cfg.stage.test_years);
    let rows = parse_stage_csv(&fsio::read_text(&a.stage_csv)?).context(a.stage_csv.display())?;
    let ds = build_stage_dataset(
        &rows,
        &DatasetConfig {
            min_mean_total: cfg.stage.min_mean_total,
            val_fraction: cfg.stage.val_fraction,
            test_season_years: cfg.stage.test_years.clone(),
            seed: cfg.seed,
        },
    )
    .context("building the stage dataset")?;
    let out = out_dir(m, &mut cfg)?;
    fsio::write(&out.join(DATASET_FILE), to_json(&ds))?;
    cfg.echo(&out)?;
    for w in &ds.warnings {
        eprintln!("warning: {w}");
    }
    println!(
        "train {} / val {} / test {} samples ({} rows filtered, {} unlabeled)",
        ds.train.len(),
        ds.val.len(),
        ds.test.len(),
        ds.filtered_out,
        ds.unlabeled_excluded
    );
    Ok(())
}

fn load_dataset(path: &Path) -> CliResult<StageDataset> {
    serde_json::from_slice(&fsio::read_bytes(path)?).context(path.display())
}

#[derive(Serialize)]
struct TrainSummary<'a> {
    epochs: usize,
    final_train_loss: f64,
    final_val_accuracy: Option<f64>,
    val_confusion: Option<ClassConfusion>,
    params: &'a TrainParams,
}

pub fn train(a: &TrainArgs, m: &ArgMatches, mut cfg: RunConfig) -> CliResult<()> {
    config::apply_many(m, "hidden", &mut cfg.stage.hidden);
    config::apply(m, "batch_size", &mut cfg.stage.batch_size);
    config::apply(m, "lr", &mut cfg.stage.lr);
    config::apply(m, "epochs", &mut cfg.stage.epochs);
    let ds = load_dataset(&a.dataset)?;
    let params = TrainParams {
        hidden: cfg.stage.hidden.clone(),
        batch_size: cfg.stage.batch_size,
        epochs: cfg.stage.epochs,
        adam: AdamConfig {
            lr: cfg.stage.lr,
            ..AdamConfig::default()
        },
        seed: cfg.seed,
    };
    let (model, report) = train_tfsc(&ds, &params).context("training")?;
    let clf = StageClassifier {
        model,
        scaler: ds.scaler.clone(),
    };
    let val_confusion = if ds.val.is_empty() {
        None
    } else {
        let (preds, labels) = predict_samples(&clf, &ds, Split::Val)?;
        Some(confusion(&preds, &labels).context("confusion")?)
    };
    let summary = TrainSummary {
        epochs: report.epochs.len(),
        final_train_loss: report.epochs.last().map_or(f64::NAN, |e| e.train_loss),
        final_val_accuracy: report.final_val_accuracy(),
        val_confusion,
        params: &params,
    };

    let out = out_dir(m, &mut cfg)?;
    fsio::write(&out.join(MODEL_FILE), save_classifier(&clf))?;
    fsio::write(&out.join(TRAIN_LOG), report.to_csv())?;
    fsio::write(&out.join(TRAIN_REPORT), to_json(&summary))?;
    cfg.echo(&out)?;
    match summary.final_val_accuracy {
        Some(acc) => println!("trained {} epochs, validation accuracy {acc:.4}", summary.epochs),
        None => println!("trained {} epochs, no validation samples", summary.epochs),
    }
    Ok(())
}

fn predict_samples(clf: &StageClassifier, ds: &StageDataset, split: Split) -> CliResult<(Vec<StageLabel>, Vec<StageLabel>)> {
    let samples = match split {
        Split::Train => &ds.train,
        Split::Val => &ds.val,
        Split::Test => &ds.test,
    };
    let mut preds = Vec::with_capacity(samples.len());
    for s in samples {
        preds.push(clf.predict(&s.features).context("prediction")?.0);
    }
    Ok((preds, samples.iter().map(|s| s.label).collect()))
}

struct Prediction {
    accession: String,
    date: chrono::NaiveDate,
    stage: StageLabel,
    probs: Vec<f64>,
    truth: Option<StageLabel>,
}

#[derive(Serialize)]
struct PredictSummary {
    samples: usize,
    labeled: usize,
    accuracy: Option<f64>,
    confusion: Option<ClassConfusion>,
}

pub fn predict(a: &PredictArgs, m: &ArgMatches, mut cfg: RunConfig) -> CliResult<()> {
    let clf = load_classifier(&fsio::read_bytes(&a.model)?).context(a.model.display())?;
    let predictions = match (&a.input, &a.dataset) {
        (Some(csv), None) => predict_csv(&clf, csv)?,
        (None, Some(ds_path)) => {
            let ds = load_dataset(ds_path)?;
            let samples = match a.split {
                Split::Train => &ds.train,
                Split::Val => &ds.val,
                Split::Test => &ds.test,
            };
            samples
                .iter()
                .map(|s| {
                    let (stage, probs) = clf.predict(&s.features).context("prediction")?;
                    Ok(Prediction {
                        accession: s.accession.clone(),
                        date: s.date,
                        stage,
                        probs,
                        truth: Some(s.label),
                    })
                })
                .collect::<CliResult<_>>()?
        }
        _ => return Err(CliError::invalid("give exactly one of --input or --dataset")),
    };

    let mut csv = String::from("accession,date,predicted");
    for s in StageLabel::ALL {
        let _ = write!(csv, ",p_{s}");
    }
    csv.push_str(",true_stage\n");
    for p in &predictions {
        let _ = write!(csv, "{},{},{}", p.accession, p.date, p.stage);
        for v in &p.probs {
            let _ = write!(csv, ",{v}");
        }
        let _ = writeln!(csv, ",{}", p.truth.map(|t| t.to_string()).unwrap_or_default());
    }
    let (preds, labels): (Vec<StageLabel>, Vec<StageLabel>) =
        predictions.iter().filter_map(|p| p.truth.map(|t| (p.stage, t))).unzip();
    let summary = PredictSummary {
        samples: predictions.len(),
        labeled: labels.len(),
        accuracy: accuracy(&preds, &labels).ok(),
        confusion: confusion(&preds, &labels).ok(),
    };

    let out = out_dir(m, &mut cfg)?;
    fsio::write(&out.join(PREDICTIONS), csv)?;
    fsio::write(&out.join(PREDICT_REPORT), to_json(&summary))?;
    cfg.echo(&out)?;
    match summary.accuracy {
        Some(acc) => println!("{} samples, accuracy {acc:.4} on {} labeled", summary.samples, summary.labeled),
        None => println!("{} samples", summary.samples),
    }
    Ok(())
}

/// Triplet-averages a stage CSV the same way as dataset construction, then
/// classifies every averaged sample.
fn predict_csv(clf: &StageClassifier, path: &Path) -> CliResult<Vec<Prediction>> {
    let rows = parse_stage_csv(&fsio::read_text(path)?).context(path.display())?;
    triplet_average(&rows)
        .context(path.display())?
        .into_iter()
        .map(|r| {
            let time = encode_time(r.date, season_start_for(r.date)).context(path.display())?;
            let [bud, bf, wf] = r.counts;
            let (stage, probs) = clf.predict(&[bud, bf, wf, time]).context("prediction")?;
            Ok(Prediction {
                accession: r.accession,
                date: r.date,
                stage,
                probs,
                truth: r.stage,
            })
        })
        .collect()
}

pub fn synth(a: &SynthArgs, cfg: RunConfig) -> CliResult<()> {
    let mode = match a.mode {
        Mode::Separable => ClusterMode::Separable,
        Mode::Overlapping => ClusterMode::Overlapping,
    };
    let rows = synthetic_stage_rows(&SynthConfig {
        accessions: a.accessions,
        season_years: a.year.clone(),
        ..SynthConfig::new(mode, cfg.seed)
    });
    let csv = write_stage_csv(&rows).context("synthetic rows")?;
    if let Some(dir) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fsio::ensure_dir(dir)?;
    }
    fsio::write(&a.out, csv)?;
    println!("wrote {} rows", rows.len());
    Ok(())
}
