use florimeter_core::annotio::{CountsRow, Condition, ManifestRow};
use florimeter_core::dynamics::{aggregate_series, compare_conditions, join_counts, stage_timelines};
use florimeter_core::tfsc::*;

fn dataset(mode: ClusterMode, seed: u64) -> StageDataset {
    let rows = synthetic_stage_rows(&SynthConfig {
        season_years: vec![2023, 2024],
        ..SynthConfig::new(mode, seed)
    });
    build_stage_dataset(
        &rows,
        &DatasetConfig {
            seed,
            ..DatasetConfig::default()
        },
    )
    .unwrap()
}

#[test]
fn separable_clusters_are_learned() {
    let ds = dataset(ClusterMode::Separable, 42);
    assert!(ds.warnings.is_empty(), "{:?}", ds.warnings);
    let (model, report) = train_tfsc(&ds, &TrainParams::default()).unwrap();
    assert!(report.final_val_accuracy().unwrap() >= 0.95);
    let clf = StageClassifier {
        model,
        scaler: ds.scaler.clone(),
    };
    let preds: Vec<StageLabel> = ds.test.iter().map(|s| clf.predict(&s.features).unwrap().0).collect();
    let labels: Vec<StageLabel> = ds.test.iter().map(|s| s.label).collect();
    assert!(accuracy(&preds, &labels).unwrap() >= 0.95);
}

#[test]
fn training_is_reproducible() {
    let ds = dataset(ClusterMode::Overlapping, 7);
    let params = TrainParams {
        epochs: 5,
        ..TrainParams::default()
    };
    let (a, ra) = train_tfsc(&ds, &params).unwrap();
    let (b, rb) = train_tfsc(&ds, &params).unwrap();
    assert_eq!(a, b);
    assert_eq!(ra.to_csv(), rb.to_csv());
}

#[test]
fn timelines_from_counts() {
    let ds = dataset(ClusterMode::Separable, 3);
    let (model, _) = train_tfsc(&ds, &TrainParams::default()).unwrap();
    let clf = StageClassifier {
        model,
        scaler: ds.scaler.clone(),
    };
    // one accession walking through the stage means, three images per date
    let start = season_start_for(chrono::NaiveDate::from_ymd_opt(2024, 11, 1).unwrap());
    let means = [[60, 5, 0], [45, 20, 3], [30, 35, 10], [15, 25, 25], [5, 8, 40]];
    let mut counts = Vec::new();
    let mut manifest = Vec::new();
    for (k, m) in means.iter().enumerate() {
        let date = start + chrono::Days::new(40 + 15 * k as u64);
        for i in 0..3 {
            let id = format!("img{k}_{i}");
            counts.push(CountsRow::new(&id, m[0], m[1], m[2]));
            manifest.push(ManifestRow {
                image_id: id,
                accession: "A1".into(),
                date,
                condition: if i == 0 { Condition::Backlight } else { Condition::Frontlight },
            });
        }
    }
    let obs = join_counts(&counts, &manifest).unwrap();
    let series = aggregate_series(&obs);
    let timelines = stage_timelines(&series, &clf).unwrap();
    let (s, summary) = &timelines[0];
    let stages: Vec<StageLabel> = s.points.iter().map(|p| p.stage.unwrap()).collect();
    assert_eq!(stages, StageLabel::ALL);
    assert!(summary.is_ordered());
    let (cmp, _) = compare_conditions(&obs).unwrap();
    assert_eq!(cmp.len(), 1);
}
