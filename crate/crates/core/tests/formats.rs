mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;
use florimeter_core::annotio::*;
use florimeter_core::geom::BBox;
use florimeter_core::neurokernel::{load_weights, save_weights, MLPModel};
use florimeter_core::tfsc::{load_classifier, save_classifier, Scaler, StageClassifier, NUM_FEATURES};

const CASES: u64 = 200;

fn each_seed(mut f: impl FnMut(&mut ChaCha8Rng)) {
    for seed in 0..CASES {
        f(&mut ChaCha8Rng::seed_from_u64(seed));
    }
}

#[test]
fn label_records_round_trip() {
    each_seed(|rng| {
        let recs = random_label_records(rng, 30);
        assert_eq!(parse_label_records(&write_label_records(&recs)).unwrap(), recs);
    });
}

#[test]
fn detection_records_round_trip() {
    each_seed(|rng| {
        let recs = random_detection_records(rng, 30);
        assert_eq!(parse_detection_records(&write_detection_records(&recs)).unwrap(), recs);
    });
}

#[test]
fn counts_csv_round_trips() {
    each_seed(|rng| {
        let rows = random_counts(rng, 30);
        assert_eq!(parse_counts_csv(&write_counts_csv(&rows).unwrap()).unwrap(), rows);
    });
}

#[test]
fn stage_csv_round_trips() {
    each_seed(|rng| {
        let rows = random_stage_rows(rng, 30);
        assert_eq!(parse_stage_csv(&write_stage_csv(&rows).unwrap()).unwrap(), rows);
    });
}

#[test]
fn manifest_round_trips() {
    each_seed(|rng| {
        let rows = random_manifest(rng, 30);
        assert_eq!(parse_manifest_csv(&write_manifest_csv(&rows).unwrap()).unwrap(), rows);
    });
}

#[test]
fn weight_files_round_trip_bit_exact() {
    each_seed(|rng| {
        let widths = random_widths(rng);
        let mut m = MLPModel::he_uniform(&widths, rng.random()).unwrap();
        // include values with long decimal expansions and signed zeros
        let mut p = m.params();
        p[0] = -0.0;
        if p.len() > 1 {
            p[1] = 1e-300 * rng.random_range(-1.0..1.0);
        }
        m.set_params(&p).unwrap();
        let bytes = save_weights(&m);
        let back = load_weights(&bytes).unwrap();
        assert_eq!(back.params().iter().map(|v| v.to_bits()).collect::<Vec<_>>(), p.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        assert_eq!(save_weights(&back), bytes);
    });
}

#[test]
fn classifier_files_round_trip() {
    each_seed(|rng| {
        let mut widths = random_widths(rng);
        widths[0] = NUM_FEATURES;
        *widths.last_mut().unwrap() = 5;
        let model = MLPModel::he_uniform(&widths, rng.random()).unwrap();
        let rows: Vec<[f64; NUM_FEATURES]> = (0..10)
            .map(|_| std::array::from_fn(|_| rng.random_range(-50.0..50.0)))
            .collect();
        let clf = StageClassifier {
            model,
            scaler: Scaler::fit(&rows).unwrap(),
        };
        let bytes = save_classifier(&clf);
        let back = load_classifier(&bytes).unwrap();
        assert_eq!(back, clf);
        assert_eq!(save_classifier(&back), bytes);
    });
}

#[test]
fn writers_reject_invalid_ids() {
    let bad = CountsRow::new("has space", 1, 2, 3);
    assert!(write_counts_csv(&[bad]).is_err());
}

fn unit_box() -> impl Strategy<Value = BBox> {
    (0.0..1.0f64, 0.0..1.0f64, 0.0..1.0f64, 0.0..1.0f64).prop_map(|(a, b, c, d)| {
        BBox::new(a.min(c), b.min(d), a.max(c), b.max(d)).unwrap()
    })
}

proptest! {
    #[test]
    fn tile_split_then_join_recovers_the_clipped_box(b in unit_box()) {
        let map = TileMap::default();
        let (index, local) = tile_split(&b, &map);
        prop_assert!(index < 4);
        for v in [local.x_min, local.y_min, local.x_max, local.y_max] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        let back = tile_join(index, &local, &map);
        let (ox, oy) = ((index % 2) as f64 * 0.5, (index / 2) as f64 * 0.5);
        let clipped = [
            b.x_min.clamp(ox, ox + 0.5),
            b.y_min.clamp(oy, oy + 0.5),
            b.x_max.clamp(ox, ox + 0.5),
            b.y_max.clamp(oy, oy + 0.5),
        ];
        let got = [back.x_min, back.y_min, back.x_max, back.y_max];
        for (g, w) in got.iter().zip(clipped) {
            prop_assert!((g - w).abs() <= 1e-12);
        }
        // the center always lies in the assigned tile
        let (cx, cy) = b.center();
        prop_assert!(cx >= ox && cx <= ox + 0.5 && cy >= oy && cy <= oy + 0.5);
    }

    #[test]
    fn tiles_partition_the_frame(hw in 1u32..3000, hh in 1u32..3000) {
        let map = TileMap::new(hw * 2, hh * 2).unwrap();
        let tiles = map.tiles();
        let area: u64 = tiles.iter().map(|t| t.width as u64 * t.height as u64).sum();
        prop_assert_eq!(area, map.full_width as u64 * map.full_height as u64);
        for (i, a) in tiles.iter().enumerate() {
            for b in &tiles[i + 1..] {
                let ox = (a.x + a.width).min(b.x + b.width).saturating_sub(a.x.max(b.x));
                let oy = (a.y + a.height).min(b.y + b.height).saturating_sub(a.y.max(b.y));
                prop_assert_eq!(ox as u64 * oy as u64, 0);
            }
        }
    }
}
