use std::path::{Path, PathBuf};

use dropcap::datasets::{
    load_binary_pair, parse_idx, parse_idx_bytes, parse_movielens, read_records, write_records, ExperimentRecord,
};
use dropcap::numerics::SeededRng;
use dropcap::sensing::MeasurementModel;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

#[test]
fn idx_pair_keeps_two_classes_as_signed_labels() {
    let set = load_binary_pair(&fixture("tiny-images.idx3-ubyte"), &fixture("tiny-labels.idx1-ubyte"), 4, 7).unwrap();
    assert_eq!(set.len(), 6);
    assert_eq!(set.input_dim(), 6);
    // Labels [4,7,1,7,4,3,4,7]: items 0,1,3,4,6,7 survive.
    let kept = [0usize, 1, 3, 4, 6, 7];
    let signs = [-1.0, 1.0, 1.0, -1.0, -1.0, 1.0];
    for (c, (&item, &s)) in kept.iter().zip(&signs).enumerate() {
        assert_eq!(set.targets()[(0, c)], s);
        for k in 0..6 {
            let pixel = ((item * 37 + k * 11) % 256) as f64;
            assert!((set.inputs()[(k, c)] - pixel / 255.0).abs() < 1e-15);
        }
    }
}

#[test]
fn idx_header_and_payload_are_validated() {
    let bytes = std::fs::read(fixture("tiny-images.idx3-ubyte")).unwrap();
    let t = parse_idx(&fixture("tiny-images.idx3-ubyte")).unwrap();
    assert_eq!(t.dims, vec![8, 2, 3]);
    assert!(parse_idx_bytes(&bytes[..bytes.len() - 1]).is_err());
    let mut long = bytes.clone();
    long.push(0);
    assert!(parse_idx_bytes(&long).is_err());
    assert!(parse_idx_bytes(&bytes[..6]).is_err());
    assert!(load_binary_pair(&fixture("tiny-images.idx3-ubyte"), &fixture("tiny-images.idx3-ubyte"), 4, 7).is_err());
}

#[test]
fn movielens_ratings_become_indicator_observations() {
    let ml = parse_movielens(&fixture("ratings.dat"), false).unwrap();
    assert_eq!(ml.sample.len(), 5);
    assert_eq!(ml.user_ids.len(), 3);
    assert_eq!(ml.movie_ids.len(), 3);
    assert_eq!(ml.offset, 0.0);
    let MeasurementModel::Indicator { row_probs, col_probs } = &ml.model else {
        panic!("expected an indicator model");
    };
    assert_eq!(row_probs, &vec![0.4, 0.4, 0.2]);
    assert_eq!(ml.movie_ids, vec![10, 20, 30]);
    assert_eq!(col_probs, &vec![0.4, 0.2, 0.4]);

    let centered = parse_movielens(&fixture("ratings.dat"), true).unwrap();
    let mean: f64 = centered.sample.observations().iter().map(|o| o.y).sum::<f64>() / 5.0;
    assert!(mean.abs() < 1e-12);
    let raw_mean: f64 = ml.sample.observations().iter().map(|o| o.y).sum::<f64>() / 5.0;
    assert!((centered.offset - raw_mean).abs() < 1e-12);
}

#[test]
fn thousand_records_round_trip_through_a_file() {
    let mut rng = SeededRng::from_seed(21);
    let records: Vec<ExperimentRecord> = (0..1000)
        .map(|k| {
            let train = rng.uniform();
            let test = (k % 3 != 0).then(|| rng.gaussian());
            ExperimentRecord {
                run_id: format!("mc-1234abcd-s{}-p0.1", k % 7),
                epoch: k,
                dropout_rate: 0.1,
                width: 20,
                train_loss: train,
                test_loss: test,
                gap: test.map(|t| t - train),
                reg_value: rng.gaussian().exp(),
                alpha_hat: rng.uniform() * 1e6,
                beta_hat: (k % 2 == 0).then(|| rng.uniform()),
                phi: Some(rng.uniform()),
                seed: (k % 7) as u64,
            }
        })
        .collect();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("records.csv");
    write_records(&records, &path).unwrap();
    assert_eq!(read_records(&path).unwrap(), records);
}
