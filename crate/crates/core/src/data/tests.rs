use std::fs;

use proptest::prelude::*;

use super::*;

fn idx_images(n: u32, rows: u32, cols: u32, pixels: &[u8]) -> Vec<u8> {
    let mut b = Vec::new();
    b.extend_from_slice(&IDX_IMAGES_MAGIC.to_be_bytes());
    for v in [n, rows, cols] {
        b.extend_from_slice(&v.to_be_bytes());
    }
    b.extend_from_slice(pixels);
    b
}

fn idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut b = Vec::new();
    b.extend_from_slice(&IDX_LABELS_MAGIC.to_be_bytes());
    b.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    b.extend_from_slice(labels);
    b
}

fn write_pair(dir: &Path, images: &[u8], labels: &[u8]) -> (PathBuf, PathBuf) {
    let ip = dir.join("images.idx");
    let lp = dir.join("labels.idx");
    fs::write(&ip, images).unwrap();
    fs::write(&lp, labels).unwrap();
    (ip, lp)
}

#[test]
fn idx_fixture_loads_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let pixels = [0u8, 255, 51, 102, 255, 0, 0, 153];
    let (ip, lp) = write_pair(
        dir.path(),
        &idx_images(2, 2, 2, &pixels),
        &idx_labels(&[7, 3]),
    );
    let ds = load_idx(&ip, &lp).unwrap();
    assert_eq!(ds.len(), 2);
    assert_eq!(ds.dim(), 4);
    assert_eq!(ds.image_shape, Some((2, 2)));
    assert_eq!(ds.labels().unwrap(), &[7, 3]);
    let expected =
        Matrix::from_shape_vec((2, 4), vec![0.0, 1.0, 0.2, 0.4, 1.0, 0.0, 0.0, 0.6]).unwrap();
    for (a, b) in ds.features.iter().zip(expected.iter()) {
        assert!((a - b).abs() < 1e-15);
    }
    assert_eq!(ds.features[[0, 0]], 0.0);
    assert_eq!(ds.features[[0, 1]], 1.0);
    assert!(ds.is_unit_range());
    assert_eq!(ds.square_side(), Some(2));
}

#[test]
fn idx_corruptions_give_distinct_errors() {
    let dir = tempfile::tempdir().unwrap();
    let good_images = idx_images(2, 2, 2, &[1; 8]);
    let good_labels = idx_labels(&[0, 1]);

    let mut bad = good_images.clone();
    bad[3] = 0x01;
    let (ip, lp) = write_pair(dir.path(), &bad, &good_labels);
    match load_idx(&ip, &lp) {
        Err(DacError::IdxBadMagic {
            offset,
            found,
            expected,
            path,
        }) => {
            assert_eq!(offset, 0);
            assert_eq!(found, 0x0000_0801);
            assert_eq!(expected, IDX_IMAGES_MAGIC);
            assert_eq!(path, ip);
        }
        other => panic!("expected bad magic, got {other:?}"),
    }

    let (ip, lp) = write_pair(dir.path(), &good_images, &good_images);
    assert!(matches!(load_idx(&ip, &lp), Err(DacError::IdxBadMagic { path, .. }) if path == lp));

    let (ip, lp) = write_pair(
        dir.path(),
        &good_images[..good_images.len() - 1],
        &good_labels,
    );
    match load_idx(&ip, &lp) {
        Err(DacError::IdxTruncated {
            offset,
            needed,
            available,
            ..
        }) => {
            assert_eq!(offset, 16);
            assert_eq!(needed, 8);
            assert_eq!(available, 7);
        }
        other => panic!("expected truncation, got {other:?}"),
    }

    let (ip, lp) = write_pair(dir.path(), &good_images[..10], &good_labels);
    assert!(matches!(
        load_idx(&ip, &lp),
        Err(DacError::IdxTruncated { offset: 8, .. })
    ));

    let (ip, lp) = write_pair(dir.path(), &good_images, &good_labels[..9]);
    assert!(matches!(
        load_idx(&ip, &lp),
        Err(DacError::IdxTruncated { .. })
    ));

    let (ip, lp) = write_pair(dir.path(), &good_images, &idx_labels(&[0, 1, 2]));
    assert!(matches!(
        load_idx(&ip, &lp),
        Err(DacError::IdxCountMismatch {
            images: 2,
            labels: 3
        })
    ));

    assert!(matches!(
        load_idx(dir.path().join("nope"), &lp),
        Err(DacError::Io { .. })
    ));
}

fn write_text(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

#[test]
fn hapt_loading_and_normalization() {
    let dir = tempfile::tempdir().unwrap();
    let x = write_text(
        dir.path(),
        "X_train.txt",
        " 1.0  -2.0 0.5e0\n3.0 2.0 0.5\n2.0 0.0 0.5\n",
    );
    let y = write_text(dir.path(), "y_train.txt", "1\n12\n5\n");
    let ds = load_hapt(&x, &y).unwrap();
    assert_eq!(ds.labels().unwrap(), &[0, 11, 4]);
    assert_eq!(ds.features.column(0).to_vec(), vec![0.0, 1.0, 0.5]);
    assert_eq!(ds.features.column(1).to_vec(), vec![0.0, 1.0, 0.5]);
    assert_eq!(ds.features.column(2).to_vec(), vec![0.0, 0.0, 0.0]);
    let range = match &ds.normalization {
        Normalization::MinMaxPerFeature(r) => r.clone(),
        other => panic!("{other:?}"),
    };
    assert_eq!(range.min, vec![1.0, -2.0, 0.5]);
    assert_eq!(range.max, vec![3.0, 2.0, 0.5]);

    let xt = write_text(dir.path(), "X_test.txt", "5.0 0.0 9.0\n0.0 1.0 0.5\n");
    let yt = write_text(dir.path(), "y_test.txt", "2\n3\n");
    let test = load_hapt_with_range(&xt, &yt, &range).unwrap();
    assert_eq!(test.features.row(0).to_vec(), vec![1.0, 0.5, 0.0]);
    assert_eq!(test.features.row(1).to_vec(), vec![0.0, 0.75, 0.0]);
    assert!(test.is_unit_range());
}

#[test]
fn hapt_errors() {
    let dir = tempfile::tempdir().unwrap();
    let y2 = write_text(dir.path(), "y2.txt", "1\n2\n");
    let ragged = write_text(dir.path(), "r.txt", "1 2 3\n1 2\n");
    assert!(matches!(
        load_hapt(&ragged, &y2),
        Err(DacError::RaggedRow {
            line: 2,
            expected: 3,
            found: 2,
            ..
        })
    ));
    let junk = write_text(dir.path(), "j.txt", "1 2\n1 x\n");
    assert!(matches!(
        load_hapt(&junk, &y2),
        Err(DacError::NonNumericToken { line: 2, .. })
    ));
    let three = write_text(dir.path(), "t.txt", "1 2\n3 4\n5 6\n");
    assert!(matches!(
        load_hapt(&three, &y2),
        Err(DacError::RowCountMismatch {
            features: 3,
            labels: 2
        })
    ));
    let two = write_text(dir.path(), "two.txt", "1 2\n3 4\n");
    let y_bad = write_text(dir.path(), "yb.txt", "1\n13\n");
    assert!(matches!(
        load_hapt(&two, &y_bad),
        Err(DacError::LabelOutOfRange {
            label: 13,
            line: 2,
            ..
        })
    ));
    let y_zero = write_text(dir.path(), "yz.txt", "0\n1\n");
    assert!(matches!(
        load_hapt(&two, &y_zero),
        Err(DacError::LabelOutOfRange { label: 0, .. })
    ));
}

fn sample_dataset(rows: usize) -> Dataset {
    let features =
        Matrix::from_shape_fn((rows, 3), |(i, j)| (i * 3 + j) as f64 / (rows * 3) as f64);
    Dataset::new("s", features, Some((0..rows).map(|i| i % 4).collect())).unwrap()
}

#[test]
fn subsample_behaviour() {
    let ds = sample_dataset(50);
    let full = ds.subsample(50, 3).unwrap();
    let mut rows: Vec<Vec<u64>> = full
        .features
        .rows()
        .into_iter()
        .map(|r| r.iter().map(|v| v.to_bits()).collect())
        .collect();
    rows.sort();
    let mut orig: Vec<Vec<u64>> = ds
        .features
        .rows()
        .into_iter()
        .map(|r| r.iter().map(|v| v.to_bits()).collect())
        .collect();
    orig.sort();
    assert_eq!(rows, orig);

    let a = ds.subsample(10, 77).unwrap();
    assert_eq!(a, ds.subsample(10, 77).unwrap());
    assert_ne!(a, ds.subsample(10, 78).unwrap());
    for (row, label) in a.features.rows().into_iter().zip(a.labels().unwrap()) {
        let i = (row[0] * 150.0).round() as usize / 3;
        assert_eq!(*label, i % 4);
    }
    assert!(ds.subsample(51, 1).is_err());
    assert!(ds.subsample(0, 1).is_err());
}

#[test]
fn cache_round_trip_with_and_without_labels() {
    let dir = tempfile::tempdir().unwrap();
    let ds = sample_dataset(7);
    let p = dir.path().join("d.dacd");
    ds.save_cache(&p).unwrap();
    let bytes = fs::read(&p).unwrap();
    assert_eq!(&bytes[..4], b"DACD");
    assert_eq!(bytes.len(), 12 + 7 * 3 * 8 + 7 * 4);
    let back = Dataset::load_cache(&p).unwrap();
    assert_eq!(back.features, ds.features);
    assert_eq!(back.labels, ds.labels);

    let unlabeled = Dataset::new("u", ds.features.clone(), None).unwrap();
    unlabeled.save_cache(&p).unwrap();
    let back = Dataset::load_cache(&p).unwrap();
    assert_eq!(back.labels, None);
    assert_eq!(back.features, ds.features);

    let mut broken = fs::read(&p).unwrap();
    broken.push(1);
    fs::write(&p, &broken).unwrap();
    assert!(Dataset::load_cache(&p).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn cache_round_trip_is_bit_exact(
        rows in 1usize..20,
        cols in 1usize..10,
        seed in any::<u64>(),
        labeled in any::<bool>(),
    ) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let features = Matrix::from_shape_simple_fn((rows, cols), || rng.gen::<f64>());
        let labels = labeled.then(|| (0..rows).map(|_| rng.gen_range(0..100)).collect());
        let ds = Dataset::new("p", features, labels).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.dacd");
        ds.save_cache(&p).unwrap();
        let back = Dataset::load_cache(&p).unwrap();
        let bits = |m: &Matrix| m.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(&back.features), bits(&ds.features));
        prop_assert_eq!(back.labels, ds.labels);
    }
}
