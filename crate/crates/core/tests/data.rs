use std::io::Write;
use std::path::PathBuf;

use flate2::write::GzEncoder;
use flate2::Compression;
use minn::data::*;
use minn::seed::{self, Stream};
use minn::MinnError;
use proptest::prelude::*;

fn mnist_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist")
}

fn two_images() -> IdxImages {
    IdxImages {
        count: 2,
        rows: 3,
        cols: 2,
        pixels: vec![0, 1, 2, 127, 128, 255, 9, 8, 7, 6, 5, 4],
    }
}

#[test]
fn official_files_have_published_sizes() {
    let dir = mnist_dir();
    let train = Dataset::load_mnist(&dir, Split::Train).unwrap();
    assert_eq!((train.len(), train.rows, train.cols), (60_000, 28, 28));
    let imgs = load_idx_images(dir.join("train-images-idx3-ubyte.gz")).unwrap();
    assert_eq!((imgs.count, imgs.rows, imgs.cols), (60_000, 28, 28));
    assert_eq!(
        load_idx_labels(dir.join("train-labels-idx1-ubyte.gz"))
            .unwrap()
            .len(),
        60_000
    );
    let test = Dataset::load_mnist(&dir, Split::Test).unwrap();
    assert_eq!(test.len(), 10_000);
    assert!(train.images.iter().all(|&p| (0.0..=1.0).contains(&p)));
}

#[test]
fn synthetic_file_round_trips_raw_and_gzip() {
    let dir = tempfile::tempdir().unwrap();
    let src = two_images();
    let raw = dir.path().join("img");
    std::fs::write(&raw, encode_idx_images(&src)).unwrap();
    assert_eq!(load_idx_images(&raw).unwrap(), src);

    let gz = dir.path().join("img.gz");
    let mut enc = GzEncoder::new(Vec::new(), Compression::default());
    enc.write_all(&encode_idx_images(&src)).unwrap();
    std::fs::write(&gz, enc.finish().unwrap()).unwrap();
    assert_eq!(load_idx_images(&gz).unwrap(), src);

    let lab = dir.path().join("lab");
    std::fs::write(&lab, encode_idx_labels(&[7, 0])).unwrap();
    let ds = Dataset::from_idx(
        load_idx_images(&raw).unwrap(),
        load_idx_labels(&lab).unwrap(),
    )
    .unwrap();
    assert_eq!(ds.image(1)[0], 9.0 / 255.0);
    assert_eq!(ds.labels, vec![7, 0]);
}

#[test]
fn wrong_magic_is_reported_with_found_value() {
    let labels = encode_idx_labels(&[1, 2, 3]);
    match parse_idx_images(&labels) {
        Err(MinnError::Format(m)) => assert!(m.contains("2049"), "{m}"),
        other => panic!("expected format error, got {other:?}"),
    }
    assert!(matches!(
        parse_idx_labels(&encode_idx_images(&two_images())),
        Err(MinnError::Format(_))
    ));
}

#[test]
fn truncated_files_are_length_errors() {
    let bytes = encode_idx_images(&two_images());
    for cut in [0, 3, 15, 16, bytes.len() - 1] {
        assert!(
            matches!(parse_idx_images(&bytes[..cut]), Err(MinnError::Format(_))),
            "cut {cut}"
        );
    }
    let labels = encode_idx_labels(&[1, 2]);
    assert!(matches!(
        parse_idx_labels(&labels[..9]),
        Err(MinnError::Format(_))
    ));
}

#[test]
fn out_of_range_label_is_a_data_error() {
    assert!(matches!(
        parse_idx_labels(&encode_idx_labels(&[3, 10])),
        Err(MinnError::Data(_))
    ));
}

#[test]
fn image_and_label_counts_must_match() {
    assert!(matches!(
        Dataset::from_idx(two_images(), vec![1]),
        Err(MinnError::Data(_))
    ));
}

#[test]
fn batch_sizes_and_determinism() {
    let b = batches(10, 4, &mut seed::rng(1, Stream::Shuffle)).unwrap();
    assert_eq!(b.iter().map(Vec::len).collect::<Vec<_>>(), vec![4, 4, 2]);
    let again = batches(10, 4, &mut seed::rng(1, Stream::Shuffle)).unwrap();
    assert_eq!(b, again);
    let mut all: Vec<usize> = b.concat();
    all.sort_unstable();
    assert_eq!(all, (0..10).collect::<Vec<_>>());
    assert!(batches(10, 0, &mut seed::rng(1, Stream::Shuffle)).is_err());
}

#[test]
fn batch_tensors_have_expected_layout() {
    let ds = Dataset::from_idx(two_images(), vec![4, 1]).unwrap();
    let (x, t) = ds.batch_tensors(&[1, 0]).unwrap();
    assert_eq!(x.shape(), &[2, 1, 3, 2]);
    assert_eq!(x.data()[0], 9.0 / 255.0);
    assert_eq!(t.shape(), &[2, 10]);
    assert_eq!(t.data()[1], 1.0);
    assert_eq!(t.data()[14], 1.0);
}

#[test]
fn seeded_subset_is_repeatable() {
    let ds = Dataset::from_idx(
        IdxImages {
            count: 20,
            rows: 1,
            cols: 1,
            pixels: (0..20).collect(),
        },
        (0..20).map(|i| i % 10).collect(),
    )
    .unwrap();
    let a = ds.seeded_subset(5, &mut seed::rng(3, Stream::DataSubset));
    let b = ds.seeded_subset(5, &mut seed::rng(3, Stream::DataSubset));
    assert_eq!(a, b);
    assert_eq!(a.len(), 5);
}

proptest! {
    #[test]
    fn arbitrary_images_round_trip(count in 0usize..5, rows in 1usize..6, cols in 1usize..6, fill in any::<u64>()) {
        let pixels: Vec<u8> = (0..count * rows * cols).map(|i| (fill.rotate_left(i as u32 % 64) & 0xff) as u8).collect();
        let src = IdxImages { count, rows, cols, pixels };
        prop_assert_eq!(parse_idx_images(&encode_idx_images(&src)).unwrap(), src);
    }

    #[test]
    fn batches_partition_any_length(len in 0usize..200, bs in 1usize..50, s in any::<u64>()) {
        let b = batches(len, bs, &mut seed::rng(s, Stream::Shuffle)).unwrap();
        prop_assert_eq!(b.len(), len.div_ceil(bs));
        let mut all = b.concat();
        all.sort_unstable();
        prop_assert_eq!(all, (0..len).collect::<Vec<_>>());
    }
}
