use std::fs;

use ctxsal::classes::DOG;
use ctxsal::context::{Context, ContextMapping, DatasetSplit};
use ctxsal::voc::{
    build_context_dataset, decode_label_png, label_path, load_corpus, write_indexed_png, VocSplit,
};
use ctxsal::{Error, LabelMap, RgbImage, VOID};
use ctxsal_testkit::{make_layout, write_entry, write_split, write_synthetic_corpus};

#[test]
fn decode_all_background() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bg.png");
    write_indexed_png(&p, 5, 3, &[0; 15]).unwrap();
    let m = decode_label_png(&p).unwrap();
    assert_eq!(m, LabelMap::filled(5, 3, 0).unwrap());
}

#[test]
fn decode_keeps_indices() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("l.png");
    write_indexed_png(&p, 3, 1, &[0, 12, 255]).unwrap();
    assert_eq!(decode_label_png(&p).unwrap().labels(), &[0, DOG, VOID]);
}

#[test]
fn decode_rejects_out_of_range_index() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.png");
    write_indexed_png(&p, 2, 1, &[0, 37]).unwrap();
    assert!(matches!(decode_label_png(&p), Err(Error::UnsupportedLabelIndex { index: 37, .. })));
}

#[test]
fn decode_rejects_rgb_png() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("rgb.png");
    ctxsal_testkit::write_png_rgb(&p, &RgbImage::filled(2, 2, [0, 0, 0]).unwrap());
    assert!(matches!(decode_label_png(&p), Err(Error::NotPaletteIndexed(_))));
    let junk = dir.path().join("junk.png");
    fs::write(&junk, b"not a png").unwrap();
    assert!(matches!(decode_label_png(&junk), Err(Error::PngDecode { .. })));
}

#[test]
fn empty_split_is_an_empty_corpus() {
    let dir = tempfile::tempdir().unwrap();
    make_layout(dir.path());
    write_split(dir.path(), VocSplit::Val, &[]);
    let c = load_corpus(dir.path(), VocSplit::Val).unwrap();
    assert!(c.is_empty());
    assert!(c.size_warning().is_some());
}

#[test]
fn missing_pieces_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    make_layout(root);
    assert!(matches!(load_corpus(root, VocSplit::Train), Err(Error::MissingSplitFile(_))));

    let (img, labels) = ctxsal_testkit::square_scene(8, 3, 2, 2, DOG);
    write_entry(root, "a", &img, &labels);
    write_entry(root, "b", &img, &labels);
    fs::remove_file(label_path(root, "b")).unwrap();
    write_split(root, VocSplit::Train, &["a".into(), "b".into()]);
    match load_corpus(root, VocSplit::Train) {
        Err(Error::MissingLabel { id, .. }) => assert_eq!(id, "b"),
        other => panic!("unexpected {other:?}"),
    }
    write_split(root, VocSplit::Train, &["a".into(), "c".into()]);
    assert!(matches!(load_corpus(root, VocSplit::Train), Err(Error::MissingImage { .. })));
}

#[test]
fn single_image_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    make_layout(root);
    let (img, labels) = ctxsal_testkit::square_scene(10, 6, 2, 2, DOG);
    write_entry(root, "only", &img, &labels);
    write_split(root, VocSplit::Train, &["only".into()]);
    let corpus = load_corpus(root, VocSplit::Train).unwrap();
    let ds = build_context_dataset(&corpus, &ContextMapping::default()).unwrap();
    assert_eq!(ds.len(), 1);
    assert_eq!(ds.samples()[0].1, Context::Pet);
    assert_eq!(ds.split(), DatasetSplit::Train);
}

#[test]
fn bad_label_names_the_entry() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let ids = write_synthetic_corpus(root, 4, 2, 3);
    write_indexed_png(&label_path(root, &ids[2]), 2, 2, &[0, 0, 99, 0]).unwrap();
    let corpus = load_corpus(root, VocSplit::Train).unwrap();
    let err = build_context_dataset(&corpus, &ContextMapping::default()).unwrap_err();
    match &err {
        Error::Entry { id, .. } => assert_eq!(id, &ids[2]),
        other => panic!("unexpected {other:?}"),
    }
    assert!(matches!(err.root_cause(), Error::UnsupportedLabelIndex { index: 99, .. }));
}

#[test]
fn dataset_is_ordered_and_repeatable() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    write_synthetic_corpus(root, 30, 10, 8);
    let mapping = ContextMapping::default();
    let corpus = load_corpus(root, VocSplit::Trainval).unwrap();
    assert_eq!(corpus.len(), 40);
    let a = build_context_dataset(&corpus, &mapping).unwrap();
    let b = build_context_dataset(&corpus, &mapping).unwrap();
    assert_eq!(a, b);
    let val = build_context_dataset(&load_corpus(root, VocSplit::Val).unwrap(), &mapping).unwrap();
    assert_eq!(val.split(), DatasetSplit::Test);
    assert_eq!(&a.samples()[30..], val.samples());
    for (f, _) in a.samples() {
        assert!(f.0.iter().all(|v| (0.0..=1.0).contains(v)));
        assert!(f.0.iter().sum::<f64>() <= 1.0 + 1e-12);
    }
}
