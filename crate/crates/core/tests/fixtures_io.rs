#![allow(clippy::excessive_precision)]

mod common;

use common::fixture;
use tte_depth::corpus::load_corpus_with_warnings;
use tte_depth::{depth_of, depth_scores, distance, load_corpus, q_estimate, DistanceKind, Error, Format};

#[test]
fn three_point_fixture_median_and_scores() {
    let corpus = load_corpus(fixture("three_points.jsonl"), Format::Jsonl).unwrap();
    assert_eq!(corpus.name(), "three_points");
    assert_eq!(corpus.dim(), 2);

    let cosine = depth_scores(&corpus, DistanceKind::Cosine);
    assert_eq!(cosine.median_id, "diagonal");
    assert_eq!(cosine.ordering, ["diagonal", "east", "north"]);
    assert!((cosine.depth("east").unwrap() - 1.5690355937288492).abs() < 1e-12);
    assert!((cosine.depth("diagonal").unwrap() - 1.804737854124365).abs() < 1e-12);

    let chord = depth_scores(&corpus, DistanceKind::Chord);
    assert_eq!(chord.median_id, "diagonal");
    assert!((chord.depth("north").unwrap() - 1.2734731909655751).abs() < 1e-12);
    assert!((chord.depth("diagonal").unwrap() - 1.4897554235132136).abs() < 1e-12);
}

#[test]
fn query_fixture_depth_against_reference() {
    let reference = load_corpus(fixture("three_points.jsonl"), Format::Jsonl).unwrap();
    let query = load_corpus(fixture("query_point.jsonl"), Format::Jsonl).unwrap();
    let y = &query.records()[0].vector;
    assert!((depth_of(y, &reference, DistanceKind::Cosine).unwrap() - 1.7434808320856023).abs() < 1e-12);
    assert!((depth_of(y, &reference, DistanceKind::Chord).unwrap() - 1.3694994149595129).abs() < 1e-12);
}

#[test]
fn labeled_csv_fixture() {
    let corpus = load_corpus(fixture("labeled.csv"), Format::Csv).unwrap();
    let labels: Vec<_> = corpus.records().iter().map(|r| r.label.as_deref()).collect();
    assert_eq!(labels, [Some("X"), Some("Y")]);
    assert_eq!(corpus.records()[1].vector, [0.0, 1.0]);
}

#[test]
fn embedding_tool_output_loads_cleanly() {
    let (corpus, warnings) = load_corpus_with_warnings(fixture("adapter_output.jsonl"), Format::Jsonl).unwrap();
    assert!(warnings.is_empty(), "{warnings:?}");
    assert_eq!(corpus.ids().collect::<Vec<_>>(), ["t0", "t1", "t2", "t3"]);
    let meta = corpus.metadata().expect("header record kept");
    assert_eq!(meta["separator"], " [SEP] ");
    // Duplicated texts embed to identical vectors: distance exactly zero.
    let v: Vec<&[f64]> = corpus.vectors().collect();
    assert_eq!(distance(v[0], v[2], DistanceKind::Cosine).unwrap(), 0.0);
    assert_eq!(distance(v[0], v[2], DistanceKind::Chord).unwrap(), 0.0);
}

#[test]
fn save_and_reload_is_bitwise_stable() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = load_corpus(fixture("adapter_output.jsonl"), Format::Jsonl).unwrap();
    for format in [Format::Jsonl, Format::Csv] {
        let path = dir.path().join(format!("round.{format}"));
        corpus.save(&path, format).unwrap();
        let back = load_corpus(&path, format).unwrap();
        assert_eq!(back.records().len(), corpus.len());
        for (a, b) in back.records().iter().zip(corpus.records()) {
            assert_eq!(a.id, b.id);
            assert_eq!(a.label, b.label);
            let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(&a.vector), bits(&b.vector));
        }
    }
}

#[test]
fn data_errors_name_the_record() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (
            "ragged.jsonl",
            "{\"id\":\"a\",\"vector\":[1,0]}\n{\"id\":\"b\",\"vector\":[1,0,0]}\n",
        ),
        (
            "zero.jsonl",
            "{\"id\":\"a\",\"vector\":[1,0]}\n{\"id\":\"z\",\"vector\":[0,0]}\n",
        ),
        (
            "dup.jsonl",
            "{\"id\":\"a\",\"vector\":[1,0]}\n{\"id\":\"a\",\"vector\":[0,1]}\n",
        ),
    ];
    let mut errors = Vec::new();
    for (name, body) in cases {
        let path = dir.path().join(name);
        std::fs::write(&path, body).unwrap();
        errors.push(load_corpus(&path, Format::Jsonl).unwrap_err());
    }
    assert!(matches!(&errors[0], Error::DimensionMismatch { id, .. } if id == "b"));
    assert!(matches!(&errors[1], Error::ZeroNorm { id } if id == "z"));
    assert!(matches!(&errors[2], Error::DuplicateId { id } if id == "a"));
    assert!(load_corpus(dir.path().join("missing.jsonl"), Format::Jsonl).is_err());
}

#[test]
fn a_corpus_compared_with_itself_gives_the_identity_value() {
    let corpus = load_corpus(fixture("three_points.jsonl"), Format::Jsonl).unwrap();
    // east and north tie below diagonal, so Q = (2 + 2 + 3) / 9.
    let est = q_estimate(&corpus, &corpus, DistanceKind::Cosine).unwrap();
    assert_eq!(est.m, 3);
    assert!((est.q_hat - 7.0 / 9.0).abs() < 1e-15);
}
