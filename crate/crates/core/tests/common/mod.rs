//! Brute-force reference computations shared by the integration suites.
//! Written directly from the definitions, with no code from the crate.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tte_depth::{Corpus, DistanceKind, EmbeddingRecord};

pub fn naive_distance(x: &[f64], y: &[f64], kind: DistanceKind) -> f64 {
    let nx = x.iter().map(|a| a * a).sum::<f64>().sqrt();
    let ny = y.iter().map(|a| a * a).sum::<f64>().sqrt();
    match kind {
        DistanceKind::Cosine => {
            let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
            1.0 - dot / (nx * ny)
        }
        // Straight-line distance between the two unit vectors.
        DistanceKind::Chord => x
            .iter()
            .zip(y)
            .map(|(a, b)| (a / nx - b / ny).powi(2))
            .sum::<f64>()
            .sqrt(),
    }
}

/// Double loop over raw (unnormalized) vectors, self term included.
pub fn naive_depths(raw: &[Vec<f64>], kind: DistanceKind) -> Vec<f64> {
    raw.iter()
        .map(|x| {
            let mut total = 0.0;
            for h in raw {
                total += naive_distance(x, h, kind);
            }
            2.0 - total / raw.len() as f64
        })
        .collect()
}

pub fn random_raw(rng: &mut ChaCha8Rng, size: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..size)
        .map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect()
}

pub fn corpus_from(name: &str, raw: &[Vec<f64>]) -> Corpus {
    let records = raw
        .iter()
        .enumerate()
        .map(|(i, v)| EmbeddingRecord::new(format!("{name}{i}"), v.clone()))
        .collect();
    Corpus::new(name, records).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn fixture(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}
