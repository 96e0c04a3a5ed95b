//! Angular distances and the embedding depth built on them.
//!
//! The depth of a point `x` with respect to a corpus `F` is
//! `2 - mean_{h in F} d(x, h)` for a distance `d` bounded by 2 on the unit
//! sphere, so depths lie in `[0, 2]` and larger means more central.
//!
//! Work is split across query points with rayon. Each query's mean is an
//! exactly rounded sum over the reference, so results do not depend on the
//! number of workers or on the order of the reference records.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use indexmap::IndexMap;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{norm, Corpus};
use crate::error::{Error, Result};
use crate::sum::ExactSum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DistanceKind {
    /// `1 - x.y / (|x| |y|)`
    #[default]
    Cosine,
    /// `sqrt(2 (1 - x.y))`, the straight-line distance between unit vectors.
    Chord,
}

impl DistanceKind {
    pub const ALL: [DistanceKind; 2] = [DistanceKind::Cosine, DistanceKind::Chord];

    pub fn as_str(self) -> &'static str {
        match self {
            DistanceKind::Cosine => "cosine",
            DistanceKind::Chord => "chord",
        }
    }
}

impl fmt::Display for DistanceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DistanceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cosine" | "cos" => Ok(DistanceKind::Cosine),
            "chord" => Ok(DistanceKind::Chord),
            other => Err(Error::invalid(format!("unknown distance {other:?}"))),
        }
    }
}

#[inline]
fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// `|x - y|`, which on the unit sphere equals `sqrt(2 (1 - x.y))` but keeps
/// full relative accuracy for nearly parallel vectors, where the dot-product
/// form loses about half of its digits to cancellation.
#[inline]
fn chord(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
        .min(2.0)
}

/// Distance between two vectors assumed to be unit norm. Identical inputs give exactly 0.
#[inline]
pub(crate) fn unit_distance(x: &[f64], y: &[f64], kind: DistanceKind) -> f64 {
    if x == y {
        return 0.0;
    }
    match kind {
        DistanceKind::Cosine => (1.0 - dot(x, y)).clamp(0.0, 2.0),
        DistanceKind::Chord => chord(x, y),
    }
}

/// Distance between `x` and `y`.
///
/// Cosine divides by both norms and so accepts any non-zero vectors; chord
/// is the straight-line distance and expects unit vectors. Results are clamped
/// to `[0, 2]`.
pub fn distance(x: &[f64], y: &[f64], kind: DistanceKind) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::invalid(format!(
            "dimension mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x == y {
        return Ok(0.0);
    }
    Ok(match kind {
        DistanceKind::Cosine => {
            let denom = norm(x) * norm(y);
            if denom == 0.0 {
                return Err(Error::invalid("cosine distance of a zero vector"));
            }
            (1.0 - dot(x, y) / denom).clamp(0.0, 2.0)
        }
        DistanceKind::Chord => chord(x, y),
    })
}

/// Exact sum of distances from `query` to every reference vector, and whether
/// the reference holds a vector identical to `query` (whose term is exactly 0).
fn distance_sum(query: &[f64], reference: &Corpus, kind: DistanceKind) -> (f64, bool) {
    let mut acc = ExactSum::new();
    let mut has_twin = false;
    for h in reference.vectors() {
        if h == query {
            has_twin = true;
            continue;
        }
        acc.add(unit_distance(query, h, kind));
    }
    (acc.value(), has_twin)
}

/// `2 - sum / count`, with an empty mean counting as distance 0.
#[inline]
pub(crate) fn depth_from_sum(sum: f64, count: usize) -> f64 {
    if count == 0 {
        return 2.0;
    }
    (2.0 - sum / count as f64).clamp(0.0, 2.0)
}

fn check_dims(queries: &Corpus, reference: &Corpus) -> Result<()> {
    if queries.dim() != reference.dim() {
        return Err(Error::invalid(format!(
            "dimension mismatch: {} has dim {}, {} has dim {}",
            queries.name(),
            queries.dim(),
            reference.name(),
            reference.dim()
        )));
    }
    Ok(())
}

/// Depth of a single vector against `reference`; the vector is not added to it.
pub fn depth_of(vector: &[f64], reference: &Corpus, kind: DistanceKind) -> Result<f64> {
    if vector.len() != reference.dim() {
        return Err(Error::invalid(format!(
            "dimension mismatch: {} vs reference {}",
            vector.len(),
            reference.dim()
        )));
    }
    let (s, _) = distance_sum(vector, reference, kind);
    Ok(depth_from_sum(s, reference.len()))
}

/// Per-record sums of distances to every record of the same corpus.
///
/// The self term is exactly zero, so the sum serves both the full mean
/// (divide by m) and the leave-one-out mean (divide by m - 1).
pub(crate) fn self_distance_sums(reference: &Corpus, kind: DistanceKind) -> Vec<f64> {
    let vectors: Vec<&[f64]> = reference.vectors().collect();
    vectors
        .par_iter()
        .map(|x| {
            vectors
                .iter()
                .map(|h| unit_distance(x, h, kind))
                .collect::<ExactSum>()
                .value()
        })
        .collect()
}

/// Per-query sums of distances to the reference, plus whether an identical
/// vector sits in the reference.
pub(crate) fn cross_distance_sums(
    queries: &Corpus,
    reference: &Corpus,
    kind: DistanceKind,
) -> Result<Vec<(f64, bool)>> {
    check_dims(queries, reference)?;
    let vectors: Vec<&[f64]> = queries.vectors().collect();
    Ok(vectors.par_iter().map(|q| distance_sum(q, reference, kind)).collect())
}

/// Depth of every record in a corpus, its center-outward ordering and median.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthReport {
    pub corpus_name: String,
    pub distance: DistanceKind,
    /// Depth per id, in corpus order.
    pub scores: IndexMap<String, f64>,
    /// Ids sorted by depth, deepest first. Ties keep corpus order.
    pub ordering: Vec<String>,
    /// Deepest record; the earliest in corpus order on ties.
    pub median_id: String,
}

impl DepthReport {
    pub fn depth(&self, id: &str) -> Option<f64> {
        self.scores.get(id).copied()
    }

    pub fn median_depth(&self) -> f64 {
        self.scores[&self.median_id]
    }

    /// Depth values in corpus order.
    pub fn depths(&self) -> Vec<f64> {
        self.scores.values().copied().collect()
    }

    /// 1-based rank in the ordering (1 = median).
    pub fn rank(&self, id: &str) -> Option<usize> {
        self.ordering.iter().position(|o| o == id).map(|p| p + 1)
    }

    /// `id,depth,rank` rows, deepest first.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["id", "depth", "rank"])?;
        for (rank, id) in self.ordering.iter().enumerate() {
            let depth = self.scores[id];
            w.write_record([id.as_str(), &format!("{depth:?}"), &(rank + 1).to_string()])?;
        }
        w.flush().map_err(|e| Error::io("<output>", e))
    }
}

/// Indices sorted by depth, deepest first; stable, so ties keep input order.
pub(crate) fn center_outward(depths: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..depths.len()).collect();
    idx.sort_by(|&a, &b| depths[b].total_cmp(&depths[a]));
    idx
}

/// Depth of every record in `corpus` against the corpus itself.
///
/// Each record's mean runs over all records, itself included (its self
/// distance is zero), so a singleton corpus has depth 2.
pub fn depth_scores(corpus: &Corpus, kind: DistanceKind) -> DepthReport {
    let m = corpus.len();
    let depths: Vec<f64> = self_distance_sums(corpus, kind)
        .into_iter()
        .map(|s| depth_from_sum(s, m))
        .collect();
    let order = center_outward(&depths);
    let ids: Vec<&str> = corpus.ids().collect();
    DepthReport {
        corpus_name: corpus.name().to_string(),
        distance: kind,
        scores: ids.iter().zip(&depths).map(|(id, d)| (id.to_string(), *d)).collect(),
        ordering: order.iter().map(|&i| ids[i].to_string()).collect(),
        median_id: ids[order[0]].to_string(),
    }
}

/// Depth of each query record with respect to `reference`.
///
/// Queries are not added to the reference; a query only meets a zero
/// distance if an identical vector is already in the reference.
pub fn depth_wrt(queries: &Corpus, reference: &Corpus, kind: DistanceKind) -> Result<IndexMap<String, f64>> {
    let m = reference.len();
    let depths = cross_distance_sums(queries, reference, kind)?
        .into_iter()
        .map(|(s, _)| depth_from_sum(s, m));
    Ok(queries.ids().zip(depths).map(|(id, d)| (id.to_string(), d)).collect())
}

#[cfg(test)]
#[allow(clippy::approx_constant, clippy::excessive_precision)] // worked-example and reference values are quoted verbatim
mod tests {
    use super::*;
    use crate::corpus::EmbeddingRecord;

    fn corpus(vectors: &[&[f64]]) -> Corpus {
        let records = vectors
            .iter()
            .enumerate()
            .map(|(i, v)| EmbeddingRecord::new(format!("p{i}"), v.to_vec()))
            .collect();
        Corpus::new("t", records).unwrap()
    }

    fn three_points() -> Corpus {
        corpus(&[&[1.0, 0.0], &[0.0, 1.0], &[0.70710678, 0.70710678]])
    }

    #[test]
    fn distance_examples() {
        let c = DistanceKind::Cosine;
        let h = DistanceKind::Chord;
        assert_eq!(distance(&[0.6, 0.8], &[0.6, 0.8], c).unwrap(), 0.0);
        assert!((distance(&[1.0, 0.0], &[0.0, 1.0], c).unwrap() - 1.0).abs() < 1e-15);
        assert!((distance(&[1.0, 0.0], &[-1.0, 0.0], c).unwrap() - 2.0).abs() < 1e-15);
        assert!((distance(&[1.0, 0.0], &[0.0, 1.0], h).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert!((distance(&[1.0, 0.0], &[-1.0, 0.0], h).unwrap() - 2.0).abs() < 1e-15);
        assert!(distance(&[1.0, 0.0], &[1.0, 0.0, 0.0], c).is_err());
        // Cosine ignores scale.
        assert!((distance(&[2.0, 0.0], &[0.0, 5.0], c).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn chord_never_nan_on_near_identical_vectors() {
        let x = [0.6, 0.8];
        let y = [0.6000000000000001, 0.7999999999999999];
        let d = distance(&x, &y, DistanceKind::Chord).unwrap();
        assert!(d.is_finite() && d >= 0.0);
    }

    #[test]
    fn three_point_worked_example() {
        // Frozen from a 40-digit brute-force evaluation of the 3x3 distance matrix.
        let report = depth_scores(&three_points(), DistanceKind::Cosine);
        let d = report.depths();
        assert!((d[0] - 1.5690355937288492).abs() < 1e-12);
        assert!((d[1] - 1.5690355937288492).abs() < 1e-12);
        assert!((d[2] - 1.804737854124365).abs() < 1e-12);
        assert_eq!(report.median_id, "p2");
        assert_eq!(report.ordering, ["p2", "p0", "p1"]);

        let report = depth_scores(&three_points(), DistanceKind::Chord);
        let d = report.depths();
        assert!((d[0] - 1.2734731909655751).abs() < 1e-12);
        assert!((d[2] - 1.4897554235132136).abs() < 1e-12);
    }

    #[test]
    fn singleton_has_depth_two() {
        for kind in DistanceKind::ALL {
            let report = depth_scores(&corpus(&[&[0.3, -0.2, 0.9]]), kind);
            assert_eq!(report.depths(), vec![2.0]);
        }
    }

    #[test]
    fn depth_wrt_examples() {
        let f = three_points();
        let y = corpus(&[&[0.92387953, 0.38268343]]);
        let d = depth_wrt(&y, &f, DistanceKind::Cosine).unwrap();
        assert!((d["p0"] - 1.7434808320856023).abs() < 1e-12);
        let d = depth_wrt(&y, &f, DistanceKind::Chord).unwrap();
        assert!((d["p0"] - 1.3694994149595129).abs() < 1e-12);

        let same = depth_wrt(&f, &f, DistanceKind::Cosine).unwrap();
        let report = depth_scores(&f, DistanceKind::Cosine);
        assert_eq!(same, report.scores);

        let x = corpus(&[&[1.0, 0.0]]);
        let anti = corpus(&[&[-1.0, 0.0]]);
        assert_eq!(depth_wrt(&anti, &x, DistanceKind::Cosine).unwrap()["p0"], 0.0);
        assert_eq!(depth_wrt(&anti, &x, DistanceKind::Chord).unwrap()["p0"], 0.0);

        let wrong = corpus(&[&[1.0, 0.0, 0.0]]);
        assert!(depth_wrt(&wrong, &x, DistanceKind::Cosine).is_err());
        assert!(depth_of(&[1.0], &x, DistanceKind::Cosine).is_err());
    }

    #[test]
    fn median_ties_take_earliest_record() {
        // Two antipodal pairs: every point has the same depth.
        let c = corpus(&[&[1.0, 0.0], &[0.0, 1.0], &[-1.0, 0.0], &[0.0, -1.0]]);
        let report = depth_scores(&c, DistanceKind::Cosine);
        assert_eq!(report.median_id, "p0");
        assert_eq!(report.ordering, ["p0", "p1", "p2", "p3"]);
        let reversed = c.subset("r", &[3, 2, 1, 0]).unwrap();
        assert_eq!(depth_scores(&reversed, DistanceKind::Cosine).median_id, "p3");
    }

    #[test]
    fn self_and_cross_sums_agree() {
        let f = three_points();
        let own = self_distance_sums(&f, DistanceKind::Cosine);
        let cross = cross_distance_sums(&f, &f, DistanceKind::Cosine).unwrap();
        for (s, (c, twin)) in own.iter().zip(&cross) {
            assert_eq!(s.to_bits(), c.to_bits());
            assert!(twin);
        }
        let y = corpus(&[&[0.0, -1.0]]);
        assert!(!cross_distance_sums(&y, &f, DistanceKind::Cosine).unwrap()[0].1);
        assert_eq!(depth_from_sum(0.0, 0), 2.0);
    }

    #[test]
    fn csv_rows_follow_ordering() {
        let report = depth_scores(&three_points(), DistanceKind::Cosine);
        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "id,depth,rank");
        assert!(lines[1].starts_with("p2,1.80473785"));
        assert!(lines[1].ends_with(",1"));
        assert_eq!(lines.len(), 4);
    }
}
