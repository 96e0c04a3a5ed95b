//! Exemplar selection for few-shot prompts.
//!
//! * `RAND`: seeded shuffle of the whole corpus, first N.
//! * `LDM`: per-label quotas matching the corpus label distribution; each
//!   label's records are shuffled and the first `quota` taken.
//! * `DEEP`: the N deepest records.
//! * `DLDM`: the same quotas, filled with each label's deepest records.
//!
//! Label-matched strategies emit exemplars round-robin across labels in quota
//! order; `RAND` and `DEEP` keep their natural order.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use indexmap::IndexMap;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::depth::{depth_scores, DistanceKind};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Strategy {
    Rand,
    Ldm,
    Deep,
    Dldm,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [Strategy::Rand, Strategy::Ldm, Strategy::Deep, Strategy::Dldm];

    pub fn needs_labels(self) -> bool {
        matches!(self, Strategy::Ldm | Strategy::Dldm)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Rand => "RAND",
            Strategy::Ldm => "LDM",
            Strategy::Deep => "DEEP",
            Strategy::Dldm => "DLDM",
        })
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "RAND" => Ok(Strategy::Rand),
            "LDM" => Ok(Strategy::Ldm),
            "DEEP" => Ok(Strategy::Deep),
            "DLDM" => Ok(Strategy::Dldm),
            other => Err(Error::invalid(format!("unknown strategy {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuotaAllocation {
    /// Quota per label, in quota order: larger quota first, then larger
    /// label count, then label name.
    pub quotas: IndexMap<String, usize>,
    /// True when `n` exceeded the available records and every label got its
    /// full count instead.
    pub capped: bool,
}

impl QuotaAllocation {
    pub fn total(&self) -> usize {
        self.quotas.values().sum()
    }
}

/// Largest-remainder apportionment of `n` slots over labels.
///
/// Remainder ties go to the label with more records, then to the
/// lexicographically smaller label.
pub fn allocate_quotas(label_counts: &IndexMap<String, usize>, n: usize) -> Result<QuotaAllocation> {
    if n == 0 {
        return Err(Error::invalid("number of exemplars must be at least 1"));
    }
    let total: usize = label_counts.values().sum();
    if total == 0 {
        return Err(Error::invalid("no labeled records to allocate from"));
    }

    let mut alloc: Vec<(&str, usize, usize)> = Vec::with_capacity(label_counts.len());
    let capped = n > total;
    if capped {
        alloc.extend(label_counts.iter().map(|(l, &c)| (l.as_str(), c, c)));
    } else {
        // Exact integer shares: floor(n * c / total) and the remainder numerator.
        let mut rems = Vec::with_capacity(label_counts.len());
        let mut assigned = 0;
        for (label, &count) in label_counts {
            let scaled = n as u128 * count as u128;
            let base = (scaled / total as u128) as usize;
            rems.push((label.as_str(), count, base, scaled % total as u128));
            assigned += base;
        }
        rems.sort_by(|a, b| b.3.cmp(&a.3).then(b.1.cmp(&a.1)).then(a.0.cmp(b.0)));
        let leftover = n - assigned;
        for (i, (label, count, base, _)) in rems.into_iter().enumerate() {
            alloc.push((label, count, base + usize::from(i < leftover)));
        }
    }

    alloc.sort_by(|a, b| b.2.cmp(&a.2).then(b.1.cmp(&a.1)).then(a.0.cmp(b.0)));
    Ok(QuotaAllocation {
        quotas: alloc.into_iter().map(|(l, _, q)| (l.to_string(), q)).collect(),
        capped,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionPlan {
    pub strategy: Strategy,
    #[serde(rename = "n")]
    pub n_exemplars: usize,
    pub seed: u64,
    pub distance: DistanceKind,
    pub selected: Vec<String>,
    #[serde(rename = "quotas", skip_serializing_if = "Option::is_none", default)]
    pub per_label_quota: Option<IndexMap<String, usize>>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub warnings: Vec<String>,
}

impl SelectionPlan {
    /// Selected records as JSONL lines of `{id, label, text}`.
    pub fn write_records_jsonl<W: Write>(&self, corpus: &Corpus, mut writer: W) -> Result<()> {
        #[derive(Serialize)]
        struct Line<'a> {
            id: &'a str,
            #[serde(skip_serializing_if = "Option::is_none")]
            label: Option<&'a str>,
            #[serde(skip_serializing_if = "Option::is_none")]
            text: Option<&'a str>,
        }
        let by_id: HashMap<&str, usize> = corpus.ids().enumerate().map(|(i, id)| (id, i)).collect();
        for id in &self.selected {
            let idx = *by_id
                .get(id.as_str())
                .ok_or_else(|| Error::invalid(format!("id {id} not in corpus {}", corpus.name())))?;
            let rec = &corpus.records()[idx];
            serde_json::to_writer(
                &mut writer,
                &Line {
                    id: &rec.id,
                    label: rec.label.as_deref(),
                    text: rec.text.as_deref(),
                },
            )?;
            writer.write_all(b"\n").map_err(|e| Error::io("<output>", e))?;
        }
        Ok(())
    }
}

/// Record indices grouped by label, each group in the order of `order`.
fn group_by_label(corpus: &Corpus, order: &[usize]) -> IndexMap<String, Vec<usize>> {
    let mut groups: IndexMap<String, Vec<usize>> = IndexMap::new();
    for &i in order {
        let label = corpus.records()[i]
            .label
            .as_ref()
            .expect("labels checked before grouping");
        groups.entry(label.clone()).or_default().push(i);
    }
    groups
}

fn round_robin(lists: &[Vec<usize>]) -> Vec<usize> {
    let longest = lists.iter().map(Vec::len).max().unwrap_or(0);
    let mut out = Vec::with_capacity(lists.iter().map(Vec::len).sum());
    for round in 0..longest {
        out.extend(lists.iter().filter_map(|l| l.get(round)));
    }
    out
}

/// Chooses up to `n` exemplars from `corpus`.
pub fn select(corpus: &Corpus, strategy: Strategy, n: usize, seed: u64, kind: DistanceKind) -> Result<SelectionPlan> {
    if n == 0 {
        return Err(Error::invalid("number of exemplars must be at least 1"));
    }
    if strategy.needs_labels() {
        if let Some(rec) = corpus.first_unlabeled() {
            return Err(Error::MissingLabel { id: rec.id.clone() });
        }
    }

    let mut warnings = Vec::new();
    let take = if n > corpus.len() {
        warnings.push(format!(
            "requested {n} exemplars but corpus {} has {}; selecting all",
            corpus.name(),
            corpus.len()
        ));
        corpus.len()
    } else {
        n
    };

    let depth_order = || -> Vec<usize> {
        let report = depth_scores(corpus, kind);
        let pos: HashMap<&str, usize> = corpus.ids().enumerate().map(|(i, id)| (id, i)).collect();
        report.ordering.iter().map(|id| pos[id.as_str()]).collect()
    };

    let (picked, quotas) = match strategy {
        Strategy::Rand => {
            let mut idx: Vec<usize> = (0..corpus.len()).collect();
            idx.shuffle(&mut rng::stream(seed, "select/rand", &[]));
            idx.truncate(take);
            (idx, None)
        }
        Strategy::Deep => {
            let mut idx = depth_order();
            idx.truncate(take);
            (idx, None)
        }
        Strategy::Ldm | Strategy::Dldm => {
            let order: Vec<usize> = if strategy == Strategy::Dldm {
                depth_order()
            } else {
                (0..corpus.len()).collect()
            };
            let mut groups = group_by_label(corpus, &order);
            let counts: IndexMap<String, usize> = groups.iter().map(|(l, g)| (l.clone(), g.len())).collect();
            let alloc = allocate_quotas(&counts, take)?;

            let mut lists = Vec::with_capacity(alloc.quotas.len());
            for (label, &quota) in &alloc.quotas {
                let group = groups.get_mut(label).expect("quota labels come from groups");
                if strategy == Strategy::Ldm {
                    group.shuffle(&mut rng::stream(seed, "select/ldm", label.as_bytes()));
                }
                lists.push(group[..quota].to_vec());
            }
            (round_robin(&lists), Some(alloc.quotas))
        }
    };

    let ids: Vec<&str> = corpus.ids().collect();
    Ok(SelectionPlan {
        strategy,
        n_exemplars: n,
        seed,
        distance: kind,
        selected: picked.into_iter().map(|i| ids[i].to_string()).collect(),
        per_label_quota: quotas,
        warnings,
    })
}

#[cfg(test)]
#[allow(clippy::approx_constant, clippy::excessive_precision)] // worked-example and reference values are quoted verbatim
mod tests {
    use super::*;
    use crate::corpus::EmbeddingRecord;

    fn counts(pairs: &[(&str, usize)]) -> IndexMap<String, usize> {
        pairs.iter().map(|(l, c)| (l.to_string(), *c)).collect()
    }

    fn labeled(vectors: &[(&[f64], &str)]) -> Corpus {
        let records = vectors
            .iter()
            .enumerate()
            .map(|(i, (v, l))| EmbeddingRecord::new(format!("r{i}"), v.to_vec()).with_label(*l))
            .collect();
        Corpus::new("t", records).unwrap()
    }

    #[test]
    fn quota_examples() {
        let q = allocate_quotas(&counts(&[("A", 60), ("B", 40)]), 5).unwrap();
        assert_eq!(q.quotas, counts(&[("A", 3), ("B", 2)]));
        assert!(!q.capped);

        let q = allocate_quotas(&counts(&[("A", 50), ("B", 30), ("C", 20)]), 6).unwrap();
        assert_eq!(q.quotas, counts(&[("A", 3), ("B", 2), ("C", 1)]));

        let q = allocate_quotas(&counts(&[("B", 1), ("A", 1)]), 1).unwrap();
        assert_eq!(q.quotas, counts(&[("A", 1), ("B", 0)]));
    }

    #[test]
    fn quota_tie_prefers_larger_label() {
        // 3 slots over {A: 2, B: 4}: floors (1, 2), remainders equal -> nothing left over.
        let q = allocate_quotas(&counts(&[("A", 2), ("B", 4)]), 3).unwrap();
        assert_eq!(q.quotas, counts(&[("B", 2), ("A", 1)]));
        // 1 slot over {A: 1, B: 2, C: 1}: B has the largest remainder.
        let q = allocate_quotas(&counts(&[("A", 1), ("C", 1), ("B", 2)]), 1).unwrap();
        assert_eq!(q.quotas["B"], 1);
        // 2 slots over {A: 1, B: 1, C: 1}: equal remainders and counts, lexicographic.
        let q = allocate_quotas(&counts(&[("C", 1), ("B", 1), ("A", 1)]), 2).unwrap();
        assert_eq!(q.quotas, counts(&[("A", 1), ("B", 1), ("C", 0)]));
    }

    #[test]
    fn quota_caps_at_availability() {
        let q = allocate_quotas(&counts(&[("A", 2), ("B", 1)]), 10).unwrap();
        assert!(q.capped);
        assert_eq!(q.quotas, counts(&[("A", 2), ("B", 1)]));
        assert!(allocate_quotas(&counts(&[("A", 2)]), 0).is_err());
        assert!(allocate_quotas(&counts(&[]), 3).is_err());
    }

    #[test]
    fn deep_picks_the_median() {
        let c = Corpus::new(
            "f",
            vec![
                EmbeddingRecord::new("a", vec![1.0, 0.0]),
                EmbeddingRecord::new("b", vec![0.0, 1.0]),
                EmbeddingRecord::new("c", vec![0.70710678, 0.70710678]),
            ],
        )
        .unwrap();
        let plan = select(&c, Strategy::Deep, 1, 0, DistanceKind::Cosine).unwrap();
        assert_eq!(plan.selected, ["c"]);
        assert!(plan.per_label_quota.is_none());
    }

    #[test]
    fn dldm_takes_deepest_per_label() {
        // Label A: r0 on the diagonal is deeper than r1; label B: r3 deeper than r2.
        let c = labeled(&[
            (&[0.7, 0.7], "A"),
            (&[1.0, -0.9], "A"),
            (&[-0.9, 1.0], "B"),
            (&[0.6, 0.8], "B"),
        ]);
        let plan = select(&c, Strategy::Dldm, 2, 0, DistanceKind::Cosine).unwrap();
        assert_eq!(plan.per_label_quota.unwrap(), counts(&[("A", 1), ("B", 1)]));
        assert_eq!(plan.selected, ["r0", "r3"]);
    }

    #[test]
    fn rand_and_ldm_are_seeded() {
        let rows: Vec<(Vec<f64>, &str)> = (0..30)
            .map(|i| {
                (
                    vec![1.0 + i as f64, (i * 7 % 5) as f64],
                    if i % 3 == 0 { "A" } else { "B" },
                )
            })
            .collect();
        let refs: Vec<(&[f64], &str)> = rows.iter().map(|(v, l)| (v.as_slice(), *l)).collect();
        let c = labeled(&refs);
        for s in [Strategy::Rand, Strategy::Ldm] {
            let a = select(&c, s, 7, 42, DistanceKind::Cosine).unwrap();
            let b = select(&c, s, 7, 42, DistanceKind::Cosine).unwrap();
            assert_eq!(a, b);
            let other = select(&c, s, 7, 43, DistanceKind::Cosine).unwrap();
            assert_ne!(a.selected, other.selected);
        }
        let ldm = select(&c, Strategy::Ldm, 7, 42, DistanceKind::Cosine).unwrap();
        let quotas = ldm.per_label_quota.as_ref().unwrap();
        assert_eq!(quotas, &counts(&[("B", 5), ("A", 2)]));
        // Round robin: B, A, B, A, B, B, B.
        let label_of = |id: &str| c.records()[c.position(id).unwrap()].label.clone().unwrap();
        let seq: String = ldm.selected.iter().map(|id| label_of(id)).collect();
        assert_eq!(seq, "BABABBB");
    }

    #[test]
    fn missing_labels_and_oversized_requests() {
        let c = Corpus::new(
            "f",
            vec![
                EmbeddingRecord::new("a", vec![1.0, 0.0]).with_label("X"),
                EmbeddingRecord::new("b", vec![0.0, 1.0]),
            ],
        )
        .unwrap();
        let err = select(&c, Strategy::Ldm, 1, 0, DistanceKind::Cosine).unwrap_err();
        assert_eq!(err.to_string(), "record b has no label");
        assert!(select(&c, Strategy::Dldm, 1, 0, DistanceKind::Cosine).is_err());
        assert!(select(&c, Strategy::Rand, 0, 0, DistanceKind::Cosine).is_err());

        let plan = select(&c, Strategy::Rand, 5, 0, DistanceKind::Cosine).unwrap();
        assert_eq!(plan.selected.len(), 2);
        assert_eq!(plan.warnings.len(), 1);
    }

    #[test]
    fn records_jsonl() {
        let c = Corpus::new(
            "f",
            vec![
                EmbeddingRecord::new("a", vec![1.0, 0.0])
                    .with_label("X")
                    .with_text("first"),
                EmbeddingRecord::new("b", vec![0.0, 1.0]).with_label("Y"),
            ],
        )
        .unwrap();
        let plan = select(&c, Strategy::Ldm, 2, 1, DistanceKind::Cosine).unwrap();
        let mut buf = Vec::new();
        plan.write_records_jsonl(&c, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("{\"id\":\"a\",\"label\":\"X\",\"text\":\"first\"}"));
        assert!(text.contains("{\"id\":\"b\",\"label\":\"Y\"}"));
    }
}
