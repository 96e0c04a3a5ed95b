//! Depth-induced two-sample statistics.
//!
//! For a reference sample `X` (size m) and a query sample `Y` (size n), each
//! query gets `R(y) = #{x in X : D(x) <= D(y)} / m` where `D` is depth with
//! respect to `X`. `Q = mean R(y)` sits near 1/2 when both samples come from
//! the same distribution and drops when the queries are more outlying. Under
//! the null `Q - 1/2` is approximately normal with variance
//! `(1/m + 1/n) / 12`, giving a one-sided Z test against `Q < 1/2`.
//!
//! McNemar's test for paired classifier outcomes lives here as well.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use libm::erfc;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::depth::{cross_distance_sums, depth_from_sum, self_distance_sums, DistanceKind};
use crate::error::{Error, Result};

/// How a point's own zero self-distance enters its depth inside `Q`.
///
/// `Exclude` computes each reference depth from the other m - 1 records, and
/// drops one identical reference vector from a query's mean. Reference and
/// query depths are then estimates of the same quantity, which keeps `Q`
/// centred at 1/2 under the null. `Include` uses the plain depth of every
/// reference point (self term included) and is biased low under the null by
/// roughly the self-term's share of the depth spread.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SelfMatch {
    #[default]
    Exclude,
    Include,
}

impl FromStr for SelfMatch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "exclude" => Ok(SelfMatch::Exclude),
            "include" => Ok(SelfMatch::Include),
            other => Err(Error::invalid(format!("unknown self-match mode {other:?}"))),
        }
    }
}

impl fmt::Display for SelfMatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SelfMatch::Exclude => "exclude",
            SelfMatch::Include => "include",
        })
    }
}

/// Standard normal CDF via the complementary error function.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z * std::f64::consts::FRAC_1_SQRT_2)
}

/// Fraction of `ref_depths` that are `<=` `y_depth` (exact comparison).
pub fn r_fraction(y_depth: f64, ref_depths: &[f64]) -> Result<f64> {
    if ref_depths.is_empty() {
        return Err(Error::EmptyCorpus { name: None });
    }
    let below = ref_depths.iter().filter(|&&d| d <= y_depth).count();
    Ok(below as f64 / ref_depths.len() as f64)
}

/// Sample estimate of `Q` with the medians reported alongside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QEstimate {
    pub q_hat: f64,
    pub m: usize,
    pub n: usize,
    /// Depth of the reference median (plain depth, self term included).
    pub med_ref_depth: f64,
    /// Largest query depth with respect to the reference.
    pub med_query_depth: f64,
    pub distance: DistanceKind,
    pub self_match: SelfMatch,
}

pub fn q_estimate(reference: &Corpus, queries: &Corpus, kind: DistanceKind) -> Result<QEstimate> {
    q_estimate_with(reference, queries, kind, SelfMatch::default())
}

pub fn q_estimate_with(
    reference: &Corpus,
    queries: &Corpus,
    kind: DistanceKind,
    self_match: SelfMatch,
) -> Result<QEstimate> {
    let m = reference.len();
    let n = queries.len();
    let ref_sums = self_distance_sums(reference, kind);
    let query_sums = cross_distance_sums(queries, reference, kind)?;

    let plain_ref: Vec<f64> = ref_sums.iter().map(|&s| depth_from_sum(s, m)).collect();
    let plain_query: Vec<f64> = query_sums.iter().map(|&(s, _)| depth_from_sum(s, m)).collect();

    let (mut ref_depths, query_depths) = match self_match {
        SelfMatch::Include => (plain_ref.clone(), plain_query.clone()),
        SelfMatch::Exclude => (
            ref_sums.iter().map(|&s| depth_from_sum(s, m - 1)).collect::<Vec<_>>(),
            query_sums
                .iter()
                .map(|&(s, twin)| depth_from_sum(s, if twin { m - 1 } else { m }))
                .collect(),
        ),
    };

    ref_depths.sort_by(f64::total_cmp);
    let below: usize = query_depths
        .iter()
        .map(|&y| ref_depths.partition_point(|&d| d <= y))
        .sum();

    Ok(QEstimate {
        // One rounding of an exact ratio of integers.
        q_hat: below as f64 / (m as f64 * n as f64),
        m,
        n,
        med_ref_depth: plain_ref.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        med_query_depth: plain_query.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        distance: kind,
        self_match,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonTest {
    /// `q_hat - 1/2`.
    pub w: f64,
    pub z: f64,
    /// Lower-tail p-value for `Q < 1/2`.
    pub p_one_sided: f64,
}

impl WilcoxonTest {
    /// `2 * Phi(-|z|)`.
    pub fn p_two_sided(&self) -> f64 {
        (2.0 * normal_cdf(-self.z.abs())).min(1.0)
    }
}

/// Standard deviation of `Q_hat` under the null.
pub fn null_std(m: usize, n: usize) -> f64 {
    ((1.0 / m as f64 + 1.0 / n as f64) / 12.0).sqrt()
}

pub fn wilcoxon_test(q_hat: f64, m: usize, n: usize) -> Result<WilcoxonTest> {
    if m == 0 || n == 0 {
        return Err(Error::invalid(format!(
            "sample sizes must be positive, got m={m}, n={n}"
        )));
    }
    if !(0.0..=1.0).contains(&q_hat) {
        return Err(Error::invalid(format!("q_hat must lie in [0, 1], got {q_hat}")));
    }
    let w = q_hat - 0.5;
    let z = w / ((1.0 / m as f64 + 1.0 / n as f64) / 12.0).sqrt();
    // Keep p inside (0, 1) when the tail under- or overflows.
    let p = normal_cdf(z).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0);
    Ok(WilcoxonTest { w, z, p_one_sided: p })
}

/// Everything reported for a two-corpus comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankSumReport {
    pub q_hat: f64,
    pub w: f64,
    pub z: f64,
    pub p_one_sided: f64,
    pub m: usize,
    pub n: usize,
    pub med_ref_depth: f64,
    pub med_query_depth: f64,
    pub distance: DistanceKind,
    pub self_match: SelfMatch,
}

impl RankSumReport {
    pub fn new(estimate: QEstimate, test: WilcoxonTest) -> Self {
        Self {
            q_hat: estimate.q_hat,
            w: test.w,
            z: test.z,
            p_one_sided: test.p_one_sided,
            m: estimate.m,
            n: estimate.n,
            med_ref_depth: estimate.med_ref_depth,
            med_query_depth: estimate.med_query_depth,
            distance: estimate.distance,
            self_match: estimate.self_match,
        }
    }

    pub fn p_two_sided(&self) -> f64 {
        WilcoxonTest {
            w: self.w,
            z: self.z,
            p_one_sided: self.p_one_sided,
        }
        .p_two_sided()
    }

    /// Header and single row: `Med Human,Med Synth,Q,W,p`.
    pub fn write_table_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["Med Human", "Med Synth", "Q", "W", "p"])?;
        w.write_record([
            format!("{:?}", self.med_ref_depth),
            format!("{:?}", self.med_query_depth),
            format!("{:?}", self.q_hat),
            format!("{:?}", self.w),
            format!("{:?}", self.p_one_sided),
        ])?;
        w.flush().map_err(|e| Error::io("<output>", e))
    }
}

/// `q_estimate` followed by `wilcoxon_test`.
pub fn rank_sum_test(
    reference: &Corpus,
    queries: &Corpus,
    kind: DistanceKind,
    self_match: SelfMatch,
) -> Result<RankSumReport> {
    let est = q_estimate_with(reference, queries, kind, self_match)?;
    let test = wilcoxon_test(est.q_hat, est.m, est.n)?;
    Ok(RankSumReport::new(est, test))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McNemar {
    pub b: u64,
    pub c: u64,
    pub chi2: f64,
    /// Upper tail of chi-square with one degree of freedom.
    pub p: f64,
}

/// Continuity-corrected McNemar test on discordant counts.
///
/// `b` counts pairs where only classifier A is right, `c` where only B is.
pub fn mcnemar(b: u64, c: u64) -> McNemar {
    if b + c == 0 {
        return McNemar {
            b,
            c,
            chi2: 0.0,
            p: 1.0,
        };
    }
    let diff = (b.abs_diff(c) as f64 - 1.0).max(0.0);
    let chi2 = diff * diff / (b + c) as f64;
    let p = erfc((chi2 / 2.0).sqrt()).min(1.0);
    McNemar { b, c, chi2, p }
}

/// Discordant counts `(b, c)` from per-item correctness of two classifiers.
pub fn discordant_counts(a_correct: &[bool], b_correct: &[bool]) -> Result<(u64, u64)> {
    if a_correct.len() != b_correct.len() {
        return Err(Error::invalid(format!(
            "prediction lists differ in length: {} vs {}",
            a_correct.len(),
            b_correct.len()
        )));
    }
    let mut b = 0;
    let mut c = 0;
    for (&a, &o) in a_correct.iter().zip(b_correct) {
        match (a, o) {
            (true, false) => b += 1,
            (false, true) => c += 1,
            _ => {}
        }
    }
    Ok((b, c))
}
