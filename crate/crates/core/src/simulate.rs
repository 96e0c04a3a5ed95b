//! Monte-Carlo studies on synthetic directional data.
//!
//! * [`sample_size_study`]: how the spread of `Q_hat` shrinks with the
//!   sample size when subsampling two fixed populations.
//! * [`null_calibration`]: size of the rank-sum Z test when both samples come
//!   from the same generator.
//! * [`power_study`]: the same harness with two different generators.
//!
//! Every replicate draws from its own stream derived from the master seed,
//! so replicates can run in parallel without changing the results.

use std::io::Write;
use std::str::FromStr;

use rand::seq::index;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, EmbeddingRecord};
use crate::depth::DistanceKind;
use crate::error::{Error, Result};
use crate::ranksum::{null_std, q_estimate_with, rank_sum_test, SelfMatch};
use crate::rng;
use crate::sum::exact_sum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// Directions uniform on the unit sphere.
    UniformSphere,
    /// `concentration * mean + N(0, I)`, normalized. Infinite concentration
    /// collapses onto the mean direction; zero gives the uniform sphere.
    Concentrated,
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "uniform-sphere" | "uniform" => Ok(Family::UniformSphere),
            "concentrated" => Ok(Family::Concentrated),
            other => Err(Error::invalid(format!("unknown generator family {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub dim: usize,
    pub family: Family,
    #[serde(default)]
    pub concentration: f64,
    /// Defaults to the first coordinate axis.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_direction: Option<Vec<f64>>,
}

impl GeneratorSpec {
    pub fn uniform(dim: usize) -> Self {
        Self {
            dim,
            family: Family::UniformSphere,
            concentration: 0.0,
            mean_direction: None,
        }
    }

    pub fn concentrated(dim: usize, concentration: f64, mean_direction: Vec<f64>) -> Self {
        Self {
            dim,
            family: Family::Concentrated,
            concentration,
            mean_direction: Some(mean_direction),
        }
    }

    /// Unit vector along coordinate `axis`.
    pub fn axis(dim: usize, axis: usize) -> Vec<f64> {
        let mut v = vec![0.0; dim];
        v[axis] = 1.0;
        v
    }

    fn validate(&self) -> Result<Vec<f64>> {
        if self.dim < 2 {
            return Err(Error::invalid(format!(
                "generator dimension must be >= 2, got {}",
                self.dim
            )));
        }
        if self.concentration.is_nan() || self.concentration < 0.0 {
            return Err(Error::invalid(format!(
                "concentration must be >= 0, got {}",
                self.concentration
            )));
        }
        let mean = match &self.mean_direction {
            None => Self::axis(self.dim, 0),
            Some(v) if v.len() != self.dim => {
                return Err(Error::invalid(format!(
                    "mean direction has {} coordinates, generator dimension is {}",
                    v.len(),
                    self.dim
                )))
            }
            Some(v) => crate::corpus::normalize(v).map_err(|e| Error::invalid(format!("mean direction: {e}")))?,
        };
        Ok(mean)
    }
}

/// Draws `size` records named `{name}-{i}` from `spec`.
pub fn generate_population(spec: &GeneratorSpec, size: usize, seed: u64, name: &str) -> Result<Corpus> {
    let mean = spec.validate()?;
    if size == 0 {
        return Err(Error::invalid("population size must be at least 1"));
    }
    let mut rng = rng::stream(seed, "population", &[]);
    let records = (0..size)
        .map(|i| {
            let noise = (0..spec.dim).map(|_| StandardNormal.sample(&mut rng));
            let vector: Vec<f64> = match spec.family {
                Family::UniformSphere => noise.collect(),
                Family::Concentrated if spec.concentration.is_infinite() => mean.clone(),
                Family::Concentrated => mean
                    .iter()
                    .zip(noise)
                    .map(|(mu, z): (&f64, f64)| spec.concentration * mu + z)
                    .collect(),
            };
            EmbeddingRecord::new(format!("{name}-{i}"), vector)
        })
        .collect();
    Corpus::new(name, records)
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = exact_sum(values) / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    (mean, (exact_sum(&sq) / (n - 1) as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub sample_sizes: Vec<usize>,
    pub replicates: usize,
    pub seed: u64,
    pub distance: DistanceKind,
    #[serde(default)]
    pub self_match: SelfMatch,
    /// How the populations were produced, when synthetic.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorSpec>,
}

impl StudyConfig {
    pub const DEFAULT_SIZES: [usize; 5] = [5, 25, 50, 100, 500];
    pub const DEFAULT_REPLICATES: usize = 20;

    pub fn new(seed: u64) -> Self {
        Self {
            sample_sizes: Self::DEFAULT_SIZES.to_vec(),
            replicates: Self::DEFAULT_REPLICATES,
            seed,
            distance: DistanceKind::Cosine,
            self_match: SelfMatch::default(),
            generator: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeSummary {
    pub n: usize,
    pub mean_q: f64,
    pub std_q: f64,
    pub q_values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyResult {
    pub config: StudyConfig,
    /// `Q` on the full populations.
    pub truth_q: f64,
    pub per_n: Vec<SizeSummary>,
}

impl StudyResult {
    /// `n,mean_q,std_q` rows.
    pub fn write_summary_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["n", "mean_q", "std_q"])?;
        for s in &self.per_n {
            w.write_record([s.n.to_string(), format!("{:?}", s.mean_q), format!("{:?}", s.std_q)])?;
        }
        w.flush().map_err(|e| Error::io("<output>", e))
    }

    /// `n,replicate,q_hat` rows.
    pub fn write_raw_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["n", "replicate", "q_hat"])?;
        for s in &self.per_n {
            for (r, q) in s.q_values.iter().enumerate() {
                w.write_record([s.n.to_string(), r.to_string(), format!("{q:?}")])?;
            }
        }
        w.flush().map_err(|e| Error::io("<output>", e))
    }
}

fn sorted_sample(rng: &mut rng::StreamRng, len: usize, amount: usize) -> Vec<usize> {
    let mut idx = index::sample(rng, len, amount).into_vec();
    idx.sort_unstable();
    idx
}

/// `size` records drawn without replacement from `corpus`, kept in corpus
/// order. `domain` separates independent draws made with the same seed.
pub fn sample_corpus(corpus: &Corpus, size: usize, seed: u64, domain: &str) -> Result<Corpus> {
    if size == 0 || size > corpus.len() {
        return Err(Error::invalid(format!(
            "cannot sample {size} records from {} ({} records)",
            corpus.name(),
            corpus.len()
        )));
    }
    let mut rng = rng::stream(seed, domain, &[]);
    corpus.subset(corpus.name(), &sorted_sample(&mut rng, corpus.len(), size))
}

/// Draws `n` records without replacement from each population, `replicates`
/// times per sample size, and records `Q_hat` for each draw.
pub fn sample_size_study(config: &StudyConfig, pop_f: &Corpus, pop_g: &Corpus) -> Result<StudyResult> {
    if config.sample_sizes.is_empty() {
        return Err(Error::invalid("no sample sizes given"));
    }
    if config.replicates == 0 {
        return Err(Error::invalid("replicates must be at least 1"));
    }
    for &n in &config.sample_sizes {
        if n == 0 {
            return Err(Error::invalid("sample sizes must be positive"));
        }
        if n > pop_f.len() || n > pop_g.len() {
            return Err(Error::invalid(format!(
                "sample size {n} exceeds population sizes ({}, {})",
                pop_f.len(),
                pop_g.len()
            )));
        }
    }

    let kind = config.distance;
    let truth_q = q_estimate_with(pop_f, pop_g, kind, config.self_match)?.q_hat;

    let mut per_n = Vec::with_capacity(config.sample_sizes.len());
    for &n in &config.sample_sizes {
        let q_values = (0..config.replicates)
            .into_par_iter()
            .map(|r| {
                let mut rng = rng::stream(config.seed, "study", &rng::int_key(&[n as u64, r as u64]));
                let f = pop_f.subset(pop_f.name(), &sorted_sample(&mut rng, pop_f.len(), n))?;
                let g = pop_g.subset(pop_g.name(), &sorted_sample(&mut rng, pop_g.len(), n))?;
                Ok(q_estimate_with(&f, &g, kind, config.self_match)?.q_hat)
            })
            .collect::<Result<Vec<f64>>>()?;
        let (mean_q, std_q) = mean_std(&q_values);
        per_n.push(SizeSummary {
            n,
            mean_q,
            std_q,
            q_values,
        });
    }

    Ok(StudyResult {
        config: config.clone(),
        truth_q,
        per_n,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationConfig {
    pub m: usize,
    pub n: usize,
    pub replicates: usize,
    pub alpha: f64,
    pub seed: u64,
    pub distance: DistanceKind,
    #[serde(default)]
    pub self_match: SelfMatch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub config: CalibrationConfig,
    pub reference_generator: GeneratorSpec,
    pub query_generator: GeneratorSpec,
    pub mean_q: f64,
    pub std_q: f64,
    /// `sqrt((1/m + 1/n) / 12)`.
    pub theoretical_std: f64,
    /// Fraction of replicates with one-sided p below alpha.
    pub rejection_rate: f64,
    pub q_values: Vec<f64>,
    pub p_values: Vec<f64>,
}

impl CalibrationReport {
    pub fn write_summary_csv<W: Write>(&self, writer: W) -> Result<()> {
        let c = &self.config;
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "m",
            "n",
            "replicates",
            "alpha",
            "mean_q",
            "std_q",
            "theoretical_std",
            "rejection_rate",
        ])?;
        w.write_record([
            c.m.to_string(),
            c.n.to_string(),
            c.replicates.to_string(),
            format!("{:?}", c.alpha),
            format!("{:?}", self.mean_q),
            format!("{:?}", self.std_q),
            format!("{:?}", self.theoretical_std),
            format!("{:?}", self.rejection_rate),
        ])?;
        w.flush().map_err(|e| Error::io("<output>", e))
    }

    /// `replicate,q_hat,p` rows.
    pub fn write_raw_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["replicate", "q_hat", "p"])?;
        for (r, (q, p)) in self.q_values.iter().zip(&self.p_values).enumerate() {
            w.write_record([r.to_string(), format!("{q:?}"), format!("{p:?}")])?;
        }
        w.flush().map_err(|e| Error::io("<output>", e))
    }
}

/// Rank-sum test size with both samples drawn from `generator`.
pub fn null_calibration(generator: &GeneratorSpec, config: &CalibrationConfig) -> Result<CalibrationReport> {
    power_study(generator, generator, config)
}

/// Rank-sum test behaviour with the reference sample drawn from
/// `reference` and the query sample from `query`.
pub fn power_study(
    reference: &GeneratorSpec,
    query: &GeneratorSpec,
    config: &CalibrationConfig,
) -> Result<CalibrationReport> {
    if !(config.alpha > 0.0 && config.alpha < 1.0) {
        return Err(Error::invalid(format!(
            "alpha must lie in (0, 1), got {}",
            config.alpha
        )));
    }
    if config.m == 0 || config.n == 0 {
        return Err(Error::invalid("sample sizes must be positive"));
    }
    if config.replicates == 0 {
        return Err(Error::invalid("replicates must be at least 1"));
    }
    if reference.dim != query.dim {
        return Err(Error::invalid("generators differ in dimension"));
    }
    reference.validate()?;
    query.validate()?;

    let outcomes = (0..config.replicates)
        .into_par_iter()
        .map(|r| {
            let key = rng::int_key(&[r as u64]);
            let f = generate_population(
                reference,
                config.m,
                rng::derive_seed(config.seed, "calibrate/reference", &key),
                "ref",
            )?;
            let g = generate_population(
                query,
                config.n,
                rng::derive_seed(config.seed, "calibrate/query", &key),
                "query",
            )?;
            let report = rank_sum_test(&f, &g, config.distance, config.self_match)?;
            Ok((report.q_hat, report.p_one_sided))
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;

    let (q_values, p_values): (Vec<f64>, Vec<f64>) = outcomes.into_iter().unzip();
    let (mean_q, std_q) = mean_std(&q_values);
    let rejections = p_values.iter().filter(|&&p| p < config.alpha).count();

    Ok(CalibrationReport {
        config: config.clone(),
        reference_generator: reference.clone(),
        query_generator: query.clone(),
        mean_q,
        std_q,
        theoretical_std: null_std(config.m, config.n),
        rejection_rate: rejections as f64 / config.replicates as f64,
        q_values,
        p_values,
    })
}
