//! Statistical depth for corpora of text embeddings.
//!
//! Embeddings are treated as directions on the unit sphere. The depth of a
//! point is two minus its mean angular distance (cosine or chord) to a
//! reference corpus, which orders a corpus from its most central text (the
//! depth median) outward. On top of that ordering the crate provides:
//!
//! * a rank-sum two-sample test of whether one corpus is more outlying than
//!   another ([`ranksum`]),
//! * exemplar selection strategies for few-shot prompts ([`selection`]),
//! * Monte-Carlo sample-size, calibration and power studies ([`simulate`]).
//!
//! ```
//! use tte_depth::{depth_scores, Corpus, DistanceKind, EmbeddingRecord};
//!
//! let corpus = Corpus::new(
//!     "demo",
//!     vec![
//!         EmbeddingRecord::new("a", vec![1.0, 0.0]),
//!         EmbeddingRecord::new("b", vec![0.0, 1.0]),
//!         EmbeddingRecord::new("c", vec![1.0, 1.0]),
//!     ],
//! )
//! .unwrap();
//! let report = depth_scores(&corpus, DistanceKind::Cosine);
//! assert_eq!(report.median_id, "c");
//! ```

pub mod corpus;
pub mod depth;
pub mod error;
pub mod ranksum;
pub mod rng;
pub mod selection;
pub mod simulate;
pub mod sum;

pub use corpus::{load_corpus, load_corpus_with_warnings, normalize, Corpus, EmbeddingRecord, Format};
pub use depth::{depth_of, depth_scores, depth_wrt, distance, DepthReport, DistanceKind};
pub use error::{Error, Result};
pub use ranksum::{
    mcnemar, q_estimate, q_estimate_with, r_fraction, rank_sum_test, wilcoxon_test, McNemar, QEstimate, RankSumReport,
    SelfMatch, WilcoxonTest,
};
pub use selection::{allocate_quotas, select, QuotaAllocation, SelectionPlan, Strategy};
pub use simulate::{
    generate_population, null_calibration, power_study, sample_corpus, sample_size_study, CalibrationConfig,
    CalibrationReport, Family, GeneratorSpec, StudyConfig, StudyResult,
};
