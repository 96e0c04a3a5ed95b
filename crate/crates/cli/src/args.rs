use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tte_depth::simulate::Family;
use tte_depth::{DistanceKind, Format, SelfMatch, Strategy};

/// Statistical depth for corpora of text embeddings.
#[derive(Debug, Parser)]
#[command(name = "tte-depth", version, about, propagate_version = true)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalOpts {
    /// Angular distance used for depth.
    #[arg(long, global = true, value_enum, default_value_t = DistanceArg::Cosine)]
    pub distance: DistanceArg,

    /// Corpus file format. Defaults to csv for `.csv` files and jsonl otherwise.
    #[arg(long, global = true, value_enum)]
    pub format: Option<FormatArg>,

    /// Worker threads (results do not depend on this).
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    pub threads: Option<u16>,

    /// Write the report here instead of standard output.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Depth of every record, center-outward ordering and depth median.
    Depth(DepthArgs),
    /// Rank-sum test of whether QUERY is more outlying than REFERENCE.
    Compare(CompareArgs),
    /// Choose few-shot exemplars from a labeled corpus.
    Select(SelectArgs),
    /// Spread of Q-hat across sample sizes drawn from two populations.
    Simulate(SimulateArgs),
    /// Size (or power) of the rank-sum test on synthetic generators.
    Calibrate(CalibrateArgs),
    /// McNemar's test on discordant prediction counts.
    Mcnemar(McnemarArgs),
    /// Write a synthetic population corpus.
    Generate(GenerateArgs),
}

#[derive(Debug, Args)]
pub struct DepthArgs {
    pub corpus: PathBuf,

    #[arg(long, value_enum, default_value_t = ReportEmit::Json)]
    pub emit: ReportEmit,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Reference corpus (F).
    pub reference: PathBuf,
    /// Query corpus (G).
    pub query: PathBuf,

    /// Subsample M reference and N query records before testing.
    #[arg(long, value_name = "M,N", value_parser = parse_pair, requires = "seed")]
    pub sample: Option<(usize, usize)>,

    #[arg(long)]
    pub seed: Option<u64>,

    /// Also report the two-sided p-value (not part of the one-sided test).
    #[arg(long)]
    pub two_sided: bool,

    /// Whether a reference record is compared with itself.
    #[arg(long, value_enum, default_value_t = SelfMatchArg::Exclude)]
    pub self_match: SelfMatchArg,

    #[arg(long, value_enum, default_value_t = CompareEmit::Both)]
    pub emit: CompareEmit,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    pub corpus: PathBuf,

    #[arg(long, value_enum)]
    pub strategy: StrategyArg,

    /// Number of exemplars.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub n: u64,

    #[arg(long)]
    pub seed: u64,

    #[arg(long, value_enum, default_value_t = SelectEmit::Plan)]
    pub emit: SelectEmit,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Population F.
    pub pop_f: PathBuf,
    /// Population G.
    pub pop_g: PathBuf,

    #[arg(long, value_delimiter = ',', default_values_t = [5usize, 25, 50, 100, 500])]
    pub sizes: Vec<usize>,

    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..))]
    pub replicates: u64,

    #[arg(long)]
    pub seed: u64,

    #[arg(long, value_enum, default_value_t = SelfMatchArg::Exclude)]
    pub self_match: SelfMatchArg,

    #[arg(long, value_enum, default_value_t = ReportEmit::Json)]
    pub emit: ReportEmit,

    /// Companion CSV with every replicate's Q-hat.
    #[arg(long, value_name = "PATH")]
    pub raw_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GeneratorArgs {
    #[arg(long, default_value_t = 16, value_parser = clap::value_parser!(u64).range(2..))]
    pub dim: u64,

    #[arg(long, value_enum, default_value_t = FamilyArg::UniformSphere)]
    pub family: FamilyArg,

    /// Weight of the mean direction for the concentrated family.
    #[arg(long, default_value_t = 0.0)]
    pub concentration: f64,

    /// Coordinate axis used as the mean direction.
    #[arg(long, default_value_t = 0)]
    pub mean_axis: usize,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[command(flatten)]
    pub generator: GeneratorArgs,

    /// Query generator family; any `--query-*` flag turns this into a power study.
    #[arg(long, value_enum)]
    pub query_family: Option<FamilyArg>,

    #[arg(long)]
    pub query_concentration: Option<f64>,

    #[arg(long)]
    pub query_mean_axis: Option<usize>,

    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    pub m: u64,

    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    pub n: u64,

    #[arg(long, default_value_t = 500, value_parser = clap::value_parser!(u64).range(1..))]
    pub replicates: u64,

    #[arg(long, default_value_t = 0.05, value_parser = parse_alpha)]
    pub alpha: f64,

    #[arg(long)]
    pub seed: u64,

    #[arg(long, value_enum, default_value_t = SelfMatchArg::Exclude)]
    pub self_match: SelfMatchArg,

    #[arg(long, value_enum, default_value_t = ReportEmit::Json)]
    pub emit: ReportEmit,

    /// Companion CSV with every replicate's Q-hat and p-value.
    #[arg(long, value_name = "PATH")]
    pub raw_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct McnemarArgs {
    /// Cases only the first classifier got right.
    #[arg(long, required_unless_present = "predictions", requires = "c")]
    pub b: Option<u64>,

    /// Cases only the second classifier got right.
    #[arg(long, required_unless_present = "predictions", requires = "b")]
    pub c: Option<u64>,

    /// CSV with a header and two columns of per-item correctness (0/1 or
    /// true/false), first classifier then second.
    #[arg(long, value_name = "PATH", conflicts_with_all = ["b", "c"])]
    pub predictions: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = ReportEmit::Json)]
    pub emit: ReportEmit,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub generator: GeneratorArgs,

    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub size: u64,

    #[arg(long)]
    pub seed: u64,

    /// Corpus name and id prefix.
    #[arg(long, default_value = "pop")]
    pub name: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DistanceArg {
    Cosine,
    Chord,
}

impl From<DistanceArg> for DistanceKind {
    fn from(d: DistanceArg) -> Self {
        match d {
            DistanceArg::Cosine => DistanceKind::Cosine,
            DistanceArg::Chord => DistanceKind::Chord,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Jsonl,
    Csv,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Jsonl => Format::Jsonl,
            FormatArg::Csv => Format::Csv,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SelfMatchArg {
    Exclude,
    Include,
}

impl From<SelfMatchArg> for SelfMatch {
    fn from(s: SelfMatchArg) -> Self {
        match s {
            SelfMatchArg::Exclude => SelfMatch::Exclude,
            SelfMatchArg::Include => SelfMatch::Include,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "UPPER")]
pub enum StrategyArg {
    #[value(alias = "rand")]
    Rand,
    #[value(alias = "ldm")]
    Ldm,
    #[value(alias = "deep")]
    Deep,
    #[value(alias = "dldm")]
    Dldm,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Rand => Strategy::Rand,
            StrategyArg::Ldm => Strategy::Ldm,
            StrategyArg::Deep => Strategy::Deep,
            StrategyArg::Dldm => Strategy::Dldm,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    UniformSphere,
    Concentrated,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::UniformSphere => Family::UniformSphere,
            FamilyArg::Concentrated => Family::Concentrated,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportEmit {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CompareEmit {
    /// Table row followed by the JSON report.
    Both,
    Table,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SelectEmit {
    /// The selection plan as JSON.
    Plan,
    /// Selected records as JSONL (id, label, text).
    Records,
}

fn parse_pair(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected M,N, got {s:?}"))?;
    let parse = |t: &str| match t.trim().parse::<usize>() {
        Ok(v) if v > 0 => Ok(v),
        _ => Err(format!("expected a positive integer, got {t:?}")),
    };
    Ok((parse(a)?, parse(b)?))
}

fn parse_alpha(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(a) if a > 0.0 && a < 1.0 => Ok(a),
        _ => Err(format!("alpha must be a number in (0, 1), got {s:?}")),
    }
}
