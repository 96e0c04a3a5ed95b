use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use tte_depth::corpus::load_corpus_with_warnings;
use tte_depth::ranksum::discordant_counts;
use tte_depth::simulate::StudyConfig;
use tte_depth::{
    depth_scores, generate_population, mcnemar, null_calibration, power_study, rank_sum_test, sample_corpus,
    sample_size_study, select, CalibrationConfig, Corpus, Format, GeneratorSpec, SelfMatch,
};

use crate::args::*;

/// Why a command failed; decides the exit code.
#[derive(Debug)]
pub enum Failure {
    /// Bad flag values that clap cannot check on its own (exit 1).
    Usage(String),
    /// Unreadable, malformed or inconsistent input, or an output error (exit 2).
    Data(String),
}

impl From<tte_depth::Error> for Failure {
    fn from(e: tte_depth::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

pub fn run(cli: Cli) -> Outcome {
    let g = &cli.global;
    if let Some(threads) = g.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads.into())
            .build_global()
            .map_err(|e| Failure::Usage(format!("cannot configure {threads} threads: {e}")))?;
    }
    match &cli.command {
        Command::Depth(a) => depth(g, a),
        Command::Compare(a) => compare(g, a),
        Command::Select(a) => select_cmd(g, a),
        Command::Simulate(a) => simulate(g, a),
        Command::Calibrate(a) => calibrate(g, a),
        Command::Mcnemar(a) => mcnemar_cmd(g, a),
        Command::Generate(a) => generate(g, a),
    }
}

fn input_format(g: &GlobalOpts, path: &Path) -> Format {
    match g.format {
        Some(f) => f.into(),
        None if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) => Format::Csv,
        None => Format::Jsonl,
    }
}

fn load(g: &GlobalOpts, path: &Path) -> Result<Corpus, Failure> {
    let (corpus, warnings) = load_corpus_with_warnings(path, input_format(g, path)).map_err(|e| match e {
        tte_depth::Error::Io { .. } => Failure::Data(e.to_string()),
        other => Failure::Data(format!("{}: {other}", path.display())),
    })?;
    for w in warnings {
        eprintln!("warning: {}: {w}", path.display());
    }
    Ok(corpus)
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::Data(format!("cannot write {}: {e}", path.display())))
}

/// Where the main report goes: `--out` or standard output.
fn output(g: &GlobalOpts) -> Result<Box<dyn Write>, Failure> {
    Ok(match &g.out {
        Some(path) => Box::new(create(path)?),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_err(target: &str) -> impl Fn(io::Error) -> Failure + '_ {
    move |e| Failure::Data(format!("cannot write {target}: {e}"))
}

fn finish(mut w: Box<dyn Write>, g: &GlobalOpts) -> Outcome {
    let target = g
        .out
        .as_deref()
        .map_or_else(|| "<stdout>".to_string(), |p| p.display().to_string());
    w.flush().map_err(write_err(&target))
}

fn write_json<T: Serialize + ?Sized>(w: &mut dyn Write, value: &T) -> Outcome {
    serde_json::to_writer_pretty(&mut *w, value).map_err(|e| Failure::Data(format!("cannot write report: {e}")))?;
    w.write_all(b"\n").map_err(write_err("report"))
}

fn with_raw_out(path: Option<&PathBuf>, write: impl FnOnce(&mut dyn Write) -> tte_depth::Result<()>) -> Outcome {
    if let Some(path) = path {
        let mut file = create(path)?;
        write(&mut file)?;
        file.flush().map_err(write_err(&path.display().to_string()))?;
    }
    Ok(())
}

fn depth(g: &GlobalOpts, a: &DepthArgs) -> Outcome {
    let corpus = load(g, &a.corpus)?;
    let report = depth_scores(&corpus, g.distance.into());
    let mut w = output(g)?;
    match a.emit {
        ReportEmit::Json => write_json(&mut w, &report)?,
        ReportEmit::Csv => report.write_csv(&mut w)?,
    }
    finish(w, g)
}

fn compare(g: &GlobalOpts, a: &CompareArgs) -> Outcome {
    let mut reference = load(g, &a.reference)?;
    let mut query = load(g, &a.query)?;
    if let Some((m, n)) = a.sample {
        let seed = a.seed.expect("clap requires --seed with --sample");
        reference = sample_corpus(&reference, m, seed, "compare/reference")?;
        query = sample_corpus(&query, n, seed, "compare/query")?;
    }
    let self_match: SelfMatch = a.self_match.into();
    let report = rank_sum_test(&reference, &query, g.distance.into(), self_match)?;

    let mut json = serde_json::to_value(report).map_err(tte_depth::Error::from)?;
    if let Value::Object(map) = &mut json {
        if let Some((m, n)) = a.sample {
            map.insert("sample".into(), serde_json::json!({ "m": m, "n": n, "seed": a.seed }));
        }
        if a.two_sided {
            map.insert("p_two_sided_supplementary".into(), report.p_two_sided().into());
        }
    }

    let mut w = output(g)?;
    if matches!(a.emit, CompareEmit::Both | CompareEmit::Table) {
        report.write_table_csv(&mut w)?;
    }
    if matches!(a.emit, CompareEmit::Both | CompareEmit::Json) {
        write_json(&mut w, &json)?;
    }
    finish(w, g)
}

fn select_cmd(g: &GlobalOpts, a: &SelectArgs) -> Outcome {
    let corpus = load(g, &a.corpus)?;
    let n = usize::try_from(a.n).map_err(|_| Failure::Usage(format!("--n {} is too large", a.n)))?;
    let plan = select(&corpus, a.strategy.into(), n, a.seed, g.distance.into())?;
    for warning in &plan.warnings {
        eprintln!("warning: {warning}");
    }
    let mut w = output(g)?;
    match a.emit {
        SelectEmit::Plan => write_json(&mut w, &plan)?,
        SelectEmit::Records => plan.write_records_jsonl(&corpus, &mut w)?,
    }
    finish(w, g)
}

fn simulate(g: &GlobalOpts, a: &SimulateArgs) -> Outcome {
    if a.sizes.is_empty() || a.sizes.contains(&0) {
        return Err(Failure::Usage("--sizes must list positive sample sizes".into()));
    }
    let pop_f = load(g, &a.pop_f)?;
    let pop_g = load(g, &a.pop_g)?;
    let config = StudyConfig {
        sample_sizes: a.sizes.clone(),
        replicates: a.replicates as usize,
        seed: a.seed,
        distance: g.distance.into(),
        self_match: a.self_match.into(),
        generator: None,
    };
    let result = sample_size_study(&config, &pop_f, &pop_g)?;
    with_raw_out(a.raw_out.as_ref(), |w| result.write_raw_csv(w))?;
    let mut w = output(g)?;
    match a.emit {
        ReportEmit::Json => write_json(&mut w, &result)?,
        ReportEmit::Csv => result.write_summary_csv(&mut w)?,
    }
    finish(w, g)
}

fn generator_spec(
    dim: usize,
    family: FamilyArg,
    concentration: f64,
    mean_axis: usize,
) -> Result<GeneratorSpec, Failure> {
    if mean_axis >= dim {
        return Err(Failure::Usage(format!(
            "mean axis {mean_axis} is out of range for dimension {dim}"
        )));
    }
    if concentration.is_nan() || concentration < 0.0 {
        return Err(Failure::Usage(format!(
            "concentration must be >= 0, got {concentration}"
        )));
    }
    Ok(match family {
        FamilyArg::UniformSphere => GeneratorSpec::uniform(dim),
        FamilyArg::Concentrated => GeneratorSpec::concentrated(dim, concentration, GeneratorSpec::axis(dim, mean_axis)),
    })
}

fn dim_of(gen: &GeneratorArgs) -> Result<usize, Failure> {
    usize::try_from(gen.dim).map_err(|_| Failure::Usage(format!("--dim {} is too large", gen.dim)))
}

fn calibrate(g: &GlobalOpts, a: &CalibrateArgs) -> Outcome {
    let gen = &a.generator;
    let dim = dim_of(gen)?;
    let reference = generator_spec(dim, gen.family, gen.concentration, gen.mean_axis)?;
    let power = a.query_family.is_some() || a.query_concentration.is_some() || a.query_mean_axis.is_some();
    let config = CalibrationConfig {
        m: a.m as usize,
        n: a.n as usize,
        replicates: a.replicates as usize,
        alpha: a.alpha,
        seed: a.seed,
        distance: g.distance.into(),
        self_match: a.self_match.into(),
    };
    let report = if power {
        let query = generator_spec(
            dim,
            a.query_family.unwrap_or(gen.family),
            a.query_concentration.unwrap_or(gen.concentration),
            a.query_mean_axis.unwrap_or(gen.mean_axis),
        )?;
        power_study(&reference, &query, &config)?
    } else {
        null_calibration(&reference, &config)?
    };
    with_raw_out(a.raw_out.as_ref(), |w| report.write_raw_csv(w))?;
    let mut w = output(g)?;
    match a.emit {
        ReportEmit::Json => write_json(&mut w, &report)?,
        ReportEmit::Csv => report.write_summary_csv(&mut w)?,
    }
    finish(w, g)
}

fn parse_flag(cell: &str) -> Option<bool> {
    match cell.trim().to_ascii_lowercase().as_str() {
        "1" | "true" => Some(true),
        "0" | "false" => Some(false),
        _ => None,
    }
}

/// Per-item correctness columns of a predictions CSV.
fn read_predictions(path: &Path) -> Result<(Vec<bool>, Vec<bool>), Failure> {
    let shown = path.display();
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Failure::Data(format!("cannot read {shown}: {e}")))?;
    let (mut first, mut second) = (Vec::new(), Vec::new());
    for (i, row) in rdr.records().enumerate() {
        let row = row.map_err(|e| Failure::Data(format!("{shown}: {e}")))?;
        let line = i + 2;
        if row.len() != 2 {
            return Err(Failure::Data(format!(
                "{shown}: line {line}: expected 2 columns, found {}",
                row.len()
            )));
        }
        let flag = |cell: &str| {
            parse_flag(cell).ok_or_else(|| {
                Failure::Data(format!(
                    "{shown}: line {line}: expected 0/1 or true/false, got {cell:?}"
                ))
            })
        };
        first.push(flag(&row[0])?);
        second.push(flag(&row[1])?);
    }
    Ok((first, second))
}

#[derive(Serialize)]
struct McnemarRow {
    b: u64,
    c: u64,
    chi2: f64,
    p: f64,
}

fn mcnemar_cmd(g: &GlobalOpts, a: &McnemarArgs) -> Outcome {
    let (b, c) = match (&a.predictions, a.b, a.c) {
        (Some(path), _, _) => {
            let (first, second) = read_predictions(path)?;
            discordant_counts(&first, &second)?
        }
        (None, Some(b), Some(c)) => (b, c),
        _ => return Err(Failure::Usage("give --b and --c, or --predictions".into())),
    };
    let t = mcnemar(b, c);
    let mut w = output(g)?;
    match a.emit {
        ReportEmit::Json => write_json(&mut w, &t)?,
        ReportEmit::Csv => {
            let mut cw = csv::Writer::from_writer(&mut w);
            let row = McnemarRow {
                b: t.b,
                c: t.c,
                chi2: t.chi2,
                p: t.p,
            };
            cw.serialize(row).map_err(tte_depth::Error::from)?;
            cw.flush().map_err(write_err("report"))?;
        }
    }
    finish(w, g)
}

fn generate(g: &GlobalOpts, a: &GenerateArgs) -> Outcome {
    let gen = &a.generator;
    let spec = generator_spec(dim_of(gen)?, gen.family, gen.concentration, gen.mean_axis)?;
    let size = usize::try_from(a.size).map_err(|_| Failure::Usage(format!("--size {} is too large", a.size)))?;
    let corpus = generate_population(&spec, size, a.seed, &a.name)?;
    let format = g.format.map_or(Format::Jsonl, Format::from);
    let mut w = output(g)?;
    corpus.write(&mut w, format)?;
    finish(w, g)
}
