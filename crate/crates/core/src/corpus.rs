//! Corpus data model, wire formats and unit normalization.
//!
//! Two on-disk formats are understood:
//!
//! * JSONL: one object per line with `id` (string) and `vector` (array of
//!   numbers), optionally `label` and `text`. A line holding an object with a
//!   `_meta` key and no `id` is a metadata record (embedding tools use it to
//!   describe the model and pair separator); it is kept on the corpus and
//!   written back first on save.
//! * CSV: header `id,label,v0,...,v{k-1}`. An empty label cell means no label.
//!
//! Every vector is scaled to unit Euclidean norm when a [`Corpus`] is built.

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::sum::ExactSum;

/// Key marking a JSONL metadata line.
pub const META_KEY: &str = "_meta";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Jsonl,
    Csv,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" | "json" => Ok(Format::Jsonl),
            "csv" => Ok(Format::Csv),
            other => Err(Error::invalid(format!("unknown format {other:?}"))),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Jsonl => "jsonl",
            Format::Csv => "csv",
        })
    }
}

/// One embedded text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingRecord {
    pub id: String,
    pub vector: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
}

impl EmbeddingRecord {
    pub fn new(id: impl Into<String>, vector: Vec<f64>) -> Self {
        Self {
            id: id.into(),
            vector,
            label: None,
            text: None,
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn with_text(mut self, text: impl Into<String>) -> Self {
        self.text = Some(text.into());
        self
    }
}

/// Why a vector could not be normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormError {
    Empty,
    Zero,
    NonFinite,
}

impl fmt::Display for NormError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NormError::Empty => "empty vector",
            NormError::Zero => "zero-norm vector",
            NormError::NonFinite => "non-finite vector",
        })
    }
}

impl std::error::Error for NormError {}

/// 2^e for exponents in the normal range.
fn pow2(e: i32) -> f64 {
    let e = e.clamp(-1022, 1023);
    f64::from_bits(((e + 1023) as u64) << 52)
}

/// Binary exponent of a positive normal number (floor(log2 x)).
fn exponent(x: f64) -> i32 {
    ((x.to_bits() >> 52) & 0x7ff) as i32 - 1023
}

/// Euclidean norm with a correctly rounded sum of squares.
pub fn norm(vector: &[f64]) -> f64 {
    vector.iter().map(|v| v * v).collect::<ExactSum>().value().sqrt()
}

/// Scales `vector` to unit Euclidean norm.
///
/// Inputs are first rescaled by powers of two (exact), so `v` and `2^j * v`
/// normalize to the same bits. A vector whose norm is already within a few
/// ulps of 1 is returned unchanged, which makes the operation idempotent.
pub fn normalize(vector: &[f64]) -> Result<Vec<f64>, NormError> {
    if vector.is_empty() {
        return Err(NormError::Empty);
    }
    if vector.iter().any(|v| !v.is_finite()) {
        return Err(NormError::NonFinite);
    }
    let max_abs = vector.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max_abs == 0.0 {
        return Err(NormError::Zero);
    }

    let mut scaled: Vec<f64> = vector.to_vec();
    if max_abs < f64::MIN_POSITIVE {
        let lift = pow2(600);
        scaled.iter_mut().for_each(|v| *v *= lift);
    }
    let max_abs = scaled.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let s = pow2(-exponent(max_abs));
    scaled.iter_mut().for_each(|v| *v *= s);

    // Now max |v| is in [1, 2); bring the norm into [sqrt(1/2), sqrt(2)).
    let n = norm(&scaled);
    let mut e = exponent(n);
    if n / pow2(e) >= std::f64::consts::SQRT_2 {
        e += 1;
    }
    if e != 0 {
        let s = pow2(-e);
        scaled.iter_mut().for_each(|v| *v *= s);
    }
    let n = n * pow2(-e);

    if (n - 1.0).abs() <= 4.0 * f64::EPSILON {
        return Ok(scaled);
    }
    scaled.iter_mut().for_each(|v| *v /= n);
    Ok(scaled)
}

/// An ordered, validated collection of unit-norm embeddings sharing one dimension.
///
/// A corpus is never empty and is immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    name: String,
    dim: usize,
    records: Vec<EmbeddingRecord>,
    metadata: Option<Map<String, Value>>,
}

impl Corpus {
    /// Validates and normalizes `records`, preserving their order.
    pub fn new(name: impl Into<String>, records: Vec<EmbeddingRecord>) -> Result<Self> {
        let name = name.into();
        let Some(first) = records.first() else {
            return Err(Error::EmptyCorpus { name: Some(name) });
        };
        let dim = first.vector.len();
        if dim == 0 {
            return Err(Error::parse(format!("id {}", first.id), "empty vector"));
        }

        let mut seen = HashSet::with_capacity(records.len());
        let mut out = Vec::with_capacity(records.len());
        for (index, mut rec) in records.into_iter().enumerate() {
            if rec.id.is_empty() {
                return Err(Error::EmptyId { index });
            }
            if rec.vector.len() != dim {
                return Err(Error::DimensionMismatch {
                    id: rec.id,
                    expected: dim,
                    found: rec.vector.len(),
                });
            }
            if !seen.insert(rec.id.clone()) {
                return Err(Error::DuplicateId { id: rec.id });
            }
            rec.vector = match normalize(&rec.vector) {
                Ok(v) => v,
                Err(NormError::NonFinite) => return Err(Error::NonFinite { id: rec.id }),
                Err(NormError::Zero) => return Err(Error::ZeroNorm { id: rec.id }),
                Err(NormError::Empty) => unreachable!("dimension checked above"),
            };
            out.push(rec);
        }

        Ok(Self {
            name,
            dim,
            records: out,
            metadata: None,
        })
    }

    pub fn with_metadata(mut self, metadata: Map<String, Value>) -> Self {
        self.metadata = Some(metadata);
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    /// Always false; kept for API symmetry with collections.
    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[EmbeddingRecord] {
        &self.records
    }

    pub fn metadata(&self) -> Option<&Map<String, Value>> {
        self.metadata.as_ref()
    }

    pub fn vectors(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.records.iter().map(|r| r.vector.as_slice())
    }

    pub fn ids(&self) -> impl ExactSizeIterator<Item = &str> {
        self.records.iter().map(|r| r.id.as_str())
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.records.iter().position(|r| r.id == id)
    }

    /// First record without a label, if any.
    pub fn first_unlabeled(&self) -> Option<&EmbeddingRecord> {
        self.records.iter().find(|r| r.label.is_none())
    }

    /// Sub-corpus made of the records at `indices`, in the given order.
    pub fn subset(&self, name: impl Into<String>, indices: &[usize]) -> Result<Corpus> {
        let name = name.into();
        if indices.is_empty() {
            return Err(Error::EmptyCorpus { name: Some(name) });
        }
        let mut seen = HashSet::with_capacity(indices.len());
        let mut records = Vec::with_capacity(indices.len());
        for &i in indices {
            let rec = self
                .records
                .get(i)
                .ok_or_else(|| Error::invalid(format!("index {i} out of range for corpus of {}", self.len())))?;
            if !seen.insert(i) {
                return Err(Error::DuplicateId { id: rec.id.clone() });
            }
            records.push(rec.clone());
        }
        Ok(Corpus {
            name,
            dim: self.dim,
            records,
            metadata: self.metadata.clone(),
        })
    }

    /// Writes the corpus in `format`. CSV drops `text` and metadata.
    pub fn write<W: Write>(&self, writer: W, format: Format) -> Result<()> {
        match format {
            Format::Jsonl => self.write_jsonl(writer),
            Format::Csv => self.write_csv(writer),
        }
    }

    fn write_jsonl<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = BufWriter::new(writer);
        let io = |e| Error::io("<output>", e);
        if let Some(meta) = &self.metadata {
            let mut line = Map::new();
            line.insert(META_KEY.to_string(), Value::Object(meta.clone()));
            serde_json::to_writer(&mut w, &line)?;
            w.write_all(b"\n").map_err(io)?;
        }
        for rec in &self.records {
            serde_json::to_writer(&mut w, rec)?;
            w.write_all(b"\n").map_err(io)?;
        }
        w.flush().map_err(io)
    }

    fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["id".to_string(), "label".to_string()];
        header.extend((0..self.dim).map(|i| format!("v{i}")));
        w.write_record(&header)?;
        for rec in &self.records {
            let mut row = vec![rec.id.clone(), rec.label.clone().unwrap_or_default()];
            row.extend(rec.vector.iter().map(|v| format!("{v:?}")));
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io("<output>", e))
    }

    pub fn save(&self, path: impl AsRef<Path>, format: Format) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write(file, format)
    }
}

/// Non-fatal observations made while loading.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadWarning {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for LoadWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

/// Loads a corpus, naming it after the file stem.
pub fn load_corpus(path: impl AsRef<Path>, format: Format) -> Result<Corpus> {
    load_corpus_with_warnings(path, format).map(|(c, _)| c)
}

pub fn load_corpus_with_warnings(path: impl AsRef<Path>, format: Format) -> Result<(Corpus, Vec<LoadWarning>)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "corpus".to_string());
    match format {
        Format::Jsonl => read_jsonl(BufReader::new(file), name),
        Format::Csv => read_csv(file, name),
    }
}

pub fn read_jsonl<R: BufRead>(reader: R, name: impl Into<String>) -> Result<(Corpus, Vec<LoadWarning>)> {
    let name = name.into();
    let mut records = Vec::new();
    let mut metadata = None;
    let mut warnings = Vec::new();

    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(&name, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let ctx = || format!("{name} line {lineno}");
        let value: Value = serde_json::from_str(trimmed).map_err(|e| Error::parse(ctx(), e.to_string()))?;
        let Value::Object(mut obj) = value else {
            return Err(Error::parse(ctx(), "expected a JSON object"));
        };

        if !obj.contains_key("id") && obj.contains_key(META_KEY) {
            if !records.is_empty() {
                warnings.push(LoadWarning {
                    line: lineno,
                    message: "metadata record after data records".into(),
                });
            }
            match obj.remove(META_KEY) {
                Some(Value::Object(m)) => metadata = Some(m),
                _ => return Err(Error::parse(ctx(), "`_meta` must be an object")),
            }
            continue;
        }

        let id = match obj.remove("id") {
            Some(Value::String(s)) => s,
            Some(_) => return Err(Error::parse(ctx(), "`id` must be a string")),
            None => return Err(Error::parse(ctx(), "missing key `id`")),
        };
        let vector = match obj.remove("vector") {
            Some(Value::Array(items)) => items
                .iter()
                .map(|v| v.as_f64())
                .collect::<Option<Vec<f64>>>()
                .ok_or_else(|| Error::parse(format!("id {id}"), "`vector` must hold numbers"))?,
            Some(_) => return Err(Error::parse(format!("id {id}"), "`vector` must be an array")),
            None => return Err(Error::parse(format!("id {id}"), "missing key `vector`")),
        };
        let label = optional_string(&mut obj, "label", &id)?;
        let text = optional_string(&mut obj, "text", &id)?;
        for key in obj.keys() {
            warnings.push(LoadWarning {
                line: lineno,
                message: format!("ignored unknown key `{key}` on id {id}"),
            });
        }
        records.push(EmbeddingRecord {
            id,
            vector,
            label,
            text,
        });
    }

    let mut corpus = Corpus::new(name, records)?;
    if let Some(m) = metadata {
        corpus = corpus.with_metadata(m);
    }
    Ok((corpus, warnings))
}

fn optional_string(obj: &mut Map<String, Value>, key: &str, id: &str) -> Result<Option<String>> {
    match obj.remove(key) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) => Ok(Some(s)),
        Some(_) => Err(Error::parse(format!("id {id}"), format!("`{key}` must be a string"))),
    }
}

pub fn read_csv<R: Read>(reader: R, name: impl Into<String>) -> Result<(Corpus, Vec<LoadWarning>)> {
    let name = name.into();
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);

    let header = rdr.headers()?.clone();
    let cols: Vec<&str> = header.iter().map(str::trim).collect();
    if cols.len() < 3 || cols[0] != "id" || cols[1] != "label" {
        return Err(Error::parse(format!("{name} header"), "expected `id,label,v0,...`"));
    }
    for (i, c) in cols[2..].iter().enumerate() {
        if *c != format!("v{i}") {
            return Err(Error::parse(
                format!("{name} header"),
                format!("column {} should be v{i}, found {c:?}", i + 2),
            ));
        }
    }
    let dim = cols.len() - 2;

    let mut records = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map(|p| p.line() as usize).unwrap_or(0);
        let id = row.get(0).unwrap_or("").trim().to_string();
        if id.is_empty() {
            return Err(Error::EmptyId { index: records.len() });
        }
        if row.len() != dim + 2 {
            return Err(Error::DimensionMismatch {
                id,
                expected: dim,
                found: row.len().saturating_sub(2),
            });
        }
        let label = row.get(1).map(str::trim).filter(|s| !s.is_empty()).map(String::from);
        let vector = row
            .iter()
            .skip(2)
            .map(|cell| cell.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| Error::parse(format!("{name} line {line}, id {id}"), e.to_string()))?;
        records.push(EmbeddingRecord {
            id,
            vector,
            label,
            text: None,
        });
    }

    Ok((Corpus::new(name, records)?, Vec::new()))
}
