//! Dataset readers and result writers.
//!
//! Readers stream records in file order so that insertion order, and with it
//! every run, is reproducible. All inputs are UTF-8; CRLF line endings are
//! accepted and blank lines are skipped with a warning.

use std::fmt;
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use fishdbc_core::distance::{self, Bitmap, ItemSet, SparseVector};
use fishdbc_core::{ClusterResult, Distance, DistanceError};
use thiserror::Error;

use crate::formats;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("format {format} cannot be used with distance {distance}")]
    Mismatch { format: Format, distance: DistanceName },
    #[error("nothing to cluster: the dataset is empty")]
    Empty,
}

impl DataError {
    pub fn io(path: &Path, source: io::Error) -> DataError {
        DataError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    fn parse(line: usize, message: impl Into<String>) -> DataError {
        DataError::Parse {
            line,
            message: message.into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    /// Comma-separated reals, one vector per line.
    DenseCsv,
    /// UCI docword layout: `D`, `W`, `NNZ` header lines then `doc word count` triples.
    BagOfWords,
    /// One string per line.
    TextLines,
    /// Comma-separated 0/1 values, one bitmap per line.
    BitmapCsv,
    /// Whitespace-separated non-negative integers, one set per line.
    SetLines,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DistanceName {
    Euclidean,
    Cosine,
    Jaccard,
    JaroWinkler,
    Simpson,
    Hamming,
}

fn value_name<T: ValueEnum>(v: &T) -> String {
    v.to_possible_value().map(|p| p.get_name().to_string()).unwrap_or_default()
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&value_name(self))
    }
}

impl fmt::Display for DistanceName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&value_name(self))
    }
}

impl DistanceName {
    pub fn accepts(self, format: Format) -> bool {
        use DistanceName::*;
        use Format::*;
        matches!(
            (self, format),
            (Euclidean, DenseCsv)
                | (Cosine, DenseCsv)
                | (Cosine, BagOfWords)
                | (Jaccard, SetLines)
                | (JaroWinkler, TextLines)
                | (Hamming, TextLines)
                | (Simpson, BitmapCsv)
        )
    }
}

/// Checks that `format` produces payloads `distance` understands.
pub fn check_pairing(format: Format, distance: DistanceName) -> Result<(), DataError> {
    if distance.accepts(format) {
        Ok(())
    } else {
        Err(DataError::Mismatch { format, distance })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Payload {
    Dense(Vec<f64>),
    Sparse(SparseVector),
    Text(String),
    Bitmap(Bitmap),
    Set(ItemSet),
}

/// A built-in distance selected at run time.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AnyDistance(pub DistanceName);

impl Distance<Payload> for AnyDistance {
    fn eval(&self, a: &Payload, b: &Payload) -> Result<f64, DistanceError> {
        use DistanceName::*;
        use Payload::*;
        match (self.0, a, b) {
            (Euclidean, Dense(x), Dense(y)) => distance::euclidean(x, y),
            (Cosine, Dense(x), Dense(y)) => distance::cosine_dense(x, y),
            (Cosine, Sparse(x), Sparse(y)) => distance::cosine(x, y),
            (Jaccard, Set(x), Set(y)) => Ok(distance::jaccard(x, y)),
            (JaroWinkler, Text(x), Text(y)) => Ok(distance::jaro_winkler(x, y)),
            (Hamming, Text(x), Text(y)) => distance::hamming_str(x, y),
            (Simpson, Bitmap(x), Bitmap(y)) => distance::simpson(x, y),
            _ => Err(DistanceError::UnsupportedPayload),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DatasetSpec {
    pub format: Format,
    pub path: PathBuf,
    pub labels: Option<PathBuf>,
}

/// Lines of a reader with CRLF stripped, numbered from 1, blanks skipped.
struct Lines<R> {
    inner: io::Lines<R>,
    line: usize,
    path: PathBuf,
}

impl<R: BufRead> Iterator for Lines<R> {
    type Item = Result<(usize, String), DataError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let raw = match self.inner.next()? {
                Ok(l) => l,
                Err(e) => return Some(Err(DataError::io(&self.path, e))),
            };
            self.line += 1;
            let text = raw.strip_suffix('\r').unwrap_or(&raw);
            if text.trim().is_empty() {
                log::warn!("{}: skipping blank line {}", self.path.display(), self.line);
                continue;
            }
            return Some(Ok((self.line, text.to_string())));
        }
    }
}

/// Streaming reader yielding one payload per record.
pub struct Records<R> {
    format: Format,
    lines: Lines<R>,
    bow: Option<BagOfWords>,
}

impl<R> fmt::Debug for Records<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Records").field("format", &self.format).field("line", &self.lines.line).finish()
    }
}

struct BagOfWords {
    docs: usize,
    next_doc: usize,
    pending: Option<(usize, u32, f64)>,
    done: bool,
}

fn parse_dense(line: usize, text: &str) -> Result<Vec<f64>, DataError> {
    text.split(',')
        .map(|f| {
            let f = f.trim();
            f.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| DataError::parse(line, format!("invalid number {f:?}")))
        })
        .collect()
}

fn parse_bitmap(line: usize, text: &str) -> Result<Bitmap, DataError> {
    let bits: Result<Vec<bool>, DataError> = text
        .split(',')
        .map(|f| match f.trim() {
            "0" => Ok(false),
            "1" => Ok(true),
            other => Err(DataError::parse(line, format!("expected 0 or 1, found {other:?}"))),
        })
        .collect();
    Ok(Bitmap::from_bits(bits?))
}

fn parse_set(line: usize, text: &str) -> Result<ItemSet, DataError> {
    text.split_whitespace()
        .map(|f| f.parse::<u32>().map_err(|_| DataError::parse(line, format!("invalid set element {f:?}"))))
        .collect()
}

impl<R: BufRead> Records<R> {
    pub fn new(format: Format, reader: R, path: &Path) -> Result<Records<R>, DataError> {
        let mut lines = Lines {
            inner: reader.lines(),
            line: 0,
            path: path.to_path_buf(),
        };
        let bow = if format == Format::BagOfWords {
            let mut header = [0usize; 3];
            for h in header.iter_mut() {
                let (line, text) = lines.next().ok_or_else(|| DataError::parse(lines.line + 1, "missing bag-of-words header"))??;
                *h = text
                    .trim()
                    .parse()
                    .map_err(|_| DataError::parse(line, format!("invalid header value {:?}", text.trim())))?;
            }
            Some(BagOfWords {
                docs: header[0],
                next_doc: 1,
                pending: None,
                done: false,
            })
        } else {
            None
        };
        Ok(Records { format, lines, bow })
    }

    fn next_triple(&mut self) -> Option<Result<(usize, u32, f64), DataError>> {
        let (line, text) = match self.lines.next()? {
            Ok(x) => x,
            Err(e) => return Some(Err(e)),
        };
        let f: Vec<&str> = text.split_whitespace().collect();
        let parsed = (f.len() == 3)
            .then(|| Some((f[0].parse::<usize>().ok()?, f[1].parse::<u32>().ok()?, f[2].parse::<f64>().ok()?)))
            .flatten();
        Some(match parsed {
            Some((d, w, c)) if d >= 1 && w >= 1 && c.is_finite() => Ok((d, w, c)),
            _ => Err(DataError::parse(line, format!("expected `doc word count`, found {text:?}"))),
        })
    }

    fn next_document(&mut self) -> Option<Result<Payload, DataError>> {
        let (docs, doc) = {
            let b = self.bow.as_ref()?;
            (b.docs, b.next_doc)
        };
        if doc > docs {
            return None;
        }
        let mut entries = Vec::new();
        loop {
            let b = self.bow.as_mut()?;
            let triple = match b.pending.take() {
                Some(t) => Some(t),
                None if b.done => None,
                None => match self.next_triple() {
                    Some(Ok(t)) => Some(t),
                    Some(Err(e)) => return Some(Err(e)),
                    None => {
                        self.bow.as_mut()?.done = true;
                        None
                    }
                },
            };
            let b = self.bow.as_mut()?;
            match triple {
                Some((d, w, c)) if d == doc => entries.push((w - 1, c)),
                Some((d, _, _)) if d < doc => {
                    return Some(Err(DataError::parse(self.lines.line, format!("document {d} appears out of order"))));
                }
                Some(t) => {
                    b.pending = Some(t);
                    break;
                }
                None => break,
            }
        }
        self.bow.as_mut()?.next_doc += 1;
        Some(Ok(Payload::Sparse(SparseVector::from_pairs(entries))))
    }
}

impl<R: BufRead> Iterator for Records<R> {
    type Item = Result<Payload, DataError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.format == Format::BagOfWords {
            return self.next_document();
        }
        let (line, text) = match self.lines.next()? {
            Ok(x) => x,
            Err(e) => return Some(Err(e)),
        };
        Some(match self.format {
            Format::DenseCsv => parse_dense(line, &text).map(Payload::Dense),
            Format::TextLines => Ok(Payload::Text(text)),
            Format::BitmapCsv => parse_bitmap(line, &text).map(Payload::Bitmap),
            Format::SetLines => parse_set(line, &text).map(Payload::Set),
            Format::BagOfWords => unreachable!(),
        })
    }
}

/// Opens `spec.path` for streaming.
pub fn read_dataset(spec: &DatasetSpec) -> Result<Records<BufReader<File>>, DataError> {
    let f = File::open(&spec.path).map_err(|e| DataError::io(&spec.path, e))?;
    Records::new(spec.format, BufReader::new(f), &spec.path)
}

/// Parses an in-memory dataset.
pub fn parse_dataset(format: Format, text: &str) -> Result<Vec<Payload>, DataError> {
    Records::new(format, text.as_bytes(), Path::new("<memory>"))?.collect()
}

/// One integer per line; for `index,label` rows the last field is used.
pub fn read_labels(path: &Path) -> Result<Vec<i64>, DataError> {
    let f = File::open(path).map_err(|e| DataError::io(path, e))?;
    let lines = Lines {
        inner: BufReader::new(f).lines(),
        line: 0,
        path: path.to_path_buf(),
    };
    lines
        .map(|l| {
            let (line, text) = l?;
            let field = text.rsplit(',').next().unwrap_or("").trim();
            field.parse().map_err(|_| DataError::parse(line, format!("invalid label {field:?}")))
        })
        .collect()
}

/// Figures reported next to a clustering.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunSummary {
    pub distance: String,
    pub minpts: usize,
    pub ef: usize,
    pub min_cluster_size: usize,
    pub distance_calls: u64,
    pub build_seconds: f64,
    pub cluster_seconds: f64,
}

fn create(path: &Path) -> Result<BufWriter<File>, DataError> {
    File::create(path).map(BufWriter::new).map_err(|e| DataError::io(path, e))
}

pub fn write_labels(labels: &[i64], path: &Path) -> Result<(), DataError> {
    let mut w = create(path)?;
    for (i, l) in labels.iter().enumerate() {
        writeln!(w, "{i},{l}").map_err(|e| DataError::io(path, e))?;
    }
    w.flush().map_err(|e| DataError::io(path, e))
}

pub fn summary_text(result: &ClusterResult, run: &RunSummary) -> String {
    let n = result.labels.len();
    let clustered = result.clustered_count();
    let mut s = format!("# clustered {clustered} of {n}\n");
    let rows: [(&str, String); 10] = [
        ("n", n.to_string()),
        ("clustered", clustered.to_string()),
        ("clusters", result.cluster_count().to_string()),
        ("distance", run.distance.clone()),
        ("minpts", run.minpts.to_string()),
        ("ef", run.ef.to_string()),
        ("min_cluster_size", run.min_cluster_size.to_string()),
        ("distance_calls", run.distance_calls.to_string()),
        ("build_seconds", format!("{:.6}", run.build_seconds)),
        ("cluster_seconds", format!("{:.6}", run.cluster_seconds)),
    ];
    for (k, v) in rows {
        s.push_str(&format!("{k}={v}\n"));
    }
    s
}

/// Writes `labels.csv`, `tree.json` and `summary.txt` under `out_dir`.
pub fn write_result(result: &ClusterResult, run: &RunSummary, out_dir: &Path) -> Result<(), DataError> {
    if result.labels.is_empty() {
        return Err(DataError::Empty);
    }
    fs::create_dir_all(out_dir).map_err(|e| DataError::io(out_dir, e))?;
    write_labels(&result.labels, &out_dir.join("labels.csv"))?;
    let tree_path = out_dir.join("tree.json");
    let mut w = create(&tree_path)?;
    formats::write_tree(&result.condensed, &mut w).map_err(|e| DataError::io(&tree_path, e))?;
    w.flush().map_err(|e| DataError::io(&tree_path, e))?;
    let summary_path = out_dir.join("summary.txt");
    fs::write(&summary_path, summary_text(result, run)).map_err(|e| DataError::io(&summary_path, e))
}

pub fn write_dense_csv(rows: &[Vec<f64>], path: &Path) -> Result<(), DataError> {
    let mut w = create(path)?;
    for r in rows {
        let line: Vec<String> = r.iter().map(|v| format!("{v}")).collect();
        writeln!(w, "{}", line.join(",")).map_err(|e| DataError::io(path, e))?;
    }
    w.flush().map_err(|e| DataError::io(path, e))
}

pub fn write_set_lines(sets: &[ItemSet], path: &Path) -> Result<(), DataError> {
    let mut w = create(path)?;
    for s in sets {
        let line: Vec<String> = s.as_slice().iter().map(u32::to_string).collect();
        writeln!(w, "{}", line.join(" ")).map_err(|e| DataError::io(path, e))?;
    }
    w.flush().map_err(|e| DataError::io(path, e))
}

/// One label per line.
pub fn write_label_lines(labels: &[i64], path: &Path) -> Result<(), DataError> {
    let mut w = create(path)?;
    for l in labels {
        writeln!(w, "{l}").map_err(|e| DataError::io(path, e))?;
    }
    w.flush().map_err(|e| DataError::io(path, e))
}
