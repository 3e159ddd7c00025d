//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 for configuration and usage errors, 2 for data errors.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fishdbc_core::oracle::{self, DistanceMatrix, OracleError};
use fishdbc_core::{metrics, ClusterResult, Config, Distance, Fishdbc, FishdbcError, Weight};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::dataio::{self, AnyDistance, DataError, DatasetSpec, DistanceName, Format, Payload, RunSummary};
use crate::formats;
use crate::generate::{self, BlobParams, SynthParams};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Data(_) | CliError::Failed(_) => 2,
        }
    }
}

impl From<FishdbcError> for CliError {
    fn from(e: FishdbcError) -> Self {
        match e {
            FishdbcError::Config(c) => CliError::Config(c.to_string()),
            other => CliError::Failed(other.to_string()),
        }
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        CliError::Failed(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "fishdbc", version, about = "Incremental density-based clustering for arbitrary distances")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Add every item, cluster once and write labels, tree and summary.
    Cluster(ClusterArgs),
    /// Recluster after every chunk of additions, writing numbered snapshots.
    Stream(StreamArgs),
    /// Compare predicted labels against reference labels.
    Eval(EvalArgs),
    /// Exact clustering from the full (or masked) distance matrix.
    Oracle(OracleArgs),
    /// Write a synthetic labeled dataset.
    Generate(GenerateArgs),
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::DenseCsv)]
    pub format: Format,
    #[arg(long, value_enum, default_value_t = DistanceName::Euclidean)]
    pub distance: DistanceName,
}

impl DataArgs {
    fn spec(&self) -> Result<DatasetSpec, CliError> {
        dataio::check_pairing(self.format, self.distance).map_err(|e| CliError::Config(e.to_string()))?;
        Ok(DatasetSpec {
            format: self.format,
            path: self.input.clone(),
            labels: None,
        })
    }
}

#[derive(Debug, Clone, Args)]
pub struct EngineArgs {
    #[arg(long, default_value_t = 10)]
    pub minpts: usize,
    /// Defaults to the engine's default beam width.
    #[arg(long)]
    pub ef: Option<usize>,
    /// Defaults to minpts.
    #[arg(long)]
    pub min_cluster_size: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl EngineArgs {
    pub fn config(&self) -> Result<Config, CliError> {
        let mut c = Config::new(self.minpts).with_seed(self.seed);
        if let Some(ef) = self.ef {
            c = c.with_ef(ef);
        }
        if let Some(a) = self.alpha {
            c = c.with_alpha(a);
        }
        if let Some(m) = self.min_cluster_size {
            c = c.with_min_cluster_size(m);
        }
        c.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(c)
    }
}

#[derive(Debug, Clone, Args)]
pub struct ClusterArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub engine: EngineArgs,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write every evaluated distance as `a b value` lines.
    #[arg(long)]
    pub triple_log: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct StreamArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub engine: EngineArgs,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub chunk: usize,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub predictions: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
    /// Dataset for sampled distances and silhouette.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::DenseCsv)]
    pub format: Format,
    #[arg(long, value_enum, default_value_t = DistanceName::Euclidean)]
    pub distance: DistanceName,
    #[arg(long, default_value_t = 1000)]
    pub sample_size: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write the report to `eval.txt` under this directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Silhouette is quadratic; skip it above this many clustered items.
pub const SILHOUETTE_CAP: usize = 5_000;

#[derive(Debug, Clone, Args)]
pub struct OracleArgs {
    /// Upper-triangle distance matrix file.
    #[arg(long, conflicts_with = "input")]
    pub matrix: Option<PathBuf>,
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::DenseCsv)]
    pub format: Format,
    #[arg(long, value_enum, default_value_t = DistanceName::Euclidean)]
    pub distance: DistanceName,
    /// Keep only the pairs recorded in this triple log; all others become ∞.
    #[arg(long)]
    pub mask_from: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    pub minpts: usize,
    #[arg(long)]
    pub min_cluster_size: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Blobs,
    Synth,
    Uniform,
}

#[derive(Debug, Clone, Args)]
pub struct GenerateArgs {
    #[arg(value_enum)]
    pub kind: Kind,
    #[arg(long, default_value_t = 2000)]
    pub samples: usize,
    /// Blob centers or transaction clusters.
    #[arg(long)]
    pub centers: Option<usize>,
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    #[arg(long, default_value_t = 1.0)]
    pub std: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory receiving `data.csv` or `data.sets` plus `labels.txt`.
    #[arg(long)]
    pub out: PathBuf,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cmd: &Command) -> Result<(), CliError> {
    match cmd {
        Command::Cluster(a) => cmd_cluster(a).map(|_| ()),
        Command::Stream(a) => cmd_stream(a).map(|_| ()),
        Command::Eval(a) => {
            let report = cmd_eval(a)?;
            print!("{report}");
            Ok(())
        }
        Command::Oracle(a) => cmd_oracle(a).map(|_| ()),
        Command::Generate(a) => cmd_generate(a),
    }
}

type Engine = Fishdbc<Payload, AnyDistance>;

fn engine(data: &DataArgs, args: &EngineArgs) -> Result<(Engine, DatasetSpec), CliError> {
    let spec = data.spec()?;
    let e = Fishdbc::new(AnyDistance(data.distance), args.config()?)?;
    Ok((e, spec))
}

fn summary(e: &Engine, data: &DataArgs, build: f64, cluster: f64) -> RunSummary {
    let c = e.config();
    RunSummary {
        distance: data.distance.to_string(),
        minpts: c.minpts,
        ef: c.ef,
        min_cluster_size: c.min_cluster_size.unwrap_or(c.minpts),
        distance_calls: e.stats().distance_calls,
        build_seconds: build,
        cluster_seconds: cluster,
    }
}

fn cluster_now(e: &mut Engine) -> Result<(ClusterResult, f64), CliError> {
    let t = Instant::now();
    let r = e.cluster_default()?;
    Ok((r, t.elapsed().as_secs_f64()))
}

pub fn cmd_cluster(a: &ClusterArgs) -> Result<ClusterResult, CliError> {
    let (mut e, spec) = engine(&a.data, &a.engine)?;
    if a.triple_log.is_some() {
        e = e.record_triples();
    }
    let t = Instant::now();
    for rec in dataio::read_dataset(&spec)? {
        e.add(rec?)?;
    }
    let build = t.elapsed().as_secs_f64();
    if e.is_empty() {
        return Err(DataError::Empty.into());
    }
    let (r, cluster) = cluster_now(&mut e)?;
    let run = summary(&e, &a.data, build, cluster);
    dataio::write_result(&r, &run, &a.out)?;
    if let Some(path) = &a.triple_log {
        let f = File::create(path).map_err(|err| DataError::io(path, err))?;
        formats::write_triples(e.triple_log().unwrap_or(&[]), BufWriter::new(f)).map_err(|err| DataError::io(path, err))?;
    }
    log::info!("clustered {} of {} into {} clusters", r.clustered_count(), r.labels.len(), r.cluster_count());
    Ok(r)
}

/// Writes snapshot directories `out/00001`, `out/00002`, ... and `out/calls.csv`.
pub fn cmd_stream(a: &StreamArgs) -> Result<Vec<ClusterResult>, CliError> {
    if a.chunk == 0 {
        return Err(CliError::Config("chunk must be at least 1".into()));
    }
    let (mut e, spec) = engine(&a.data, &a.engine)?;
    fs::create_dir_all(&a.out).map_err(|err| DataError::io(&a.out, err))?;
    let calls_path = a.out.join("calls.csv");
    let mut calls = BufWriter::new(File::create(&calls_path).map_err(|err| DataError::io(&calls_path, err))?);
    let io = |err| DataError::io(&calls_path, err);
    writeln!(calls, "item,calls,mean_calls").map_err(io)?;

    let mut snapshots = Vec::new();
    let mut build = 0.0;
    let mut snapshot = |e: &mut Engine, build: f64| -> Result<(), CliError> {
        let (r, cluster) = cluster_now(e)?;
        let dir = a.out.join(format!("{:05}", snapshots.len() + 1));
        dataio::write_result(&r, &summary(e, &a.data, build, cluster), &dir)?;
        snapshots.push(r);
        Ok(())
    };
    for rec in dataio::read_dataset(&spec)? {
        let t = Instant::now();
        let id = e.add(rec?)?;
        build += t.elapsed().as_secs_f64();
        let total = e.stats().distance_calls;
        writeln!(calls, "{id},{},{:.6}", e.stats().last_calls, total as f64 / e.len() as f64).map_err(io)?;
        if e.len() % a.chunk == 0 {
            snapshot(&mut e, build)?;
        }
    }
    if e.is_empty() {
        return Err(DataError::Empty.into());
    }
    if e.len() % a.chunk != 0 {
        snapshot(&mut e, build)?;
    }
    calls.flush().map_err(io)?;
    Ok(snapshots)
}

fn read_payloads(path: &Path, format: Format) -> Result<Vec<Payload>, CliError> {
    let spec = DatasetSpec {
        format,
        path: path.to_path_buf(),
        labels: None,
    };
    Ok(dataio::read_dataset(&spec)?.collect::<Result<_, _>>()?)
}

pub fn cmd_eval(a: &EvalArgs) -> Result<String, CliError> {
    let predicted = dataio::read_labels(&a.predictions)?;
    let reference = dataio::read_labels(&a.labels)?;
    if predicted.len() != reference.len() {
        return Err(CliError::Failed(format!(
            "{} has {} labels but {} has {}",
            a.predictions.display(),
            predicted.len(),
            a.labels.display(),
            reference.len()
        )));
    }
    let s = metrics::evaluate(&reference, &predicted).map_err(|e| CliError::Failed(e.to_string()))?;
    let mut out = format!("# clustered {} of {}\n", s.clustered, s.total);
    if s.plain_undefined() {
        log::warn!("fewer than 2 items are clustered; AMI and ARI reported as 0");
        out.push_str("# ami and ari undefined, reported as 0\n");
    }
    out.push_str(&format!(
        "ami={:.6}\nari={:.6}\nami_star={:.6}\nari_star={:.6}\nclustered={}\n",
        s.ami, s.ari, s.ami_star, s.ari_star, s.clustered
    ));
    if let Some(input) = &a.input {
        dataio::check_pairing(a.format, a.distance).map_err(|e| CliError::Config(e.to_string()))?;
        let items = read_payloads(input, a.format)?;
        let d = AnyDistance(a.distance);
        let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
        let sd = metrics::sampled_pair_distances(&items, &predicted, &d, a.sample_size, &mut rng)
            .map_err(|e| CliError::Failed(e.to_string()))?;
        let opt = |v: Option<f64>| v.map_or_else(|| "undefined".to_string(), |v| format!("{v:.6}"));
        out.push_str(&format!("intra_distance={}\ninter_distance={}\n", opt(sd.intra), opt(sd.inter)));
        match metrics::silhouette(&items, &predicted, &d, SILHOUETTE_CAP) {
            Ok(v) => out.push_str(&format!("silhouette={v:.6}\n")),
            Err(e @ (metrics::MetricError::SingleCluster | metrics::MetricError::TooLarge { .. })) => {
                log::warn!("silhouette skipped: {e}");
                out.push_str("silhouette=undefined\n");
            }
            Err(e) => return Err(CliError::Failed(e.to_string())),
        }
    }
    if let Some(dir) = &a.out {
        fs::create_dir_all(dir).map_err(|e| DataError::io(dir, e))?;
        let p = dir.join("eval.txt");
        fs::write(&p, &out).map_err(|e| DataError::io(&p, e))?;
    }
    Ok(out)
}

fn full_matrix(items: &[Payload], d: &AnyDistance) -> Result<DistanceMatrix, CliError> {
    let mut m = DistanceMatrix::new(items.len());
    for i in 0..items.len() {
        for j in i + 1..items.len() {
            let v = d.eval(&items[i], &items[j]).map_err(|e| CliError::Failed(format!("distance ({i}, {j}): {e}")))?;
            let w = Weight::new(v).ok_or_else(|| CliError::Failed(format!("distance ({i}, {j}) is invalid: {v}")))?;
            m.set(i, j, w);
        }
    }
    Ok(m)
}

pub fn cmd_oracle(a: &OracleArgs) -> Result<ClusterResult, CliError> {
    let mcs = a.min_cluster_size.unwrap_or(a.minpts);
    Config::new(a.minpts)
        .with_min_cluster_size(mcs)
        .validate()
        .map_err(|e| CliError::Config(e.to_string()))?;
    let n;
    let mut m = None;
    if let Some(path) = &a.matrix {
        let f = File::open(path).map_err(|e| DataError::io(path, e))?;
        let mat = formats::read_matrix(BufReader::new(f))?;
        n = mat.len();
        m = Some(mat);
    } else if let Some(input) = &a.input {
        dataio::check_pairing(a.format, a.distance).map_err(|e| CliError::Config(e.to_string()))?;
        let items = read_payloads(input, a.format)?;
        n = items.len();
        if n > oracle::MAX_ITEMS {
            return Err(OracleError::TooLarge(n).into());
        }
        if a.mask_from.is_none() {
            m = Some(full_matrix(&items, &AnyDistance(a.distance))?);
        }
    } else {
        return Err(CliError::Config("one of --matrix or --input is required".into()));
    }
    if n == 0 {
        return Err(DataError::Empty.into());
    }
    if n > oracle::MAX_ITEMS {
        return Err(OracleError::TooLarge(n).into());
    }
    if let Some(log) = &a.mask_from {
        let f = File::open(log).map_err(|e| DataError::io(log, e))?;
        let triples = formats::read_triples(BufReader::new(f))?;
        m = Some(formats::masked_matrix(n, &triples)?);
    }
    let m = m.expect("matrix is built on every path");
    let t = Instant::now();
    let r = oracle::exact_cluster(&m, a.minpts, mcs)?;
    let run = RunSummary {
        distance: if a.matrix.is_some() { "matrix".into() } else { a.distance.to_string() },
        minpts: a.minpts,
        ef: 0,
        min_cluster_size: mcs,
        distance_calls: 0,
        build_seconds: 0.0,
        cluster_seconds: t.elapsed().as_secs_f64(),
    };
    dataio::write_result(&r, &run, &a.out)?;
    Ok(r)
}

pub fn cmd_generate(a: &GenerateArgs) -> Result<(), CliError> {
    fs::create_dir_all(&a.out).map_err(|e| DataError::io(&a.out, e))?;
    let labels_path = a.out.join("labels.txt");
    match a.kind {
        Kind::Blobs => {
            if !(a.std.is_finite() && a.std >= 0.0) {
                return Err(CliError::Config(format!("std must be finite and non-negative (got {})", a.std)));
            }
            let p = BlobParams {
                samples: a.samples,
                centers: a.centers.unwrap_or(10).max(1),
                dim: a.dim,
                std: a.std,
                ..BlobParams::default()
            };
            let b = generate::blobs(&p, a.seed);
            dataio::write_dense_csv(&b.items, &a.out.join("data.csv"))?;
            dataio::write_label_lines(&b.labels, &labels_path)?;
        }
        Kind::Synth => {
            let p = SynthParams {
                transactions: a.samples,
                clusters: a.centers.unwrap_or(5).max(1),
                dim: a.dim,
            };
            if p.dim < p.clusters {
                return Err(CliError::Config("dim must be at least the number of clusters".into()));
            }
            let s = generate::synth(&p, a.seed);
            dataio::write_set_lines(&s.items, &a.out.join("data.sets"))?;
            dataio::write_label_lines(&s.labels, &labels_path)?;
        }
        Kind::Uniform => {
            let u = generate::uniform(a.samples, a.dim, a.seed);
            dataio::write_dense_csv(&u, &a.out.join("data.csv"))?;
        }
    }
    Ok(())
}
