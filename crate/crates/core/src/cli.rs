//! Command-line front end: `analyze`, `fit`, `synth` and `verify`.
//!
//! Exit codes: 0 success, 1 usage, 2 ingest failure, 3 fit failure,
//! 4 verification mismatch.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::config::{parse_range, ConfigError, KeyValues};
use crate::corpus::Corpus;
use crate::fitkit::{analyze_performance, write_residuals_csv, AnalysisOptions, CountSeries, FitError};
use crate::ingest::{self, IngestReport, TableFormat};
use crate::metrics::{MetricKind, MetricSide};
use crate::report::{build_report, canonical_json, performance_series, AnalysisReport};
use crate::synth::{self, GroundTruth, SynthConfig, SynthError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INGEST: i32 = 2;
pub const EXIT_FIT: i32 = 3;
pub const EXIT_VERIFY: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "pubdyn", version, about = "Publishing-dynamics analytics for post/comment logs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Ingest posts and comments, compute all distributions, fit and report.
    Analyze(AnalyzeArgs),
    /// Fit the performance model to a `support,count` CSV (counts may be fractional).
    Fit(FitArgs),
    /// Generate a synthetic corpus with ground truth.
    Synth(SynthArgs),
    /// Check an analysis directory against a generator's ground truth.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Tsv,
    Csv,
}

impl Format {
    fn table(self) -> TableFormat {
        match self {
            Format::Tsv => TableFormat::tsv(),
            Format::Csv => TableFormat::csv(),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub posts: Option<PathBuf>,
    #[arg(long)]
    pub comments: Option<PathBuf>,
    /// Flat `key = value` file; command-line flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = "report")]
    pub out: PathBuf,
    #[arg(long, conflicts_with = "comments_only")]
    pub posts_only: bool,
    #[arg(long)]
    pub comments_only: bool,
    /// Support region left out of the fit, as LO:HI.
    #[arg(long, value_parser = parse_range)]
    pub exclude_region: Option<(i64, i64)>,
    /// Support interval to fit, as LO:HI.
    #[arg(long, value_parser = parse_range)]
    pub fit_interval: Option<(i64, i64)>,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Compute distributions only.
    #[arg(long)]
    pub skip_fit: bool,
    /// Also write the commentator → post author edge list.
    #[arg(long)]
    pub export_graph: bool,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    /// `support,count` histogram, header optional.
    pub histogram: PathBuf,
    #[arg(long, value_parser = parse_range)]
    pub exclude_region: Option<(i64, i64)>,
    #[arg(long, value_parser = parse_range)]
    pub fit_interval: Option<(i64, i64)>,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = "synth")]
    pub out: PathBuf,
    /// Overrides the configured seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value = "tsv")]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    /// Directory written by `analyze`.
    pub report: PathBuf,
    /// `ground_truth.json` written by `synth`.
    pub truth: PathBuf,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Ingest(String),
    #[error("fit failed: {0}")]
    Fit(#[from] FitError),
    #[error("{0} verification check(s) failed")]
    Verify(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Ingest(_) => EXIT_INGEST,
            CliError::Fit(_) => EXIT_FIT,
            CliError::Verify(_) => EXIT_VERIFY,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Usage(e.to_string())
    }
}

fn ingest_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Ingest(format!("{}: {e}", path.display()))
}

fn io_err(path: &Path, e: io::Error) -> CliError {
    CliError::Ingest(format!("cannot write {}: {e}", path.display()))
}

pub const ANALYZE_CONFIG_KEYS: &[&str] = &[
    "format",
    "strict_header",
    "time_window",
    "depth_limit",
    "threads",
    "fit_interval",
    "exclude_region",
    "coverage",
    "refinements",
    "max_iterations",
    "tolerance",
    "anomaly_threshold",
    "anomaly_min_run",
    "anomaly_window",
];

/// Fully resolved settings for one analysis run.
#[derive(Debug, Clone)]
pub struct AnalyzeSettings {
    pub table: TableFormat,
    pub depth_limit: usize,
    pub threads: Option<usize>,
    pub fit: Option<AnalysisOptions>,
}

impl AnalyzeSettings {
    pub fn resolve(args: &AnalyzeArgs) -> Result<Self, CliError> {
        let kv = match &args.config {
            Some(p) => KeyValues::load(p)?,
            None => KeyValues::default(),
        };
        kv.check_keys(ANALYZE_CONFIG_KEYS)?;

        let format = match (args.format, kv.raw("format")) {
            (Some(f), _) => f,
            (None, None) => Format::Tsv,
            (None, Some(v)) => Format::from_str(v, true).map_err(|_| CliError::Usage(format!("format: {v:?}")))?,
        };
        let mut table = format.table();
        table.strict_header = kv.get("strict_header")?.unwrap_or(false);
        table.window = kv.get_range("time_window")?;

        let mut fit = AnalysisOptions::default();
        fit.fit.interval = args.fit_interval.or(kv.get_range("fit_interval")?);
        fit.fit.exclude = args.exclude_region.or(kv.get_range("exclude_region")?);
        fit.fit.max_iterations = kv.get("max_iterations")?.unwrap_or(fit.fit.max_iterations);
        fit.fit.tolerance = kv.get("tolerance")?.unwrap_or(fit.fit.tolerance);
        fit.coverage = kv.get("coverage")?.unwrap_or(fit.coverage);
        fit.refinements = kv.get("refinements")?.unwrap_or(fit.refinements);
        fit.detect.threshold = kv.get("anomaly_threshold")?.unwrap_or(fit.detect.threshold);
        fit.detect.min_run = kv.get("anomaly_min_run")?.unwrap_or(fit.detect.min_run);
        fit.detect.window = kv.get("anomaly_window")?.unwrap_or(fit.detect.window);

        let threads = args.threads.or(kv.get("threads")?);
        if threads == Some(0) {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        Ok(Self {
            table,
            depth_limit: kv.get("depth_limit")?.unwrap_or(crate::corpus::DEFAULT_DEPTH_LIMIT),
            threads,
            fit: (!args.skip_fit && !args.comments_only).then_some(fit),
        })
    }
}

/// The metric kinds an input mode can support.
pub fn kinds_for_mode(posts_only: bool, comments_only: bool) -> Vec<MetricKind> {
    MetricKind::ALL
        .into_iter()
        .filter(|k| match k.side() {
            MetricSide::Posts => !comments_only,
            MetricSide::Comments => !posts_only,
            MetricSide::Joined => !posts_only && !comments_only,
        })
        .collect()
}

/// Runs a closure on a dedicated pool when a thread count is given.
fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    match threads {
        None => Ok(f()),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map(|pool| pool.install(f))
            .map_err(|e| CliError::Usage(format!("cannot start {n} threads: {e}"))),
    }
}

/// Ingests, analyzes and writes the output directory. Nothing is written
/// unless every stage succeeds.
pub fn run_analyze(args: &AnalyzeArgs) -> Result<AnalysisReport, CliError> {
    let settings = AnalyzeSettings::resolve(args)?;
    let table = settings.table;

    let mut ingest_reports = BTreeMap::new();
    let posts = if args.comments_only {
        Vec::new()
    } else {
        let path = args.posts.as_deref().ok_or_else(|| CliError::Usage("--posts is required".into()))?;
        let (posts, report) = ingest::read_posts_file(path, &table).map_err(|e| ingest_err(path, e))?;
        ingest_reports.insert("posts".to_owned(), report);
        posts
    };
    let comments = if args.posts_only {
        Vec::new()
    } else {
        let path = args.comments.as_deref().ok_or_else(|| CliError::Usage("--comments is required".into()))?;
        let (comments, report) = ingest::read_comments_file(path, &table).map_err(|e| ingest_err(path, e))?;
        ingest_reports.insert("comments".to_owned(), report);
        comments
    };
    let empty = if args.comments_only { comments.is_empty() } else { posts.is_empty() };
    if empty {
        return Err(CliError::Ingest("empty corpus: no valid records after ingest".into()));
    }

    let corpus = Corpus::build_with_limit(posts, comments, settings.depth_limit);
    let kinds = kinds_for_mode(args.posts_only, args.comments_only);
    let mut report = with_threads(settings.threads, || build_report(&corpus, &kinds, settings.fit.as_ref()))??;
    report.ingest = ingest_reports.iter().map(|(k, r)| (k.clone(), r.clone())).collect();

    write_analysis(&args.out, &report, &corpus, &ingest_reports, &table, args.export_graph)?;
    Ok(report)
}

fn write_analysis(
    out: &Path,
    report: &AnalysisReport,
    corpus: &Corpus,
    ingest_reports: &BTreeMap<String, IngestReport>,
    table: &TableFormat,
    export_graph: bool,
) -> Result<(), CliError> {
    let io = |e| io_err(out, e);
    report.write_to_dir(out).map_err(io)?;

    if let (Some(fit), Some(series)) = (&report.fit, performance_series(report)) {
        let (lo, hi) = fit.diagnostics.interval;
        let hi = hi.max(series.max_support().unwrap_or(hi));
        let w = File::create(out.join("residuals.csv")).map_err(io)?;
        write_residuals_csv(BufWriter::new(w), &series, &fit.model, lo, hi, ',').map_err(io)?;
    }

    let ext = if table.delimiter == b',' { "csv" } else { "tsv" };
    for (name, r) in ingest_reports {
        let path = out.join(format!("{name}.quarantine.{ext}"));
        if r.quarantined.is_empty() {
            // Stale sidecars from an earlier run would be misleading.
            let _ = fs::remove_file(&path);
            continue;
        }
        ingest::write_quarantine(File::create(&path).map_err(io)?, r, table).map_err(io)?;
    }
    if !corpus.quarantined().is_empty() {
        let mut w = BufWriter::new(File::create(out.join("unresolved_comments.tsv")).map_err(io)?);
        writeln!(w, "message_id\tparent_id\treason").map_err(io)?;
        for (c, why) in corpus.quarantined() {
            writeln!(w, "{}\t{}\t{}", c.message_id, c.parent_id, why.as_str()).map_err(io)?;
        }
        w.flush().map_err(io)?;
    }
    if export_graph {
        let mut graph = corpus.commentator_author_graph();
        graph.collapse_multi_edges();
        let w = File::create(out.join("commentator_author_edges.tsv")).map_err(io)?;
        graph.write_edge_list(BufWriter::new(w), '\t').map_err(io)?;
    }
    Ok(())
}

/// Fits a histogram file and returns the fit + anomaly JSON.
pub fn run_fit(args: &FitArgs) -> Result<String, CliError> {
    let file = File::open(&args.histogram).map_err(|e| ingest_err(&args.histogram, e))?;
    let series = CountSeries::read_csv(file).map_err(|e| ingest_err(&args.histogram, e))?;
    if series.is_empty() {
        return Err(ingest_err(&args.histogram, "empty histogram"));
    }
    let mut options = AnalysisOptions::default();
    options.fit.interval = args.fit_interval;
    options.fit.exclude = args.exclude_region;
    let analysis = analyze_performance(&series, &options)?;
    let json = canonical_json(&analysis);
    if let Some(out) = &args.out {
        fs::write(out, &json).map_err(|e| io_err(out, e))?;
    }
    Ok(json)
}

pub fn run_synth(args: &SynthArgs) -> Result<GroundTruth, CliError> {
    let kv = match &args.config {
        Some(p) => KeyValues::load(p)?,
        None => KeyValues::default(),
    };
    let mut config = SynthConfig::from_key_values(&kv).map_err(synth_err)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let corpus = synth::generate(&config).map_err(synth_err)?;
    corpus.write_to_dir(&args.out, &args.format.table()).map_err(synth_err)?;
    Ok(corpus.truth)
}

fn synth_err(e: SynthError) -> CliError {
    match e {
        SynthError::Io(e) => CliError::Ingest(e.to_string()),
        other => CliError::Usage(other.to_string()),
    }
}

pub fn run_verify(args: &VerifyArgs, out: &mut impl Write) -> Result<(), CliError> {
    let report = AnalysisReport::read_from_dir(&args.report).map_err(|e| ingest_err(&args.report, e))?;
    let text = fs::read_to_string(&args.truth).map_err(|e| ingest_err(&args.truth, e))?;
    let truth: GroundTruth = serde_json::from_str(&text).map_err(|e| ingest_err(&args.truth, e))?;
    let checks = synth::verify_against_ground_truth(&report, &truth);
    for c in &checks {
        let status = if c.passed { "PASS" } else { "FAIL" };
        let _ = writeln!(out, "{status} {}: expected {}, observed {}", c.name, c.expected, c.observed);
    }
    match checks.iter().filter(|c| !c.passed).count() {
        0 => Ok(()),
        n => Err(CliError::Verify(n)),
    }
}

/// Parses `argv` and runs the chosen command, returning the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let stdout = io::stdout();
    let result = match &cli.command {
        Command::Analyze(a) => run_analyze(a).map(|r| {
            eprintln!(
                "analyzed {} posts, {} comments into {}",
                r.summary.n_posts,
                r.summary.n_comments,
                a.out.display()
            );
        }),
        Command::Fit(a) => run_fit(a).map(|json| {
            if a.out.is_none() {
                let _ = stdout.lock().write_all(json.as_bytes());
            }
        }),
        Command::Synth(a) => run_synth(a).map(|t| {
            eprintln!("generated {} posts, {} comments into {}", t.n_posts, t.n_comments, a.out.display());
        }),
        Command::Verify(a) => run_verify(a, &mut stdout.lock()),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
