//! The machine-readable analysis report.
//!
//! JSON output is canonical: object keys are sorted, integers are exact and
//! floats are written with 17 significant digits, so identical inputs give
//! byte-identical files. Histograms are not embedded; they go to one
//! `<metric_kind>.csv` file each.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::fitkit::{analyze_performance, AnalysisOptions, MIN_FIT_BINS, AnomalyReport, CountSeries, FitDiagnostics, FitError, FitModel};
use crate::histogram::SparseHistogram;
use crate::ingest::IngestReport;
use crate::metrics::{compute_distributions, compute_summary, negative_subset, DistributionResult, MetricKind, SummaryStats};

pub const REPORT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSection {
    pub model: FitModel,
    pub diagnostics: FitDiagnostics,
}

/// Headline statistics, each recomputed from the distributions.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Conclusions {
    pub anomaly_excess_accounts: Option<f64>,
    pub anomaly_excess_lower_bound: Option<f64>,
    pub anomaly_excess_upper_bound: Option<f64>,
    pub anomaly_region: Option<(i64, i64)>,
    /// Half of all posts come from accounts at or below this performance.
    pub post_mass_median_performance: Option<i64>,
    pub share_posts_below_mass_median: Option<f64>,
    pub median_post_interval_seconds: Option<i64>,
    pub zero_post_intervals: Option<u64>,
    pub comment_mass_median_performance: Option<i64>,
    pub median_comments_per_commented_post: Option<i64>,
    pub comment_mass_median_post_aggregation: Option<i64>,
    pub share_commented_posts_without_self_comments: Option<f64>,
    pub median_comments_received_per_post_author: Option<i64>,
    pub comment_mass_median_author_aggregation: Option<i64>,
    pub median_commentators_per_commented_post: Option<i64>,
    pub median_commentators_per_post_author: Option<i64>,
    pub median_commented_posts_per_commentator: Option<i64>,
    pub median_post_authors_per_commentator: Option<i64>,
    pub median_first_comment_delay_seconds: Option<i64>,
    pub modal_first_comment_delay_seconds: Option<i64>,
    pub max_first_comment_delay_seconds: Option<i64>,
    pub negative_delay_count: Option<u64>,
    pub negative_delay_share: Option<f64>,
    pub negative_delay_median_seconds: Option<i64>,
    pub min_negative_delay_seconds: Option<i64>,
    pub median_comment_interval_seconds: Option<i64>,
    pub zero_comment_intervals: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub version: String,
    /// Ingest outcome per input table.
    pub ingest: BTreeMap<String, IngestReport>,
    /// Comments the corpus could not resolve, by reason.
    pub unresolved_comments: BTreeMap<String, u64>,
    pub summary: SummaryStats,
    pub distributions: Vec<DistributionResult>,
    pub negative_delays: Option<DistributionResult>,
    pub fit: Option<FitSection>,
    pub anomaly: Option<AnomalyReport>,
    pub conclusions: Conclusions,
}

impl AnalysisReport {
    pub fn distribution(&self, kind: MetricKind) -> Option<&DistributionResult> {
        self.distributions.iter().find(|d| d.kind == kind)
    }

    /// Fills `negative_delays` and `conclusions` from the other fields.
    pub fn derive(&mut self) {
        self.negative_delays = self.distribution(MetricKind::FirstCommentDelay).map(negative_subset);
        self.conclusions = derive_conclusions(self);
    }

    pub fn to_canonical_json(&self) -> String {
        canonical_json(self)
    }

    /// Writes `report.json` and one `<kind>.csv` per distribution, plus
    /// `negative_first_comment_delay.csv` when delays exist.
    pub fn write_to_dir(&self, dir: impl AsRef<Path>) -> io::Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        fs::write(dir.join("report.json"), self.to_canonical_json())?;
        for d in &self.distributions {
            let mut w = BufWriter::new(File::create(dir.join(format!("{}.csv", d.kind)))?);
            d.histogram.write_csv(&mut w, ',')?;
            w.flush()?;
        }
        if let Some(neg) = &self.negative_delays {
            let mut w = BufWriter::new(File::create(dir.join("negative_first_comment_delay.csv"))?);
            neg.histogram.write_csv(&mut w, ',')?;
            w.flush()?;
        }
        Ok(())
    }

    /// Loads a report directory written by [`write_to_dir`](Self::write_to_dir),
    /// restoring histograms from the CSV files.
    pub fn read_from_dir(dir: impl AsRef<Path>) -> io::Result<AnalysisReport> {
        let dir = dir.as_ref();
        let text = fs::read_to_string(dir.join("report.json"))?;
        let mut report: AnalysisReport = serde_json::from_str(&text).map_err(io::Error::from)?;
        for d in &mut report.distributions {
            let h = read_histogram_csv(File::open(dir.join(format!("{}.csv", d.kind)))?)?;
            *d = DistributionResult::from_histogram(d.kind, h);
        }
        report.derive();
        Ok(report)
    }
}

/// Computes summary, the requested distributions and, when `fit` is given,
/// the performance fit with anomaly detection. Ingest sections are left empty
/// for the caller to fill.
pub fn build_report(
    corpus: &Corpus,
    kinds: &[MetricKind],
    fit: Option<&AnalysisOptions>,
) -> Result<AnalysisReport, FitError> {
    let distributions = compute_distributions(corpus, kinds);
    let mut report = AnalysisReport {
        version: REPORT_VERSION.to_owned(),
        ingest: BTreeMap::new(),
        unresolved_comments: corpus.quarantine_counts(),
        summary: compute_summary(corpus),
        distributions,
        negative_delays: None,
        fit: None,
        anomaly: None,
        conclusions: Conclusions::default(),
    };
    if let Some(options) = fit {
        let series = performance_series(&report)
            .ok_or(FitError::InsufficientBins { got: 0, need: MIN_FIT_BINS })?;
        let analysis = analyze_performance(&series, options)?;
        report.fit = Some(FitSection { model: analysis.model, diagnostics: analysis.diagnostics });
        report.anomaly = Some(analysis.anomaly);
    }
    report.derive();
    Ok(report)
}

/// The posts-per-account histogram as a fit input, if it was computed.
pub fn performance_series(report: &AnalysisReport) -> Option<CountSeries> {
    report.distribution(MetricKind::PostsPerAccount).map(|d| CountSeries::from(&d.histogram))
}

/// Reads `support,count` rows; a non-numeric first line is taken as header.
pub fn read_histogram_csv<R: Read>(mut r: R) -> io::Result<SparseHistogram> {
    let mut text = String::new();
    r.read_to_string(&mut text)?;
    let mut h = SparseHistogram::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let bad = || io::Error::new(io::ErrorKind::InvalidData, format!("line {}: expected support,count", i + 1));
        let (s, c) = line.split_once(',').ok_or_else(bad)?;
        match (s.trim().parse::<i64>(), c.trim().parse::<u64>()) {
            (Ok(s), Ok(c)) => h.add(s, c),
            _ if i == 0 => continue,
            _ => return Err(bad()),
        }
    }
    Ok(h)
}

fn derive_conclusions(r: &AnalysisReport) -> Conclusions {
    use MetricKind::*;
    let d = |k| r.distribution(k);
    let median = |k| d(k).and_then(|x: &DistributionResult| x.median_by_population);
    let anomaly = r.anomaly.as_ref();

    let posts = d(PostsPerAccount);
    let post_mass_median = posts.and_then(|x| x.median_by_mass);
    let share_posts_below_mass_median = d(PostShareByPerformance)
        .zip(post_mass_median)
        .and_then(|(share, m)| share.histogram.fraction_at_or_below(m));

    let self_comments = d(SelfCommentsPerCommentedPost).filter(|x| !x.is_empty());
    let delays = d(FirstCommentDelay).filter(|x| !x.is_empty());
    let negatives = r.negative_delays.as_ref().filter(|_| delays.is_some());

    Conclusions {
        anomaly_excess_accounts: anomaly.map(|a| a.excess_estimate),
        anomaly_excess_lower_bound: anomaly.map(|a| a.lower_bound),
        anomaly_excess_upper_bound: anomaly.map(|a| a.upper_bound),
        anomaly_region: anomaly.and_then(|a| a.region),
        post_mass_median_performance: post_mass_median,
        share_posts_below_mass_median,
        median_post_interval_seconds: median(PostInterevent),
        zero_post_intervals: d(PostInterevent).map(|x| x.zero_count),
        comment_mass_median_performance: median(CommentMassByCommenterPerformance),
        median_comments_per_commented_post: median(CommentsPerCommentedPost),
        comment_mass_median_post_aggregation: median(CommentMassByPostAggregation),
        share_commented_posts_without_self_comments: self_comments
            .map(|x| x.zero_count as f64 / x.total_weight as f64),
        median_comments_received_per_post_author: median(CommentsReceivedPerPostAuthor),
        comment_mass_median_author_aggregation: median(CommentMassByAuthorAggregation),
        median_commentators_per_commented_post: median(CommentatorsPerCommentedPost),
        median_commentators_per_post_author: median(CommentatorsPerPostAuthor),
        median_commented_posts_per_commentator: median(CommentedPostsPerCommentator),
        median_post_authors_per_commentator: median(PostAuthorsPerCommentator),
        median_first_comment_delay_seconds: delays.and_then(|x| x.median_by_population),
        modal_first_comment_delay_seconds: delays.and_then(|x| x.histogram.filter(|s| s >= 0).mode()),
        max_first_comment_delay_seconds: delays.and_then(|x| x.max_support),
        negative_delay_count: negatives.map(|n| n.total_weight),
        negative_delay_share: delays
            .zip(negatives)
            .map(|(all, n)| n.total_weight as f64 / all.total_weight as f64),
        negative_delay_median_seconds: negatives.and_then(|n| n.median_by_population),
        min_negative_delay_seconds: negatives.and_then(|n| n.min_support),
        median_comment_interval_seconds: median(CommentInterevent),
        zero_comment_intervals: d(CommentInterevent).map(|x| x.zero_count),
    }
}

/// Pretty JSON with 17-significant-digit floats.
struct ReportFormatter(serde_json::ser::PrettyFormatter<'static>);

impl serde_json::ser::Formatter for ReportFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        if value == 0.0 {
            return w.write_all(b"0.0");
        }
        write!(w, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Serializes any value as canonical JSON (sorted keys, fixed float format).
pub fn canonical_json<T: Serialize>(value: &T) -> String {
    // Going through Value sorts object keys.
    let value = serde_json::to_value(value).expect("report types serialize");
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, ReportFormatter(Default::default()));
    value.serialize(&mut ser).expect("writing to a Vec cannot fail");
    out.push(b'\n');
    String::from_utf8(out).expect("JSON is UTF-8")
}
