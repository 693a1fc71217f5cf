//! Activity distributions and summary statistics over a [`Corpus`].
//!
//! Three families of distribution are computed:
//!
//! * **population** metrics count entities (accounts, posts) per support value,
//! * **mass** metrics reweight a population metric by its support, so each bin
//!   holds the number of items (posts, comments) contributed by entities at
//!   that support,
//! * **interval** metrics pool per-entity time differences in seconds.
//!
//! Post-side metrics use resolved comments only; commenter-activity metrics
//! (comments per account, inter-comment intervals) use every indexed comment.


use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use rustc_hash::{FxHashMap as HashMap, FxHashSet as HashSet};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Corpus;
use crate::histogram::{CumulativeCurve, SparseHistogram};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    PostsPerAccount,
    PostShareByPerformance,
    PostInterevent,
    CommentsPerAccount,
    CommentMassByCommenterPerformance,
    CommentsPerCommentedPost,
    CommentMassByPostAggregation,
    SelfCommentsPerCommentedPost,
    CommentsReceivedPerPostAuthor,
    CommentMassByAuthorAggregation,
    CommentatorsPerCommentedPost,
    CommentatorsPerPostAuthor,
    CommentedPostsPerCommentator,
    PostAuthorsPerCommentator,
    FirstCommentDelay,
    CommentInterevent,
}

/// What the support axis of a metric measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SupportUnit {
    Count,
    Seconds,
}

/// Which inputs a metric needs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricSide {
    /// Posts only.
    Posts,
    /// Comments only, no resolution needed.
    Comments,
    /// Comments resolved to posts.
    Joined,
}

impl MetricKind {
    pub const ALL: [MetricKind; 16] = [
        MetricKind::PostsPerAccount,
        MetricKind::PostShareByPerformance,
        MetricKind::PostInterevent,
        MetricKind::CommentsPerAccount,
        MetricKind::CommentMassByCommenterPerformance,
        MetricKind::CommentsPerCommentedPost,
        MetricKind::CommentMassByPostAggregation,
        MetricKind::SelfCommentsPerCommentedPost,
        MetricKind::CommentsReceivedPerPostAuthor,
        MetricKind::CommentMassByAuthorAggregation,
        MetricKind::CommentatorsPerCommentedPost,
        MetricKind::CommentatorsPerPostAuthor,
        MetricKind::CommentedPostsPerCommentator,
        MetricKind::PostAuthorsPerCommentator,
        MetricKind::FirstCommentDelay,
        MetricKind::CommentInterevent,
    ];

    pub fn as_str(self) -> &'static str {
        use MetricKind::*;
        match self {
            PostsPerAccount => "posts_per_account",
            PostShareByPerformance => "post_share_by_performance",
            PostInterevent => "post_interevent",
            CommentsPerAccount => "comments_per_account",
            CommentMassByCommenterPerformance => "comment_mass_by_commenter_performance",
            CommentsPerCommentedPost => "comments_per_commented_post",
            CommentMassByPostAggregation => "comment_mass_by_post_aggregation",
            SelfCommentsPerCommentedPost => "self_comments_per_commented_post",
            CommentsReceivedPerPostAuthor => "comments_received_per_post_author",
            CommentMassByAuthorAggregation => "comment_mass_by_author_aggregation",
            CommentatorsPerCommentedPost => "commentators_per_commented_post",
            CommentatorsPerPostAuthor => "commentators_per_post_author",
            CommentedPostsPerCommentator => "commented_posts_per_commentator",
            PostAuthorsPerCommentator => "post_authors_per_commentator",
            FirstCommentDelay => "first_comment_delay",
            CommentInterevent => "comment_interevent",
        }
    }

    pub fn unit(self) -> SupportUnit {
        use MetricKind::*;
        match self {
            PostInterevent | FirstCommentDelay | CommentInterevent => SupportUnit::Seconds,
            _ => SupportUnit::Count,
        }
    }

    pub fn side(self) -> MetricSide {
        use MetricKind::*;
        match self {
            PostsPerAccount | PostShareByPerformance | PostInterevent => MetricSide::Posts,
            CommentsPerAccount | CommentMassByCommenterPerformance | CommentInterevent => MetricSide::Comments,
            _ => MetricSide::Joined,
        }
    }

    /// The population metric a mass metric reweights.
    pub fn mass_of(self) -> Option<MetricKind> {
        use MetricKind::*;
        match self {
            PostShareByPerformance => Some(PostsPerAccount),
            CommentMassByCommenterPerformance => Some(CommentsPerAccount),
            CommentMassByPostAggregation => Some(CommentsPerCommentedPost),
            CommentMassByAuthorAggregation => Some(CommentsReceivedPerPostAuthor),
            _ => None,
        }
    }

    /// Population metrics over counts, where a mass median is meaningful.
    pub fn has_mass_median(self) -> bool {
        self.unit() == SupportUnit::Count && self.mass_of().is_none()
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unknown metric kind {0:?}")]
pub struct UnknownMetric(pub String);

impl FromStr for MetricKind {
    type Err = UnknownMetric;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MetricKind::ALL.into_iter().find(|k| k.as_str() == s).ok_or_else(|| UnknownMetric(s.to_owned()))
    }
}

/// One metric's histogram plus its derived statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionResult {
    pub kind: MetricKind,
    #[serde(skip)]
    pub histogram: SparseHistogram,
    #[serde(skip)]
    pub cumulative: CumulativeCurve,
    pub total_weight: u64,
    pub distinct_support: usize,
    pub median_by_population: Option<i64>,
    pub median_by_mass: Option<i64>,
    pub max_support: Option<i64>,
    pub min_support: Option<i64>,
    pub mode: Option<i64>,
    pub zero_count: u64,
    pub negative_count: u64,
}

impl DistributionResult {
    pub fn from_histogram(kind: MetricKind, histogram: SparseHistogram) -> Self {
        Self {
            kind,
            cumulative: histogram.cumulative(),
            total_weight: histogram.total_weight(),
            distinct_support: histogram.len(),
            median_by_population: histogram.population_median(),
            median_by_mass: if kind.has_mass_median() { histogram.mass_median() } else { None },
            max_support: histogram.max_support(),
            min_support: histogram.min_support(),
            mode: histogram.mode(),
            zero_count: histogram.zero_count(),
            negative_count: histogram.negative_count(),
            histogram,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.histogram.is_empty()
    }
}

/// Table-level counts and mean performances. Means are `None` when their
/// denominator is zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub first_time: Option<i64>,
    pub last_time: Option<i64>,
    pub span_days: Option<f64>,
    pub first_comment_time: Option<i64>,
    pub last_comment_time: Option<i64>,
    pub comment_span_days: Option<f64>,
    pub n_posts: u64,
    pub n_post_accounts: u64,
    pub n_comments: u64,
    pub n_commenters: u64,
    pub n_resolved_comments: u64,
    pub n_commented_posts: u64,
    pub n_commented_post_authors: u64,
    pub mean_post_performance: Option<f64>,
    pub mean_comment_performance: Option<f64>,
    pub mean_comments_per_commented_post: Option<f64>,
    pub mean_comments_per_commented_author: Option<f64>,
}

/// Raw table counts from which [`SummaryStats`] means are derived.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TableCounts {
    pub n_posts: u64,
    pub n_post_accounts: u64,
    pub n_comments: u64,
    pub n_commenters: u64,
    pub n_resolved_comments: u64,
    pub n_commented_posts: u64,
    pub n_commented_post_authors: u64,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

const SECONDS_PER_DAY: f64 = 86_400.0;

fn span(times: impl Iterator<Item = i64>) -> (Option<i64>, Option<i64>, Option<f64>) {
    let (lo, hi) = times.fold((None, None), |(lo, hi): (Option<i64>, Option<i64>), t| {
        (Some(lo.map_or(t, |l| l.min(t))), Some(hi.map_or(t, |h| h.max(t))))
    });
    let days = lo.zip(hi).map(|(l, h)| (h - l) as f64 / SECONDS_PER_DAY);
    (lo, hi, days)
}

impl SummaryStats {
    /// Derives the mean performances from literal counts. The per-commented-post
    /// and per-commented-author means divide by the commented populations.
    pub fn from_counts(c: TableCounts) -> Self {
        Self {
            first_time: None,
            last_time: None,
            span_days: None,
            first_comment_time: None,
            last_comment_time: None,
            comment_span_days: None,
            n_posts: c.n_posts,
            n_post_accounts: c.n_post_accounts,
            n_comments: c.n_comments,
            n_commenters: c.n_commenters,
            n_resolved_comments: c.n_resolved_comments,
            n_commented_posts: c.n_commented_posts,
            n_commented_post_authors: c.n_commented_post_authors,
            mean_post_performance: ratio(c.n_posts, c.n_post_accounts),
            mean_comment_performance: ratio(c.n_comments, c.n_commenters),
            mean_comments_per_commented_post: ratio(c.n_comments, c.n_commented_posts),
            mean_comments_per_commented_author: ratio(c.n_comments, c.n_commented_post_authors),
        }
    }
}

pub fn compute_summary(corpus: &Corpus) -> SummaryStats {
    let commented_authors: HashSet<u64> = corpus.comments_by_root_post().map(|(p, _)| p.author_id).collect();
    let counts = TableCounts {
        n_posts: corpus.posts().len() as u64,
        n_post_accounts: corpus.post_author_count() as u64,
        n_comments: corpus.comments().len() as u64,
        n_commenters: corpus.commenter_count() as u64,
        n_resolved_comments: corpus.resolved().len() as u64,
        n_commented_posts: corpus.commented_post_count() as u64,
        n_commented_post_authors: commented_authors.len() as u64,
    };
    let (first_time, last_time, span_days) = span(corpus.posts().iter().map(|p| p.created));
    let (first_comment_time, last_comment_time, comment_span_days) =
        span(corpus.comments().iter().map(|c| c.created));
    SummaryStats {
        first_time,
        last_time,
        span_days,
        first_comment_time,
        last_comment_time,
        comment_span_days,
        ..SummaryStats::from_counts(counts)
    }
}

fn pooled_intervals(groups: impl Iterator<Item = Vec<i64>>) -> SparseHistogram {
    let mut gaps = Vec::new();
    for mut times in groups {
        times.sort_unstable();
        gaps.extend(times.windows(2).map(|w| w[1] - w[0]));
    }
    SparseHistogram::from_samples(gaps)
}

fn histogram_of_counts<K>(counts: HashMap<K, u64>) -> SparseHistogram {
    counts.into_values().map(|c| c as i64).collect()
}

fn histogram_of_distinct<K, V>(sets: HashMap<K, HashSet<V>>) -> SparseHistogram {
    sets.into_values().map(|s| s.len() as i64).collect()
}

fn population_histogram(corpus: &Corpus, kind: MetricKind) -> SparseHistogram {
    use MetricKind::*;
    match kind {
        PostsPerAccount => corpus.posts_by_author().map(|(_, ps)| ps.count() as i64).collect(),
        PostInterevent => pooled_intervals(corpus.posts_by_author().map(|(_, ps)| ps.map(|p| p.created).collect())),
        CommentsPerAccount => corpus.comments_by_author().map(|(_, cs)| cs.count() as i64).collect(),
        CommentInterevent => {
            pooled_intervals(corpus.comments_by_author().map(|(_, cs)| cs.map(|c| c.created).collect()))
        }
        CommentsPerCommentedPost => corpus.comments_by_root_post().map(|(_, cs)| cs.count() as i64).collect(),
        SelfCommentsPerCommentedPost => corpus
            .comments_by_root_post()
            .map(|(p, cs)| cs.filter(|r| r.comment.author_id == p.author_id).count() as i64)
            .collect(),
        CommentsReceivedPerPostAuthor => {
            let mut per_author: HashMap<u64, u64> = HashMap::default();
            for (p, cs) in corpus.comments_by_root_post() {
                *per_author.entry(p.author_id).or_default() += cs.count() as u64;
            }
            histogram_of_counts(per_author)
        }
        CommentatorsPerCommentedPost => corpus
            .comments_by_root_post()
            .map(|(_, cs)| cs.map(|r| r.comment.author_id).collect::<HashSet<_>>().len() as i64)
            .collect(),
        CommentatorsPerPostAuthor => {
            let mut per_author: HashMap<u64, HashSet<u64>> = HashMap::default();
            for (p, cs) in corpus.comments_by_root_post() {
                per_author.entry(p.author_id).or_default().extend(cs.map(|r| r.comment.author_id));
            }
            histogram_of_distinct(per_author)
        }
        CommentedPostsPerCommentator => {
            let mut per_commenter: HashMap<u64, HashSet<u64>> = HashMap::default();
            for r in corpus.resolved() {
                per_commenter.entry(r.comment.author_id).or_default().insert(r.root_post_id);
            }
            histogram_of_distinct(per_commenter)
        }
        PostAuthorsPerCommentator => {
            let mut per_commenter: HashMap<u64, HashSet<u64>> = HashMap::default();
            for (p, cs) in corpus.comments_by_root_post() {
                for r in cs {
                    per_commenter.entry(r.comment.author_id).or_default().insert(p.author_id);
                }
            }
            histogram_of_distinct(per_commenter)
        }
        FirstCommentDelay => corpus
            .comments_by_root_post()
            .filter_map(|(p, cs)| cs.map(|r| r.comment.created).min().map(|first| first - p.created))
            .collect(),
        PostShareByPerformance
        | CommentMassByCommenterPerformance
        | CommentMassByPostAggregation
        | CommentMassByAuthorAggregation => unreachable!("mass metrics derive from a population metric"),
    }
}

/// Computes one metric's distribution. An empty relevant population yields an
/// empty result.
pub fn compute_distribution(corpus: &Corpus, kind: MetricKind) -> DistributionResult {
    let histogram = match kind.mass_of() {
        Some(base) => population_histogram(corpus, base).mass(),
        None => population_histogram(corpus, kind),
    };
    DistributionResult::from_histogram(kind, histogram)
}

/// Computes several metrics in parallel on the current rayon pool. Output
/// order follows `kinds`.
pub fn compute_distributions(corpus: &Corpus, kinds: &[MetricKind]) -> Vec<DistributionResult> {
    kinds.par_iter().map(|&k| compute_distribution(corpus, k)).collect()
}

/// First-comment delays restricted to negative values.
pub fn negative_delay_stats(corpus: &Corpus) -> DistributionResult {
    negative_subset(&compute_distribution(corpus, MetricKind::FirstCommentDelay))
}

/// The negative part of an already computed delay distribution.
pub fn negative_subset(delays: &DistributionResult) -> DistributionResult {
    DistributionResult::from_histogram(delays.kind, delays.histogram.filter(|s| s < 0))
}
