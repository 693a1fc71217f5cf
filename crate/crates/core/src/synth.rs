//! Seeded synthetic corpora with known ground truth.
//!
//! Per-account post counts are drawn from a [`FitModel`] over `[1, max]`,
//! optionally with a block of extra accounts whose counts are uniform over a
//! bump region. Post timestamps follow a lognormal mixture of inter-post
//! intervals and comments arrive per post as a Poisson count. All times are
//! whole seconds, so coincident events produce zero intervals.
//!
//! Randomness comes from [`SplitMix64`] only, which keeps output identical
//! across platforms and library versions.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs::{self, File};
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{ConfigError, KeyValues};
use crate::fitkit::FitModel;
use crate::ingest::{self, CommentRecord, PostRecord, RefEntry, TableFormat};
use crate::metrics::MetricKind;
use crate::report::AnalysisReport;

/// SplitMix64 (Steele, Lea, Flood 2014): a 64-bit state advanced by the
/// golden-ratio increment `0x9E3779B97F4A7C15` and finalized with the
/// multipliers `0xBF58476D1CE4E5B9` and `0x94D049BB133111EB`.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[0, n)` without modulo bias (Lemire's method). `n > 0`.
    pub fn below(&mut self, n: u64) -> u64 {
        let threshold = n.wrapping_neg() % n;
        loop {
            let m = self.next_u64() as u128 * n as u128;
            if (m as u64) >= threshold {
                return (m >> 64) as u64;
            }
        }
    }

    pub fn chance(&mut self, p: f64) -> bool {
        self.next_f64() < p
    }

    /// Standard normal via Box–Muller, one variate per call.
    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
    }

    /// Poisson by Knuth's product method, in chunks of mean at most 16.
    pub fn poisson(&mut self, mean: f64) -> u64 {
        let mut remaining = mean;
        let mut total = 0;
        while remaining > 0.0 {
            let chunk = remaining.min(16.0);
            remaining -= chunk;
            let limit = (-chunk).exp();
            let mut prod = self.next_f64();
            while prod > limit {
                total += 1;
                prod *= self.next_f64();
            }
        }
        total
    }

    /// Independent stream for a sub-task.
    pub fn fork(&mut self) -> SplitMix64 {
        SplitMix64::new(self.next_u64())
    }
}

/// One lognormal component: `median · exp(sigma · N(0,1))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LognormalComponent {
    pub weight: f64,
    pub median_seconds: f64,
    pub sigma: f64,
}

/// Mixture of lognormal components; weights need not sum to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LognormalMixture(pub Vec<LognormalComponent>);

impl LognormalMixture {
    pub fn single(median_seconds: f64, sigma: f64) -> Self {
        Self(vec![LognormalComponent { weight: 1.0, median_seconds, sigma }])
    }

    fn validate(&self, name: &str) -> Result<(), SynthError> {
        let ok = !self.0.is_empty()
            && self
                .0
                .iter()
                .all(|c| c.weight > 0.0 && c.median_seconds > 0.0 && c.sigma >= 0.0 && c.weight.is_finite());
        if ok {
            Ok(())
        } else {
            Err(SynthError::Invalid(format!("{name}: components need weight > 0, median > 0, sigma >= 0")))
        }
    }

    pub fn sample(&self, rng: &mut SplitMix64) -> f64 {
        let total: f64 = self.0.iter().map(|c| c.weight).sum();
        let mut u = rng.next_f64() * total;
        let mut chosen = self.0[self.0.len() - 1];
        for c in &self.0 {
            if u < c.weight {
                chosen = *c;
                break;
            }
            u -= c.weight;
        }
        chosen.median_seconds * (chosen.sigma * rng.normal()).exp()
    }

    /// Whole seconds, rounded down.
    fn sample_seconds(&self, rng: &mut SplitMix64) -> i64 {
        self.sample(rng).floor().min(i64::MAX as f64 / 4.0) as i64
    }

    /// Parses `weight:median:sigma` triples separated by commas.
    pub fn parse(s: &str) -> Result<Self, String> {
        s.split(',')
            .map(|part| {
                let v: Vec<&str> = part.trim().split(':').collect();
                let [w, m, sd] = v.as_slice() else {
                    return Err(format!("expected weight:median:sigma, got {part:?}"));
                };
                let num = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}"));
                Ok(LognormalComponent { weight: num(w)?, median_seconds: num(m)?, sigma: num(sd)? })
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnomalyBump {
    pub region: (i64, i64),
    pub extra_accounts: u64,
}

/// 2013-01-01T00:00:01Z
pub const DEFAULT_WINDOW_START: i64 = 1_356_998_401;
pub const DEFAULT_WINDOW_DAYS: i64 = 152;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_accounts: u64,
    pub performance_model: FitModel,
    /// Largest per-account post count drawn from the model.
    pub max_performance: i64,
    pub anomaly_bump: Option<AnomalyBump>,
    /// Inclusive `[start, end]` Unix seconds for post timestamps.
    pub window: (i64, i64),
    pub interevent_profile: LognormalMixture,
    /// Mean comments per post.
    pub comment_rate: f64,
    pub self_comment_probability: f64,
    /// Chance that a non-first comment replies to an earlier comment.
    pub reply_probability: f64,
    pub first_comment_profile: LognormalMixture,
    pub comment_gap_profile: LognormalMixture,
    pub negative_delay_probability: f64,
    pub negative_delay_profile: LognormalMixture,
    pub emit_message_references: bool,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            n_accounts: 10_000,
            performance_model: FitModel::REFERENCE,
            max_performance: 35_922,
            anomaly_bump: None,
            window: (DEFAULT_WINDOW_START, DEFAULT_WINDOW_START + DEFAULT_WINDOW_DAYS * 86_400),
            interevent_profile: LognormalMixture(vec![
                LognormalComponent { weight: 0.05, median_seconds: 20.0, sigma: 1.5 },
                LognormalComponent { weight: 0.35, median_seconds: 3_600.0, sigma: 1.2 },
                LognormalComponent { weight: 0.40, median_seconds: 86_400.0, sigma: 0.8 },
                LognormalComponent { weight: 0.20, median_seconds: 604_800.0, sigma: 0.6 },
            ]),
            comment_rate: 0.25,
            self_comment_probability: 0.3,
            reply_probability: 0.2,
            first_comment_profile: LognormalMixture::single(3_000.0, 2.0),
            comment_gap_profile: LognormalMixture::single(600.0, 2.0),
            negative_delay_probability: 0.003,
            negative_delay_profile: LognormalMixture::single(172_800.0, 1.0),
            emit_message_references: true,
        }
    }
}

pub const CONFIG_KEYS: &[&str] = &[
    "seed",
    "n_accounts",
    "model_a",
    "model_b",
    "model_p",
    "model_c",
    "model_q",
    "max_performance",
    "bump_region",
    "bump_accounts",
    "window",
    "interevent_profile",
    "comment_rate",
    "self_comment_probability",
    "reply_probability",
    "first_comment_profile",
    "comment_gap_profile",
    "negative_delay_probability",
    "negative_delay_profile",
    "emit_message_references",
];

impl SynthConfig {
    /// Reads overrides of the defaults from a flat key-value file. Profiles
    /// are `weight:median:sigma` triples separated by commas.
    pub fn from_key_values(kv: &KeyValues) -> Result<Self, SynthError> {
        kv.check_keys(CONFIG_KEYS)?;
        let mut c = SynthConfig::default();
        let profile = |key: &str| -> Result<Option<LognormalMixture>, SynthError> {
            kv.raw(key)
                .map(|v| LognormalMixture::parse(v).map_err(|m| SynthError::Config(ConfigError::Value { key: key.into(), message: m })))
                .transpose()
        };
        c.seed = kv.get("seed")?.unwrap_or(c.seed);
        c.n_accounts = kv.get("n_accounts")?.unwrap_or(c.n_accounts);
        let m = &mut c.performance_model;
        m.a = kv.get("model_a")?.unwrap_or(m.a);
        m.b = kv.get("model_b")?.unwrap_or(m.b);
        m.p = kv.get("model_p")?.unwrap_or(m.p);
        m.c = kv.get("model_c")?.unwrap_or(m.c);
        m.q = kv.get("model_q")?.unwrap_or(m.q);
        c.max_performance = kv.get("max_performance")?.unwrap_or(c.max_performance);
        match (kv.get_range("bump_region")?, kv.get::<u64>("bump_accounts")?) {
            (Some(region), Some(extra_accounts)) => c.anomaly_bump = Some(AnomalyBump { region, extra_accounts }),
            (None, None) => {}
            _ => return Err(SynthError::Invalid("bump_region and bump_accounts go together".into())),
        }
        c.window = kv.get_range("window")?.unwrap_or(c.window);
        if let Some(p) = profile("interevent_profile")? {
            c.interevent_profile = p;
        }
        c.comment_rate = kv.get("comment_rate")?.unwrap_or(c.comment_rate);
        c.self_comment_probability = kv.get("self_comment_probability")?.unwrap_or(c.self_comment_probability);
        c.reply_probability = kv.get("reply_probability")?.unwrap_or(c.reply_probability);
        if let Some(p) = profile("first_comment_profile")? {
            c.first_comment_profile = p;
        }
        if let Some(p) = profile("comment_gap_profile")? {
            c.comment_gap_profile = p;
        }
        c.negative_delay_probability = kv.get("negative_delay_probability")?.unwrap_or(c.negative_delay_probability);
        if let Some(p) = profile("negative_delay_profile")? {
            c.negative_delay_profile = p;
        }
        c.emit_message_references = kv.get("emit_message_references")?.unwrap_or(c.emit_message_references);
        Ok(c)
    }

    fn max_count(&self) -> i64 {
        let bump_hi = self.anomaly_bump.map_or(0, |b| b.region.1);
        self.max_performance.max(bump_hi)
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let invalid = |m: &str| Err(SynthError::Invalid(m.to_owned()));
        if self.n_accounts == 0 {
            return invalid("n_accounts must be at least 1");
        }
        if !self.performance_model.is_valid() {
            return invalid("performance model parameters are invalid");
        }
        if self.max_performance < 1 {
            return invalid("max_performance must be at least 1");
        }
        if let Some(b) = self.anomaly_bump {
            if b.region.0 < 1 || b.region.0 > b.region.1 {
                return invalid("bump region must be a non-empty range of supports >= 1");
            }
        }
        for (name, p) in [
            ("self_comment_probability", self.self_comment_probability),
            ("reply_probability", self.reply_probability),
            ("negative_delay_probability", self.negative_delay_probability),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(SynthError::Invalid(format!("{name} must lie in [0, 1]")));
            }
        }
        if !(self.comment_rate >= 0.0 && self.comment_rate.is_finite()) {
            return invalid("comment_rate must be a finite non-negative number");
        }
        self.interevent_profile.validate("interevent_profile")?;
        self.first_comment_profile.validate("first_comment_profile")?;
        self.comment_gap_profile.validate("comment_gap_profile")?;
        self.negative_delay_profile.validate("negative_delay_profile")?;

        let (start, end) = self.window;
        if end <= start {
            return invalid("window must be non-empty");
        }
        let seconds = (end - start) as u128 + 1;
        if self.max_count() as u128 > seconds {
            return Err(SynthError::Infeasible { needed: self.max_count(), seconds: seconds as i64 });
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("infeasible config: {needed} posts per account do not fit in a {seconds}-second window")]
    Infeasible { needed: i64, seconds: i64 },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
}

/// Everything the generator decided, for checking analyses against.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub seed: u64,
    pub n_accounts: u64,
    pub bump_accounts: u64,
    pub bump_region: Option<(i64, i64)>,
    pub n_posts: u64,
    pub n_comments: u64,
    /// Post count of account `i + 1`.
    pub posts_per_account: Vec<u64>,
    pub comments_per_commented_post: BTreeMap<i64, u64>,
    /// Earliest-comment delay per commented post, as a histogram.
    pub first_comment_delays: BTreeMap<i64, u64>,
    pub negative_delay_count: u64,
    pub self_comments: u64,
    pub replies: u64,
}

impl GroundTruth {
    pub fn posts_per_account_histogram(&self) -> BTreeMap<i64, u64> {
        let mut h = BTreeMap::new();
        for &k in &self.posts_per_account {
            *h.entry(k as i64).or_default() += 1;
        }
        h
    }
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub posts: Vec<PostRecord>,
    pub comments: Vec<CommentRecord>,
    pub truth: GroundTruth,
    pub emit_message_references: bool,
}

/// Paths of the files written by [`SynthCorpus::write_to_dir`].
#[derive(Debug, Clone)]
pub struct SynthFiles {
    pub posts: PathBuf,
    pub comments: PathBuf,
    pub accounts: PathBuf,
    pub messages: Option<PathBuf>,
    pub truth: PathBuf,
}

pub fn account_url(id: u64) -> String {
    format!("https://social.example/account/{id}")
}

pub fn message_url(id: u64) -> String {
    format!("https://social.example/message/{id}")
}

impl SynthCorpus {
    pub fn account_references(&self) -> Vec<RefEntry> {
        let n = self.truth.posts_per_account.len() as u64;
        (1..=n).map(|id| RefEntry { id, url: account_url(id) }).collect()
    }

    pub fn message_references(&self) -> Vec<RefEntry> {
        let posts = self.posts.iter().map(|p| p.message_id);
        let comments = self.comments.iter().map(|c| c.message_id);
        posts.chain(comments).map(|id| RefEntry { id, url: message_url(id) }).collect()
    }

    /// Writes `posts`, `comments`, `accounts`, optionally `messages` tables
    /// and `ground_truth.json` into `dir`.
    pub fn write_to_dir(&self, dir: impl AsRef<Path>, format: &TableFormat) -> Result<SynthFiles, SynthError> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        let ext = if format.delimiter == b',' { "csv" } else { "tsv" };
        let files = SynthFiles {
            posts: dir.join(format!("posts.{ext}")),
            comments: dir.join(format!("comments.{ext}")),
            accounts: dir.join(format!("accounts.{ext}")),
            messages: self.emit_message_references.then(|| dir.join(format!("messages.{ext}"))),
            truth: dir.join("ground_truth.json"),
        };
        ingest::write_posts(File::create(&files.posts)?, &self.posts, format)?;
        ingest::write_comments(File::create(&files.comments)?, &self.comments, format)?;
        ingest::write_references(File::create(&files.accounts)?, &self.account_references(), format)?;
        if let Some(path) = &files.messages {
            ingest::write_references(File::create(path)?, &self.message_references(), format)?;
        }
        let json = serde_json::to_string(&self.truth).map_err(io::Error::from)?;
        fs::write(&files.truth, json + "\n")?;
        Ok(files)
    }
}

fn performance_cdf(model: &FitModel, max: i64) -> Vec<f64> {
    let mut acc = 0.0;
    (1..=max)
        .map(|s| {
            acc += model.evaluate(s).expect("s >= 1");
            acc
        })
        .collect()
}

fn sample_performance(cdf: &[f64], rng: &mut SplitMix64) -> u64 {
    let total = cdf[cdf.len() - 1];
    let u = rng.next_f64() * total;
    (cdf.partition_point(|&c| c <= u).min(cdf.len() - 1) + 1) as u64
}

/// Places `k` post times in the window. Intervals come from the profile and
/// are scaled down when they would overrun the window.
fn post_times(k: u64, window: (i64, i64), profile: &LognormalMixture, rng: &mut SplitMix64) -> Vec<i64> {
    let span = window.1 - window.0;
    let mut gaps: Vec<i64> = (1..k).map(|_| profile.sample_seconds(rng)).collect();
    let total: i128 = gaps.iter().map(|&g| g as i128).sum();
    if total > span as i128 {
        let f = span as f64 / total as f64;
        for g in &mut gaps {
            *g = (*g as f64 * f).floor() as i64;
        }
    }
    let used: i64 = gaps.iter().sum();
    let mut t = window.0 + rng.below((span - used) as u64 + 1) as i64;
    let mut times = Vec::with_capacity(k as usize);
    times.push(t);
    for g in gaps {
        t += g;
        times.push(t);
    }
    times
}

pub fn generate(config: &SynthConfig) -> Result<SynthCorpus, SynthError> {
    config.validate()?;
    let mut root = SplitMix64::new(config.seed);
    let mut count_rng = root.fork();
    let mut time_rng = root.fork();
    let mut comment_rng = root.fork();

    let cdf = performance_cdf(&config.performance_model, config.max_performance);
    let mut posts_per_account: Vec<u64> =
        (0..config.n_accounts).map(|_| sample_performance(&cdf, &mut count_rng)).collect();
    let mut truth = GroundTruth { seed: config.seed, n_accounts: config.n_accounts, ..Default::default() };
    if let Some(bump) = config.anomaly_bump {
        let width = (bump.region.1 - bump.region.0 + 1) as u64;
        for _ in 0..bump.extra_accounts {
            posts_per_account.push(bump.region.0 as u64 + count_rng.below(width));
        }
        truth.bump_accounts = bump.extra_accounts;
        truth.bump_region = Some(bump.region);
    }

    let n_posts: u64 = posts_per_account.iter().sum();
    let mut posts = Vec::with_capacity(n_posts as usize);
    let mut next_id = 1u64;
    for (i, &k) in posts_per_account.iter().enumerate() {
        let author_id = i as u64 + 1;
        for created in post_times(k, config.window, &config.interevent_profile, &mut time_rng) {
            posts.push(PostRecord { message_id: next_id, author_id, created });
            next_id += 1;
        }
    }

    let n_authors = posts_per_account.len() as u64;
    let mut comments = Vec::with_capacity((n_posts as f64 * config.comment_rate * 1.1) as usize);
    let mut thread: Vec<u64> = Vec::new();
    for post in &posts {
        let n = comment_rng.poisson(config.comment_rate);
        if n == 0 {
            continue;
        }
        let first_delay = if comment_rng.chance(config.negative_delay_probability) {
            -config.negative_delay_profile.sample_seconds(&mut comment_rng).max(1)
        } else {
            config.first_comment_profile.sample_seconds(&mut comment_rng)
        };
        *truth.comments_per_commented_post.entry(n as i64).or_default() += 1;
        *truth.first_comment_delays.entry(first_delay).or_default() += 1;
        if first_delay < 0 {
            truth.negative_delay_count += 1;
        }

        thread.clear();
        let mut t = post.created + first_delay;
        for j in 0..n {
            if j > 0 {
                t += config.comment_gap_profile.sample_seconds(&mut comment_rng);
            }
            let author_id = if comment_rng.chance(config.self_comment_probability) {
                post.author_id
            } else {
                comment_rng.below(n_authors) + 1
            };
            let parent_id = if j > 0 && comment_rng.chance(config.reply_probability) {
                truth.replies += 1;
                thread[comment_rng.below(thread.len() as u64) as usize]
            } else {
                post.message_id
            };
            if author_id == post.author_id {
                truth.self_comments += 1;
            }
            comments.push(CommentRecord { message_id: next_id, author_id, created: t, parent_id });
            thread.push(next_id);
            next_id += 1;
        }
    }

    truth.n_posts = posts.len() as u64;
    truth.n_comments = comments.len() as u64;
    truth.posts_per_account = posts_per_account;
    Ok(SynthCorpus { posts, comments, truth, emit_message_references: config.emit_message_references })
}

/// Outcome of one ground-truth comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub expected: String,
    pub observed: String,
}

impl Check {
    fn new(name: &str, passed: bool, expected: impl ToString, observed: impl ToString) -> Self {
        Self { name: name.to_owned(), passed, expected: expected.to_string(), observed: observed.to_string() }
    }

    fn exact<T: PartialEq + std::fmt::Debug>(name: &str, expected: T, observed: T) -> Self {
        let passed = expected == observed;
        Self::new(name, passed, format!("{expected:?}"), format!("{observed:?}"))
    }
}

/// Relative tolerance on the recovered bump size.
pub const BUMP_TOLERANCE: f64 = 0.10;
/// Minimum Jaccard overlap between detected and injected bump regions.
pub const BUMP_MIN_JACCARD: f64 = 0.6;

pub fn jaccard(a: (i64, i64), b: (i64, i64)) -> f64 {
    let inter = (a.1.min(b.1) - a.0.max(b.0) + 1).max(0) as f64;
    let union = ((a.1 - a.0 + 1) + (b.1 - b.0 + 1)) as f64 - inter;
    inter / union
}

/// Compares an analysis of a generated corpus with the generator's truth.
/// Counts must match exactly; the bump estimate is checked within
/// [`BUMP_TOLERANCE`] and its region by [`BUMP_MIN_JACCARD`].
pub fn verify_against_ground_truth(report: &AnalysisReport, truth: &GroundTruth) -> Vec<Check> {
    let s = &report.summary;
    let mut checks = vec![
        Check::exact("n_posts", truth.n_posts, s.n_posts),
        Check::exact("n_post_accounts", truth.posts_per_account.len() as u64, s.n_post_accounts),
        Check::exact("n_comments", truth.n_comments, s.n_comments),
        Check::exact("n_resolved_comments", truth.n_comments, s.n_resolved_comments),
        Check::exact(
            "n_commented_posts",
            truth.comments_per_commented_post.values().sum::<u64>(),
            s.n_commented_posts,
        ),
    ];

    let mut histogram_check = |name: &str, kind: MetricKind, expected: BTreeMap<i64, u64>| {
        let observed: Option<BTreeMap<i64, u64>> =
            report.distribution(kind).map(|d| d.histogram.iter().collect());
        let passed = observed.as_ref() == Some(&expected);
        let summarize = |h: &BTreeMap<i64, u64>| format!("{} bins, weight {}", h.len(), h.values().sum::<u64>());
        checks.push(Check::new(
            name,
            passed,
            summarize(&expected),
            observed.as_ref().map_or("missing".to_owned(), summarize),
        ));
    };
    histogram_check("posts_per_account_histogram", MetricKind::PostsPerAccount, truth.posts_per_account_histogram());
    histogram_check(
        "comments_per_commented_post_histogram",
        MetricKind::CommentsPerCommentedPost,
        truth.comments_per_commented_post.clone(),
    );
    histogram_check("first_comment_delay_histogram", MetricKind::FirstCommentDelay, truth.first_comment_delays.clone());

    let negatives = report.distribution(MetricKind::FirstCommentDelay).map(|d| d.negative_count);
    checks.push(Check::exact("negative_delay_count", Some(truth.negative_delay_count), negatives));

    if let (Some(region), true) = (truth.bump_region, truth.bump_accounts > 0) {
        let anomaly = report.anomaly.as_ref();
        let estimate = anomaly.map(|a| a.excess_estimate);
        let want = truth.bump_accounts as f64;
        let ok = estimate.is_some_and(|e| ((e - want) / want).abs() <= BUMP_TOLERANCE);
        checks.push(Check::new(
            "bump_excess_within_10pct",
            ok,
            want,
            estimate.map_or("missing".into(), |e| format!("{e:.1}")),
        ));
        let detected = anomaly.and_then(|a| a.region);
        let overlap = detected.map(|d| jaccard(d, region));
        checks.push(Check::new(
            "bump_region_jaccard",
            overlap.is_some_and(|j| j >= BUMP_MIN_JACCARD),
            format!("{region:?}"),
            format!("{detected:?} (jaccard {overlap:?})"),
        ));
    }
    checks
}
