//! Test support: a deliberately naive reference implementation of every
//! metric, and seeded corpora with injected defects.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use pubdyn::corpus::DEFAULT_DEPTH_LIMIT;
use pubdyn::metrics::MetricKind;
use pubdyn::synth::{generate, SplitMix64, SynthConfig};
use pubdyn::{CommentRecord, DistributionResult, PostRecord};

/// Everything a [`DistributionResult`] reports, recomputed from scratch.
#[derive(Debug, Clone, PartialEq)]
pub struct Expected {
    pub histogram: BTreeMap<i64, u64>,
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

impl Expected {
    pub fn observed(d: &DistributionResult) -> Expected {
        Expected {
            histogram: d.histogram.iter().collect(),
            total_weight: d.total_weight,
            distinct_support: d.distinct_support,
            median_by_population: d.median_by_population,
            median_by_mass: d.median_by_mass,
            max_support: d.max_support,
            min_support: d.min_support,
            mode: d.mode,
            zero_count: d.zero_count,
            negative_count: d.negative_count,
        }
    }
}

/// Lower median of an explicit sample list.
fn lower_median(mut values: Vec<i64>) -> Option<i64> {
    if values.is_empty() {
        return None;
    }
    values.sort();
    Some(values[values.len().div_ceil(2) - 1])
}

fn describe(samples: Vec<i64>, with_mass_median: bool) -> Expected {
    let mut histogram = BTreeMap::new();
    for &s in &samples {
        *histogram.entry(s).or_insert(0u64) += 1;
    }
    describe_histogram(histogram, with_mass_median)
}

fn describe_histogram(histogram: BTreeMap<i64, u64>, with_mass_median: bool) -> Expected {
    let mut expanded = Vec::new();
    for (&s, &c) in &histogram {
        for _ in 0..c {
            expanded.push(s);
        }
    }
    let median_by_mass = if with_mass_median && expanded.iter().all(|&s| s >= 0) {
        // Each sample s stands for s units of mass.
        let mut mass = Vec::new();
        for &s in &expanded {
            for _ in 0..s {
                mass.push(s);
            }
        }
        lower_median(mass)
    } else {
        None
    };
    let mut mode = None;
    let mut mode_count = 0;
    for (&s, &c) in &histogram {
        if c > mode_count {
            mode = Some(s);
            mode_count = c;
        }
    }
    Expected {
        total_weight: expanded.len() as u64,
        distinct_support: histogram.len(),
        median_by_population: lower_median(expanded.clone()),
        median_by_mass,
        max_support: expanded.iter().copied().max(),
        min_support: expanded.iter().copied().min(),
        mode,
        zero_count: expanded.iter().filter(|&&s| s == 0).count() as u64,
        negative_count: expanded.iter().filter(|&&s| s < 0).count() as u64,
        histogram,
    }
}

/// Mass reweighting: bin `s` of `base` gets `s × count`, positive supports only.
fn mass_of(base: &Expected) -> Expected {
    let h = base.histogram.iter().filter(|(&s, _)| s > 0).map(|(&s, &c)| (s, s as u64 * c)).collect();
    describe_histogram(h, false)
}

/// A plain, slow restatement of the corpus rules.
pub struct Oracle {
    pub posts: Vec<PostRecord>,
    /// Indexed comments: duplicates and post-id collisions removed.
    pub comments: Vec<CommentRecord>,
    /// (comment, root post) for every resolvable comment.
    pub resolved: Vec<(CommentRecord, PostRecord)>,
}

impl Oracle {
    pub fn new(raw_posts: &[PostRecord], raw_comments: &[CommentRecord]) -> Oracle {
        let mut posts: Vec<PostRecord> = Vec::new();
        let mut post_by_id = BTreeMap::new();
        for p in raw_posts {
            if let std::collections::btree_map::Entry::Vacant(e) = post_by_id.entry(p.message_id) {
                e.insert(*p);
                posts.push(*p);
            }
        }
        let mut comments: Vec<CommentRecord> = Vec::new();
        let mut comment_by_id = BTreeMap::new();
        for c in raw_comments {
            if post_by_id.contains_key(&c.message_id) || comment_by_id.contains_key(&c.message_id) {
                continue;
            }
            comment_by_id.insert(c.message_id, *c);
            comments.push(*c);
        }
        let mut resolved = Vec::new();
        for c in &comments {
            let mut current = *c;
            let mut steps = 1;
            let mut seen = BTreeSet::from([c.message_id]);
            loop {
                if let Some(p) = post_by_id.get(&current.parent_id) {
                    resolved.push((*c, *p));
                    break;
                }
                let Some(parent) = comment_by_id.get(&current.parent_id) else { break };
                if !seen.insert(parent.message_id) || steps >= DEFAULT_DEPTH_LIMIT {
                    break;
                }
                current = *parent;
                steps += 1;
            }
        }
        Oracle { posts, comments, resolved }
    }

    fn per_post(&self) -> BTreeMap<u64, (PostRecord, Vec<CommentRecord>)> {
        let mut out: BTreeMap<u64, (PostRecord, Vec<CommentRecord>)> = BTreeMap::new();
        for (c, p) in &self.resolved {
            out.entry(p.message_id).or_insert((*p, Vec::new())).1.push(*c);
        }
        out
    }

    fn intervals(groups: BTreeMap<u64, Vec<i64>>) -> Vec<i64> {
        let mut out = Vec::new();
        for (_, mut times) in groups {
            times.sort();
            for i in 1..times.len() {
                out.push(times[i] - times[i - 1]);
            }
        }
        out
    }

    pub fn distribution(&self, kind: MetricKind) -> Expected {
        use MetricKind::*;
        let with_mass = kind.has_mass_median();
        match kind {
            PostsPerAccount => {
                let mut per: BTreeMap<u64, i64> = BTreeMap::new();
                for p in &self.posts {
                    *per.entry(p.author_id).or_default() += 1;
                }
                describe(per.into_values().collect(), with_mass)
            }
            PostShareByPerformance => mass_of(&self.distribution(PostsPerAccount)),
            PostInterevent => {
                let mut per: BTreeMap<u64, Vec<i64>> = BTreeMap::new();
                for p in &self.posts {
                    per.entry(p.author_id).or_default().push(p.created);
                }
                describe(Self::intervals(per), with_mass)
            }
            CommentsPerAccount => {
                let mut per: BTreeMap<u64, i64> = BTreeMap::new();
                for c in &self.comments {
                    *per.entry(c.author_id).or_default() += 1;
                }
                describe(per.into_values().collect(), with_mass)
            }
            CommentMassByCommenterPerformance => mass_of(&self.distribution(CommentsPerAccount)),
            CommentInterevent => {
                let mut per: BTreeMap<u64, Vec<i64>> = BTreeMap::new();
                for c in &self.comments {
                    per.entry(c.author_id).or_default().push(c.created);
                }
                describe(Self::intervals(per), with_mass)
            }
            CommentsPerCommentedPost => {
                describe(self.per_post().values().map(|(_, cs)| cs.len() as i64).collect(), with_mass)
            }
            CommentMassByPostAggregation => mass_of(&self.distribution(CommentsPerCommentedPost)),
            SelfCommentsPerCommentedPost => describe(
                self.per_post()
                    .values()
                    .map(|(p, cs)| cs.iter().filter(|c| c.author_id == p.author_id).count() as i64)
                    .collect(),
                with_mass,
            ),
            CommentsReceivedPerPostAuthor => {
                let mut per: BTreeMap<u64, i64> = BTreeMap::new();
                for (_, p) in &self.resolved {
                    *per.entry(p.author_id).or_default() += 1;
                }
                describe(per.into_values().collect(), with_mass)
            }
            CommentMassByAuthorAggregation => mass_of(&self.distribution(CommentsReceivedPerPostAuthor)),
            CommentatorsPerCommentedPost => describe(
                self.per_post()
                    .values()
                    .map(|(_, cs)| cs.iter().map(|c| c.author_id).collect::<BTreeSet<_>>().len() as i64)
                    .collect(),
                with_mass,
            ),
            CommentatorsPerPostAuthor => {
                let mut per: BTreeMap<u64, BTreeSet<u64>> = BTreeMap::new();
                for (c, p) in &self.resolved {
                    per.entry(p.author_id).or_default().insert(c.author_id);
                }
                describe(per.values().map(|s| s.len() as i64).collect(), with_mass)
            }
            CommentedPostsPerCommentator => {
                let mut per: BTreeMap<u64, BTreeSet<u64>> = BTreeMap::new();
                for (c, p) in &self.resolved {
                    per.entry(c.author_id).or_default().insert(p.message_id);
                }
                describe(per.values().map(|s| s.len() as i64).collect(), with_mass)
            }
            PostAuthorsPerCommentator => {
                let mut per: BTreeMap<u64, BTreeSet<u64>> = BTreeMap::new();
                for (c, p) in &self.resolved {
                    per.entry(c.author_id).or_default().insert(p.author_id);
                }
                describe(per.values().map(|s| s.len() as i64).collect(), with_mass)
            }
            FirstCommentDelay => describe(
                self.per_post()
                    .values()
                    .map(|(p, cs)| cs.iter().map(|c| c.created).min().unwrap() - p.created)
                    .collect(),
                with_mass,
            ),
        }
    }
}

/// A small generated corpus plus injected defects: duplicate posts and
/// comments, comments reusing post ids, orphans, cycles, an over-deep reply
/// chain and same-second posts.
pub fn defective_corpus(seed: u64) -> (Vec<PostRecord>, Vec<CommentRecord>) {
    let mut rng = SplitMix64::new(seed ^ 0xD1B5_4A32_D192_ED03);
    let config = SynthConfig {
        seed,
        n_accounts: 60 + rng.below(140),
        max_performance: 100,
        comment_rate: 0.2 + rng.next_f64() * 0.6,
        self_comment_probability: rng.next_f64() * 0.5,
        reply_probability: rng.next_f64() * 0.5,
        negative_delay_probability: 0.05,
        ..SynthConfig::default()
    };
    let synth = generate(&config).expect("test config is feasible");
    let (mut posts, mut comments) = (synth.posts, synth.comments);
    if posts.is_empty() {
        return (posts, comments);
    }
    let mut next_id = posts.len() as u64 + comments.len() as u64 + 1_000;
    let pick_post = |rng: &mut SplitMix64, posts: &[PostRecord]| posts[rng.below(posts.len() as u64) as usize];

    for _ in 0..rng.below(5) {
        let mut dup = pick_post(&mut rng, &posts);
        dup.author_id += 1;
        posts.push(dup);
    }
    for _ in 0..rng.below(5) {
        let mut twin = pick_post(&mut rng, &posts);
        twin.message_id = next_id;
        next_id += 1;
        posts.push(twin);
    }
    let commenter = |rng: &mut SplitMix64| 1 + rng.below(config.n_accounts);
    let t0 = config.window.0;
    for _ in 0..rng.below(6) {
        let p = pick_post(&mut rng, &posts);
        comments.push(CommentRecord { message_id: p.message_id, author_id: commenter(&mut rng), created: t0, parent_id: p.message_id });
    }
    if !comments.is_empty() {
        for _ in 0..rng.below(6) {
            let mut c = comments[rng.below(comments.len() as u64) as usize];
            c.author_id = commenter(&mut rng);
            comments.push(c);
        }
    }
    for _ in 0..rng.below(6) {
        comments.push(CommentRecord { message_id: next_id, author_id: commenter(&mut rng), created: t0 + 5, parent_id: 9_999_999_999 });
        next_id += 1;
    }
    for _ in 0..rng.below(3) {
        let (a, b) = (next_id, next_id + 1);
        next_id += 2;
        let who = commenter(&mut rng);
        comments.push(CommentRecord { message_id: a, author_id: who, created: t0 + 9, parent_id: b });
        comments.push(CommentRecord { message_id: b, author_id: who, created: t0 + 9, parent_id: a });
    }
    if rng.chance(0.5) {
        let root = pick_post(&mut rng, &posts);
        let mut parent = root.message_id;
        for k in 0..(DEFAULT_DEPTH_LIMIT as i64 + 6) {
            comments.push(CommentRecord { message_id: next_id, author_id: commenter(&mut rng), created: root.created + k, parent_id: parent });
            parent = next_id;
            next_id += 1;
        }
    }
    (posts, comments)
}
