use std::collections::btree_map;
use std::collections::BTreeMap;
use std::io::{self, Write};

use serde::Serialize;

/// Exact frequency map over integer support values.
///
/// Only bins with a positive count are stored, so `total_weight` is always the
/// sum of the stored counts.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SparseHistogram {
    bins: BTreeMap<i64, u64>,
    total_weight: u64,
}

impl SparseHistogram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, support: i64, count: u64) {
        if count == 0 {
            return;
        }
        *self.bins.entry(support).or_default() += count;
        self.total_weight += count;
    }

    pub fn record(&mut self, support: i64) {
        self.add(support, 1);
    }

    pub fn merge(&mut self, other: &SparseHistogram) {
        for (&s, &c) in &other.bins {
            self.add(s, c);
        }
    }

    pub fn count(&self, support: i64) -> u64 {
        self.bins.get(&support).copied().unwrap_or(0)
    }

    pub fn total_weight(&self) -> u64 {
        self.total_weight
    }

    /// Number of distinct support values.
    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    pub fn iter(&self) -> impl DoubleEndedIterator<Item = (i64, u64)> + '_ {
        self.bins.iter().map(|(&s, &c)| (s, c))
    }

    pub fn range(&self, lo: i64, hi: i64) -> btree_map::Range<'_, i64, u64> {
        self.bins.range(lo..=hi)
    }

    pub fn min_support(&self) -> Option<i64> {
        self.bins.keys().next().copied()
    }

    pub fn max_support(&self) -> Option<i64> {
        self.bins.keys().next_back().copied()
    }

    pub fn zero_count(&self) -> u64 {
        self.count(0)
    }

    pub fn negative_count(&self) -> u64 {
        self.bins.range(..0).map(|(_, &c)| c).sum()
    }

    /// Support value with the largest count; ties go to the smallest support.
    pub fn mode(&self) -> Option<i64> {
        self.iter().fold(None, |best: Option<(i64, u64)>, (s, c)| match best {
            Some((_, bc)) if bc >= c => best,
            _ => Some((s, c)),
        })
        .map(|(s, _)| s)
    }

    /// Bins restricted to `pred(support)`.
    pub fn filter(&self, mut pred: impl FnMut(i64) -> bool) -> SparseHistogram {
        let mut out = SparseHistogram::new();
        for (s, c) in self.iter().filter(|&(s, _)| pred(s)) {
            out.add(s, c);
        }
        out
    }

    /// Reweights each bin by its support: bin `s` gets `s * count(s)`.
    /// Zero and negative supports carry no mass and are dropped.
    pub fn mass(&self) -> SparseHistogram {
        let mut out = SparseHistogram::new();
        for (s, c) in self.iter().filter(|&(s, _)| s > 0) {
            out.add(s, s as u64 * c);
        }
        out
    }

    pub fn cumulative(&self) -> CumulativeCurve {
        let total = self.total_weight as f64;
        let mut acc = 0u64;
        let mut curve = CumulativeCurve::default();
        for (s, c) in self.iter() {
            acc += c;
            curve.support.push(s);
            curve.cumulative_fraction.push(if acc == self.total_weight { 1.0 } else { acc as f64 / total });
        }
        curve
    }

    /// Share of the total weight at supports `<= s`.
    pub fn fraction_at_or_below(&self, s: i64) -> Option<f64> {
        if self.is_empty() {
            return None;
        }
        let acc: u64 = self.bins.range(..=s).map(|(_, &c)| c).sum();
        Some(acc as f64 / self.total_weight as f64)
    }

    /// Smallest support whose cumulative count reaches half the total.
    pub fn population_median(&self) -> Option<i64> {
        let total = self.total_weight as u128;
        let mut acc = 0u128;
        for (s, c) in self.iter() {
            acc += c as u128;
            if 2 * acc >= total {
                return Some(s);
            }
        }
        None
    }

    /// Smallest support whose cumulative `support × count` reaches half the
    /// total mass. Undefined when any support is negative or the mass is zero.
    pub fn mass_median(&self) -> Option<i64> {
        if self.min_support()? < 0 {
            return None;
        }
        let total: u128 = self.iter().map(|(s, c)| s as u128 * c as u128).sum();
        if total == 0 {
            return None;
        }
        let mut acc = 0u128;
        for (s, c) in self.iter() {
            acc += s as u128 * c as u128;
            if 2 * acc >= total {
                return Some(s);
            }
        }
        None
    }

    /// `support,count` rows with a header.
    pub fn write_csv<W: Write>(&self, mut w: W, delimiter: char) -> io::Result<()> {
        writeln!(w, "support{delimiter}count")?;
        for (s, c) in self.iter() {
            writeln!(w, "{s}{delimiter}{c}")?;
        }
        Ok(())
    }
}

impl SparseHistogram {
    /// Builds a histogram from raw samples by sorting them first, which is
    /// much cheaper than one map update per sample on large inputs.
    pub fn from_samples(mut samples: Vec<i64>) -> Self {
        samples.sort_unstable();
        let mut h = SparseHistogram::new();
        let mut rest = &samples[..];
        while let Some(&s) = rest.first() {
            let run = rest.partition_point(|&x| x == s);
            h.bins.insert(s, run as u64);
            h.total_weight += run as u64;
            rest = &rest[run..];
        }
        h
    }
}

impl FromIterator<i64> for SparseHistogram {
    fn from_iter<I: IntoIterator<Item = i64>>(iter: I) -> Self {
        Self::from_samples(iter.into_iter().collect())
    }
}

impl Extend<i64> for SparseHistogram {
    fn extend<I: IntoIterator<Item = i64>>(&mut self, iter: I) {
        self.merge(&iter.into_iter().collect());
    }
}

/// Cumulative share of the total weight at each support value.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CumulativeCurve {
    pub support: Vec<i64>,
    pub cumulative_fraction: Vec<f64>,
}

impl CumulativeCurve {
    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }
}
