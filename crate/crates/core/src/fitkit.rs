//! Rational power-law model for account performance, its least-squares fit,
//! and detection of the region where accounts exceed the model.
//!
//! The model is
//!
//! ```text
//!            a
//! m(S) = ---------------------------------
//!        b·(S−1)^p + c·(S−1)^q + 1
//! ```
//!
//! with `a > 0`, `b, c ≥ 0` and `p > q > 0`. It is fitted by minimizing the
//! squared log-residuals `Σ (ln y(S) − ln m(S))²` with a Levenberg–Marquardt
//! iteration; the parameters are carried as `(ln a, ln b, ln c, p, q)` so the
//! sign constraints on `a`, `b`, `c` hold for free.

use std::collections::BTreeMap;
use std::io::{self, Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::histogram::SparseHistogram;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitModel {
    pub a: f64,
    pub b: f64,
    pub p: f64,
    pub c: f64,
    pub q: f64,
}

impl FitModel {
    /// Constants fitted to the account-performance histogram of a
    /// 2.86M-account corpus over supports `[1, 245]`.
    pub const REFERENCE: FitModel = FitModel { a: 295_376.0, b: 1e-4, p: 2.78, c: 0.1, q: 1.545 };

    pub fn new(a: f64, b: f64, p: f64, c: f64, q: f64) -> Result<Self, FitError> {
        let m = FitModel { a, b, p, c, q };
        if m.is_valid() {
            Ok(m)
        } else {
            Err(FitError::InvalidModel(m))
        }
    }

    pub fn is_valid(&self) -> bool {
        [self.a, self.b, self.p, self.c, self.q].iter().all(|v| v.is_finite())
            && self.a > 0.0
            && self.b >= 0.0
            && self.c >= 0.0
            && self.p > self.q
            && self.q > 0.0
    }

    /// Model value at support `s ≥ 1`.
    pub fn evaluate(&self, s: i64) -> Result<f64, FitError> {
        if s < 1 {
            return Err(FitError::Domain(s));
        }
        Ok(self.value_at((s - 1) as f64))
    }

    /// Model value at offset `x = s − 1`.
    fn value_at(&self, x: f64) -> f64 {
        if x == 0.0 {
            return self.a;
        }
        self.a / (self.b * x.powf(self.p) + self.c * x.powf(self.q) + 1.0)
    }

    pub fn scaled(&self, k: f64) -> FitModel {
        FitModel { a: self.a * k, ..*self }
    }

    fn to_params(self) -> [f64; 5] {
        [self.a.ln(), self.b.ln(), self.c.ln(), self.p, self.q]
    }

    fn from_params(t: &[f64; 5]) -> FitModel {
        FitModel { a: t[0].exp(), b: t[1].exp(), c: t[2].exp(), p: t[3], q: t[4] }
    }
}

/// Free-function form of [`FitModel::evaluate`].
pub fn evaluate_model(model: &FitModel, s: i64) -> Result<f64, FitError> {
    model.evaluate(s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    /// `max |y − m| / y` over the bins used by the fit.
    pub max_relative_error: f64,
    pub interval: (i64, i64),
    pub excluded_region: Option<(i64, i64)>,
    pub bins_used: usize,
    pub iterations: usize,
    pub converged: bool,
    /// `Σ (ln y − ln m)²` at the solution.
    pub log_rss: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("support {0} is outside the model domain (s >= 1)")]
    Domain(i64),
    #[error("invalid model parameters {0:?}")]
    InvalidModel(FitModel),
    #[error("need at least {need} usable bins, got {got}")]
    InsufficientBins { got: usize, need: usize },
    #[error("no convergence after {} iterations", .diagnostics.iterations)]
    NonConvergence { best: FitModel, diagnostics: Box<FitDiagnostics> },
}

/// Observed per-support values. Counts may be fractional when the series is
/// tabulated from a model rather than counted.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CountSeries(BTreeMap<i64, f64>);

impl CountSeries {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, s: i64, y: f64) {
        self.0.insert(s, y);
    }

    /// Value at `s`, zero when absent.
    pub fn get(&self, s: i64) -> f64 {
        self.0.get(&s).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.0.iter().map(|(&s, &y)| (s, y))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn min_support(&self) -> Option<i64> {
        self.0.keys().next().copied()
    }

    pub fn max_support(&self) -> Option<i64> {
        self.0.keys().next_back().copied()
    }

    pub fn scaled(&self, k: f64) -> CountSeries {
        self.iter().map(|(s, y)| (s, y * k)).collect()
    }

    /// Tabulates a model over `[lo, hi]`.
    pub fn from_model(model: &FitModel, lo: i64, hi: i64) -> CountSeries {
        (lo.max(1)..=hi).map(|s| (s, model.value_at((s - 1) as f64))).collect()
    }

    /// Reads `support,count` rows where counts may be fractional. A
    /// non-numeric first line is skipped as a header; repeated supports add up.
    pub fn read_csv<R: Read>(mut r: R) -> io::Result<CountSeries> {
        let mut text = String::new();
        r.read_to_string(&mut text)?;
        let mut out = CountSeries::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let parsed = line
                .split_once(',')
                .and_then(|(s, y)| Some((s.trim().parse::<i64>().ok()?, y.trim().parse::<f64>().ok()?)));
            match parsed {
                Some((s, y)) if y.is_finite() && y >= 0.0 => {
                    let prev = out.get(s);
                    out.insert(s, prev + y);
                }
                None if i == 0 => continue,
                _ => {
                    return Err(io::Error::new(
                        io::ErrorKind::InvalidData,
                        format!("line {}: expected support,count", i + 1),
                    ))
                }
            }
        }
        Ok(out)
    }

    /// Smallest support at which the cumulative share of the total reaches
    /// `coverage`.
    pub fn coverage_support(&self, coverage: f64) -> Option<i64> {
        let total: f64 = self.0.values().sum();
        let mut acc = 0.0;
        for (s, y) in self.iter() {
            acc += y;
            if acc >= coverage * total {
                return Some(s);
            }
        }
        self.max_support()
    }
}

impl FromIterator<(i64, f64)> for CountSeries {
    fn from_iter<I: IntoIterator<Item = (i64, f64)>>(iter: I) -> Self {
        CountSeries(iter.into_iter().collect())
    }
}

impl From<&SparseHistogram> for CountSeries {
    fn from(h: &SparseHistogram) -> Self {
        h.iter().map(|(s, c)| (s, c as f64)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    /// Inclusive support interval to fit; defaults to the whole series.
    pub interval: Option<(i64, i64)>,
    /// Inclusive support region left out of the fit.
    pub exclude: Option<(i64, i64)>,
    pub init: Option<FitModel>,
    pub max_iterations: usize,
    /// Convergence threshold on the relative parameter change per step, and
    /// on the relative cost reduction over two consecutive steps.
    pub tolerance: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { interval: None, exclude: None, init: None, max_iterations: 500, tolerance: 1e-9 }
    }
}

const N_PARAMS: usize = 5;

/// Fewest positive bins a fit accepts.
pub const MIN_FIT_BINS: usize = N_PARAMS + 1;

struct Problem {
    /// (x = s − 1, ln y)
    points: Vec<(f64, f64)>,
}

impl Problem {
    fn residuals(&self, t: &[f64; 5], out: &mut Vec<f64>) -> f64 {
        let (b, c) = (t[1].exp(), t[2].exp());
        out.clear();
        let mut cost = 0.0;
        for &(x, ln_y) in &self.points {
            let d = if x == 0.0 { 1.0 } else { 1.0 + b * x.powf(t[3]) + c * x.powf(t[4]) };
            let r = ln_y - t[0] + d.ln();
            cost += r * r;
            out.push(r);
        }
        cost
    }

    /// Normal-equation pieces `JᵀJ` and `Jᵀr`.
    fn normal_equations(&self, t: &[f64; 5], r: &[f64]) -> ([[f64; 5]; 5], [f64; 5]) {
        let (b, c) = (t[1].exp(), t[2].exp());
        let mut jtj = [[0.0; 5]; 5];
        let mut jtr = [0.0; 5];
        for (&(x, _), &ri) in self.points.iter().zip(r) {
            let row = if x == 0.0 {
                [-1.0, 0.0, 0.0, 0.0, 0.0]
            } else {
                let (bp, cq) = (b * x.powf(t[3]), c * x.powf(t[4]));
                let d = 1.0 + bp + cq;
                let lx = x.ln();
                [-1.0, bp / d, cq / d, bp * lx / d, cq * lx / d]
            };
            for i in 0..N_PARAMS {
                jtr[i] += row[i] * ri;
                for j in 0..=i {
                    jtj[i][j] += row[i] * row[j];
                }
            }
        }
        for i in 0..N_PARAMS {
            for j in i + 1..N_PARAMS {
                jtj[i][j] = jtj[j][i];
            }
        }
        (jtj, jtr)
    }
}

/// Gaussian elimination with partial pivoting on a 5×5 system.
fn solve5(mut m: [[f64; 5]; 5], mut v: [f64; 5]) -> Option<[f64; 5]> {
    for col in 0..N_PARAMS {
        let pivot = (col..N_PARAMS).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[pivot][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, pivot);
        v.swap(col, pivot);
        for row in col + 1..N_PARAMS {
            let f = m[row][col] / m[col][col];
            for k in col..N_PARAMS {
                m[row][k] -= f * m[col][k];
            }
            v[row] -= f * v[col];
        }
    }
    let mut x = [0.0; 5];
    for row in (0..N_PARAMS).rev() {
        let s: f64 = (row + 1..N_PARAMS).map(|k| m[row][k] * x[k]).sum();
        x[row] = (v[row] - s) / m[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

fn in_region(s: i64, region: Option<(i64, i64)>) -> bool {
    region.is_some_and(|(lo, hi)| lo <= s && s <= hi)
}

/// Starting point: amplitude from the first bin, the exponents near their
/// usual values, and `c`, `b` matched to the observed denominator at a
/// mid-range and the last point.
fn initial_guess(points: &[(i64, f64)]) -> FitModel {
    let (q, p) = (1.5, 2.8);
    let a = points.iter().find(|&&(s, _)| s == 1).map_or(points[0].1, |&(_, y)| y);
    let denominators: Vec<(f64, f64)> = points
        .iter()
        .filter(|&&(s, _)| s > 1)
        .map(|&(s, y)| ((s - 1) as f64, a / y - 1.0))
        .collect();
    let (x_lo, x_hi) = match (denominators.first(), denominators.last()) {
        (Some(f), Some(l)) => (f.0, l.0),
        _ => return FitModel { a, b: 1e-4, p, c: 0.1, q },
    };
    let mid = (x_lo * x_hi).sqrt();
    let pick = |target: f64| {
        denominators
            .iter()
            .filter(|d| d.1 > 0.0)
            .min_by(|u, v| (u.0.ln() - target.ln()).abs().total_cmp(&(v.0.ln() - target.ln()).abs()))
            .copied()
    };
    let c = pick(mid).map_or(0.1, |(x, d)| d / x.powf(q)).max(1e-12);
    let b = pick(x_hi)
        .map(|(x, d)| (d - c * x.powf(q)).max(1e-3 * d) / x.powf(p))
        .unwrap_or(1e-4)
        .max(1e-300);
    FitModel { a, b, p, c, q }
}

/// Fits the model to the positive bins of `series` inside the fit interval
/// and outside the excluded region.
pub fn fit(series: &CountSeries, options: &FitOptions) -> Result<(FitModel, FitDiagnostics), FitError> {
    let interval = options.interval.unwrap_or((
        series.min_support().unwrap_or(1).max(1),
        series.max_support().unwrap_or(1),
    ));
    let used: Vec<(i64, f64)> = series
        .iter()
        .filter(|&(s, y)| {
            s >= 1 && s >= interval.0 && s <= interval.1 && y > 0.0 && !in_region(s, options.exclude)
        })
        .collect();
    if used.len() < MIN_FIT_BINS {
        return Err(FitError::InsufficientBins { got: used.len(), need: MIN_FIT_BINS });
    }

    let init = options.init.filter(FitModel::is_valid).unwrap_or_else(|| initial_guess(&used));
    let problem = Problem { points: used.iter().map(|&(s, y)| ((s - 1) as f64, y.ln())).collect() };

    let mut theta = init.to_params();
    let mut r = Vec::with_capacity(used.len());
    let mut trial_r = Vec::with_capacity(used.len());
    let mut cost = problem.residuals(&theta, &mut r);
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    // Consecutive accepted steps that barely lowered the cost.
    let mut stalled = 0;

    while iterations < options.max_iterations {
        iterations += 1;
        let (jtj, jtr) = problem.normal_equations(&theta, &r);
        let scale_floor = (0..N_PARAMS).map(|i| jtj[i][i]).fold(0.0, f64::max) * 1e-15;
        loop {
            let mut damped = jtj;
            for (i, row) in damped.iter_mut().enumerate() {
                row[i] += lambda * jtj[i][i].max(scale_floor);
            }
            let neg = jtr.map(|g| -g);
            let step = solve5(damped, neg);
            let Some(step) = step else {
                lambda *= 10.0;
                if lambda > 1e30 {
                    break;
                }
                continue;
            };
            let mut trial = theta;
            for i in 0..N_PARAMS {
                trial[i] += step[i];
            }
            let rel = step[0]
                .abs()
                .max(step[1].abs())
                .max(step[2].abs())
                .max((step[3] / theta[3]).abs())
                .max((step[4] / theta[4]).abs());
            let candidate = FitModel::from_params(&trial);
            let trial_cost = if candidate.is_valid() { problem.residuals(&trial, &mut trial_r) } else { f64::INFINITY };
            if trial_cost.is_finite() && trial_cost <= cost {
                stalled = if cost - trial_cost <= options.tolerance * cost { stalled + 1 } else { 0 };
                theta = trial;
                cost = trial_cost;
                std::mem::swap(&mut r, &mut trial_r);
                lambda = (lambda / 10.0).max(1e-15);
                if rel < options.tolerance || stalled >= 2 {
                    converged = true;
                }
                break;
            }
            if rel < options.tolerance {
                // No downhill step even at this resolution: stationary point.
                converged = true;
                break;
            }
            lambda *= 10.0;
            if lambda > 1e30 {
                converged = true;
                break;
            }
        }
        if converged {
            break;
        }
    }

    let model = FitModel::from_params(&theta);
    let max_relative_error = used
        .iter()
        .map(|&(s, y)| ((y - model.value_at((s - 1) as f64)) / y).abs())
        .fold(0.0, f64::max);
    let diagnostics = FitDiagnostics {
        max_relative_error,
        interval,
        excluded_region: options.exclude,
        bins_used: used.len(),
        iterations,
        converged,
        log_rss: cost,
    };
    if converged {
        Ok((model, diagnostics))
    } else {
        Err(FitError::NonConvergence { best: model, diagnostics: Box::new(diagnostics) })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectOptions {
    /// Smoothed relative residual above which a support counts as anomalous.
    pub threshold: f64,
    /// Minimum number of consecutive anomalous supports.
    pub min_run: usize,
    /// Width of the centered moving average.
    pub window: usize,
    /// Supports scanned; defaults to the series' range.
    pub interval: Option<(i64, i64)>,
}

impl Default for DetectOptions {
    fn default() -> Self {
        Self { threshold: 0.2, min_run: 5, window: 5, interval: None }
    }
}

/// Relative residual `(y − m) / m`, smoothed with a centered moving average
/// truncated at the interval edges.
pub fn smoothed_relative_residuals(
    series: &CountSeries,
    model: &FitModel,
    lo: i64,
    hi: i64,
    window: usize,
) -> Vec<(i64, f64)> {
    let lo = lo.max(1);
    if hi < lo {
        return Vec::new();
    }
    let raw: Vec<f64> = (lo..=hi)
        .map(|s| {
            let m = model.value_at((s - 1) as f64);
            (series.get(s) - m) / m
        })
        .collect();
    let half = window / 2;
    (0..raw.len())
        .map(|i| {
            let from = i.saturating_sub(half);
            let to = (i + half).min(raw.len() - 1);
            let slice = &raw[from..=to];
            (lo + i as i64, slice.iter().sum::<f64>() / slice.len() as f64)
        })
        .collect()
}

/// Finds the maximal contiguous run of supports where the smoothed relative
/// residual exceeds the threshold. Among qualifying runs the longest wins;
/// equal lengths are decided by the summed smoothed residual.
pub fn detect_anomaly_region(series: &CountSeries, model: &FitModel, options: &DetectOptions) -> Option<(i64, i64)> {
    let (lo, hi) = options
        .interval
        .or_else(|| Some((series.min_support()?, series.max_support()?)))?;
    let smoothed = smoothed_relative_residuals(series, model, lo, hi, options.window);

    let mut best: Option<((i64, i64), (usize, f64))> = None;
    let mut consider = |start: i64, end: i64| {
        let len = (end - start + 1) as usize;
        if len < options.min_run {
            return;
        }
        let mass: f64 = smoothed.iter().filter(|&&(s, _)| start <= s && s <= end).map(|&(_, v)| v).sum();
        let better = best.map_or(true, |(_, (l, m))| len > l || (len == l && mass > m));
        if better {
            best = Some(((start, end), (len, mass)));
        }
    };
    let mut run_start = None;
    for &(s, v) in &smoothed {
        match (v > options.threshold, run_start) {
            (true, None) => run_start = Some(s),
            (false, Some(start)) => {
                consider(start, s - 1);
                run_start = None;
            }
            _ => {}
        }
    }
    if let (Some(start), Some(&(end, _))) = (run_start, smoothed.last()) {
        consider(start, end);
    }
    best.map(|(r, _)| r)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AnomalyReport {
    pub region: Option<(i64, i64)>,
    /// `y − m` per support in the region.
    pub residuals: BTreeMap<i64, f64>,
    pub excess_estimate: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
}

/// Sums the positive part of `y − m` over the region. The lower bound removes
/// the fit's relative error envelope `ε·m` from every bin, clamped at zero.
pub fn estimate_excess(
    series: &CountSeries,
    model: &FitModel,
    region: Option<(i64, i64)>,
    relative_error: f64,
) -> AnomalyReport {
    let Some((lo, hi)) = region.filter(|&(lo, hi)| lo <= hi) else {
        return AnomalyReport::default();
    };
    let lo = lo.max(1);
    let mut residuals = BTreeMap::new();
    let mut excess = 0.0;
    let mut envelope = 0.0;
    for s in lo..=hi {
        let m = model.value_at((s - 1) as f64);
        let d = series.get(s) - m;
        residuals.insert(s, d);
        excess += d.max(0.0);
        envelope += relative_error * m;
    }
    AnomalyReport {
        region: Some((lo, hi)),
        residuals,
        excess_estimate: excess,
        lower_bound: (excess - envelope).max(0.0),
        upper_bound: excess,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisOptions {
    pub fit: FitOptions,
    pub detect: DetectOptions,
    /// Used for the default fit interval: the upper end is the support where
    /// this share of all accounts is reached.
    pub coverage: f64,
    /// Rounds of fit → detect → refit-with-exclusion when no region is given.
    pub refinements: usize,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self { fit: FitOptions::default(), detect: DetectOptions::default(), coverage: 0.98, refinements: 4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerformanceAnalysis {
    pub model: FitModel,
    pub diagnostics: FitDiagnostics,
    pub anomaly: AnomalyReport,
}

/// Fit, detect and estimate in one go. Without an explicit exclusion the
/// region is found iteratively: fit everything, detect, refit without the
/// detected region, until the region stops moving.
pub fn analyze_performance(series: &CountSeries, options: &AnalysisOptions) -> Result<PerformanceAnalysis, FitError> {
    let mut fit_opts = options.fit.clone();
    if fit_opts.interval.is_none() {
        let lo = series.min_support().unwrap_or(1).max(1);
        let hi = series.coverage_support(options.coverage).unwrap_or(lo);
        fit_opts.interval = Some((lo, hi));
    }
    let detect = DetectOptions { interval: options.detect.interval.or(fit_opts.interval), ..options.detect };

    let (mut model, mut diagnostics) = fit(series, &fit_opts)?;
    let mut region = detect_anomaly_region(series, &model, &detect);
    if options.fit.exclude.is_none() {
        for _ in 0..options.refinements {
            let Some(r) = region else { break };
            let refit_opts = FitOptions { exclude: Some(r), init: Some(model), ..fit_opts.clone() };
            let (m, d) = fit(series, &refit_opts)?;
            let next = detect_anomaly_region(series, &m, &detect);
            model = m;
            diagnostics = d;
            if next == region {
                break;
            }
            region = next;
        }
    }
    let anomaly = estimate_excess(series, &model, region, diagnostics.max_relative_error);
    Ok(PerformanceAnalysis { model, diagnostics, anomaly })
}

/// `support,observed,model,residual` over `[lo, hi]`.
pub fn write_residuals_csv<W: Write>(
    mut w: W,
    series: &CountSeries,
    model: &FitModel,
    lo: i64,
    hi: i64,
    delimiter: char,
) -> io::Result<()> {
    let d = delimiter;
    writeln!(w, "support{d}observed{d}model{d}residual")?;
    for s in lo.max(1)..=hi {
        let y = series.get(s);
        let m = model.value_at((s - 1) as f64);
        writeln!(w, "{s}{d}{y}{d}{m}{d}{}", y - m)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const R: FitModel = FitModel::REFERENCE;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn model_values() {
        assert_eq!(R.evaluate(1).unwrap(), 295_376.0);
        // (S−1)^p = 1 for both terms at S = 2.
        assert!(rel(R.evaluate(2).unwrap(), 295_376.0 / 1.1001) < 1e-15);
        assert_eq!(R.evaluate(0), Err(FitError::Domain(0)));
        let mut prev = f64::INFINITY;
        for s in 1..=2000 {
            let v = R.evaluate(s).unwrap();
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn invalid_models_rejected() {
        assert!(FitModel::new(1.0, 1.0, 1.0, 1.0, 2.0).is_err());
        assert!(FitModel::new(-1.0, 1.0, 2.0, 1.0, 1.0).is_err());
        assert!(FitModel::new(1.0, 0.0, 2.0, 0.0, 1.0).is_ok());
    }

    #[test]
    fn exact_series_recovers_reference() {
        let series = CountSeries::from_model(&R, 1, 245);
        let (m, d) = fit(&series, &FitOptions::default()).unwrap();
        for (got, want) in [(m.a, R.a), (m.b, R.b), (m.p, R.p), (m.c, R.c), (m.q, R.q)] {
            assert!(rel(got, want) < 1e-3, "{m:?}");
        }
        assert!(d.max_relative_error < 1e-6, "{d:?}");
    }

    #[test]
    fn too_few_bins() {
        let series = CountSeries::from_model(&R, 1, 5);
        assert_eq!(
            fit(&series, &FitOptions::default()).unwrap_err(),
            FitError::InsufficientBins { got: 5, need: 6 }
        );
        let series = CountSeries::from_model(&R, 1, 20);
        let opts = FitOptions { exclude: Some((3, 17)), ..Default::default() };
        assert!(matches!(fit(&series, &opts), Err(FitError::InsufficientBins { got: 5, .. })));
    }

    #[test]
    fn iteration_cap_reports_best_so_far() {
        let series = CountSeries::from_model(&R, 1, 245);
        let opts = FitOptions { max_iterations: 1, ..Default::default() };
        match fit(&series, &opts) {
            Err(FitError::NonConvergence { best, diagnostics }) => {
                assert!(best.is_valid());
                assert_eq!(diagnostics.iterations, 1);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn amplitude_scaling_is_equivariant() {
        let series = CountSeries::from_model(&R, 1, 245);
        let (m1, _) = fit(&series, &FitOptions::default()).unwrap();
        let (m2, _) = fit(&series.scaled(7.5), &FitOptions::default()).unwrap();
        assert!(rel(m2.a, 7.5 * m1.a) < 1e-3);
        for (x, y) in [(m1.b, m2.b), (m1.c, m2.c), (m1.p, m2.p), (m1.q, m2.q)] {
            assert!(rel(y, x) < 1e-3);
        }
    }

    #[test]
    fn detection_on_clean_and_bumped_series() {
        let clean = CountSeries::from_model(&R, 1, 400);
        assert_eq!(detect_anomaly_region(&clean, &R, &DetectOptions::default()), None);

        let mut bumped = clean.clone();
        for s in 85..=160 {
            bumped.insert(s, bumped.get(s) * 1.5);
        }
        let (lo, hi) = detect_anomaly_region(&bumped, &R, &DetectOptions::default()).unwrap();
        assert!((80..=90).contains(&lo) && (155..=165).contains(&hi), "{lo}..{hi}");
    }

    #[test]
    fn excess_of_exact_bump() {
        let mut series = CountSeries::from_model(&R, 1, 400);
        // 1000 extra accounts: 13 per support on [85, 160] (76 bins) minus the remainder.
        let mut left = 1000.0;
        for s in 85..=160 {
            let add = if s == 160 { left } else { 13.0 };
            left -= add;
            series.insert(s, series.get(s) + add);
        }
        let report = estimate_excess(&series, &R, Some((85, 160)), 0.0);
        assert!((report.excess_estimate - 1000.0).abs() < 1e-6);
        assert_eq!(report.residuals.len(), 76);
        assert!(report.lower_bound <= report.excess_estimate && report.excess_estimate <= report.upper_bound);

        let empty = estimate_excess(&series, &R, None, 0.1);
        assert_eq!(empty, AnomalyReport::default());
    }

    #[test]
    fn csv_reader_sums_repeats_and_rejects_garbage() {
        let series = CountSeries::read_csv("support,count\n1,2.5\n3,4\n1,0.5\n\n".as_bytes()).unwrap();
        assert_eq!(series.get(1), 3.0);
        assert_eq!(series.get(3), 4.0);
        assert_eq!(series.len(), 2);
        assert!(CountSeries::read_csv("1,2\nx,3\n".as_bytes()).is_err());
        assert!(CountSeries::read_csv("1,-2\n".as_bytes()).is_err());
        assert!(CountSeries::read_csv("1,NaN\n".as_bytes()).is_err());
    }
}
