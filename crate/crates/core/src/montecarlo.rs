//! Simulation driver: estimator bias and RMSE, critical-value calibration,
//! power, average power and the optimal window.
//!
//! Replication `i` always draws from `substream(seed, tag, i)`, where the tag
//! names the purpose (null calibration, a given alternative, ...). Results
//! are collected in replication order and reduced sequentially, so reports
//! are bit-identical for any worker count.
//!
//! A replication whose dataset yields a degenerate spacing, breakpoint or
//! variance for any window is redrawn from the same stream and counted.

use std::collections::BTreeMap;
use std::ops::RangeInclusive;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::Distribution;
use crate::entropy::{self, Estimator};
use crate::error::{Error, Result};
use crate::gof::{Dataset, Scheme, StatisticSpec, TestKind};
use crate::sampling::{draw_rss, draw_srs, sort_f64, stream_tag, substream, RandomStream};

/// Maximum tolerated share of degenerate replications.
pub const MAX_DEGENERATE_FRACTION: f64 = 0.001;

const MAX_REDRAWS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloConfig {
    pub reps: usize,
    pub master_seed: u64,
    pub k: usize,
    pub r: usize,
    pub m_range: RangeInclusive<usize>,
    pub alpha_levels: Vec<f64>,
    /// Worker threads; 0 uses the global rayon pool.
    #[serde(default)]
    pub workers: usize,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        MonteCarloConfig {
            reps: 10_000,
            master_seed: 20_240_917,
            k: 10,
            r: 1,
            m_range: 1..=5,
            alpha_levels: vec![0.1, 0.05, 0.025, 0.01],
            workers: 0,
        }
    }
}

impl MonteCarloConfig {
    pub fn n(&self) -> usize {
        self.k * self.r
    }

    pub fn windows(&self) -> Vec<usize> {
        self.m_range.clone().collect()
    }

    /// Checks the basic invariants and that every window is admissible for
    /// an estimator whose bound is `max_window`.
    pub fn validate(&self, max_window: usize) -> Result<()> {
        let bad = |key: &str, msg: String| Err(Error::Config { key: key.into(), line: None, msg });
        if self.reps < 100 {
            return bad("reps", format!("must be at least 100, got {}", self.reps));
        }
        if self.k < 2 {
            return bad("k", format!("set size must be at least 2, got {}", self.k));
        }
        if self.r < 1 {
            return bad("r", "cycle count must be positive".into());
        }
        let (lo, hi) = (*self.m_range.start(), *self.m_range.end());
        if lo < 1 || hi < lo || hi > max_window {
            return bad("m_range", format!("{lo}-{hi} must lie within 1-{max_window}"));
        }
        if let Some(a) = self.alpha_levels.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
            return bad("alphas", format!("level {a} is outside (0, 1)"));
        }
        Ok(())
    }

    fn run<T: Send>(&self, job: impl FnOnce() -> T + Send) -> Result<T> {
        if self.workers == 0 {
            return Ok(job());
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| Error::Io(e.to_string()))?;
        Ok(pool.install(job))
    }
}

/// How datasets are generated for a replication.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Design {
    pub scheme: Scheme,
    pub k: usize,
    pub r: usize,
}

impl Design {
    pub fn draw(&self, dist: &Distribution, rng: &mut RandomStream) -> Dataset {
        match self.scheme {
            Scheme::Srs => Dataset::Srs(draw_srs(dist, self.k * self.r, rng)),
            Scheme::Rss => Dataset::Rss(draw_rss(dist, self.k, self.r, rng)),
        }
    }
}

/// Replication outputs in index order plus the number of redraws.
struct Simulated<T> {
    values: Vec<T>,
    degenerate: usize,
}

fn simulate<T, F>(cfg: &MonteCarloConfig, tag: u64, job: F) -> Result<Simulated<T>>
where
    T: Send,
    F: Fn(&mut RandomStream) -> Result<T> + Sync,
{
    let seed = cfg.master_seed;
    let reps = cfg.reps;
    let outcomes: Vec<Result<(T, usize)>> = cfg.run(|| {
        (0..reps as u64)
            .into_par_iter()
            .map(|i| {
                let mut rng = substream(seed, tag, i);
                let mut redraws = 0;
                loop {
                    match job(&mut rng) {
                        Ok(v) => return Ok((v, redraws)),
                        Err(e) if e.is_degenerate() && redraws < MAX_REDRAWS => redraws += 1,
                        Err(e) => return Err(e),
                    }
                }
            })
            .collect()
    })?;
    let mut values = Vec::with_capacity(reps);
    let mut degenerate = 0;
    for o in outcomes {
        let (v, d) = o?;
        values.push(v);
        degenerate += d;
    }
    Ok(Simulated { values, degenerate })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReportKind {
    BiasRmse,
    CriticalValues,
    Power,
    AveragePower,
    MaxPower,
    OptimalM,
}

/// One estimated quantity with its Monte Carlo standard error.
/// Unavailable cells carry `NaN`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub name: &'static str,
    pub value: f64,
    pub stderr: f64,
}

impl Cell {
    pub fn new(name: &'static str, value: f64, stderr: f64) -> Self {
        Cell { name, value, stderr }
    }

    pub fn unavailable(name: &'static str) -> Self {
        Cell { name, value: f64::NAN, stderr: f64::NAN }
    }

    pub fn is_available(&self) -> bool {
        !self.value.is_nan()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub n: usize,
    pub k: usize,
    pub r: usize,
    pub m: Option<usize>,
    pub alpha: Option<f64>,
    pub distribution: String,
    pub cells: Vec<Cell>,
    /// Windows attaining an optimum (ties within Monte Carlo error).
    pub m_set: Option<Vec<usize>>,
}

impl ReportRow {
    pub fn cell(&self, name: &str) -> Option<&Cell> {
        self.cells.iter().find(|c| c.name == name)
    }

    fn sort_key(&self) -> (usize, String, usize, i64) {
        // larger alpha first, matching the table layout
        let alpha = self.alpha.map(|a| -(a * 1e9).round() as i64).unwrap_or(0);
        (self.n, self.distribution.clone(), self.m.unwrap_or(0), alpha)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloReport {
    pub kind: ReportKind,
    /// Statistic or estimator description.
    pub label: String,
    pub rows: Vec<ReportRow>,
    pub config: MonteCarloConfig,
    /// Replications redrawn because of degenerate data.
    pub degenerate: usize,
    /// Total datasets generated, including redraws.
    pub attempts: usize,
}

impl MonteCarloReport {
    fn new(kind: ReportKind, label: String, mut rows: Vec<ReportRow>, config: &MonteCarloConfig, degenerate: usize, attempts: usize) -> Result<Self> {
        rows.sort_by_key(ReportRow::sort_key);
        let report = MonteCarloReport { kind, label, rows, config: config.clone(), degenerate, attempts };
        report.validate()?;
        Ok(report)
    }

    pub fn degenerate_fraction(&self) -> f64 {
        if self.attempts == 0 {
            0.0
        } else {
            self.degenerate as f64 / self.attempts as f64
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.degenerate_fraction() > MAX_DEGENERATE_FRACTION {
            return Err(Error::Validation(format!(
                "{} of {} replications were degenerate ({:.3}%), above the {}% limit",
                self.degenerate,
                self.attempts,
                100.0 * self.degenerate_fraction(),
                100.0 * MAX_DEGENERATE_FRACTION
            )));
        }
        Ok(())
    }

    /// Row for window `m`, level `alpha` and distribution label, where given.
    pub fn find(&self, m: Option<usize>, alpha: Option<f64>, distribution: Option<&str>) -> Option<&ReportRow> {
        self.rows.iter().find(|row| {
            m.is_none_or(|m| row.m == Some(m))
                && alpha.is_none_or(|a| row.alpha.is_some_and(|ra| (ra - a).abs() < 1e-12))
                && distribution.is_none_or(|d| row.distribution == d)
        })
    }
}

/// Two estimates are tied when they differ by at most two standard errors
/// of their difference.
pub fn within_mc_error(a: &Cell, b: &Cell) -> bool {
    let tol = 2.0 * (a.stderr.powi(2) + b.stderr.powi(2)).sqrt();
    (a.value - b.value).abs() <= tol
}

fn mean_sd(values: impl Iterator<Item = f64> + Clone) -> (f64, f64, usize) {
    let (mut n, mut sum) = (0usize, 0.0);
    for v in values.clone() {
        n += 1;
        sum += v;
    }
    let mean = sum / n as f64;
    let ss: f64 = values.map(|v| (v - mean).powi(2)).sum();
    let sd = if n > 1 { (ss / (n - 1) as f64).sqrt() } else { 0.0 };
    (mean, sd, n)
}

fn entropy_profile(data: &Dataset, estimator: Estimator, windows: &[usize]) -> Result<Vec<f64>> {
    match (estimator, data) {
        (Estimator::RssPerCycleH2, Dataset::Rss(rss)) => {
            let mut buf = rss.pooled().to_vec();
            buf.chunks_exact_mut(rss.k()).for_each(sort_f64);
            windows.iter().map(|&m| entropy::per_cycle_sorted(buf.chunks_exact(rss.k()), m)).collect()
        }
        (Estimator::RssPerCycleH2, Dataset::Srs(_)) => {
            Err(Error::InvalidParameter("h2 needs ranked set data".into()))
        }
        (_, data) => {
            let mut sorted = match data {
                Dataset::Srs(s) => s.values().to_vec(),
                Dataset::Rss(r) => r.pooled().to_vec(),
            };
            sort_f64(&mut sorted);
            windows
                .iter()
                .map(|&m| match estimator {
                    Estimator::Vasicek => entropy::vasicek_sorted(&sorted, m),
                    _ => entropy::ebrahimi_sorted(&sorted, m),
                })
                .collect()
        }
    }
}

/// Bias and RMSE of an entropy estimator for every window in `cfg.m_range`.
///
/// SRS estimators (`vasicek`, `ebrahimi`) are applied to simple random
/// samples of size `k * r`; `h1`/`h2` to ranked set samples.
pub fn estimate_bias_rmse(
    dist: &Distribution,
    scheme: Scheme,
    estimator: Estimator,
    cfg: &MonteCarloConfig,
) -> Result<MonteCarloReport> {
    if estimator.is_rss() != (scheme == Scheme::Rss) {
        return Err(Error::InvalidParameter(format!(
            "estimator {estimator} does not apply to {scheme} data"
        )));
    }
    cfg.validate(estimator.max_window(cfg.k, cfg.r))?;
    let label = format!("{scheme}/{estimator}");
    estimate_bias_rmse_with(dist, scheme, cfg, &label, |data, windows| {
        entropy_profile(data, estimator, windows)
    })
}

/// Bias and RMSE of an arbitrary estimator `f(dataset, windows)`, which must
/// return one estimate per window.
pub fn estimate_bias_rmse_with<F>(
    dist: &Distribution,
    scheme: Scheme,
    cfg: &MonteCarloConfig,
    label: &str,
    f: F,
) -> Result<MonteCarloReport>
where
    F: Fn(&Dataset, &[usize]) -> Result<Vec<f64>> + Sync,
{
    let truth = dist.true_entropy()?;
    let windows = cfg.windows();
    let design = Design { scheme, k: cfg.k, r: cfg.r };
    let tag = stream_tag(&format!("bias:{scheme}:{dist}"));
    let sim = simulate(cfg, tag, |rng| f(&design.draw(dist, rng), &windows))?;
    let reps = cfg.reps as f64;
    let rows = windows
        .iter()
        .enumerate()
        .map(|(idx, &m)| {
            let est = sim.values.iter().map(|v| v[idx]);
            let (mean, sd, _) = mean_sd(est.clone());
            let (mse, sd_sq, _) = mean_sd(est.map(|h| (h - truth).powi(2)));
            let rmse = mse.sqrt();
            let rmse_se = if rmse > 0.0 { sd_sq / reps.sqrt() / (2.0 * rmse) } else { 0.0 };
            let bias = mean - truth;
            ReportRow {
                n: cfg.n(),
                k: cfg.k,
                r: cfg.r,
                m: Some(m),
                alpha: None,
                distribution: dist.to_string(),
                cells: vec![
                    Cell::new("bias", bias, sd / reps.sqrt()),
                    Cell::new("rmse", rmse, rmse_se),
                ],
                m_set: None,
            }
        })
        .collect();
    MonteCarloReport::new(ReportKind::BiasRmse, label.to_string(), rows, cfg, sim.degenerate, cfg.reps + sim.degenerate)
}

/// Minimum RMSE and minimum absolute bias over windows.
#[derive(Debug, Clone, PartialEq)]
pub struct MinSummary {
    pub mrmse: f64,
    /// Window attaining the minimum followed by every window tied with it
    /// within Monte Carlo error, ascending.
    pub m_at_mrmse: Vec<usize>,
    pub argmin_rmse: usize,
    pub mab: f64,
    pub m_at_mab: Vec<usize>,
    pub argmin_abs_bias: usize,
}

pub fn summarize_min(report: &MonteCarloReport) -> Result<MinSummary> {
    if report.kind != ReportKind::BiasRmse || report.rows.is_empty() {
        return Err(Error::InvalidParameter("summarize_min needs a non-empty bias/RMSE report".into()));
    }
    let pick = |name: &str, abs: bool| -> (f64, usize, Vec<usize>) {
        let cells: Vec<(usize, Cell)> = report
            .rows
            .iter()
            .map(|row| {
                let mut c = *row.cell(name).expect("bias/rmse cells");
                if abs {
                    c.value = c.value.abs();
                }
                (row.m.unwrap_or(0), c)
            })
            .collect();
        let (best_m, best) = cells
            .iter()
            .fold(cells[0], |acc, &(m, c)| if c.value < acc.1.value { (m, c) } else { acc });
        let ties = cells.iter().filter(|(_, c)| within_mc_error(c, &best)).map(|(m, _)| *m).collect();
        (best.value, best_m, ties)
    };
    let (mrmse, argmin_rmse, m_at_mrmse) = pick("rmse", false);
    let (mab, argmin_abs_bias, m_at_mab) = pick("bias", true);
    Ok(MinSummary { mrmse, m_at_mrmse, argmin_rmse, mab, m_at_mab, argmin_abs_bias })
}

/// Null law used for calibration. Both tests are invariant under the
/// relevant scale or affine maps, so the unit member of the family suffices.
pub fn null_distribution(test: TestKind) -> Distribution {
    match test {
        TestKind::Exponentiality => Distribution::standard_exponential(),
        TestKind::Normality => Distribution::standard_normal(),
    }
}

/// Index (zero-based) of the `ceil((1 - alpha) * reps)`-th order statistic.
pub fn upper_quantile_index(reps: usize, alpha: f64) -> usize {
    // guard against (1 - 0.05) * 100 = 95.00000000000001
    let rank = ((1.0 - alpha) * reps as f64 - 1e-9).ceil().max(1.0) as usize;
    rank.min(reps) - 1
}

/// Upper empirical quantile of ascending `sorted` with no interpolation,
/// plus a distribution-free standard error from the neighbouring order
/// statistics `±sqrt(reps * alpha * (1 - alpha))` ranks away.
pub fn upper_quantile(sorted: &[f64], alpha: f64) -> (f64, f64) {
    let reps = sorted.len();
    let j = upper_quantile_index(reps, alpha);
    let d = (reps as f64 * alpha * (1.0 - alpha)).sqrt().ceil() as usize;
    let lo = j.saturating_sub(d);
    let hi = (j + d).min(reps - 1);
    (sorted[j], (sorted[hi] - sorted[lo]) / 2.0)
}

/// Statistic values for every window, `None` when the spec is unavailable
/// for the design (KL2 with a single cycle).
fn statistic_profiles(
    spec: StatisticSpec,
    dist: &Distribution,
    purpose: &str,
    cfg: &MonteCarloConfig,
) -> Result<Simulated<Vec<f64>>> {
    let windows = cfg.windows();
    let design = Design { scheme: spec.scheme(), k: cfg.k, r: cfg.r };
    let tag = stream_tag(&format!("{purpose}:{spec}:{dist}"));
    simulate(cfg, tag, |rng| {
        let prepared = spec.prepare(&design.draw(dist, rng))?;
        windows.iter().map(|&m| prepared.evaluate(m)).collect()
    })
}

fn statistic_max_window(spec: &StatisticSpec, cfg: &MonteCarloConfig) -> usize {
    match spec.scheme() {
        Scheme::Srs => cfg.n() / 2,
        Scheme::Rss => spec.max_window(cfg.k, cfg.r),
    }
}

fn statistic_label(spec: &StatisticSpec) -> String {
    spec.to_string()
}

/// Critical values `c(m, alpha)` under the null for every window and level.
pub fn calibrate_critical_values(spec: StatisticSpec, cfg: &MonteCarloConfig) -> Result<MonteCarloReport> {
    cfg.validate(statistic_max_window(&spec, cfg))?;
    if cfg.alpha_levels.is_empty() {
        return Err(Error::Config { key: "alphas".into(), line: None, msg: "at least one level required".into() });
    }
    let null = null_distribution(spec.test);
    let windows = cfg.windows();
    let row = |m: usize, alpha: f64, cell: Cell| ReportRow {
        n: cfg.n(),
        k: cfg.k,
        r: cfg.r,
        m: Some(m),
        alpha: Some(alpha),
        distribution: null.to_string(),
        cells: vec![cell],
        m_set: None,
    };
    if !spec.available(cfg.r) {
        let rows = windows
            .iter()
            .flat_map(|&m| cfg.alpha_levels.iter().map(move |&a| (m, a)))
            .map(|(m, a)| row(m, a, Cell::unavailable("critical")))
            .collect();
        return MonteCarloReport::new(ReportKind::CriticalValues, statistic_label(&spec), rows, cfg, 0, 0);
    }
    let sim = statistic_profiles(spec, &null, "null", cfg)?;
    let mut rows = Vec::new();
    for (idx, &m) in windows.iter().enumerate() {
        let mut column: Vec<f64> = sim.values.iter().map(|v| v[idx]).collect();
        sort_f64(&mut column);
        for &alpha in &cfg.alpha_levels {
            let (value, se) = upper_quantile(&column, alpha);
            rows.push(row(m, alpha, Cell::new("critical", value, se)));
        }
    }
    MonteCarloReport::new(ReportKind::CriticalValues, statistic_label(&spec), rows, cfg, sim.degenerate, cfg.reps + sim.degenerate)
}

/// Critical values indexed by window and level.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CriticalTable {
    entries: BTreeMap<(usize, u64), f64>,
}

fn alpha_key(alpha: f64) -> u64 {
    (alpha * 1e9).round() as u64
}

impl CriticalTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, m: usize, alpha: f64, value: f64) {
        self.entries.insert((m, alpha_key(alpha)), value);
    }

    pub fn get(&self, m: usize, alpha: f64) -> Option<f64> {
        self.entries.get(&(m, alpha_key(alpha))).copied()
    }

    pub fn from_report(report: &MonteCarloReport) -> Result<Self> {
        if report.kind != ReportKind::CriticalValues {
            return Err(Error::InvalidParameter("not a critical-value report".into()));
        }
        let mut table = CriticalTable::new();
        for row in &report.rows {
            if let (Some(m), Some(a), Some(c)) = (row.m, row.alpha, row.cell("critical")) {
                if c.is_available() {
                    table.insert(m, a, c.value);
                }
            }
        }
        Ok(table)
    }
}

fn bernoulli_se(p: f64, reps: usize) -> f64 {
    (p * (1.0 - p) / reps as f64).sqrt()
}

/// Per-window rejection rates against one alternative, with the level, the
/// critical values used and the redraw count.
fn power_profile(
    spec: StatisticSpec,
    alternative: &Distribution,
    critical: &CriticalTable,
    alpha: f64,
    cfg: &MonteCarloConfig,
) -> Result<(Vec<f64>, usize)> {
    let windows = cfg.windows();
    let crits = windows
        .iter()
        .map(|&m| {
            critical.get(m, alpha).ok_or_else(|| {
                Error::KeyMismatch(format!("no critical value for m={m}, alpha={alpha}"))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let sim = statistic_profiles(spec, alternative, "alt", cfg)?;
    let powers = crits
        .iter()
        .enumerate()
        .map(|(idx, &c)| {
            sim.values.iter().filter(|v| crate::gof::rejects(v[idx], c)).count() as f64 / cfg.reps as f64
        })
        .collect();
    Ok((powers, sim.degenerate))
}

/// Rejection frequency against `alternative` for every window, using the
/// given critical values at level `alpha`.
pub fn estimate_power(
    spec: StatisticSpec,
    alternative: &Distribution,
    critical: &CriticalTable,
    alpha: f64,
    cfg: &MonteCarloConfig,
) -> Result<MonteCarloReport> {
    cfg.validate(statistic_max_window(&spec, cfg))?;
    if !spec.available(cfg.r) {
        return Err(Error::InsufficientCycles(cfg.r));
    }
    let (powers, degenerate) = power_profile(spec, alternative, critical, alpha, cfg)?;
    let rows = cfg
        .windows()
        .into_iter()
        .zip(powers)
        .map(|(m, p)| ReportRow {
            n: cfg.n(),
            k: cfg.k,
            r: cfg.r,
            m: Some(m),
            alpha: Some(alpha),
            distribution: alternative.to_string(),
            cells: vec![Cell::new("power", p, bernoulli_se(p, cfg.reps))],
            m_set: None,
        })
        .collect();
    MonteCarloReport::new(ReportKind::Power, statistic_label(&spec), rows, cfg, degenerate, cfg.reps + degenerate)
}

/// Calibration plus power against every alternative for every window.
#[derive(Debug, Clone)]
pub struct PowerStudy {
    pub spec: StatisticSpec,
    pub alpha: f64,
    pub config: MonteCarloConfig,
    pub critical: CriticalTable,
    pub alternatives: Vec<Distribution>,
    /// `powers[a][w]` is the power against alternative `a` at window `w`.
    pub powers: Vec<Vec<f64>>,
    pub degenerate: usize,
    pub attempts: usize,
}

/// Calibrates critical values at `alpha` and estimates power against each
/// alternative over the whole window range.
pub fn power_study(
    spec: StatisticSpec,
    alternatives: &[Distribution],
    alpha: f64,
    cfg: &MonteCarloConfig,
) -> Result<PowerStudy> {
    if alternatives.is_empty() {
        return Err(Error::Config { key: "alternatives".into(), line: None, msg: "at least one alternative required".into() });
    }
    if !spec.available(cfg.r) {
        return Err(Error::InsufficientCycles(cfg.r));
    }
    let cal_cfg = MonteCarloConfig { alpha_levels: vec![alpha], ..cfg.clone() };
    let calibration = calibrate_critical_values(spec, &cal_cfg)?;
    let critical = CriticalTable::from_report(&calibration)?;
    let mut degenerate = calibration.degenerate;
    let mut attempts = calibration.attempts;
    let mut powers = Vec::with_capacity(alternatives.len());
    for alt in alternatives {
        let (p, d) = power_profile(spec, alt, &critical, alpha, cfg)?;
        degenerate += d;
        attempts += cfg.reps + d;
        powers.push(p);
    }
    let study = PowerStudy {
        spec,
        alpha,
        config: cfg.clone(),
        critical,
        alternatives: alternatives.to_vec(),
        powers,
        degenerate,
        attempts,
    };
    Ok(study)
}

impl PowerStudy {
    fn row(&self, m: Option<usize>, distribution: String, cells: Vec<Cell>, m_set: Option<Vec<usize>>) -> ReportRow {
        ReportRow {
            n: self.config.n(),
            k: self.config.k,
            r: self.config.r,
            m,
            alpha: Some(self.alpha),
            distribution,
            cells,
            m_set,
        }
    }

    fn report(&self, kind: ReportKind, rows: Vec<ReportRow>) -> Result<MonteCarloReport> {
        MonteCarloReport::new(kind, statistic_label(&self.spec), rows, &self.config, self.degenerate, self.attempts)
    }

    /// Power of every alternative at every window.
    pub fn power_report(&self) -> Result<MonteCarloReport> {
        let windows = self.config.windows();
        let reps = self.config.reps;
        let rows = self
            .alternatives
            .iter()
            .zip(&self.powers)
            .flat_map(|(alt, ps)| {
                windows.iter().zip(ps).map(move |(&m, &p)| {
                    self.row(Some(m), alt.to_string(), vec![Cell::new("power", p, bernoulli_se(p, reps))], None)
                })
            })
            .collect();
        self.report(ReportKind::Power, rows)
    }

    /// Mean power over the alternatives, per window.
    pub fn average_power_cells(&self) -> Vec<(usize, Cell)> {
        let reps = self.config.reps;
        let count = self.alternatives.len() as f64;
        self.config
            .windows()
            .into_iter()
            .enumerate()
            .map(|(idx, m)| {
                let ps = self.powers.iter().map(|p| p[idx]);
                let ap = ps.clone().sum::<f64>() / count;
                let se = ps.map(|p| bernoulli_se(p, reps).powi(2)).sum::<f64>().sqrt() / count;
                (m, Cell::new("average_power", ap, se))
            })
            .collect()
    }

    pub fn average_power(&self) -> Result<MonteCarloReport> {
        let label = format!("average of {} alternatives", self.alternatives.len());
        let rows = self
            .average_power_cells()
            .into_iter()
            .map(|(m, c)| self.row(Some(m), label.clone(), vec![c], None))
            .collect();
        self.report(ReportKind::AveragePower, rows)
    }

    /// Per-alternative maximum power over windows and the windows attaining it.
    pub fn max_power_per_alternative(&self) -> Result<MonteCarloReport> {
        let windows = self.config.windows();
        let reps = self.config.reps;
        let rows = self
            .alternatives
            .iter()
            .zip(&self.powers)
            .map(|(alt, ps)| {
                let cells: Vec<(usize, Cell)> = windows
                    .iter()
                    .zip(ps)
                    .map(|(&m, &p)| (m, Cell::new("max_power", p, bernoulli_se(p, reps))))
                    .collect();
                let (m_star, best, ties) = argmax_with_ties(&cells);
                self.row(Some(m_star), alt.to_string(), vec![best], Some(ties))
            })
            .collect();
        self.report(ReportKind::MaxPower, rows)
    }

    pub fn optimal_window(&self) -> Result<OptimalWindow> {
        self.report(ReportKind::AveragePower, Vec::new())?;
        Ok(OptimalWindow::from_cells(&self.average_power_cells()))
    }
}

/// Largest value (smallest window on exact ties) and every window within
/// Monte Carlo error of it.
fn argmax_with_ties(cells: &[(usize, Cell)]) -> (usize, Cell, Vec<usize>) {
    let (m_star, best) = cells
        .iter()
        .fold(cells[0], |acc, &(m, c)| if c.value > acc.1.value { (m, c) } else { acc });
    let ties = cells.iter().filter(|(_, c)| within_mc_error(c, &best)).map(|(m, _)| *m).collect();
    (m_star, best, ties)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimalWindow {
    pub m_star: usize,
    pub ap_star: f64,
    pub stderr: f64,
    /// Windows whose average power is within Monte Carlo error of the best.
    pub ties: Vec<usize>,
}

impl OptimalWindow {
    pub fn from_cells(cells: &[(usize, Cell)]) -> Self {
        let (m_star, best, ties) = argmax_with_ties(cells);
        OptimalWindow { m_star, ap_star: best.value, stderr: best.stderr, ties }
    }

    pub fn from_average_power(report: &MonteCarloReport) -> Result<Self> {
        let cells: Vec<(usize, Cell)> = report
            .rows
            .iter()
            .filter_map(|row| Some((row.m?, *row.cell("average_power")?)))
            .collect();
        if cells.is_empty() {
            return Err(Error::InvalidParameter("average-power report has no rows".into()));
        }
        Ok(Self::from_cells(&cells))
    }

    pub fn report(&self, study: &PowerStudy) -> Result<MonteCarloReport> {
        let row = study.row(
            Some(self.m_star),
            format!("average of {} alternatives", study.alternatives.len()),
            vec![Cell::new("average_power", self.ap_star, self.stderr)],
            Some(self.ties.clone()),
        );
        study.report(ReportKind::OptimalM, vec![row])
    }
}

pub fn average_power(
    spec: StatisticSpec,
    alternatives: &[Distribution],
    alpha: f64,
    cfg: &MonteCarloConfig,
) -> Result<MonteCarloReport> {
    power_study(spec, alternatives, alpha, cfg)?.average_power()
}

pub fn optimal_window(
    spec: StatisticSpec,
    alternatives: &[Distribution],
    alpha: f64,
    cfg: &MonteCarloConfig,
) -> Result<OptimalWindow> {
    power_study(spec, alternatives, alpha, cfg)?.optimal_window()
}

pub fn max_power_per_alternative(
    spec: StatisticSpec,
    alternatives: &[Distribution],
    alpha: f64,
    cfg: &MonteCarloConfig,
) -> Result<MonteCarloReport> {
    power_study(spec, alternatives, alpha, cfg)?.max_power_per_alternative()
}

/// The eight exponentiality alternatives of the power study.
pub fn exponentiality_alternatives() -> Vec<Distribution> {
    ["gamma(1.5)", "lognormal(1)", "weibull(1.5)", "gamma(2)", "gamma(3)", "uniform", "weibull(2)", "lognormal(0.5)"]
        .iter()
        .map(|s| s.parse().expect("valid"))
        .collect()
}

/// The six normality alternatives of the power study.
pub fn normality_alternatives() -> Vec<Distribution> {
    ["t(5)", "t(3)", "uniform", "chisq(4)", "chisq(2)", "chisq(1)"]
        .iter()
        .map(|s| s.parse().expect("valid"))
        .collect()
}

pub fn default_alternatives(test: TestKind) -> Vec<Distribution> {
    match test {
        TestKind::Exponentiality => exponentiality_alternatives(),
        TestKind::Normality => normality_alternatives(),
    }
}
