//! Command-line front end.
//!
//! Simulation subcommands read a flat TOML file:
//!
//! ```toml
//! test = "norm"
//! variant = "kl1"
//! k = 10
//! r = 2
//! m_range = "1-5"
//! alphas = [0.1, 0.05, 0.025, 0.01]
//! reps = 10000
//! seed = 20240917
//! ```
//!
//! Any key may be overridden with `--set key=value`. Output is CSV whose
//! comment header carries a hash of the resolved configuration and the
//! master seed, so a rerun with the same inputs reproduces the file.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::distributions::Distribution;
use crate::entropy::{self, Estimator, WindowSpec};
use crate::error::{Error, Result};
use crate::gof::{decide, CriticalKey, CriticalValue, Dataset, Scheme, StatisticSpec, TestKind, Variant};
use crate::io;
use crate::montecarlo::{
    calibrate_critical_values, default_alternatives, estimate_bias_rmse, power_study, MonteCarloConfig,
    MonteCarloReport, ReportKind,
};
use crate::store::{CriticalValueStore, StoreEntry, STORE_ENV};

const DEFAULT_ALPHAS: [f64; 4] = [0.1, 0.05, 0.025, 0.01];

#[derive(Debug, Parser)]
#[command(name = "rss-entropy", version, about = "Entropy estimation and entropy-based goodness-of-fit tests under ranked set sampling")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate entropy from a data file
    Entropy(EntropyArgs),
    /// Test a data file for exponentiality or normality
    Gof(GofArgs),
    /// Bias and RMSE of an entropy estimator
    BiasRmse(SimArgs),
    /// Critical values under the null
    Calibrate(SimArgs),
    /// Power against each alternative
    Power(SimArgs),
    /// Power averaged over the alternatives
    AveragePower(SimArgs),
    /// Window maximising average power
    OptimalM(SimArgs),
}

#[derive(Debug, Args)]
pub struct EntropyArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = "srs")]
    pub scheme: Scheme,
    #[arg(long)]
    pub estimator: Estimator,
    #[arg(long)]
    pub m: usize,
    /// Set size; checked against the file for RSS data
    #[arg(long)]
    pub k: Option<usize>,
}

#[derive(Debug, Args)]
pub struct GofArgs {
    #[arg(long)]
    pub test: TestKind,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = "rss")]
    pub scheme: Scheme,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub m: usize,
    #[arg(long)]
    pub alpha: f64,
    /// Defaults to tc for SRS data and kl1 for RSS data
    #[arg(long)]
    pub variant: Option<Variant>,
    /// Entropy estimator for RSS statistics (h1 or h2)
    #[arg(long)]
    pub estimator: Option<Estimator>,
    /// Critical-value store; defaults to $RSS_ENTROPY_STORE
    #[arg(long)]
    pub crit_table: Option<PathBuf>,
    /// Use this critical value instead of a store lookup
    #[arg(long, conflicts_with = "crit_table", allow_negative_numbers = true)]
    pub critical: Option<f64>,
    /// Replication count the critical value was calibrated with
    #[arg(long, default_value_t = 10_000)]
    pub reps: usize,
}

#[derive(Debug, Args)]
pub struct SimArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Override a config key
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Write CSV here instead of stdout
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Critical-value store to append to (calibrate); defaults to $RSS_ENTROPY_STORE
    #[arg(long)]
    pub store: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimCommand {
    BiasRmse,
    Calibrate,
    Power,
    AveragePower,
    OptimalM,
}

impl SimCommand {
    pub fn name(self) -> &'static str {
        match self {
            SimCommand::BiasRmse => "bias-rmse",
            SimCommand::Calibrate => "calibrate",
            SimCommand::Power => "power",
            SimCommand::AveragePower => "average-power",
            SimCommand::OptimalM => "optimal-m",
        }
    }
}

/// Flat config file contents.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub test: Option<String>,
    pub variant: Option<String>,
    pub estimator: Option<String>,
    pub scheme: Option<String>,
    pub distribution: Option<String>,
    pub k: Option<usize>,
    pub r: Option<usize>,
    pub m_range: Option<WindowRange>,
    pub alphas: Option<Vec<f64>>,
    pub alternatives: Option<Vec<String>>,
    pub reps: Option<usize>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
}

/// `m_range` as `3`, `[1, 5]` or `"1-5"`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WindowRange {
    Single(usize),
    Pair([usize; 2]),
    Text(String),
}

impl WindowRange {
    fn bounds(&self) -> std::result::Result<(usize, usize), String> {
        match self {
            WindowRange::Single(m) => Ok((*m, *m)),
            WindowRange::Pair([a, b]) => Ok((*a, *b)),
            WindowRange::Text(s) => {
                let parse = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("`{s}` is not a range like 1-5"));
                match s.split_once('-') {
                    Some((a, b)) => Ok((parse(a)?, parse(b)?)),
                    None => parse(s).map(|m| (m, m)),
                }
            }
        }
    }
}

/// A parsed simulation invocation.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub subcommand: SimCommand,
    pub config_path: PathBuf,
    pub overrides: Vec<(String, String)>,
    pub output_path: Option<PathBuf>,
    pub store_path: Option<PathBuf>,
    pub seed: u64,
    pub resolved: Resolved,
}

/// Configuration with defaults filled in and names parsed.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub spec: Option<StatisticSpec>,
    pub estimator: Option<Estimator>,
    pub scheme: Scheme,
    pub distribution: Option<Distribution>,
    pub alternatives: Vec<Distribution>,
    pub mc: MonteCarloConfig,
}

impl Resolved {
    /// Canonical text of everything that affects the output.
    fn canonical(&self, command: SimCommand) -> String {
        let mut s = String::new();
        let opt = |v: Option<String>| v.unwrap_or_default();
        writeln!(s, "command={}", command.name()).unwrap();
        writeln!(s, "statistic={}", opt(self.spec.map(|x| x.to_string()))).unwrap();
        writeln!(s, "estimator={}", opt(self.estimator.map(|x| x.to_string()))).unwrap();
        writeln!(s, "scheme={}", self.scheme).unwrap();
        writeln!(s, "distribution={}", opt(self.distribution.as_ref().map(|x| x.to_string()))).unwrap();
        let alts: Vec<String> = self.alternatives.iter().map(|a| a.to_string()).collect();
        writeln!(s, "alternatives={}", alts.join(";")).unwrap();
        let mc = &self.mc;
        writeln!(s, "k={} r={} m_range={}-{}", mc.k, mc.r, mc.m_range.start(), mc.m_range.end()).unwrap();
        let alphas: Vec<String> = mc.alpha_levels.iter().map(|a| format!("{a:?}")).collect();
        writeln!(s, "alphas={}", alphas.join(";")).unwrap();
        writeln!(s, "reps={} seed={}", mc.reps, mc.master_seed).unwrap();
        s
    }

    pub fn config_hash(&self, command: SimCommand) -> String {
        let digest = Sha256::digest(self.canonical(command).as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

fn config_err(key: &str, line: Option<usize>, msg: impl Into<String>) -> Error {
    Error::Config { key: key.into(), line, msg: msg.into() }
}

/// 1-based line of `key = ...` in the config text.
fn key_line(text: &str, key: &str) -> Option<usize> {
    text.lines().position(|l| {
        let l = l.trim_start();
        l.strip_prefix(key).is_some_and(|rest| rest.trim_start().starts_with('='))
    })
    .map(|i| i + 1)
}

fn toml_error(text: &str, e: &toml::de::Error) -> Error {
    let msg = e.message().to_string();
    let Some(span) = e.span() else {
        return config_err("<file>", None, msg);
    };
    let start = span.start.min(text.len());
    let line = text[..start].matches('\n').count() + 1;
    let line_text = text.lines().nth(line - 1).unwrap_or("");
    let key = match msg.split('`').nth(1) {
        Some(k) if msg.starts_with("unknown field") => k.to_string(),
        _ => line_text.split('=').next().unwrap_or("").trim().to_string(),
    };
    let key = if key.is_empty() { "<file>".to_string() } else { key };
    config_err(&key, Some(line), msg)
}

/// Parses config text and applies `--set` overrides.
pub fn parse_config(text: &str, overrides: &[(String, String)]) -> Result<ConfigFile> {
    let parsed: ConfigFile = toml::from_str(text).map_err(|e| toml_error(text, &e))?;
    if overrides.is_empty() {
        return Ok(parsed);
    }
    let mut table: toml::Table = toml::from_str(text).map_err(|e| toml_error(text, &e))?;
    for (key, value) in overrides {
        let value = match toml::from_str::<toml::Table>(&format!("v = {value}")) {
            Ok(mut t) => t.remove("v").expect("parsed key"),
            Err(_) => toml::Value::String(value.clone()),
        };
        table.insert(key.clone(), value);
    }
    let merged = toml::to_string(&table).map_err(|e| config_err("--set", None, e.to_string()))?;
    toml::from_str(&merged).map_err(|e| {
        let msg = e.message().to_string();
        let key = msg.split('`').nth(1).filter(|_| msg.starts_with("unknown field")).unwrap_or("--set").to_string();
        config_err(&key, None, msg)
    })
}

fn parse_override(s: &str) -> Result<(String, String)> {
    match s.split_once('=') {
        Some((k, v)) if !k.trim().is_empty() => Ok((k.trim().to_string(), v.trim().to_string())),
        _ => Err(config_err("--set", None, format!("`{s}` is not KEY=VALUE"))),
    }
}

/// Resolves a config for `command`, reporting the offending key and line.
pub fn resolve(command: SimCommand, file: &ConfigFile, text: &str) -> Result<Resolved> {
    let at = |key: &str| key_line(text, key);
    let parse_as = |key: &str, v: &str| -> Error { config_err(key, at(key), format!("unrecognised value `{v}`")) };

    let k = file.k.ok_or_else(|| config_err("k", None, "missing required key"))?;
    let r = file.r.unwrap_or(1);
    let mut mc = MonteCarloConfig {
        k,
        r,
        reps: file.reps.unwrap_or(10_000),
        master_seed: file.seed.unwrap_or(MonteCarloConfig::default().master_seed),
        workers: file.workers.unwrap_or(0),
        alpha_levels: Vec::new(),
        m_range: 1..=1,
    };

    let scheme_key = file.scheme.clone()
        .map(|s| s.parse::<Scheme>().map_err(|_| parse_as("scheme", &s)))
        .transpose()?;
    let estimator_key = file.estimator.clone()
        .map(|s| s.parse::<Estimator>().map_err(|_| parse_as("estimator", &s)))
        .transpose()?;

    let (spec, estimator, scheme, max_window) = if command == SimCommand::BiasRmse {
        let estimator = estimator_key.ok_or_else(|| config_err("estimator", None, "missing required key"))?;
        let scheme = scheme_key.unwrap_or(if estimator.is_rss() { Scheme::Rss } else { Scheme::Srs });
        if estimator.is_rss() != (scheme == Scheme::Rss) {
            return Err(config_err(
                "estimator",
                at("estimator"),
                format!("estimator {estimator} does not apply to {scheme} data"),
            ));
        }
        (None, Some(estimator), scheme, estimator.max_window(k, r))
    } else {
        let test_text = file.test.clone().ok_or_else(|| config_err("test", None, "missing required key"))?;
        let test: TestKind = test_text.parse().map_err(|_| parse_as("test", &test_text))?;
        let variant = match &file.variant {
            Some(v) => v.parse::<Variant>().map_err(|_| parse_as("variant", v))?,
            None if scheme_key == Some(Scheme::Srs) => Variant::Tc,
            None => Variant::Kl1,
        };
        if let Some(s) = scheme_key {
            if s != variant.scheme() {
                return Err(config_err("scheme", at("scheme"), format!("variant {variant} is a {} statistic", variant.scheme())));
            }
        }
        let entropy = estimator_key.unwrap_or(if variant == Variant::Tc { Estimator::Ebrahimi } else { Estimator::RssPooledH1 });
        let spec = StatisticSpec::new(test, variant, entropy).map_err(|e| {
            let key = if file.estimator.is_some() { "estimator" } else { "variant" };
            config_err(key, at(key), e.to_string())
        })?;
        let max = match variant.scheme() {
            Scheme::Srs => k * r / 2,
            Scheme::Rss => spec.max_window(k, r),
        };
        (Some(spec), None, variant.scheme(), max)
    };

    let (lo, hi) = match &file.m_range {
        Some(range) => range.bounds().map_err(|msg| config_err("m_range", at("m_range"), msg))?,
        None => (1, max_window),
    };
    mc.m_range = lo..=hi;
    mc.alpha_levels = match &file.alphas {
        Some(a) => a.clone(),
        None if command == SimCommand::Calibrate => DEFAULT_ALPHAS.to_vec(),
        None if command == SimCommand::BiasRmse => Vec::new(),
        None => vec![0.05],
    };
    if command != SimCommand::BiasRmse && mc.alpha_levels.is_empty() {
        return Err(config_err("alphas", at("alphas"), "at least one level required"));
    }
    mc.validate(max_window).map_err(|e| match e {
        Error::Config { key, msg, .. } => {
            let line = at(&key);
            Error::Config { key, line, msg }
        }
        other => other,
    })?;

    let distribution = match (&file.distribution, command) {
        (Some(d), _) => Some(d.parse::<Distribution>().map_err(|e| config_err("distribution", at("distribution"), e.to_string()))?),
        (None, SimCommand::BiasRmse) => return Err(config_err("distribution", None, "missing required key")),
        (None, _) => None,
    };
    let needs_alternatives = matches!(command, SimCommand::Power | SimCommand::AveragePower | SimCommand::OptimalM);
    let alternatives = match (&file.alternatives, spec) {
        (Some(list), _) if needs_alternatives => list
            .iter()
            .map(|a| a.parse::<Distribution>().map_err(|e| config_err("alternatives", at("alternatives"), e.to_string())))
            .collect::<Result<Vec<_>>>()?,
        (None, Some(spec)) if needs_alternatives => default_alternatives(spec.test),
        _ => Vec::new(),
    };
    if needs_alternatives && alternatives.is_empty() {
        return Err(config_err("alternatives", at("alternatives"), "at least one alternative required"));
    }
    Ok(Resolved { spec, estimator, scheme, distribution, alternatives, mc })
}

fn fmt4(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.4}")
    } else {
        "NA".to_string()
    }
}

/// `[2, 3, 4, 8]` as `2-4 8`.
fn format_window_set(ms: &[usize]) -> String {
    let mut parts: Vec<String> = Vec::new();
    let mut i = 0;
    while i < ms.len() {
        let mut j = i;
        while j + 1 < ms.len() && ms[j + 1] == ms[j] + 1 {
            j += 1;
        }
        parts.push(if j > i { format!("{}-{}", ms[i], ms[j]) } else { ms[i].to_string() });
        i = j + 1;
    }
    parts.join(" ")
}

fn csv_line(fields: &[String]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(fields).map_err(|e| Error::Io(e.to_string()))?;
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("utf-8 fields"))
}

/// Critical values laid out with one column per level.
fn critical_table_csv(report: &MonteCarloReport, out: &mut String) -> Result<()> {
    let alphas = &report.config.alpha_levels;
    let mut header: Vec<String> = ["n", "k", "r", "m"].iter().map(|s| s.to_string()).collect();
    header.extend(alphas.iter().map(|a| format!("c_{a:.4}")));
    header.extend(alphas.iter().map(|a| format!("se_{a:.4}")));
    out.push_str(&csv_line(&header)?);
    for m in report.config.windows() {
        let cells: Vec<_> = alphas
            .iter()
            .map(|&a| report.find(Some(m), Some(a), None).and_then(|row| row.cell("critical").copied()))
            .collect();
        let cfg = &report.config;
        let mut fields = vec![cfg.n().to_string(), cfg.k.to_string(), cfg.r.to_string(), m.to_string()];
        fields.extend(cells.iter().map(|c| fmt4(c.map_or(f64::NAN, |c| c.value))));
        fields.extend(cells.iter().map(|c| fmt4(c.map_or(f64::NAN, |c| c.stderr))));
        out.push_str(&csv_line(&fields)?);
    }
    Ok(())
}

/// Long layout: one row per report row, value and standard error per cell.
fn long_table_csv(reports: &[MonteCarloReport], out: &mut String) -> Result<()> {
    let rows: Vec<_> = reports.iter().flat_map(|r| &r.rows).collect();
    let Some(first) = rows.first() else {
        return Ok(());
    };
    let has_m = rows.iter().any(|r| r.m.is_some());
    let has_alpha = rows.iter().any(|r| r.alpha.is_some());
    let has_set = rows.iter().any(|r| r.m_set.is_some());
    let optimal = reports[0].kind == ReportKind::OptimalM;
    let mut header: Vec<String> = vec!["n".into(), "k".into(), "r".into()];
    if has_m {
        header.push(if optimal { "m_star" } else { "m" }.into());
    }
    if has_alpha {
        header.push("alpha".into());
    }
    header.push("distribution".into());
    for cell in &first.cells {
        header.push(cell.name.to_string());
        header.push(format!("{}_se", cell.name));
    }
    if has_set {
        header.push(if optimal { "ties" } else { "m_set" }.into());
    }
    out.push_str(&csv_line(&header)?);
    for row in rows {
        let mut fields = vec![row.n.to_string(), row.k.to_string(), row.r.to_string()];
        if has_m {
            fields.push(row.m.map_or("NA".into(), |m| m.to_string()));
        }
        if has_alpha {
            fields.push(row.alpha.map_or("NA".into(), fmt4));
        }
        fields.push(row.distribution.clone());
        for cell in &row.cells {
            fields.push(fmt4(cell.value));
            fields.push(fmt4(cell.stderr));
        }
        if has_set {
            fields.push(row.m_set.as_deref().map_or("NA".into(), format_window_set));
        }
        out.push_str(&csv_line(&fields)?);
    }
    Ok(())
}

/// Full CSV document for a simulation subcommand.
pub fn render_csv(run: &RunConfig, reports: &[MonteCarloReport]) -> Result<String> {
    let mc = &run.resolved.mc;
    let mut out = String::new();
    writeln!(
        out,
        "# rss-entropy {} config_hash={} seed={} reps={}",
        run.subcommand.name(),
        run.resolved.config_hash(run.subcommand),
        mc.master_seed,
        mc.reps
    )
    .unwrap();
    let label = reports.first().map_or(String::new(), |r| r.label.clone());
    let degenerate: usize = reports.iter().map(|r| r.degenerate).sum();
    let attempts: usize = reports.iter().map(|r| r.attempts).sum();
    writeln!(out, "# statistic={label} k={} r={} degenerate={degenerate} attempts={attempts}", mc.k, mc.r).unwrap();
    match reports {
        [single] if single.kind == ReportKind::CriticalValues => critical_table_csv(single, &mut out)?,
        _ => long_table_csv(reports, &mut out)?,
    }
    Ok(out)
}

/// Runs the simulation for `run` and returns its reports.
pub fn simulate(run: &RunConfig) -> Result<Vec<MonteCarloReport>> {
    let res = &run.resolved;
    let mc = &res.mc;
    match run.subcommand {
        SimCommand::BiasRmse => {
            let dist = res.distribution.as_ref().expect("resolved");
            Ok(vec![estimate_bias_rmse(dist, res.scheme, res.estimator.expect("resolved"), mc)?])
        }
        SimCommand::Calibrate => Ok(vec![calibrate_critical_values(res.spec.expect("resolved"), mc)?]),
        command => {
            let spec = res.spec.expect("resolved");
            mc.alpha_levels
                .iter()
                .map(|&alpha| {
                    let study = power_study(spec, &res.alternatives, alpha, mc)?;
                    match command {
                        SimCommand::Power => study.power_report(),
                        SimCommand::AveragePower => study.average_power(),
                        _ => study.optimal_window()?.report(&study),
                    }
                })
                .collect()
        }
    }
}

/// Store entries for every available critical value in a calibration.
pub fn store_entries(spec: StatisticSpec, report: &MonteCarloReport, config_hash: &str) -> Vec<StoreEntry> {
    let cfg = &report.config;
    let (k, r) = match spec.scheme() {
        Scheme::Srs => (cfg.n(), 1),
        Scheme::Rss => (cfg.k, cfg.r),
    };
    report
        .rows
        .iter()
        .filter_map(|row| {
            let cell = row.cell("critical")?;
            if !cell.is_available() {
                return None;
            }
            let key = CriticalKey {
                test: spec.test,
                variant: spec.variant,
                entropy: spec.entropy,
                k,
                r,
                m: row.m?,
                alpha: row.alpha?,
                reps: cfg.reps,
            };
            Some(StoreEntry {
                critical: CriticalValue { key, value: cell.value, stderr: cell.stderr },
                config_hash: config_hash.to_string(),
            })
        })
        .collect()
}

fn store_path(explicit: &Option<PathBuf>) -> Option<PathBuf> {
    explicit.clone().or_else(|| std::env::var_os(STORE_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn emit(output: &Option<PathBuf>, text: &str) -> Result<()> {
    match output {
        Some(path) => fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

pub fn build_run(command: SimCommand, args: &SimArgs) -> Result<RunConfig> {
    let text = read_text(&args.config)?;
    let mut overrides = args.overrides.iter().map(|s| parse_override(s)).collect::<Result<Vec<_>>>()?;
    for (key, value) in [
        ("seed", args.seed.map(|v| v.to_string())),
        ("reps", args.reps.map(|v| v.to_string())),
        ("workers", args.workers.map(|v| v.to_string())),
    ] {
        if let Some(v) = value {
            overrides.push((key.to_string(), v));
        }
    }
    let file = parse_config(&text, &overrides)?;
    // keys replaced on the command line have no line in the file
    let masked: String = text
        .lines()
        .map(|l| {
            let overridden = overrides.iter().any(|(k, _)| key_line(l, k).is_some());
            if overridden { "" } else { l }
        })
        .collect::<Vec<_>>()
        .join("\n");
    let resolved = resolve(command, &file, &masked)?;
    Ok(RunConfig {
        subcommand: command,
        config_path: args.config.clone(),
        overrides,
        output_path: args.output.clone(),
        store_path: store_path(&args.store),
        seed: resolved.mc.master_seed,
        resolved,
    })
}

fn run_simulation(command: SimCommand, args: &SimArgs) -> Result<()> {
    let run = build_run(command, args)?;
    let reports = simulate(&run)?;
    let csv = render_csv(&run, &reports)?;
    if let (SimCommand::Calibrate, Some(path)) = (command, &run.store_path) {
        let spec = run.resolved.spec.expect("resolved");
        let hash = run.resolved.config_hash(command);
        let mut store = CriticalValueStore::open(path)?;
        store.append(store_entries(spec, &reports[0], &hash))?;
    }
    emit(&run.output_path, &csv)
}

fn load_dataset(input: &Path, scheme: Scheme, k: Option<usize>) -> Result<Dataset> {
    Ok(match scheme {
        Scheme::Srs => Dataset::Srs(io::read_srs(input)?),
        Scheme::Rss => Dataset::Rss(io::read_rss_matrix(input, k)?),
    })
}

fn run_entropy(args: &EntropyArgs) -> Result<String> {
    let m = WindowSpec::new(args.m)?;
    let estimate = match load_dataset(&args.input, args.scheme, args.k)? {
        Dataset::Srs(sample) => match args.estimator {
            Estimator::Vasicek => entropy::vasicek(&sample, m)?,
            Estimator::Ebrahimi => entropy::ebrahimi(&sample, m)?,
            e => return Err(Error::InvalidParameter(format!("estimator {e} needs ranked set data"))),
        },
        Dataset::Rss(rss) => entropy::estimate_rss(&rss, args.estimator, m)?,
    };
    Ok(format!("{},{},{},{}\n", estimate.estimator, estimate.n, estimate.m, fmt4(estimate.value)))
}

fn run_gof(args: &GofArgs) -> Result<String> {
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha {} is outside (0, 1)", args.alpha)));
    }
    if args.scheme == Scheme::Rss && args.k.is_none() {
        return Err(Error::InvalidParameter("--k is required for RSS data".into()));
    }
    let variant = args.variant.unwrap_or(match args.scheme {
        Scheme::Srs => Variant::Tc,
        Scheme::Rss => Variant::Kl1,
    });
    if variant.scheme() != args.scheme {
        return Err(Error::InvalidParameter(format!("variant {variant} needs {} data", variant.scheme())));
    }
    let entropy = args.estimator.unwrap_or(match variant {
        Variant::Tc => Estimator::Ebrahimi,
        _ => Estimator::RssPooledH1,
    });
    let spec = StatisticSpec::new(args.test, variant, entropy)?;
    let data = load_dataset(&args.input, args.scheme, args.k)?;
    let stat = spec.evaluate(&data, WindowSpec::new(args.m)?)?;
    let (k, r) = match &data {
        Dataset::Srs(s) => (s.len(), 1),
        Dataset::Rss(rss) => (rss.k(), rss.r()),
    };
    let key = CriticalKey { test: args.test, variant, entropy, k, r, m: args.m, alpha: args.alpha, reps: args.reps };
    let critical = match args.critical {
        Some(value) => CriticalValue { key, value, stderr: f64::NAN },
        None => {
            let path = store_path(&args.crit_table).ok_or_else(|| {
                Error::InvalidParameter(format!("no critical value: pass --critical, --crit-table or set {STORE_ENV}"))
            })?;
            let store = CriticalValueStore::open(&path)?;
            store.lookup(&key).map(|e| e.critical).ok_or_else(|| {
                Error::KeyMismatch(format!(
                    "{} has no critical value for {}/{}/{} k={k} r={r} m={} alpha={} reps={}",
                    path.display(),
                    key.test,
                    key.variant,
                    key.entropy,
                    key.m,
                    key.alpha,
                    key.reps
                ))
            })?
        }
    };
    let decision = if decide(&stat, &critical)? { "reject" } else { "accept" };
    Ok(format!("{},{},{}\n", fmt4(stat.value), fmt4(critical.value), decision))
}

/// Exit status for an error: 2 for degenerate data, 1 otherwise.
pub fn exit_code(err: &Error) -> i32 {
    if err.is_degenerate() || matches!(err, Error::Validation(_)) {
        2
    } else {
        1
    }
}

pub fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Entropy(args) => emit(&None, &run_entropy(args)?),
        Command::Gof(args) => emit(&None, &run_gof(args)?),
        Command::BiasRmse(args) => run_simulation(SimCommand::BiasRmse, args),
        Command::Calibrate(args) => run_simulation(SimCommand::Calibrate, args),
        Command::Power(args) => run_simulation(SimCommand::Power, args),
        Command::AveragePower(args) => run_simulation(SimCommand::AveragePower, args),
        Command::OptimalM(args) => run_simulation(SimCommand::OptimalM, args),
    }
}

/// Parses `argv` (including the program name), runs it and returns the
/// process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
