//! The `perclab` command line.
//!
//! Each subcommand runs one experiment and writes a CSV or JSON table,
//! either to stdout or atomically to `--out` together with
//! `<out>.manifest.json`. Options may also come from a TOML file given by
//! `--config`; flags always win over file values.
//!
//! Exit codes: 0 on success, 1 on runtime failure (including a failing
//! lemma suite), 2 on usage errors.

use std::ffi::OsString;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::cubeset::CubeSet;
use crate::error::Error;
use crate::estimators::{
    angle_scan, boosting_search, influence_exact, influence_mc, margulis_russo_check, removal_experiment,
    sharpness_from, CriticalSample, RemovalExperimentParams, DEFAULT_REL_TOL, EXACT_DISORDER_CAP,
};
use crate::hypercube::ModelParams;
use crate::rng::{stream, tag};
use crate::sat::{sample_disorder, solution_set, solve_with, Backend, Disorder, Instance};
use crate::suite::{lemma_suite, SuiteConfig, DEFAULT_CASES};
use crate::symmetry::{build_gentle_map, random_admissible, AdmissibilityParams, DEFAULT_C2};

pub const MANIFEST_SCHEMA: u32 = 1;
pub const BUILD_ID: &str = env!("PERCLAB_BUILD_ID");

#[derive(Parser, Debug)]
#[command(name = "perclab", version, about = "Exact and Monte Carlo experiments on the Ising perceptron")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Emptiness probability θ̂(p) on a grid of p.
    Curve(CurveArgs),
    /// Bisection estimate of p_N(θ), optionally for several n.
    Threshold(ThresholdArgs),
    /// Window ratio p̂_N(1 − ε)/p̂_N(ε).
    Sharpness(SharpnessArgs),
    /// Total influence I_f(p), exact for n ≤ 4 or by pivotal sampling.
    Influence(InfluenceArgs),
    /// Both sides of the Margulis–Russo identity from exact enumeration.
    MrCheck(MrCheckArgs),
    /// Worst |H(x) \ H(y)| / ((m ln n / n)^{1/2} 2^n) over sampled pairs.
    AngleScan(AngleScanArgs),
    /// Greedy search for a (1 − δ)-boosting set among active centers.
    BoostSearch(BoostArgs),
    /// q(A) and the removal rate of a sampled solution set.
    Removal(RemovalArgs),
    /// Randomized battery of the exact symmetry and solver properties.
    LemmaSuite(SuiteArgs),
    /// Solve one instance file exactly.
    Solve(SolveArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
struct Common {
    /// Cube dimension.
    #[arg(long)]
    n: Option<usize>,
    /// Margin κ; half-cubes are {y : x·y ≥ κ√n}. Defaults to 0.
    #[arg(long, allow_hyphen_values = true)]
    kappa: Option<f64>,
    /// Master seed; required by every stochastic command.
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo trials (per evaluation).
    #[arg(long)]
    trials: Option<u64>,
    /// Output file; the manifest goes to <out>.manifest.json. Stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Worker threads; results do not depend on it.
    #[arg(long, env = "PERCLAB_THREADS")]
    #[serde(skip)]
    threads: Option<usize>,
    /// TOML file with default values for any of these options.
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
struct CurveArgs {
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
    /// Grid "a:b:k": k points a, a+b, ..., or a, a·b, ... with --geometric.
    #[arg(long)]
    p_grid: Option<String>,
    /// Read the grid as geometric.
    #[arg(long)]
    geometric: bool,
}

#[derive(Args, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
struct ThresholdArgs {
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
    /// Target emptiness probability. Defaults to 0.5.
    #[arg(long)]
    theta: Option<f64>,
    /// Dimensions to scan instead of a single --n, e.g. 10,12,14.
    #[arg(long, value_delimiter = ',')]
    ns: Option<Vec<usize>>,
    /// Relative bracket width at which bisection stops. Defaults to 0.02.
    #[arg(long)]
    rel_tol: Option<f64>,
}

#[derive(Args, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
struct SharpnessArgs {
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
    /// Window parameter in (0, 1/2). Defaults to 0.1.
    #[arg(long)]
    eps: Option<f64>,
    /// Dimensions to scan instead of a single --n.
    #[arg(long, value_delimiter = ',')]
    ns: Option<Vec<usize>>,
    #[arg(long)]
    rel_tol: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Method {
    Auto,
    Exact,
    Mc,
}

#[derive(Args, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
struct InfluenceArgs {
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
    #[arg(long)]
    p: Option<f64>,
    /// exact (n ≤ 4), mc, or auto (exact when possible).
    #[arg(long, value_enum)]
    method: Option<Method>,
}

#[derive(Args, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
struct MrCheckArgs {
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
    #[arg(long)]
    p: Option<f64>,
    /// Half-width of the central difference. Defaults to 0.001.
    #[arg(long)]
    dp: Option<f64>,
}

#[derive(Args, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
struct AngleScanArgs {
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
    /// Hamming distances to scan, e.g. 1,2,4. Defaults to 0..=n.
    #[arg(long, value_delimiter = ',')]
    dists: Option<Vec<usize>>,
    /// Dimensions to scan instead of a single --n.
    #[arg(long, value_delimiter = ',')]
    ns: Option<Vec<usize>>,
}

#[derive(Args, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
struct BoostArgs {
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
    /// Selection probability of the sampled disorder and of the fresh draws.
    #[arg(long)]
    p: Option<f64>,
    /// Disorder to search in, as an instance JSON file, instead of sampling one.
    #[arg(long)]
    instance: Option<PathBuf>,
    /// Target failure probability. Defaults to 0.2.
    #[arg(long)]
    delta: Option<f64>,
    /// Largest set size tried. Defaults to 8.
    #[arg(long)]
    k_max: Option<usize>,
}

#[derive(Args, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
struct RemovalArgs {
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
    /// Sequence length of the gentle mapping. Defaults to 2.
    #[arg(long)]
    k: Option<usize>,
    /// A is the solution set of a disorder sampled at this p.
    #[arg(long)]
    p: Option<f64>,
    /// Admissibility constant. Defaults to 4.
    #[arg(long)]
    c2: Option<f64>,
}

#[derive(Args, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
struct SuiteArgs {
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
    /// Cases per check. Defaults to 1000.
    #[arg(long)]
    cases: Option<u64>,
    #[arg(long)]
    c2: Option<f64>,
    /// Run against a deliberately broken sign switch.
    #[cfg(feature = "self-test")]
    #[arg(long)]
    self_test_mutate: bool,
}

#[derive(Args, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
struct SolveArgs {
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
    /// Instance JSON file: {"n": .., "kappa": .., "active": [codes]}.
    #[arg(long)]
    instance: Option<PathBuf>,
    #[arg(long, value_enum)]
    backend: Option<BackendArg>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum BackendArg {
    Naive,
    Graycode,
    Bitparallel,
}

impl From<BackendArg> for Backend {
    fn from(b: BackendArg) -> Self {
        match b {
            BackendArg::Naive => Backend::Naive,
            BackendArg::Graycode => Backend::GrayCode,
            BackendArg::Bitparallel => Backend::BitParallel,
        }
    }
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter(_)
            | Error::ExactRegimeExceeded { .. }
            | Error::DimensionMismatch { .. }
            | Error::Parse(_)
            | Error::MalformedEncoding(_)
            | Error::NotAPermutation(_) => Failure::Usage(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

fn usage<T>(msg: impl Into<String>) -> Result<T, Failure> {
    Err(Failure::Usage(msg.into()))
}

fn need<T>(v: Option<T>, flag: &str) -> Result<T, Failure> {
    match v {
        Some(v) => Ok(v),
        None => usage(format!("missing {flag}")),
    }
}

/// What a command produced.
struct Report {
    csv: String,
    json: Value,
    summary: Value,
    rows: usize,
    /// Printed instead of the table when writing to stdout in the default format.
    text: Option<String>,
    exit: i32,
}

impl Report {
    fn table<R: Serialize>(rows: &[R], summary: Value) -> Result<Self, Failure> {
        Ok(Report {
            csv: to_csv(rows)?,
            json: serde_json::to_value(rows).map_err(|e| Failure::Runtime(e.to_string()))?,
            summary,
            rows: rows.len(),
            text: None,
            exit: 0,
        })
    }
}

fn to_csv<R: Serialize>(rows: &[R]) -> Result<String, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Failure::Runtime(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::Runtime(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Failure::Runtime(e.to_string()))
}

/// Entry point of the `perclab` binary; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            1
        }
    }
}

fn execute(command: Command) -> Result<i32, Failure> {
    macro_rules! dispatch {
        ($name:literal, $args:expr, $f:ident) => {{
            let args = merge_config($args, $name)?;
            let common = &args.common;
            let threads = common.threads;
            let out = common.out.clone();
            let format = common.format;
            let echo = serde_json::to_value(&args).map_err(|e| Failure::Runtime(e.to_string()))?;
            prepare_out(out.as_deref())?;
            let started = SystemTime::now();
            let clock = Instant::now();
            let report = with_threads(threads, || $f(&args))?;
            finish($name, echo, report, out.as_deref(), format, started, clock.elapsed())
        }};
    }
    match command {
        Command::Curve(a) => dispatch!("curve", a, curve),
        Command::Threshold(a) => dispatch!("threshold", a, threshold),
        Command::Sharpness(a) => dispatch!("sharpness", a, sharpness),
        Command::Influence(a) => dispatch!("influence", a, influence),
        Command::MrCheck(a) => dispatch!("mr-check", a, mr_check),
        Command::AngleScan(a) => dispatch!("angle-scan", a, angle_scan_cmd),
        Command::BoostSearch(a) => dispatch!("boost-search", a, boost_search),
        Command::Removal(a) => dispatch!("removal", a, removal),
        Command::LemmaSuite(a) => dispatch!("lemma-suite", a, suite),
        Command::Solve(a) => dispatch!("solve", a, solve_cmd),
    }
}

trait HasCommon {
    fn common(&self) -> &Common;
    fn common_mut(&mut self) -> &mut Common;
}

macro_rules! has_common {
    ($($t:ty),*) => {$(impl HasCommon for $t {
        fn common(&self) -> &Common { &self.common }
        fn common_mut(&mut self) -> &mut Common { &mut self.common }
    })*};
}
has_common!(CurveArgs, ThresholdArgs, SharpnessArgs, InfluenceArgs, MrCheckArgs, AngleScanArgs, BoostArgs, RemovalArgs, SuiteArgs, SolveArgs);

/// Fills options left unset on the command line from the `--config` file.
///
/// Top-level keys apply to every command; a table named after the command
/// overrides them. Keys use the flag spelling (`p-grid` or `p_grid`).
fn merge_config<A>(args: A, command: &str) -> Result<A, Failure>
where
    A: Serialize + DeserializeOwned + HasCommon,
{
    let Some(path) = args.common().config.clone() else { return Ok(args) };
    let threads = args.common().threads;
    let text = std::fs::read_to_string(&path)
        .map_err(|e| Failure::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let table: toml::Table =
        toml::from_str(&text).map_err(|e| Failure::Usage(format!("invalid config {}: {e}", path.display())))?;
    let mut values = serde_json::to_value(&args).map_err(|e| Failure::Runtime(e.to_string()))?;
    let obj = values.as_object_mut().expect("argument structs serialize to objects");
    let mut layers = vec![];
    let mut flat = serde_json::Map::new();
    for (key, value) in &table {
        match value {
            toml::Value::Table(section) if key == command => layers.push(section.clone()),
            toml::Value::Table(_) => {}
            other => {
                flat.insert(key.clone(), toml_to_json(other)?);
            }
        }
    }
    let mut file = flat;
    for section in layers {
        for (key, value) in &section {
            file.insert(key.clone(), toml_to_json(value)?);
        }
    }
    for (key, value) in file {
        let key = key.replace('_', "-");
        if key == "threads" || key == "config" {
            continue;
        }
        match obj.get_mut(&key) {
            Some(slot) if slot.is_null() || *slot == Value::Bool(false) => *slot = value,
            Some(_) => {}
            None => return usage(format!("unknown key `{key}` in config {} for `{command}`", path.display())),
        }
    }
    let mut merged: A = serde_json::from_value(values)
        .map_err(|e| Failure::Usage(format!("invalid value in config {}: {e}", path.display())))?;
    // Skipped by serde; restore from the command line.
    merged.common_mut().threads = threads;
    merged.common_mut().config = Some(path);
    Ok(merged)
}

fn toml_to_json(v: &toml::Value) -> Result<Value, Failure> {
    serde_json::to_value(v).map_err(|e| Failure::Usage(e.to_string()))
}

fn prepare_out(out: Option<&Path>) -> Result<(), Failure> {
    let Some(out) = out else { return Ok(()) };
    if out.file_name().is_none() {
        return usage(format!("--out {} does not name a file", out.display()));
    }
    let parent = match out.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    if !parent.is_dir() {
        return usage(format!("output directory {} does not exist", parent.display()));
    }
    let meta = std::fs::metadata(parent).map_err(|e| Failure::Usage(format!("{}: {e}", parent.display())))?;
    if meta.permissions().readonly() {
        return usage(format!("output directory {} is not writable", parent.display()));
    }
    Ok(())
}

fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> Result<T, Failure> + Send) -> Result<T, Failure> {
    match threads {
        None | Some(0) => f(),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Failure::Runtime(e.to_string()))?
            .install(f),
    }
}

fn timestamp(t: SystemTime) -> String {
    humantime::format_rfc3339_seconds(t).to_string()
}

fn finish(
    command: &str,
    config: Value,
    report: Report,
    out: Option<&Path>,
    format: Option<Format>,
    started: SystemTime,
    elapsed: Duration,
) -> Result<i32, Failure> {
    let default_format = if command == "mr-check" || command == "solve" { Format::Json } else { Format::Csv };
    let fmt = format.unwrap_or(default_format);
    let body = match fmt {
        Format::Csv => report.csv.clone(),
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&report.json).map_err(|e| Failure::Runtime(e.to_string()))?;
            s.push('\n');
            s
        }
    };
    let Some(out) = out else {
        let shown = match (&report.text, format) {
            (Some(text), None) => text.clone(),
            _ => body,
        };
        print!("{shown}");
        let _ = std::io::stdout().flush();
        return Ok(report.exit);
    };
    let (started_at, finished_at, wall) = match std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|s| s.parse::<u64>().ok()) {
        Some(epoch) => {
            let t = timestamp(UNIX_EPOCH + Duration::from_secs(epoch));
            (t.clone(), t, 0.0)
        }
        None => (timestamp(started), timestamp(started + elapsed), elapsed.as_secs_f64()),
    };
    let manifest = json!({
        "schema": MANIFEST_SCHEMA,
        "tool": "perclab",
        "version": env!("CARGO_PKG_VERSION"),
        "build": BUILD_ID,
        "command": command,
        "config": config,
        "output": {
            "path": out.display().to_string(),
            "format": fmt,
            "rows": report.rows,
        },
        "started_at": started_at,
        "finished_at": finished_at,
        "wall_time_s": wall,
        "summary": report.summary,
        "exit_status": report.exit,
    });
    let mut manifest_text = serde_json::to_string_pretty(&manifest).map_err(|e| Failure::Runtime(e.to_string()))?;
    manifest_text.push('\n');
    let mut manifest_path = out.as_os_str().to_owned();
    manifest_path.push(".manifest.json");
    write_atomic(out, body.as_bytes())?;
    write_atomic(Path::new(&manifest_path), manifest_text.as_bytes())?;
    eprintln!("{command}: wrote {} rows to {}", report.rows, out.display());
    if let Some(text) = &report.text {
        eprint!("{text}");
    }
    Ok(report.exit)
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let fail = |e: std::io::Error| Failure::Runtime(format!("cannot write {}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(fail)?;
    tmp.write_all(bytes).map_err(fail)?;
    tmp.as_file().sync_all().map_err(fail)?;
    tmp.persist(path).map_err(|e| fail(e.error))?;
    Ok(())
}

/// Parses "a:b:k" into k points, linear `a + i·b` or geometric `a·b^i`.
pub fn parse_p_grid(spec: &str, geometric: bool) -> Result<Vec<f64>, Error> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || Error::Parse(format!("p-grid `{spec}` is not of the form a:b:k"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let a: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let b: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let k: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if k == 0 {
        return Err(Error::InvalidParameter("p-grid needs at least one point".into()));
    }
    let ps: Vec<f64> = (0..k)
        .map(|i| if geometric { a * b.powi(i as i32) } else { a + i as f64 * b })
        .collect();
    if let Some(p) = ps.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::InvalidParameter(format!("p-grid point {p} lies outside [0, 1]")));
    }
    Ok(ps)
}

fn model(c: &Common) -> Result<ModelParams, Failure> {
    Ok(ModelParams::new(need(c.n, "--n")?, c.kappa.unwrap_or(0.0))?)
}

fn seed(c: &Common) -> Result<u64, Failure> {
    need(c.seed, "--seed (stochastic commands take no default seed)")
}

fn trials(c: &Common) -> Result<u64, Failure> {
    need(c.trials, "--trials")
}

fn dims(c: &Common, ns: &Option<Vec<usize>>) -> Result<Vec<usize>, Failure> {
    match ns {
        Some(ns) if !ns.is_empty() => Ok(ns.clone()),
        _ => Ok(vec![need(c.n, "--n (or --ns)")?]),
    }
}

fn curve(a: &CurveArgs) -> Result<Report, Failure> {
    let params = model(&a.common)?;
    let ps = parse_p_grid(&need(a.p_grid.clone(), "--p-grid")?, a.geometric)?;
    let (t, s) = (trials(&a.common)?, seed(&a.common)?);
    let points = crate::estimators::estimate_curve(&params, &ps, t, s)?;
    let summary = json!({
        "points": points.len(),
        "theta_min": points.iter().map(|p| p.theta_hat).fold(f64::INFINITY, f64::min),
        "theta_max": points.iter().map(|p| p.theta_hat).fold(f64::NEG_INFINITY, f64::max),
    });
    Report::table(&points, summary)
}

#[derive(Serialize)]
struct ThresholdRow {
    n: usize,
    kappa: f64,
    theta: f64,
    p_hat: f64,
    p_lo: f64,
    p_hi: f64,
    alpha_hat: f64,
    trials_per_eval: u64,
    seed: u64,
    evaluations: u32,
    separated: bool,
}

fn threshold(a: &ThresholdArgs) -> Result<Report, Failure> {
    let theta = a.theta.unwrap_or(0.5);
    let rel_tol = a.rel_tol.unwrap_or(DEFAULT_REL_TOL);
    let (t, s) = (trials(&a.common)?, seed(&a.common)?);
    let kappa = a.common.kappa.unwrap_or(0.0);
    let rows = dims(&a.common, &a.ns)?
        .into_iter()
        .map(|n| {
            let params = ModelParams::new(n, kappa)?;
            let est = CriticalSample::draw(&params, t, s)?.threshold(theta, rel_tol)?;
            Ok(ThresholdRow {
                n,
                kappa,
                theta,
                p_hat: est.p_hat,
                p_lo: est.p_lo,
                p_hi: est.p_hi,
                alpha_hat: est.p_hat * (n as f64).exp2() / n as f64,
                trials_per_eval: t,
                seed: s,
                evaluations: est.evaluations,
                separated: est.separated,
            })
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let summary = json!({ "p_hat": rows.iter().map(|r| r.p_hat).collect::<Vec<_>>() });
    Report::table(&rows, summary)
}

#[derive(Serialize)]
struct SharpnessRow {
    n: usize,
    kappa: f64,
    eps: f64,
    p_lower: f64,
    p_upper: f64,
    ratio: f64,
    trials_per_eval: u64,
    seed: u64,
}

fn sharpness(a: &SharpnessArgs) -> Result<Report, Failure> {
    let eps = a.eps.unwrap_or(0.1);
    if !(eps > 0.0 && eps < 0.5) {
        return usage(format!("--eps must lie in (0, 1/2), got {eps}"));
    }
    let rel_tol = a.rel_tol.unwrap_or(DEFAULT_REL_TOL);
    let (t, s) = (trials(&a.common)?, seed(&a.common)?);
    let kappa = a.common.kappa.unwrap_or(0.0);
    let rows = dims(&a.common, &a.ns)?
        .into_iter()
        .map(|n| {
            let params = ModelParams::new(n, kappa)?;
            let w = sharpness_from(&CriticalSample::draw(&params, t, s)?, eps, rel_tol)?;
            Ok(SharpnessRow {
                n,
                kappa,
                eps,
                p_lower: w.lower.p_hat,
                p_upper: w.upper.p_hat,
                ratio: w.ratio,
                trials_per_eval: t,
                seed: s,
            })
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let summary = json!({ "ratio": rows.iter().map(|r| r.ratio).collect::<Vec<_>>() });
    Report::table(&rows, summary)
}

#[derive(Serialize)]
struct InfluenceRow {
    n: usize,
    kappa: f64,
    p: f64,
    i_hat: f64,
    method: crate::estimators::InfluenceMethod,
    stderr: f64,
    trials: u64,
}

fn influence(a: &InfluenceArgs) -> Result<Report, Failure> {
    let params = model(&a.common)?;
    let p = need(a.p, "--p")?;
    let exact = match a.method.unwrap_or(Method::Auto) {
        Method::Auto => params.n() <= EXACT_DISORDER_CAP,
        Method::Exact => true,
        Method::Mc => false,
    };
    let est = if exact {
        influence_exact(&params, p)?
    } else {
        influence_mc(&params, p, trials(&a.common)?, seed(&a.common)?)?
    };
    let row = InfluenceRow {
        n: params.n(),
        kappa: params.kappa(),
        p,
        i_hat: est.i_hat,
        method: est.method,
        stderr: est.stderr,
        trials: est.trials,
    };
    let summary = json!({ "i_hat": row.i_hat, "stderr": row.stderr });
    Report::table(&[row], summary)
}

#[derive(Serialize)]
struct MrRow {
    n: usize,
    kappa: f64,
    p: f64,
    dp: f64,
    lhs: f64,
    rhs: f64,
    gap: f64,
}

fn mr_check(a: &MrCheckArgs) -> Result<Report, Failure> {
    let params = model(&a.common)?;
    let r = margulis_russo_check(&params, need(a.p, "--p")?, a.dp.unwrap_or(1e-3))?;
    let row = MrRow { n: params.n(), kappa: params.kappa(), p: r.p, dp: r.dp, lhs: r.lhs, rhs: r.rhs, gap: r.gap };
    let summary = json!({ "gap": row.gap });
    let mut report = Report::table(std::slice::from_ref(&row), summary)?;
    report.json = serde_json::to_value(&row).map_err(|e| Failure::Runtime(e.to_string()))?;
    Ok(report)
}

#[derive(Serialize)]
struct AngleRow {
    n: usize,
    kappa: f64,
    m: usize,
    samples: u64,
    max_diff: u64,
    max_ratio: f64,
}

fn angle_scan_cmd(a: &AngleScanArgs) -> Result<Report, Failure> {
    let (t, s) = (trials(&a.common)?, seed(&a.common)?);
    let kappa = a.common.kappa.unwrap_or(0.0);
    let mut rows = Vec::new();
    for n in dims(&a.common, &a.ns)? {
        let params = ModelParams::new(n, kappa)?;
        let dists = a.dists.clone().unwrap_or_else(|| (0..=n).collect());
        for r in angle_scan(&params, &dists, t, s)? {
            rows.push(AngleRow { n, kappa, m: r.m, samples: r.samples, max_diff: r.max_diff, max_ratio: r.max_ratio });
        }
    }
    let summary = json!({ "max_ratio": rows.iter().map(|r| r.max_ratio).fold(0.0, f64::max) });
    Report::table(&rows, summary)
}

#[derive(Serialize)]
struct BoostRow {
    n: usize,
    kappa: f64,
    p: f64,
    active: usize,
    delta: f64,
    k_max: usize,
    trials: u64,
    found: bool,
    size: Option<usize>,
    estimate: Option<f64>,
    lower_bound: Option<f64>,
    /// Space-separated spin vectors.
    set: String,
}

fn load_instance(path: &Path) -> Result<Disorder, Failure> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    Ok(Instance::from_json(&text)?.into_disorder()?)
}

fn boost_search(a: &BoostArgs) -> Result<Report, Failure> {
    let (t, s) = (trials(&a.common)?, seed(&a.common)?);
    let d = match &a.instance {
        Some(path) => {
            let d = load_instance(path)?;
            match a.p {
                Some(p) => d.with_probability(p),
                None => d,
            }
        }
        None => {
            let params = model(&a.common)?;
            let p = need(a.p, "--p (or --instance)")?;
            sample_disorder(&params, p, &mut stream(s, tag::INSTANCE, 0))?.with_probability(p)
        }
    };
    let delta = a.delta.unwrap_or(0.2);
    let k_max = a.k_max.unwrap_or(8);
    let cert = boosting_search(&d, delta, k_max, t, s)?;
    let p = d.probability().unwrap_or(d.active().len() as f64 / (d.params().n() as f64).exp2());
    let row = BoostRow {
        n: d.params().n(),
        kappa: d.params().kappa(),
        p,
        active: d.active().len(),
        delta,
        k_max,
        trials: t,
        found: cert.is_some(),
        size: cert.as_ref().map(|c| c.set.len()),
        estimate: cert.as_ref().map(|c| c.estimate),
        lower_bound: cert.as_ref().map(|c| c.lower_bound),
        set: cert.as_ref().map(|c| c.set.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")).unwrap_or_default(),
    };
    let summary = json!({ "found": row.found, "size": row.size });
    let mut report = Report::table(std::slice::from_ref(&row), summary)?;
    report.json = json!({ "disorder": d.to_instance(), "certificate": cert });
    Ok(report)
}

#[derive(Serialize)]
struct RemovalRow {
    n: usize,
    kappa: f64,
    k: usize,
    p: f64,
    set_size: u64,
    n_star: usize,
    budget: usize,
    trials: u64,
    q_hat: f64,
    q_stderr: f64,
    q_threshold: f64,
    removal_rate: f64,
    removal_stderr: f64,
    implied_c: Option<f64>,
}

fn removal(a: &RemovalArgs) -> Result<Report, Failure> {
    let params = model(&a.common)?;
    let (t, s) = (trials(&a.common)?, seed(&a.common)?);
    let k = a.k.unwrap_or(2);
    let p = need(a.p, "--p")?;
    let ap = AdmissibilityParams::new(a.c2.unwrap_or(DEFAULT_C2))?;
    let rp = RemovalExperimentParams::new(params.n(), k, t)?;
    let set: CubeSet = solution_set(&sample_disorder(&params, p, &mut stream(s, tag::INSTANCE, 0))?)?;
    let reference = random_admissible(params.n(), k, &ap, &mut stream(s, tag::REFERENCE, 0))?;
    let map = build_gentle_map(&reference, &ap)?;
    let rep = removal_experiment(&set, &params, &map, &rp, s)?;
    let row = RemovalRow {
        n: params.n(),
        kappa: params.kappa(),
        k,
        p,
        set_size: set.len(),
        n_star: rp.n_star,
        budget: rp.budget(),
        trials: t,
        q_hat: rep.q.estimate,
        q_stderr: rep.q.stderr,
        q_threshold: rp.q_threshold,
        removal_rate: rep.removal.estimate,
        removal_stderr: rep.removal.stderr,
        implied_c: rep.implied_c,
    };
    let summary = json!({ "q_hat": row.q_hat, "removal_rate": row.removal_rate, "implied_c": row.implied_c });
    let mut report = Report::table(std::slice::from_ref(&row), summary)?;
    report.json = json!({ "summary": row, "rate_by_budget": rep.rate_by_budget });
    Ok(report)
}

#[derive(Serialize)]
struct SuiteRow<'a> {
    check: &'a str,
    cases: u64,
    failures: u64,
    status: &'a str,
    first_failure: Option<&'a str>,
}

fn suite(a: &SuiteArgs) -> Result<Report, Failure> {
    #[cfg(feature = "self-test")]
    let mutate = a.self_test_mutate;
    #[cfg(not(feature = "self-test"))]
    let mutate = false;
    let cfg = SuiteConfig {
        seed: a.common.seed.unwrap_or(0),
        cases: a.cases.or(a.common.trials).unwrap_or(DEFAULT_CASES),
        c2: a.c2.unwrap_or(DEFAULT_C2),
        mutate,
    };
    let report = lemma_suite(&cfg)?;
    let rows: Vec<SuiteRow> = report
        .rows
        .iter()
        .map(|r| SuiteRow {
            check: &r.check,
            cases: r.cases,
            failures: r.failures,
            status: if r.passed() { "PASS" } else { "FAIL" },
            first_failure: r.first_failure.as_deref(),
        })
        .collect();
    let summary = json!({
        "checks": rows.len(),
        "failed_checks": report.rows.iter().filter(|r| !r.passed()).count(),
    });
    let mut out = Report::table(&rows, summary)?;
    out.json = serde_json::to_value(&report).map_err(|e| Failure::Runtime(e.to_string()))?;
    out.text = Some(report.table());
    out.exit = if report.all_passed() { 0 } else { 1 };
    Ok(out)
}

#[derive(Serialize)]
struct SolveRow {
    n: usize,
    kappa: f64,
    active: usize,
    backend: Backend,
    empty: bool,
    count: u64,
    witness: Option<String>,
}

fn solve_cmd(a: &SolveArgs) -> Result<Report, Failure> {
    let d = load_instance(&need(a.instance.clone(), "--instance")?)?;
    let r = solve_with(&d, a.backend.map(Backend::from).unwrap_or(Backend::BitParallel))?;
    let row = SolveRow {
        n: d.params().n(),
        kappa: d.params().kappa(),
        active: d.active().len(),
        backend: r.backend,
        empty: r.empty,
        count: r.count,
        witness: r.witness.as_ref().map(|w| w.to_string()),
    };
    let summary = json!({ "empty": row.empty, "count": row.count });
    let mut report = Report::table(std::slice::from_ref(&row), summary)?;
    report.json = serde_json::to_value(&row).map_err(|e| Failure::Runtime(e.to_string()))?;
    Ok(report)
}
