//! Command-line front end: `simulate`, `moments`, `estimate`, `study`, `lrd`.
//!
//! Every value can come from a flag, from a flat TOML file given with
//! `--config` (keys are the flag names without dashes, e.g. `t-grid`, `N`),
//! or from a default, in that order of precedence. When output goes to a
//! file, the fully resolved configuration is written beside it as
//! `<out>.config.toml`; that file can be fed back through `--config`.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;
use toml::{Table, Value};

use crate::error::{FbpError, Result};
use crate::estimator::{
    default_observation_time, run_mc_study, sample_moments, solve_moment_equations,
    write_replicates_csv, EstimateResult, KnownParams, MomentSummary, SolverOptions, StudyConfig,
};
use crate::moments::{
    fit_decay_exponent, log_grid, write_covariance_grid, write_moment_table, DependenceClass,
    DependenceFit, Moments,
};
use crate::params::ProcessParams;
use crate::rng::RngStream;
use crate::sim::{
    simulate_binomial_path, simulate_fbp_events, simulate_fbp_path, write_paths_csv, Method,
};

#[derive(Parser, Debug)]
#[command(name = "fbp", version, about = "Fractional binomial process toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Simulate sample paths and write them as CSV.
    Simulate(SimulateArgs),
    /// Tabulate closed-form moments over a time grid.
    Moments(MomentsArgs),
    /// Estimate (lambda, nu) from a sample by the method of moments.
    Estimate(EstimateArgs),
    /// Run a replicated Monte Carlo estimation study.
    Study(StudyArgs),
    /// Fit the correlation decay exponent and classify the dependence.
    Lrd(LrdArgs),
}

#[derive(Args, Debug, Default)]
pub struct ProcessFlags {
    /// Birth rate per empty slot.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Death rate per individual.
    #[arg(long)]
    pub mu: Option<f64>,
    /// Fractional order in (0, 1].
    #[arg(long)]
    pub nu: Option<f64>,
    /// Capacity.
    #[arg(long = "N", value_name = "N")]
    pub capacity: Option<u32>,
    /// Initial population.
    #[arg(long = "M", value_name = "M")]
    pub initial: Option<u32>,
}

#[derive(Args, Debug, Default)]
pub struct CommonFlags {
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; 0 uses all cores.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Output file; standard output if absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// csv or json.
    #[arg(long)]
    pub format: Option<String>,
    /// Flat TOML file of default values keyed by flag name.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub process: ProcessFlags,
    #[command(flatten)]
    pub common: CommonFlags,
    /// Simulate each path on [0, horizon].
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Simulate each path for a fixed number of jumps instead.
    #[arg(long)]
    pub events: Option<usize>,
    #[arg(long)]
    pub paths: Option<usize>,
    /// fbp (default) or classical.
    #[arg(long)]
    pub method: Option<String>,
}

#[derive(Args, Debug)]
pub struct MomentsArgs {
    #[command(flatten)]
    pub process: ProcessFlags,
    #[command(flatten)]
    pub common: CommonFlags,
    /// Comma list, `log:a:b:n` or `lin:a:b:n`.
    #[arg(long = "t-grid")]
    pub t_grid: Option<String>,
    /// Comma list of earlier times; adds an s,t covariance grid.
    #[arg(long)]
    pub s: Option<String>,
}

#[derive(Args, Debug)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub process: ProcessFlags,
    #[command(flatten)]
    pub common: CommonFlags,
    /// CSV of counts (one column) or of `m1,m2,sample_size,observation_time`.
    /// Without it a sample of J paths is simulated at lambda, nu.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long = "J", value_name = "J")]
    pub j: Option<usize>,
    /// Observation time of the sample.
    #[arg(long = "T", value_name = "T")]
    pub t: Option<f64>,
    #[command(flatten)]
    pub solver: SolverFlags,
}

#[derive(Args, Debug, Default)]
pub struct SolverFlags {
    #[arg(long = "lambda-min")]
    pub lambda_min: Option<f64>,
    #[arg(long = "lambda-max")]
    pub lambda_max: Option<f64>,
    #[arg(long)]
    pub tolerance: Option<f64>,
}

#[derive(Args, Debug)]
pub struct StudyArgs {
    #[command(flatten)]
    pub process: ProcessFlags,
    #[command(flatten)]
    pub common: CommonFlags,
    #[arg(long = "J", value_name = "J")]
    pub j: Option<usize>,
    #[arg(long = "K", value_name = "K")]
    pub k: Option<usize>,
    #[arg(long = "T", value_name = "T")]
    pub t: Option<f64>,
    /// fbp (default), marginal or classical.
    #[arg(long)]
    pub method: Option<String>,
    #[command(flatten)]
    pub solver: SolverFlags,
}

#[derive(Args, Debug)]
pub struct LrdArgs {
    #[command(flatten)]
    pub process: ProcessFlags,
    #[command(flatten)]
    pub common: CommonFlags,
    /// fbp (the process) or fbn (its increments).
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub s: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long = "t-grid")]
    pub t_grid: Option<String>,
    /// Fit `t,value` pairs from this CSV instead of the closed forms.
    #[arg(long)]
    pub points: Option<PathBuf>,
}

/// Parse `args` (including the program name), run, and return the exit
/// code. Errors are reported on standard error.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Execute a parsed command. `Ok` carries the exit code, which is non-zero
/// only for an estimate that did not converge.
pub fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Moments(a) => cmd_moments(a),
        Command::Estimate(a) => cmd_estimate(a),
        Command::Study(a) => cmd_study(a),
        Command::Lrd(a) => cmd_lrd(a),
    }
}

// ---------- configuration resolution ----------

trait ConfigValue: Sized + Clone {
    fn from_toml(v: &Value) -> Option<Self>;
    fn to_toml(&self) -> Value;
}

impl ConfigValue for f64 {
    fn from_toml(v: &Value) -> Option<Self> {
        match v {
            Value::Float(x) => Some(*x),
            Value::Integer(i) => Some(*i as f64),
            _ => None,
        }
    }
    fn to_toml(&self) -> Value {
        Value::Float(*self)
    }
}

macro_rules! int_config {
    ($($t:ty),*) => {$(
        impl ConfigValue for $t {
            fn from_toml(v: &Value) -> Option<Self> {
                match v {
                    Value::Integer(i) => <$t>::try_from(*i).ok(),
                    Value::String(s) => s.parse().ok(),
                    _ => None,
                }
            }
            fn to_toml(&self) -> Value {
                i64::try_from(*self).map_or_else(|_| Value::String(self.to_string()), Value::Integer)
            }
        }
    )*};
}
int_config!(u32, u64, usize);

impl ConfigValue for String {
    fn from_toml(v: &Value) -> Option<Self> {
        v.as_str().map(str::to_owned)
    }
    fn to_toml(&self) -> Value {
        Value::String(self.clone())
    }
}

impl ConfigValue for PathBuf {
    fn from_toml(v: &Value) -> Option<Self> {
        v.as_str().map(PathBuf::from)
    }
    fn to_toml(&self) -> Value {
        Value::String(self.display().to_string())
    }
}

struct Resolver {
    command: &'static str,
    file: Table,
    used: BTreeSet<String>,
    resolved: Table,
}

impl Resolver {
    fn new(command: &'static str, config: Option<&Path>) -> Result<Self> {
        let file = match config {
            Some(p) => {
                let text = std::fs::read_to_string(p)?;
                text.parse::<Table>()
                    .map_err(|e| FbpError::Parse(format!("{}: {e}", p.display())))?
            }
            None => Table::new(),
        };
        if let Some(c) = file.get("command") {
            if c.as_str() != Some(command) {
                return Err(FbpError::invalid(format!(
                    "config file is for command {c}, not {command}"
                )));
            }
        }
        Ok(Resolver {
            command,
            file,
            used: BTreeSet::new(),
            resolved: Table::new(),
        })
    }

    fn opt<T: ConfigValue>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>> {
        self.used.insert(key.to_owned());
        let v = match flag {
            Some(v) => Some(v),
            None => match self.file.get(key) {
                Some(raw) => Some(T::from_toml(raw).ok_or_else(|| {
                    FbpError::invalid(format!("config key {key} has the wrong type: {raw}"))
                })?),
                None => None,
            },
        };
        if let Some(v) = &v {
            self.resolved.insert(key.to_owned(), v.to_toml());
        }
        Ok(v)
    }

    fn or<T: ConfigValue>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T> {
        let v = self.opt(key, flag)?.unwrap_or(default);
        self.resolved.insert(key.to_owned(), v.to_toml());
        Ok(v)
    }

    fn req<T: ConfigValue>(&mut self, key: &str, flag: Option<T>) -> Result<T> {
        self.opt(key, flag)?
            .ok_or_else(|| FbpError::invalid(format!("missing required value --{key}")))
    }

    /// Reject config keys nothing asked for.
    fn finish(&self) -> Result<()> {
        let unknown: Vec<&String> = self
            .file
            .keys()
            .filter(|k| *k != "command" && !self.used.contains(*k))
            .collect();
        if !unknown.is_empty() {
            return Err(FbpError::invalid(format!(
                "unknown config keys for {}: {unknown:?}",
                self.command
            )));
        }
        Ok(())
    }

    fn to_toml_string(&self) -> String {
        let mut t = Table::new();
        t.insert("command".into(), Value::String(self.command.into()));
        t.extend(self.resolved.clone());
        toml::to_string(&t).expect("flat table serialises")
    }
}

struct Common {
    seed: u64,
    threads: usize,
    out: Option<PathBuf>,
    format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Csv,
    Json,
}

fn resolve_common(r: &mut Resolver, c: CommonFlags, default_format: &str) -> Result<Common> {
    let seed = r.or("seed", c.seed, 0u64)?;
    let threads = r.or("threads", c.threads, 0usize)?;
    let out = r.opt("out", c.out)?;
    let format = match r
        .or("format", c.format, default_format.to_owned())?
        .as_str()
    {
        "csv" => Format::Csv,
        "json" => Format::Json,
        other => return Err(FbpError::invalid(format!("unknown format {other}"))),
    };
    Ok(Common {
        seed,
        threads,
        out,
        format,
    })
}

fn resolve_params(r: &mut Resolver, f: ProcessFlags) -> Result<ProcessParams> {
    let lambda = r.req("lambda", f.lambda)?;
    let mu = r.req("mu", f.mu)?;
    let nu = r.req("nu", f.nu)?;
    let n = r.req("N", f.capacity)?;
    let m = r.req("M", f.initial)?;
    ProcessParams::new(lambda, mu, nu, n, m)
}

fn resolve_solver(r: &mut Resolver, f: SolverFlags) -> Result<SolverOptions> {
    let d = SolverOptions::default();
    let o = SolverOptions {
        lambda_min: r.or("lambda-min", f.lambda_min, d.lambda_min)?,
        lambda_max: r.or("lambda-max", f.lambda_max, d.lambda_max)?,
        tolerance: r.or("tolerance", f.tolerance, d.tolerance)?,
    };
    o.validate()?;
    Ok(o)
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| FbpError::invalid(format!("thread pool: {e}")))?;
    pool.install(f)
}

/// Write the main output, then the resolved config beside it.
fn emit(
    r: &Resolver,
    out: Option<&Path>,
    body: impl FnOnce(&mut dyn Write) -> Result<()>,
) -> Result<()> {
    match out {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p)?);
            body(&mut w)?;
            w.flush()?;
            std::fs::write(sidecar(p, ".config.toml"), r.to_toml_string())?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            body(&mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

/// `out` with `suffix` appended to the full file name.
fn sidecar(out: &Path, suffix: &str) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// `out` with its extension replaced by `ext` (e.g. `m.csv` → `m.cov.csv`).
fn sibling(out: &Path, ext: &str) -> PathBuf {
    out.with_extension(ext)
}

fn write_json<T: Serialize>(w: &mut dyn Write, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut *w, value).map_err(|e| FbpError::Io(io::Error::other(e)))?;
    writeln!(w)?;
    Ok(())
}

/// `0,1,2.5`, `log:a:b:n` or `lin:a:b:n`.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let bad = || FbpError::Parse(format!("bad grid specification {text:?}"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    let grid = if let Some(rest) = text.strip_prefix("log:").or(text.strip_prefix("lin:")) {
        let parts: Vec<&str> = rest.split(':').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let (a, b) = (num(parts[0])?, num(parts[1])?);
        let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
        if text.starts_with("log:") {
            log_grid(a, b, n)?
        } else {
            if !(b > a && n >= 2) || !a.is_finite() || !b.is_finite() {
                return Err(bad());
            }
            (0..n)
                .map(|i| {
                    if i == n - 1 {
                        b
                    } else {
                        a + (b - a) * i as f64 / (n - 1) as f64
                    }
                })
                .collect()
        }
    } else {
        text.split(',').map(num).collect::<Result<Vec<_>>>()?
    };
    if grid.is_empty() || grid.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
        return Err(FbpError::invalid(format!(
            "grid {text:?} needs finite times >= 0"
        )));
    }
    Ok(grid)
}

// ---------- commands ----------

fn cmd_simulate(a: SimulateArgs) -> Result<i32> {
    let mut r = Resolver::new("simulate", a.common.config.as_deref())?;
    let common = resolve_common(&mut r, a.common, "csv")?;
    let params = resolve_params(&mut r, a.process)?;
    let horizon = r.opt("horizon", a.horizon)?;
    let events = r.opt("events", a.events)?;
    let paths = r.or("paths", a.paths, 5usize)?;
    let method = r.or("method", a.method, "fbp".to_owned())?;
    r.finish()?;
    if common.format != Format::Csv {
        return Err(FbpError::invalid("simulate writes csv only"));
    }
    if paths == 0 {
        return Err(FbpError::invalid("--paths must be at least 1"));
    }
    let classical = match method.as_str() {
        "fbp" => false,
        "classical" => true,
        m => return Err(FbpError::invalid(format!("unknown method {m}"))),
    };
    let simulate = |i: usize| {
        let mut s = RngStream::new(common.seed, i as u64);
        match (horizon, events) {
            (Some(h), None) if classical => simulate_binomial_path(&params, h, &mut s),
            (Some(h), None) => simulate_fbp_path(&params, h, &mut s),
            (None, Some(k)) => {
                let p = if classical {
                    ProcessParams { nu: 1.0, ..params }
                } else {
                    params
                };
                simulate_fbp_events(&p, k, &mut s)
            }
            _ => Err(FbpError::invalid(
                "give exactly one of --horizon and --events",
            )),
        }
    };
    let all = in_pool(common.threads, || {
        (0..paths)
            .into_par_iter()
            .map(simulate)
            .collect::<Result<Vec<_>>>()
    })?;
    emit(&r, common.out.as_deref(), |w| write_paths_csv(w, &all))?;
    Ok(0)
}

#[derive(Serialize)]
struct MomentsJson<'a> {
    moments: &'a [crate::moments::MomentPoint],
    #[serde(skip_serializing_if = "Option::is_none")]
    covariance: Option<&'a [crate::moments::CovariancePoint]>,
}

fn cmd_moments(a: MomentsArgs) -> Result<i32> {
    let mut r = Resolver::new("moments", a.common.config.as_deref())?;
    let common = resolve_common(&mut r, a.common, "csv")?;
    let params = resolve_params(&mut r, a.process)?;
    let grid = parse_grid(&r.req("t-grid", a.t_grid)?)?;
    let s_list = r.opt("s", a.s)?.map(|s| parse_grid(&s)).transpose()?;
    r.finish()?;
    let m = Moments::new(&params)?;
    let (points, cov) = in_pool(common.threads, || {
        let points = grid
            .par_iter()
            .map(|&t| m.point(t))
            .collect::<Result<Vec<_>>>()?;
        let cov = match &s_list {
            Some(ss) => {
                let pairs: Vec<(f64, f64)> = ss
                    .iter()
                    .flat_map(|&s| grid.iter().filter(move |&&t| t >= s).map(move |&t| (s, t)))
                    .collect();
                Some(
                    pairs
                        .par_iter()
                        .map(|&(s, t)| m.covariance_point(s, t))
                        .collect::<Result<Vec<_>>>()?,
                )
            }
            None => None,
        };
        Ok((points, cov))
    })?;
    match common.format {
        Format::Json => emit(&r, common.out.as_deref(), |w| {
            write_json(
                w,
                &MomentsJson {
                    moments: &points,
                    covariance: cov.as_deref(),
                },
            )
        })?,
        Format::Csv => {
            emit(&r, common.out.as_deref(), |w| {
                write_moment_table(&mut *w, &points)?;
                if let (None, Some(c)) = (&common.out, &cov) {
                    writeln!(w)?;
                    write_covariance_grid(&mut *w, c)?;
                }
                Ok(())
            })?;
            if let (Some(out), Some(c)) = (&common.out, &cov) {
                let f = BufWriter::new(File::create(sibling(out, "cov.csv"))?);
                write_covariance_grid(f, c)?;
            }
        }
    }
    Ok(0)
}

#[derive(Serialize)]
struct EstimateReport {
    #[serde(flatten)]
    result: EstimateResult,
    summary: MomentSummary,
    known: KnownParams,
}

/// Counts (one per line, optional header) or a one-row moment summary with
/// header `m1,m2,sample_size,observation_time`.
fn read_sample(path: &Path, t: Option<f64>, capacity: u32) -> Result<MomentSummary> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| FbpError::Parse(format!("{}: {e}", path.display())))?;
    let rows: Vec<csv::StringRecord> = rdr
        .records()
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| FbpError::Parse(format!("{}: {e}", path.display())))?;
    let parse_err =
        |line: usize, msg: &str| FbpError::Parse(format!("{}:{}: {msg}", path.display(), line + 1));
    let Some(first) = rows.first() else {
        return Err(FbpError::Parse(format!("{}: empty file", path.display())));
    };
    if first.iter().any(|f| f == "m1") {
        let col = |name: &str| {
            first
                .iter()
                .position(|f| f == name)
                .ok_or_else(|| parse_err(0, &format!("missing column {name}")))
        };
        let (c1, c2, cn, ct) = (
            col("m1")?,
            col("m2")?,
            col("sample_size")?,
            col("observation_time")?,
        );
        let row = rows
            .get(1)
            .ok_or_else(|| parse_err(1, "missing summary row"))?;
        let field = |c: usize| row.get(c).ok_or_else(|| parse_err(1, "short row"));
        let num = |c: usize| -> Result<f64> {
            field(c)?.parse().map_err(|_| parse_err(1, "not a number"))
        };
        let n: usize = field(cn)?
            .parse()
            .map_err(|_| parse_err(1, "bad sample_size"))?;
        let file_t = num(ct)?;
        if let Some(t) = t {
            if t != file_t {
                return Err(FbpError::invalid(format!(
                    "--T {t} disagrees with the file's observation_time {file_t}"
                )));
            }
        }
        return MomentSummary::new(num(c1)?, num(c2)?, n, file_t);
    }
    let start = usize::from(first.get(0).is_some_and(|f| f.parse::<u32>().is_err()));
    let mut counts = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate().skip(start) {
        if row.len() != 1 {
            return Err(parse_err(i, "expected a single count per line"));
        }
        let v: u32 = row[0].parse().map_err(|_| parse_err(i, "not a count"))?;
        if v > capacity {
            return Err(parse_err(i, "count exceeds N"));
        }
        counts.push(v);
    }
    let t = t.ok_or_else(|| FbpError::invalid("--T is required with a counts file"))?;
    sample_moments(&counts, t)
}

fn cmd_estimate(a: EstimateArgs) -> Result<i32> {
    let mut r = Resolver::new("estimate", a.common.config.as_deref())?;
    let common = resolve_common(&mut r, a.common, "json")?;
    let mu = r.req("mu", a.process.mu)?;
    let capacity = r.req("N", a.process.capacity)?;
    let initial = r.req("M", a.process.initial)?;
    let input = r.opt("input", a.input)?;
    let t = r.opt("T", a.t)?;
    let solver = resolve_solver(&mut r, a.solver)?;
    let summary = match &input {
        Some(path) => {
            let s = read_sample(path, t, capacity)?;
            r.resolved
                .insert("T".into(), Value::Float(s.observation_time));
            s
        }
        None => {
            let lambda = r.req("lambda", a.process.lambda)?;
            let nu = r.req("nu", a.process.nu)?;
            let j = r.or("J", a.j, 500usize)?;
            let p = ProcessParams::new(lambda, mu, nu, capacity, initial)?;
            let t = match t {
                Some(t) => t,
                None => default_observation_time(&p)?,
            };
            r.resolved.insert("T".into(), Value::Float(t));
            if j < 2 {
                return Err(FbpError::invalid("--J must be at least 2"));
            }
            let mut s = RngStream::new(common.seed, 0);
            let xs = (0..j)
                .map(|_| Ok(simulate_fbp_path(&p, t, &mut s)?.terminal()))
                .collect::<Result<Vec<_>>>()?;
            sample_moments(&xs, t)?
        }
    };
    r.finish()?;
    if common.format != Format::Json {
        return Err(FbpError::invalid("estimate writes json only"));
    }
    let known = KnownParams {
        mu,
        initial,
        capacity,
    };
    let result = in_pool(common.threads, || {
        solve_moment_equations(&summary, known, &solver)
    })?;
    let report = EstimateReport {
        result,
        summary,
        known,
    };
    emit(&r, common.out.as_deref(), |w| write_json(w, &report))?;
    if !result.converged {
        eprintln!(
            "error: moment equations not solved (residual {:e})",
            result.residual_norm
        );
        return Ok(2);
    }
    Ok(0)
}

fn parse_method(m: &str) -> Result<Method> {
    match m {
        "fbp" => Ok(Method::Fractional),
        "marginal" => Ok(Method::Marginal),
        "classical" => Ok(Method::Classical),
        other => Err(FbpError::invalid(format!("unknown method {other}"))),
    }
}

fn cmd_study(a: StudyArgs) -> Result<i32> {
    let mut r = Resolver::new("study", a.common.config.as_deref())?;
    let common = resolve_common(&mut r, a.common, "json")?;
    let params = resolve_params(&mut r, a.process)?;
    let j = r.or("J", a.j, 500usize)?;
    let k = r.or("K", a.k, 100usize)?;
    let t = match r.opt("T", a.t)? {
        Some(t) => t,
        None => default_observation_time(&params)?,
    };
    r.resolved.insert("T".into(), Value::Float(t));
    let method = parse_method(&r.or("method", a.method, "fbp".to_owned())?)?;
    let solver = resolve_solver(&mut r, a.solver)?;
    r.finish()?;
    if common.format != Format::Json {
        return Err(FbpError::invalid("study writes a json report"));
    }
    let cfg = StudyConfig {
        j,
        k,
        t: Some(t),
        seed: common.seed,
        solver,
        method,
    };
    let report = in_pool(common.threads, || run_mc_study(&params, &cfg))?;
    emit(&r, common.out.as_deref(), |w| write_json(w, &report))?;
    if let Some(out) = &common.out {
        let f = BufWriter::new(File::create(sibling(out, "replicates.csv"))?);
        write_replicates_csv(f, &report.replicates)?;
    }
    Ok(0)
}

#[derive(Serialize)]
struct LrdReport {
    mode: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    target: Option<f64>,
    #[serde(flatten)]
    fit: DependenceFit,
    classification: &'static str,
}

fn class_label(c: DependenceClass) -> &'static str {
    match c {
        DependenceClass::LongRange => "LRD",
        DependenceClass::ShortRange => "SRD",
        DependenceClass::Unclassified => "unclassified",
    }
}

fn read_points(path: &Path) -> Result<Vec<(f64, f64)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| FbpError::Parse(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| FbpError::Parse(format!("{}: {e}", path.display())))?;
        let parsed = (
            rec.get(0).map(str::parse::<f64>),
            rec.get(1).map(str::parse::<f64>),
        );
        match parsed {
            (Some(Ok(t)), Some(Ok(y))) if rec.len() == 2 => out.push((t, y)),
            _ if i == 0 => continue, // header
            _ => {
                return Err(FbpError::Parse(format!(
                    "{}:{}: expected t,value",
                    path.display(),
                    i + 1
                )))
            }
        }
    }
    Ok(out)
}

fn cmd_lrd(a: LrdArgs) -> Result<i32> {
    let mut r = Resolver::new("lrd", a.common.config.as_deref())?;
    let common = resolve_common(&mut r, a.common, "json")?;
    if common.format != Format::Json {
        return Err(FbpError::invalid("lrd writes json only"));
    }
    let report = if let Some(path) = r.opt("points", a.points)? {
        r.finish()?;
        let fit = fit_decay_exponent(&read_points(&path)?)?;
        LrdReport {
            mode: "points".into(),
            s: None,
            delta: None,
            target: None,
            fit,
            classification: class_label(fit.classify()),
        }
    } else {
        let params = resolve_params(&mut r, a.process)?;
        let mode = r.or("mode", a.mode, "fbp".to_owned())?;
        let s = r.or("s", a.s, 1.0)?;
        let grid = parse_grid(&r.or("t-grid", a.t_grid, "log:1e2:1e5:7".to_owned())?)?;
        let delta = if mode == "fbn" {
            Some(r.or("delta", a.delta, 1.0)?)
        } else {
            None
        };
        r.finish()?;
        if !(s > 0.0) {
            return Err(FbpError::invalid("--s must be positive"));
        }
        if grid.iter().any(|&t| t < 10.0 * s) {
            return Err(FbpError::invalid(
                "every grid time must be at least 10 s to stay in the decay regime",
            ));
        }
        let m = Moments::new(&params)?;
        let nu = params.nu;
        let (fit, target) = match (mode.as_str(), delta) {
            ("fbp", _) => (m.lrd_fit(s, &grid)?, nu / 2.0),
            ("fbn", Some(d)) => {
                if !(d > 0.0) {
                    return Err(FbpError::invalid("--delta must be positive"));
                }
                (m.fbn_fit(s, d, &grid)?, 1.0 + nu / 2.0)
            }
            (other, _) => return Err(FbpError::invalid(format!("unknown mode {other}"))),
        };
        LrdReport {
            mode,
            s: Some(s),
            delta,
            target: Some(target),
            fit,
            classification: class_label(fit.classify()),
        }
    };
    emit(&r, common.out.as_deref(), |w| write_json(w, &report))?;
    Ok(0)
}
