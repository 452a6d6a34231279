//! The `rangecap` command line.
//!
//! Exit codes: 0 success, 1 a checked property failed, 2 usage or input
//! error, 3 numeric or resource failure.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::capacity::{capacity_exact, capacity_mc, check_decomposition, HorizonSchedule};
use crate::error::{Error, Result};
use crate::experiments::{self, report, Experiment, ExperimentConfig};
use crate::green::{build_green_table, fourier, load_table, save_table, GreenMethod, GreenTable};
use crate::lattice::{parse_site, read_sites, Site};
use crate::range::{dyadic_check, range_capacities};
use crate::rng::{Purpose, RngStream, StreamId};
use crate::walk::{sample_path, Derived, ModelSpec, WalkModel};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ASSERTION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "rangecap", version, about = "Capacity of the range of stable subordinate random walks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample one path and write its positions as CSV.
    Walk(WalkArgs),
    /// Build or query lattice Green tables.
    #[command(subcommand)]
    Green(GreenCommand),
    /// Capacities of finite site sets.
    #[command(subcommand)]
    Capacity(CapacityCommand),
    /// Capacities of simulated ranges.
    #[command(subcommand)]
    Range(RangeCommand),
    /// Run a configured Monte Carlo experiment.
    Experiment(ExperimentArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Kind {
    Simple,
    Subordinate,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum DerivedArg {
    LoopFree,
    LoopInserted,
}

#[derive(Args, Debug, Clone)]
struct ModelArgs {
    /// Base step law.
    #[arg(long, value_enum, default_value = "subordinate")]
    model: Kind,
    /// Stability index in (0, 2); ignored for the simple walk.
    #[arg(long, default_value_t = 0.8)]
    alpha: f64,
    /// Lattice dimension.
    #[arg(long, default_value_t = 3)]
    d: usize,
    /// Loop-free or loop-inserted version of the base law.
    #[arg(long, value_enum)]
    derived: Option<DerivedArg>,
}

impl ModelArgs {
    fn spec(&self) -> ModelSpec {
        let base = match self.model {
            Kind::Simple => ModelSpec::simple(self.d),
            Kind::Subordinate => ModelSpec::subordinate(self.d, self.alpha),
        };
        base.with_derived(self.derived.map(|v| match v {
            DerivedArg::LoopFree => Derived::LoopFree,
            DerivedArg::LoopInserted => Derived::LoopInserted,
        }))
    }

    fn build(&self) -> Result<WalkModel> {
        WalkModel::new(self.spec())
    }
}

#[derive(Args, Debug)]
struct WalkArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Number of steps.
    #[arg(long, default_value_t = 100)]
    steps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Stream index of the path.
    #[arg(long, default_value_t = 0)]
    index: u64,
    /// CSV file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Backend {
    Fourier,
    Renewal,
    Occupation,
}

#[derive(Subcommand, Debug)]
enum GreenCommand {
    /// Compute a table on the window |x|_inf <= radius and save it.
    Build(GreenBuildArgs),
    /// Print G at the given sites.
    Probe(GreenProbeArgs),
}

#[derive(Args, Debug)]
struct GreenBuildArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 16)]
    radius: usize,
    #[arg(long, value_enum, default_value = "fourier")]
    backend: Backend,
    /// Fourier grid size per axis (default depends on d and the radius).
    #[arg(long)]
    grid: Option<usize>,
    /// Terms of the renewal series.
    #[arg(long, default_value_t = 4096)]
    terms: u64,
    /// Paths of the occupation backend.
    #[arg(long, default_value_t = 100_000)]
    paths: u64,
    /// Horizon of the occupation backend.
    #[arg(long, default_value_t = 4096)]
    horizon: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output table file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct GreenProbeArgs {
    /// Table file.
    #[arg(long)]
    green: PathBuf,
    /// Sites as space separated coordinates, e.g. --site "1 0 0".
    #[arg(long = "site", required = true)]
    sites: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum CapacityCommand {
    /// Capacity from the Green linear system.
    Exact(CapExactArgs),
    /// Capacity from simulated escape probabilities.
    Mc(CapMcArgs),
    /// Check the union/intersection inequalities for two sets.
    CheckDecomp(CheckDecompArgs),
}

#[derive(Args, Debug)]
struct CapExactArgs {
    /// Site file: one site per line, space separated coordinates.
    #[arg(long)]
    sites: PathBuf,
    #[arg(long)]
    green: PathBuf,
    /// JSON report file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CapMcArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    sites: PathBuf,
    /// Escape trials per site.
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// First escape horizon; doubled until returns become rare.
    #[arg(long, default_value_t = 16)]
    horizon_initial: u64,
    #[arg(long, default_value_t = 1 << 16)]
    horizon_max: u64,
    /// Optional table to compare against the exact value.
    #[arg(long)]
    green: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CheckDecompArgs {
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    #[arg(long)]
    green: PathBuf,
    /// Slacks below minus this value fail.
    #[arg(long, default_value_t = 1e-8)]
    tolerance: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum RangeCommand {
    /// `C_n` of one simulated path at several horizons.
    Cap(RangeCapArgs),
    /// Pathwise dyadic bounds on `C_n`.
    DyadicCheck(DyadicArgs),
}

#[derive(Args, Debug)]
struct RangeCapArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Horizons, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "128,256,512")]
    horizons: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    index: u64,
    /// Table file; built with the default backend when absent.
    #[arg(long)]
    green: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DyadicArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 512)]
    n: usize,
    /// Levels checked are 1..=levels.
    #[arg(long, default_value_t = 4)]
    levels: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    index: u64,
    #[arg(long)]
    green: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-7)]
    tolerance: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ExperimentKind {
    Lln,
    Variance,
    Clt,
    ErrorScaling,
    Moment4,
    LoopEquivalence,
    Transience,
}

impl From<ExperimentKind> for Experiment {
    fn from(k: ExperimentKind) -> Self {
        match k {
            ExperimentKind::Lln => Experiment::Lln,
            ExperimentKind::Variance => Experiment::Variance,
            ExperimentKind::Clt => Experiment::Clt,
            ExperimentKind::ErrorScaling => Experiment::ErrorScaling,
            ExperimentKind::Moment4 => Experiment::Moment4,
            ExperimentKind::LoopEquivalence => Experiment::LoopEquivalence,
            ExperimentKind::Transience => Experiment::Transience,
        }
    }
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    #[arg(value_enum)]
    kind: ExperimentKind,
    /// JSON configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed of the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory (default: the config's `output`, else `out/<kind>`).
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parse `argv` (including the program name), run, and return the exit code.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match run(cli.command) {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_ASSERTION,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numeric_or_resource() {
                EXIT_NUMERIC
            } else {
                EXIT_USAGE
            }
        }
    }
}

fn unix_time() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

/// Record of one run, written next to its outputs.
#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'a str,
    config_hash: String,
    seed: u64,
    started_unix: f64,
    finished_unix: f64,
    outputs: Vec<String>,
    arguments: serde_json::Value,
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    out.with_file_name(name)
}

fn write_manifest(
    path: &Path,
    command: &str,
    arguments: serde_json::Value,
    seed: u64,
    started: f64,
    outputs: &[&Path],
) -> Result<()> {
    let canonical = serde_json::to_vec(&arguments)?;
    let m = Manifest {
        command,
        version: env!("CARGO_PKG_VERSION"),
        config_hash: hex::encode(<sha2::Sha256 as sha2::Digest>::digest(&canonical)),
        seed,
        started_unix: started,
        finished_unix: unix_time(),
        outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
        arguments,
    };
    let mut text = serde_json::to_string_pretty(&m)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Write a JSON value to `out` (plus its manifest), or print it.
fn emit(out: Option<&Path>, command: &str, arguments: serde_json::Value, seed: u64, started: f64, value: &serde_json::Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match out {
        Some(p) => {
            std::fs::write(p, &text)?;
            write_manifest(&manifest_path(p), command, arguments, seed, started, &[p])
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_sites(path: &Path) -> Result<(usize, Vec<Site>)> {
    read_sites(&std::fs::read_to_string(path)?)
}

fn table_for(model: &WalkModel, green: Option<&Path>) -> Result<GreenTable> {
    let base = model.base();
    let t = match green {
        Some(p) => load_table(p)?,
        None => {
            let r = experiments::default_radius(model.d());
            build_green_table(&base, r, GreenMethod::FourierGrid { n: fourier::grid_for_radius(model.d(), r) }, 0)?
        }
    };
    t.check_model(&base)?;
    Ok(t)
}

fn sample(model: &WalkModel, n: usize, seed: u64, index: u64) -> Result<crate::walk::LatticePath> {
    let mut rng = RngStream::new(seed, StreamId::new(Purpose::Path, index));
    sample_path(model, n, &mut rng)
}

fn run(command: Command) -> Result<bool> {
    let started = unix_time();
    match command {
        Command::Walk(a) => {
            let model = a.model.build()?;
            let path = sample(&model, a.steps, a.seed, a.index)?;
            let d = model.d();
            let mut csv = String::from("t");
            for i in 1..=d {
                let _ = write!(csv, ",x{i}");
            }
            csv.push('\n');
            for (t, x) in path.positions().iter().enumerate() {
                let _ = write!(csv, "{t}");
                for v in x.coords(d) {
                    let _ = write!(csv, ",{v}");
                }
                csv.push('\n');
            }
            match &a.out {
                Some(p) => {
                    std::fs::write(p, &csv)?;
                    let args = json!({"model": a.model.spec(), "steps": a.steps, "index": a.index});
                    write_manifest(&manifest_path(p), "walk", args, a.seed, started, &[p])?;
                }
                None => print!("{csv}"),
            }
            Ok(true)
        }
        Command::Green(GreenCommand::Build(a)) => {
            let model = a.model.build()?;
            let method = match a.backend {
                Backend::Fourier => GreenMethod::FourierGrid {
                    n: a.grid.unwrap_or_else(|| fourier::grid_for_radius(model.d(), a.radius)),
                },
                Backend::Renewal => GreenMethod::RenewalSeries { terms: a.terms },
                Backend::Occupation => GreenMethod::OccupationMc {
                    paths: a.paths,
                    horizon: a.horizon,
                },
            };
            let table = build_green_table(&model, a.radius, method, a.seed)?;
            save_table(&table, &a.out)?;
            let args = json!({"model": a.model.spec(), "radius": a.radius, "method": method});
            write_manifest(&manifest_path(&a.out), "green build", args, a.seed, started, &[&a.out])?;
            println!(
                "wrote {} ({} values, G(0) = {:.10}, error {:e}, far-field mismatch {:e})",
                a.out.display(),
                table.values().len(),
                table.origin(),
                table.meta().error,
                table.far_field_mismatch()
            );
            Ok(true)
        }
        Command::Green(GreenCommand::Probe(a)) => {
            let table = load_table(&a.green)?;
            println!("# {:?} alpha = {} d = {} R = {}", table.meta().method, table.alpha(), table.d(), table.radius());
            for s in &a.sites {
                let x = parse_site(s, Some(table.d()))?;
                println!("{s}\t{:.12e}", table.at(&x));
            }
            Ok(true)
        }
        Command::Capacity(CapacityCommand::Exact(a)) => {
            let table = load_table(&a.green)?;
            let (d, sites) = load_sites(&a.sites)?;
            check_dim_match(d, &table)?;
            let (cap, eq) = capacity_exact(&sites, &table)?;
            let value = json!({
                "capacity": cap.value,
                "sites": eq.sites.len(),
                "escape": eq.escape,
                "residual": eq.residual,
                "converged": eq.converged,
            });
            if a.out.is_none() {
                println!("{:.12}", cap.value);
            }
            let args = json!({"sites": a.sites, "green": a.green});
            if let Some(p) = &a.out {
                emit(Some(p), "capacity exact", args, 0, started, &value)?;
            }
            Ok(true)
        }
        Command::Capacity(CapacityCommand::Mc(a)) => {
            let model = a.model.build()?;
            let (d, sites) = load_sites(&a.sites)?;
            if d != model.d() {
                return Err(Error::Config(format!("site file has dimension {d}, model has {}", model.d())));
            }
            let schedule = HorizonSchedule {
                initial: a.horizon_initial,
                max: a.horizon_max,
                ..HorizonSchedule::default()
            };
            let est = capacity_mc(&sites, &model, schedule, a.trials, a.seed)?;
            let mut value = json!({"estimate": est});
            if let Some(g) = &a.green {
                let table = load_table(g)?;
                table.check_model(&model.base())?;
                let exact = capacity_exact(&sites, &table)?.0.value;
                let z = (est.value - exact) / est.std_err.max(f64::MIN_POSITIVE);
                value["exact"] = json!(exact);
                value["z"] = json!(z);
            }
            let args = json!({"model": a.model.spec(), "sites": a.sites, "trials": a.trials,
                "horizon_initial": a.horizon_initial, "horizon_max": a.horizon_max});
            emit(a.out.as_deref(), "capacity mc", args, a.seed, started, &value)?;
            Ok(true)
        }
        Command::Capacity(CapacityCommand::CheckDecomp(a)) => {
            let table = load_table(&a.green)?;
            let (da, sa) = load_sites(&a.a)?;
            let (db, sb) = load_sites(&a.b)?;
            check_dim_match(da, &table)?;
            check_dim_match(db, &table)?;
            let dec = check_decomposition(&sa, &sb, &table)?;
            let ok = dec.lower_slack >= -a.tolerance && dec.upper_slack >= -a.tolerance;
            let value = json!({"decomposition": dec, "tolerance": a.tolerance, "passed": ok});
            let args = json!({"a": a.a, "b": a.b, "green": a.green, "tolerance": a.tolerance});
            emit(a.out.as_deref(), "capacity check-decomp", args, 0, started, &value)?;
            Ok(ok)
        }
        Command::Range(RangeCommand::Cap(a)) => {
            let model = a.model.build()?;
            let table = table_for(&model, a.green.as_deref())?;
            let mut horizons = a.horizons.clone();
            horizons.sort_unstable();
            let top = *horizons.last().ok_or_else(|| Error::Config("no horizons".into()))?;
            let path = sample(&model, top, a.seed, a.index)?;
            let caps = range_capacities(&path, &horizons, &table)?;
            let rows: Vec<_> = horizons
                .iter()
                .zip(&caps)
                .map(|(n, c)| json!({"n": n, "capacity": c.value, "flagged": c.flagged}))
                .collect();
            let args = json!({"model": a.model.spec(), "horizons": horizons, "index": a.index, "green": a.green});
            emit(a.out.as_deref(), "range cap", args, a.seed, started, &json!(rows))?;
            Ok(true)
        }
        Command::Range(RangeCommand::DyadicCheck(a)) => {
            let model = a.model.build()?;
            let table = table_for(&model, a.green.as_deref())?;
            let path = sample(&model, a.n, a.seed, a.index)?;
            let mut ok = true;
            let mut levels = Vec::new();
            for l in 1..=a.levels {
                let c = dyadic_check(&path, a.n, l, &table)?;
                ok &= c.lower_slack >= -a.tolerance && c.upper_slack >= -a.tolerance;
                levels.push(c);
            }
            let value = json!({"levels": levels, "tolerance": a.tolerance, "passed": ok});
            let args = json!({"model": a.model.spec(), "n": a.n, "levels": a.levels, "index": a.index,
                "green": a.green, "tolerance": a.tolerance});
            emit(a.out.as_deref(), "range dyadic-check", args, a.seed, started, &value)?;
            Ok(ok)
        }
        Command::Experiment(a) => run_experiment(a, started),
    }
}

fn check_dim_match(d: usize, table: &GreenTable) -> Result<()> {
    if d != table.d() {
        return Err(Error::Config(format!("site file has dimension {d}, table has {}", table.d())));
    }
    Ok(())
}

fn run_experiment(a: ExperimentArgs, started: f64) -> Result<bool> {
    let kind: Experiment = a.kind.into();
    let mut config = ExperimentConfig::load(&a.config)?;
    if let Some(s) = a.seed {
        config.seed = s;
    }
    if a.workers.is_some() {
        config.workers = a.workers;
    }
    let dir = a
        .out
        .clone()
        .or_else(|| config.output.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(kind.name()));
    std::fs::create_dir_all(&dir)?;
    let out = experiments::run(kind, &config)?;

    let mut effective = config.clone();
    effective.workers = None;
    effective.output = None;
    let files = [
        ("config.json", effective.to_json() + "\n"),
        ("report.json", out.report.to_json()),
        ("samples.csv", report::samples_csv(&out.samples)),
        ("qq.csv", report::qq_csv(&out.qq)),
        ("hist.csv", report::hist_csv(&out.hist)),
    ];
    let mut written = Vec::new();
    for (name, text) in &files {
        let p = dir.join(name);
        std::fs::write(&p, text)?;
        written.push(p);
    }
    let refs: Vec<&Path> = written.iter().map(|p| p.as_path()).collect();
    let m = Manifest {
        command: &format!("experiment {}", kind.name()),
        version: env!("CARGO_PKG_VERSION"),
        config_hash: config.hash(),
        seed: config.seed,
        started_unix: started,
        finished_unix: unix_time(),
        outputs: refs.iter().map(|p| p.display().to_string()).collect(),
        arguments: json!({"config": "config.json", "workers": config.workers}),
    };
    let mut text = serde_json::to_string_pretty(&m)?;
    text.push('\n');
    std::fs::write(dir.join("manifest.json"), text)?;

    for c in &out.report.checks {
        println!("{} {}: observed {:.6} ({})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.observed, c.condition);
    }
    for f in &out.report.flags {
        println!("FLAG {f}");
    }
    println!("report written to {}", dir.join("report.json").display());
    Ok(out.report.passed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(dispatch(["rangecap", "frobnicate"]), EXIT_USAGE);
        assert_eq!(dispatch(["rangecap", "walk", "--bogus"]), EXIT_USAGE);
        assert_eq!(dispatch(["rangecap", "--help"]), EXIT_OK);
    }

    #[test]
    fn recurrent_model_is_a_numeric_error() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("g.grnt");
        let code = dispatch([
            "rangecap", "green", "build", "--model", "subordinate", "--alpha", "1.5", "--d", "1",
            "--radius", "2", "--out", out.to_str().unwrap(),
        ]);
        assert_eq!(code, EXIT_NUMERIC);
    }
}
