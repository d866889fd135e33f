//! Command-line experiment runner.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 statistical
//! floor unmet, 3 validation failure.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::excursion::{excursion_survivor_empirical, excursion_survivor_theoretical};
use crate::functionals::{dnorm_estimate, min_functional_estimate};
use crate::generators::{generator_constant_estimate, map_generator_paths};
use crate::io::write_ensemble;
use crate::kv::{format_f64, KeyValues};
use crate::processes::{sample_msp, sample_pareto_process, transform_margins, PathEnsemble};
use crate::shortfall::{
    expected_shortfall_asymptotic, expected_shortfall_empirical, expected_shortfall_exact, sup_below_probability,
};
use crate::sojourn::{
    fragility_index_ratio, sojourn_summary, sup_distance, theoretical_sojourn_survivor, uniform_mesh, ThresholdSpec,
};
use crate::stream::RandomStream;
use crate::validation;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_FLOOR: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "sojourn-lab", version, about = "Sojourn, fragility and excursion experiments for max-stable and Pareto processes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Flat `key = value` config file.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Grid size n (points i/n, i = 1..n).
    #[arg(long, global = true, value_name = "N")]
    pub grid: Option<usize>,
    #[arg(long, global = true, value_name = "N")]
    pub paths: Option<usize>,
    /// Worker threads; changes wall time only.
    #[arg(long, global = true, value_name = "N")]
    pub workers: Option<usize>,
    /// Output file (CSV); standard output when absent.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Override a config key, e.g. `--set generator=constant`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// D-norm of f, window minimum and sup-norm bounds.
    Dnorm,
    /// Generator constant m = E(sup Z).
    GenConst,
    /// Fragility-index ratio and mean conditional sojourn over s_list.
    FiSweep,
    /// Theoretical and empirical sojourn-time survivor at level s.
    SojournDf,
    /// Expected shortfall (empirical, exact, asymptotic) over s_list.
    EsSweep,
    /// Remaining excursion time law from t0 at level s.
    Excursion,
    /// Full validation suite; exit 0 iff every check passes.
    Validate,
    /// Write a path ensemble and its metadata sidecar to --out.
    Simulate,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Dnorm => "dnorm",
            Command::GenConst => "gen-const",
            Command::FiSweep => "fi-sweep",
            Command::SojournDf => "sojourn-df",
            Command::EsSweep => "es-sweep",
            Command::Excursion => "excursion",
            Command::Validate => "validate",
            Command::Simulate => "simulate",
        }
    }
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::FloorUnmet { .. } | Error::Degenerate(_) => EXIT_FLOOR,
        _ => EXIT_USAGE,
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// exit code. Reports go to `stdout`, diagnostics to `stderr`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { write!(stdout, "{text}") } else { write!(stderr, "{text}") };
            return code;
        }
    };
    match execute(&cli, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

/// Config file, then `--set`, then the dedicated flags.
pub fn resolve_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut kv = match &cli.config {
        Some(path) => KeyValues::parse(&fs::read_to_string(path)?)?,
        None => KeyValues::new(),
    };
    for item in &cli.set {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("--set expects KEY=VALUE, got '{item}'")))?;
        kv.set(k.trim(), v.trim());
    }
    if let Some(seed) = cli.seed {
        kv.set("seed", seed);
    }
    if let Some(grid) = cli.grid {
        kv.set("grid", grid);
    }
    if let Some(paths) = cli.paths {
        kv.set("paths", paths);
    }
    ExperimentConfig::from_kv(&kv)
}

fn execute(cli: &Cli, stdout: &mut dyn Write) -> Result<i32> {
    let cfg = resolve_config(cli)?;
    let workers = match cli.workers {
        Some(0) => return Err(Error::InvalidArgument("--workers must be at least 1".into())),
        Some(w) => w,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))?;
    let mut buffer = Vec::new();
    let result = pool.install(|| dispatch(cli, &cfg, &mut buffer));
    stdout.write_all(&buffer)?;
    result
}

/// Header comment block, column header and rows.
struct Table {
    summary: Vec<String>,
    header: &'static str,
    rows: Vec<String>,
}

impl Table {
    fn new(header: &'static str) -> Self {
        Self { summary: Vec::new(), header, rows: Vec::new() }
    }

    fn render(&self, command: Command, cfg: &ExperimentConfig) -> String {
        let mut out = format!("# sojourn-lab {}\n# command = {}\n", env!("CARGO_PKG_VERSION"), command.name());
        for (k, v) in cfg.to_kv().iter() {
            out.push_str(&format!("# {k} = {v}\n"));
        }
        for line in &self.summary {
            out.push_str(&format!("# {line}\n"));
        }
        out.push_str(self.header);
        out.push('\n');
        for row in &self.rows {
            out.push_str(row);
            out.push('\n');
        }
        out
    }
}

fn row(values: &[f64]) -> String {
    values.iter().map(|&v| format_f64(v)).collect::<Vec<_>>().join(",")
}

fn emit(cli: &Cli, text: &str, stdout: &mut dyn Write) -> Result<()> {
    match &cli.out {
        Some(path) => fs::write(path, text)?,
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn dispatch(cli: &Cli, cfg: &ExperimentConfig, stdout: &mut dyn Write) -> Result<i32> {
    let table = match cli.command {
        Command::Validate => return run_validate(cli, cfg, stdout),
        Command::Simulate => return run_simulate(cli, cfg, stdout),
        Command::Dnorm => dnorm(cfg)?,
        Command::GenConst => gen_const(cfg)?,
        Command::FiSweep => fi_sweep(cfg)?,
        Command::SojournDf => sojourn_df(cfg)?,
        Command::EsSweep => es_sweep(cfg)?,
        Command::Excursion => excursion(cfg)?,
    };
    emit(cli, &table.render(cli.command, cfg), stdout)?;
    Ok(EXIT_OK)
}

fn base_stream(cfg: &ExperimentConfig) -> RandomStream {
    RandomStream::new(cfg.seed)
}

/// The configured process on the config grid, optionally conditioned so
/// that thresholds of magnitude up to `magnitude` are covered exactly.
fn ensemble(cfg: &ExperimentConfig, stream: RandomStream, magnitude: Option<f64>) -> Result<PathEnsemble> {
    let grid = cfg.grid();
    let ens = match cfg.process.mixing() {
        None => {
            if cfg.conditioned {
                return Err(Error::InvalidArgument("conditioned sampling applies to Pareto-type processes only".into()));
            }
            sample_msp(&cfg.generator, grid, cfg.paths, Some(cfg.eps_trunc), stream)?
        }
        Some(mixing) => {
            let cap = match (cfg.conditioned, magnitude) {
                (true, Some(mag)) => {
                    let bound = cfg.generator.sup_bound().ok_or_else(|| {
                        Error::InvalidArgument("conditioned sampling needs a bounded generator".into())
                    })?;
                    Some(mag * bound)
                }
                (true, None) => {
                    return Err(Error::InvalidArgument("this command does not support conditioned sampling".into()))
                }
                (false, _) => None,
            };
            sample_pareto_process(&cfg.generator, mixing, cfg.clip(), cap, grid, cfg.paths, stream)?
        }
    };
    Ok(ens)
}

fn threshold_f(cfg: &ExperimentConfig) -> Result<crate::grid::GridFunction> {
    cfg.f.build(cfg.grid())
}

fn dnorm(cfg: &ExperimentConfig) -> Result<Table> {
    let f = threshold_f(cfg)?;
    let stream = base_stream(cfg).derive("generator");
    let d = dnorm_estimate(&cfg.generator, &f, cfg.samples, stream)?;
    let mn = min_functional_estimate(&cfg.generator, &f, (0.0, 1.0), cfg.samples, stream)?;
    let sup = f.sup_norm();
    let mut t = Table::new("functional,estimate,std_error,n_samples");
    t.rows.push(format!("dnorm,{},{}", row(&[d.mean, d.std_error]), d.n_samples));
    t.rows.push(format!("min_functional,{},{}", row(&[mn.mean, mn.std_error]), mn.n_samples));
    t.rows.push(format!("sup_norm,{},0", row(&[sup, 0.0])));
    t.rows.push(format!("m_times_sup_norm,{},0", row(&[cfg.generator.generator_constant() * sup, 0.0])));
    Ok(t)
}

fn gen_const(cfg: &ExperimentConfig) -> Result<Table> {
    let stream = base_stream(cfg).derive("generator");
    let analytic = cfg.generator.generator_constant();
    let mut t = Table::new("sites,estimate,std_error,n_samples,analytic");
    let g = generator_constant_estimate(&cfg.generator, cfg.grid(), cfg.samples, stream)?;
    t.rows.push(format!("grid,{},{},{}", row(&[g.mean, g.std_error]), g.n_samples, format_f64(analytic)));
    if let Some(anchors) = cfg.generator.anchors() {
        let maxima = map_generator_paths(&cfg.generator, &anchors, cfg.samples, stream, |z| {
            z.iter().fold(0.0_f64, |a, &b| a.max(b))
        });
        let a = crate::estimate::MCEstimate::from_samples(&maxima)?;
        t.rows.push(format!("anchors,{},{},{}", row(&[a.mean, a.std_error]), a.n_samples, format_f64(analytic)));
    }
    Ok(t)
}

fn fi_sweep(cfg: &ExperimentConfig) -> Result<Table> {
    let f = threshold_f(cfg)?;
    let stream = base_stream(cfg).derive("ensemble");
    let shared = if cfg.conditioned { None } else { Some(ensemble(cfg, stream, None)?) };
    let mut t = Table::new("s,p_positive,p_positive_se,mean_conditional,mean_conditional_se,fi_ratio,fi_ratio_se");
    for (i, &s) in cfg.s_list.iter().enumerate() {
        let th = ThresholdSpec::new(f.clone(), s)?;
        let own;
        let ens = match &shared {
            Some(e) => e,
            None => {
                own = ensemble(cfg, stream.derive_index(i as u64), Some(th.magnitude()))?;
                &own
            }
        };
        let summary = sojourn_summary(ens, &th, &[0.0], cfg.min_exceedances)?;
        let fi = fragility_index_ratio(ens, &th, ens.descriptor().current_margin())?;
        let (p, mc) = (summary.p_positive, summary.mean_conditional);
        t.rows.push(row(&[s, p.mean, p.std_error, mc.mean, mc.std_error, fi.mean, fi.std_error]));
    }
    Ok(t)
}

fn sojourn_df(cfg: &ExperimentConfig) -> Result<Table> {
    let f = threshold_f(cfg)?;
    let th = ThresholdSpec::new(f.clone(), cfg.s)?;
    let mesh = uniform_mesh(cfg.y_points);
    let theory = theoretical_sojourn_survivor(&cfg.generator, &f, &mesh, cfg.samples, base_stream(cfg).derive("generator"))?;
    let ens = ensemble(cfg, base_stream(cfg).derive("ensemble"), Some(th.magnitude()))?;
    let emp = sojourn_summary(&ens, &th, &mesh, cfg.min_exceedances)?;
    let mut t = Table::new("y,survivor_theoretical,se_theoretical,survivor_empirical,se_empirical");
    t.summary.push(format!(
        "summary: p_positive = {} +- {}, mean_conditional = {} +- {}, denominator = {} +- {}, sup_distance = {}",
        format_f64(emp.p_positive.mean),
        format_f64(emp.p_positive.std_error),
        format_f64(emp.mean_conditional.mean),
        format_f64(emp.mean_conditional.std_error),
        format_f64(theory.denominator.mean),
        format_f64(theory.denominator.std_error),
        format_f64(sup_distance(&emp.survivor_curve, &theory.curve)),
    ));
    for (a, b) in theory.curve.iter().zip(&emp.survivor_curve) {
        t.rows.push(row(&[a.y, a.survivor, a.std_error, b.survivor, b.std_error]));
    }
    Ok(t)
}

fn es_sweep(cfg: &ExperimentConfig) -> Result<Table> {
    let ens = ensemble(cfg, base_stream(cfg).derive("ensemble"), None)?;
    let ens = match cfg.margin {
        Some(m) => transform_margins(&ens, m)?,
        None => ens,
    };
    let margin = ens.descriptor().current_margin();
    let m = cfg.generator.generator_constant();
    let mut t = Table::new("s,es_empirical,es_empirical_se,es_exact,es_exact_se,es_asymptotic");
    for &s in &cfg.s_list {
        let emp = expected_shortfall_empirical(&ens, s, cfg.min_exceedances)?;
        let (exact, exact_se, asym) = match expected_shortfall_exact(margin, sup_below_probability(&ens, s)?, s) {
            Ok(e) => (e.mean, e.std_error, expected_shortfall_asymptotic(margin, m, s)?),
            Err(Error::DivergentTail) => (f64::INFINITY, f64::NAN, f64::INFINITY),
            Err(e) => return Err(e),
        };
        t.rows.push(row(&[s, emp.mean, emp.std_error, exact, exact_se, asym]));
    }
    Ok(t)
}

fn excursion(cfg: &ExperimentConfig) -> Result<Table> {
    let f = threshold_f(cfg)?;
    let th = ThresholdSpec::new(f.clone(), cfg.s)?;
    let theory = excursion_survivor_theoretical(&cfg.generator, &f, cfg.t0, cfg.samples, base_stream(cfg).derive("generator"))?;
    let i0 = cfg.grid().snap(cfg.t0)?;
    let ens = ensemble(cfg, base_stream(cfg).derive("ensemble"), Some(cfg.s * f.values()[i0].abs()))?;
    let emp = excursion_survivor_empirical(&ens, &th, cfg.t0, cfg.min_exceedances)?;
    let mut t = Table::new("u,survivor_theoretical,survivor_empirical,std_error");
    t.summary.push(format!(
        "summary: t0 = {}, mass_at_end = {} (theoretical {}), expectation = {} +- {} (theoretical {} +- {})",
        format_f64(emp.t0),
        format_f64(emp.mass_at_end),
        format_f64(theory.mass_at_end),
        format_f64(emp.expectation.mean),
        format_f64(emp.expectation.std_error),
        format_f64(theory.expectation.mean),
        format_f64(theory.expectation.std_error),
    ));
    for j in 0..emp.u_mesh.len() {
        t.rows.push(row(&[emp.u_mesh[j], theory.survivor[j], emp.survivor[j], emp.std_error[j]]));
    }
    Ok(t)
}

fn run_validate(cli: &Cli, cfg: &ExperimentConfig, stdout: &mut dyn Write) -> Result<i32> {
    let report = validation::run_all(cfg.seed);
    stdout.write_all(report.to_text().as_bytes())?;
    let verdict = if report.passed() { "all checks passed" } else { "some checks FAILED" };
    writeln!(stdout, "{verdict}")?;
    if let Some(path) = &cli.out {
        let mut t = Table::new(validation::ValidationReport::CSV_HEADER);
        t.summary.push("summary: suite sample sizes are fixed; only the seed is read from the config".into());
        t.rows = report.csv_rows();
        fs::write(path, t.render(Command::Validate, cfg))?;
    }
    Ok(if report.passed() { EXIT_OK } else { EXIT_VALIDATION })
}

fn run_simulate(cli: &Cli, cfg: &ExperimentConfig, stdout: &mut dyn Write) -> Result<i32> {
    let path = cli.out.as_ref().ok_or_else(|| Error::InvalidArgument("simulate needs --out".into()))?;
    let magnitude = cfg.s * threshold_f(cfg)?.sup_norm();
    let ens = ensemble(cfg, base_stream(cfg).derive("ensemble"), Some(magnitude))?;
    let ens = match cfg.margin {
        Some(m) => transform_margins(&ens, m)?,
        None => ens,
    };
    write_ensemble(&ens, path)?;
    writeln!(stdout, "wrote {} paths on {} grid points to {}", ens.len(), ens.grid().len(), path.display())?;
    Ok(EXIT_OK)
}
