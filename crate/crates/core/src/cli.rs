//! Command-line front end.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 usage or configuration error,
//! 3 rejected because the tree would exceed the node cap.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bbm::{BarrierSpec, BbmForest};
use crate::config::{Command, ExperimentConfig, Format};
use crate::error::{Error, Result};
use crate::gw::GwTree;
use crate::observables::Beta;
use crate::phase::{classify, clt_scaling, limiting_log_partition};
use crate::report::{render_json, render_text, FreeEnergyMap, Outcome, PhaseReport, SimulationReport, TreeReport};
use crate::rng::Substream;
use crate::stats::{
    barrier_experiment, boundary_distance, clt_from_table, free_energy_from_table, martingale_from_table,
    run_replicas, smoothing_recursion_check, square_grid, with_threads, BarrierConfig, CltConfig, FreeEnergyConfig,
    MartingaleConfig, ReplicaTable, SmoothingConfig,
};

const AFTER_HELP: &str = "\
Phase boundaries are matched with an absolute tolerance of 1e-12 on their
defining equalities, so a beta typed with 16 digits lands on the boundary.

Exit codes: 0 success, 1 I/O error, 2 usage or configuration error,
3 node cap exceeded.";

#[derive(Parser, Debug)]
#[command(name = "cbbm", version, about = "Monte Carlo experiments on complex branching Brownian motion", after_help = AFTER_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Sub {
    /// Sample one Galton-Watson tree; text output is the genealogy dump, --csv writes the leaf positions.
    Tree,
    /// Per-horizon means of the martingales and of |N(t)|^2, plus the barrier effect at (r, t).
    Simulate,
    /// Median of (1/t) log|X(t)| against the limiting free energy on a grid of beta.
    FreeEnergyMap,
    /// Conditional central limit test with random variance measured at r.
    Clt,
    /// Means, p-th moments and increments of the McKean martingale (B1 and B12).
    Martingale,
    /// Compare M(t + r) with its branching decomposition at time r (B1 and B12).
    SmoothingCheck,
    /// Print the phase label and the limiting free energy of beta.
    Phase,
}

#[derive(Args, Debug, Default)]
struct Flags {
    /// Inverse temperature as a+bi
    #[arg(long, global = true, allow_hyphen_values = true)]
    beta: Option<Beta>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    sigma: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    tau: Option<f64>,
    /// Correlation of the real and imaginary energies
    #[arg(long, global = true, allow_hyphen_values = true)]
    rho: Option<f64>,
    /// Horizon
    #[arg(long, global = true)]
    t: Option<f64>,
    /// Conditioning time
    #[arg(long, global = true)]
    r: Option<f64>,
    /// Endpoint barrier constant
    #[arg(long = "A", visible_alias = "a", global = true)]
    a: Option<f64>,
    /// Path barrier exponent
    #[arg(long, global = true)]
    gamma: Option<f64>,
    #[arg(long, global = true)]
    replicas: Option<u64>,
    /// Master seed; drawn from system entropy when omitted
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on it
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,
    /// Write the report here instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Write the per-replica table (or the leaf dump for `tree`) here
    #[arg(long, global = true)]
    csv: Option<PathBuf>,
    /// Comma-separated increasing horizons
    #[arg(long, global = true, value_delimiter = ',')]
    horizons: Option<Vec<f64>>,
    /// Moment order
    #[arg(long, global = true)]
    p: Option<f64>,
    /// Node cap per tree
    #[arg(long, global = true)]
    cap: Option<u64>,
    /// `binary` or probabilities p_0,p_1,... with mean 2
    #[arg(long, global = true)]
    offspring: Option<String>,
    /// Grid points per axis
    #[arg(long, global = true)]
    grid_n: Option<usize>,
    /// Largest sigma and tau on the grid
    #[arg(long, global = true)]
    grid_max: Option<f64>,
    /// Skip grid points closer than this to a phase boundary
    #[arg(long, global = true)]
    margin: Option<f64>,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum FormatArg {
    Text,
    Json,
}

impl From<Sub> for Command {
    fn from(s: Sub) -> Self {
        match s {
            Sub::Tree => Command::Tree,
            Sub::Simulate => Command::Simulate,
            Sub::FreeEnergyMap => Command::FreeEnergyMap,
            Sub::Clt => Command::Clt,
            Sub::Martingale => Command::Martingale,
            Sub::SmoothingCheck => Command::SmoothingCheck,
            Sub::Phase => Command::Phase,
        }
    }
}

fn resolve(cli: Cli) -> Result<ExperimentConfig> {
    let f = cli.flags;
    let seed = f.seed.unwrap_or_else(rand::random);
    let mut c = ExperimentConfig::new(cli.command.into(), seed);
    let parts = match (f.sigma, f.tau) {
        (None, None) => None,
        (s, t) => Some(Beta::new(s.unwrap_or(0.0), t.unwrap_or(0.0))),
    };
    c.beta = match (f.beta, parts) {
        (Some(b), Some(p)) if b != p => {
            return Err(Error::Config(format!("--beta {b} conflicts with --sigma/--tau giving {p}")));
        }
        (Some(b), _) | (None, Some(b)) => b,
        (None, None) => c.beta,
    };
    macro_rules! set {
        ($($field:ident),*) => { $( if let Some(v) = f.$field { c.$field = v; } )* };
    }
    set!(rho, t, r, a, gamma, replicas, p, cap, offspring, grid_n, grid_max, margin);
    c.horizons = f.horizons.unwrap_or_else(|| vec![c.t]);
    c.threads = f.threads;
    c.format = match f.format {
        Some(FormatArg::Json) => Format::Json,
        _ => Format::Text,
    };
    c.out = f.out;
    c.csv = f.csv;
    c.law()?;
    Ok(c)
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Io(format!("{}: {e}", path.display()))
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).map_err(|e| io_err(path, e))?);
    f(&mut w).and_then(|_| w.flush()).map_err(|e| io_err(path, e))
}

fn spill(c: &ExperimentConfig, table: &ReplicaTable) -> Result<()> {
    match &c.csv {
        Some(path) => write_file(path, |w| table.write_csv(w)),
        None => Ok(()),
    }
}

fn tree(c: &ExperimentConfig) -> Result<(Outcome, String)> {
    let mut rng = Substream::new(c.seed, 0);
    let tree = GwTree::sample_with_cap(c.t, &c.law()?, &mut rng, c.cap)?;
    let forest = BbmForest::sample(&tree, c.rho, &mut rng)?;
    if let Some(path) = &c.csv {
        let dump = forest.leaves().dump();
        write_file(path, |w| w.write_all(dump.as_bytes()))?;
    }
    let (branching_events, total_lifetime) = tree.branching_exposure();
    let report = TreeReport {
        horizon: tree.horizon(),
        nodes: tree.node_count(),
        leaves: tree.leaf_count(),
        branching_events,
        total_lifetime,
    };
    Ok((Outcome::Tree(report), tree.dump()))
}

fn simulate(c: &ExperimentConfig) -> Result<Outcome> {
    let law = c.law()?;
    let mut plan = crate::stats::ReplicaPlan::new(c.seed, vec![(c.beta, c.rho)], c.horizons.clone());
    plan.law = law.clone();
    plan.cap = c.cap;
    plan.validate()?;
    let t = *c.horizons.last().expect("validated");
    let spec = BarrierSpec { sigma: c.beta.sigma, gamma: c.gamma, r: c.r, t, a: c.a };
    // The barrier needs 0 < r < t and an admissible exponent; otherwise it is skipped.
    let with_barrier = c.r > 0.0 && c.r < t && spec.validate().is_ok();
    let table = run_replicas(&plan, 0..c.replicas)?;
    spill(c, &table)?;
    let barrier = if with_barrier {
        let mut b = BarrierConfig::new(c.beta, c.rho, c.r, t, c.gamma, c.a, c.replicas, c.seed);
        b.law = law.clone();
        b.cap = c.cap;
        Some(barrier_experiment(&b)?)
    } else {
        None
    };
    Ok(Outcome::Simulation(SimulationReport::from_table(
        &table,
        law.second_factorial_moment(),
        barrier,
    )?))
}

fn free_energy(c: &ExperimentConfig) -> Result<Outcome> {
    let grid: Vec<Beta> = square_grid(c.grid_n, c.grid_max)
        .into_iter()
        .filter(|&b| boundary_distance(b) >= c.margin)
        .collect();
    let mut cfg = FreeEnergyConfig::new(grid, c.rho, c.t, c.replicas, c.seed);
    cfg.law = c.law()?;
    cfg.cap = c.cap;
    cfg.validate()?;
    let table = run_replicas(&cfg.plan(), 0..c.replicas)?;
    spill(c, &table)?;
    Ok(Outcome::FreeEnergy(FreeEnergyMap {
        rho: c.rho,
        t: c.t,
        replicas: c.replicas,
        rows: free_energy_from_table(&table, &cfg.grid, c.rho, c.t)?,
    }))
}

fn clt(c: &ExperimentConfig) -> Result<Outcome> {
    clt_scaling(c.beta)?;
    if !(0.0 <= c.r && c.r < c.t) {
        return Err(Error::Config(format!("need 0 <= r < t, got r = {}, t = {}", c.r, c.t)));
    }
    let mut cfg = CltConfig::new(c.beta, c.rho, c.r, c.t, c.replicas, c.seed);
    cfg.law = c.law()?;
    cfg.cap = c.cap;
    let table = run_replicas(&cfg.plan(), 0..c.replicas)?;
    spill(c, &table)?;
    let report = clt_from_table(&table, c.beta, c.rho, c.r, c.t, cfg.law.second_factorial_moment())?;
    Ok(Outcome::Clt(Box::new(report)))
}

fn martingale(c: &ExperimentConfig) -> Result<Outcome> {
    let mut cfg = MartingaleConfig::new(c.beta, c.rho, c.horizons.clone(), c.p, c.replicas, c.seed);
    cfg.law = c.law()?;
    cfg.cap = c.cap;
    cfg.validate()?;
    let table = run_replicas(&cfg.plan(), 0..c.replicas)?;
    spill(c, &table)?;
    let k = cfg.law.second_factorial_moment();
    Ok(Outcome::Martingale(martingale_from_table(&table, c.beta, c.rho, c.p, k)?))
}

fn smoothing(c: &ExperimentConfig) -> Result<Outcome> {
    let mut cfg = SmoothingConfig::new(c.beta, c.rho, c.r, c.t, c.replicas, c.seed);
    cfg.law = c.law()?;
    cfg.cap = c.cap;
    Ok(Outcome::Smoothing(smoothing_recursion_check(&cfg)?))
}

fn phase(c: &ExperimentConfig) -> Outcome {
    Outcome::Phase(PhaseReport {
        beta: c.beta,
        label: classify(c.beta),
        free_energy: limiting_log_partition(c.beta),
        clt_rule: clt_scaling(c.beta).ok(),
    })
}

/// Runs the configured experiment and returns the rendered report.
pub fn execute(c: &ExperimentConfig) -> Result<String> {
    let body = with_threads(c.threads, || -> Result<(Outcome, Option<String>)> {
        Ok(match c.command {
            Command::Tree => {
                let (o, dump) = tree(c)?;
                (o, Some(dump))
            }
            Command::Simulate => (simulate(c)?, None),
            Command::FreeEnergyMap => (free_energy(c)?, None),
            Command::Clt => (clt(c)?, None),
            Command::Martingale => (martingale(c)?, None),
            Command::SmoothingCheck => (smoothing(c)?, None),
            Command::Phase => (phase(c), None),
        })
    })??;
    Ok(match (c.format, body) {
        (Format::Json, (o, _)) => render_json(c, &o),
        (Format::Text, (_, Some(dump))) => dump,
        (Format::Text, (o, None)) => render_text(&o),
    })
}

fn exit_code(e: &Error) -> i32 {
    match e {
        e if e.is_resource_cap() => 3,
        Error::Io(_) => 1,
        _ => 2,
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    let config = match resolve(cli) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return exit_code(&e);
        }
    };
    let _ = writeln!(err, "seed {}", config.seed);
    let _ = writeln!(err, "config {}", config.to_json());
    let result = execute(&config).and_then(|report| match &config.out {
        Some(path) => write_file(path, |w| w.write_all(report.as_bytes())),
        None => out.write_all(report.as_bytes()).map_err(|e| Error::Io(e.to_string())),
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(std::iter::once("cbbm").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn phase_prints_label_and_free_energy() {
        let (code, out, err) = call(&["phase", "--beta", "0.5+1.0i"]);
        assert_eq!(code, 0);
        assert_eq!(out, "B3  0.75\n");
        assert!(err.starts_with("seed "));
    }

    #[test]
    fn sigma_tau_flags() {
        let (_, out, _) = call(&["phase", "--sigma", "0.5", "--tau", "1"]);
        assert_eq!(out, "B3  0.75\n");
        let (code, _, err) = call(&["phase", "--beta", "0.5+1i", "--sigma", "0.4"]);
        assert_eq!(code, 2);
        assert!(err.contains("conflicts"));
        let (code, _, _) = call(&["phase", "--beta", "0.5+1i", "--sigma", "0.5", "--tau", "1"]);
        assert_eq!(code, 0);
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(call(&["phase", "--bogus"]).0, 2);
        assert_eq!(call(&["nope"]).0, 2);
        assert_eq!(call(&["phase", "--beta", "x+yi"]).0, 2);
        assert_eq!(call(&["clt", "--beta", "1.2+0.4i", "--seed", "1"]).0, 2);
        assert_eq!(call(&["tree", "--offspring", "0,1", "--seed", "1"]).0, 2);
    }

    #[test]
    fn node_cap_exits_3() {
        let (code, _, err) = call(&["tree", "--t", "40", "--seed", "1"]);
        assert_eq!(code, 3);
        assert!(err.contains("error"));
    }

    #[test]
    fn help_exits_0() {
        let (code, out, _) = call(&["--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("free-energy-map"));
    }
}
