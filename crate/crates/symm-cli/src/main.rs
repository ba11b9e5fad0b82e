//! `symm-pg`: experiment front end for the boundary-integral projection
//! library.
//!
//! Every run is driven by a single JSON configuration file; command-line
//! flags only override the output path and verbosity, so an experiment is
//! reproducible from its config alone. Exit codes: 0 on success, 1 for
//! configuration problems, 2 when the linear system is numerically singular.

use std::f64::consts::TAU;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use serde::Deserialize;
use symm_core::curve::{smooth_kernel, smooth_kernel_diagonal_derivatives};
use symm_core::harness::{
    add_noise, fit_rate, make_rhs, records_to_csv, run_convergence, run_divergence, RateAxis,
    RhsConfig,
};
use symm_core::operator::{assemble_operator, default_grid, default_max_index};
use symm_core::solvers::solve;
use symm_core::{
    BoundaryCurve, ExperimentRecord, MethodKind, NRule, OperatorAssembly, SweepResult, ValueKind,
};

#[derive(Parser)]
#[command(name = "symm-pg", version, about = "Projection-method experiments for Symm's integral equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Override the output path given in the config file.
    #[arg(long, global = true, value_name = "PATH")]
    output: Option<PathBuf>,
    /// Print extra diagnostics.
    #[arg(long, global = true)]
    verbose: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Assemble the operator matrix and write a JSON dump.
    Assemble { config: PathBuf },
    /// Solve one system and write the solve report as JSON.
    Solve { config: PathBuf },
    /// Run a convergence or divergence study, writing CSV plus a JSON summary.
    Study { config: PathBuf },
    /// Print the kernel diagonal limits next to finite-difference checks.
    KernelCheck { config: PathBuf },
}

/// The one-file experiment configuration. Unknown fields are rejected so a
/// typo cannot silently fall back to a default.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunConfig {
    curve: BoundaryCurve,
    #[serde(default)]
    method: Option<MethodKind>,
    #[serde(default, rename = "M")]
    max_index: Option<usize>,
    #[serde(default)]
    m: Option<usize>,
    #[serde(default)]
    n: Option<usize>,
    #[serde(default)]
    n_list: Option<Vec<usize>>,
    #[serde(default)]
    delta: Option<f64>,
    #[serde(default)]
    delta_list: Option<Vec<f64>>,
    #[serde(default)]
    rhs: Option<RhsConfig>,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    seeds: Option<Vec<u64>>,
    #[serde(default)]
    alpha: Option<f64>,
    #[serde(default)]
    r: Option<f64>,
    #[serde(default)]
    study: Option<StudyKind>,
    #[serde(default)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
enum StudyKind {
    Convergence,
    Divergence,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0u8,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            let singular = err.chain().any(|cause| {
                matches!(
                    cause.downcast_ref::<symm_core::Error>(),
                    Some(symm_core::Error::SingularSystem { .. })
                )
            });
            ExitCode::from(if singular { 2 } else { 1 })
        }
    }
}

fn dispatch(cli: &Cli) -> Result<()> {
    init_threads()?;
    let config_path = match &cli.command {
        Command::Assemble { config }
        | Command::Solve { config }
        | Command::Study { config }
        | Command::KernelCheck { config } => config,
    };
    let mut config = load_config(config_path)?;
    if let Some(path) = &cli.output {
        config.output = Some(path.clone());
    }
    match &cli.command {
        Command::Assemble { .. } => cmd_assemble(&config, cli.verbose),
        Command::Solve { .. } => cmd_solve(&config, cli.verbose),
        Command::Study { .. } => cmd_study(&config, cli.verbose),
        Command::KernelCheck { .. } => cmd_kernel_check(&config),
    }
}

/// Honors `SYMM_PG_THREADS` as a cap on the worker pool.
fn init_threads() -> Result<()> {
    let Ok(raw) = std::env::var("SYMM_PG_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .with_context(|| format!("SYMM_PG_THREADS must be a positive integer, got {raw:?}"))?;
    if threads == 0 {
        bail!("SYMM_PG_THREADS must be at least 1");
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .context("initializing the worker pool")?;
    Ok(())
}

fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading config file {}", path.display()))?;
    let config: RunConfig = serde_json::from_str(&text)
        .with_context(|| format!("parsing config file {}", path.display()))?;
    config
        .curve
        .validate()
        .with_context(|| format!("validating the curve in {}", path.display()))?;
    if let (Some(n), Some(max_index)) = (config.n, config.max_index) {
        if 4 * n > max_index {
            bail!("config: window degree n = {n} must satisfy n <= M/4 (M = {max_index})");
        }
    }
    Ok(config)
}

fn require<T>(field: Option<T>, name: &str) -> Result<T> {
    field.ok_or_else(|| anyhow!("config is missing the required field {name:?}"))
}

fn output_path(config: &RunConfig) -> Result<&Path> {
    config
        .output
        .as_deref()
        .ok_or_else(|| anyhow!("no output path: set \"output\" in the config or pass --output"))
}

fn build_assembly(config: &RunConfig) -> Result<OperatorAssembly> {
    let max_index = require(config.max_index, "M")?;
    let grid = config.m.unwrap_or_else(|| default_grid(max_index));
    Ok(assemble_operator(&config.curve, max_index, grid)?)
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).context("serializing output")?;
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn cmd_assemble(config: &RunConfig, verbose: bool) -> Result<()> {
    let assembly = build_assembly(config)?;
    let tail = assembly.tail();
    println!(
        "tail energy: worst fraction {:.3e} in column {}{}",
        tail.worst_fraction,
        tail.worst_column,
        if tail.exceeded { " (EXCEEDS the resolution threshold; consider a larger M)" } else { "" }
    );
    if verbose {
        println!("assembled M = {}, m = {}", assembly.max_index(), assembly.m());
    }
    let path = output_path(config)?;
    write_json(path, &assembly)?;
    println!("wrote operator dump to {}", path.display());
    Ok(())
}

fn cmd_solve(config: &RunConfig, verbose: bool) -> Result<()> {
    let assembly = build_assembly(config)?;
    let method = require(config.method, "method")?;
    let n = require(config.n, "n")?;
    let rhs = require(config.rhs.as_ref(), "rhs")?;
    let spec = rhs.into_spec(assembly.max_index())?;
    let mut b = make_rhs(&assembly, &spec)?;
    if let Some(delta) = config.delta {
        b = add_noise(&b, delta, config.seed.unwrap_or(0))?;
    }
    let report = solve(method, &assembly, &b, n)?;
    println!(
        "method={} n={} residual={:.6e} condition={:.6e}",
        report.method, report.n, report.residual_norm, report.condition_estimate
    );
    if verbose {
        println!("solution degree {}", report.solution.max_index());
    }
    let path = output_path(config)?;
    write_json(path, &report)?;
    println!("wrote solve report to {}", path.display());
    Ok(())
}

fn cmd_study(config: &RunConfig, verbose: bool) -> Result<()> {
    let study = require(config.study, "study")?;
    let method = require(config.method, "method")?;
    let (sweep, summary) = match study {
        StudyKind::Divergence => divergence_study(config, method)?,
        StudyKind::Convergence => convergence_study(config, method)?,
    };

    let path = output_path(config)?;
    fs::write(path, records_to_csv(&sweep.records))
        .with_context(|| format!("writing {}", path.display()))?;
    let summary_path = path.with_extension("summary.json");
    write_json(&summary_path, &summary)?;

    println!("wrote {} records to {}", sweep.records.len(), path.display());
    println!("wrote summary to {}", summary_path.display());
    if !sweep.failures.is_empty() {
        println!("{} sweep cells failed:", sweep.failures.len());
        for failure in &sweep.failures {
            println!(
                "  method={} n={} delta={} seed={}: {}",
                failure.method, failure.n, failure.delta, failure.seed, failure.message
            );
        }
    }
    if verbose {
        println!("summary: {summary}");
    }
    Ok(())
}

fn divergence_study(
    config: &RunConfig,
    method: MethodKind,
) -> Result<(SweepResult, serde_json::Value)> {
    let alpha = require(config.alpha, "alpha")?;
    let n_list = require(config.n_list.clone(), "n_list")?;
    let sweep = run_divergence(&config.curve, method, alpha, &n_list)?;
    let fit = fit_rate(&sweep.records, RateAxis::N).ok();
    match &fit {
        Some(f) => println!(
            "divergence study: solution-norm slope {:.4} vs n (r² {:.4})",
            f.slope, f.r_squared
        ),
        None => println!("divergence study: too few records for a rate fit"),
    }
    let summary = serde_json::json!({
        "study": "divergence",
        "method": method.to_string(),
        "alpha": alpha,
        "records": sweep.records.len(),
        "failures": sweep.failures.len(),
        "axis": "n",
        "slope": fit.map(|f| f.slope),
        "r_squared": fit.map(|f| f.r_squared),
    });
    Ok((sweep, summary))
}

fn convergence_study(
    config: &RunConfig,
    method: MethodKind,
) -> Result<(SweepResult, serde_json::Value)> {
    let rhs = require(config.rhs.as_ref(), "rhs")?;
    let deltas = match (&config.delta_list, config.delta) {
        (Some(list), _) => list.clone(),
        (None, Some(delta)) => vec![delta],
        (None, None) => bail!("config is missing \"delta\" or \"delta_list\""),
    };
    let n_rule = match (config.r, &config.n_list, config.n) {
        (Some(r), _, _) => NRule::OptimalFromDelta { r },
        (None, Some(list), _) => NRule::Fixed(list.clone()),
        (None, None, Some(n)) => NRule::Fixed(vec![n]),
        (None, None, None) => {
            bail!("config needs either \"r\" (a-priori degree rule) or \"n\"/\"n_list\"")
        }
    };
    let seeds = match (&config.seeds, config.seed) {
        (Some(list), _) => list.clone(),
        (None, Some(seed)) => vec![seed],
        (None, None) => vec![0],
    };

    // The manufactured solution lives at the ambient degree the sweep will
    // assemble; estimate it the same way the sweep does. Invalid rule
    // parameters are left for the sweep itself to report.
    let n_max = match &n_rule {
        NRule::Fixed(ns) => ns.iter().copied().max().unwrap_or(1),
        NRule::OptimalFromDelta { r } if *r > 0.0 => deltas
            .iter()
            .filter(|d| **d > 0.0)
            .map(|d| d.powf(-1.0 / (r + 1.0)).round().max(1.0) as usize)
            .max()
            .unwrap_or(1),
        NRule::OptimalFromDelta { .. } => 1,
    };
    let spec = rhs.into_spec(default_max_index(n_max))?;

    let sweep = run_convergence(&config.curve, method, &spec, &deltas, &n_rule, &seeds)?;

    let mut per_seed = serde_json::Map::new();
    let mut slopes = Vec::new();
    for &seed in &seeds {
        let records: Vec<ExperimentRecord> = sweep
            .records
            .iter()
            .filter(|rec| rec.seed == seed && rec.value_kind == ValueKind::ErrorH0)
            .cloned()
            .collect();
        let slope = fit_rate(&records, RateAxis::Delta).ok().map(|f| f.slope);
        if let Some(s) = slope {
            slopes.push(s);
        }
        per_seed.insert(seed.to_string(), serde_json::json!(slope));
    }
    let mean = (!slopes.is_empty()).then(|| slopes.iter().sum::<f64>() / slopes.len() as f64);
    match mean {
        Some(m) => println!("convergence study: mean error slope {m:.4} vs delta"),
        None => println!("convergence study: too few records for a rate fit"),
    }
    let summary = serde_json::json!({
        "study": "convergence",
        "method": method.to_string(),
        "records": sweep.records.len(),
        "failures": sweep.failures.len(),
        "axis": "delta",
        "mean_slope": mean,
        "per_seed_slopes": per_seed,
    });
    Ok((sweep, summary))
}

fn cmd_kernel_check(config: &RunConfig) -> Result<()> {
    let curve = &config.curve;
    let ts: Vec<f64> = (0..16).map(|i| TAU * i as f64 / 16.0).collect();

    println!("diagonal limits (closed form):");
    println!("{:>10}  {:>14}  {:>14}  {:>14}", "t", "k(t,t)", "d/dt k(t,t)", "d2/dt2 k(t,t)");
    for &t in &ts {
        let d = smooth_kernel_diagonal_derivatives(curve, t);
        println!("{t:10.6}  {:14.8}  {:14.8}  {:14.8}", d.k_diag, d.k_t_limit, d.k_tt_limit);
    }

    println!();
    println!("max |finite difference - closed form| over the grid:");
    println!("{:>8}  {:>12}  {:>12}  {:>12}", "h", "value", "1st deriv", "2nd deriv");
    let hs = [1e-2f64, 1e-3, 1e-4];
    let mut table = Vec::new();
    for &h in &hs {
        let mut worst = [0.0f64; 3];
        for &t in &ts {
            let d = smooth_kernel_diagonal_derivatives(curve, t);
            let plus = smooth_kernel(curve, t, t + h);
            let minus = smooth_kernel(curve, t, t - h);
            worst[0] = worst[0].max((0.5 * (plus + minus) - d.k_diag).abs());
            worst[1] = worst[1].max(((plus - minus) / (2.0 * h) - d.k_t_limit).abs());
            worst[2] = worst[2].max(((plus - 2.0 * d.k_diag + minus) / (h * h) - d.k_tt_limit).abs());
        }
        println!("{h:8.0e}  {:12.4e}  {:12.4e}  {:12.4e}", worst[0], worst[1], worst[2]);
        table.push(worst);
    }

    // Orders can go negative once an error column hits its roundoff floor
    // (the second derivative divides by h², so that happens by h = 1e-4).
    println!();
    println!("observed orders between successive h:");
    for pair in table.windows(2) {
        let order = |coarse: f64, fine: f64| {
            if coarse > 0.0 && fine > 0.0 {
                (coarse / fine).ln() / 10f64.ln()
            } else {
                f64::NAN
            }
        };
        println!(
            "  value {:6.2}   1st deriv {:6.2}   2nd deriv {:6.2}",
            order(pair[0][0], pair[1][0]),
            order(pair[0][1], pair[1][1]),
            order(pair[0][2], pair[1][2])
        );
    }
    Ok(())
}
