mod commands;
mod config;
mod model;
mod output;
mod validate;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use commands::{CliError, Globals};
use scarlab::analysis::CutoffRule;

#[derive(Parser)]
#[command(name = "scarlab", version, about = "Scar dynamics, spectra and lifetime fits")]
struct Cli {
    /// Experiment config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for independent shots or sweep points.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    /// Parent directory for run directories (overrides [output] dir).
    #[arg(long, global = true)]
    outdir: Option<PathBuf>,
    /// Base seed for disorder shots.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Largest dimension diagonalized densely.
    #[arg(long, global = true, default_value_t = scarlab::spectral::DEFAULT_DENSE_CAP)]
    dense_cap: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Time-evolve the initial state and record observables.
    Evolve,
    /// Level statistics and overlap spectrum.
    Spectrum,
    /// Fit lifetimes over a parameter sweep and regress them.
    Sweep,
    /// Solve the zig-zag geometry for target coupling ratios.
    Geometry {
        /// Target |J02/J01|: list `a,b,c` or range `a:b:n`.
        #[arg(long)]
        ratio: String,
        /// Axis tilt in degrees: list or range.
        #[arg(long, default_value = "30")]
        tilt: String,
        #[arg(long, default_value_t = 1e-3)]
        ratio_tol: f64,
        /// Sites used for the long-range diagnostics.
        #[arg(long, default_value_t = 20)]
        sites: usize,
    },
    /// Fit A cos(Ωt+φ) exp(-t/τ) to a column of a CSV file.
    Fit {
        input: PathBuf,
        #[arg(long)]
        column: Option<String>,
        /// `first-minimum` or a fixed end time.
        #[arg(long, default_value = "first-minimum")]
        cutoff: String,
    },
    /// Check a config without running it.
    Validate,
}

fn parse_cutoff(s: &str) -> Result<CutoffRule, CliError> {
    match s {
        "first-minimum" | "first_envelope_minimum" => Ok(CutoffRule::FirstEnvelopeMinimum),
        t => t
            .parse::<f64>()
            .ok()
            .filter(|t| *t > 0.0)
            .map(CutoffRule::FixedTime)
            .ok_or_else(|| CliError::Config(format!("--cutoff must be `first-minimum` or a positive time, got `{s}`"))),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let g = Globals { outdir: cli.outdir, workers: cli.workers, seed: cli.seed, dense_cap: cli.dense_cap };
    let cfg = || match &cli.config {
        Some(p) => commands::load_config(p),
        None => Err(CliError::Config("this command needs --config <file>".into())),
    };
    match cli.command {
        Command::Evolve => println!("{}", commands::evolve(&cfg()?, &g)?.display()),
        Command::Spectrum => println!("{}", commands::spectrum(&cfg()?, &g)?.display()),
        Command::Sweep => println!("{}", commands::sweep(&cfg()?, &g)?.display()),
        Command::Geometry { ratio, tilt, ratio_tol, sites } => {
            let r = commands::parse_grid(&ratio).map_err(CliError::Config)?;
            let t = commands::parse_grid(&tilt).map_err(CliError::Config)?;
            println!("{}", commands::geometry(&r, &t, ratio_tol, sites, &g)?.display());
        }
        Command::Fit { input, column, cutoff } => {
            let (dir, f) = commands::fit(&input, column.as_deref(), parse_cutoff(&cutoff)?, &g)?;
            println!("tau = {} ± {}  (Ω = {:.6}, window {:.3}..{:.3})", f.tau, f.std_errors[3], f.omega, f.window.0, f.window.1);
            println!("{}", dir.display());
        }
        Command::Validate => {
            let text = match &cli.config {
                Some(p) => std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?,
                None => return Err(CliError::Config("validate needs --config <file>".into())),
            };
            print!("{}", validate::report(&text, g.dense_cap));
        }
    }
    Ok(())
}

/// OpenBLAS misdetects some virtual CPUs; pin a core type before it loads.
#[cfg(unix)]
fn ensure_blas_coretype() {
    use std::os::unix::process::CommandExt;
    if std::env::var_os("OPENBLAS_CORETYPE").is_some() {
        return;
    }
    let Ok(exe) = std::env::current_exe() else { return };
    let err = std::process::Command::new(exe).args(std::env::args_os().skip(1)).env("OPENBLAS_CORETYPE", "Haswell").exec();
    eprintln!("warning: could not re-exec with OPENBLAS_CORETYPE set: {err}");
}

#[cfg(not(unix))]
fn ensure_blas_coretype() {}

fn main() {
    ensure_blas_coretype();
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {}", e.message());
        std::process::exit(e.exit_code());
    }
}
