//! `qwalk`: split-step quantum walks on site-diluted square lattices.
//!
//! Subcommands: `walk` (single realization + snapshots), `ensemble`
//! (configuration-averaged MSD and diffusion fits), `chern` (coin-angle
//! phase diagram), `fit` (re-fit a stored diffusion table).

mod commands;
mod error;
mod manifest;
mod params;

use clap::{Args, Parser, Subcommand};
use error::{CliError, CliResult};
use params::Overrides;
use std::path::PathBuf;
use std::process::ExitCode;

/// Split-step quantum walks on percolation-diluted square lattices.
#[derive(Parser, Debug)]
#[command(name = "qwalk", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand. All of them may also be given in a
/// `--config` file as `key = value` lines (underscores for dashes); explicit
/// flags take precedence.
#[derive(Args, Debug, Default)]
struct CommonArgs {
    /// Site occupation probability; comma-separated list for ensemble sweeps
    #[arg(long)]
    p: Option<String>,

    /// First coin angle (radians)
    #[arg(long)]
    theta1: Option<f64>,

    /// Second coin angle (radians)
    #[arg(long)]
    theta2: Option<f64>,

    /// Walk protocol: chern3 (three-shift split step) or floquet2 (two-shift)
    #[arg(long)]
    protocol: Option<String>,

    /// Initial coin state: sy, sx, or custom:re,im,re,im
    #[arg(long)]
    coin: Option<String>,

    /// Disorder seed for a single realization (default 0)
    #[arg(long)]
    seed: Option<u64>,

    /// Explicit seed range START..END (END exclusive)
    #[arg(long)]
    seeds: Option<String>,

    /// Number of disorder configurations (seeds SEED_BASE..SEED_BASE+N)
    #[arg(long)]
    configs: Option<usize>,

    /// First seed when --configs is used (default 0)
    #[arg(long)]
    seed_base: Option<u64>,

    /// Number of protocol steps (default 2048; 10000 with --paper-scale)
    #[arg(long)]
    tmax: Option<u64>,

    /// Width in decades of the running-exponent fit window (default 0.25)
    #[arg(long)]
    window: Option<f64>,

    /// Worker threads (default: all cores)
    #[arg(long)]
    threads: Option<usize>,

    /// Output directory (default qwalk_out)
    #[arg(long)]
    out_dir: Option<PathBuf>,

    /// key = value settings file; explicit flags win
    #[arg(long)]
    config: Option<PathBuf>,

    /// Re-run a saved manifest.json and compare output digests
    #[arg(long)]
    from_manifest: Option<PathBuf>,

    /// Production preset: tmax 10000 and 1000 configurations
    #[arg(long)]
    paper_scale: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evolve one disorder realization and export probability snapshots
    Walk {
        #[command(flatten)]
        common: CommonArgs,

        /// Comma-separated snapshot times (default: tmax)
        #[arg(long)]
        snapshots: Option<String>,
    },

    /// Average the mean squared displacement over disorder configurations
    Ensemble {
        #[command(flatten)]
        common: CommonArgs,
    },

    /// Map Chern numbers over the coin-angle plane
    Chern {
        #[command(flatten)]
        common: CommonArgs,

        /// Coin-angle grid resolution per axis (default 64)
        #[arg(long)]
        grid_theta: Option<usize>,

        /// Brillouin-zone grid resolution per axis (default 64)
        #[arg(long)]
        grid_k: Option<usize>,
    },

    /// Refit asymptotics from a stored diffusion CSV
    Fit {
        #[command(flatten)]
        common: CommonArgs,

        /// Diffusion CSV produced by the ensemble command
        #[arg(long)]
        input: Option<PathBuf>,

        /// Lower fit bound in steps (default: last time / 10)
        #[arg(long)]
        fit_tmin: Option<u64>,

        /// Upper fit bound in steps (default: last time)
        #[arg(long)]
        fit_tmax: Option<u64>,
    },
}

fn overrides_from(common: &CommonArgs) -> Overrides {
    Overrides {
        p: common.p.clone(),
        theta1: common.theta1,
        theta2: common.theta2,
        protocol: common.protocol.clone(),
        coin: common.coin.clone(),
        seed: common.seed,
        seeds: common.seeds.clone(),
        seed_base: common.seed_base,
        configs: common.configs,
        tmax: common.tmax,
        window: common.window,
        threads: common.threads,
        out_dir: common.out_dir.clone(),
        snapshots: None,
        grid_theta: None,
        grid_k: None,
        input: None,
        fit_tmin: None,
        fit_tmax: None,
        paper_scale: common.paper_scale,
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let (name, common, mut o) = match cli.command {
        Command::Walk { common, snapshots } => {
            let mut o = overrides_from(&common);
            o.snapshots = snapshots;
            ("walk", common, o)
        }
        Command::Ensemble { common } => {
            let o = overrides_from(&common);
            ("ensemble", common, o)
        }
        Command::Chern {
            common,
            grid_theta,
            grid_k,
        } => {
            let mut o = overrides_from(&common);
            o.grid_theta = grid_theta;
            o.grid_k = grid_k;
            ("chern", common, o)
        }
        Command::Fit {
            common,
            input,
            fit_tmin,
            fit_tmax,
        } => {
            let mut o = overrides_from(&common);
            o.input = input;
            o.fit_tmin = fit_tmin;
            o.fit_tmax = fit_tmax;
            ("fit", common, o)
        }
    };

    if let Some(cfg) = &common.config {
        o.absorb_config(cfg)?;
    }
    if let Some(n) = o.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::resource(format!("cannot build thread pool: {e}")))?;
    }

    if let Some(manifest_path) = &common.from_manifest {
        return commands::replay(manifest_path, name, params::out_dir(&o));
    }

    match name {
        "walk" => {
            let (p, dir) = params::resolve_walk(&o)?;
            commands::cmd_walk(&p, &dir)?;
        }
        "ensemble" => {
            let (r, dir) = params::resolve_ensemble(&o)?;
            commands::cmd_ensemble(&r, &dir)?;
        }
        "chern" => {
            let (c, dir) = params::resolve_chern(&o)?;
            commands::cmd_chern(&c, &dir)?;
        }
        "fit" => {
            let (f, dir) = params::resolve_fit(&o)?;
            commands::cmd_fit(&f, &dir)?;
        }
        _ => unreachable!(),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
