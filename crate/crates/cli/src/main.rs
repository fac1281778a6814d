//! `advice`: run expert-advice forecasters on generated or ingested payoff
//! sequences, emit per-round traces, and verify the regret-bound catalog.
//!
//! Exit codes: 0 on success, 1 on a bound violation, 2 on configuration or
//! I/O errors.

mod commands;
mod output;
mod setup;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use commands::{cmd_run, cmd_sweep, cmd_verify, SweepGrid};
use setup::AlgoFlags;

/// Default output directory: `--out`, else `ADVICE_OUT_DIR`, else `./advice-out`.
fn out_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os("ADVICE_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("advice-out"))
}

#[derive(Parser)]
#[command(
    name = "advice",
    about = "Prediction-with-expert-advice forecasters and regret bound verification",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one forecaster over one sequence; write trace.csv and summary.json.
    Run {
        #[command(flatten)]
        flags: AlgoFlags,
        /// Generator spec, e.g. 'uniform,N=4,n=200,m=1' (see README).
        #[arg(long)]
        gen: Option<String>,
        /// Payoff CSV with header t,x_1,...,x_N (alternative to --gen).
        #[arg(long)]
        input: Option<PathBuf>,
        /// Generator seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Bound ids to verify: 'auto' or a comma list like 'B1,B3'.
        #[arg(long, default_value = "auto")]
        bounds: String,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Verify bounds; with no --algo, runs the whole B1-B12 default catalog.
    Verify {
        #[command(flatten)]
        flags: AlgoFlags,
        #[arg(long)]
        gen: Option<String>,
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "auto")]
        bounds: String,
        /// Inject a reward error before verifying (self-test of the
        /// violation path; must exit 1).
        #[arg(long)]
        corrupt: bool,
    },
    /// Grid of runs over experts x rounds x magnitude x seeds; aggregate CSV.
    Sweep {
        #[command(flatten)]
        flags: AlgoFlags,
        /// Generator kind: uniform | bernoulli | loss | outlier | leader-flip
        #[arg(long, default_value = "uniform")]
        gen_kind: String,
        /// Comma list of expert counts.
        #[arg(long, default_value = "2,8")]
        grid_experts: String,
        /// Comma list of round counts.
        #[arg(long, default_value = "100,1000")]
        grid_rounds: String,
        /// Comma list of base payoff magnitudes.
        #[arg(long, default_value = "1")]
        grid_magnitude: String,
        /// Seeds per grid point.
        #[arg(long, default_value_t = 1)]
        seeds: u64,
        /// Base seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "auto")]
        bounds: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn dispatch(cli: Cli) -> anyhow::Result<u8> {
    match cli.command {
        Command::Run {
            flags,
            gen,
            input,
            seed,
            bounds,
            out,
        } => cmd_run(&flags, &gen, &input, seed, &bounds, &out_dir(out)),
        Command::Verify {
            flags,
            gen,
            input,
            seed,
            bounds,
            corrupt,
        } => cmd_verify(&flags, &gen, &input, seed, &bounds, corrupt),
        Command::Sweep {
            flags,
            gen_kind,
            grid_experts,
            grid_rounds,
            grid_magnitude,
            seeds,
            seed,
            bounds,
            out,
        } => {
            let grid = SweepGrid {
                kind: gen_kind,
                experts: grid_experts,
                rounds: grid_rounds,
                magnitudes: grid_magnitude,
                seeds,
                seed_base: seed,
            };
            cmd_sweep(&flags, &grid, &bounds, &out_dir(out))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
