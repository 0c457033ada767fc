//! `magscatter` — scattering experiments for the magnetic Schrödinger
//! operator from JSON configs.
//!
//! Exit codes: 0 success, 2 invalid config/arguments, 3 numerical failure
//! (divergence, non-convergence, quadrature breakdown). Errors are emitted
//! as one JSON object on stderr.

mod commands;
mod config;
mod formats;

use clap::{Args, Parser, Subcommand, ValueEnum};
use commands::{AppResult, RunContext};
use magscatter::QuadratureMode;
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "magscatter", version, about = "Magnetic Schrödinger scattering toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Quadrature {
    Fft,
    Dense,
}

#[derive(Args)]
struct CommonArgs {
    /// JSON experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
    /// Green-convolution backend; dense is an O(N^2) cross-check.
    #[arg(long, value_enum, default_value = "fft")]
    quadrature: Quadrature,
    /// Reserved for randomized features; accepted for forward compatibility.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the scattering problem and write the scattered field.
    Solve(CommonArgs),
    /// Solve, then tabulate scattering amplitudes over a direction set.
    Amplitude(CommonArgs),
    /// First-order Born amplitudes and second-order backscattering terms.
    Born(CommonArgs),
    /// Direct solution vs. Born approximations at backscattering.
    Compare(CommonArgs),
    /// Run the compare pipeline along a configured parameter sweep.
    Sweep(CommonArgs),
    /// Reconstruct |W|^2 + V from multi-frequency backscattering data.
    Invert(CommonArgs),
    /// Convert results in an output directory to plot-ready .dat files.
    Export {
        /// Output directory of a previous run.
        #[arg(long)]
        out: PathBuf,
        /// One of: amplitude_angle, field_slice, sweep_curve.
        #[arg(long)]
        kind: String,
    },
}

fn setup_threads() {
    if let Ok(v) = std::env::var("MAGSCATTER_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            if n > 0 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

fn main() {
    setup_threads();
    let cli = Cli::parse();
    let result: AppResult<()> = match cli.command {
        Command::Export { out, kind } => commands::cmd_export(&out, &kind),
        Command::Solve(a) => with_ctx(a, commands::cmd_solve),
        Command::Amplitude(a) => with_ctx(a, commands::cmd_amplitude),
        Command::Born(a) => with_ctx(a, commands::cmd_born),
        Command::Compare(a) => with_ctx(a, commands::cmd_compare),
        Command::Sweep(a) => with_ctx(a, commands::cmd_sweep),
        Command::Invert(a) => with_ctx(a, commands::cmd_invert),
    };
    if let Err(e) = result {
        let doc = serde_json::json!({"error": {"kind": e.kind(), "message": e.message()}});
        eprintln!("{doc}");
        std::process::exit(e.exit_code());
    }
}

fn with_ctx(args: CommonArgs, f: impl FnOnce(&RunContext) -> AppResult<()>) -> AppResult<()> {
    let mode = match args.quadrature {
        Quadrature::Fft => QuadratureMode::FftConvolution,
        Quadrature::Dense => QuadratureMode::DenseQuadrature,
    };
    let ctx = RunContext::load(&args.config, &args.out, mode)?;
    f(&ctx)
}
