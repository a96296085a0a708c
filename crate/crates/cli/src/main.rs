use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

mod config;
mod run;

#[derive(Parser)]
#[command(name = "stcov", version, about = "Covariant spatio-temporal receptive fields")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Base seed for every random draw.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// error, warn, info, debug or trace.
    #[arg(long, default_value = "warn")]
    log_level: String,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a spatio-temporal kernel.
    KernelGen(Common),
    /// Smooth a video and apply a derivative operator.
    Respond(Common),
    /// Warp a video by a transform.
    Warp(Common),
    /// Run a covariance sweep; exits 1 if a graded case fails.
    Verify(Common),
    /// Run a covariance sweep and only report.
    Sweep(Common),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, common) = match &cli.command {
        Command::KernelGen(c) => ("kernel-gen", c),
        Command::Respond(c) => ("respond", c),
        Command::Warp(c) => ("warp", c),
        Command::Verify(c) => ("verify", c),
        Command::Sweep(c) => ("sweep", c),
    };
    env_logger::Builder::new()
        .parse_filters(&common.log_level)
        .format_timestamp(None)
        .init();

    let cfg = match config::load(name, &common.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match run::run(name, &cfg, &common.out, common.seed) {
        Ok(o) if o.verification_failed => ExitCode::from(1),
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
