//! `thermobg` command-line front end.

mod bench;
mod eval;
mod failure;
mod fit;
mod input;
mod run;
mod synth;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::failure::Failure;

#[derive(Debug, Parser)]
#[command(name = "thermobg", version, about = "Per-pixel mixture background subtraction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit one mixture per pixel from the first N frames and save the model.
    Fit(fit::FitArgs),
    /// Segment frames into foreground masks, adapting the model as it goes.
    Run(run::RunArgs),
    /// Score predicted masks against ground truth.
    Eval(eval::EvalArgs),
    /// Synthetic experiments and scenario videos.
    #[command(subcommand)]
    Synth(synth::SynthCommand),
    /// Measure initialization and per-frame throughput on synthetic video.
    Bench(bench::BenchArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { failure::USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Fit(args) => fit::cmd_fit(args),
        Command::Run(args) => run::cmd_run(args),
        Command::Eval(args) => eval::cmd_eval(args),
        Command::Synth(cmd) => synth::cmd_synth(cmd),
        Command::Bench(args) => bench::cmd_bench(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(Failure::exit_code(&e))
        }
    }
}
