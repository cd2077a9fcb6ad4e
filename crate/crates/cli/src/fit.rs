use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use thermobg::engine::{initialize_grid_with_progress, GridFitSummary};
use thermobg::persist::save_grid;
use thermobg::{EngineConfig, FitConfig, Frame, PixelGrid};

use crate::failure::Failure;
use crate::input::InputArgs;

/// Settings of the per-pixel batch fit.
#[derive(Debug, Clone, Args)]
pub struct FitOptions {
    /// History length N: frames used for the fit and the adaptation horizon.
    #[arg(long, default_value_t = 100)]
    pub history: usize,
    /// Initial number of clusters before merging.
    #[arg(long, default_value_t = 50)]
    pub kmax: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub max_iters: usize,
    /// Fail with exit code 3 if any pixel's fit hits the iteration cap.
    #[arg(long)]
    pub strict: bool,
}

impl FitOptions {
    pub fn fit_config(&self) -> FitConfig {
        FitConfig {
            history_len: self.history,
            k_max: self.kmax.min(self.history),
            rng_seed: self.seed,
            max_iters: self.max_iters,
            ..FitConfig::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub fit: FitOptions,
    /// Model file to write.
    #[arg(long, short)]
    pub out: PathBuf,
    /// Worker threads (0 = all cores); never changes the output.
    #[arg(long, env = "THERMOBG_WORKERS", default_value_t = 0)]
    pub workers: usize,
    /// No progress output.
    #[arg(long, short)]
    pub quiet: bool,
}

/// Fits the grid from the first `history` frames, enforcing `--strict`.
pub fn fit_history(frames: &[Frame], opts: &FitOptions, config: EngineConfig, quiet: bool) -> Result<PixelGrid> {
    if frames.len() < opts.history {
        return Err(Failure::data(format!(
            "--history {} needs at least {} frames, the input has {}",
            opts.history,
            opts.history,
            frames.len()
        ))
        .into());
    }
    let report = |done: usize, total: usize| {
        if done.is_multiple_of((total / 10).max(1)) || done == total {
            eprint!("\rfitting {done}/{total} pixels");
            if done == total {
                eprintln!();
            }
        }
    };
    let progress: Option<&(dyn Fn(usize, usize) + Sync)> = if quiet { None } else { Some(&report) };
    let (grid, summary) = initialize_grid_with_progress(&frames[..opts.history], config, progress)?;
    check_summary(&summary, opts.strict)?;
    Ok(grid)
}

fn check_summary(s: &GridFitSummary, strict: bool) -> Result<()> {
    if s.degenerate > 0 {
        eprintln!("note: {} pixel(s) had a constant history", s.degenerate);
    }
    if s.unconverged > 0 {
        let msg = format!(
            "{} pixel fit(s) reached the iteration cap without converging",
            s.unconverged
        );
        if strict {
            return Err(Failure::numerical(msg).into());
        }
        eprintln!("warning: {msg}");
    }
    Ok(())
}

pub fn print_histogram(h: &BTreeMap<usize, usize>) {
    let total: usize = h.values().sum();
    println!("components  pixels  share");
    for (k, n) in h {
        println!("{k:>10}  {n:>6}  {:>5.1}%", 100.0 * *n as f64 / total as f64);
    }
}

pub fn cmd_fit(args: FitArgs) -> Result<()> {
    let source = args.input.load()?;
    let config = EngineConfig {
        fit: args.fit.fit_config(),
        workers: args.workers,
        ..EngineConfig::default()
    };
    let grid = fit_history(&source.frames, &args.fit, config, args.quiet)?;
    save_grid(&grid, &args.out)?;
    print_histogram(&grid.component_histogram());
    if !args.quiet {
        eprintln!("wrote {}", args.out.display());
    }
    Ok(())
}
