use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use clap::builder::TypedValueParser;
use clap::Args;
use serde::Serialize;
use thermobg::io::{write_mask, write_posterior};
use thermobg::persist::{load_grid, save_grid};
use thermobg::{AdaptMode, AdaptationConfig, Connectivity, EngineConfig, PixelGrid, SegmentationConfig};

use crate::failure::Failure;
use crate::fit::{fit_history, FitOptions};
use crate::input::{create_dir, load_dir, InputArgs};

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Output directory for masks, the updated model and the manifest.
    #[arg(long, short)]
    pub out: PathBuf,
    /// Saved model; without it the first --history frames are fitted and
    /// only the remaining frames are segmented.
    #[arg(long, short)]
    pub model: Option<PathBuf>,
    /// Frame directory whose last N frames seed the exact-mode history when
    /// starting from a saved model.
    #[arg(long)]
    pub pool: Option<PathBuf>,
    #[command(flatten)]
    pub fit: FitOptions,
    /// Background prior probability (> 0.5).
    #[arg(long, default_value_t = 0.6)]
    pub pbg: f64,
    /// Background posterior at or above which a pixel is background.
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
    /// Foreground blobs smaller than this many pixels are removed.
    #[arg(long, default_value_t = 15)]
    pub min_blob: usize,
    /// Blob neighbourhood.
    #[arg(long, default_value_t = 8, value_parser = clap::builder::PossibleValuesParser::new(["4", "8"]).map(|s| s.parse::<u32>().unwrap()))]
    pub connectivity: u32,
    /// Matching-probability estimate: exact keeps the last N samples per
    /// pixel, approx uses the model's CDF.
    #[arg(long, default_value = "approx", value_parser = ["exact", "approx"])]
    pub mode: String,
    /// Worker threads (0 = all cores); never changes the output.
    #[arg(long, env = "THERMOBG_WORKERS", default_value_t = 0)]
    pub workers: usize,
    /// Also write background posteriors as 16-bit PGMs under `posterior/`.
    #[arg(long)]
    pub save_posterior: bool,
    /// Classify only; never update the models.
    #[arg(long)]
    pub freeze: bool,
    /// Where to write the updated model (default `<out>/model.vimm`).
    #[arg(long)]
    pub model_out: Option<PathBuf>,
    #[arg(long, short)]
    pub quiet: bool,
}

/// Everything needed to reproduce a run, written as `manifest.json`.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub version: &'static str,
    pub input: String,
    pub raw: Option<String>,
    pub model: Option<String>,
    pub pool: Option<String>,
    pub output: String,
    pub model_out: String,
    pub config: EngineConfig,
    pub seed: u64,
    pub frames_fitted: usize,
    pub frames_processed: usize,
    pub timing: Timing,
}

#[derive(Debug, Serialize)]
pub struct Timing {
    pub fit_seconds: f64,
    pub process_seconds: f64,
    pub frames_per_second: f64,
    pub microseconds_per_pixel: f64,
}

impl RunArgs {
    fn engine_config(&self) -> Result<EngineConfig> {
        let mode: AdaptMode = self.mode.parse()?;
        let config = EngineConfig {
            fit: self.fit.fit_config(),
            adapt: AdaptationConfig {
                mode,
                ..AdaptationConfig::default()
            },
            segment: SegmentationConfig {
                p_bg: self.pbg,
                decision_threshold: self.threshold,
                min_blob_area: self.min_blob,
                connectivity: Connectivity::from_neighbours(self.connectivity)?,
            },
            workers: self.workers,
            freeze: self.freeze,
        };
        config.validate()?;
        Ok(config)
    }
}

fn display(p: &Path) -> String {
    p.display().to_string()
}

fn load_model(
    path: &Path,
    pool: Option<&Path>,
    config: EngineConfig,
    width: usize,
    height: usize,
) -> Result<PixelGrid> {
    let needs_pool = config.adapt.mode == AdaptMode::Exact && !config.freeze;
    let mut grid = load_grid(path, config).with_context(|| format!("loading {}", path.display()))?;
    if (grid.width(), grid.height()) != (width, height) {
        return Err(Failure::data(format!(
            "model {} is {}x{} but the frames are {width}x{height}",
            path.display(),
            grid.width(),
            grid.height()
        ))
        .into());
    }
    match pool {
        Some(dir) => {
            let n = grid.history_len();
            let frames = load_dir(dir)?.frames;
            if frames.len() < n {
                return Err(Failure::data(format!(
                    "--pool needs at least {n} frames, {} has {}",
                    dir.display(),
                    frames.len()
                ))
                .into());
            }
            grid.seed_pools(&frames[frames.len() - n..])?;
        }
        None if needs_pool => {
            return Err(Failure::usage(
                "--mode exact with --model needs --pool <frames dir> to rebuild the sample history",
            )
            .into())
        }
        None => {}
    }
    Ok(grid)
}

pub fn cmd_run(args: RunArgs) -> Result<()> {
    let config = args.engine_config()?;
    let source = args.input.load()?;
    let (width, height) = (source.frames[0].width(), source.frames[0].height());

    let fit_start = Instant::now();
    let (mut grid, skip) = match &args.model {
        Some(path) => (load_model(path, args.pool.as_deref(), config, width, height)?, 0),
        None => {
            if args.pool.is_some() {
                return Err(Failure::usage("--pool only applies together with --model").into());
            }
            (
                fit_history(&source.frames, &args.fit, config, args.quiet)?,
                args.fit.history,
            )
        }
    };
    let fit_seconds = fit_start.elapsed().as_secs_f64();
    let levels = source.frames[0].depth().levels();
    if grid.intensity_levels() != levels {
        return Err(Failure::data(format!(
            "model expects {} intensity levels but the frames have {levels}",
            grid.intensity_levels()
        ))
        .into());
    }

    create_dir(&args.out)?;
    let post_dir = args.out.join("posterior");
    if args.save_posterior {
        create_dir(&post_dir)?;
    }
    let start = Instant::now();
    let todo = &source.frames[skip..];
    for (frame, name) in todo.iter().zip(&source.names[skip..]) {
        let mask = grid.process_frame(frame)?;
        write_mask(&mask, args.out.join(name))?;
        if args.save_posterior {
            write_posterior(&mask, post_dir.join(name))?;
        }
    }
    let process_seconds = start.elapsed().as_secs_f64();

    let model_out = args.model_out.clone().unwrap_or_else(|| args.out.join("model.vimm"));
    save_grid(&grid, &model_out)?;

    let per_frame = if todo.is_empty() {
        0.0
    } else {
        process_seconds / todo.len() as f64
    };
    let manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION"),
        input: display(&args.input.input),
        raw: args
            .input
            .raw
            .map(|s| format!("{s} depth={} endian={}", args.input.depth, args.input.endian)),
        model: args.model.as_deref().map(display),
        pool: args.pool.as_deref().map(display),
        output: display(&args.out),
        model_out: display(&model_out),
        config: grid.config().clone(),
        seed: args.fit.seed,
        frames_fitted: skip,
        frames_processed: todo.len(),
        timing: Timing {
            fit_seconds,
            process_seconds,
            frames_per_second: if process_seconds > 0.0 {
                todo.len() as f64 / process_seconds
            } else {
                0.0
            },
            microseconds_per_pixel: per_frame * 1e6 / (width * height) as f64,
        },
    };
    let path = args.out.join("manifest.json");
    std::fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")
        .with_context(|| format!("writing {}", path.display()))?;
    if !args.quiet {
        eprintln!(
            "segmented {} frame(s) in {:.2}s, masks in {}",
            todo.len(),
            process_seconds,
            args.out.display()
        );
    }
    Ok(())
}
