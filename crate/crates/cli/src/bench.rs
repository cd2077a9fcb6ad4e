use std::time::Instant;

use anyhow::Result;
use clap::Args;
use thermobg::engine::initialize_grid;
use thermobg::synth::{gen_video, Event, Intensity, Rect, Region, Scenario};
use thermobg::{AdaptMode, AdaptationConfig, EngineConfig, FitConfig};

use crate::input::Size;

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Frame size; repeat to benchmark several.
    #[arg(long, value_name = "WxH", default_values_t = [Size { width: 320, height: 240 }])]
    pub size: Vec<Size>,
    /// Frames segmented after initialization.
    #[arg(long, default_value_t = 100)]
    pub frames: usize,
    /// History length of the initial fit.
    #[arg(long, default_value_t = 30)]
    pub history: usize,
    #[arg(long, default_value_t = 10)]
    pub kmax: usize,
    #[arg(long, default_value = "approx", value_parser = ["exact", "approx"])]
    pub mode: String,
    /// Worker threads (0 = all cores).
    #[arg(long, env = "THERMOBG_WORKERS", default_value_t = 0)]
    pub workers: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Bimodal strip along the top plus one object crossing after the history.
fn scenario(size: Size, frames: usize, history: usize, seed: u64) -> Scenario {
    let (w, h) = (size.width, size.height);
    let side = (w.min(h) / 4).max(1);
    Scenario {
        width: w,
        height: h,
        frames: history + frames,
        seed,
        bit_depth: 8,
        background: Intensity {
            mean: 50.0,
            stddev: 2.0,
        },
        regions: vec![Region {
            rect: Rect::from([0, 0, w, (h / 5).max(1)]),
            modes: vec![
                Intensity {
                    mean: 30.0,
                    stddev: 2.0,
                },
                Intensity {
                    mean: 70.0,
                    stddev: 2.0,
                },
            ],
        }],
        events: vec![Event {
            rect: Rect::from([0, h / 2 - side / 2, side, side]),
            start: history,
            end: history + frames,
            mean: 200.0,
            stddev: 3.0,
            velocity: [w as f64 / frames.max(1) as f64, 0.0],
        }],
    }
}

pub fn cmd_bench(args: BenchArgs) -> Result<()> {
    let config = EngineConfig {
        fit: FitConfig {
            history_len: args.history,
            k_max: args.kmax.min(args.history),
            rng_seed: args.seed,
            ..FitConfig::default()
        },
        adapt: AdaptationConfig {
            mode: args.mode.parse::<AdaptMode>()?,
            ..AdaptationConfig::default()
        },
        workers: args.workers,
        ..EngineConfig::default()
    };
    config.validate()?;
    println!(
        "mode {}, history {}, k_max {}, workers {}",
        args.mode, args.history, config.fit.k_max, args.workers
    );
    for &size in &args.size {
        let video = gen_video(&scenario(size, args.frames, args.history, args.seed))?;
        let frames = video.frames.frames();
        let pixels = (size.width * size.height) as f64;

        let start = Instant::now();
        let (mut grid, _) = initialize_grid(&frames[..args.history], config.clone())?;
        let init = start.elapsed().as_secs_f64();

        let start = Instant::now();
        let mut foreground = 0;
        for f in &frames[args.history..] {
            foreground += grid.process_frame(f)?.foreground_count();
        }
        let run = start.elapsed().as_secs_f64().max(f64::MIN_POSITIVE);
        let n = args.frames as f64;
        println!(
            "{size}: init {init:.3} s ({:.2} us/pixel); {} frames in {run:.3} s, {:.2} frames/s, {:.4} us/pixel/frame ({foreground} foreground pixels)",
            init * 1e6 / pixels,
            args.frames,
            n / run,
            run * 1e6 / (n * pixels),
        );
    }
    Ok(())
}
