//! Fixtures shared by the criterion benches.

use thermobg::engine::initialize_grid;
use thermobg::synth::{gen_mixture_samples, gen_video, GaussianSpec, Intensity, Rect, Region, Scenario};
use thermobg::{AdaptMode, AdaptationConfig, EngineConfig, FitConfig, Frame, PixelGrid};

/// Rounded two-mode history of `n` samples, like a flickering pixel.
pub fn bimodal_history(n: usize, seed: u64) -> Vec<f64> {
    let specs = [
        GaussianSpec::new(30.0, 2.0, n / 2).unwrap(),
        GaussianSpec::new(70.0, 2.0, n - n / 2).unwrap(),
    ];
    let mut data = gen_mixture_samples(&specs, seed).unwrap();
    for x in &mut data {
        *x = x.round();
    }
    data
}

pub fn fit_config(n: usize, k_max: usize) -> FitConfig {
    FitConfig {
        history_len: n,
        k_max,
        ..FitConfig::default()
    }
}

/// `history + extra` frames of a scene with a bimodal strip.
pub fn scene(width: usize, height: usize, history: usize, extra: usize) -> Vec<Frame> {
    let s = Scenario {
        width,
        height,
        frames: history + extra,
        seed: 1,
        bit_depth: 8,
        background: Intensity {
            mean: 50.0,
            stddev: 2.0,
        },
        regions: vec![Region {
            rect: Rect::from([0, 0, width, height / 4]),
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
        events: Vec::new(),
    };
    gen_video(&s).unwrap().frames.into_frames()
}

/// Initialized single-threaded grid plus the frames after its history.
pub fn ready_grid(width: usize, height: usize, mode: AdaptMode) -> (PixelGrid, Vec<Frame>) {
    let history = 30;
    let mut frames = scene(width, height, history, 20);
    let rest = frames.split_off(history);
    let config = EngineConfig {
        fit: fit_config(history, 10),
        adapt: AdaptationConfig {
            mode,
            ..AdaptationConfig::default()
        },
        workers: 1,
        ..EngineConfig::default()
    };
    let (grid, _) = initialize_grid(&frames, config).unwrap();
    (grid, rest)
}
