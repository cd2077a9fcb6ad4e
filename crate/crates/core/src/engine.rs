//! Full-frame orchestration: one mixture per pixel, batch fit, then streaming
//! classify-and-adapt.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adapt::{adapt, AdaptMode, AdaptationConfig, HistoryPool};
use crate::error::{Error, Result};
use crate::frame::{Frame, Label, MaskFrame};
use crate::mixture::MixtureModel;
use crate::segment::{blob_filter, label_for, posterior_bg, SegmentationConfig};
use crate::variational::{fit, FitConfig};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    pub fit: FitConfig,
    pub adapt: AdaptationConfig,
    pub segment: SegmentationConfig,
    /// Worker threads; 0 lets rayon decide. Never changes the output.
    pub workers: usize,
    /// Classify only, never adapt the models.
    pub freeze: bool,
}

impl EngineConfig {
    pub fn validate(&self) -> Result<()> {
        self.fit.validate()?;
        self.adapt.validate()?;
        self.segment.validate()
    }
}

/// Per-pixel seed derived from the run seed (splitmix64 finalizer).
pub fn pixel_seed(seed: u64, index: usize) -> u64 {
    let mut z = seed ^ (index as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GridFitSummary {
    /// Pixels whose fit hit the iteration cap.
    pub unconverged: usize,
    /// Pixels with a degenerate (constant) history.
    pub degenerate: usize,
}

/// One background model per pixel, row-major.
pub struct PixelGrid {
    width: usize,
    height: usize,
    models: Vec<MixtureModel>,
    pools: Option<Vec<HistoryPool>>,
    config: EngineConfig,
    threads: Option<Arc<rayon::ThreadPool>>,
}

impl std::fmt::Debug for PixelGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PixelGrid")
            .field("width", &self.width)
            .field("height", &self.height)
            .field("pixels", &self.models.len())
            .field("pools", &self.pools.is_some())
            .field("config", &self.config)
            .finish()
    }
}

impl Clone for PixelGrid {
    fn clone(&self) -> Self {
        Self {
            width: self.width,
            height: self.height,
            models: self.models.clone(),
            pools: self.pools.clone(),
            config: self.config.clone(),
            threads: self.threads.clone(),
        }
    }
}

/// Equal geometry, models and pools; configuration is not compared.
impl PartialEq for PixelGrid {
    fn eq(&self, other: &Self) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.models == other.models
            && self.pools == other.pools
    }
}

fn build_threads(workers: usize) -> Result<Option<Arc<rayon::ThreadPool>>> {
    if workers <= 1 {
        return Ok(None);
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map(|p| Some(Arc::new(p)))
        .map_err(|e| Error::config(format!("cannot start {workers} workers: {e}")))
}

fn run_on<R: Send>(threads: Option<&rayon::ThreadPool>, op: impl FnOnce() -> R + Send) -> R {
    match threads {
        Some(t) => t.install(op),
        None => op(),
    }
}

impl PixelGrid {
    /// Assembles a grid from existing models. Exact mode requires pools.
    pub fn from_models(
        width: usize,
        height: usize,
        models: Vec<MixtureModel>,
        pools: Option<Vec<HistoryPool>>,
        config: EngineConfig,
    ) -> Result<Self> {
        config.validate()?;
        if models.len() != width * height {
            return Err(Error::Dimension {
                expected: format!("{} models", width * height),
                actual: format!("{}", models.len()),
            });
        }
        if let Some(first) = models.first() {
            if models
                .iter()
                .any(|m| m.history_len() != first.history_len() || m.intensity_levels() != first.intensity_levels())
            {
                return Err(Error::config("all pixel models must share N and intensity levels"));
            }
        }
        if let Some(p) = &pools {
            if p.len() != models.len() {
                return Err(Error::Dimension {
                    expected: format!("{} history pools", models.len()),
                    actual: format!("{}", p.len()),
                });
            }
        }
        let threads = build_threads(config.workers)?;
        let mut grid = Self {
            width,
            height,
            models,
            pools,
            config,
            threads,
        };
        if grid.config.adapt.mode == AdaptMode::Approx {
            grid.pools = None;
        }
        Ok(grid)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn models(&self) -> &[MixtureModel] {
        &self.models
    }

    pub fn model(&self, x: usize, y: usize) -> &MixtureModel {
        &self.models[y * self.width + x]
    }

    /// Per-pixel sample history; present only in exact mode.
    pub fn pools(&self) -> Option<&[HistoryPool]> {
        self.pools.as_deref()
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn history_len(&self) -> usize {
        self.models[0].history_len()
    }

    pub fn intensity_levels(&self) -> u32 {
        self.models[0].intensity_levels()
    }

    /// Replaces the runtime configuration (the models are kept).
    pub fn set_config(&mut self, config: EngineConfig) -> Result<()> {
        config.validate()?;
        if config.workers != self.config.workers {
            self.threads = build_threads(config.workers)?;
        }
        if config.adapt.mode == AdaptMode::Approx {
            self.pools = None;
        }
        self.config = config;
        Ok(())
    }

    /// Installs per-pixel pools built from `frames`, oldest first.
    pub fn seed_pools(&mut self, frames: &[Frame]) -> Result<()> {
        let n = self.history_len();
        let mut pools = vec![HistoryPool::new(n); self.models.len()];
        for f in frames {
            self.check_frame(f)?;
            for (pool, &v) in pools.iter_mut().zip(f.data()) {
                pool.push(v as f64);
            }
        }
        self.pools = Some(pools);
        Ok(())
    }

    /// Histogram of component counts across pixels.
    pub fn component_histogram(&self) -> BTreeMap<usize, usize> {
        let mut h = BTreeMap::new();
        for m in &self.models {
            *h.entry(m.len()).or_insert(0) += 1;
        }
        h
    }

    fn check_frame(&self, frame: &Frame) -> Result<()> {
        if (frame.width(), frame.height()) != (self.width, self.height) {
            return Err(Error::Dimension {
                expected: format!("{}x{}", self.width, self.height),
                actual: format!("{}x{}", frame.width(), frame.height()),
            });
        }
        Ok(())
    }

    /// Classifies every pixel, adapts its model, then filters small blobs.
    pub fn process_frame(&mut self, frame: &Frame) -> Result<MaskFrame> {
        self.check_frame(frame)?;
        let exact = self.config.adapt.mode == AdaptMode::Exact;
        if exact && !self.config.freeze && self.pools.is_none() {
            return Err(Error::config("exact adaptation needs per-pixel history pools"));
        }
        let seg = self.config.segment;
        let acfg = self.config.adapt;
        let update = !self.config.freeze;
        let sequential = self.threads.is_none() && self.config.workers == 1;

        let step = |m: &mut MixtureModel, pool: Option<&mut HistoryPool>, v: u16| -> Result<(Label, f64)> {
            let x = v as f64;
            let p = posterior_bg(m, x, &seg);
            if update {
                adapt(m, x, &acfg, pool)?;
            }
            Ok((label_for(p, &seg), p))
        };

        let threads = self.threads.as_deref();
        let models = &mut self.models;
        let data = frame.data();
        let results: Result<Vec<(Label, f64)>> = match (self.pools.as_mut(), sequential) {
            (Some(pools), true) => models
                .iter_mut()
                .zip(pools.iter_mut())
                .zip(data)
                .map(|((m, pool), &v)| step(m, Some(pool), v))
                .collect(),
            (None, true) => models.iter_mut().zip(data).map(|(m, &v)| step(m, None, v)).collect(),
            (Some(pools), false) => run_on(threads, || {
                models
                    .par_iter_mut()
                    .zip(pools.par_iter_mut())
                    .zip(data.par_iter())
                    .map(|((m, pool), &v)| step(m, Some(pool), v))
                    .collect()
            }),
            (None, false) => run_on(threads, || {
                models
                    .par_iter_mut()
                    .zip(data.par_iter())
                    .map(|(m, &v)| step(m, None, v))
                    .collect()
            }),
        };
        let (labels, posterior): (Vec<Label>, Vec<f64>) = results?.into_iter().unzip();
        let mask = MaskFrame::new(self.width, self.height, labels)?.with_posterior(posterior)?;
        let filtered = blob_filter(&mask, &seg);
        let post = mask.posterior().map(<[f64]>::to_vec).unwrap_or_default();
        filtered.with_posterior(post)
    }
}

/// Fits every pixel's model from exactly N history frames.
pub fn initialize_grid(history: &[Frame], config: EngineConfig) -> Result<(PixelGrid, GridFitSummary)> {
    initialize_grid_with_progress(history, config, None)
}

/// As [`initialize_grid`], calling `progress(done, total)` as pixels finish.
pub fn initialize_grid_with_progress(
    history: &[Frame],
    mut config: EngineConfig,
    progress: Option<&(dyn Fn(usize, usize) + Sync)>,
) -> Result<(PixelGrid, GridFitSummary)> {
    let n = config.fit.history_len;
    if history.len() != n {
        return Err(Error::config(format!(
            "initialization needs exactly {n} frames, got {}",
            history.len()
        )));
    }
    let first = &history[0];
    for f in history {
        if (f.width(), f.height(), f.depth()) != (first.width(), first.height(), first.depth()) {
            return Err(Error::Dimension {
                expected: format!("{}x{}", first.width(), first.height()),
                actual: format!("{}x{}", f.width(), f.height()),
            });
        }
    }
    config.fit.intensity_levels = first.depth().levels();
    config.validate()?;
    let (width, height) = (first.width(), first.height());
    let pixels = width * height;
    let threads = build_threads(config.workers)?;
    let done = AtomicUsize::new(0);

    let fit_pixel = |i: usize| -> Result<(MixtureModel, bool, bool)> {
        let samples: Vec<f64> = history.iter().map(|f| f.data()[i] as f64).collect();
        let cfg = FitConfig {
            rng_seed: pixel_seed(config.fit.rng_seed, i),
            ..config.fit
        };
        let report = fit(&samples, &cfg)?;
        if let Some(cb) = progress {
            cb(done.fetch_add(1, Ordering::Relaxed) + 1, pixels);
        }
        Ok((report.model, report.converged, report.degenerate))
    };
    let fitted: Result<Vec<_>> = match (&threads, config.workers) {
        (None, 1) => (0..pixels).map(fit_pixel).collect(),
        _ => run_on(threads.as_deref(), || {
            (0..pixels).into_par_iter().map(fit_pixel).collect()
        }),
    };
    let mut summary = GridFitSummary::default();
    let mut models = Vec::with_capacity(pixels);
    for (m, converged, degenerate) in fitted? {
        summary.unconverged += usize::from(!converged);
        summary.degenerate += usize::from(degenerate);
        models.push(m);
    }
    let exact = config.adapt.mode == AdaptMode::Exact;
    let mut grid = PixelGrid {
        width,
        height,
        models,
        pools: None,
        config,
        threads,
    };
    if exact {
        grid.seed_pools(history)?;
    }
    Ok((grid, summary))
}
