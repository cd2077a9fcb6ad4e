//! Bayes classification against a uniform foreground, and blob-area filtering.

use serde::{Deserialize, Serialize};

use crate::adapt::{match_component, spawn_component, update_matched};
use crate::error::{Error, Result};
use crate::frame::{Label, MaskFrame};
use crate::mixture::{MixtureModel, Sample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Connectivity {
    #[serde(rename = "4")]
    Four,
    #[default]
    #[serde(rename = "8")]
    Eight,
}

impl Connectivity {
    pub fn from_neighbours(n: u32) -> Result<Self> {
        match n {
            4 => Ok(Self::Four),
            8 => Ok(Self::Eight),
            other => Err(Error::config(format!("connectivity must be 4 or 8, got {other}"))),
        }
    }

    fn offsets(self) -> &'static [(isize, isize)] {
        const FOUR: [(isize, isize); 4] = [(-1, 0), (1, 0), (0, -1), (0, 1)];
        const EIGHT: [(isize, isize); 8] = [(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)];
        match self {
            Self::Four => &FOUR,
            Self::Eight => &EIGHT,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SegmentationConfig {
    /// Background prior, must exceed 1/2.
    pub p_bg: f64,
    pub decision_threshold: f64,
    pub min_blob_area: usize,
    pub connectivity: Connectivity,
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        Self {
            p_bg: 0.6,
            decision_threshold: 0.5,
            min_blob_area: 15,
            connectivity: Connectivity::Eight,
        }
    }
}

impl SegmentationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.p_bg > 0.5 && self.p_bg < 1.0) {
            return Err(Error::config(format!("p_bg must lie in (0.5, 1), got {}", self.p_bg)));
        }
        if !(self.decision_threshold > 0.0 && self.decision_threshold < 1.0) {
            return Err(Error::config(format!(
                "decision threshold must lie in (0, 1), got {}",
                self.decision_threshold
            )));
        }
        Ok(())
    }
}

/// p(x|bg)·p_bg / (p(x|bg) + 1/L) from an already evaluated density.
pub fn posterior_from_density(density: f64, levels: u32, p_bg: f64) -> f64 {
    let fg = 1.0 / levels as f64;
    (density * p_bg / (density + fg)).clamp(0.0, 1.0)
}

pub fn posterior_bg(m: &MixtureModel, x: Sample, cfg: &SegmentationConfig) -> f64 {
    posterior_from_density(m.density(x), m.intensity_levels(), cfg.p_bg)
}

pub fn label_for(posterior: f64, cfg: &SegmentationConfig) -> Label {
    if posterior >= cfg.decision_threshold {
        Label::Background
    } else {
        Label::Foreground
    }
}

pub fn classify_pixel(m: &MixtureModel, x: Sample, cfg: &SegmentationConfig) -> Label {
    label_for(posterior_bg(m, x, cfg), cfg)
}

/// Relabels foreground blobs smaller than `min_blob_area` as background.
pub fn blob_filter(mask: &MaskFrame, cfg: &SegmentationConfig) -> MaskFrame {
    let mut out = mask.clone();
    if cfg.min_blob_area <= 1 {
        return out;
    }
    let (w, h) = (mask.width(), mask.height());
    let labels = mask.labels();
    let mut seen = vec![false; labels.len()];
    let mut stack = Vec::new();
    let mut blob = Vec::new();
    for start in 0..labels.len() {
        if seen[start] || labels[start] != Label::Foreground {
            continue;
        }
        seen[start] = true;
        stack.push(start);
        blob.clear();
        while let Some(p) = stack.pop() {
            blob.push(p);
            let (x, y) = ((p % w) as isize, (p / w) as isize);
            for &(dx, dy) in cfg.connectivity.offsets() {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    continue;
                }
                let q = ny as usize * w + nx as usize;
                if !seen[q] && labels[q] == Label::Foreground {
                    seen[q] = true;
                    stack.push(q);
                }
            }
        }
        if blob.len() < cfg.min_blob_area {
            for &p in &blob {
                out.labels_mut()[p] = Label::Background;
            }
        }
    }
    out
}

/// A constant intensity suddenly appearing at a pixel and staying there.
#[derive(Debug, Clone, PartialEq)]
pub struct StandingObject {
    /// Model before the object appears.
    pub background: MixtureModel,
    pub intensity: Sample,
    /// ε* of the spawning step.
    pub epsilon: u32,
    /// Keep the spawned component's spread at its spawn value while its
    /// weight and mean adapt.
    pub hold_spread: bool,
    pub horizon: usize,
}

/// Frames after the spawn until the object is classified as background, or
/// `None` within the horizon.
pub fn frames_to_background(scenario: &StandingObject, cfg: &SegmentationConfig) -> Option<usize> {
    let mut m = scenario.background.clone();
    let x = scenario.intensity;
    spawn_component(&mut m, x, scenario.epsilon);
    for t in 1..=scenario.horizon {
        if posterior_bg(&m, x, cfg) >= cfg.decision_threshold {
            return Some(t);
        }
        let c = match_component(&m, x).index;
        let spread = m.components()[c].variance;
        update_matched(&mut m, c, x);
        if scenario.hold_spread {
            let c = match_component(&m, x).index;
            m.components_mut()[c].variance = spread;
        }
    }
    None
}
