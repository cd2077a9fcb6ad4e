//! Seeded sample and video generators with known ground truth.
//!
//! Every pixel owns its own ChaCha8 stream (stream id = row-major pixel
//! index) and consumes exactly one standard-normal draw per frame, so the
//! output never depends on how the work is split.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{BitDepth, Frame, FrameSequence, Label, MaskFrame};
use crate::mixture::Sample;

/// Identifier recorded in output metadata.
pub const RNG_ALGORITHM: &str = "chacha8 (rand_chacha), one stream per pixel index";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianSpec {
    pub mean: f64,
    pub stddev: f64,
    #[serde(default = "one")]
    pub count: usize,
}

fn one() -> usize {
    1
}

impl GaussianSpec {
    pub fn new(mean: f64, stddev: f64, count: usize) -> Result<Self> {
        let s = Self { mean, stddev, count };
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<()> {
        if !(self.stddev > 0.0 && self.stddev.is_finite() && self.mean.is_finite()) {
            return Err(Error::config(format!(
                "gaussian spec needs a finite mean and positive stddev, got ({}, {})",
                self.mean, self.stddev
            )));
        }
        Ok(())
    }
}

/// Draws `count` samples from each spec in turn.
pub fn gen_mixture_samples(specs: &[GaussianSpec], seed: u64) -> Result<Vec<Sample>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(specs.iter().map(|s| s.count).sum());
    for s in specs {
        s.validate()?;
        let normal = Normal::new(s.mean, s.stddev).map_err(|e| Error::config(e.to_string()))?;
        out.extend((0..s.count).map(|_| normal.sample(&mut rng)));
    }
    Ok(out)
}

/// Three well-separated groups used for the fitting demonstration.
/// These parameters are our own choice.
pub fn three_gaussian_specs() -> [GaussianSpec; 3] {
    [
        GaussianSpec {
            mean: 20.0,
            stddev: 2.0,
            count: 100,
        },
        GaussianSpec {
            mean: 60.0,
            stddev: 3.0,
            count: 100,
        },
        GaussianSpec {
            mean: 100.0,
            stddev: 2.5,
            count: 100,
        },
    ]
}

/// Two-group history of the update demonstration.
pub fn update_base_specs() -> [GaussianSpec; 2] {
    [
        GaussianSpec {
            mean: 16.0,
            stddev: 1.5,
            count: 50,
        },
        GaussianSpec {
            mean: 50.0,
            stddev: 2.0,
            count: 50,
        },
    ]
}

/// Source of the samples streamed in after the update demonstration's fit.
pub fn update_new_spec(count: usize) -> GaussianSpec {
    GaussianSpec {
        mean: 21.0,
        stddev: 1.0,
        count,
    }
}

/// Axis-aligned rectangle `[x, y, width, height]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "[usize; 4]", into = "[usize; 4]")]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

impl From<[usize; 4]> for Rect {
    fn from([x, y, width, height]: [usize; 4]) -> Self {
        Self { x, y, width, height }
    }
}

impl From<Rect> for [usize; 4] {
    fn from(r: Rect) -> Self {
        [r.x, r.y, r.width, r.height]
    }
}

impl Rect {
    fn within(&self, w: usize, h: usize) -> bool {
        self.width > 0 && self.height > 0 && self.x + self.width <= w && self.y + self.height <= h
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Intensity {
    pub mean: f64,
    pub stddev: f64,
}

impl Intensity {
    fn validate(&self, what: &str) -> Result<()> {
        if !(self.stddev > 0.0 && self.stddev.is_finite() && self.mean.is_finite()) {
            return Err(Error::config(format!(
                "{what}: needs a finite mean and positive stddev"
            )));
        }
        Ok(())
    }
}

/// Background region whose intensity alternates between modes frame by frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Region {
    pub rect: Rect,
    pub modes: Vec<Intensity>,
}

/// Foreground object present on frames `start..end`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Event {
    /// Footprint on frame `start`.
    pub rect: Rect,
    pub start: usize,
    pub end: usize,
    pub mean: f64,
    pub stddev: f64,
    /// Pixels per frame `[dx, dy]`; the footprint is clipped to the frame.
    #[serde(default)]
    pub velocity: [f64; 2],
}

impl Event {
    fn active(&self, t: usize) -> bool {
        (self.start..self.end).contains(&t)
    }

    /// Clipped footprint `(x0, y0, x1, y1)` on frame `t`, half-open.
    fn footprint(&self, t: usize, w: usize, h: usize) -> Option<(usize, usize, usize, usize)> {
        let dt = t.saturating_sub(self.start) as f64;
        let x = self.rect.x as f64 + (self.velocity[0] * dt).round();
        let y = self.rect.y as f64 + (self.velocity[1] * dt).round();
        let x0 = x.max(0.0);
        let y0 = y.max(0.0);
        let x1 = (x + self.rect.width as f64).min(w as f64);
        let y1 = (y + self.rect.height as f64).min(h as f64);
        (x1 > x0 && y1 > y0).then_some((x0 as usize, y0 as usize, x1 as usize, y1 as usize))
    }
}

/// Declarative description of a synthetic video (TOML).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub width: usize,
    pub height: usize,
    pub frames: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "eight")]
    pub bit_depth: u32,
    pub background: Intensity,
    #[serde(default)]
    pub regions: Vec<Region>,
    #[serde(default)]
    pub events: Vec<Event>,
}

fn eight() -> u32 {
    8
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self> {
        let s: Self = toml::from_str(text).map_err(|e| Error::config(format!("invalid scenario: {e}")))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn depth(&self) -> Result<BitDepth> {
        BitDepth::from_bits(self.bit_depth)
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 || self.frames == 0 {
            return Err(Error::config("scenario width, height and frames must be positive"));
        }
        self.depth()?;
        self.background.validate("background")?;
        for (i, r) in self.regions.iter().enumerate() {
            if !r.rect.within(self.width, self.height) {
                return Err(Error::config(format!("region {i} lies outside the frame")));
            }
            if r.modes.is_empty() {
                return Err(Error::config(format!("region {i} has no modes")));
            }
            for m in &r.modes {
                m.validate(&format!("region {i}"))?;
            }
        }
        for (i, e) in self.events.iter().enumerate() {
            if !e.rect.within(self.width, self.height) {
                return Err(Error::config(format!("event {i} starts outside the frame")));
            }
            if e.start >= e.end {
                return Err(Error::config(format!("event {i} has an empty frame span")));
            }
            Intensity {
                mean: e.mean,
                stddev: e.stddev,
            }
            .validate(&format!("event {i}"))?;
            if !e.velocity.iter().all(|v| v.is_finite()) {
                return Err(Error::config(format!("event {i} velocity must be finite")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Video {
    pub frames: FrameSequence,
    pub ground_truth: Vec<MaskFrame>,
}

/// Per-frame intensity spec of every pixel, plus the ground truth.
fn layout(s: &Scenario, t: usize) -> (Vec<Intensity>, MaskFrame) {
    let (w, h) = (s.width, s.height);
    let mut spec = vec![s.background; w * h];
    for r in &s.regions {
        let mode = r.modes[t % r.modes.len()];
        for y in r.rect.y..r.rect.y + r.rect.height {
            spec[y * w + r.rect.x..y * w + r.rect.x + r.rect.width].fill(mode);
        }
    }
    let mut gt = MaskFrame::background(w, h);
    for e in s.events.iter().filter(|e| e.active(t)) {
        if let Some((x0, y0, x1, y1)) = e.footprint(t, w, h) {
            for y in y0..y1 {
                for x in x0..x1 {
                    spec[y * w + x] = Intensity {
                        mean: e.mean,
                        stddev: e.stddev,
                    };
                    gt.set(x, y, Label::Foreground);
                }
            }
        }
    }
    (spec, gt)
}

/// Renders a scenario into frames and ground-truth masks.
pub fn gen_video(s: &Scenario) -> Result<Video> {
    s.validate()?;
    let depth = s.depth()?;
    let max = depth.max_value() as f64;
    let pixels = s.width * s.height;
    let mut rngs: Vec<ChaCha8Rng> = (0..pixels)
        .map(|i| {
            let mut r = ChaCha8Rng::seed_from_u64(s.seed);
            r.set_stream(i as u64);
            r
        })
        .collect();
    let mut frames = Vec::with_capacity(s.frames);
    let mut truth = Vec::with_capacity(s.frames);
    for t in 0..s.frames {
        let (spec, gt) = layout(s, t);
        let data = spec
            .iter()
            .zip(rngs.iter_mut())
            .map(|(p, rng)| {
                let z: f64 = rng.sample(StandardNormal);
                (p.mean + p.stddev * z).round().clamp(0.0, max) as u16
            })
            .collect();
        frames.push(Frame::new(s.width, s.height, depth, data)?);
        truth.push(gt);
    }
    Ok(Video {
        frames: FrameSequence::new(frames)?,
        ground_truth: truth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SCENARIO: &str = r#"
width = 40
height = 30
frames = 50
seed = 9

[background]
mean = 50.0
stddev = 2.0

[[regions]]
rect = [0, 0, 8, 8]
modes = [{ mean = 30.0, stddev = 2.0 }, { mean = 70.0, stddev = 2.0 }]

[[events]]
rect = [10, 5, 20, 20]
start = 10
end = 40
mean = 200.0
stddev = 3.0
"#;

    #[test]
    fn two_group_samples_have_the_right_means() {
        let specs = update_base_specs();
        for seed in 0..5 {
            let xs = gen_mixture_samples(&specs, seed).unwrap();
            assert_eq!(xs.len(), 100);
            let m1 = xs[..50].iter().sum::<f64>() / 50.0;
            let m2 = xs[50..].iter().sum::<f64>() / 50.0;
            assert!((m1 - 16.0).abs() < 3.0 * 1.5 / 50f64.sqrt());
            assert!((m2 - 50.0).abs() < 3.0 * 2.0 / 50f64.sqrt());
        }
    }

    #[test]
    fn tiny_stddev_and_determinism() {
        let spec = [GaussianSpec::new(33.0, 1e-6, 20).unwrap()];
        assert!(gen_mixture_samples(&spec, 1)
            .unwrap()
            .iter()
            .all(|x| (x - 33.0).abs() < 1e-4));
        let specs = three_gaussian_specs();
        assert_eq!(
            gen_mixture_samples(&specs, 4).unwrap(),
            gen_mixture_samples(&specs, 4).unwrap()
        );
        assert_ne!(
            gen_mixture_samples(&specs, 4).unwrap(),
            gen_mixture_samples(&specs, 5).unwrap()
        );
        assert!(GaussianSpec::new(1.0, 0.0, 3).is_err());
    }

    #[test]
    fn no_events_means_all_background_truth() {
        let mut s = Scenario::from_toml(SCENARIO).unwrap();
        s.events.clear();
        let v = gen_video(&s).unwrap();
        assert!(v.ground_truth.iter().all(|m| m.foreground_count() == 0));
    }

    #[test]
    fn event_truth_is_exact_and_clears() {
        let s = Scenario::from_toml(SCENARIO).unwrap();
        let v = gen_video(&s).unwrap();
        assert_eq!(v.frames.len(), 50);
        for (t, gt) in v.ground_truth.iter().enumerate() {
            let inside = (10..40).contains(&t);
            assert_eq!(gt.foreground_count(), if inside { 400 } else { 0 }, "frame {t}");
            if inside {
                assert_eq!(gt.get(10, 5), Label::Foreground);
                assert_eq!(gt.get(29, 24), Label::Foreground);
                assert_eq!(gt.get(30, 24), Label::Background);
                assert!(v.frames.frames()[t].get(15, 15) > 150);
            }
        }
    }

    #[test]
    fn moving_event_is_clipped() {
        let mut s = Scenario::from_toml(SCENARIO).unwrap();
        s.events[0].velocity = [2.0, 0.0];
        let v = gen_video(&s).unwrap();
        // x = 10 + 2·(t − 10); right edge hits the frame at t = 15
        assert_eq!(v.ground_truth[12].get(14, 5), Label::Foreground);
        assert_eq!(v.ground_truth[12].get(13, 5), Label::Background);
        assert_eq!(v.ground_truth[20].foreground_count(), 10 * 20);
        assert_eq!(v.ground_truth[39].foreground_count(), 0);
    }

    #[test]
    fn region_alternates_between_modes() {
        let s = Scenario::from_toml(SCENARIO).unwrap();
        let v = gen_video(&s).unwrap();
        let f = v.frames.frames();
        assert!(f[0].get(3, 3) < 45 && f[1].get(3, 3) > 55);
        assert!(v.ground_truth.iter().all(|m| m.get(3, 3) == Label::Background));
    }

    #[test]
    fn video_is_reproducible() {
        let s = Scenario::from_toml(SCENARIO).unwrap();
        assert_eq!(gen_video(&s).unwrap(), gen_video(&s).unwrap());
        let again = Scenario::from_toml(&s.to_toml()).unwrap();
        assert_eq!(again, s);
    }

    #[test]
    fn invalid_scenarios_are_rejected() {
        let bad = SCENARIO.replace("rect = [10, 5, 20, 20]", "rect = [30, 5, 20, 20]");
        assert!(Scenario::from_toml(&bad).is_err());
        let bad = SCENARIO.replace("seed = 9", "seed = 9\ncolour = 1");
        assert!(Scenario::from_toml(&bad).is_err());
        let bad = SCENARIO.replace("start = 10", "start = 45");
        assert!(Scenario::from_toml(&bad).is_err());
        let bad = SCENARIO.replace("frames = 50", "frames = 50\nbit_depth = 12");
        assert!(Scenario::from_toml(&bad).is_err());
    }
}
