use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BitDepth {
    Eight,
    Sixteen,
}

impl BitDepth {
    pub fn from_bits(bits: u32) -> Result<Self> {
        match bits {
            8 => Ok(Self::Eight),
            16 => Ok(Self::Sixteen),
            other => Err(Error::Unsupported(format!("{other}-bit samples"))),
        }
    }

    pub fn bits(self) -> u32 {
        match self {
            Self::Eight => 8,
            Self::Sixteen => 16,
        }
    }

    pub fn bytes(self) -> usize {
        self.bits() as usize / 8
    }

    /// Number of representable intensity levels (256 or 65536).
    pub fn levels(self) -> u32 {
        1 << self.bits()
    }

    pub fn max_value(self) -> u16 {
        (self.levels() - 1) as u16
    }
}

/// One grayscale frame, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    width: usize,
    height: usize,
    depth: BitDepth,
    data: Vec<u16>,
}

impl Frame {
    pub fn new(width: usize, height: usize, depth: BitDepth, data: Vec<u16>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::config("frame dimensions must be positive"));
        }
        if data.len() != width * height {
            return Err(Error::Dimension {
                expected: format!("{} samples", width * height),
                actual: format!("{} samples", data.len()),
            });
        }
        if depth == BitDepth::Eight && data.iter().any(|&v| v > 255) {
            return Err(Error::domain("8-bit frame holds a value above 255"));
        }
        Ok(Self {
            width,
            height,
            depth,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, depth: BitDepth, value: u16) -> Result<Self> {
        Self::new(width, height, depth, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn depth(&self) -> BitDepth {
        self.depth
    }

    pub fn data(&self) -> &[u16] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> u16 {
        self.data[y * self.width + x]
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameSequence {
    frames: Vec<Frame>,
    /// Metadata only.
    pub frame_rate: Option<f64>,
}

impl FrameSequence {
    pub fn new(frames: Vec<Frame>) -> Result<Self> {
        if let Some(first) = frames.first() {
            for (i, f) in frames.iter().enumerate() {
                if (f.width, f.height, f.depth) != (first.width, first.height, first.depth) {
                    return Err(Error::Dimension {
                        expected: format!("{}x{} {}-bit", first.width, first.height, first.depth.bits()),
                        actual: format!("frame {i}: {}x{} {}-bit", f.width, f.height, f.depth.bits()),
                    });
                }
            }
        }
        Ok(Self {
            frames,
            frame_rate: None,
        })
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn into_frames(self) -> Vec<Frame> {
        self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn dimensions(&self) -> Option<(usize, usize)> {
        self.frames.first().map(|f| (f.width, f.height))
    }

    pub fn depth(&self) -> Option<BitDepth> {
        self.frames.first().map(|f| f.depth)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Background,
    Foreground,
    /// Excluded from evaluation (ground truth only).
    Ignore,
}

/// Per-pixel segmentation output, optionally with the background posterior.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskFrame {
    width: usize,
    height: usize,
    labels: Vec<Label>,
    posterior: Option<Vec<f64>>,
}

impl MaskFrame {
    pub fn new(width: usize, height: usize, labels: Vec<Label>) -> Result<Self> {
        if labels.len() != width * height {
            return Err(Error::Dimension {
                expected: format!("{} labels", width * height),
                actual: format!("{} labels", labels.len()),
            });
        }
        Ok(Self {
            width,
            height,
            labels,
            posterior: None,
        })
    }

    pub fn background(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            labels: vec![Label::Background; width * height],
            posterior: None,
        }
    }

    pub fn with_posterior(mut self, posterior: Vec<f64>) -> Result<Self> {
        if posterior.len() != self.labels.len() {
            return Err(Error::Dimension {
                expected: format!("{} posterior values", self.labels.len()),
                actual: format!("{}", posterior.len()),
            });
        }
        self.posterior = Some(posterior);
        Ok(self)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn labels_mut(&mut self) -> &mut [Label] {
        &mut self.labels
    }

    pub fn posterior(&self) -> Option<&[f64]> {
        self.posterior.as_deref()
    }

    pub fn get(&self, x: usize, y: usize) -> Label {
        self.labels[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, label: Label) {
        self.labels[y * self.width + x] = label;
    }

    pub fn foreground_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l == Label::Foreground).count()
    }
}
