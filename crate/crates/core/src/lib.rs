//! Streaming background subtraction for thermal and grayscale video.
//!
//! Every pixel carries a scalar Gaussian mixture whose number of components
//! is selected by variational inference on a short history of frames. New
//! frames are classified with a Bayes rule against a uniform foreground
//! model, and each pixel's mixture is adapted online without a fixed match
//! threshold.

// NaN-rejecting checks are written as negated comparisons.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adapt;
pub mod engine;
pub mod error;
pub mod eval;
pub mod frame;
pub mod io;
pub mod mixture;
pub mod persist;
pub mod segment;
pub mod special;
pub mod synth;
pub mod variational;

pub use adapt::{AdaptMode, AdaptationConfig, HistoryPool};
pub use engine::{EngineConfig, PixelGrid};
pub use error::{Error, Result};
pub use eval::{ConfusionCounts, Metrics};
pub use frame::{BitDepth, Frame, FrameSequence, Label, MaskFrame};
pub use mixture::{GaussianComponent, MixtureModel, Sample};
pub use segment::{Connectivity, SegmentationConfig};
pub use variational::{fit, FitConfig, FitReport, Priors};
