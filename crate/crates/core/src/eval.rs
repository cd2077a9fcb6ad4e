//! Confusion counts and the change-detection metric suite.

use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{Label, MaskFrame};

/// Pixel tallies with foreground as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

impl Add for ConfusionCounts {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self {
            tp: self.tp + o.tp,
            fp: self.fp + o.fp,
            tn: self.tn + o.tn,
            fn_: self.fn_ + o.fn_,
        }
    }
}

impl AddAssign for ConfusionCounts {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl std::iter::Sum for ConfusionCounts {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::default(), Add::add)
    }
}

/// Tallies `pred` against `gt`; ground-truth `Ignore` pixels are skipped.
pub fn accumulate(pred: &MaskFrame, gt: &MaskFrame) -> Result<ConfusionCounts> {
    if (pred.width(), pred.height()) != (gt.width(), gt.height()) {
        return Err(Error::Dimension {
            expected: format!("{}x{}", gt.width(), gt.height()),
            actual: format!("{}x{}", pred.width(), pred.height()),
        });
    }
    let mut c = ConfusionCounts::default();
    for (&p, &g) in pred.labels().iter().zip(gt.labels()) {
        match (p == Label::Foreground, g) {
            (_, Label::Ignore) => {}
            (true, Label::Foreground) => c.tp += 1,
            (true, Label::Background) => c.fp += 1,
            (false, Label::Background) => c.tn += 1,
            (false, Label::Foreground) => c.fn_ += 1,
        }
    }
    Ok(c)
}

/// Metric suite with its raw counts. A ratio with a zero denominator is
/// reported as 0 and its name listed in `undefined`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub specificity: f64,
    pub fpr: f64,
    pub fnr: f64,
    pub pwc: f64,
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub undefined: Vec<String>,
}

impl Metrics {
    pub fn from_counts(c: &ConfusionCounts) -> Self {
        let mut undefined = Vec::new();
        let mut ratio = |name: &str, num: u64, den: u64| {
            if den == 0 {
                undefined.push(name.to_string());
                0.0
            } else {
                num as f64 / den as f64
            }
        };
        let precision = ratio("precision", c.tp, c.tp + c.fp);
        let recall = ratio("recall", c.tp, c.tp + c.fn_);
        let specificity = ratio("specificity", c.tn, c.tn + c.fp);
        let fpr = ratio("fpr", c.fp, c.fp + c.tn);
        let fnr = ratio("fnr", c.fn_, c.tp + c.fn_);
        let pwc = 100.0 * ratio("pwc", c.fn_ + c.fp, c.total());
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            undefined.push("f1".to_string());
            0.0
        };
        Self {
            precision,
            recall,
            f1,
            specificity,
            fpr,
            fnr,
            pwc,
            tp: c.tp,
            fp: c.fp,
            tn: c.tn,
            fn_: c.fn_,
            undefined,
        }
    }

    pub fn counts(&self) -> ConfusionCounts {
        ConfusionCounts {
            tp: self.tp,
            fp: self.fp,
            tn: self.tn,
            fn_: self.fn_,
        }
    }

    pub fn is_defined(&self, name: &str) -> bool {
        !self.undefined.iter().any(|n| n == name)
    }

    /// Flat JSON object.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("metrics serialize")
    }
}

pub fn metrics(c: &ConfusionCounts) -> Metrics {
    Metrics::from_counts(c)
}
