//! Scalar Gaussian mixtures: the per-pixel background model.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{self, ln_2pi};

/// Pixel intensity in sensor counts.
pub type Sample = f64;

/// Smallest variance any stored component may carry (intensity²).
pub const VARIANCE_FLOOR: f64 = 1e-4;

/// Relative slack used when comparing weights against the 1/N pruning bound.
const PRUNE_SLACK: f64 = 1e-9;

fn check_variance(var: f64) -> Result<()> {
    if var > 0.0 && var.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "variance must be positive and finite, got {var}"
        )))
    }
}

/// Normal density N(x | mean, var).
pub fn gaussian_pdf(x: Sample, mean: f64, var: f64) -> Result<f64> {
    check_variance(var)?;
    Ok(pdf_unchecked(x, mean, var))
}

/// ln N(x | mean, var).
pub fn gaussian_log_pdf(x: Sample, mean: f64, var: f64) -> Result<f64> {
    check_variance(var)?;
    Ok(log_pdf_unchecked(x, mean, var))
}

/// Normal CDF evaluated through erfc.
pub fn gaussian_cdf(x: Sample, mean: f64, var: f64) -> Result<f64> {
    check_variance(var)?;
    Ok(special::std_normal_cdf((x - mean) / var.sqrt()))
}

#[inline]
pub(crate) fn pdf_unchecked(x: f64, mean: f64, var: f64) -> f64 {
    let d = x - mean;
    (-0.5 * d * d / var).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
}

#[inline]
pub(crate) fn log_pdf_unchecked(x: f64, mean: f64, var: f64) -> f64 {
    let d = x - mean;
    -0.5 * (ln_2pi() + var.ln()) - 0.5 * d * d / var
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianComponent {
    pub weight: f64,
    pub mean: f64,
    pub variance: f64,
}

impl GaussianComponent {
    pub fn new(weight: f64, mean: f64, variance: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&weight) {
            return Err(Error::domain(format!("weight must lie in [0, 1], got {weight}")));
        }
        if !mean.is_finite() {
            return Err(Error::domain("mean must be finite"));
        }
        check_variance(variance)?;
        Ok(Self { weight, mean, variance })
    }

    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }

    pub fn precision(&self) -> f64 {
        1.0 / self.variance
    }

    /// Unweighted density of this component at `x`.
    pub fn pdf(&self, x: Sample) -> f64 {
        pdf_unchecked(x, self.mean, self.variance)
    }

    pub fn log_pdf(&self, x: Sample) -> f64 {
        log_pdf_unchecked(x, self.mean, self.variance)
    }

    pub fn cdf(&self, x: Sample) -> f64 {
        special::std_normal_cdf((x - self.mean) / self.std_dev())
    }

    /// Mahalanobis distance √((x − μ)²·τ).
    pub fn mahalanobis(&self, x: Sample) -> f64 {
        (x - self.mean).abs() / self.std_dev()
    }
}

/// A pixel's background model.
///
/// Invariants after every public maintenance operation: weights sum to one,
/// no weight is below 1/N, and there is at least one component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureModel {
    components: Vec<GaussianComponent>,
    history_len: usize,
    intensity_levels: u32,
}

impl MixtureModel {
    /// Builds a model, flooring variances, pruning weights below 1/N and
    /// renormalizing.
    pub fn new(components: Vec<GaussianComponent>, history_len: usize, intensity_levels: u32) -> Result<Self> {
        if history_len == 0 {
            return Err(Error::config("history length must be positive"));
        }
        if intensity_levels == 0 {
            return Err(Error::config("intensity levels must be positive"));
        }
        if components.is_empty() {
            return Err(Error::domain("a mixture needs at least one component"));
        }
        let mut model = Self {
            components,
            history_len,
            intensity_levels,
        };
        for c in &mut model.components {
            c.variance = c.variance.max(VARIANCE_FLOOR);
        }
        model.maintain();
        Ok(model)
    }

    /// Builds a model exactly as given, without pruning or renormalizing.
    /// Used when restoring persisted state bit-for-bit.
    pub fn from_raw_parts(
        components: Vec<GaussianComponent>,
        history_len: usize,
        intensity_levels: u32,
    ) -> Result<Self> {
        if components.is_empty() || history_len == 0 || intensity_levels == 0 {
            return Err(Error::domain("invalid raw mixture parts"));
        }
        Ok(Self {
            components,
            history_len,
            intensity_levels,
        })
    }

    pub fn single(mean: f64, variance: f64, history_len: usize, intensity_levels: u32) -> Result<Self> {
        Self::new(
            vec![GaussianComponent::new(1.0, mean, variance)?],
            history_len,
            intensity_levels,
        )
    }

    pub fn components(&self) -> &[GaussianComponent] {
        &self.components
    }

    pub(crate) fn components_mut(&mut self) -> &mut Vec<GaussianComponent> {
        &mut self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn history_len(&self) -> usize {
        self.history_len
    }

    pub fn intensity_levels(&self) -> u32 {
        self.intensity_levels
    }

    pub fn min_weight(&self) -> f64 {
        1.0 / self.history_len as f64
    }

    pub fn weight_sum(&self) -> f64 {
        self.components.iter().map(|c| c.weight).sum()
    }

    /// Σ_k ϖ_k N(x | μ_k, σ_k²).
    pub fn density(&self, x: Sample) -> f64 {
        self.components.iter().map(|c| c.weight * c.pdf(x)).sum()
    }

    /// ln of [`Self::density`] via log-sum-exp.
    pub fn log_density(&self, x: Sample) -> f64 {
        let terms = self
            .components
            .iter()
            .filter(|c| c.weight > 0.0)
            .map(|c| c.weight.ln() + c.log_pdf(x));
        log_sum_exp(terms)
    }

    /// Prune components below 1/N, renormalize, floor variances.
    pub(crate) fn maintain(&mut self) {
        let bound = self.min_weight() * (1.0 - PRUNE_SLACK);
        if self.components.iter().any(|c| c.weight >= bound) {
            self.components.retain(|c| c.weight >= bound);
        } else if let Some(best) = self
            .components
            .iter()
            .copied()
            .reduce(|a, b| if b.weight > a.weight { b } else { a })
        {
            self.components = vec![best];
        }
        self.renormalize();
        for c in &mut self.components {
            c.variance = c.variance.max(VARIANCE_FLOOR);
        }
    }

    fn renormalize(&mut self) {
        let total = self.weight_sum();
        if total > 0.0 {
            for c in &mut self.components {
                c.weight /= total;
            }
        } else {
            let w = 1.0 / self.components.len() as f64;
            for c in &mut self.components {
                c.weight = w;
            }
        }
    }
}

/// Free-function form of [`MixtureModel::density`].
pub fn mixture_density(model: &MixtureModel, x: Sample) -> f64 {
    model.density(x)
}

pub(crate) fn log_sum_exp(terms: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = terms.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + terms.map(|t| (t - max).exp()).sum::<f64>().ln()
}
