//! Variational EM for a scalar Gaussian mixture with an unknown number of
//! components.
//!
//! The fit starts from a k-means++ partition with up to `k_max` clusters,
//! greedily merges mean-adjacent clusters while that raises the evidence
//! lower bound, then alternates [`e_step`] and [`m_step`] until the means and
//! expected weights stop moving. Components whose expected weight ends below
//! 1/N are removed.

mod kmeans;
mod posterior;

use serde::{Deserialize, Serialize};

pub use kmeans::{kmeanspp_init, ClusterSummary, InitialPartition};
pub use posterior::{e_step, elbo, elbo_weighted, m_step, m_step_weighted, Responsibilities, VariationalPosterior};

use crate::error::{Error, Result};
use crate::mixture::{GaussianComponent, MixtureModel, VARIANCE_FLOOR};

/// Hyperparameters of the Dirichlet and Normal-Gamma priors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Priors {
    pub lambda0: f64,
    pub m0: f64,
    pub beta0: f64,
    pub a0: f64,
    pub b0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorEstimate {
    pub priors: Priors,
    /// The data had zero variance and v₀ was replaced by the variance floor.
    pub degenerate: bool,
}

/// Uninformative priors from the data: λ₀ = 1, a₀ = b₀ = 10⁻³, m₀ = mean,
/// β₀ = b₀ / (a₀ v₀).
pub fn default_priors(data: &[f64]) -> Result<PriorEstimate> {
    if data.is_empty() {
        return Err(Error::domain("cannot derive priors from empty data"));
    }
    let n = data.len() as f64;
    let mean = data.iter().sum::<f64>() / n;
    let var = data.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let degenerate = !(var > 0.0);
    let v0 = if degenerate { VARIANCE_FLOOR } else { var };
    let (a0, b0) = (1e-3, 1e-3);
    Ok(PriorEstimate {
        priors: Priors {
            lambda0: 1.0,
            m0: mean,
            beta0: b0 / (a0 * v0),
            a0,
            b0,
        },
        degenerate,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub k_max: usize,
    pub history_len: usize,
    pub max_iters: usize,
    pub rel_tol: f64,
    pub rng_seed: u64,
    /// Quantization levels of the source (256 for 8-bit data).
    pub intensity_levels: u32,
    /// Record the evidence lower bound after every iteration.
    pub track_elbo: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            k_max: 50,
            history_len: 100,
            max_iters: 100,
            rel_tol: 1e-5,
            rng_seed: 0,
            intensity_levels: 256,
            track_elbo: false,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.history_len == 0 || self.k_max == 0 || self.max_iters == 0 {
            return Err(Error::config("k_max, history_len and max_iters must be positive"));
        }
        if self.k_max > self.history_len {
            return Err(Error::config(format!(
                "k_max ({}) must not exceed the history length ({})",
                self.k_max, self.history_len
            )));
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::config("rel_tol must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub model: MixtureModel,
    pub iterations: usize,
    pub converged: bool,
    /// Clusters left after k-means++ and after the merge pass.
    pub initial_clusters: usize,
    pub merged_clusters: usize,
    pub degenerate: bool,
    /// ELBO of the starting point and after each EM iteration (empty unless
    /// `track_elbo`).
    pub elbo_trace: Vec<f64>,
    /// Largest row-sum error of the responsibilities seen during EM.
    pub max_row_error: f64,
}

/// Initial posterior: one M-step on the hard partition.
pub fn initial_posterior(partition: &InitialPartition, data: &[f64], priors: &Priors) -> VariationalPosterior {
    m_step(
        &Responsibilities::one_hot(&partition.labels, partition.len()),
        data,
        priors,
    )
}

/// Distinct (value, cluster) pairs of a labelled sample with multiplicities.
/// Every per-sample sum in the fit becomes a weighted sum over these.
struct Distinct {
    values: Vec<f64>,
    counts: Vec<f64>,
    labels: Vec<usize>,
}

fn distinct(data: &[f64], labels: &[usize]) -> Distinct {
    let mut idx: Vec<usize> = (0..data.len()).collect();
    idx.sort_by(|&i, &j| data[i].total_cmp(&data[j]).then(labels[i].cmp(&labels[j])));
    let mut out = Distinct {
        values: Vec::new(),
        counts: Vec::new(),
        labels: Vec::new(),
    };
    for i in idx {
        match (out.values.last(), out.labels.last()) {
            (Some(&v), Some(&l)) if v == data[i] && l == labels[i] => *out.counts.last_mut().unwrap() += 1.0,
            _ => {
                out.values.push(data[i]);
                out.counts.push(1.0);
                out.labels.push(labels[i]);
            }
        }
    }
    out
}

/// Bound reached from `resp` after one M / E / M pass.
fn settled_bound(resp: &Responsibilities, d: &Distinct, priors: &Priors) -> f64 {
    let w = Some(d.counts.as_slice());
    let post = m_step_weighted(resp, &d.values, w, priors);
    let post = m_step_weighted(&e_step(&post, &d.values), &d.values, w, priors);
    elbo_weighted(&post, &d.values, w, priors)
}

/// Greedy merging of mean-adjacent clusters, accepted only when the
/// evidence lower bound improves.
fn merge_adjacent(mut resp: Responsibilities, d: &Distinct, priors: &Priors) -> Responsibilities {
    while resp.cols() > 1 {
        let post = m_step_weighted(&resp, &d.values, Some(&d.counts), priors);
        let mut order: Vec<usize> = (0..resp.cols()).collect();
        order.sort_by(|&i, &j| post.m[i].total_cmp(&post.m[j]).then(i.cmp(&j)));
        let current = settled_bound(&resp, d, priors);
        let mut best: Option<(f64, Responsibilities)> = None;
        for pair in order.windows(2) {
            let (into, from) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
            let candidate = resp.merge_columns(into, from);
            let bound = settled_bound(&candidate, d, priors);
            if bound > current && best.as_ref().is_none_or(|(b, _)| bound > *b) {
                best = Some((bound, candidate));
            }
        }
        match best {
            Some((_, merged)) => resp = merged,
            None => break,
        }
    }
    resp
}

fn relative_change(old: &[f64], new: &[f64]) -> f64 {
    old.iter()
        .zip(new)
        .map(|(&o, &n)| {
            let d = (n - o).abs();
            if o == 0.0 {
                d
            } else {
                d / o.abs()
            }
        })
        .fold(0.0, f64::max)
}

/// Exports point estimates: ϖ_k = λ_k/Σλ, μ_k = m_k, σ_k² = b_k/a_k.
fn export(post: &VariationalPosterior, cfg: &FitConfig) -> Result<MixtureModel> {
    let weights = post.expected_weights();
    let components = (0..post.len())
        .map(|k| GaussianComponent {
            weight: weights[k],
            mean: post.m[k],
            variance: (post.b[k] / post.a[k]).max(VARIANCE_FLOOR),
        })
        .collect();
    MixtureModel::new(components, cfg.history_len, cfg.intensity_levels)
}

/// Fits a background model to one pixel's history.
pub fn fit(data: &[f64], cfg: &FitConfig) -> Result<FitReport> {
    cfg.validate()?;
    if data.len() != cfg.history_len {
        return Err(Error::config(format!(
            "expected {} samples of history, got {}",
            cfg.history_len,
            data.len()
        )));
    }
    if let Some(bad) = data.iter().find(|x| !x.is_finite()) {
        return Err(Error::domain(format!("non-finite sample {bad}")));
    }
    let PriorEstimate { priors, degenerate } = default_priors(data)?;

    let partition = kmeanspp_init(data, cfg.k_max, cfg.rng_seed);
    let initial_clusters = partition.len();
    let d = distinct(data, &partition.labels);
    let (xs, w) = (d.values.as_slice(), Some(d.counts.as_slice()));
    let resp = merge_adjacent(Responsibilities::one_hot(&d.labels, partition.len()), &d, &priors);
    let merged_clusters = resp.cols();

    let mut post = m_step_weighted(&resp, xs, w, &priors);
    let mut converged = false;
    let mut iterations = 0;
    let mut elbo_trace = Vec::new();
    if cfg.track_elbo {
        elbo_trace.push(elbo_weighted(&post, xs, w, &priors));
    }
    let mut max_row_error: f64 = 0.0;
    while iterations < cfg.max_iters {
        iterations += 1;
        let resp = e_step(&post, xs);
        max_row_error = max_row_error.max(resp.max_row_error());
        let next = m_step_weighted(&resp, xs, w, &priors);
        if cfg.track_elbo {
            elbo_trace.push(elbo_weighted(&next, xs, w, &priors));
        }
        let change =
            relative_change(&post.m, &next.m).max(relative_change(&post.expected_weights(), &next.expected_weights()));
        post = next;
        if change < cfg.rel_tol {
            converged = true;
            break;
        }
    }

    Ok(FitReport {
        model: export(&post, cfg)?,
        iterations,
        converged,
        initial_clusters,
        merged_clusters,
        degenerate,
        elbo_trace,
        max_row_error,
    })
}
