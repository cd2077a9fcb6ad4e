//! Online adaptation of a pixel model: match, ε-neighbourhood decision,
//! then update or spawn.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mixture::{GaussianComponent, MixtureModel, Sample, VARIANCE_FLOOR};
use crate::special::ln_std_normal_interval;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdaptMode {
    /// Count neighbours in a stored history pool.
    Exact,
    /// Estimate neighbour counts from the matched component's CDF.
    #[default]
    Approx,
}

impl std::str::FromStr for AdaptMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" | "exact-history" => Ok(Self::Exact),
            "approx" | "memory-efficient" => Ok(Self::Approx),
            other => Err(Error::config(format!("unknown adaptation mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdaptationConfig {
    pub mode: AdaptMode,
    pub epsilon_min: u32,
    pub epsilon_max_sigmas: f64,
    pub epsilon_step: u32,
    /// Upper end of the exact-mode ε grid. `None` searches up to the farthest
    /// pool sample from x.
    pub epsilon_max_exact: Option<u32>,
}

impl Default for AdaptationConfig {
    fn default() -> Self {
        Self {
            mode: AdaptMode::Approx,
            epsilon_min: 1,
            epsilon_max_sigmas: 6.0,
            epsilon_step: 1,
            epsilon_max_exact: None,
        }
    }
}

impl AdaptationConfig {
    pub fn exact() -> Self {
        Self {
            mode: AdaptMode::Exact,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epsilon_min < 1 {
            return Err(Error::config("epsilon_min must be at least 1"));
        }
        if self.epsilon_step < 1 {
            return Err(Error::config("epsilon_step must be at least 1"));
        }
        if !(self.epsilon_max_sigmas > 0.0 && self.epsilon_max_sigmas.is_finite()) {
            return Err(Error::config("epsilon_max_sigmas must be positive"));
        }
        Ok(())
    }

    fn grid(&self, upper: u32) -> impl Iterator<Item = u32> {
        let upper = upper.max(self.epsilon_min);
        (self.epsilon_min..=upper).step_by(self.epsilon_step as usize)
    }
}

/// Ring buffer holding the last N samples of one pixel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryPool {
    capacity: usize,
    samples: VecDeque<Sample>,
}

impl HistoryPool {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "history pool capacity must be positive");
        Self {
            capacity,
            samples: VecDeque::with_capacity(capacity),
        }
    }

    /// Pool holding the last `capacity` values of `samples`.
    pub fn from_samples(capacity: usize, samples: impl IntoIterator<Item = Sample>) -> Self {
        let mut pool = Self::new(capacity);
        for x in samples {
            pool.push(x);
        }
        pool
    }

    pub fn push(&mut self, x: Sample) {
        if self.samples.len() == self.capacity {
            self.samples.pop_front();
        }
        self.samples.push_back(x);
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = Sample> + '_ {
        self.samples.iter().copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Match {
    pub index: usize,
    pub distance: f64,
}

/// Component with the smallest Mahalanobis distance to `x`; lowest index
/// wins ties.
pub fn match_component(m: &MixtureModel, x: Sample) -> Match {
    let mut best = Match {
        index: 0,
        distance: f64::INFINITY,
    };
    for (k, c) in m.components().iter().enumerate() {
        let d = c.mahalanobis(x);
        if d < best.distance {
            best = Match { index: k, distance: d };
        }
    }
    best
}

/// Maximizing half-width ε* and ln p(x; ε*).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonStar {
    pub epsilon: u32,
    pub ln_prob: f64,
}

impl EpsilonStar {
    pub fn prob(&self) -> f64 {
        self.ln_prob.exp()
    }
}

/// ε* from neighbour counts in the pool: p(x;ε) = (N_ε/N)/(2ε).
pub fn epsilon_star_exact(pool: &HistoryPool, x: Sample, cfg: &AdaptationConfig) -> EpsilonStar {
    let mut dist: Vec<f64> = pool.iter().map(|s| (s - x).abs()).collect();
    dist.sort_by(f64::total_cmp);
    let reach = dist.last().copied().unwrap_or(0.0);
    let upper = cfg
        .epsilon_max_exact
        .unwrap_or(reach.ceil().min(u32::MAX as f64) as u32);

    // compare count/ε as exact integer ratios so ties resolve to the smaller ε
    let mut best = (cfg.epsilon_min, 0usize);
    let mut inside = 0usize;
    for eps in cfg.grid(upper) {
        while inside < dist.len() && dist[inside] <= eps as f64 {
            inside += 1;
        }
        if (inside as u128) * (best.0 as u128) > (best.1 as u128) * (eps as u128) {
            best = (eps, inside);
        }
    }
    let (epsilon, count) = best;
    let ln_prob = if count == 0 {
        f64::NEG_INFINITY
    } else {
        (count as f64).ln() - (pool.len() as f64).ln() - (2.0 * epsilon as f64).ln()
    };
    EpsilonStar { epsilon, ln_prob }
}

/// ln p̃(x;ε) = ln ϖ_c + ln(G_c(x+ε) − G_c(x−ε)) − ln 2ε.
pub fn ln_approx_neighbourhood(c: &GaussianComponent, x: Sample, eps: u32) -> f64 {
    let s = c.std_dev();
    let e = eps as f64;
    c.weight.ln() + ln_std_normal_interval((x - e - c.mean) / s, (x + e - c.mean) / s) - (2.0 * e).ln()
}

/// ε* from the matched component alone, searched up to ⌈sigmas·σ_c⌉.
pub fn epsilon_star_approx(m: &MixtureModel, c: usize, x: Sample, cfg: &AdaptationConfig) -> EpsilonStar {
    let comp = &m.components()[c];
    let upper = (cfg.epsilon_max_sigmas * comp.std_dev()).ceil().min(u32::MAX as f64) as u32;
    let mut best = EpsilonStar {
        epsilon: cfg.epsilon_min,
        ln_prob: f64::NEG_INFINITY,
    };
    for eps in cfg.grid(upper) {
        let lp = ln_approx_neighbourhood(comp, x, eps);
        if lp > best.ln_prob {
            best = EpsilonStar {
                epsilon: eps,
                ln_prob: lp,
            };
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Matched,
    NewComponent,
}

/// Matched iff N(x | μ_c, σ_c²) ≥ p(x; ε*), compared in the log domain.
pub fn decide(m: &MixtureModel, c: usize, x: Sample, eps: &EpsilonStar) -> Decision {
    let ln_density = m.components()[c].log_pdf(x);
    if ln_density >= eps.ln_prob {
        Decision::Matched
    } else {
        Decision::NewComponent
    }
}

/// ϖ + (o − ϖ)/N for one component, o = 1 when it is the matched one.
pub fn weight_step(weight: f64, matched: bool, n: f64) -> f64 {
    let o = if matched { 1.0 } else { 0.0 };
    weight + (o - weight) / n
}

/// Leader-following update of component `c` with sample `x`.
pub fn update_matched(m: &mut MixtureModel, c: usize, x: Sample) {
    let n = m.history_len() as f64;
    let comps = m.components_mut();
    let GaussianComponent {
        weight: w,
        mean: mu,
        variance: var,
    } = comps[c];
    for (k, comp) in comps.iter_mut().enumerate() {
        comp.weight = weight_step(comp.weight, k == c, n);
    }
    let wn1 = w * n + 1.0;
    let d = x - mu;
    comps[c].mean = mu + d / wn1;
    comps[c].variance = var + w * n * d * d / (wn1 * wn1) - var / wn1;
    m.maintain();
}

/// ((2ε)² − 1)/12, the variance of the 2ε+1 integer levels around x.
pub fn spawn_variance(epsilon: u32) -> f64 {
    let w = 2.0 * epsilon as f64;
    (w * w - 1.0) / 12.0
}

/// Adds a component at `x` with weight 1/N; the others share (N−1)/N.
pub fn spawn_component(m: &mut MixtureModel, x: Sample, epsilon: u32) {
    let n = m.history_len() as f64;
    let comps = m.components_mut();
    for comp in comps.iter_mut() {
        comp.weight *= (n - 1.0) / n;
    }
    comps.push(GaussianComponent {
        weight: 1.0 / n,
        mean: x,
        variance: spawn_variance(epsilon).max(VARIANCE_FLOOR),
    });
    m.maintain();
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptOutcome {
    pub decision: Decision,
    /// Matched component index, before any update.
    pub component: usize,
    pub epsilon: EpsilonStar,
}

impl AdaptOutcome {
    pub fn matched(&self) -> bool {
        self.decision == Decision::Matched
    }
}

/// One online step. Exact mode needs the pixel's pool and appends `x` to it.
pub fn adapt(
    m: &mut MixtureModel,
    x: Sample,
    cfg: &AdaptationConfig,
    pool: Option<&mut HistoryPool>,
) -> Result<AdaptOutcome> {
    let matched = match_component(m, x);
    let c = matched.index;
    let epsilon = match cfg.mode {
        AdaptMode::Approx => epsilon_star_approx(m, c, x, cfg),
        AdaptMode::Exact => {
            let pool = pool.ok_or_else(|| Error::config("exact adaptation needs a history pool"))?;
            let eps = if pool.is_empty() {
                EpsilonStar {
                    epsilon: cfg.epsilon_min,
                    ln_prob: f64::NEG_INFINITY,
                }
            } else {
                epsilon_star_exact(pool, x, cfg)
            };
            pool.push(x);
            eps
        }
    };
    let decision = decide(m, c, x, &epsilon);
    match decision {
        Decision::Matched => update_matched(m, c, x),
        Decision::NewComponent => spawn_component(m, x, epsilon.epsilon),
    }
    Ok(AdaptOutcome {
        decision,
        component: c,
        epsilon,
    })
}
