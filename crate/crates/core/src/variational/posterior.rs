use crate::special::{digamma_unchecked as digamma, ln_2pi, ln_gamma};

use super::Priors;

/// Components whose effective count falls below this keep prior-only values.
const EMPTY_COMPONENT: f64 = 1e-12;

/// Row-stochastic N×K matrix r_nk stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Responsibilities {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl Responsibilities {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            values: vec![0.0; rows * cols],
        }
    }

    /// Wraps row-major values; `None` if the shape does not match.
    pub fn from_values(rows: usize, cols: usize, values: Vec<f64>) -> Option<Self> {
        (values.len() == rows * cols).then_some(Self { rows, cols, values })
    }

    /// One-hot matrix from hard cluster labels in `0..cols`.
    pub fn one_hot(labels: &[usize], cols: usize) -> Self {
        let mut r = Self::zeros(labels.len(), cols);
        for (n, &k) in labels.iter().enumerate() {
            r.values[n * cols + k] = 1.0;
        }
        r
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, n: usize) -> &[f64] {
        &self.values[n * self.cols..(n + 1) * self.cols]
    }

    pub fn get(&self, n: usize, k: usize) -> f64 {
        self.values[n * self.cols + k]
    }

    /// Largest |Σ_k r_nk − 1| over all rows.
    pub fn max_row_error(&self) -> f64 {
        (0..self.rows)
            .map(|n| (self.row(n).iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Folds column `from` into column `into` and removes `from`.
    pub fn merge_columns(&self, into: usize, from: usize) -> Self {
        let cols = self.cols - 1;
        let mut out = Self::zeros(self.rows, cols);
        for n in 0..self.rows {
            let src = self.row(n);
            let mut j = 0;
            for (k, &v) in src.iter().enumerate() {
                if k == from {
                    continue;
                }
                out.values[n * cols + j] = if k == into { v + src[from] } else { v };
                j += 1;
            }
        }
        out
    }
}

/// Variational hyperparameters of q(ϖ) q(μ|τ) q(τ) plus the sufficient
/// statistics they were computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct VariationalPosterior {
    pub lambda: Vec<f64>,
    pub m: Vec<f64>,
    pub beta: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    /// Effective counts N_k.
    pub counts: Vec<f64>,
    /// Responsibility-weighted means x̄_k.
    pub xbar: Vec<f64>,
    /// Responsibility-weighted scatter σ_k (a variance).
    pub scatter: Vec<f64>,
    pub responsibilities: Responsibilities,
}

impl VariationalPosterior {
    pub fn len(&self) -> usize {
        self.lambda.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda.is_empty()
    }

    /// Expected mixing weights λ_k / Σ_j λ_j.
    pub fn expected_weights(&self) -> Vec<f64> {
        let total: f64 = self.lambda.iter().sum();
        self.lambda.iter().map(|l| l / total).collect()
    }

    /// E[τ_k] = a_k / b_k.
    pub fn expected_precision(&self, k: usize) -> f64 {
        self.a[k] / self.b[k]
    }
}

/// Recomputes responsibilities from the current hyperparameters.
///
/// ln ρ_nk = E[ln ϖ_k] + ½E[ln τ_k] − a_k/(2b_k)(x_n − m_k)² − 1/(2β_k),
/// normalized per row after subtracting the row maximum.
pub fn e_step(post: &VariationalPosterior, data: &[f64]) -> Responsibilities {
    let k = post.len();
    let lambda_total: f64 = post.lambda.iter().sum();
    let psi_total = digamma(lambda_total);
    let base: Vec<f64> = (0..k)
        .map(|j| {
            let ln_w = digamma(post.lambda[j]) - psi_total;
            let ln_tau = digamma(post.a[j]) - post.b[j].ln();
            ln_w + 0.5 * ln_tau - 0.5 / post.beta[j]
        })
        .collect();
    let half_prec: Vec<f64> = (0..k).map(|j| 0.5 * post.a[j] / post.b[j]).collect();

    let mut r = Responsibilities::zeros(data.len(), k);
    for (n, &x) in data.iter().enumerate() {
        let row = &mut r.values[n * k..(n + 1) * k];
        let mut max = f64::NEG_INFINITY;
        for j in 0..k {
            let d = x - post.m[j];
            row[j] = base[j] - half_prec[j] * d * d;
            max = max.max(row[j]);
        }
        let mut total = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            total += *v;
        }
        debug_assert!(total >= 1.0, "max-subtracted row cannot vanish");
        for v in row.iter_mut() {
            *v /= total;
        }
    }
    r
}

/// Re-estimates all hyperparameters from fixed responsibilities.
pub fn m_step(resp: &Responsibilities, data: &[f64], priors: &Priors) -> VariationalPosterior {
    m_step_weighted(resp, data, None, priors)
}

/// Multiplicity of sample `n`.
#[inline]
fn mult(weights: Option<&[f64]>, n: usize) -> f64 {
    weights.map_or(1.0, |w| w[n])
}

/// As [`m_step`] with sample `n` counted `weights[n]` times.
pub fn m_step_weighted(
    resp: &Responsibilities,
    data: &[f64],
    weights: Option<&[f64]>,
    priors: &Priors,
) -> VariationalPosterior {
    let k = resp.cols();
    let mut counts = vec![0.0; k];
    let mut sums = vec![0.0; k];
    for (n, &x) in data.iter().enumerate() {
        let c = mult(weights, n);
        for (j, &r) in resp.row(n).iter().enumerate() {
            counts[j] += c * r;
            sums[j] += c * r * x;
        }
    }
    let xbar: Vec<f64> = (0..k)
        .map(|j| {
            if counts[j] < EMPTY_COMPONENT {
                priors.m0
            } else {
                sums[j] / counts[j]
            }
        })
        .collect();
    let mut scatter = vec![0.0; k];
    for (n, &x) in data.iter().enumerate() {
        let c = mult(weights, n);
        for (j, &r) in resp.row(n).iter().enumerate() {
            let d = x - xbar[j];
            scatter[j] += c * r * d * d;
        }
    }

    let mut post = VariationalPosterior {
        lambda: Vec::with_capacity(k),
        m: Vec::with_capacity(k),
        beta: Vec::with_capacity(k),
        a: Vec::with_capacity(k),
        b: Vec::with_capacity(k),
        counts: counts.clone(),
        xbar: xbar.clone(),
        scatter: vec![0.0; k],
        responsibilities: resp.clone(),
    };
    for j in 0..k {
        let nk = counts[j];
        if nk < EMPTY_COMPONENT {
            post.lambda.push(priors.lambda0);
            post.beta.push(priors.beta0);
            post.m.push(priors.m0);
            post.a.push(priors.a0);
            post.b.push(priors.b0);
            continue;
        }
        let s = scatter[j] / nk;
        post.scatter[j] = s;
        let beta = priors.beta0 + nk;
        let dm = xbar[j] - priors.m0;
        post.lambda.push(nk + priors.lambda0);
        post.beta.push(beta);
        post.m.push((priors.beta0 * priors.m0 + nk * xbar[j]) / beta);
        post.a.push(priors.a0 + 0.5 * nk);
        post.b
            .push(priors.b0 + 0.5 * (nk * s + priors.beta0 * nk / (priors.beta0 + nk) * dm * dm));
    }
    post
}

fn ln_dirichlet_norm(lambdas: &[f64]) -> f64 {
    ln_gamma(lambdas.iter().sum()) - lambdas.iter().map(|&l| ln_gamma(l)).sum::<f64>()
}

/// Mean-field evidence lower bound for the Dirichlet / Normal-Gamma mixture.
pub fn elbo(post: &VariationalPosterior, data: &[f64], priors: &Priors) -> f64 {
    elbo_weighted(post, data, None, priors)
}

/// As [`elbo`] with sample `n` counted `weights[n]` times.
pub fn elbo_weighted(post: &VariationalPosterior, data: &[f64], weights: Option<&[f64]>, priors: &Priors) -> f64 {
    let k = post.len();
    let r = &post.responsibilities;
    let lambda_total: f64 = post.lambda.iter().sum();
    let psi_total = digamma(lambda_total);
    let ln_w: Vec<f64> = post.lambda.iter().map(|&l| digamma(l) - psi_total).collect();
    let ln_tau: Vec<f64> = (0..k).map(|j| digamma(post.a[j]) - post.b[j].ln()).collect();
    let tau: Vec<f64> = (0..k).map(|j| post.a[j] / post.b[j]).collect();

    let mut bound = 0.0;
    // E[ln p(X|Z,μ,τ)] + E[ln p(Z|ϖ)] − E[ln q(Z)]
    for (n, &x) in data.iter().enumerate() {
        let c = mult(weights, n);
        for j in 0..k {
            let rnk = r.get(n, j);
            if rnk <= 0.0 {
                continue;
            }
            let d = x - post.m[j];
            let quad = 1.0 / post.beta[j] + tau[j] * d * d;
            bound += c * rnk * (0.5 * ln_tau[j] - 0.5 * ln_2pi() - 0.5 * quad + ln_w[j] - rnk.ln());
        }
    }
    // E[ln p(ϖ)] − E[ln q(ϖ)]
    let prior_lambdas = vec![priors.lambda0; k];
    bound += ln_dirichlet_norm(&prior_lambdas) + (priors.lambda0 - 1.0) * ln_w.iter().sum::<f64>();
    bound -= ln_dirichlet_norm(&post.lambda) + (0..k).map(|j| (post.lambda[j] - 1.0) * ln_w[j]).sum::<f64>();
    // E[ln p(μ,τ)] − E[ln q(μ,τ)]
    for j in 0..k {
        let dm = post.m[j] - priors.m0;
        bound += 0.5 * (priors.beta0.ln() - ln_2pi()) + 0.5 * ln_tau[j]
            - 0.5 * priors.beta0 * (1.0 / post.beta[j] + tau[j] * dm * dm)
            + priors.a0 * priors.b0.ln()
            - ln_gamma(priors.a0)
            + (priors.a0 - 1.0) * ln_tau[j]
            - priors.b0 * tau[j];
        bound -= 0.5 * (post.beta[j].ln() - ln_2pi()) + 0.5 * ln_tau[j] - 0.5 + post.a[j] * post.b[j].ln()
            - ln_gamma(post.a[j])
            + (post.a[j] - 1.0) * ln_tau[j]
            - post.a[j];
    }
    bound
}
