//! One-dimensional k-means with k-means++ seeding.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::mixture::VARIANCE_FLOOR;

const LLOYD_MAX_ITERS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSummary {
    pub count: usize,
    pub mean: f64,
    pub variance: f64,
    /// Initial precision τ_k(0) = 1 / v̂_k, with v̂_k floored.
    pub precision: f64,
}

/// Hard partition produced by k-means++; empty clusters already dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialPartition {
    /// Cluster index of every sample, in `0..clusters.len()`.
    pub labels: Vec<usize>,
    pub clusters: Vec<ClusterSummary>,
}

impl InitialPartition {
    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    /// Initial mixing weights N̂_k / N.
    pub fn weights(&self) -> Vec<f64> {
        let n = self.labels.len() as f64;
        self.clusters.iter().map(|c| c.count as f64 / n).collect()
    }
}

fn nearest(centers: &[f64], x: f64) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (j, &c) in centers.iter().enumerate() {
        let d = (x - c).abs();
        if d < best_d {
            best = j;
            best_d = d;
        }
    }
    best
}

/// k-means++ seeding followed by Lloyd iterations.
///
/// Seeding stops early once every sample coincides with a center, so
/// identical data yields a single cluster.
pub fn kmeanspp_init(data: &[f64], k_max: usize, seed: u64) -> InitialPartition {
    assert!(!data.is_empty() && k_max >= 1, "k-means needs data and k >= 1");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = data.len();

    let mut centers = vec![data[rng.random_range(0..n)]];
    let mut dist2: Vec<f64> = data.iter().map(|&x| (x - centers[0]).powi(2)).collect();
    while centers.len() < k_max.min(n) {
        let total: f64 = dist2.iter().sum();
        if total <= 0.0 {
            break;
        }
        let target = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut pick = n - 1;
        for (i, &d) in dist2.iter().enumerate() {
            acc += d;
            if acc > target && d > 0.0 {
                pick = i;
                break;
            }
        }
        let c = data[pick];
        centers.push(c);
        for (d, &x) in dist2.iter_mut().zip(data) {
            *d = d.min((x - c).powi(2));
        }
    }

    let mut labels: Vec<usize> = data.iter().map(|&x| nearest(&centers, x)).collect();
    for _ in 0..LLOYD_MAX_ITERS {
        let mut sums = vec![0.0; centers.len()];
        let mut counts = vec![0usize; centers.len()];
        for (&x, &l) in data.iter().zip(&labels) {
            sums[l] += x;
            counts[l] += 1;
        }
        for j in 0..centers.len() {
            if counts[j] > 0 {
                centers[j] = sums[j] / counts[j] as f64;
            }
        }
        let next: Vec<usize> = data.iter().map(|&x| nearest(&centers, x)).collect();
        if next == labels {
            break;
        }
        labels = next;
    }

    // drop empty clusters and relabel densely
    let mut remap = vec![usize::MAX; centers.len()];
    let mut clusters = Vec::new();
    for (j, slot) in remap.iter_mut().enumerate() {
        let members: Vec<f64> = data
            .iter()
            .zip(&labels)
            .filter(|(_, &l)| l == j)
            .map(|(&x, _)| x)
            .collect();
        if members.is_empty() {
            continue;
        }
        let count = members.len();
        let mean = members.iter().sum::<f64>() / count as f64;
        let variance = members.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / count as f64;
        *slot = clusters.len();
        clusters.push(ClusterSummary {
            count,
            mean,
            variance,
            precision: 1.0 / variance.max(VARIANCE_FLOOR),
        });
    }
    let labels = labels.into_iter().map(|l| remap[l]).collect();
    InitialPartition { labels, clusters }
}
