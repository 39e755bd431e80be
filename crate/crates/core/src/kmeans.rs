//! Lloyd's k-means with k-means++ seeding and seeded restarts.

use rand::distr::weighted::WeightedIndex;
use rand::prelude::*;
use rayon::prelude::*;

use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KMeansConfig {
    pub restarts: usize,
    pub max_iterations: usize,
    pub seed: u64,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            restarts: 10,
            max_iterations: 300,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    /// Labels renumbered in order of first appearance.
    pub labels: Vec<usize>,
    /// Sum of squared distances to the assigned centroids.
    pub inertia: f64,
}

fn dist_sqr(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Clusters `points` into at most `k` groups. Restart `r` is seeded from
/// `(config.seed, r)`; the lowest-inertia run wins, ties going to the lower
/// restart index. If all points coincide every label is zero.
pub fn kmeans(points: &[Vec<f64>], k: usize, config: &KMeansConfig) -> Clustering {
    let n = points.len();
    if n == 0 {
        return Clustering {
            labels: Vec::new(),
            inertia: 0.0,
        };
    }
    let k = k.clamp(1, n);
    let spread = points.iter().map(|p| dist_sqr(p, &points[0])).fold(0.0, f64::max);
    if k == 1 || spread <= 1e-24 {
        return single_cluster(points);
    }
    let runs: Vec<Clustering> = (0..config.restarts.max(1))
        .into_par_iter()
        .map(|r| {
            let mut rng = seed::rng_from(config.seed, &[r as u64]);
            lloyd(points, k, config.max_iterations, &mut rng)
        })
        .collect();
    runs.into_iter()
        .reduce(|best, run| if run.inertia < best.inertia { run } else { best })
        .expect("at least one restart")
}

fn single_cluster(points: &[Vec<f64>]) -> Clustering {
    let dim = points[0].len();
    let mut centroid = vec![0.0; dim];
    for p in points {
        for (c, x) in centroid.iter_mut().zip(p) {
            *c += x / points.len() as f64;
        }
    }
    Clustering {
        labels: vec![0; points.len()],
        inertia: points.iter().map(|p| dist_sqr(p, &centroid)).sum(),
    }
}

fn plus_plus<R: Rng>(points: &[Vec<f64>], k: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut centers = vec![points[rng.random_range(0..n)].clone()];
    let mut nearest: Vec<f64> = points.iter().map(|p| dist_sqr(p, &centers[0])).collect();
    while centers.len() < k {
        let next = match WeightedIndex::new(&nearest) {
            Ok(dist) => dist.sample(rng),
            // Every point already coincides with a center.
            Err(_) => rng.random_range(0..n),
        };
        centers.push(points[next].clone());
        let c = centers.last().expect("just pushed");
        for (d, p) in nearest.iter_mut().zip(points) {
            *d = d.min(dist_sqr(p, c));
        }
    }
    centers
}

fn assign(points: &[Vec<f64>], centers: &[Vec<f64>]) -> (Vec<usize>, f64) {
    let mut inertia = 0.0;
    let labels = points
        .iter()
        .map(|p| {
            let (best, d) = centers
                .iter()
                .enumerate()
                .map(|(c, center)| (c, dist_sqr(p, center)))
                .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
            inertia += d;
            best
        })
        .collect();
    (labels, inertia)
}

fn lloyd<R: Rng>(points: &[Vec<f64>], k: usize, max_iterations: usize, rng: &mut R) -> Clustering {
    let dim = points[0].len();
    let mut centers = plus_plus(points, k, rng);
    let (mut labels, mut inertia) = assign(points, &centers);
    for _ in 0..max_iterations {
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &l) in points.iter().zip(&labels) {
            counts[l] += 1;
            for (s, x) in sums[l].iter_mut().zip(p) {
                *s += x;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            } else {
                // Re-seed an empty cluster at the point farthest from its center.
                let far = points
                    .iter()
                    .zip(&labels)
                    .map(|(p, &l)| dist_sqr(p, &centers[l]))
                    .enumerate()
                    .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc })
                    .0;
                centers[c] = points[far].clone();
            }
        }
        let (next, next_inertia) = assign(points, &centers);
        let stable = next == labels;
        labels = next;
        inertia = next_inertia;
        if stable {
            break;
        }
    }
    Clustering {
        labels: canonical_labels(&labels),
        inertia,
    }
}

/// Renumbers labels so they appear as 0, 1, 2, ... in index order.
pub fn canonical_labels(labels: &[usize]) -> Vec<usize> {
    let mut map = std::collections::HashMap::new();
    labels
        .iter()
        .map(|&l| {
            let next = map.len();
            *map.entry(l).or_insert(next)
        })
        .collect()
}
