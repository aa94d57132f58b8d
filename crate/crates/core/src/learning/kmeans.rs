//! Lloyd's k-means with k-means++ seeding and random restarts.

use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    pub sse: f64,
    /// Within-cluster SSE after every Lloyd iteration of the winning restart.
    pub sse_trace: Vec<f64>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(p: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, cen) in centroids.iter().enumerate() {
        let d = sq_dist(p, cen);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn seed_plus_plus<R: Rng>(data: &[Vec<f64>], k: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let n = data.len();
    let mut centroids = vec![data[rng.random_range(0..n)].clone()];
    let mut d2: Vec<f64> = data.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total <= 0.0 {
            rng.random_range(0..n)
        } else {
            let mut u = rng.random::<f64>() * total;
            let mut idx = n - 1;
            for (i, w) in d2.iter().enumerate() {
                if *w > 0.0 && u < *w {
                    idx = i;
                    break;
                }
                u -= w;
            }
            // guard against rounding pushing past the last positive weight
            if d2[idx] <= 0.0 {
                idx = d2.iter().rposition(|w| *w > 0.0).unwrap_or(idx);
            }
            idx
        };
        let c = data[pick].clone();
        for (w, p) in d2.iter_mut().zip(data) {
            *w = w.min(sq_dist(p, &c));
        }
        centroids.push(c);
    }
    centroids
}

fn lloyd(data: &[Vec<f64>], mut centroids: Vec<Vec<f64>>, max_iter: usize) -> KMeansResult {
    let k = centroids.len();
    let dim = data[0].len();
    let mut assignments = vec![usize::MAX; data.len()];
    let mut sse_trace = Vec::new();
    for _ in 0..max_iter.max(1) {
        let mut changed = false;
        let mut sse = 0.0;
        for (i, p) in data.iter().enumerate() {
            let (c, d) = nearest(p, &centroids);
            sse += d;
            if assignments[i] != c {
                assignments[i] = c;
                changed = true;
            }
        }
        sse_trace.push(sse);
        if !changed {
            break;
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &c) in data.iter().zip(&assignments) {
            counts[c] += 1;
            for (s, v) in sums[c].iter_mut().zip(p) {
                *s += v;
            }
        }
        for c in 0..k {
            // an emptied cluster keeps its previous centroid
            if counts[c] > 0 {
                centroids[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
    }
    let sse = data.iter().zip(&assignments).map(|(p, &c)| sq_dist(p, &centroids[c])).sum();
    KMeansResult { assignments, centroids, sse, sse_trace }
}

/// Best of `restarts` k-means++ seeded runs by within-cluster SSE.
pub fn kmeans<R: Rng>(data: &[Vec<f64>], k: usize, restarts: usize, max_iter: usize, rng: &mut R) -> Result<KMeansResult> {
    if k == 0 {
        return Err(Error::InvalidConfig("k must be positive".into()));
    }
    if data.len() < k {
        return Err(Error::NotEnoughData(format!("{} samples for {k} clusters", data.len())));
    }
    let mut best: Option<KMeansResult> = None;
    for _ in 0..restarts.max(1) {
        let run = lloyd(data, seed_plus_plus(data, k, rng), max_iter);
        if best.as_ref().is_none_or(|b| run.sse < b.sse) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}
