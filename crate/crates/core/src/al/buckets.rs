//! k-means++ bucketization of the input space.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::AlError;
use crate::rng::StreamRng;

pub const MAX_LLOYD_ITERS: usize = 100;

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Bucket centers in standardized input space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketSet {
    pub centers: Vec<Vec<f64>>,
    /// Within-cluster SSE after each Lloyd iteration.
    pub sse_trace: Vec<f64>,
}

impl BucketSet {
    pub fn k(&self) -> usize {
        self.centers.len()
    }

    /// Nearest center under Euclidean distance; ties go to the lower index.
    pub fn assign(&self, point: &[f64]) -> usize {
        nearest(&self.centers, point).0
    }

    pub fn sse(&self, points: &[Vec<f64>]) -> f64 {
        points.iter().map(|p| nearest(&self.centers, p).1).sum()
    }
}

fn nearest(centers: &[Vec<f64>], p: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centers.iter().enumerate() {
        let d = sq_dist(c, p);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

/// k-means++ seeding: first center uniform, then each next one with probability
/// proportional to the squared distance to the nearest chosen center.
pub fn kmeanspp_seed(points: &[Vec<f64>], k: usize, rng: &mut StreamRng) -> Result<Vec<Vec<f64>>, AlError> {
    if k == 0 || points.len() < k {
        return Err(AlError::TooFewPoints {
            points: points.len(),
            k,
        });
    }
    let mut centers = vec![points[rng.random_range(0..points.len())].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        if total <= 0.0 {
            return Err(AlError::TooFewDistinct { k });
        }
        let mut u = rng.random::<f64>() * total;
        let mut pick = None;
        for (i, &w) in d2.iter().enumerate() {
            if w > 0.0 {
                pick = Some(i);
                if u < w {
                    break;
                }
                u -= w;
            }
        }
        let c = points[pick.expect("positive total weight")].clone();
        for (w, p) in d2.iter_mut().zip(points) {
            *w = w.min(sq_dist(p, &c));
        }
        centers.push(c);
    }
    Ok(centers)
}

/// Lloyd iterations from `centers` until assignments stop changing or
/// `max_iter` passes. Empty clusters keep their previous center.
pub fn lloyd(points: &[Vec<f64>], mut centers: Vec<Vec<f64>>, max_iter: usize) -> BucketSet {
    let dim = centers.first().map_or(0, Vec::len);
    let mut assignment: Vec<usize> = points.iter().map(|p| nearest(&centers, p).0).collect();
    let mut sse_trace = Vec::new();
    for _ in 0..max_iter {
        let mut sums = vec![vec![0.0; dim]; centers.len()];
        let mut counts = vec![0usize; centers.len()];
        for (p, &a) in points.iter().zip(&assignment) {
            counts[a] += 1;
            for (s, v) in sums[a].iter_mut().zip(p) {
                *s += v;
            }
        }
        for ((c, s), &n) in centers.iter_mut().zip(sums).zip(&counts) {
            if n > 0 {
                *c = s.into_iter().map(|v| v / n as f64).collect();
            }
        }
        let mut changed = false;
        let mut sse = 0.0;
        for (p, a) in points.iter().zip(assignment.iter_mut()) {
            let (j, d) = nearest(&centers, p);
            sse += d;
            if j != *a {
                *a = j;
                changed = true;
            }
        }
        sse_trace.push(sse);
        if !changed {
            break;
        }
    }
    BucketSet { centers, sse_trace }
}

/// k-means++ seeding followed by Lloyd refinement.
pub fn kmeanspp_buckets(points: &[Vec<f64>], k: usize, rng: &mut StreamRng) -> Result<BucketSet, AlError> {
    let seeds = kmeanspp_seed(points, k, rng)?;
    Ok(lloyd(points, seeds, MAX_LLOYD_ITERS))
}
