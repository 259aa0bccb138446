use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Output of [`kmeans`].
#[derive(Debug, Clone, PartialEq)]
pub struct KmeansResult {
    pub labels: Vec<usize>,
    /// Row-major `k x dim` centers.
    pub centers: Vec<f64>,
    /// Weighted sum of squared distances to the assigned center.
    pub inertia: f64,
}

#[inline]
fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(p: &[f64], centers: &[f64], dim: usize) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, center) in centers.chunks_exact(dim).enumerate() {
        let d = dist2(p, center);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn plus_plus(points: &[f64], dim: usize, w: &[f64], k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = w.len();
    let pick = |weights: &[f64], rng: &mut ChaCha8Rng| -> Option<usize> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return None;
        }
        let mut t = rng.random::<f64>() * total;
        for (i, &v) in weights.iter().enumerate() {
            if v > 0.0 {
                if t < v {
                    return Some(i);
                }
                t -= v;
            }
        }
        weights.iter().rposition(|&v| v > 0.0)
    };
    let first = pick(w, rng).unwrap_or(0);
    let mut centers = Vec::with_capacity(k * dim);
    centers.extend_from_slice(&points[first * dim..(first + 1) * dim]);
    let mut d2: Vec<f64> = (0..n).map(|i| dist2(&points[i * dim..(i + 1) * dim], &centers)).collect();
    let mut chosen = vec![false; n];
    chosen[first] = true;
    for _ in 1..k {
        let score: Vec<f64> = d2.iter().zip(w).map(|(d, w)| d * w).collect();
        let next = pick(&score, rng)
            .or_else(|| chosen.iter().position(|&c| !c))
            .unwrap_or(0);
        chosen[next] = true;
        let c = &points[next * dim..(next + 1) * dim];
        centers.extend_from_slice(c);
        for i in 0..n {
            d2[i] = d2[i].min(dist2(&points[i * dim..(i + 1) * dim], c));
        }
    }
    centers
}

fn lloyd(points: &[f64], dim: usize, w: &[f64], mut centers: Vec<f64>, max_iter: usize) -> KmeansResult {
    let n = w.len();
    let k = centers.len() / dim;
    let mut labels = vec![usize::MAX; n];
    let mut dists = vec![0.0; n];
    for _ in 0..max_iter.max(1) {
        let mut changed = false;
        for i in 0..n {
            let (c, d) = nearest(&points[i * dim..(i + 1) * dim], &centers, dim);
            if labels[i] != c {
                labels[i] = c;
                changed = true;
            }
            dists[i] = d;
        }
        if !changed {
            break;
        }
        let mut sums = vec![0.0; k * dim];
        let mut mass = vec![0.0; k];
        for i in 0..n {
            let c = labels[i];
            mass[c] += w[i];
            for t in 0..dim {
                sums[c * dim + t] += w[i] * points[i * dim + t];
            }
        }
        for c in 0..k {
            if mass[c] > 0.0 {
                for t in 0..dim {
                    centers[c * dim + t] = sums[c * dim + t] / mass[c];
                }
            } else {
                let mut far = 0;
                for i in 1..n {
                    if w[i] * dists[i] > w[far] * dists[far] {
                        far = i;
                    }
                }
                centers[c * dim..(c + 1) * dim].copy_from_slice(&points[far * dim..(far + 1) * dim]);
                dists[far] = 0.0;
            }
        }
    }
    let mut inertia = 0.0;
    for i in 0..n {
        let (c, d) = nearest(&points[i * dim..(i + 1) * dim], &centers, dim);
        labels[i] = c;
        inertia += w[i] * d;
    }
    KmeansResult { labels, centers, inertia }
}

/// Weighted k-means with k-means++ seeding. `points` is row-major
/// `n x dim`; `weights` defaults to ones. The run with the lowest inertia
/// over `n_init` seedings is returned.
pub fn kmeans(
    points: &[f64],
    dim: usize,
    weights: Option<&[f64]>,
    k: usize,
    seed: u64,
    max_iter: usize,
    n_init: usize,
) -> KmeansResult {
    assert!(dim > 0 && points.len().is_multiple_of(dim));
    let n = points.len() / dim;
    let ones;
    let w = match weights {
        Some(w) => w,
        None => {
            ones = vec![1.0; n];
            &ones
        }
    };
    assert_eq!(w.len(), n);
    let k = k.clamp(1, n.max(1));
    if n == 0 {
        return KmeansResult { labels: Vec::new(), centers: Vec::new(), inertia: 0.0 };
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<KmeansResult> = None;
    for _ in 0..n_init.max(1) {
        let centers = plus_plus(points, dim, w, k, &mut rng);
        let run = lloyd(points, dim, w, centers, max_iter);
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    best.unwrap()
}
