use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::similarity::PairwiseSimilarity;
use super::ClusterAssignment;
use crate::error::{Error, Result};

/// Message-passing controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApcParams {
    pub damping: f64,
    pub max_iter: usize,
    /// Iterations the exemplar set must stay unchanged to stop.
    pub conv_window: usize,
}

impl Default for ApcParams {
    fn default() -> Self {
        Self {
            damping: 0.9,
            max_iter: 1000,
            conv_window: 50,
        }
    }
}

/// Relative size of the index-ordered bias that breaks exact ties.
const TIE_BIAS: f64 = 1e-9;

/// Affinity propagation on a similarity matrix whose diagonal carries the
/// preferences. Clusters are ordered by exemplar index; each point joins
/// its most similar exemplar.
pub fn affinity_propagation(sim: &PairwiseSimilarity, params: ApcParams) -> Result<ClusterAssignment> {
    if !(0.5..1.0).contains(&params.damping) {
        return Err(Error::InvalidParameter(alloc::format!(
            "damping {} outside [0.5, 1)",
            params.damping
        )));
    }
    let n = sim.s.nrows();
    if n == 0 {
        return Ok(ClusterAssignment { labels: Vec::new(), exemplars: Vec::new(), k: 0 });
    }
    if n == 1 {
        return Ok(ClusterAssignment { labels: vec![0], exemplars: vec![0], k: 1 });
    }

    let mut lo = f64::MAX;
    let mut hi = f64::MIN;
    for i in 0..n {
        for k in 0..n {
            if i != k {
                lo = lo.min(sim.s[(i, k)]);
                hi = hi.max(sim.s[(i, k)]);
            }
        }
    }
    if lo == hi {
        return Ok(ClusterAssignment { labels: vec![0; n], exemplars: vec![0], k: 1 });
    }

    let mut all_lo = lo.min(sim.preference);
    let mut all_hi = hi.max(sim.preference);
    for i in 0..n {
        all_lo = all_lo.min(sim.s[(i, i)]);
        all_hi = all_hi.max(sim.s[(i, i)]);
    }
    let bias = TIE_BIAS * (all_hi - all_lo);
    let mut s = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            s[i * n + k] = sim.s[(i, k)] - bias * k as f64 / n as f64;
        }
    }

    let lam = params.damping;
    let mut r = vec![0.0; n * n];
    let mut a = vec![0.0; n * n];
    let mut col = vec![0.0; n];
    let mut exemplars_prev: Vec<bool> = vec![false; n];
    let mut stable = 0usize;

    for _ in 0..params.max_iter {
        for i in 0..n {
            let row = i * n;
            let (mut best, mut best_k, mut second) = (f64::NEG_INFINITY, 0, f64::NEG_INFINITY);
            for k in 0..n {
                let v = a[row + k] + s[row + k];
                if v > best {
                    second = best;
                    best = v;
                    best_k = k;
                } else if v > second {
                    second = v;
                }
            }
            for k in 0..n {
                let m = if k == best_k { second } else { best };
                r[row + k] = lam * r[row + k] + (1.0 - lam) * (s[row + k] - m);
            }
        }
        col.iter_mut().for_each(|c| *c = 0.0);
        for i in 0..n {
            let row = i * n;
            for k in 0..n {
                let v = r[row + k];
                col[k] += if i == k { v } else { v.max(0.0) };
            }
        }
        for i in 0..n {
            let row = i * n;
            for k in 0..n {
                let rp = if i == k { r[row + k] } else { r[row + k].max(0.0) };
                let mut v = col[k] - rp;
                if i != k {
                    v = v.min(0.0);
                }
                a[row + k] = lam * a[row + k] + (1.0 - lam) * v;
            }
        }
        let ex: Vec<bool> = (0..n).map(|k| a[k * n + k] + r[k * n + k] > 0.0).collect();
        if ex == exemplars_prev {
            stable += 1;
        } else {
            stable = 1;
            exemplars_prev = ex;
        }
        if stable >= params.conv_window && exemplars_prev.iter().any(|&e| e) {
            break;
        }
    }

    let mut exemplars: Vec<usize> = (0..n).filter(|&k| exemplars_prev[k]).collect();
    if exemplars.is_empty() {
        let mut best = 0;
        for k in 1..n {
            if a[k * n + k] + r[k * n + k] > a[best * n + best] + r[best * n + best] {
                best = k;
            }
        }
        exemplars.push(best);
    }
    let labels = (0..n)
        .map(|i| {
            if let Ok(p) = exemplars.binary_search(&i) {
                return p;
            }
            let mut best = 0;
            for (c, &e) in exemplars.iter().enumerate() {
                if sim.s[(i, e)] > sim.s[(i, exemplars[best])] {
                    best = c;
                }
            }
            best
        })
        .collect();
    Ok(ClusterAssignment {
        labels,
        k: exemplars.len(),
        exemplars,
    })
}
