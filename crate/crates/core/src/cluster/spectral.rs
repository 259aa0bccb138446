use alloc::vec;
use alloc::vec::Vec;

use libm::sqrt;

use super::kmeans::kmeans;
use super::ClusterAssignment;
use crate::error::{Error, Result};
use crate::linalg::{csr_top_k, Csr};

/// Normalized spectral clustering of a symmetric nonnegative affinity.
/// Zero-degree items become singleton clusters; the remaining items are
/// embedded with the leading eigenvectors of `D^-1/2 M D^-1/2`,
/// row-normalized and grouped by k-means.
pub fn spectral_cluster(m: &Csr, k: usize, seed: u64) -> Result<ClusterAssignment> {
    let n = m.nrows();
    if k == 0 || k > n.max(1) {
        return Err(Error::InvalidParameter(alloc::format!("k={k} for {n} items")));
    }
    let deg = m.row_sums();
    let live: Vec<usize> = (0..n).filter(|&i| deg[i] > 0.0).collect();
    let isolated = n - live.len();
    let mut raw = vec![0usize; n];
    let mut next = 0usize;
    for i in 0..n {
        if deg[i] <= 0.0 {
            raw[i] = next;
            next += 1;
        }
    }
    if !live.is_empty() {
        let kc = k.saturating_sub(isolated).max(1).min(live.len());
        let pos: Vec<usize> = {
            let mut p = vec![usize::MAX; n];
            for (r, &i) in live.iter().enumerate() {
                p[i] = r;
            }
            p
        };
        let rows = live
            .iter()
            .map(|&i| {
                let (idx, val) = m.row(i);
                idx.iter()
                    .zip(val)
                    .filter(|(j, _)| deg[**j] > 0.0)
                    .map(|(&j, &v)| (pos[j], v / sqrt(deg[i] * deg[j])))
                    .collect()
            })
            .collect();
        let norm = Csr::from_rows(live.len(), rows);
        let labels = if kc == 1 {
            vec![0; live.len()]
        } else {
            let eig = csr_top_k(&norm, kc, seed);
            let mut pts = Vec::with_capacity(live.len() * kc);
            for r in 0..live.len() {
                let row = eig.vectors.row(r);
                let nr = row.norm();
                let s = if nr > 0.0 { 1.0 / nr } else { 0.0 };
                pts.extend(row.iter().map(|v| v * s));
            }
            kmeans(&pts, kc, None, kc, seed, 300, 1).labels
        };
        for (r, &i) in live.iter().enumerate() {
            raw[i] = next + labels[r];
        }
    }
    Ok(ClusterAssignment::from_labels(&raw))
}
