//! Global node selection: feature-sequence similarity, affinity
//! propagation, spectral clustering and the cluster-to-node rule.

mod apc;
mod kmeans;
mod nodes;
mod similarity;
mod spectral;

use alloc::vec::Vec;

pub use apc::{affinity_propagation, ApcParams};
pub use kmeans::{kmeans, KmeansResult};
pub use nodes::{select_global_nodes, GlobalNodeSet, NodeRule};
pub use similarity::{similarity, PairwiseSimilarity};
pub use spectral::spectral_cluster;

/// Hard assignment of `N` items to `k` clusters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterAssignment {
    /// Cluster index per item, dense in `0..k`.
    pub labels: Vec<usize>,
    /// Representative item of each cluster.
    pub exemplars: Vec<usize>,
    pub k: usize,
}

impl ClusterAssignment {
    /// Builds from raw labels, relabeled densely by first occurrence. The
    /// representative of each cluster is its first member.
    pub fn from_labels(raw: &[usize]) -> Self {
        let mut map: Vec<Option<usize>> = alloc::vec![None; raw.iter().copied().max().map_or(0, |m| m + 1)];
        let mut labels = Vec::with_capacity(raw.len());
        let mut exemplars = Vec::new();
        for (i, &r) in raw.iter().enumerate() {
            let l = *map[r].get_or_insert_with(|| {
                exemplars.push(i);
                exemplars.len() - 1
            });
            labels.push(l);
        }
        Self {
            labels,
            k: exemplars.len(),
            exemplars,
        }
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = alloc::vec![0; self.k];
        for &l in &self.labels {
            s[l] += 1;
        }
        s
    }
}
