//! Per-scale adjacency affinities, fusion with the long-range graph, the
//! pixel/superpixel bipartite graph and its transfer-cut partition.

mod bipartite;
mod tcut;

use alloc::vec;
use alloc::vec::Vec;

use libm::exp;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::linalg::{lstsq_min_norm, Csr};
use crate::nolrr::NolrrGraph;
use crate::superpixel::SuperpixelScale;

pub use bipartite::{bipartite, BipartiteGraph};
pub use tcut::{tcut, Segmentation, TcutSolver};

/// Mapping from neighbour reconstruction residuals to affinities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
#[derive(Default)]
pub enum AffinityMode {
    /// `max(0, 1 - (r_ij + r_ji) / 2)` on max-norm scaled features.
    #[default]
    Linear,
    /// `exp(-(r_ij + r_ji) / (2 sigma^2))` on residuals in feature units.
    Gaussian { sigma: f64 },
}


/// Symmetric superpixel affinity with unit diagonal and entries in `[0,1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityGraph {
    pub a: Csr,
    pub scale_id: usize,
}

impl AffinityGraph {
    pub fn len(&self) -> usize {
        self.a.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.a.nrows() == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a.get(i, j)
    }
}

/// Residuals `r_ij = |f_i - c_ij f_j|^2` where `c_i` is the minimum-norm
/// least-squares fit of `f_i` on its neighbours. Returned per node in
/// neighbour order.
pub fn neighbour_residuals(adjacency: &[Vec<u32>], f: &DMatrix<f64>) -> Vec<Vec<f64>> {
    adjacency
        .iter()
        .enumerate()
        .map(|(i, nb)| {
            if nb.is_empty() {
                return Vec::new();
            }
            let cols: Vec<_> = nb.iter().map(|&j| f.column(j as usize)).collect();
            let dict = DMatrix::from_columns(&cols);
            let fi: DVector<f64> = f.column(i).clone_owned();
            let c = lstsq_min_norm(&dict, &fi);
            nb.iter()
                .enumerate()
                .map(|(p, &j)| (&fi - f.column(j as usize) * c[p]).norm_squared())
                .collect()
        })
        .collect()
}

/// Local affinity graph of one scale.
pub fn adjacency_graph(scale: &SuperpixelScale, f: &FeatureMatrix, mode: AffinityMode) -> Result<AffinityGraph> {
    let n = scale.len();
    if f.len() != n {
        return Err(Error::DimensionMismatch(alloc::format!(
            "{} feature columns for {n} superpixels",
            f.len()
        )));
    }
    let max_norm = f.data.column_iter().map(|c| c.norm()).fold(0.0, f64::max);
    let s = if max_norm > 0.0 { 1.0 / max_norm } else { 1.0 };
    let scaled = &f.data * s;
    let res = neighbour_residuals(&scale.adjacency, &scaled);
    let unit2 = 1.0 / (s * s);
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for i in 0..n {
        rows[i].push((i, 1.0));
        for (p, &j) in scale.adjacency[i].iter().enumerate() {
            let j = j as usize;
            if j < i {
                continue;
            }
            let q = scale.adjacency[j].binary_search(&(i as u32)).expect("adjacency is symmetric");
            let r = res[i][p] + res[j][q];
            let a = match mode {
                AffinityMode::Linear => (1.0 - r / 2.0).max(0.0),
                AffinityMode::Gaussian { sigma } => exp(-r * unit2 / (2.0 * sigma * sigma)),
            };
            if a > 0.0 {
                rows[i].push((j, a));
                rows[j].push((i, a));
            }
        }
    }
    Ok(AffinityGraph {
        a: Csr::from_rows(n, rows),
        scale_id: scale.scale_id,
    })
}

/// Replaces the entries between distinct global nodes with the
/// max-normalized long-range graph.
pub fn fuse(a: &AffinityGraph, w: &NolrrGraph) -> Result<AffinityGraph> {
    let n = a.len();
    let m = w.node_index.len();
    if w.w.nrows() != m || w.w.ncols() != m {
        return Err(Error::DimensionMismatch("graph and node index disagree".into()));
    }
    if let Some(&bad) = w.node_index.iter().find(|&&i| i >= n) {
        return Err(Error::DimensionMismatch(alloc::format!("global node {bad} outside {n} superpixels")));
    }
    if m == 0 {
        return Ok(a.clone());
    }
    let wmax = w.w.iter().fold(0.0f64, |x, &y| x.max(y));
    let norm = if wmax > 0.0 { 1.0 / wmax } else { 0.0 };
    let mut slot = vec![usize::MAX; n];
    for (p, &i) in w.node_index.iter().enumerate() {
        slot[i] = p;
    }
    let rows = (0..n)
        .map(|i| {
            let (idx, val) = a.a.row(i);
            let mut row: Vec<(usize, f64)> = idx
                .iter()
                .zip(val)
                .filter(|(&j, _)| j == i || slot[i] == usize::MAX || slot[j] == usize::MAX)
                .map(|(&j, &v)| (j, v))
                .collect();
            if slot[i] != usize::MAX {
                for (q, &j) in w.node_index.iter().enumerate() {
                    if j != i {
                        let v = w.w[(slot[i], q)] * norm;
                        if v > 0.0 {
                            row.push((j, v));
                        }
                    }
                }
            }
            row
        })
        .collect();
    Ok(AffinityGraph {
        a: Csr::from_rows(n, rows),
        scale_id: a.scale_id,
    })
}

/// Long-range graph alone: normalized to max 1 with a unit diagonal.
pub fn long_range_only(n: usize, w: &NolrrGraph, scale_id: usize) -> Result<AffinityGraph> {
    let empty = AffinityGraph {
        a: Csr::from_rows(n, (0..n).map(|i| vec![(i, 1.0)]).collect()),
        scale_id,
    };
    fuse(&empty, w)
}
