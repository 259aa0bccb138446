use alloc::vec::Vec;

use super::AffinityGraph;
use crate::error::{Error, Result};
use crate::linalg::Csr;
use crate::superpixel::ScaleStack;

/// Pixels and superpixels (X side) against superpixels (Y side).
///
/// X rows are all pixels in raster order followed by the superpixels of
/// each scale; Y columns are the superpixels of each scale, scale `s`
/// starting at `y_offsets[s]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteGraph {
    pub b: Csr,
    /// Leading X rows that are pixels.
    pub n_pixels: usize,
    pub width: usize,
    pub height: usize,
    pub y_offsets: Vec<usize>,
    pub beta: f64,
}

impl BipartiteGraph {
    pub fn n_x(&self) -> usize {
        self.b.nrows()
    }

    pub fn n_y(&self) -> usize {
        self.b.ncols()
    }
}

/// Assembles the bipartite graph: each pixel links to its superpixel in
/// every scale with weight `beta`; each superpixel links to the
/// superpixels of its own scale with the fused affinity, diagonal included.
pub fn bipartite(stack: &ScaleStack, fused: &[AffinityGraph], beta: f64) -> Result<BipartiteGraph> {
    if fused.len() != stack.len() {
        return Err(Error::DimensionMismatch(alloc::format!(
            "{} graphs for {} scales",
            fused.len(),
            stack.len()
        )));
    }
    if !(beta > 0.0) {
        return Err(Error::InvalidParameter(alloc::format!("beta={beta}")));
    }
    let mut y_offsets = Vec::with_capacity(stack.len() + 1);
    y_offsets.push(0);
    for (s, g) in stack.scales().iter().zip(fused) {
        if g.len() != s.len() {
            return Err(Error::DimensionMismatch(alloc::format!(
                "scale {} has {} superpixels but its graph has {}",
                s.scale_id,
                s.len(),
                g.len()
            )));
        }
        y_offsets.push(y_offsets.last().unwrap() + s.len());
    }
    let n_pixels = stack.width() * stack.height();
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(n_pixels + y_offsets[stack.len()]);
    for p in 0..n_pixels {
        rows.push(
            stack
                .scales()
                .iter()
                .enumerate()
                .map(|(s, sc)| (y_offsets[s] + sc.labels.labels()[p] as usize, beta))
                .collect(),
        );
    }
    for (s, g) in fused.iter().enumerate() {
        for i in 0..g.len() {
            let (idx, val) = g.a.row(i);
            rows.push(idx.iter().zip(val).map(|(&j, &v)| (y_offsets[s] + j, v)).collect());
        }
    }
    Ok(BipartiteGraph {
        b: Csr::from_rows(y_offsets[stack.len()], rows),
        n_pixels,
        width: stack.width(),
        height: stack.height(),
        y_offsets,
        beta,
    })
}
