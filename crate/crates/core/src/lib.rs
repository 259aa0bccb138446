//! Allocation-only core of the adaptive fusion affinity graph (AFA-graph)
//! segmentation pipeline.
//!
//! The crate is `no_std` and depends only on `alloc`. Every stage of the
//! pipeline lives here as a pure function over in-memory data:
//!
//! - [`color`] / [`image`]: CIE L*a*b* rasters and dense label maps.
//! - [`superpixel`]: Felzenszwalb–Huttenlocher over-segmentation and
//!   superpixel adjacency.
//! - [`features`]: mean-Lab superpixel features and exponential smoothing.
//! - [`subspace`]: OMP self-expression and its symmetrized affinity.
//! - [`cluster`]: similarity, affinity propagation, spectral clustering and
//!   global node designation.
//! - [`nolrr`]: the single-pass online low-rank representation graph.
//! - [`fusion`]: adjacency graphs, graph fusion, the pixel/superpixel
//!   bipartite graph and transfer cut.
//! - [`metrics`]: PRI, VoI, GCE and BDE.
//! - [`pipeline`]: configuration and the per-scale stage functions.
//!
//! File formats, the CLI and wall-clock timing are provided by the `afa`
//! companion crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod cluster;
pub mod color;
mod error;
pub mod features;
pub mod filter;
pub mod fusion;
pub mod image;
pub mod linalg;
pub mod metrics;
pub mod nolrr;
pub mod pipeline;
pub mod subspace;
pub mod superpixel;

pub use error::{Error, Result};
pub use image::{LabelMap, RasterImage};
