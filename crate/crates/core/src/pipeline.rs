//! Pipeline configuration and the stage functions that turn an image and
//! its superpixel stack into a bipartite partition.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::cluster::{
    affinity_propagation, kmeans, select_global_nodes, similarity, spectral_cluster, ApcParams, ClusterAssignment,
    GlobalNodeSet, NodeRule,
};
use crate::error::{Error, Result};
use crate::features::{ikde_smooth, mlab, FeatureMatrix};
use crate::filter;
use crate::fusion::{adjacency_graph, bipartite, fuse, long_range_only, AffinityGraph, AffinityMode, TcutSolver};
use crate::image::RasterImage;
use crate::nolrr::{nolrr_graph, MUpdate, NolrrParams, Readout};
use crate::subspace::{spr_matrix, symmetrize};
use crate::superpixel::{default_fh_stack, FhParams, ScaleStack, SuperpixelScale};

/// One superpixel scale: computed by FH or read from a label-map file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum ScaleConfig {
    Fh(FhParams),
    LabelFile { path: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DenoiseKind {
    None,
    Gaussian,
    Bilateral,
    #[default]
    Ikde,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DenoiseTarget {
    OnImage,
    #[default]
    OnFeature,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Denoise {
    pub kind: DenoiseKind,
    pub target: DenoiseTarget,
}

/// Which superpixel graph feeds the bipartite graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphMode {
    Adjacency,
    LowRank,
    #[default]
    Fused,
}

/// How superpixels are grouped before global nodes are designated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeMode {
    /// Affinity propagation fixes the group count, spectral clustering of
    /// the sparse self-expression graph forms the groups.
    #[default]
    ApcSpr,
    /// Spectral clustering of the self-expression graph into two groups.
    KmeansSpr,
    /// Two-means on the feature columns.
    Kmeans,
    /// Middle third of the superpixels by area.
    Area,
}

/// Inclusive range of Tcut group counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KtRange {
    pub min: usize,
    pub max: usize,
}

impl Default for KtRange {
    fn default() -> Self {
        Self { min: 1, max: 40 }
    }
}

/// Group count used by the two-group node modes.
const FIXED_NODE_GROUPS: usize = 2;
/// 5x5 comparison filters.
const FILTER_RADIUS: usize = 2;
const GAUSSIAN_SIGMA: f64 = 1.0;
const BILATERAL_SIGMA: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub scales: Vec<ScaleConfig>,
    /// Smoothing factor of the feature denoiser, in `(0, 1]`.
    pub alpha: f64,
    /// OMP sparsity.
    pub psi: usize,
    /// OMP relative residual tolerance.
    pub tau: f64,
    /// Exponent on the direct feature distance.
    pub e: f64,
    /// Exponent on the index-path distance.
    pub g: f64,
    /// Low-rank dictionary size.
    pub d: usize,
    pub lambda1: f64,
    /// Pixel to superpixel weight.
    pub beta: f64,
    pub affinity: AffinityMode,
    pub node_rule: NodeRule,
    pub node_mode: NodeMode,
    pub graph_mode: GraphMode,
    pub m_update: MUpdate,
    pub readout: Readout,
    pub apc: ApcParams,
    pub k_t: KtRange,
    pub tcut_restarts: usize,
    pub denoise: Denoise,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            scales: default_fh_stack().into_iter().map(ScaleConfig::Fh).collect(),
            alpha: 1.0,
            psi: 3,
            tau: 1e-6,
            e: 3.0,
            g: 5.0,
            d: 50,
            lambda1: 1.0,
            beta: 1e-3,
            affinity: AffinityMode::Linear,
            node_rule: NodeRule::SizeWindow,
            node_mode: NodeMode::ApcSpr,
            graph_mode: GraphMode::Fused,
            m_update: MUpdate::FeatureCode,
            readout: Readout::Refit,
            apc: ApcParams::default(),
            k_t: KtRange::default(),
            tcut_restarts: 10,
            denoise: Denoise::default(),
            seed: 0,
        }
    }
}

fn bad(msg: String) -> Error {
    Error::InvalidParameter(msg)
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.scales.is_empty() {
            return Err(bad("at least one scale is required".into()));
        }
        for s in &self.scales {
            if let ScaleConfig::Fh(p) = s {
                p.validate()?;
            }
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(bad(alloc::format!("alpha={} outside (0,1]", self.alpha)));
        }
        if self.psi == 0 {
            return Err(bad("psi must be positive".into()));
        }
        if !(self.tau >= 0.0 && self.tau < 1.0) {
            return Err(bad(alloc::format!("tau={} outside [0,1)", self.tau)));
        }
        if !(self.e > 0.0 && self.e.is_finite() && self.g > 0.0 && self.g.is_finite()) {
            return Err(bad(alloc::format!("exponents e={}, g={} must be positive", self.e, self.g)));
        }
        if self.d == 0 {
            return Err(bad("d must be positive".into()));
        }
        if !(self.lambda1 > 0.0 && self.lambda1.is_finite()) {
            return Err(bad(alloc::format!("lambda1={} must be positive", self.lambda1)));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(bad(alloc::format!("beta={} must be positive", self.beta)));
        }
        if let AffinityMode::Gaussian { sigma } = self.affinity {
            if !(sigma > 0.0 && sigma.is_finite()) {
                return Err(bad(alloc::format!("affinity sigma={sigma} must be positive")));
            }
        }
        if !(0.5..1.0).contains(&self.apc.damping) || self.apc.max_iter == 0 || self.apc.conv_window == 0 {
            return Err(bad("apc damping must lie in [0.5,1) with positive iteration limits".into()));
        }
        if self.k_t.min == 0 || self.k_t.min > self.k_t.max {
            return Err(bad(alloc::format!("k_t range {}..={} is empty", self.k_t.min, self.k_t.max)));
        }
        if self.tcut_restarts == 0 {
            return Err(bad("tcut_restarts must be positive".into()));
        }
        Ok(())
    }

    pub fn nolrr_params(&self, scale_id: usize) -> NolrrParams {
        NolrrParams {
            lambda1: self.lambda1,
            rank: self.d,
            seed: self.seed.wrapping_add(scale_id as u64),
            m_update: self.m_update,
            readout: self.readout,
        }
    }
}

/// Exponential smoothing of the pixels in raster order.
pub fn ikde_image(img: &RasterImage, alpha: f64) -> Result<RasterImage> {
    let f = FeatureMatrix::new(DMatrix::from_column_slice(3, img.len(), img.data()), 0)?;
    let s = ikde_smooth(&f, alpha)?;
    RasterImage::new(img.width(), img.height(), s.data.as_slice().to_vec())
}

fn filtered(img: &RasterImage, kind: DenoiseKind, alpha: f64) -> Result<RasterImage> {
    Ok(match kind {
        DenoiseKind::None => img.clone(),
        DenoiseKind::Gaussian => filter::gaussian_blur(img, GAUSSIAN_SIGMA, FILTER_RADIUS),
        DenoiseKind::Bilateral => filter::bilateral(img, FILTER_RADIUS, BILATERAL_SIGMA, BILATERAL_SIGMA),
        DenoiseKind::Ikde => ikde_image(img, alpha)?,
    })
}

/// Images the superpixels and the features are computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedImage {
    pub for_superpixels: RasterImage,
    pub for_features: RasterImage,
}

/// Applies image-side denoising. Filters aimed at features act on the
/// image the features are averaged from; the exponential smoother acts on
/// the feature columns instead (see [`scale_features`]).
pub fn prepare_image(img: &RasterImage, cfg: &PipelineConfig) -> Result<PreparedImage> {
    let Denoise { kind, target } = cfg.denoise;
    Ok(match target {
        DenoiseTarget::OnImage => {
            let f = filtered(img, kind, cfg.alpha)?;
            PreparedImage { for_superpixels: f.clone(), for_features: f }
        }
        DenoiseTarget::OnFeature => {
            let for_features = match kind {
                DenoiseKind::Ikde => img.clone(),
                k => filtered(img, k, cfg.alpha)?,
            };
            PreparedImage { for_superpixels: img.clone(), for_features }
        }
    })
}

/// Mean-Lab features of one scale, smoothed when the feature-side
/// exponential smoother is selected.
pub fn scale_features(scale: &SuperpixelScale, prepared: &PreparedImage, cfg: &PipelineConfig) -> Result<FeatureMatrix> {
    let f = mlab(scale, &prepared.for_features)?;
    match cfg.denoise {
        Denoise { kind: DenoiseKind::Ikde, target: DenoiseTarget::OnFeature } => ikde_smooth(&f, cfg.alpha),
        _ => Ok(f),
    }
}

/// Superpixels whose area lies within the middle third of the area
/// ranking; equal areas are treated alike.
fn middle_area_nodes(scale: &SuperpixelScale) -> GlobalNodeSet {
    let n = scale.len();
    let mut sorted = scale.areas.clone();
    sorted.sort_unstable();
    if n == 0 {
        return GlobalNodeSet::default();
    }
    let lo = sorted[n / 3];
    let hi = sorted[(n - n / 3).max(1) - 1];
    GlobalNodeSet {
        nodes: (0..n).filter(|&i| (lo..=hi).contains(&scale.areas[i])).collect(),
    }
}

/// Groups the superpixels of one scale according to the node mode.
pub fn group_superpixels(scale: &SuperpixelScale, f: &FeatureMatrix, cfg: &PipelineConfig) -> Result<ClusterAssignment> {
    let n = f.len();
    if n < 2 {
        return Ok(ClusterAssignment::from_labels(&vec![0; n]));
    }
    let seed = cfg.seed.wrapping_add(scale.scale_id as u64);
    match cfg.node_mode {
        NodeMode::ApcSpr => {
            let sim = similarity(f, cfg.e, cfg.g)?;
            let k = affinity_propagation(&sim, cfg.apc)?.k;
            let m = symmetrize(&spr_matrix(f, cfg.psi, cfg.tau)?);
            spectral_cluster(&m, k.clamp(1, n), seed)
        }
        NodeMode::KmeansSpr => {
            let m = symmetrize(&spr_matrix(f, cfg.psi, cfg.tau)?);
            spectral_cluster(&m, FIXED_NODE_GROUPS.min(n), seed)
        }
        NodeMode::Kmeans => {
            // column-major storage is the row-major point list
            let r = kmeans(f.data.as_slice(), f.dim(), None, FIXED_NODE_GROUPS.min(n), seed, 300, 10);
            Ok(ClusterAssignment::from_labels(&r.labels))
        }
        NodeMode::Area => Ok(ClusterAssignment::from_labels(&vec![0; n])),
    }
}

pub fn select_nodes(scale: &SuperpixelScale, f: &FeatureMatrix, cfg: &PipelineConfig) -> Result<GlobalNodeSet> {
    if cfg.node_mode == NodeMode::Area {
        return Ok(middle_area_nodes(scale));
    }
    Ok(select_global_nodes(&group_superpixels(scale, f, cfg)?, cfg.node_rule))
}

/// Superpixel graph of one scale under the configured graph mode. The
/// node set is ignored by the adjacency-only mode.
pub fn scale_graph(
    scale: &SuperpixelScale,
    f: &FeatureMatrix,
    nodes: &GlobalNodeSet,
    cfg: &PipelineConfig,
) -> Result<AffinityGraph> {
    if cfg.graph_mode == GraphMode::Adjacency {
        return adjacency_graph(scale, f, cfg.affinity);
    }
    let w = nolrr_graph(&f.data, &nodes.nodes, &cfg.nolrr_params(scale.scale_id))?;
    match cfg.graph_mode {
        GraphMode::LowRank => long_range_only(scale.len(), &w, scale.scale_id),
        _ => fuse(&adjacency_graph(scale, f, cfg.affinity)?, &w),
    }
}

/// Node selection followed by the scale graph.
pub fn scale_graph_auto(scale: &SuperpixelScale, f: &FeatureMatrix, cfg: &PipelineConfig) -> Result<AffinityGraph> {
    let nodes = match cfg.graph_mode {
        GraphMode::Adjacency => GlobalNodeSet::default(),
        _ => select_nodes(scale, f, cfg)?,
    };
    scale_graph(scale, f, &nodes, cfg)
}

/// Bipartite graph over all scales, solved for group counts up to the
/// configured maximum (capped at the superpixel count).
pub fn partition(stack: &ScaleStack, graphs: &[AffinityGraph], cfg: &PipelineConfig) -> Result<TcutSolver> {
    let g = bipartite(stack, graphs, cfg.beta)?;
    let k_max = cfg.k_t.max.min(g.n_y());
    TcutSolver::new(&g, k_max, cfg.seed, cfg.tcut_restarts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::superpixel::{build_stack, ScaleSource};
    use crate::LabelMap;

    fn two_region(w: usize, h: usize) -> RasterImage {
        let mut rgb = Vec::with_capacity(w * h * 3);
        for _y in 0..h {
            for x in 0..w {
                rgb.extend_from_slice(if x < w / 2 { &[200, 30, 30] } else { &[20, 40, 210] });
            }
        }
        RasterImage::from_srgb8(w, h, &rgb).unwrap()
    }

    fn run(img: &RasterImage, cfg: &PipelineConfig, k: usize) -> LabelMap {
        let prep = prepare_image(img, cfg).unwrap();
        let sources: Vec<_> = cfg
            .scales
            .iter()
            .map(|s| match s {
                ScaleConfig::Fh(p) => ScaleSource::Fh(*p),
                ScaleConfig::LabelFile { .. } => unreachable!(),
            })
            .collect();
        let stack = build_stack(&prep.for_superpixels, &sources).unwrap();
        let graphs: Vec<_> = stack
            .scales()
            .iter()
            .map(|s| scale_graph_auto(s, &scale_features(s, &prep, cfg).unwrap(), cfg).unwrap())
            .collect();
        partition(&stack, &graphs, cfg).unwrap().segment(k).unwrap().labels
    }

    #[test]
    fn defaults_validate() {
        PipelineConfig::default().validate().unwrap();
        let mut c = PipelineConfig::default();
        c.k_t = KtRange { min: 3, max: 2 };
        assert!(c.validate().is_err());
        c = PipelineConfig { alpha: 0.0, ..PipelineConfig::default() };
        assert!(c.validate().is_err());
    }

    #[test]
    fn two_regions_every_mode() {
        let img = two_region(16, 16);
        let truth: Vec<u32> = (0..256).map(|i| ((i % 16) >= 8) as u32).collect();
        let truth = LabelMap::from_u32(16, 16, &truth).unwrap();
        for graph_mode in [GraphMode::Adjacency, GraphMode::LowRank, GraphMode::Fused] {
            for node_mode in [NodeMode::ApcSpr, NodeMode::KmeansSpr, NodeMode::Kmeans, NodeMode::Area] {
                let cfg = PipelineConfig { graph_mode, node_mode, ..PipelineConfig::default() };
                let seg = run(&img, &cfg, 2);
                assert!(seg.same_partition(&truth), "{graph_mode:?} {node_mode:?}");
            }
        }
    }

    #[test]
    fn unit_alpha_matches_no_denoise() {
        let mut rgb = Vec::new();
        for i in 0..24 * 20 {
            rgb.extend_from_slice(&[(i * 37 % 251) as u8, (i * 91 % 241) as u8, (i * 13 % 239) as u8]);
        }
        let img = RasterImage::from_srgb8(24, 20, &rgb).unwrap();
        let ikde = PipelineConfig::default();
        let none = PipelineConfig {
            denoise: Denoise { kind: DenoiseKind::None, target: DenoiseTarget::OnFeature },
            ..PipelineConfig::default()
        };
        assert_eq!(run(&img, &ikde, 4).labels(), run(&img, &none, 4).labels());
    }

    #[test]
    fn ikde_image_is_raster_smoothing() {
        let img = RasterImage::new(2, 1, alloc::vec![0.0, 0.0, 0.0, 4.0, 2.0, 0.0]).unwrap();
        let s = ikde_image(&img, 0.5).unwrap();
        assert_eq!(s.data(), &[0.0, 0.0, 0.0, 2.0, 1.0, 0.0]);
    }

    #[test]
    fn area_mode_takes_middle_third() {
        let raw: Vec<u32> = [0u32, 1, 1, 2, 2, 2, 3, 3, 3, 3, 4, 4, 4, 4, 4, 5, 5, 5, 5, 5, 5].to_vec();
        let scale = SuperpixelScale::new(0, LabelMap::from_u32(21, 1, &raw).unwrap());
        let f = FeatureMatrix::new(DMatrix::zeros(3, 6), 0).unwrap();
        let cfg = PipelineConfig { node_mode: NodeMode::Area, ..PipelineConfig::default() };
        assert_eq!(select_nodes(&scale, &f, &cfg).unwrap().nodes, alloc::vec![2, 3]);
    }
}
