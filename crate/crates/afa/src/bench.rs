//! Dataset benchmarking with a best-PRI group-count sweep, and ablations
//! over pipeline modes.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use afa_core::metrics::{evaluate, pri, MetricReport, VoiBase};
use afa_core::pipeline::{Denoise, DenoiseKind, DenoiseTarget, GraphMode, NodeMode, PipelineConfig};
use afa_core::LabelMap;
use rayon::prelude::*;
use rayon::ThreadPool;
use serde::Serialize;

use crate::error::{AfaError, Result, StageExt};
use crate::imgio::{load_image, read_label_map_sized};
use crate::run::{prepare, RunRecord};

const IMAGE_EXTS: [&str; 3] = ["png", "ppm", "pnm"];
const LABEL_EXTS: [&str; 4] = ["seg", "pgm", "csv", "txt"];

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetItem {
    pub id: String,
    pub image: PathBuf,
    pub ground_truth: Vec<PathBuf>,
}

/// `images/` plus `groundtruth/`. Annotations of image `id` are the label
/// files in `groundtruth/id/` (recursively) and the files in any
/// directory under `groundtruth/` whose stem is `id` or starts with `id_`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub root: PathBuf,
    pub items: Vec<DatasetItem>,
    /// Images without any annotation.
    pub skipped: Vec<String>,
}

fn ext_in(p: &Path, exts: &[&str]) -> bool {
    p.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| exts.contains(&e.to_ascii_lowercase().as_str()))
}

fn walk(dir: &Path, out: &mut Vec<PathBuf>) {
    let Ok(rd) = fs::read_dir(dir) else { return };
    for entry in rd.flatten() {
        let p = entry.path();
        if p.is_dir() {
            walk(&p, out);
        } else {
            out.push(p);
        }
    }
}

pub fn discover(root: &Path) -> Result<Dataset> {
    let img_dir = root.join("images");
    let rd = fs::read_dir(&img_dir).map_err(|e| AfaError::io(&img_dir, e))?;
    let mut images: Vec<PathBuf> = rd.flatten().map(|e| e.path()).filter(|p| ext_in(p, &IMAGE_EXTS)).collect();
    images.sort();
    let mut labels = Vec::new();
    walk(&root.join("groundtruth"), &mut labels);
    labels.retain(|p| ext_in(p, &LABEL_EXTS));
    labels.sort();
    let gt_root = root.join("groundtruth");
    let mut items = Vec::new();
    let mut skipped = Vec::new();
    for image in images {
        let id = image.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
        let own_dir = gt_root.join(&id);
        let ground_truth: Vec<PathBuf> = labels
            .iter()
            .filter(|p| {
                let stem = p.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
                p.starts_with(&own_dir) || stem == id || stem.starts_with(&format!("{id}_"))
            })
            .cloned()
            .collect();
        if ground_truth.is_empty() {
            skipped.push(id);
        } else {
            items.push(DatasetItem { id, image, ground_truth });
        }
    }
    Ok(Dataset { root: root.to_path_buf(), items, skipped })
}

/// Best-PRI result of one image.
#[derive(Debug, Clone)]
pub struct ImageResult {
    pub record: RunRecord,
    pub segmentation: LabelMap,
}

/// Sweeps the configured group counts and keeps the best PRI; ties go to
/// the smaller count.
pub fn evaluate_item(item: &DatasetItem, cfg: &PipelineConfig, base: VoiBase, pool: &ThreadPool) -> Result<ImageResult> {
    let img = load_image(&item.image)?;
    let gt = item
        .ground_truth
        .iter()
        .map(|p| read_label_map_sized(p, img.width(), img.height()))
        .collect::<Result<Vec<_>>>()?;
    let mut prep = prepare(&img, &item.id, cfg, pool)?;
    let hi = cfg.k_t.max.min(prep.solver.max_groups());
    let lo = cfg.k_t.min.min(hi);
    let mut best: Option<(f64, usize, LabelMap, usize)> = None;
    for k in lo..=hi {
        let seg = prep.segment(k)?;
        let t = Instant::now();
        let score = pri(&seg.labels, &gt).stage("metrics")?;
        prep.times.metrics += t.elapsed().as_secs_f64();
        prep.times.total += t.elapsed().as_secs_f64();
        if best.as_ref().is_none_or(|b| score > b.0) {
            best = Some((score, k, seg.labels, seg.k_used));
        }
    }
    let (_, k_t, labels, k_used) = best.expect("sweep range is nonempty");
    let t = Instant::now();
    let report = evaluate(&labels, &gt, base).stage("metrics")?;
    prep.times.metrics += t.elapsed().as_secs_f64();
    prep.times.total += t.elapsed().as_secs_f64();
    Ok(ImageResult {
        record: RunRecord {
            image_id: item.id.clone(),
            config_hash: prep.config_hash.clone(),
            times: prep.times,
            k_t,
            k_used,
            report: Some(report),
        },
        segmentation: labels,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanScores {
    pub pri: f64,
    pub voi: f64,
    pub gce: f64,
    pub bde: f64,
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub results: Vec<ImageResult>,
    pub mean: MeanScores,
}

fn report_of(r: &ImageResult) -> &MetricReport {
    r.record.report.as_ref().expect("benchmark records carry a report")
}

/// Evaluates every annotated image in parallel on `pool`; output is in
/// dataset order.
pub fn benchmark(ds: &Dataset, cfg: &PipelineConfig, base: VoiBase, pool: &ThreadPool) -> Result<BenchReport> {
    for id in &ds.skipped {
        eprintln!("warning: no ground truth for {id}, skipped");
    }
    if ds.items.is_empty() {
        return Err(AfaError::EmptyDataset(ds.root.clone()));
    }
    let results = pool.install(|| {
        ds.items
            .par_iter()
            .map(|item| evaluate_item(item, cfg, base, pool))
            .collect::<Result<Vec<_>>>()
    })?;
    let n = results.len() as f64;
    let avg = |f: fn(&MetricReport) -> f64| results.iter().map(|r| f(report_of(r))).sum::<f64>() / n;
    let mean = MeanScores {
        pri: avg(|m| m.pri),
        voi: avg(|m| m.voi),
        gce: avg(|m| m.gce),
        bde: avg(|m| m.bde),
    };
    Ok(BenchReport { results, mean })
}

pub const REPORT_HEADER: [&str; 6] = ["image_id", "k_T", "PRI", "VoI", "GCE", "BDE"];

/// Per-image rows followed by a `mean` row. An empty report is just the
/// header.
pub fn write_report<W: Write>(report: Option<&BenchReport>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| AfaError::data("report", e.to_string());
    w.write_record(REPORT_HEADER).map_err(err)?;
    if let Some(report) = report {
        for r in &report.results {
            let m = report_of(r);
            w.write_record([
                r.record.image_id.clone(),
                r.record.k_t.to_string(),
                m.pri.to_string(),
                m.voi.to_string(),
                m.gce.to_string(),
                m.bde.to_string(),
            ])
            .map_err(err)?;
        }
        let m = report.mean;
        w.write_record(["mean".into(), String::new(), m.pri.to_string(), m.voi.to_string(), m.gce.to_string(), m.bde.to_string()])
            .map_err(err)?;
    }
    w.flush().map_err(|e| AfaError::io("report", e))
}

/// One point of the ablation grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Mode {
    pub denoise: Denoise,
    pub graph: GraphMode,
    pub nodes: NodeMode,
}

impl Mode {
    pub fn apply(&self, cfg: &PipelineConfig) -> PipelineConfig {
        PipelineConfig {
            denoise: self.denoise,
            graph_mode: self.graph,
            node_mode: self.nodes,
            ..cfg.clone()
        }
    }

    pub fn label(&self) -> String {
        format!(
            "denoise={}:{} graph={} nodes={}",
            denoise_kind_name(self.denoise.kind),
            denoise_target_name(self.denoise.target),
            graph_name(self.graph),
            node_name(self.nodes)
        )
    }
}

pub fn graph_name(g: GraphMode) -> &'static str {
    match g {
        GraphMode::Adjacency => "a",
        GraphMode::LowRank => "nolrr",
        GraphMode::Fused => "a+nolrr",
    }
}

pub fn node_name(n: NodeMode) -> &'static str {
    match n {
        NodeMode::ApcSpr => "apc+spr",
        NodeMode::KmeansSpr => "kmeans+spr",
        NodeMode::Kmeans => "kmeans",
        NodeMode::Area => "area",
    }
}

fn denoise_kind_name(k: DenoiseKind) -> &'static str {
    match k {
        DenoiseKind::None => "none",
        DenoiseKind::Gaussian => "gaussian",
        DenoiseKind::Bilateral => "bilateral",
        DenoiseKind::Ikde => "ikde",
    }
}

fn denoise_target_name(t: DenoiseTarget) -> &'static str {
    match t {
        DenoiseTarget::OnImage => "image",
        DenoiseTarget::OnFeature => "feature",
    }
}

pub fn parse_graph(s: &str) -> Result<GraphMode> {
    [GraphMode::Adjacency, GraphMode::LowRank, GraphMode::Fused]
        .into_iter()
        .find(|&g| graph_name(g) == s.to_ascii_lowercase())
        .ok_or_else(|| AfaError::Config(format!("unknown graph mode `{s}` (a, nolrr, a+nolrr)")))
}

pub fn parse_nodes(s: &str) -> Result<NodeMode> {
    [NodeMode::ApcSpr, NodeMode::KmeansSpr, NodeMode::Kmeans, NodeMode::Area]
        .into_iter()
        .find(|&n| node_name(n) == s.to_ascii_lowercase())
        .ok_or_else(|| AfaError::Config(format!("unknown node mode `{s}` (apc+spr, kmeans+spr, kmeans, area)")))
}

/// `kind[:target]` with target `image` or `feature` (default `feature`).
pub fn parse_denoise(s: &str) -> Result<Denoise> {
    let (k, t) = s.split_once(':').unwrap_or((s, "feature"));
    let kind = [DenoiseKind::None, DenoiseKind::Gaussian, DenoiseKind::Bilateral, DenoiseKind::Ikde]
        .into_iter()
        .find(|&d| denoise_kind_name(d) == k.to_ascii_lowercase())
        .ok_or_else(|| AfaError::Config(format!("unknown denoiser `{k}`")))?;
    let target = [DenoiseTarget::OnImage, DenoiseTarget::OnFeature]
        .into_iter()
        .find(|&d| denoise_target_name(d) == t.to_ascii_lowercase())
        .ok_or_else(|| AfaError::Config(format!("unknown denoise target `{t}`")))?;
    Ok(Denoise { kind, target })
}

/// Cartesian product of the three axes, denoise outermost.
pub fn mode_grid(denoise: &[Denoise], graphs: &[GraphMode], nodes: &[NodeMode]) -> Vec<Mode> {
    let mut out = Vec::new();
    for &d in denoise {
        for &g in graphs {
            for &n in nodes {
                out.push(Mode { denoise: d, graph: g, nodes: n });
            }
        }
    }
    out
}

pub fn ablate(ds: &Dataset, cfg: &PipelineConfig, modes: &[Mode], base: VoiBase, pool: &ThreadPool) -> Result<Vec<(Mode, BenchReport)>> {
    modes
        .iter()
        .map(|m| Ok((*m, benchmark(ds, &m.apply(cfg), base, pool)?)))
        .collect()
}

pub fn write_ablation<W: Write>(rows: &[(Mode, BenchReport)], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| AfaError::data("ablation", e.to_string());
    w.write_record(["denoise", "graph", "nodes", "images", "PRI", "VoI", "GCE", "BDE"]).map_err(err)?;
    for (m, r) in rows {
        w.write_record([
            format!("{}:{}", denoise_kind_name(m.denoise.kind), denoise_target_name(m.denoise.target)),
            graph_name(m.graph).to_string(),
            node_name(m.nodes).to_string(),
            r.results.len().to_string(),
            r.mean.pri.to_string(),
            r.mean.voi.to_string(),
            r.mean.gce.to_string(),
            r.mean.bde.to_string(),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| AfaError::io("ablation", e))
}
