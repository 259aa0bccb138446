//! Timed end-to-end segmentation of one image.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use afa_core::features::FeatureMatrix;
use afa_core::fusion::{AffinityGraph, Segmentation, TcutSolver};
use afa_core::metrics::MetricReport;
use afa_core::pipeline::{
    partition, prepare_image, scale_features, scale_graph, select_nodes, GraphMode, PipelineConfig, ScaleConfig,
};
use afa_core::superpixel::{build_scale, ScaleSource, ScaleStack};
use afa_core::cluster::GlobalNodeSet;
use afa_core::RasterImage;
use rayon::prelude::*;
use rayon::ThreadPool;
use serde::Serialize;

use crate::config::config_hash;
use crate::error::{AfaError, Result, StageExt};
use crate::imgio::read_label_map_sized;

/// Wall-clock seconds per pipeline stage.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct StageTimes {
    pub superpixels: f64,
    pub features: f64,
    pub nodes: f64,
    pub graph: f64,
    pub tcut: f64,
    pub metrics: f64,
    pub total: f64,
}

impl StageTimes {
    pub fn stage_sum(&self) -> f64 {
        self.superpixels + self.features + self.nodes + self.graph + self.tcut + self.metrics
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub image_id: String,
    pub config_hash: String,
    pub times: StageTimes,
    pub k_t: usize,
    pub k_used: usize,
    pub report: Option<MetricReport>,
}

/// Thread pool with a fixed worker count; zero picks the rayon default.
pub fn worker_pool(workers: usize) -> Result<ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| AfaError::Config(format!("thread pool: {e}")))
}

/// Scale sources with label-file paths resolved. `{id}` in a path is
/// replaced by the image id.
pub fn resolve_scales(cfg: &PipelineConfig, image_id: &str, width: usize, height: usize) -> Result<Vec<ScaleSource>> {
    cfg.scales
        .iter()
        .map(|s| match s {
            ScaleConfig::Fh(p) => Ok(ScaleSource::Fh(*p)),
            ScaleConfig::LabelFile { path } => {
                let p = path.replace("{id}", image_id);
                read_label_map_sized(Path::new(&p), width, height).map(ScaleSource::External)
            }
        })
        .collect()
}

/// Everything up to the prepared transfer cut, plus the per-scale
/// intermediates for debugging.
pub struct Prepared {
    pub stack: ScaleStack,
    pub features: Vec<FeatureMatrix>,
    pub nodes: Vec<GlobalNodeSet>,
    pub graphs: Vec<AffinityGraph>,
    pub solver: TcutSolver,
    pub config_hash: String,
    pub times: StageTimes,
}

impl Prepared {
    /// Segmentation at `k_t` groups, stamped with the config hash; the
    /// time spent is added to the Tcut stage.
    pub fn segment(&mut self, k_t: usize) -> Result<Segmentation> {
        let t = Instant::now();
        let mut s = self.solver.segment(k_t.min(self.solver.max_groups())).stage("tcut")?;
        s.k_t = k_t;
        s.config_hash.clone_from(&self.config_hash);
        let dt = t.elapsed().as_secs_f64();
        self.times.tcut += dt;
        self.times.total += dt;
        Ok(s)
    }

    /// Per-scale feature matrices as CSV (one row per superpixel) and
    /// graphs as `i j value` lines.
    pub fn dump(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| AfaError::io(dir, e))?;
        for (f, g) in self.features.iter().zip(&self.graphs) {
            let mut text = String::new();
            for j in 0..f.len() {
                let row: Vec<String> = f.data.column(j).iter().map(|v| v.to_string()).collect();
                text.push_str(&row.join(","));
                text.push('\n');
            }
            let path = dir.join(format!("features_scale{}.csv", f.scale_id));
            fs::write(&path, text).map_err(|e| AfaError::io(&path, e))?;
            let path = dir.join(format!("graph_scale{}.txt", g.scale_id));
            let mut out = fs::File::create(&path).map_err(|e| AfaError::io(&path, e))?;
            for i in 0..g.a.nrows() {
                let (idx, val) = g.a.row(i);
                for (j, v) in idx.iter().zip(val) {
                    writeln!(out, "{i} {j} {v}").map_err(|e| AfaError::io(&path, e))?;
                }
            }
        }
        Ok(())
    }
}

fn timed<T>(slot: &mut f64, f: impl FnOnce() -> T) -> T {
    let t = Instant::now();
    let r = f();
    *slot += t.elapsed().as_secs_f64();
    r
}

/// Runs every stage up to the prepared transfer cut. Scales are processed
/// in parallel on `pool`; results are collected in scale order.
pub fn prepare(img: &RasterImage, image_id: &str, cfg: &PipelineConfig, pool: &ThreadPool) -> Result<Prepared> {
    cfg.validate().map_err(|e| AfaError::Config(e.to_string()))?;
    let start = Instant::now();
    let mut times = StageTimes::default();
    let sources = resolve_scales(cfg, image_id, img.width(), img.height())?;
    let prep = timed(&mut times.superpixels, || prepare_image(img, cfg)).stage("denoise")?;
    pool.install(|| {
        let scales = timed(&mut times.superpixels, || {
            sources
                .par_iter()
                .enumerate()
                .map(|(i, s)| build_scale(&prep.for_superpixels, i, s))
                .collect::<afa_core::Result<Vec<_>>>()
        })
        .stage("superpixels")?;
        let stack = ScaleStack::new(scales).stage("superpixels")?;
        let features = timed(&mut times.features, || {
            stack
                .scales()
                .par_iter()
                .map(|s| scale_features(s, &prep, cfg))
                .collect::<afa_core::Result<Vec<_>>>()
        })
        .stage("features")?;
        let nodes = timed(&mut times.nodes, || {
            stack
                .scales()
                .par_iter()
                .zip(&features)
                .map(|(s, f)| match cfg.graph_mode {
                    GraphMode::Adjacency => Ok(GlobalNodeSet::default()),
                    _ => select_nodes(s, f, cfg),
                })
                .collect::<afa_core::Result<Vec<_>>>()
        })
        .stage("nodes")?;
        let graphs = timed(&mut times.graph, || {
            stack
                .scales()
                .par_iter()
                .zip(&features)
                .zip(&nodes)
                .map(|((s, f), n)| scale_graph(s, f, n, cfg))
                .collect::<afa_core::Result<Vec<_>>>()
        })
        .stage("graph")?;
        let solver = timed(&mut times.tcut, || partition(&stack, &graphs, cfg)).stage("tcut")?;
        times.total = start.elapsed().as_secs_f64();
        Ok(Prepared {
            stack,
            features,
            nodes,
            graphs,
            solver,
            config_hash: config_hash(cfg),
            times,
        })
    })
}

/// Segments one image at `k_t` groups (capped at what the graph supports).
pub fn segment(
    img: &RasterImage,
    image_id: &str,
    cfg: &PipelineConfig,
    k_t: usize,
    pool: &ThreadPool,
) -> Result<(Segmentation, RunRecord)> {
    let mut p = prepare(img, image_id, cfg, pool)?;
    let seg = p.segment(k_t)?;
    let record = RunRecord {
        image_id: image_id.to_string(),
        config_hash: p.config_hash.clone(),
        times: p.times,
        k_t,
        k_used: seg.k_used,
        report: None,
    };
    Ok((seg, record))
}
