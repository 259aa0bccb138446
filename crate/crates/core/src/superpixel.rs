//! Felzenszwalb–Huttenlocher over-segmentation, superpixel adjacency and
//! the multi-scale stack.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter;
use crate::image::{LabelMap, RasterImage};

/// Parameters of one FH over-segmentation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FhParams {
    /// Scale constant; larger values give larger components.
    pub k: f64,
    pub min_size: usize,
    pub sigma: f64,
}

impl FhParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.k > 0.0) || self.min_size == 0 || !(self.sigma >= 0.0) {
            return Err(Error::InvalidParameter(alloc::format!(
                "fh parameters k={}, min_size={}, sigma={}",
                self.k,
                self.min_size,
                self.sigma
            )));
        }
        Ok(())
    }
}

/// Default five-level stack.
pub fn default_fh_stack() -> Vec<FhParams> {
    [50.0, 100.0, 150.0, 200.0, 300.0]
        .iter()
        .map(|&k| FhParams {
            k,
            min_size: 20,
            sigma: 0.8,
        })
        .collect()
}

struct DisjointSet {
    parent: Vec<u32>,
    size: Vec<u32>,
    thresh: Vec<f64>,
}

impl DisjointSet {
    fn new(n: usize, c: f64) -> Self {
        Self {
            parent: (0..n as u32).collect(),
            size: vec![1; n],
            thresh: vec![c; n],
        }
    }

    fn find(&mut self, mut x: u32) -> u32 {
        let mut root = x;
        while self.parent[root as usize] != root {
            root = self.parent[root as usize];
        }
        while self.parent[x as usize] != root {
            let next = self.parent[x as usize];
            self.parent[x as usize] = root;
            x = next;
        }
        root
    }

    fn union(&mut self, a: u32, b: u32) -> u32 {
        let (big, small) = if self.size[a as usize] >= self.size[b as usize] {
            (a, b)
        } else {
            (b, a)
        };
        self.parent[small as usize] = big;
        self.size[big as usize] += self.size[small as usize];
        big
    }
}

fn lab_dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    libm::sqrt((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2))
}

/// 8-connected pixel graph, each undirected edge once, sorted by
/// `(weight, source, target)`.
fn pixel_edges(img: &RasterImage) -> Vec<(f64, u32, u32)> {
    let (w, h) = (img.width(), img.height());
    let mut edges = Vec::with_capacity(w * h * 4);
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let p = img.pixel(i);
            let mut push = |xx: usize, yy: usize| {
                let j = yy * w + xx;
                edges.push((lab_dist(p, img.pixel(j)), i as u32, j as u32));
            };
            if x + 1 < w {
                push(x + 1, y);
            }
            if y + 1 < h {
                push(x, y + 1);
            }
            if x + 1 < w && y + 1 < h {
                push(x + 1, y + 1);
            }
            if x + 1 < w && y > 0 {
                push(x + 1, y - 1);
            }
        }
    }
    edges.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    edges
}

/// FH graph-based segmentation of `img`.
pub fn fh_segment(img: &RasterImage, params: FhParams) -> Result<LabelMap> {
    params.validate()?;
    let smoothed = filter::gaussian_smooth(img, params.sigma);
    let edges = pixel_edges(&smoothed);
    let n = img.len();
    let mut ds = DisjointSet::new(n, params.k);
    for &(wt, a, b) in &edges {
        let (ra, rb) = (ds.find(a), ds.find(b));
        if ra != rb && wt <= ds.thresh[ra as usize] && wt <= ds.thresh[rb as usize] {
            let r = ds.union(ra, rb);
            ds.thresh[r as usize] = wt + params.k / ds.size[r as usize] as f64;
        }
    }
    let min = params.min_size as u32;
    for &(_, a, b) in &edges {
        let (ra, rb) = (ds.find(a), ds.find(b));
        if ra != rb && (ds.size[ra as usize] < min || ds.size[rb as usize] < min) {
            ds.union(ra, rb);
        }
    }
    let roots: Vec<u32> = (0..n as u32).map(|i| ds.find(i)).collect();
    LabelMap::from_u32(img.width(), img.height(), &roots)
}

/// One over-segmentation level with its region adjacency.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperpixelScale {
    pub scale_id: usize,
    pub labels: LabelMap,
    /// Sorted 4-connected neighbors per superpixel.
    pub adjacency: Vec<Vec<u32>>,
    pub areas: Vec<usize>,
}

impl SuperpixelScale {
    pub fn new(scale_id: usize, labels: LabelMap) -> Self {
        let adjacency = adjacency(&labels);
        let areas = labels.areas();
        Self {
            scale_id,
            labels,
            adjacency,
            areas,
        }
    }

    /// Superpixel count.
    pub fn len(&self) -> usize {
        self.labels.num_labels()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Region adjacency from horizontally and vertically neighboring pixels.
pub fn adjacency(labels: &LabelMap) -> Vec<Vec<u32>> {
    let (w, h) = (labels.width(), labels.height());
    let l = labels.labels();
    let mut pairs = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let a = l[y * w + x];
            if x + 1 < w {
                let b = l[y * w + x + 1];
                if a != b {
                    pairs.push((a.min(b), a.max(b)));
                }
            }
            if y + 1 < h {
                let b = l[(y + 1) * w + x];
                if a != b {
                    pairs.push((a.min(b), a.max(b)));
                }
            }
        }
    }
    pairs.sort_unstable();
    pairs.dedup();
    let mut adj = vec![Vec::new(); labels.num_labels()];
    for (a, b) in pairs {
        adj[a as usize].push(b);
        adj[b as usize].push(a);
    }
    adj.iter_mut().for_each(|v| v.sort_unstable());
    adj
}

/// Over-segmentations of one image ordered by scale id.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleStack {
    scales: Vec<SuperpixelScale>,
}

impl ScaleStack {
    pub fn new(scales: Vec<SuperpixelScale>) -> Result<Self> {
        let first = scales
            .first()
            .ok_or_else(|| Error::InvalidParameter("empty scale stack".into()))?;
        let (w, h) = (first.labels.width(), first.labels.height());
        for (i, s) in scales.iter().enumerate() {
            if s.labels.width() != w || s.labels.height() != h {
                return Err(Error::DimensionMismatch(alloc::format!(
                    "scale {} is {}x{}, expected {w}x{h}",
                    s.scale_id,
                    s.labels.width(),
                    s.labels.height()
                )));
            }
            if scales[..i].iter().any(|o| o.scale_id == s.scale_id) {
                return Err(Error::InvalidParameter(alloc::format!(
                    "duplicate scale id {}",
                    s.scale_id
                )));
            }
        }
        Ok(Self { scales })
    }

    pub fn scales(&self) -> &[SuperpixelScale] {
        &self.scales
    }

    pub fn len(&self) -> usize {
        self.scales.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scales.is_empty()
    }

    pub fn width(&self) -> usize {
        self.scales[0].labels.width()
    }

    pub fn height(&self) -> usize {
        self.scales[0].labels.height()
    }

    /// Total superpixel count over all scales.
    pub fn total_superpixels(&self) -> usize {
        self.scales.iter().map(|s| s.len()).sum()
    }
}

/// Where one scale's label map comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum ScaleSource {
    Fh(FhParams),
    External(LabelMap),
}

/// Builds one scale from its source.
pub fn build_scale(img: &RasterImage, scale_id: usize, source: &ScaleSource) -> Result<SuperpixelScale> {
    let labels = match source {
        ScaleSource::Fh(p) => fh_segment(img, *p)?,
        ScaleSource::External(m) => {
            if m.width() != img.width() || m.height() != img.height() {
                return Err(Error::DimensionMismatch(alloc::format!(
                    "label map {}x{} vs image {}x{}",
                    m.width(),
                    m.height(),
                    img.width(),
                    img.height()
                )));
            }
            m.clone()
        }
    };
    Ok(SuperpixelScale::new(scale_id, labels))
}

/// Builds every scale sequentially, ids `0..sources.len()`.
pub fn build_stack(img: &RasterImage, sources: &[ScaleSource]) -> Result<ScaleStack> {
    let scales = sources
        .iter()
        .enumerate()
        .map(|(i, s)| build_scale(img, i, s))
        .collect::<Result<Vec<_>>>()?;
    ScaleStack::new(scales)
}
