//! Region and boundary agreement between a segmentation and one or more
//! reference annotations: PRI, VoI, GCE and BDE.

mod edt;

use alloc::vec;
use alloc::vec::Vec;

use libm::log;
use serde::{Deserialize, Serialize};

pub use edt::{boundary_mask, distance_transform};

use crate::error::{Error, Result};
use crate::image::LabelMap;

/// Logarithm base for VoI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VoiBase {
    #[default]
    Nat,
    Bits,
}

/// Joint label histogram of two maps over the same pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct Contingency {
    /// Nonzero cells `(row, col, count)` sorted by `(row, col)`.
    pub cells: Vec<(u32, u32, u64)>,
    pub rows: Vec<u64>,
    pub cols: Vec<u64>,
    pub n: u64,
}

impl Contingency {
    pub fn new(a: &LabelMap, b: &LabelMap) -> Result<Self> {
        check(a, b)?;
        let nb = b.num_labels() as u64;
        let mut keys: Vec<u64> = a
            .labels()
            .iter()
            .zip(b.labels())
            .map(|(&x, &y)| x as u64 * nb + y as u64)
            .collect();
        keys.sort_unstable();
        let mut cells = Vec::new();
        let mut i = 0;
        while i < keys.len() {
            let mut j = i;
            while j < keys.len() && keys[j] == keys[i] {
                j += 1;
            }
            cells.push(((keys[i] / nb) as u32, (keys[i] % nb) as u32, (j - i) as u64));
            i = j;
        }
        let mut rows = vec![0u64; a.num_labels()];
        let mut cols = vec![0u64; b.num_labels()];
        for &(r, c, v) in &cells {
            rows[r as usize] += v;
            cols[c as usize] += v;
        }
        Ok(Self {
            cells,
            rows,
            cols,
            n: keys.len() as u64,
        })
    }
}

fn check(a: &LabelMap, b: &LabelMap) -> Result<()> {
    if !a.same_shape(b) {
        return Err(Error::DimensionMismatch(alloc::format!(
            "{}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    Ok(())
}

fn pairs(c: u64) -> u128 {
    c as u128 * (c as u128).saturating_sub(1) / 2
}

/// Rand index of two partitions.
pub fn rand_index(a: &LabelMap, b: &LabelMap) -> Result<f64> {
    let t = Contingency::new(a, b)?;
    let total = pairs(t.n);
    if total == 0 {
        return Ok(1.0);
    }
    let both: u128 = t.cells.iter().map(|c| pairs(c.2)).sum();
    let sa: u128 = t.rows.iter().map(|&c| pairs(c)).sum();
    let sb: u128 = t.cols.iter().map(|&c| pairs(c)).sum();
    let agree = total + 2 * both - sa - sb;
    Ok(agree as f64 / total as f64)
}

fn plogp_sum(counts: impl Iterator<Item = u64>, n: u64) -> f64 {
    let nf = n as f64;
    let s: f64 = counts.filter(|&c| c > 0).map(|c| c as f64 * log(c as f64)).sum();
    log(nf) - s / nf
}

/// Variation of information of two partitions.
pub fn variation_of_information(a: &LabelMap, b: &LabelMap, base: VoiBase) -> Result<f64> {
    let t = Contingency::new(a, b)?;
    let ha = plogp_sum(t.rows.iter().copied(), t.n);
    let hb = plogp_sum(t.cols.iter().copied(), t.n);
    let hab = plogp_sum(t.cells.iter().map(|c| c.2), t.n);
    let v = (2.0 * hab - ha - hb).max(0.0);
    Ok(match base {
        VoiBase::Nat => v,
        VoiBase::Bits => v / core::f64::consts::LN_2,
    })
}

/// Global consistency error of two partitions.
pub fn global_consistency_error(a: &LabelMap, b: &LabelMap) -> Result<f64> {
    let t = Contingency::new(a, b)?;
    let (mut e1, mut e2) = (0.0, 0.0);
    for &(r, c, v) in &t.cells {
        let v = v as f64;
        let ar = t.rows[r as usize] as f64;
        let bc = t.cols[c as usize] as f64;
        e1 += v * (ar - v) / ar;
        e2 += v * (bc - v) / bc;
    }
    Ok(e1.min(e2) / t.n as f64)
}

/// Boundary displacement error of two partitions: the mean of the two
/// directional average distances between boundary pixel sets.
pub fn boundary_displacement_error(a: &LabelMap, b: &LabelMap) -> Result<f64> {
    check(a, b)?;
    let (w, h) = (a.width(), a.height());
    let ma = boundary_mask(a);
    let mb = boundary_mask(b);
    let da = distance_transform(&ma, w, h);
    let db = distance_transform(&mb, w, h);
    let mean_to = |from: &[bool], dist: &[f64]| {
        let (s, c) = from
            .iter()
            .zip(dist)
            .filter(|(m, _)| **m)
            .fold((0.0, 0usize), |(s, c), (_, d)| (s + d, c + 1));
        s / c as f64
    };
    Ok(0.5 * (mean_to(&ma, &db) + mean_to(&mb, &da)))
}

/// PRI against a set of annotations.
pub fn pri(seg: &LabelMap, gt: &[LabelMap]) -> Result<f64> {
    mean_over(gt, |g| rand_index(seg, g))
}

pub fn voi(seg: &LabelMap, gt: &[LabelMap], base: VoiBase) -> Result<f64> {
    mean_over(gt, |g| variation_of_information(seg, g, base))
}

pub fn gce(seg: &LabelMap, gt: &[LabelMap]) -> Result<f64> {
    mean_over(gt, |g| global_consistency_error(seg, g))
}

pub fn bde(seg: &LabelMap, gt: &[LabelMap]) -> Result<f64> {
    mean_over(gt, |g| boundary_displacement_error(seg, g))
}

fn mean_over(gt: &[LabelMap], f: impl Fn(&LabelMap) -> Result<f64>) -> Result<f64> {
    if gt.is_empty() {
        return Err(Error::InvalidParameter("no annotations".into()));
    }
    let mut s = 0.0;
    for g in gt {
        s += f(g)?;
    }
    Ok(s / gt.len() as f64)
}

/// Scores of one annotation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricScores {
    pub pri: f64,
    pub voi: f64,
    pub gce: f64,
    pub bde: f64,
}

/// All four metrics, averaged over annotations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub pri: f64,
    pub voi: f64,
    pub gce: f64,
    pub bde: f64,
    pub voi_base: VoiBase,
    pub per_annotation: Vec<MetricScores>,
}

pub fn evaluate(seg: &LabelMap, gt: &[LabelMap], base: VoiBase) -> Result<MetricReport> {
    if gt.is_empty() {
        return Err(Error::InvalidParameter("no annotations".into()));
    }
    let per_annotation = gt
        .iter()
        .map(|g| {
            Ok(MetricScores {
                pri: rand_index(seg, g)?,
                voi: variation_of_information(seg, g, base)?,
                gce: global_consistency_error(seg, g)?,
                bde: boundary_displacement_error(seg, g)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let k = per_annotation.len() as f64;
    let avg = |f: fn(&MetricScores) -> f64| per_annotation.iter().map(f).sum::<f64>() / k;
    Ok(MetricReport {
        pri: avg(|m| m.pri),
        voi: avg(|m| m.voi),
        gce: avg(|m| m.gce),
        bde: avg(|m| m.bde),
        voi_base: base,
        per_annotation,
    })
}
