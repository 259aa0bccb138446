use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use libm::sqrt;
use nalgebra::DMatrix;

use super::BipartiteGraph;
use crate::cluster::kmeans;
use crate::error::{Error, Result};
use crate::image::LabelMap;
use crate::linalg::{sym_top_k_dense, sym_top_k_krylov, KrylovOptions, DENSE_EIGEN_LIMIT};

/// Pixel partition with provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct Segmentation {
    pub labels: LabelMap,
    /// Requested group count.
    pub k_t: usize,
    /// Group count actually used after capping.
    pub k_used: usize,
    pub config_hash: String,
}

/// Below this the transfer factor `1/sqrt(mu)` is skipped.
const MU_FLOOR: f64 = 1e-12;

/// Transfer cut with the small-side eigenproblem solved once for the
/// largest group count and reused for every smaller one.
#[derive(Debug, Clone)]
pub struct TcutSolver {
    width: usize,
    height: usize,
    /// Pixel to distinct-row group.
    pixel_group: Vec<u32>,
    group_weight: Vec<f64>,
    /// Full-graph eigenvalues, ascending.
    gammas: Vec<f64>,
    /// Transferred vectors on the pixel groups, `groups x k`.
    embedding: DMatrix<f64>,
    /// Transferred vectors on all X rows, `n_x x k`.
    x_vectors: DMatrix<f64>,
    /// Eigenvectors on the Y side, `n_y x k`.
    y_vectors: DMatrix<f64>,
    live_y: usize,
    seed: u64,
    restarts: usize,
}

impl TcutSolver {
    /// Prepares the partition for group counts up to `k_max`.
    pub fn new(g: &BipartiteGraph, k_max: usize, seed: u64, restarts: usize) -> Result<Self> {
        let b = &g.b;
        let (n_x, n_y) = (b.nrows(), b.ncols());
        if k_max == 0 || k_max > n_y {
            return Err(Error::InvalidParameter(alloc::format!("k={k_max} for {n_y} superpixels")));
        }
        let dx = b.row_sums();
        let dy = b.col_sums();
        if let Some(i) = dx.iter().position(|&d| d <= 0.0) {
            return Err(Error::Invariant(alloc::format!("X node {i} has zero degree")));
        }
        let live: Vec<usize> = (0..n_y).filter(|&j| dy[j] > 0.0).collect();
        let mut slot = vec![usize::MAX; n_y];
        for (p, &j) in live.iter().enumerate() {
            slot[j] = p;
        }
        let inv_sqrt_dy: Vec<f64> = dy.iter().map(|&d| if d > 0.0 { 1.0 / sqrt(d) } else { 0.0 }).collect();

        let mut group_of: BTreeMap<Vec<(usize, u64)>, u32> = BTreeMap::new();
        let mut pixel_group = Vec::with_capacity(g.n_pixels);
        let mut group_row = Vec::new();
        let mut group_weight: Vec<f64> = Vec::new();
        for p in 0..g.n_pixels {
            let (idx, val) = b.row(p);
            let key: Vec<(usize, u64)> = idx.iter().zip(val).map(|(&j, v)| (j, v.to_bits())).collect();
            let next = group_row.len() as u32;
            let gid = *group_of.entry(key).or_insert(next);
            if gid == next {
                group_row.push(p);
                group_weight.push(0.0);
            }
            group_weight[gid as usize] += 1.0;
            pixel_group.push(gid);
        }
        drop(group_of);
        let mut reduced: Vec<(usize, f64)> = group_row
            .iter()
            .zip(&group_weight)
            .map(|(&r, &c)| (r, c / dx[r]))
            .collect();
        reduced.extend((g.n_pixels..n_x).map(|r| (r, 1.0 / dx[r])));

        let nl = live.len();
        let k = k_max.min(nl);
        let eig = if nl <= DENSE_EIGEN_LIMIT {
            let mut z = DMatrix::zeros(nl, nl);
            for &(r, w) in &reduced {
                let (idx, val) = b.row(r);
                for (a, (&j, &bj)) in idx.iter().zip(val).enumerate() {
                    let sj = slot[j];
                    let cj = w * bj * inv_sqrt_dy[j];
                    for (&l, &bl) in idx[a..].iter().zip(&val[a..]) {
                        let v = cj * bl * inv_sqrt_dy[l];
                        z[(sj, slot[l])] += v;
                        if l != j {
                            z[(slot[l], sj)] += v;
                        }
                    }
                }
            }
            sym_top_k_dense(&z, k)
        } else {
            let apply = |x: &DMatrix<f64>, y: &mut DMatrix<f64>| {
                y.fill(0.0);
                let mut t = vec![0.0; x.ncols()];
                for &(r, w) in &reduced {
                    let (idx, val) = b.row(r);
                    t.iter_mut().for_each(|v| *v = 0.0);
                    for (&j, &bj) in idx.iter().zip(val) {
                        let s = bj * inv_sqrt_dy[j];
                        for (c, tc) in t.iter_mut().enumerate() {
                            *tc += s * x[(slot[j], c)];
                        }
                    }
                    for (&j, &bj) in idx.iter().zip(val) {
                        let s = w * bj * inv_sqrt_dy[j];
                        for (c, tc) in t.iter().enumerate() {
                            y[(slot[j], c)] += s * tc;
                        }
                    }
                }
            };
            let opts = KrylovOptions { seed, ..KrylovOptions::default() };
            sym_top_k_krylov(nl, k, opts, apply).0
        };

        let mut y_vectors = DMatrix::zeros(n_y, k);
        let mut x_vectors = DMatrix::zeros(n_x, k);
        let mut gammas = Vec::with_capacity(k);
        for c in 0..k {
            let mu = eig.values[c].clamp(0.0, 1.0);
            gammas.push(1.0 - sqrt(mu));
            for (p, &j) in live.iter().enumerate() {
                y_vectors[(j, c)] = eig.vectors[(p, c)] * inv_sqrt_dy[j];
            }
            let factor = if mu > MU_FLOOR { 1.0 / sqrt(mu) } else { 1.0 };
            for r in 0..n_x {
                let (idx, val) = b.row(r);
                let s: f64 = idx.iter().zip(val).map(|(&j, &v)| v * y_vectors[(j, c)]).sum();
                x_vectors[(r, c)] = s / dx[r] * factor;
            }
            let mut norm2 = 0.0;
            for r in 0..n_x {
                norm2 += dx[r] * x_vectors[(r, c)] * x_vectors[(r, c)];
            }
            for j in 0..n_y {
                norm2 += dy[j] * y_vectors[(j, c)] * y_vectors[(j, c)];
            }
            if norm2 > 0.0 {
                let s = 1.0 / sqrt(norm2);
                x_vectors.column_mut(c).scale_mut(s);
                y_vectors.column_mut(c).scale_mut(s);
            }
        }
        let embedding = DMatrix::from_fn(group_row.len(), k, |gi, c| x_vectors[(group_row[gi], c)]);
        Ok(Self {
            width: g.width,
            height: g.height,
            pixel_group,
            group_weight,
            gammas,
            embedding,
            x_vectors,
            y_vectors,
            live_y: nl,
            seed,
            restarts,
        })
    }

    /// Smallest normalized-Laplacian eigenvalues of the full graph on
    /// `X + Y`, ascending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.gammas
    }

    /// Full-graph eigenvectors restricted to X and Y, normalized so that
    /// `f^T D f = 1`.
    pub fn eigenvectors(&self) -> (&DMatrix<f64>, &DMatrix<f64>) {
        (&self.x_vectors, &self.y_vectors)
    }

    pub fn max_groups(&self) -> usize {
        self.gammas.len()
    }

    /// Number of distinct pixel rows.
    pub fn pixel_groups(&self) -> usize {
        self.group_weight.len()
    }

    /// Partition of the pixels into at most `k_t` groups. Counts above the
    /// number of connected Y nodes or the prepared maximum are capped.
    pub fn segment(&self, k_t: usize) -> Result<Segmentation> {
        if k_t == 0 {
            return Err(Error::InvalidParameter("k_t must be at least 1".into()));
        }
        let k = k_t.min(self.live_y).min(self.gammas.len()).max(1);
        let labels = if k == 1 || self.pixel_group.is_empty() {
            LabelMap::constant(self.width, self.height)?
        } else {
            let groups = self.embedding.nrows();
            let mut pts = Vec::with_capacity(groups * k);
            for gi in 0..groups {
                let row = self.embedding.row(gi).columns(0, k).clone_owned();
                let n = row.norm();
                let s = if n > 0.0 { 1.0 / n } else { 0.0 };
                pts.extend(row.iter().map(|v| v * s));
            }
            let km = kmeans(&pts, k, Some(&self.group_weight), k, self.seed, 300, self.restarts);
            let raw: Vec<u32> = self.pixel_group.iter().map(|&gi| km.labels[gi as usize] as u32).collect();
            LabelMap::from_u32(self.width, self.height, &raw)?
        };
        Ok(Segmentation {
            labels,
            k_t,
            k_used: k,
            config_hash: String::new(),
        })
    }
}

/// One-shot transfer cut into `k_t` groups.
pub fn tcut(g: &BipartiteGraph, k_t: usize, seed: u64) -> Result<Segmentation> {
    let k = k_t.min(g.n_y()).max(1);
    TcutSolver::new(g, k, seed, 1)?.segment(k_t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Csr;

    fn graph(rows: Vec<Vec<(usize, f64)>>, ny: usize, w: usize, h: usize) -> BipartiteGraph {
        BipartiteGraph {
            b: Csr::from_rows(ny, rows),
            n_pixels: w * h,
            width: w,
            height: h,
            y_offsets: vec![0, ny],
            beta: 1e-3,
        }
    }

    #[test]
    fn disconnected_blocks_split() {
        // 4 pixels: two attach to y0, two to y1; superpixel rows keep blocks apart
        let rows = vec![
            vec![(0, 1e-3)],
            vec![(0, 1e-3)],
            vec![(1, 1e-3)],
            vec![(1, 1e-3)],
            vec![(0, 1.0)],
            vec![(1, 1.0)],
        ];
        let g = graph(rows, 2, 2, 2);
        let s = tcut(&g, 2, 0).unwrap();
        assert_eq!(s.labels.labels(), &[0, 0, 1, 1]);
        let one = tcut(&g, 1, 0).unwrap();
        assert_eq!(one.labels.num_labels(), 1);
        let solver = TcutSolver::new(&g, 2, 0, 1).unwrap();
        assert!(solver.eigenvalues().iter().all(|&gm| gm.abs() < 1e-12));
        assert_eq!(solver.pixel_groups(), 2);
    }

    #[test]
    fn group_count_is_capped_by_live_superpixels() {
        let rows = vec![vec![(0, 1.0)], vec![(0, 1.0)]];
        let g = graph(rows, 2, 2, 1);
        let s = TcutSolver::new(&g, 2, 0, 1).unwrap().segment(2).unwrap();
        assert_eq!(s.k_used, 1);
        assert_eq!(s.k_t, 2);
    }

    #[test]
    fn eigenvalues_match_full_graph() {
        use nalgebra::SymmetricEigen;
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let (nx, ny) = (14, 5);
        let rows: Vec<Vec<(usize, f64)>> = (0..nx)
            .map(|i| {
                let mut r: Vec<(usize, f64)> = Vec::new();
                for j in 0..ny {
                    if rng.random::<f64>() < 0.4 {
                        r.push((j, rng.random::<f64>()));
                    }
                }
                r.push((i % ny, 0.5));
                r
            })
            .collect();
        let g = graph(rows, ny, nx, 1);
        let solver = TcutSolver::new(&g, 3, 1, 1).unwrap();
        let b = g.b.to_dense();
        let n = nx + ny;
        let mut w = DMatrix::zeros(n, n);
        w.view_mut((0, nx), (nx, ny)).copy_from(&b);
        w.view_mut((nx, 0), (ny, nx)).copy_from(&b.transpose());
        let d: Vec<f64> = (0..n).map(|i| w.row(i).sum()).collect();
        let l = DMatrix::from_fn(n, n, |i, j| {
            let id = if i == j { 1.0 } else { 0.0 };
            id - w[(i, j)] / (d[i] * d[j]).sqrt()
        });
        let mut ev: Vec<f64> = SymmetricEigen::new(l).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        for (a, b) in solver.eigenvalues().iter().zip(&ev) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }
}
