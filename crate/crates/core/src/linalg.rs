//! Sparse storage and the symmetric eigen, least-squares and linear solves
//! shared by the pipeline stages. Dense kernels come from `nalgebra`.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Compressed sparse row matrix with sorted column indices per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Csr {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl Csr {
    /// Builds from per-row `(column, value)` lists. Entries are sorted by
    /// column and duplicates summed.
    pub fn from_rows(ncols: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        let nrows = rows.len();
        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            let start = indices.len();
            for (c, v) in row {
                assert!(c < ncols, "column {c} out of range {ncols}");
                if indices.len() > start && *indices.last().unwrap() == c {
                    *values.last_mut().unwrap() += v;
                } else {
                    indices.push(c);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Self {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.indptr[i]..self.indptr[i + 1];
        (&self.indices[r.clone()], &self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (idx, val) = self.row(i);
        match idx.binary_search(&j) {
            Ok(p) => val[p],
            Err(_) => 0.0,
        }
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.nrows)
            .map(|i| self.row(i).1.iter().sum())
            .collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.ncols];
        for (c, v) in self.indices.iter().zip(&self.values) {
            s[*c] += v;
        }
        s
    }

    pub fn scale(&mut self, factor: f64) {
        self.values.iter_mut().for_each(|v| *v *= factor);
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            let (idx, val) = self.row(i);
            for (c, v) in idx.iter().zip(val) {
                m[(i, *c)] = *v;
            }
        }
        m
    }
}

/// Leading eigenpairs of a symmetric matrix, largest eigenvalue first.
#[derive(Debug, Clone)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    /// One eigenvector per column.
    pub vectors: DMatrix<f64>,
}

fn normalize_signs(vectors: &mut DMatrix<f64>) {
    for mut col in vectors.column_iter_mut() {
        let mut best = 0usize;
        for i in 0..col.len() {
            if col[i].abs() > col[best].abs() + 1e-12 {
                best = i;
            }
        }
        if col[best] < 0.0 {
            col.neg_mut();
        }
    }
}

/// Top-`k` eigenpairs by dense decomposition.
pub fn sym_top_k_dense(m: &DMatrix<f64>, k: usize) -> EigenPairs {
    let n = m.nrows();
    let k = k.min(n);
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap()
            .then(a.cmp(&b))
    });
    let values = order[..k].iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, k);
    for (c, &i) in order[..k].iter().enumerate() {
        vectors.set_column(c, &eig.eigenvectors.column(i));
    }
    normalize_signs(&mut vectors);
    EigenPairs { values, vectors }
}

/// Orthonormalizes the columns of `w` against `basis` and against each
/// other (two Gram–Schmidt passes). Columns that vanish are replaced by
/// fresh random directions.
fn orthonormalize_against(
    basis: &DMatrix<f64>,
    w: &mut DMatrix<f64>,
    rng: &mut ChaCha8Rng,
) {
    let n = w.nrows();
    for j in 0..w.ncols() {
        let mut attempts = 0;
        loop {
            let before = w.column(j).norm();
            for _ in 0..2 {
                if basis.ncols() > 0 {
                    let coef = basis.tr_mul(&w.column(j));
                    let proj = basis * coef;
                    let mut col = w.column_mut(j);
                    col -= proj;
                }
                for p in 0..j {
                    let d = w.column(p).dot(&w.column(j));
                    let prev = w.column(p).clone_owned();
                    w.column_mut(j).axpy(-d, &prev, 1.0);
                }
            }
            let after = w.column(j).norm();
            if after > 1e-10 * before.max(f64::MIN_POSITIVE) && after > 0.0 {
                w.column_mut(j).scale_mut(1.0 / after);
                break;
            }
            attempts += 1;
            assert!(attempts < 8, "cannot extend an orthonormal basis of R^{n}");
            for i in 0..n {
                w[(i, j)] = StandardNormal.sample(rng);
            }
        }
    }
}

/// Parameters for [`sym_top_k_krylov`].
#[derive(Debug, Clone, Copy)]
pub struct KrylovOptions {
    /// Residual target relative to the largest Ritz value magnitude.
    pub tol: f64,
    pub max_restarts: usize,
    pub seed: u64,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_restarts: 400,
            seed: 0x5eed,
        }
    }
}

/// Top-`k` eigenpairs of a symmetric linear operator of order `n` by
/// restarted block Krylov iteration with full reorthogonalization and
/// Rayleigh–Ritz extraction. `apply(x, y)` must write `A x` into `y`
/// for an `n x b` block `x`.
///
/// Returns the pairs and the largest relative residual reached.
pub fn sym_top_k_krylov<F>(n: usize, k: usize, opts: KrylovOptions, mut apply: F) -> (EigenPairs, f64)
where
    F: FnMut(&DMatrix<f64>, &mut DMatrix<f64>),
{
    let k = k.min(n);
    let block = (k + 8).min(n);
    let max_basis = (3 * block).max(block + 32).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut x = DMatrix::from_fn(n, block, |_, _| StandardNormal.sample(&mut rng));
    orthonormalize_against(&DMatrix::zeros(n, 0), &mut x, &mut rng);

    let mut best: Option<(EigenPairs, f64)> = None;
    for _ in 0..=opts.max_restarts {
        let mut q = x.clone();
        let mut aq = DMatrix::zeros(n, block);
        apply(&x, &mut aq);
        let mut last = (0usize, block);
        while q.ncols() < max_basis {
            let (s, len) = last;
            let take = len.min(max_basis - q.ncols());
            let mut w = aq.columns(s, take).clone_owned();
            orthonormalize_against(&q, &mut w, &mut rng);
            let mut aw = DMatrix::zeros(n, take);
            apply(&w, &mut aw);
            let start = q.ncols();
            q = q.resize_horizontally(start + take, 0.0);
            q.columns_mut(start, take).copy_from(&w);
            aq = aq.resize_horizontally(start + take, 0.0);
            aq.columns_mut(start, take).copy_from(&aw);
            last = (start, take);
        }
        let mut h = q.tr_mul(&aq);
        let ht = h.transpose();
        h += ht;
        h *= 0.5;
        let small = sym_top_k_dense(&h, block);
        let ritz = &q * &small.vectors;
        let a_ritz = &aq * &small.vectors;
        let scale = small.values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        let mut worst = 0.0f64;
        for j in 0..k {
            let r = a_ritz.column(j) - ritz.column(j) * small.values[j];
            worst = worst.max(r.norm() / scale);
        }
        let mut vectors = ritz.columns(0, k).clone_owned();
        normalize_signs(&mut vectors);
        let pairs = EigenPairs {
            values: small.values[..k].to_vec(),
            vectors,
        };
        let improved = best.as_ref().is_none_or(|b| worst < b.1);
        if improved {
            best = Some((pairs, worst));
        }
        if worst <= opts.tol || max_basis == n {
            break;
        }
        x = ritz;
        orthonormalize_against(&DMatrix::zeros(n, 0), &mut x, &mut rng);
    }
    best.expect("at least one Ritz extraction")
}

/// Orders up to which eigenproblems are solved densely.
pub const DENSE_EIGEN_LIMIT: usize = 600;

/// Top-`k` eigenpairs of a symmetric sparse matrix, dense for small
/// orders and restarted block Krylov otherwise.
pub fn csr_top_k(m: &Csr, k: usize, seed: u64) -> EigenPairs {
    let n = m.nrows();
    if n <= DENSE_EIGEN_LIMIT {
        return sym_top_k_dense(&m.to_dense(), k);
    }
    let opts = KrylovOptions { seed, ..KrylovOptions::default() };
    sym_top_k_krylov(n, k, opts, |x, y| csr_mul_block(m, x, y)).0
}

/// `y = m x` for a dense block `x`.
pub fn csr_mul_block(m: &Csr, x: &DMatrix<f64>, y: &mut DMatrix<f64>) {
    y.fill(0.0);
    for c in 0..x.ncols() {
        let xc = x.column(c);
        let mut yc = y.column_mut(c);
        for i in 0..m.nrows() {
            let (idx, val) = m.row(i);
            let mut acc = 0.0;
            for (j, v) in idx.iter().zip(val) {
                acc += v * xc[*j];
            }
            yc[i] = acc;
        }
    }
}

/// Minimum-norm least-squares solution of `a x = b` via SVD.
pub fn lstsq_min_norm(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return DVector::zeros(n);
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.iter().fold(0.0f64, |x, &s| x.max(s));
    let cutoff = f64::EPSILON * (m.max(n) as f64) * smax;
    let u = svd.u.as_ref().unwrap();
    let vt = svd.v_t.as_ref().unwrap();
    let mut x = DVector::zeros(n);
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s > cutoff && s > 0.0 {
            let c = u.column(i).dot(b) / s;
            x.axpy(c, &vt.row(i).transpose(), 1.0);
        }
    }
    x
}

/// Ratio of extreme eigenvalues of a symmetric positive semidefinite matrix.
pub fn spd_condition(m: &DMatrix<f64>) -> f64 {
    let eig = SymmetricEigen::new(m.clone());
    let max = eig.eigenvalues.iter().fold(f64::MIN, |a, &b| a.max(b));
    let min = eig.eigenvalues.iter().fold(f64::MAX, |a, &b| a.min(b));
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}
