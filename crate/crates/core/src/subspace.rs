//! Sparse self-expression by orthogonal matching pursuit and the
//! symmetrized coefficient affinity.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::linalg::Csr;

/// Sparse OMP solution: `coefs[i]` multiplies dictionary column `support[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct OmpSolution {
    pub support: Vec<usize>,
    pub coefs: Vec<f64>,
    pub residual_norm: f64,
}

/// State visible to a trace callback after each least-squares refit.
pub struct OmpStep<'a> {
    pub support: &'a [usize],
    pub residual: &'a DVector<f64>,
}

fn greedy<T: FnMut(OmpStep<'_>)>(
    dict: &DMatrix<f64>,
    f: &DVector<f64>,
    psi: usize,
    tau: f64,
    exclude: Option<usize>,
    mut trace: T,
) -> OmpSolution {
    let fnorm = f.norm();
    let empty = OmpSolution {
        support: Vec::new(),
        coefs: Vec::new(),
        residual_norm: fnorm,
    };
    if fnorm == 0.0 || psi == 0 {
        return empty;
    }
    let col_norms: Vec<f64> = dict.column_iter().map(|c| c.norm()).collect();
    let mut blocked = vec![false; dict.ncols()];
    if let Some(j) = exclude {
        blocked[j] = true;
    }
    for (j, &cn) in col_norms.iter().enumerate() {
        if cn == 0.0 {
            blocked[j] = true;
        }
    }
    let mut support: Vec<usize> = Vec::with_capacity(psi);
    let mut q: Vec<DVector<f64>> = Vec::with_capacity(psi);
    let mut r_tri = DMatrix::<f64>::zeros(psi, psi);
    let mut residual = f.clone();

    while support.len() < psi && residual.norm() > tau * fnorm {
        let corr = dict.tr_mul(&residual);
        let mut best: Option<usize> = None;
        for j in 0..dict.ncols() {
            if blocked[j] {
                continue;
            }
            if best.is_none_or(|b| corr[j].abs() > corr[b].abs()) {
                best = Some(j);
            }
        }
        let Some(j) = best else { break };
        if corr[j] == 0.0 {
            break;
        }
        blocked[j] = true;

        let a = dict.column(j).clone_owned();
        let mut v = a.clone();
        let mut proj = vec![0.0; q.len()];
        for _ in 0..2 {
            for (p, qi) in q.iter().enumerate() {
                let c = qi.dot(&v);
                proj[p] += c;
                v.axpy(-c, qi, 1.0);
            }
        }
        let rho = v.norm();
        if rho <= 1e-10 * col_norms[j] {
            continue;
        }
        let s = support.len();
        for (p, c) in proj.iter().enumerate() {
            r_tri[(p, s)] = *c;
        }
        r_tri[(s, s)] = rho;
        q.push(v / rho);
        support.push(j);

        residual.copy_from(f);
        for _ in 0..2 {
            for qi in &q {
                let c = qi.dot(&residual);
                residual.axpy(-c, qi, 1.0);
            }
        }
        trace(OmpStep {
            support: &support,
            residual: &residual,
        });
    }

    let s = support.len();
    let z: Vec<f64> = q.iter().map(|qi| qi.dot(f)).collect();
    let mut coefs = vec![0.0; s];
    for i in (0..s).rev() {
        let mut acc = z[i];
        for k in i + 1..s {
            acc -= r_tri[(i, k)] * coefs[k];
        }
        coefs[i] = acc / r_tri[(i, i)];
    }
    OmpSolution {
        support,
        coefs,
        residual_norm: residual.norm(),
    }
}

/// OMP approximation of `f` by at most `psi` columns of `dict`. Stops early
/// once the residual norm drops to `tau * |f|`.
pub fn omp_column(dict: &DMatrix<f64>, f: &DVector<f64>, psi: usize, tau: f64) -> OmpSolution {
    greedy(dict, f, psi, tau, None, |_| {})
}

/// [`omp_column`] reporting every refit to `trace`.
pub fn omp_column_traced<T: FnMut(OmpStep<'_>)>(
    dict: &DMatrix<f64>,
    f: &DVector<f64>,
    psi: usize,
    tau: f64,
    trace: T,
) -> OmpSolution {
    greedy(dict, f, psi, tau, None, trace)
}

/// Column-sparse self-expression coefficients with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseCoeffMatrix {
    /// Nonzeros of column `j` as `(row, value)`, rows ascending.
    pub columns: Vec<Vec<(usize, f64)>>,
    pub psi: usize,
    pub tau: f64,
}

impl SparseCoeffMatrix {
    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.columns.len();
        let mut m = DMatrix::zeros(n, n);
        for (j, col) in self.columns.iter().enumerate() {
            for &(i, v) in col {
                m[(i, j)] = v;
            }
        }
        m
    }
}

/// Solves one OMP problem per column against all other columns.
pub fn spr_column(f: &FeatureMatrix, j: usize, psi: usize, tau: f64) -> Vec<(usize, f64)> {
    let target = f.data.column(j).clone_owned();
    let sol = greedy(&f.data, &target, psi, tau, Some(j), |_| {});
    let mut col: Vec<(usize, f64)> = sol
        .support
        .into_iter()
        .zip(sol.coefs)
        .filter(|e| e.1 != 0.0)
        .collect();
    col.sort_by_key(|e| e.0);
    col
}

pub fn spr_matrix(f: &FeatureMatrix, psi: usize, tau: f64) -> Result<SparseCoeffMatrix> {
    if f.len() < 2 {
        return Err(Error::InvalidParameter("self-expression needs at least two columns".into()));
    }
    if psi == 0 {
        return Err(Error::InvalidParameter("psi must be at least 1".into()));
    }
    let columns = (0..f.len()).map(|j| spr_column(f, j, psi, tau)).collect();
    Ok(SparseCoeffMatrix { columns, psi, tau })
}

/// `|C| + |C|^T` as a sparse symmetric matrix.
pub fn symmetrize(c: &SparseCoeffMatrix) -> Csr {
    let n = c.len();
    let mut rows = vec![Vec::new(); n];
    for (j, col) in c.columns.iter().enumerate() {
        for &(i, v) in col {
            rows[i].push((j, v.abs()));
            rows[j].push((i, v.abs()));
        }
    }
    Csr::from_rows(n, rows)
}
