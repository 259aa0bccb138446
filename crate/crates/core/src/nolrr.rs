//! Single-pass online low-rank representation with fixed-size
//! accumulators, and the symmetric graph read out of its factors.

use alloc::vec::Vec;

use libm::sqrt;
use nalgebra::{Cholesky, DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::spd_condition;

/// Which outer product feeds the dictionary-side accumulator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MUpdate {
    /// `M += f v^T`.
    #[default]
    FeatureCode,
    /// `M += y u^T`.
    SampleCode,
}

/// How the coefficient factors are obtained once the pass is over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Readout {
    /// The per-step `u_t`, `v_t` as produced during the pass.
    Collected,
    /// Both factors re-solved in closed form against the final dictionary.
    #[default]
    Refit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NolrrParams {
    pub lambda1: f64,
    /// Requested rank; clamped to the sample count.
    pub rank: usize,
    pub seed: u64,
    pub m_update: MUpdate,
    pub readout: Readout,
}

impl Default for NolrrParams {
    fn default() -> Self {
        Self {
            lambda1: 1.0,
            rank: 50,
            seed: 0,
            m_update: MUpdate::FeatureCode,
            readout: Readout::Refit,
        }
    }
}

/// Condition number above which the dictionary update switches to block
/// coordinate descent.
const COND_LIMIT: f64 = 1e10;
const BCD_PASSES: usize = 10;
const BCD_TOL: f64 = 1e-8;

/// Online solver state.
#[derive(Debug, Clone, PartialEq)]
pub struct NolrrState {
    /// Basis dictionary, `n x d`.
    pub dict: DMatrix<f64>,
    /// `sum v v^T`, `d x d`.
    pub a_acc: DMatrix<f64>,
    /// `sum f v^T`, `n x d`.
    pub b_acc: DMatrix<f64>,
    /// Dictionary-side accumulator, `n x d`.
    pub m_acc: DMatrix<f64>,
    /// Collected `u_t`, one row per step.
    pub u: Vec<DVector<f64>>,
    /// Collected `v_t`, one row per step.
    pub v: Vec<DVector<f64>>,
    pub t: usize,
    pub lambda1: f64,
    pub lambda2_ini: f64,
    pub m_update: MUpdate,
    sum_f2: f64,
    sum_u2: f64,
}

impl NolrrState {
    /// Fresh state for `n`-dimensional samples, `samples` of which will be
    /// streamed. The rank is `min(rank, samples)`.
    pub fn new(n: usize, rank: usize, samples: usize, params: &NolrrParams) -> Result<Self> {
        if n == 0 || rank == 0 {
            return Err(Error::InvalidParameter(alloc::format!("n={n}, rank={rank}")));
        }
        if !(params.lambda1 > 0.0) {
            return Err(Error::InvalidParameter(alloc::format!("lambda1={}", params.lambda1)));
        }
        let d = rank.min(samples.max(1));
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let s = 1.0 / sqrt(n as f64);
        let dict = DMatrix::from_fn(n, d, |_, _| {
            let z: f64 = StandardNormal.sample(&mut rng);
            z * s
        });
        Ok(Self {
            dict,
            a_acc: DMatrix::zeros(d, d),
            b_acc: DMatrix::zeros(n, d),
            m_acc: DMatrix::zeros(n, d),
            u: Vec::with_capacity(samples),
            v: Vec::with_capacity(samples),
            t: 0,
            lambda1: params.lambda1,
            lambda2_ini: 1.0 / sqrt(n as f64),
            m_update: params.m_update,
            sum_f2: 0.0,
            sum_u2: 0.0,
        })
    }

    pub fn dim(&self) -> usize {
        self.dict.nrows()
    }

    pub fn rank(&self) -> usize {
        self.dict.ncols()
    }

    /// Weight of the dictionary term after `t` samples.
    pub fn lambda2_at(&self, t: usize) -> f64 {
        sqrt(t as f64) * self.lambda2_ini
    }

    /// Number of stored solver values other than the collected factors.
    pub fn solver_state_len(&self) -> usize {
        self.dict.len() + self.a_acc.len() + self.b_acc.len() + self.m_acc.len()
    }

    /// `argmin_v lambda1/2 |f - D v|^2 + 1/2 |v|^2`.
    pub fn solve_v(&self, f: &DVector<f64>) -> DVector<f64> {
        let d = self.rank();
        let l1 = self.lambda1;
        let g = self.dict.tr_mul(&self.dict) * l1 + DMatrix::identity(d, d);
        let rhs = self.dict.tr_mul(f) * l1;
        Cholesky::new(g).expect("ridge system is positive definite").solve(&rhs)
    }

    /// Consumes one sample.
    pub fn step(&mut self, f: &DVector<f64>, y: &DVector<f64>) -> Result<()> {
        if f.len() != self.dim() || y.len() != self.dim() {
            return Err(Error::DimensionMismatch(alloc::format!(
                "sample of length {} for dimension {}",
                f.len(),
                self.dim()
            )));
        }
        if let Some(i) = f.iter().chain(y.iter()).position(|x| !x.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        self.t += 1;
        let l1 = self.lambda1;
        let l2 = self.lambda2_at(self.t);
        let v = self.solve_v(f);
        let u = (&self.dict - &self.m_acc).tr_mul(y) * (l2 / (l2 * y.norm_squared() + 1.0));

        self.a_acc.ger(1.0, &v, &v, 1.0);
        self.b_acc.ger(1.0, f, &v, 1.0);
        match self.m_update {
            MUpdate::FeatureCode => self.m_acc.ger(1.0, f, &v, 1.0),
            MUpdate::SampleCode => self.m_acc.ger(1.0, y, &u, 1.0),
        }
        self.sum_f2 += f.norm_squared();
        self.sum_u2 += u.norm_squared();

        let d = self.rank();
        let g = &self.a_acc * l1 + DMatrix::identity(d, d) * l2;
        let e = &self.b_acc * l1 + &self.m_acc * l2;
        self.dict = if spd_condition(&g) < COND_LIMIT {
            dictionary_closed_form(&g, &e)
        } else {
            dictionary_bcd(&g, &e, &self.dict, BCD_PASSES, BCD_TOL)
        };
        self.u.push(u);
        self.v.push(v);
        Ok(())
    }

    /// Running surrogate `g_t(D)` of the current dictionary, built from the
    /// stored per-step coefficients.
    pub fn surrogate(&self) -> f64 {
        if self.t == 0 {
            return 0.0;
        }
        let l1 = self.lambda1;
        let l2 = self.lambda2_at(self.t);
        let dtd = self.dict.tr_mul(&self.dict);
        let fit = self.sum_f2 - 2.0 * self.dict.dot(&self.b_acc) + dtd.dot(&self.a_acc);
        let loss1 = 0.5 * l1 * fit + 0.5 * self.a_acc.trace();
        let loss2 = 0.5 * self.sum_u2 + 0.5 * l2 * (&self.dict - &self.m_acc).norm_squared();
        (loss1 + loss2) / self.t as f64
    }

    /// Coefficient factors `(U, V)`, one row per sample, for the samples
    /// in `f` (columns, in streaming order).
    pub fn factors(&self, f: &DMatrix<f64>, readout: Readout) -> (DMatrix<f64>, DMatrix<f64>) {
        let d = self.rank();
        match readout {
            Readout::Collected => {
                let m = self.u.len();
                (
                    DMatrix::from_fn(m, d, |i, j| self.u[i][j]),
                    DMatrix::from_fn(m, d, |i, j| self.v[i][j]),
                )
            }
            Readout::Refit => {
                let n = self.dim();
                let l1 = self.lambda1;
                let l2 = self.lambda2_at(f.ncols());
                let g = self.dict.tr_mul(&self.dict) * l1 + DMatrix::identity(d, d);
                let rhs = self.dict.tr_mul(f) * l1;
                let v = Cholesky::new(g).expect("positive definite").solve(&rhs).transpose();
                let h = f * f.transpose() * l2 + DMatrix::identity(n, n);
                let hd = Cholesky::new(h).expect("positive definite").solve(&self.dict);
                let u = f.tr_mul(&hd) * l2;
                (u, v)
            }
        }
    }
}

/// `D = E G^-1` for symmetric positive definite `G`.
pub fn dictionary_closed_form(g: &DMatrix<f64>, e: &DMatrix<f64>) -> DMatrix<f64> {
    let chol = Cholesky::new(g.clone()).expect("positive definite");
    chol.solve(&e.transpose()).transpose()
}

/// Quadratic `Tr(D^T D G) - 2 Tr(D^T E)` minimized by the dictionary update.
pub fn dictionary_objective(g: &DMatrix<f64>, e: &DMatrix<f64>, d: &DMatrix<f64>) -> f64 {
    (d.tr_mul(d)).dot(g) - 2.0 * d.dot(e)
}

/// Column-wise block coordinate descent on [`dictionary_objective`] from
/// `start`, stopping at `max_passes` or a relative change below `tol`.
pub fn dictionary_bcd(
    g: &DMatrix<f64>,
    e: &DMatrix<f64>,
    start: &DMatrix<f64>,
    max_passes: usize,
    tol: f64,
) -> DMatrix<f64> {
    let mut d = start.clone();
    let mut prev = dictionary_objective(g, e, &d);
    for _ in 0..max_passes {
        for j in 0..d.ncols() {
            let gjj = g[(j, j)];
            if gjj <= 0.0 {
                continue;
            }
            let mut col = e.column(j).clone_owned() - &d * g.column(j);
            col.axpy(gjj, &d.column(j), 1.0);
            d.set_column(j, &(col / gjj));
        }
        let obj = dictionary_objective(g, e, &d);
        let change = (prev - obj).abs() / prev.abs().max(f64::MIN_POSITIVE);
        prev = obj;
        if change < tol {
            break;
        }
    }
    d
}

/// Streams the columns of `f` through a fresh solver.
pub fn run(f: &DMatrix<f64>, params: &NolrrParams) -> Result<NolrrState> {
    let mut state = NolrrState::new(f.nrows(), params.rank, f.ncols(), params)?;
    for t in 0..f.ncols() {
        let x = f.column(t).clone_owned();
        state.step(&x, &x)?;
    }
    Ok(state)
}

/// `(|C| + |C|^T) / 2` with `C = U V^T`.
pub fn graph_from_factors(u: &DMatrix<f64>, v: &DMatrix<f64>) -> DMatrix<f64> {
    let c = u * v.transpose();
    let mut w = c.abs();
    let wt = w.transpose();
    w += wt;
    w *= 0.5;
    w
}

/// Long-range graph over the streamed samples.
#[derive(Debug, Clone, PartialEq)]
pub struct NolrrGraph {
    pub w: DMatrix<f64>,
    /// Superpixel index of each row.
    pub node_index: Vec<usize>,
}

/// Runs the online solver over the feature columns of `nodes` and reads
/// out the graph.
pub fn nolrr_graph(features: &DMatrix<f64>, nodes: &[usize], params: &NolrrParams) -> Result<NolrrGraph> {
    let cols: Vec<_> = nodes.iter().map(|&i| features.column(i)).collect();
    if cols.is_empty() {
        return Ok(NolrrGraph { w: DMatrix::zeros(0, 0), node_index: Vec::new() });
    }
    let f = DMatrix::from_columns(&cols);
    let state = run(&f, params)?;
    let (u, v) = state.factors(&f, params.readout);
    Ok(NolrrGraph {
        w: graph_from_factors(&u, &v),
        node_index: nodes.to_vec(),
    })
}
