use alloc::vec::Vec;

use libm::{pow, sqrt};
use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

/// Symmetric similarity with the preference on the diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseSimilarity {
    pub s: DMatrix<f64>,
    pub preference: f64,
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// `S_ij = -(d_ij^e + p_ij^g)^(1/2)` where `d_ij` is the Euclidean feature
/// distance and `p_ij` the summed distance between consecutive columns
/// from `i` to `j`. The diagonal holds the median off-diagonal value.
pub fn similarity(f: &FeatureMatrix, e: f64, g: f64) -> Result<PairwiseSimilarity> {
    if !(e > 0.0 && g > 0.0) {
        return Err(Error::InvalidParameter(alloc::format!("exponents e={e}, g={g}")));
    }
    let n = f.len();
    let x = &f.data;
    let mut prefix = Vec::with_capacity(n);
    prefix.push(0.0);
    for t in 1..n {
        let step = (x.column(t) - x.column(t - 1)).norm();
        prefix.push(prefix[t - 1] + step);
    }
    let mut s = DMatrix::zeros(n, n);
    let mut off = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let d = (x.column(i) - x.column(j)).norm();
            let path = prefix[j] - prefix[i];
            let v = -sqrt(pow(d, e) + pow(path, g));
            s[(i, j)] = v;
            s[(j, i)] = v;
            off.push(v);
        }
    }
    let preference = median(off);
    for i in 0..n {
        s[(i, i)] = preference;
    }
    Ok(PairwiseSimilarity { s, preference })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(v: &[f64]) -> FeatureMatrix {
        FeatureMatrix::new(DMatrix::from_row_slice(1, v.len(), v), 0).unwrap()
    }

    #[test]
    fn zero_when_both_terms_vanish() {
        let s = similarity(&line(&[2.0, 2.0, 2.0]), 3.0, 5.0).unwrap();
        assert_eq!(s.s[(0, 2)], 0.0);
    }

    #[test]
    fn two_points_unit_distance() {
        let s = similarity(&line(&[0.0, 1.0]), 3.0, 5.0).unwrap();
        assert!((s.s[(0, 1)] + 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(s.s[(1, 0)], s.s[(0, 1)]);
    }

    #[test]
    fn path_term_sums_consecutive_steps() {
        let s = similarity(&line(&[0.0, 1.0, 3.0]), 2.0, 2.0).unwrap();
        assert!((s.s[(0, 2)] + 18f64.sqrt()).abs() < 1e-14);
        assert!((s.s[(0, 1)] + 2f64.sqrt()).abs() < 1e-14);
        assert!((s.s[(1, 2)] + 8f64.sqrt()).abs() < 1e-14);
        // median of {-sqrt2, -sqrt8, -sqrt18}
        assert_eq!(s.preference, s.s[(1, 2)]);
        assert_eq!(s.s[(1, 1)], s.preference);
    }

    #[test]
    fn off_diagonal_nonpositive_and_symmetric() {
        let f = FeatureMatrix::new(
            DMatrix::from_fn(3, 9, |r, c| ((r * 7 + c * 3) % 5) as f64),
            0,
        )
        .unwrap();
        let s = similarity(&f, 3.0, 5.0).unwrap();
        for i in 0..9 {
            for j in 0..9 {
                assert_eq!(s.s[(i, j)], s.s[(j, i)]);
                if i != j {
                    assert!(s.s[(i, j)] <= 0.0);
                }
            }
        }
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(alloc::vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(alloc::vec![4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
