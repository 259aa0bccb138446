//! Per-superpixel mean L*a*b* features and sequential exponential
//! smoothing of the feature sequence.

use alloc::format;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::image::RasterImage;
use crate::superpixel::SuperpixelScale;

/// Column feature matrix, one column per superpixel.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub data: DMatrix<f64>,
    pub scale_id: usize,
    pub smoothed: bool,
}

impl FeatureMatrix {
    pub fn new(data: DMatrix<f64>, scale_id: usize) -> Result<Self> {
        if data.nrows() == 0 {
            return Err(Error::InvalidParameter("feature dimension is zero".into()));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self {
            data,
            scale_id,
            smoothed: false,
        })
    }

    /// Feature dimension.
    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    /// Number of columns.
    pub fn len(&self) -> usize {
        self.data.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.data.ncols() == 0
    }
}

/// Mean L*a*b* colour of each superpixel.
pub fn mlab(scale: &SuperpixelScale, img: &RasterImage) -> Result<FeatureMatrix> {
    let labels = &scale.labels;
    if labels.width() != img.width() || labels.height() != img.height() {
        return Err(Error::DimensionMismatch(format!(
            "labels {}x{} vs image {}x{}",
            labels.width(),
            labels.height(),
            img.width(),
            img.height()
        )));
    }
    let n = labels.num_labels();
    let mut sum = DMatrix::zeros(3, n);
    for (i, &l) in labels.labels().iter().enumerate() {
        let p = img.pixel(i);
        for c in 0..3 {
            sum[(c, l as usize)] += p[c];
        }
    }
    for (j, &a) in scale.areas.iter().enumerate() {
        sum.column_mut(j).scale_mut(1.0 / a as f64);
    }
    FeatureMatrix::new(sum, scale.scale_id)
}

/// Single exponential smoothing over columns in index order:
/// `s_0 = f_0`, `s_t = alpha f_t + (1 - alpha) s_{t-1}`.
pub fn ikde_smooth(f: &FeatureMatrix, alpha: f64) -> Result<FeatureMatrix> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidParameter(format!("alpha={alpha} outside (0,1]")));
    }
    if f.smoothed {
        return Err(Error::InvalidParameter("features already smoothed".into()));
    }
    let mut out = f.clone();
    out.smoothed = true;
    if alpha == 1.0 {
        return Ok(out);
    }
    for t in 1..out.len() {
        for c in 0..out.dim() {
            let prev = out.data[(c, t - 1)];
            out.data[(c, t)] = alpha * f.data[(c, t)] + (1.0 - alpha) * prev;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::LabelMap;
    use alloc::vec;
    use alloc::vec::Vec;
    use proptest::prelude::*;

    fn row(v: &[f64]) -> FeatureMatrix {
        FeatureMatrix::new(DMatrix::from_row_slice(1, v.len(), v), 0).unwrap()
    }

    #[test]
    fn mean_lab_of_superpixels() {
        let img = RasterImage::new(3, 1, vec![10.0, 1.0, 2.0, 30.0, 3.0, 4.0, 7.0, 7.0, 7.0]).unwrap();
        let scale = SuperpixelScale::new(0, LabelMap::from_raw(3, 1, &[0, 0, 1]).unwrap());
        let f = mlab(&scale, &img).unwrap();
        assert_eq!(f.data.column(0).as_slice(), &[20.0, 2.0, 3.0]);
        assert_eq!(f.data.column(1).as_slice(), &[7.0, 7.0, 7.0]);
        assert!(!f.smoothed);
    }

    #[test]
    fn exponential_smoothing_examples() {
        let s = ikde_smooth(&row(&[0.0, 2.0]), 0.5).unwrap();
        assert_eq!(s.data[(0, 1)], 1.0);
        let s = ikde_smooth(&row(&[4.0, 0.0, 0.0]), 0.5).unwrap();
        assert_eq!(s.data.as_slice(), &[4.0, 2.0, 1.0]);
        assert!(s.smoothed);
        assert!(ikde_smooth(&s, 0.5).is_err());
        assert!(ikde_smooth(&row(&[1.0]), 0.0).is_err());
        assert!(ikde_smooth(&row(&[1.0]), 1.5).is_err());
    }

    proptest! {
        #[test]
        fn unit_alpha_is_exact_identity(v in proptest::collection::vec(-100.0f64..100.0, 1..40)) {
            let f = row(&v);
            prop_assert_eq!(ikde_smooth(&f, 1.0).unwrap().data, f.data);
        }

        #[test]
        fn smoothed_values_stay_in_prefix_hull(v in proptest::collection::vec(-100.0f64..100.0, 1..40), alpha in 0.01f64..1.0) {
            let s = ikde_smooth(&row(&v), alpha).unwrap();
            let mut lo = f64::MAX;
            let mut hi = f64::MIN;
            let out: Vec<f64> = s.data.iter().copied().collect();
            for (t, &x) in v.iter().enumerate() {
                lo = lo.min(x);
                hi = hi.max(x);
                prop_assert!(out[t] >= lo - 1e-9 && out[t] <= hi + 1e-9);
            }
        }
    }
}
