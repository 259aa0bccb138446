//! Pixel rasters in L*a*b* and dense integer label maps.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::color;
use crate::error::{Error, Result};

/// Row-major `H x W` image of L*a*b* triples.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl RasterImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyImage { width, height });
        }
        if data.len() != width * height * 3 {
            return Err(Error::LengthMismatch {
                expected: width * height * 3,
                actual: data.len(),
            });
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Converts interleaved 8-bit sRGB.
    pub fn from_srgb8(width: usize, height: usize, rgb: &[u8]) -> Result<Self> {
        if rgb.len() != width * height * 3 {
            return Err(Error::LengthMismatch {
                expected: width * height * 3,
                actual: rgb.len(),
            });
        }
        let mut data = Vec::with_capacity(rgb.len());
        for px in rgb.chunks_exact(3) {
            data.extend_from_slice(&color::srgb8_to_lab([px[0], px[1], px[2]]));
        }
        Self::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn pixel(&self, idx: usize) -> [f64; 3] {
        let o = idx * 3;
        [self.data[o], self.data[o + 1], self.data[o + 2]]
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> [f64; 3] {
        self.pixel(y * self.width + x)
    }

    /// Encodes back to 8-bit sRGB.
    pub fn to_srgb8(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.data.len());
        for px in self.data.chunks_exact(3) {
            out.extend_from_slice(&color::lab_to_srgb8([px[0], px[1], px[2]]));
        }
        out
    }
}

/// Row-major map of pixel labels, dense in `0..num_labels`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LabelMap {
    width: usize,
    height: usize,
    labels: Vec<u32>,
    num_labels: usize,
}

impl LabelMap {
    /// Relabels arbitrary nonnegative integers to `0..k` in order of first
    /// raster occurrence.
    pub fn from_raw(width: usize, height: usize, raw: &[i64]) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyImage { width, height });
        }
        if raw.len() != width * height {
            return Err(Error::LengthMismatch {
                expected: width * height,
                actual: raw.len(),
            });
        }
        let mut map = BTreeMap::new();
        let mut labels = Vec::with_capacity(raw.len());
        for (index, &label) in raw.iter().enumerate() {
            if label < 0 {
                return Err(Error::NegativeLabel { label, index });
            }
            let next = map.len() as u32;
            labels.push(*map.entry(label).or_insert(next));
        }
        Ok(Self {
            width,
            height,
            labels,
            num_labels: map.len(),
        })
    }

    /// Same as [`LabelMap::from_raw`] for unsigned input.
    pub fn from_u32(width: usize, height: usize, raw: &[u32]) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyImage { width, height });
        }
        if raw.len() != width * height {
            return Err(Error::LengthMismatch {
                expected: width * height,
                actual: raw.len(),
            });
        }
        let max = raw.iter().copied().max().unwrap_or(0) as usize;
        let mut remap = vec![u32::MAX; max + 1];
        let mut next = 0u32;
        let labels = raw
            .iter()
            .map(|&l| {
                let slot = &mut remap[l as usize];
                if *slot == u32::MAX {
                    *slot = next;
                    next += 1;
                }
                *slot
            })
            .collect();
        Ok(Self {
            width,
            height,
            labels,
            num_labels: next as usize,
        })
    }

    /// Single-label map.
    pub fn constant(width: usize, height: usize) -> Result<Self> {
        Self::from_u32(width, height, &vec![0; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u32 {
        self.labels[y * self.width + x]
    }

    /// Pixel count per label.
    pub fn areas(&self) -> Vec<usize> {
        let mut a = vec![0usize; self.num_labels];
        for &l in &self.labels {
            a[l as usize] += 1;
        }
        a
    }

    pub fn same_shape(&self, other: &LabelMap) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// True when both maps induce the same partition of pixels.
    pub fn same_partition(&self, other: &LabelMap) -> bool {
        if !self.same_shape(other) || self.num_labels != other.num_labels {
            return false;
        }
        let mut fwd = vec![u32::MAX; self.num_labels];
        let mut bwd = vec![u32::MAX; other.num_labels];
        for (&a, &b) in self.labels.iter().zip(&other.labels) {
            let (fa, bb) = (&mut fwd[a as usize], &mut bwd[b as usize]);
            if *fa == u32::MAX && *bb == u32::MAX {
                *fa = b;
                *bb = a;
            } else if *fa != b || *bb != a {
                return false;
            }
        }
        true
    }
}
