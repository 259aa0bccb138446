//! Spatial image filters: separable Gaussian and bilateral.

use alloc::vec;
use alloc::vec::Vec;

use libm::{ceil, exp};

use crate::image::RasterImage;

fn gaussian_kernel(sigma: f64, radius: usize) -> Vec<f64> {
    let mut k: Vec<f64> = (0..=2 * radius)
        .map(|i| {
            let d = i as f64 - radius as f64;
            exp(-d * d / (2.0 * sigma * sigma))
        })
        .collect();
    let s: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= s);
    k
}

/// Separable Gaussian blur with clamp-to-edge borders. `sigma <= 0`
/// returns the input unchanged.
pub fn gaussian_blur(img: &RasterImage, sigma: f64, radius: usize) -> RasterImage {
    if sigma <= 0.0 || radius == 0 {
        return img.clone();
    }
    let (w, h) = (img.width(), img.height());
    let k = gaussian_kernel(sigma, radius);
    let r = radius as isize;
    let src = img.data();
    let mut tmp = vec![0.0; src.len()];
    for y in 0..h {
        for x in 0..w {
            let mut acc = [0.0; 3];
            for (t, kv) in k.iter().enumerate() {
                let xx = (x as isize + t as isize - r).clamp(0, w as isize - 1) as usize;
                let o = (y * w + xx) * 3;
                for c in 0..3 {
                    acc[c] += kv * src[o + c];
                }
            }
            tmp[(y * w + x) * 3..(y * w + x) * 3 + 3].copy_from_slice(&acc);
        }
    }
    let mut out = vec![0.0; src.len()];
    for y in 0..h {
        for x in 0..w {
            let mut acc = [0.0; 3];
            for (t, kv) in k.iter().enumerate() {
                let yy = (y as isize + t as isize - r).clamp(0, h as isize - 1) as usize;
                let o = (yy * w + x) * 3;
                for c in 0..3 {
                    acc[c] += kv * tmp[o + c];
                }
            }
            out[(y * w + x) * 3..(y * w + x) * 3 + 3].copy_from_slice(&acc);
        }
    }
    RasterImage::new(w, h, out).expect("blur preserves shape and finiteness")
}

/// Gaussian blur with the customary support `ceil(4 sigma)`.
pub fn gaussian_smooth(img: &RasterImage, sigma: f64) -> RasterImage {
    gaussian_blur(img, sigma, ceil(4.0 * sigma) as usize)
}

/// Bilateral filter over a `(2 radius + 1)^2` window. Range distance is
/// Euclidean in L*a*b*.
pub fn bilateral(img: &RasterImage, radius: usize, sigma_space: f64, sigma_range: f64) -> RasterImage {
    let (w, h) = (img.width(), img.height());
    let r = radius as isize;
    let mut out = Vec::with_capacity(img.data().len());
    for y in 0..h as isize {
        for x in 0..w as isize {
            let c0 = img.at(x as usize, y as usize);
            let mut acc = [0.0; 3];
            let mut wsum = 0.0;
            for dy in -r..=r {
                for dx in -r..=r {
                    let (xx, yy) = (x + dx, y + dy);
                    if xx < 0 || yy < 0 || xx >= w as isize || yy >= h as isize {
                        continue;
                    }
                    let c = img.at(xx as usize, yy as usize);
                    let dr = (c[0] - c0[0]).powi(2) + (c[1] - c0[1]).powi(2) + (c[2] - c0[2]).powi(2);
                    let ds = (dx * dx + dy * dy) as f64;
                    let wt = exp(-ds / (2.0 * sigma_space * sigma_space) - dr / (2.0 * sigma_range * sigma_range));
                    wsum += wt;
                    for i in 0..3 {
                        acc[i] += wt * c[i];
                    }
                }
            }
            out.extend(acc.iter().map(|v| v / wsum));
        }
    }
    RasterImage::new(w, h, out).expect("bilateral preserves shape and finiteness")
}
