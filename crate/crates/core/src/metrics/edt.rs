use alloc::vec;
use alloc::vec::Vec;

use libm::sqrt;

use crate::image::LabelMap;

/// Pixels whose right or lower neighbour carries a different label. A map
/// without any such pixel uses the image border instead.
pub fn boundary_mask(m: &LabelMap) -> Vec<bool> {
    let (w, h) = (m.width(), m.height());
    let l = m.labels();
    let mut mask = vec![false; w * h];
    let mut any = false;
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let b = (x + 1 < w && l[i + 1] != l[i]) || (y + 1 < h && l[i + w] != l[i]);
            mask[i] = b;
            any |= b;
        }
    }
    if !any {
        for y in 0..h {
            for x in 0..w {
                if x == 0 || y == 0 || x + 1 == w || y + 1 == h {
                    mask[y * w + x] = true;
                }
            }
        }
    }
    mask
}

const FAR: f64 = 1e20;

/// Squared distance lower envelope of parabolas rooted at `f`.
fn envelope_1d(f: &[f64], out: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    let mut k = 0usize;
    v[0] = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in 1..n {
        let qf = q as f64;
        loop {
            let p = v[k];
            let pf = p as f64;
            let s = ((f[q] + qf * qf) - (f[p] + pf * pf)) / (2.0 * qf - 2.0 * pf);
            if s <= z[k] && k > 0 {
                k -= 1;
                continue;
            }
            if s <= z[k] {
                v[0] = q;
                z[0] = f64::NEG_INFINITY;
                z[1] = f64::INFINITY;
                break;
            }
            k += 1;
            v[k] = q;
            z[k] = s;
            z[k + 1] = f64::INFINITY;
            break;
        }
    }
    k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        let qf = q as f64;
        while z[k + 1] < qf {
            k += 1;
        }
        let p = v[k] as f64;
        *o = (qf - p) * (qf - p) + f[v[k]];
    }
}

/// Exact Euclidean distance from every pixel to the nearest `true` pixel.
pub fn distance_transform(mask: &[bool], w: usize, h: usize) -> Vec<f64> {
    let mut g: Vec<f64> = mask.iter().map(|&b| if b { 0.0 } else { FAR }).collect();
    let n = w.max(h);
    let mut v = vec![0usize; n];
    let mut z = vec![0.0; n + 1];
    let mut f = vec![0.0; n];
    let mut out = vec![0.0; n];
    for x in 0..w {
        for y in 0..h {
            f[y] = g[y * w + x];
        }
        envelope_1d(&f[..h], &mut out[..h], &mut v, &mut z);
        for y in 0..h {
            g[y * w + x] = out[y];
        }
    }
    for y in 0..h {
        f[..w].copy_from_slice(&g[y * w..(y + 1) * w]);
        envelope_1d(&f[..w], &mut out[..w], &mut v, &mut z);
        g[y * w..(y + 1) * w].copy_from_slice(&out[..w]);
    }
    g.iter().map(|&d| sqrt(d)).collect()
}
