//! Image and label-map files.

use std::fs;
use std::io::Write;
use std::path::Path;

use afa_core::color::lab_to_srgb8;
use afa_core::{LabelMap, RasterImage};
use image::{ImageFormat, RgbImage};

use crate::error::{AfaError, Result};

/// Loads an 8-bit sRGB PNG or binary PPM as L*a*b*.
pub fn load_image(path: &Path) -> Result<RasterImage> {
    let bytes = fs::read(path).map_err(|e| AfaError::io(path, e))?;
    let format = image::guess_format(&bytes).map_err(|e| AfaError::data(path, e.to_string()))?;
    if !matches!(format, ImageFormat::Png | ImageFormat::Pnm) {
        return Err(AfaError::data(path, format!("unsupported format {format:?}")));
    }
    let img = image::load_from_memory_with_format(&bytes, format)
        .map_err(|e| AfaError::data(path, e.to_string()))?
        .to_rgb8();
    RasterImage::from_srgb8(img.width() as usize, img.height() as usize, img.as_raw())
        .map_err(|e| AfaError::data(path, e.to_string()))
}

/// Reads a label map from a 16-bit (or 8-bit) binary PGM, a CSV grid or a
/// BSD `.seg` file, chosen by extension.
pub fn read_label_map(path: &Path) -> Result<LabelMap> {
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase();
    let bytes = fs::read(path).map_err(|e| AfaError::io(path, e))?;
    match ext.as_str() {
        "pgm" => parse_pgm(&bytes),
        "csv" | "txt" => parse_csv(&String::from_utf8_lossy(&bytes)),
        "seg" => parse_seg(&String::from_utf8_lossy(&bytes)),
        _ => Err(format!("unknown label-map extension `{ext}`")),
    }
    .map_err(|msg| AfaError::data(path, msg))
}

/// Reads a label map that must match the given dimensions.
pub fn read_label_map_sized(path: &Path, width: usize, height: usize) -> Result<LabelMap> {
    let m = read_label_map(path)?;
    if m.width() != width || m.height() != height {
        return Err(AfaError::data(
            path,
            format!("label map is {}x{}, expected {width}x{height}", m.width(), m.height()),
        ));
    }
    Ok(m)
}

fn pgm_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Result<&'a [u8], String> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
        } else {
            break;
        }
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if start == *pos {
        return Err("truncated PGM header".into());
    }
    Ok(&bytes[start..*pos])
}

fn pgm_number(bytes: &[u8], pos: &mut usize) -> Result<usize, String> {
    let t = pgm_token(bytes, pos)?;
    std::str::from_utf8(t)
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| format!("bad PGM header field `{}`", String::from_utf8_lossy(t)))
}

pub fn parse_pgm(bytes: &[u8]) -> Result<LabelMap, String> {
    let mut pos = 0;
    if pgm_token(bytes, &mut pos)? != b"P5" {
        return Err("not a binary PGM (P5)".into());
    }
    let w = pgm_number(bytes, &mut pos)?;
    let h = pgm_number(bytes, &mut pos)?;
    let maxval = pgm_number(bytes, &mut pos)?;
    if maxval == 0 || maxval > 65535 {
        return Err(format!("PGM maxval {maxval} out of range"));
    }
    pos += 1;
    let bpp = if maxval > 255 { 2 } else { 1 };
    let data = bytes.get(pos..).unwrap_or(&[]);
    if data.len() < w * h * bpp {
        return Err(format!("PGM raster has {} bytes, expected {}", data.len(), w * h * bpp));
    }
    let raw: Vec<i64> = (0..w * h)
        .map(|i| {
            if bpp == 2 {
                u16::from_be_bytes([data[2 * i], data[2 * i + 1]]) as i64
            } else {
                data[i] as i64
            }
        })
        .collect();
    LabelMap::from_raw(w, h, &raw).map_err(|e| e.to_string())
}

pub fn parse_csv(text: &str) -> Result<LabelMap, String> {
    let mut raw = Vec::new();
    let mut width = None;
    let mut height = 0;
    for (r, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|t| t.trim().parse::<i64>().map_err(|_| format!("row {r}: bad integer `{}`", t.trim())))
            .collect::<Result<Vec<_>, _>>()?;
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => return Err(format!("row {r} has {} values, expected {w}", row.len())),
            _ => {}
        }
        raw.extend(row);
        height += 1;
    }
    LabelMap::from_raw(width.unwrap_or(0), height, &raw).map_err(|e| e.to_string())
}

/// BSD ground truth: a header up to `data`, then `segment row col_start
/// col_end` runs.
pub fn parse_seg(text: &str) -> Result<LabelMap, String> {
    let mut lines = text.lines();
    let (mut w, mut h) = (None, None);
    for line in lines.by_ref() {
        let mut it = line.split_whitespace();
        match (it.next(), it.next()) {
            (Some("width"), Some(v)) => w = v.parse::<usize>().ok(),
            (Some("height"), Some(v)) => h = v.parse::<usize>().ok(),
            (Some("data"), None) => break,
            _ => {}
        }
    }
    let (w, h) = w.zip(h).ok_or("seg header lacks width/height")?;
    let mut raw = vec![-1i64; w * h];
    for line in lines {
        let v: Vec<usize> = line.split_whitespace().map(|t| t.parse().map_err(|_| format!("bad run `{line}`"))).collect::<Result<_, _>>()?;
        if v.is_empty() {
            continue;
        }
        let [s, r, c0, c1] = v[..] else {
            return Err(format!("bad run `{line}`"));
        };
        if r >= h || c0 > c1 || c1 >= w {
            return Err(format!("run `{line}` outside {w}x{h}"));
        }
        raw[r * w + c0..=r * w + c1].fill(s as i64);
    }
    if let Some(i) = raw.iter().position(|&l| l < 0) {
        return Err(format!("pixel ({}, {}) not covered by any run", i % w, i / w));
    }
    LabelMap::from_raw(w, h, &raw).map_err(|e| e.to_string())
}

/// 16-bit binary PGM of the labels.
pub fn encode_pgm(m: &LabelMap) -> Result<Vec<u8>, String> {
    if m.num_labels() > 65536 {
        return Err(format!("{} labels do not fit 16 bits", m.num_labels()));
    }
    let mut out = format!("P5\n{} {}\n65535\n", m.width(), m.height()).into_bytes();
    for &l in m.labels() {
        out.extend_from_slice(&(l as u16).to_be_bytes());
    }
    Ok(out)
}

/// Comma-separated rows of labels.
pub fn encode_csv(m: &LabelMap) -> String {
    let mut out = String::new();
    for row in m.labels().chunks(m.width()) {
        let cells: Vec<String> = row.iter().map(u32::to_string).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Writes a CSV grid for `.csv`/`.txt` paths and a 16-bit PGM otherwise.
pub fn write_label_map(m: &LabelMap, path: &Path) -> Result<()> {
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase();
    let bytes = match ext.as_str() {
        "csv" | "txt" => encode_csv(m).into_bytes(),
        _ => encode_pgm(m).map_err(|msg| AfaError::data(path, msg))?,
    };
    write_file(path, &bytes)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| AfaError::io(path, e))?;
    f.write_all(bytes).map_err(|e| AfaError::io(path, e))
}

/// Region-mean colours with boundary pixels (right or lower neighbour in
/// another region) drawn black.
pub fn render_overlay(img: &RasterImage, seg: &LabelMap) -> Result<RgbImage, String> {
    let (w, h) = (img.width(), img.height());
    if seg.width() != w || seg.height() != h {
        return Err(format!("segmentation {}x{} vs image {w}x{h}", seg.width(), seg.height()));
    }
    let k = seg.num_labels();
    let mut sum = vec![[0.0f64; 3]; k];
    let mut count = vec![0usize; k];
    for (i, &l) in seg.labels().iter().enumerate() {
        let p = img.pixel(i);
        for c in 0..3 {
            sum[l as usize][c] += p[c];
        }
        count[l as usize] += 1;
    }
    let colours: Vec<[u8; 3]> = sum
        .iter()
        .zip(&count)
        .map(|(s, &n)| lab_to_srgb8([s[0] / n as f64, s[1] / n as f64, s[2] / n as f64]))
        .collect();
    let l = seg.labels();
    Ok(RgbImage::from_fn(w as u32, h as u32, |x, y| {
        let (x, y) = (x as usize, y as usize);
        let i = y * w + x;
        let edge = (x + 1 < w && l[i + 1] != l[i]) || (y + 1 < h && l[i + w] != l[i]);
        image::Rgb(if edge { [0, 0, 0] } else { colours[l[i] as usize] })
    }))
}

pub fn write_overlay(img: &RasterImage, seg: &LabelMap, path: &Path) -> Result<()> {
    let rgb = render_overlay(img, seg).map_err(|msg| AfaError::data(path, msg))?;
    rgb.save_with_format(path, ImageFormat::Png).map_err(|e| AfaError::data(path, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_examples() {
        let m = parse_csv("0,0\n2,2").unwrap();
        assert_eq!((m.num_labels(), m.labels()), (2, &[0u32, 0, 1, 1][..]));
        assert_eq!(parse_csv("5").unwrap().num_labels(), 1);
        assert!(parse_csv("0,1\n2").is_err());
        assert!(parse_csv("0,-1").is_err());
    }

    #[test]
    fn pgm_hand_layout() {
        let mut bytes = b"P5\n# labels\n2 2\n65535\n".to_vec();
        bytes.extend_from_slice(&[0, 0, 0, 1, 0, 1, 0, 3]);
        let m = parse_pgm(&bytes).unwrap();
        assert_eq!(m.num_labels(), 3);
        assert_eq!(m.labels(), &[0, 1, 1, 2]);
        assert!(parse_pgm(&bytes[..bytes.len() - 1]).is_err());
    }

    #[test]
    fn pgm_round_trip() {
        let m = LabelMap::from_u32(3, 2, &[4, 4, 9, 1, 9, 9]).unwrap();
        let back = parse_pgm(&encode_pgm(&m).unwrap()).unwrap();
        assert!(back.same_partition(&m));
    }

    #[test]
    fn seg_runs() {
        let text = "format ascii cr\nwidth 3\nheight 2\nsegments 2\ndata\n0 0 0 1\n1 0 2 2\n1 1 0 2\n";
        let m = parse_seg(text).unwrap();
        assert_eq!(m.labels(), &[0, 0, 1, 1, 1, 1]);
        assert!(parse_seg("width 2\nheight 1\ndata\n0 0 0 0\n").is_err());
    }

    #[test]
    fn overlay_boundaries() {
        let img = RasterImage::from_srgb8(2, 2, &[10, 200, 30].repeat(4)).unwrap();
        let flat = render_overlay(&img, &LabelMap::constant(2, 2).unwrap()).unwrap();
        assert!(flat.pixels().all(|p| p.0 == flat.get_pixel(0, 0).0 && p.0 != [0, 0, 0]));
        let split = render_overlay(&img, &LabelMap::from_u32(2, 2, &[0, 1, 0, 1]).unwrap()).unwrap();
        assert_eq!(split.get_pixel(0, 0).0, [0, 0, 0]);
        assert_eq!(split.get_pixel(0, 1).0, [0, 0, 0]);
        assert_ne!(split.get_pixel(1, 0).0, [0, 0, 0]);
    }
}
