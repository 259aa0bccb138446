//! Label-map and overlay file round trips.

use afa::imgio::{encode_csv, encode_pgm, load_image, parse_csv, parse_pgm, parse_seg, read_label_map, read_label_map_sized, render_overlay, write_label_map, write_overlay};
use afa_core::{LabelMap, RasterImage};
use proptest::prelude::*;

fn label_map() -> impl Strategy<Value = LabelMap> {
    (1usize..12, 1usize..12, 1u32..300).prop_flat_map(|(w, h, k)| {
        proptest::collection::vec(0..k, w * h).prop_map(move |raw| LabelMap::from_u32(w, h, &raw).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pgm_bytes_round_trip(m in label_map()) {
        let back = parse_pgm(&encode_pgm(&m).unwrap()).unwrap();
        prop_assert_eq!((back.width(), back.height()), (m.width(), m.height()));
        prop_assert!(back.same_partition(&m));
    }

    #[test]
    fn every_file_format_round_trips(m in label_map()) {
        let tmp = tempfile::tempdir().unwrap();
        for ext in ["pgm", "csv"] {
            let p = tmp.path().join(format!("m.{ext}"));
            write_label_map(&m, &p).unwrap();
            let back = read_label_map(&p).unwrap();
            prop_assert!(back.same_partition(&m), "{}", ext);
        }
        let csv: String = (0..m.height())
            .map(|y| (0..m.width()).map(|x| m.get(x, y).to_string()).collect::<Vec<_>>().join(",") + "\n")
            .collect();
        prop_assert_eq!(&encode_csv(&m), &csv);
        prop_assert!(parse_csv(&csv).unwrap().same_partition(&m));
    }
}

#[test]
fn seg_runs_match_dense_map() {
    let text = "format ascii cr\nwidth 4\nheight 2\nsegments 2\ndata\n0 0 0 1\n1 0 2 3\n1 1 0 3\n";
    let m = parse_seg(text).unwrap();
    assert_eq!(m.labels(), &[0, 0, 1, 1, 1, 1, 1, 1]);
}

#[test]
fn sized_reader_rejects_wrong_shape() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path().join("m.pgm");
    write_label_map(&LabelMap::constant(3, 2).unwrap(), &p).unwrap();
    assert!(read_label_map_sized(&p, 3, 2).is_ok());
    assert!(read_label_map_sized(&p, 2, 3).is_err());
}

#[test]
fn overlay_is_deterministic_and_marks_boundaries() {
    let (w, h) = (6, 4);
    let rgb: Vec<u8> = (0..w * h).flat_map(|i| [(i * 10) as u8, 128, 255 - (i * 10) as u8]).collect();
    let img = RasterImage::from_srgb8(w, h, &rgb).unwrap();
    let seg = LabelMap::from_u32(w, h, &(0..w * h).map(|i| ((i % w) >= 3) as u32).collect::<Vec<_>>()).unwrap();
    let a = render_overlay(&img, &seg).unwrap();
    assert_eq!(a, render_overlay(&img, &seg).unwrap());
    for y in 0..h as u32 {
        assert_eq!(a.get_pixel(2, y).0, [0, 0, 0]);
        assert_ne!(a.get_pixel(0, y).0, [0, 0, 0]);
    }

    let tmp = tempfile::tempdir().unwrap();
    let (p1, p2) = (tmp.path().join("a.png"), tmp.path().join("b.png"));
    write_overlay(&img, &seg, &p1).unwrap();
    write_overlay(&img, &seg, &p2).unwrap();
    assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    let back = load_image(&p1).unwrap();
    assert_eq!((back.width(), back.height()), (w, h));
}

#[test]
fn srgb_png_round_trip_is_lossless() {
    let (w, h) = (5u32, 3u32);
    let rgb: Vec<u8> = (0..w * h * 3).map(|i| (i * 17 % 256) as u8).collect();
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path().join("i.png");
    image::RgbImage::from_raw(w, h, rgb.clone()).unwrap().save(&p).unwrap();
    assert_eq!(load_image(&p).unwrap().to_srgb8(), rgb);
}
