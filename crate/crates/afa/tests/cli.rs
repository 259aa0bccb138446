//! Drives the `afa` binary end to end on tiny synthetic inputs.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use afa::config::{config_hash, parse_config};
use afa::imgio::{read_label_map, write_label_map};
use afa_core::metrics::pri;
use afa_core::pipeline::PipelineConfig;
use afa_core::LabelMap;

fn afa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_afa"))
        .args(args)
        .env_remove("AFA_DATASET_ROOT")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn two_region(dir: &Path, name: &str) -> (PathBuf, LabelMap) {
    let (w, h) = (16u32, 16u32);
    let mut rgb = Vec::new();
    let mut truth = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let inside = (4..12).contains(&x) && (3..13).contains(&y);
            rgb.extend_from_slice(if inside { &[230u8, 190, 40] } else { &[30u8, 60, 150] });
            truth.push(inside as u32);
        }
    }
    let path = dir.join(name);
    image::RgbImage::from_raw(w, h, rgb).unwrap().save(&path).unwrap();
    (path, LabelMap::from_u32(w as usize, h as usize, &truth).unwrap())
}

fn files_with_ext(dir: &Path, ext: &str) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir)
        .unwrap()
        .flatten()
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|e| e == ext))
        .collect();
    v.sort();
    v
}

#[test]
fn segment_writes_label_map_overlay_and_record() {
    let tmp = tempfile::tempdir().unwrap();
    let (img, truth) = two_region(tmp.path(), "blob.png");
    let out = tmp.path().join("out");
    let dump = tmp.path().join("dump");
    let o = afa(&[
        "segment",
        img.to_str().unwrap(),
        "--kt",
        "2",
        "-o",
        out.to_str().unwrap(),
        "--dump",
        dump.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let hash = config_hash(&PipelineConfig::default());
    let stem = format!("blob_{}_k2", &hash[..12]);
    for ext in ["pgm", "png", "json"] {
        assert!(out.join(format!("{stem}.{ext}")).is_file(), "missing {stem}.{ext}");
    }
    let seg = read_label_map(&out.join(format!("{stem}.pgm"))).unwrap();
    assert_eq!(pri(&seg, &[truth]).unwrap(), 1.0);

    let record: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(record["config_hash"], hash.as_str());
    assert_eq!(record["k_t"], 2);
    assert!(!files_with_ext(&dump, "csv").is_empty());
    assert!(!files_with_ext(&dump, "txt").is_empty());
}

#[test]
fn segment_is_byte_identical_across_worker_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let (img, _) = two_region(tmp.path(), "blob.png");
    let mut outputs = Vec::new();
    for workers in ["1", "3"] {
        let out = tmp.path().join(format!("out{workers}"));
        let o = afa(&["segment", img.to_str().unwrap(), "--kt", "2", "-j", workers, "-o", out.to_str().unwrap()]);
        assert!(o.status.success());
        let bytes: Vec<Vec<u8>> = ["pgm", "png"]
            .iter()
            .map(|e| fs::read(&files_with_ext(&out, e)[0]).unwrap())
            .collect();
        outputs.push(bytes);
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn metrics_verb_on_identical_maps() {
    let tmp = tempfile::tempdir().unwrap();
    let (_, truth) = two_region(tmp.path(), "blob.png");
    let gt = tmp.path().join("gt.pgm");
    write_label_map(&truth, &gt).unwrap();
    let o = afa(&["metrics", gt.to_str().unwrap(), gt.to_str().unwrap()]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines, ["PRI,VoI,GCE,BDE", "1,0,0,0"]);
}

#[test]
fn metrics_verb_rejects_mismatched_shapes() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a.pgm");
    let b = tmp.path().join("b.pgm");
    write_label_map(&LabelMap::constant(4, 4).unwrap(), &a).unwrap();
    write_label_map(&LabelMap::constant(5, 4).unwrap(), &b).unwrap();
    let o = afa(&["metrics", a.to_str().unwrap(), b.to_str().unwrap()]);
    assert!(!o.status.success());
}

#[test]
fn benchmark_on_self_consistent_dataset() {
    let tmp = tempfile::tempdir().unwrap();
    let images = tmp.path().join("images");
    let gt_dir = tmp.path().join("groundtruth").join("blob");
    fs::create_dir_all(&images).unwrap();
    fs::create_dir_all(&gt_dir).unwrap();
    let (_, truth) = two_region(&images, "blob.png");
    write_label_map(&truth, &gt_dir.join("1.pgm")).unwrap();
    let csv_path = tmp.path().join("report.csv");
    let jsonl = tmp.path().join("records.jsonl");
    let o = afa(&[
        "benchmark",
        tmp.path().to_str().unwrap(),
        "-o",
        csv_path.to_str().unwrap(),
        "--records",
        jsonl.to_str().unwrap(),
        "--set",
        "k_t.max=4",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let mut rd = csv::Reader::from_path(&csv_path).unwrap();
    assert_eq!(rd.headers().unwrap(), vec!["image_id", "k_T", "PRI", "VoI", "GCE", "BDE"]);
    let rows: Vec<csv::StringRecord> = rd.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(&rows[0][0], "blob");
    assert_eq!(&rows[0][1], "2");
    assert_eq!(rows[0][2].parse::<f64>().unwrap(), 1.0);
    assert_eq!(&rows[1][0], "mean");
    assert_eq!(rows[1][2].parse::<f64>().unwrap(), 1.0);
    assert_eq!(fs::read_to_string(&jsonl).unwrap().lines().count(), 1);
}

#[test]
fn benchmark_on_empty_dataset_writes_header_and_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    fs::create_dir_all(tmp.path().join("images")).unwrap();
    let o = afa(&["benchmark", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stdout(&o).trim(), "image_id,k_T,PRI,VoI,GCE,BDE");
}

#[test]
fn benchmark_without_dataset_root_is_usage_error() {
    let o = afa(&["benchmark"]);
    assert!(!o.status.success());
}

#[test]
fn invalid_configuration_exits_1() {
    for set in ["alpha=0", "no_such_key=3", "graph_mode=\"sideways\""] {
        let o = afa(&["config", "--set", set]);
        assert_eq!(o.status.code(), Some(1), "override {set}");
    }
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.toml");
    fs::write(&bad, "tau = 2.0\n").unwrap();
    let o = afa(&["config", "-c", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn missing_image_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let o = afa(&["segment", tmp.path().join("absent.png").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_verb_round_trips_overrides() {
    let o = afa(&["config", "--set", "alpha=0.5", "--seed", "7"]);
    assert!(o.status.success());
    let cfg = parse_config(&stdout(&o)).unwrap();
    assert_eq!(cfg.alpha, 0.5);
    assert_eq!(cfg.seed, 7);
    let tmp = tempfile::tempdir().unwrap();
    let file = tmp.path().join("cfg.toml");
    fs::write(&file, stdout(&o)).unwrap();
    let again = afa(&["config", "-c", file.to_str().unwrap()]);
    assert_eq!(stdout(&again), stdout(&o));
}
