use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rectisynth::compositor::{load_rgb, save_image};
use rectisynth::pipeline::synthetic;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rectisynth"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn sources(root: &Path) -> (PathBuf, PathBuf) {
    let (fg, bg) = (root.join("fg"), root.join("bg"));
    std::fs::create_dir_all(&fg).unwrap();
    std::fs::create_dir_all(&bg).unwrap();
    for i in 0..2 {
        save_image(&synthetic::foreground(80, 96, i), &fg.join(format!("f{i}.png"))).unwrap();
        save_image(&synthetic::background(64, 64, i), &bg.join(format!("b{i}.png"))).unwrap();
    }
    (fg, bg)
}

fn generate(fg: &Path, bg: &Path, out: &Path, n: &str, extra: &[&str]) -> Output {
    let mut args = vec![
        "generate",
        "--fg",
        fg.to_str().unwrap(),
        "--bg",
        bg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--n",
        n,
        "--seed",
        "17",
        "--size",
        "64x64",
    ];
    args.extend_from_slice(extra);
    run(&args)
}

#[test]
fn generate_one_sample_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let (fg, bg) = sources(tmp.path());
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for out in [&a, &b] {
        let o = generate(&fg, &bg, out, "1", &["--workers", "1"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(stdout(&o).contains("written:   1"));
    }
    let photo = std::fs::read(a.join("photos/00000000.jpg")).unwrap();
    assert_eq!(photo, std::fs::read(b.join("photos/00000000.jpg")).unwrap());
    let manifest = std::fs::read_to_string(a.join("manifest")).unwrap();
    assert_eq!(manifest.lines().count(), 1);
    assert_eq!(manifest, std::fs::read_to_string(b.join("manifest")).unwrap());
    assert_eq!(load_rgb(&a.join("photos/00000000.jpg")).unwrap().dimensions(), (64, 64));
}

#[test]
fn missing_source_dir_is_a_runtime_error() {
    let tmp = tempfile::tempdir().unwrap();
    let (_, bg) = sources(tmp.path());
    let o = generate(&tmp.path().join("nope"), &bg, &tmp.path().join("out"), "1", &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nope"));
}

#[test]
fn bad_usage_exits_two() {
    assert_eq!(run(&["generate", "--n", "3"]).status.code(), Some(2));
    assert_eq!(run(&["bench", "--n", "many"]).status.code(), Some(2));
    assert_eq!(run(&["bench", "--size", "64"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["rectify", "--photo", "x.png", "--out", "y.png"]).status.code(), Some(2));
    assert_eq!(run(&["rectify", "--photo", "x.png", "--out", "y.png", "--matrix", "1 0 0"]).status.code(), Some(2));
    let o = run(&["bench", "--n", "2", "--perturbations", "sparkle"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("sparkle"));
}

#[test]
fn rectify_identity_and_full_frame_quad_agree() {
    let tmp = tempfile::tempdir().unwrap();
    let src = synthetic::foreground(50, 40, 3);
    let photo = tmp.path().join("photo.png");
    save_image(&src, &photo).unwrap();
    let (by_matrix, by_quad) = (tmp.path().join("m.png"), tmp.path().join("q.png"));
    let o = run(&[
        "rectify",
        "--photo",
        photo.to_str().unwrap(),
        "--matrix",
        "1 0 0 0 1 0 0 0",
        "--out",
        by_matrix.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(load_rgb(&by_matrix).unwrap(), src);
    let o = run(&[
        "rectify",
        "--photo",
        photo.to_str().unwrap(),
        "--quad",
        "0 0 50 0 50 40 0 40",
        "--out",
        by_quad.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(std::fs::read(&by_matrix).unwrap(), std::fs::read(&by_quad).unwrap());
}

#[test]
fn rectify_rejects_singular_matrix() {
    let tmp = tempfile::tempdir().unwrap();
    let photo = tmp.path().join("photo.png");
    save_image(&synthetic::foreground(20, 20, 1), &photo).unwrap();
    let o = run(&[
        "rectify",
        "--photo",
        photo.to_str().unwrap(),
        "--matrix",
        "1 1 0 1 1 0 0 0",
        "--out",
        tmp.path().join("o.png").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn ground_truth_scores_one_through_the_cli() {
    let tmp = tempfile::tempdir().unwrap();
    let (fg, bg) = sources(tmp.path());
    let out = tmp.path().join("ds");
    assert!(generate(&fg, &bg, &out, "25", &["--workers", "2"]).status.success());
    let (truth, pred, report) = (tmp.path().join("t.txt"), tmp.path().join("p.txt"), tmp.path().join("r.json"));
    let o = run(&[
        "inspect",
        "--manifest",
        out.join("manifest").to_str().unwrap(),
        "--export-truth",
        truth.to_str().unwrap(),
        "--export-pred",
        pred.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("records:        25"));
    let o = run(&[
        "eval-iou",
        "--pred",
        pred.to_str().unwrap(),
        "--truth",
        truth.to_str().unwrap(),
        "--report",
        report.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(r["n"], 25);
    assert!((r["mean_iou"].as_f64().unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn eval_on_empty_input_reports_no_samples() {
    let tmp = tempfile::tempdir().unwrap();
    let empty = tmp.path().join("empty.txt");
    std::fs::write(&empty, "# nothing\n").unwrap();
    let o = run(&["eval-iou", "--pred", empty.to_str().unwrap(), "--truth", empty.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no samples"));
}

#[test]
fn inspect_matrix() {
    let o = run(&["inspect", "--matrix", "0.5 0 0 0 0.5 0 0 0"]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.contains("-0.500000 -0.500000 0.500000 -0.500000"), "{s}");
    assert!(s.contains("Valid"));
}

fn bench_rate(workers: &str) -> f64 {
    let o = run(&["bench", "--n", "200", "--size", "128x128", "--workers", workers, "--seed", "1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = stdout(&o);
    let line = s.lines().find(|l| l.starts_with("rate:")).expect("rate line");
    line.split_whitespace().nth(1).unwrap().parse().unwrap()
}

#[test]
fn bench_reports_positive_throughput() {
    assert!(bench_rate("1") > 0.0);
}

#[test]
fn bench_scales_with_workers() {
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    if cores < 2 {
        eprintln!("single core host; scaling not measurable");
        return;
    }
    let (one, two) = (bench_rate("1"), bench_rate("2"));
    assert!(two >= 1.3 * one, "1 worker {one:.1}/s, 2 workers {two:.1}/s");
}
