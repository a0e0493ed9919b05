use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use cusumseg::imgio::{gen_phantom, Noise, PhantomSpec, Shape};
use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cusumseg")).args(args).output().unwrap()
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn disk_spec(sigma: f64) -> PhantomSpec {
    PhantomSpec {
        width: 128,
        height: 128,
        background: 200,
        shapes: vec![Shape::Disk {
            center: [64.0, 64.0],
            radius: 40.0,
            intensity: 1000,
            brain: true,
        }],
        noise: if sigma > 0.0 { Noise::Gaussian { sigma } } else { Noise::None },
        rng_seed: 5,
    }
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_string_lossy().into_owned()
}

fn write_spec(dir: &Path, spec: &PhantomSpec) -> String {
    let p = path(dir, "spec.json");
    fs::write(&p, serde_json::to_string(spec).unwrap()).unwrap();
    p
}

const SEED: [&str; 6] = ["--seed-x", "104", "--seed-y", "64", "--inside-dir", "3.14159265"];

#[test]
fn phantom_segment_dice_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), &disk_spec(50.0));
    let (image, truth, mask, csv) = (
        path(dir.path(), "img.pgm"),
        path(dir.path(), "truth.pgm"),
        path(dir.path(), "mask.pgm"),
        path(dir.path(), "boundary.csv"),
    );
    let out = run(&["phantom", "--spec", &spec, "--output", &image, "--truth-out", &truth]);
    assert!(out.status.success());
    assert_eq!(report(&out)["subcommand"], "phantom");

    let mut args = vec!["segment", "--input", &image, "--output", &mask, "--boundary-out", &csv];
    args.extend(SEED);
    let out = run(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let seg = report(&out);
    assert_eq!(seg["result"]["closed"], true);
    assert_eq!(seg["parameters"]["tracker"]["step"], 1.0);
    assert_eq!(seg["parameters"]["tracker_config"]["max_steps"], 20000);
    assert!(seg["timing_ms"].as_f64().is_some());
    let lines = fs::read_to_string(&csv).unwrap().lines().count();
    assert_eq!(lines as u64, seg["result"]["boundary_points"].as_u64().unwrap());

    let out = run(&["dice", &mask, &truth]);
    assert!(out.status.success());
    assert!(report(&out)["result"]["dice"].as_f64().unwrap() > 0.95);
}

#[test]
fn baseline_on_noiseless_phantom_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), &disk_spec(0.0));
    let (image, truth, mask) = (path(dir.path(), "a.pgm"), path(dir.path(), "t.pgm"), path(dir.path(), "m.pgm"));
    assert!(run(&["phantom", "--spec", &spec, "--output", &image, "--truth-out", &truth]).status.success());
    let out = run(&["baseline", "--input", &image, "--threshold", "600", "--keep-largest", "--output", &mask]);
    assert!(out.status.success());
    assert_eq!(report(&run(&["dice", &mask, &truth]))["result"]["dice"], 1.0);
}

#[test]
fn raw_series_with_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let (frame, _) = gen_phantom(&disk_spec(0.0)).unwrap();
    let mut bytes = Vec::new();
    // frames 1..3 are flat; the default time point 4 carries the disk
    for _ in 0..3 {
        bytes.extend(std::iter::repeat_n(200u16.to_be_bytes(), 128 * 128).flatten());
    }
    bytes.extend(frame.pixels().iter().flat_map(|v| v.to_be_bytes()));
    let raw = path(dir.path(), "scan.raw");
    fs::write(&raw, bytes).unwrap();
    fs::write(dir.path().join("scan.json"), r#"{"width":128,"height":128,"endianness":"big"}"#).unwrap();
    let mask = path(dir.path(), "m.pgm");

    let mut args = vec!["segment", "--input", &raw, "--output", &mask];
    args.extend(SEED);
    assert!(run(&args).status.success());

    // the first frame is flat, so there is no boundary to find
    args.extend(["--timepoint", "1"]);
    assert_eq!(run(&args).status.code(), Some(2));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), &disk_spec(0.0));
    let (image, truth, mask) = (path(dir.path(), "a.pgm"), path(dir.path(), "t.pgm"), path(dir.path(), "m.pgm"));
    assert!(run(&["phantom", "--spec", &spec, "--output", &image, "--truth-out", &truth]).status.success());

    let mut args = vec!["segment", "--input", &image, "--output", &mask, "--max-steps", "30"];
    args.extend(SEED);
    let out = run(&args);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("close"));

    assert_eq!(run(&["eval", "--spec", &spec, "--count", "0"]).status.code(), Some(1));
    assert_eq!(run(&["dice", &path(dir.path(), "missing.pgm"), &truth]).status.code(), Some(1));
    assert_eq!(run(&["segment", "--input", &image]).status.code(), Some(1));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
}

#[test]
fn eval_reports_every_method() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), &disk_spec(50.0));
    let out = run(&["eval", "--spec", &spec, "--count", "3", "--rng-seed", "10", "--methods", "adapted,classic,threshold"]);
    assert!(out.status.success());
    let r = report(&out);
    let methods = r["result"]["methods"].as_array().unwrap();
    assert_eq!(methods.len(), 3);
    let seeds: Vec<u64> = methods[0]["images"].as_array().unwrap().iter().map(|i| i["rng_seed"].as_u64().unwrap()).collect();
    assert_eq!(seeds, vec![10, 11, 12]);
    assert!(methods[2]["threshold"].as_f64().is_some());
    assert!(r["result"]["rng_algorithm"].as_str().unwrap().contains("ChaCha8"));
}

#[test]
fn phantom_is_deterministic_and_validated() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), &disk_spec(50.0));
    let (a, b, t) = (path(dir.path(), "a.pgm"), path(dir.path(), "b.pgm"), path(dir.path(), "t.pgm"));
    assert!(run(&["phantom", "--spec", &spec, "--output", &a, "--truth-out", &t]).status.success());
    assert!(run(&["phantom", "--spec", &spec, "--output", &b, "--truth-out", &t]).status.success());
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    let bad = path(dir.path(), "bad.json");
    fs::write(&bad, "{ not json").unwrap();
    assert_eq!(run(&["phantom", "--spec", &bad, "--output", &a, "--truth-out", &t]).status.code(), Some(1));
}

#[test]
fn baseline_extremes_and_dice_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), &disk_spec(0.0));
    let (image, truth, mask) = (path(dir.path(), "a.pgm"), path(dir.path(), "t.pgm"), path(dir.path(), "m.pgm"));
    assert!(run(&["phantom", "--spec", &spec, "--output", &image, "--truth-out", &truth]).status.success());
    let out = run(&["baseline", "--input", &image, "--threshold", "0", "--output", &mask]);
    assert_eq!(report(&out)["result"]["mask_area"], 128 * 128);
    let out = run(&["baseline", "--input", &image, "--threshold", "5000", "--output", &mask]);
    assert_eq!(report(&out)["result"]["mask_area"], 0);
    assert_eq!(report(&run(&["dice", &truth, &truth]))["result"]["dice"], 1.0);

    let small = PhantomSpec { width: 64, height: 64, shapes: vec![], ..disk_spec(0.0) };
    let small_spec = write_spec(dir.path(), &small);
    let (si, st) = (path(dir.path(), "si.pgm"), path(dir.path(), "st.pgm"));
    assert!(run(&["phantom", "--spec", &small_spec, "--output", &si, "--truth-out", &st]).status.success());
    assert_eq!(run(&["dice", &st, &truth]).status.code(), Some(1));
}

#[test]
fn uniform_image_has_no_boundary() {
    let dir = tempfile::tempdir().unwrap();
    let flat = PhantomSpec { shapes: vec![], ..disk_spec(0.0) };
    let spec = write_spec(dir.path(), &flat);
    let (image, truth, mask) = (path(dir.path(), "a.pgm"), path(dir.path(), "t.pgm"), path(dir.path(), "m.pgm"));
    assert!(run(&["phantom", "--spec", &spec, "--output", &image, "--truth-out", &truth]).status.success());
    let mut args = vec!["segment", "--input", &image, "--output", &mask];
    args.extend(SEED);
    assert_eq!(run(&args).status.code(), Some(2));
}
