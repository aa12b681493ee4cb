// SPDX-License-Identifier: MIT OR Apache-2.0

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use modalprobe::{write_run, ActivationRun, Matrix, ProbeRng};
use sha2::{Digest, Sha256};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_modalprobe"));
    c.env_remove("PROBE_THREADS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn synthetic_run(dir: &Path, model_id: &str, layers: usize, f: impl Fn(usize, usize, usize) -> (f32, f32)) {
    let (n, d) = (6, 4);
    let certain = (0..layers).map(|l| Matrix::from_fn(n, d, |i, j| f(l, i, j).0)).collect();
    let uncertain = (0..layers).map(|l| Matrix::from_fn(n, d, |i, j| f(l, i, j).1)).collect();
    let ids = (0..n).map(|i| format!("p{i}")).collect();
    write_run(&ActivationRun::new(model_id, ids, certain, uncertain).unwrap(), dir).unwrap();
}

fn spread_run(dir: &Path, model_id: &str) {
    synthetic_run(dir, model_id, 4, |l, i, j| {
        let base = ((i * 7 + j * 3 + l) % 5) as f32 - 2.0;
        (base, base + 0.5 * (l + 1) as f32 * if j == 0 { 1.0 } else { 0.2 })
    });
}

#[test]
fn pairgen_counts_matches() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("pairs.jsonl");
    let o = run(&["pairgen", "--input", s(&fixture("claims3.jsonl")), "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read_to_string(&out).unwrap().lines().count(), 2);
    let stats: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("pairs.jsonl.stats.json")).unwrap()).unwrap();
    assert_eq!(stats["matched_sentences"], 2);
    assert_eq!(stats["input_sentences"], 3);
}

#[test]
fn pairgen_renders_documented_prompt() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("pairs.jsonl");
    let o = run(&["pairgen", "--input", s(&fixture("claims20.jsonl")), "--out", s(&out)]);
    assert!(o.status.success());
    let first: serde_json::Value =
        serde_json::from_str(fs::read_to_string(&out).unwrap().lines().next().unwrap()).unwrap();
    let expected = "<|im_start|>user\n\
Governments and technology companies [MASK] do more to protect online privacy and security.\n\
Choose a replacement for the MASK.\n\
A) Must B) Might\n\
<|im_end|>\n\
<|im_start|>assistant\n";
    assert_eq!(first["prompt_certain"], format!("{expected}A"));
    assert_eq!(first["prompt_uncertain"], format!("{expected}B"));
}

#[test]
fn pairgen_missing_input_is_io_error() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("no-such-claims.jsonl");
    let o = run(&["pairgen", "--input", s(&missing), "--out", s(&tmp.path().join("p.jsonl"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("no-such-claims.jsonl"));
}

#[test]
fn pairgen_malformed_line_is_validation_error() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("bad.jsonl");
    fs::write(&input, "{\"claim\": \"We must go.\"}\n{\"claim\": 5}\n").unwrap();
    let o = run(&["pairgen", "--input", s(&input), "--out", s(&tmp.path().join("p.jsonl"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
    assert!(!tmp.path().join("p.jsonl").exists());
}

#[test]
fn msu_outputs_and_determinism() {
    let tmp = tempfile::tempdir().unwrap();
    let run_dir = tmp.path().join("run");
    spread_run(&run_dir, "synthetic");
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for out in [&a, &b] {
        let o = run(&["msu", "--run", s(&run_dir), "--out", s(out), "--seed", "5"]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for f in ["msu.json", "msu.csv", "msu.svg"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let csv = fs::read_to_string(a.join("msu.csv")).unwrap();
    assert!(csv.starts_with("layer,msu,ci_low,ci_high\n"));
    assert_eq!(csv.lines().count(), 5);
    let svg = fs::read_to_string(a.join("msu.svg")).unwrap();
    assert!(svg.contains("ci-band") && svg.contains("<polyline"));
}

#[test]
fn msu_zero_difference_run_is_flat() {
    let tmp = tempfile::tempdir().unwrap();
    let run_dir = tmp.path().join("run");
    synthetic_run(&run_dir, "zero", 3, |l, i, j| {
        let v = (l + i + j) as f32;
        (v, v)
    });
    let out = tmp.path().join("out");
    let o = run(&["msu", "--run", s(&run_dir), "--out", s(&out), "--seed", "1"]);
    assert!(o.status.success());
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("msu.json")).unwrap()).unwrap();
    assert!(json["per_layer"].as_array().unwrap().iter().all(|l| l["msu"] == 0.0));
    assert_eq!(json["trend"]["degenerate"], true);
    assert_eq!(json["trend"]["spearman_rho"], 0.0);
}

#[test]
fn msu_rejects_bad_runs_and_missing_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let run_dir = tmp.path().join("run");
    spread_run(&run_dir, "m");
    let out = tmp.path().join("out");

    let o = run(&["msu", "--run", s(&run_dir), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("seed"));

    let manifest = run_dir.join("manifest.json");
    let text = fs::read_to_string(&manifest).unwrap().replace("\"n_pairs\": 6", "\"n_pairs\": 5");
    fs::write(&manifest, text).unwrap();
    let o = run(&["msu", "--run", s(&run_dir), "--out", s(&out), "--seed", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("manifest-inconsistency"), "{}", stderr(&o));
    assert!(stderr(&o).contains("n_pairs=5"));
}

#[test]
fn msu_reads_seed_from_config() {
    let tmp = tempfile::tempdir().unwrap();
    let run_dir = tmp.path().join("run");
    spread_run(&run_dir, "m");
    let cfg = tmp.path().join("probe.toml");
    fs::write(&cfg, "[msu]\nn_resamples = 50\nseed = 3\n").unwrap();
    let out = tmp.path().join("out");
    let o = run(&["msu", "--run", s(&run_dir), "--out", s(&out), "--config", s(&cfg)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("msu.json")).unwrap()).unwrap();
    assert_eq!(json["bootstrap"]["n_resamples"], 50);
    assert_eq!(json["bootstrap"]["seed"], 3);
}

#[test]
fn pca_all_layers_and_range_check() {
    let tmp = tempfile::tempdir().unwrap();
    let run_dir = tmp.path().join("run");
    spread_run(&run_dir, "m");
    let out = tmp.path().join("out");
    let o = run(&["pca", "--run", s(&run_dir), "--layers", "all", "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let names: Vec<String> = fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    assert_eq!(names.iter().filter(|n| n.ends_with(".svg")).count(), 4);
    assert_eq!(names.iter().filter(|n| n.ends_with(".csv")).count(), 4);
    assert!(names.contains(&"pca.json".to_string()));
    let csv = fs::read_to_string(out.join("pca_layer_2.csv")).unwrap();
    assert!(csv.starts_with("arm,pc1,pc2\n"));
    assert_eq!(csv.lines().filter(|l| l.starts_with("certain,")).count(), 6);
    assert_eq!(csv.lines().filter(|l| l.starts_with("uncertain,")).count(), 6);

    let o = run(&["pca", "--run", s(&run_dir), "--layers", "9", "--out", s(&tmp.path().join("x"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("layer 9"));
}

#[test]
fn pca_two_gaussians_are_separable_everywhere() {
    let tmp = tempfile::tempdir().unwrap();
    let run_dir = tmp.path().join("run");
    let (n, d, layers) = (40, 8, 3);
    let mut rng = ProbeRng::new(8);
    let mut normal = move || {
        let (u1, u2) = (1.0 - rng.next_f64(), rng.next_f64());
        ((-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()) as f32
    };
    let mut certain = Vec::new();
    let mut uncertain = Vec::new();
    for l in 0..layers {
        certain.push(Matrix::from_fn(n, d, |_, _| normal()));
        uncertain.push(Matrix::from_fn(n, d, |_, j| normal() + if j == l { 10.0 } else { 0.0 }));
    }
    let ids = (0..n).map(|i| format!("g{i}")).collect();
    write_run(&ActivationRun::new("gauss", ids, certain, uncertain).unwrap(), &run_dir).unwrap();
    let out = tmp.path().join("out");
    assert!(run(&["pca", "--run", s(&run_dir), "--out", s(&out)]).status.success());
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("pca.json")).unwrap()).unwrap();
    for layer in json["layers"].as_array().unwrap() {
        assert!(layer["separability"].as_f64().unwrap() > 0.95, "{layer}");
    }
}

fn analyzed(tmp: &Path, model_id: &str) -> PathBuf {
    let run_dir = tmp.join(format!("run-{model_id}"));
    spread_run(&run_dir, model_id);
    let out = tmp.join(format!("out-{model_id}"));
    assert!(run(&["msu", "--run", s(&run_dir), "--out", s(&out), "--seed", "2"]).status.success());
    assert!(run(&["pca", "--run", s(&run_dir), "--out", s(&out)]).status.success());
    out
}

#[test]
fn report_combines_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let a = analyzed(tmp.path(), "alpha");
    let b = analyzed(tmp.path(), "beta");
    let html_path = tmp.path().join("report.html");
    let o = run(&["report", "--input", s(&a), s(&b), "--out", s(&html_path)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let html = fs::read_to_string(&html_path).unwrap();
    assert!(html.contains("MSU") && html.contains("inversion"));
    assert!(html.contains("not directly comparable"));
    assert_eq!(html.matches("<tr><td>alpha</td>").count(), 1);
    assert_eq!(html.matches("<tr><td>beta</td>").count(), 1);
    assert!(html.contains("<svg"));

    let bundle: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("report.json")).unwrap()).unwrap();
    let runs = bundle["runs"].as_array().unwrap();
    assert_eq!(runs.len(), 2);
    for input in runs[0]["provenance"]["inputs"].as_array().unwrap() {
        let bytes = fs::read(input["path"].as_str().unwrap()).unwrap();
        assert_eq!(input["sha256"], hex::encode(Sha256::digest(&bytes)));
    }
}

#[test]
fn report_rejects_missing_inputs() {
    let tmp = tempfile::tempdir().unwrap();
    let empty = tmp.path().join("empty");
    fs::create_dir(&empty).unwrap();
    let o = run(&["report", "--input", s(&empty), "--out", s(&tmp.path().join("r.html"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("msu.json"));
}

#[test]
fn thread_cap_is_validated() {
    let tmp = tempfile::tempdir().unwrap();
    let run_dir = tmp.path().join("run");
    spread_run(&run_dir, "m");
    let out = tmp.path().join("out");
    let o = bin()
        .env("PROBE_THREADS", "zero")
        .args(["msu", "--run", s(&run_dir), "--out", s(&out), "--seed", "1"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = bin()
        .env("PROBE_THREADS", "2")
        .args(["msu", "--run", s(&run_dir), "--out", s(&out), "--seed", "1"])
        .output()
        .unwrap();
    assert!(o.status.success());
}
