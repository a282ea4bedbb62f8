use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn hitchin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hitchin")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

/// CSV body without the provenance lines.
fn body(text: &str) -> Vec<Vec<String>> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .has_headers(false)
        .from_reader(text.as_bytes());
    r.records().map(|rec| rec.unwrap().iter().map(str::to_string).collect()).collect()
}

fn column(rows: &[Vec<String>], name: &str) -> Vec<String> {
    let i = rows[0].iter().position(|c| c == name).unwrap();
    rows[1..].iter().map(|r| r[i].clone()).collect()
}

fn write_json(dir: &TempDir, name: &str, v: &Value) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn generated(dir: &TempDir) -> PathBuf {
    let out = dir.path().join("fuchsian.json");
    let o = hitchin(&["fuchsian-gen", "--config", fixture("surface_n3.json").to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    out
}

#[test]
fn fuchsian_invariants_pass_the_relation_check() {
    let dir = TempDir::new().unwrap();
    let cfg = generated(&dir);
    let o = hitchin(&["invariants", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rows = body(&stdout(&o));
    assert_eq!(rows[0], ["pants_id", "relation", "k", "residual"]);
    assert!(column(&rows, "relation").iter().any(|r| r.starts_with("leaf_equality_curve")));
    assert!(column(&rows, "residual").iter().all(|r| r.parse::<f64>().unwrap() < 1e-9));
}

#[test]
fn perturbed_invariants_name_the_failing_relation() {
    let dir = TempDir::new().unwrap();
    let mut v = read_json(&generated(&dir));
    let s = &mut v["parameters"]["invariants"][0]["sigma_ab"][0];
    *s = Value::from(s.as_f64().unwrap() + 0.25);
    let cfg = write_json(&dir, "bent.json", &v);
    let o = hitchin(&["invariants", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("relation failed: gap_"), "{}", stderr(&o));
}

#[test]
fn missing_shear_block_is_a_schema_error() {
    let dir = TempDir::new().unwrap();
    let mut v = read_json(&generated(&dir));
    v["parameters"]["invariants"][1].as_object_mut().unwrap().remove("sigma_bc");
    let cfg = write_json(&dir, "short.json", &v);
    let o = hitchin(&["invariants", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("sigma_bc"));
}

#[test]
fn unknown_keys_and_missing_config_exit_two() {
    let dir = TempDir::new().unwrap();
    let cfg = write_json(&dir, "odd.json", &serde_json::json!({"n": 3, "scan": {"direction": "zero", "steps": 2, "speed": 1}}));
    assert_eq!(code(&hitchin(&["entropy-scan", "--config", cfg.to_str().unwrap()])), 2);
    assert_eq!(code(&hitchin(&["kbound"])), 2);
    assert_eq!(code(&hitchin(&["no-such-command"])), 2);
}

fn reparam(direction: &str, input: &Path, out: &Path) -> Output {
    hitchin(&["reparam", "--direction", direction, "--config", input.to_str().unwrap(), "--out", out.to_str().unwrap()])
}

#[test]
fn exact_reparameterization_round_trips() {
    let dir = TempDir::new().unwrap();
    let [i1, p1, i2, p2] = ["i1.json", "p1.json", "i2.json", "p2.json"].map(|n| dir.path().join(n));
    for (d, from, to) in [("inverse", fixture("coordinates_n3.json"), &i1), ("forward", i1.clone(), &p1)] {
        let o = reparam(d, &from, to);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    assert_eq!(read_json(&p1), read_json(&fixture("coordinates_n3.json")));
    assert_eq!(code(&reparam("inverse", &p1, &i2)), 0);
    assert_eq!(code(&reparam("forward", &i2, &p2)), 0);
    assert_eq!(std::fs::read(&i1).unwrap(), std::fs::read(&i2).unwrap());
    assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());

    // the recovered invariants satisfy every relation with zero residual
    let o = hitchin(&["invariants", "--config", i1.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("# backend: exact"));
    assert!(column(&body(&stdout(&o)), "residual").iter().all(|r| r == "0"));
}

#[test]
fn closed_chamber_boundary_is_rejected() {
    let dir = TempDir::new().unwrap();
    let mut v = read_json(&fixture("coordinates_n3.json"));
    v["parameters"]["boundary"][1] = serde_json::json!(["1/2", "1/2", "-1"]);
    let cfg = write_json(&dir, "wall.json", &v);
    let o = reparam("inverse", &cfg, &dir.path().join("x.json"));
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("open chamber"));
}

fn scan_rows(dir: &TempDir, direction: Value, steps: usize) -> Vec<Vec<String>> {
    let mut v = read_json(&fixture("surface_n3.json"));
    v["scan"] = serde_json::json!({"direction": direction, "steps": steps});
    let cfg = write_json(dir, "scan.json", &v);
    let o = hitchin(&["entropy-scan", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    body(&stdout(&o))
}

#[test]
fn triangle_ray_scan_has_increasing_k() {
    let dir = TempDir::new().unwrap();
    let rows = scan_rows(&dir, Value::from("triangle"), 10);
    assert_eq!(rows[0], ["step", "n", "g", "K", "L", "entropy_bound", "min_edge_id", "flags_ok", "error"]);
    let k: Vec<f64> = column(&rows, "K").iter().map(|x| x.parse().unwrap()).collect();
    assert_eq!(k.len(), 11);
    assert!(k.windows(2).all(|w| w[1] > w[0]));
    let h: Vec<f64> = column(&rows, "entropy_bound").iter().map(|x| x.parse().unwrap()).collect();
    assert!(h[10] < 0.2 * h[0]);
}

#[test]
fn zero_ray_is_constant_and_zero_steps_give_the_base_point() {
    let dir = TempDir::new().unwrap();
    let rows = scan_rows(&dir, Value::from("zero"), 4);
    let k = column(&rows, "K");
    assert_eq!(k.len(), 5);
    assert!(k.iter().all(|x| x == &k[0]));
    assert_eq!(scan_rows(&dir, Value::from("triangle"), 0).len(), 2);
}

fn trace(word: &str) -> (Vec<Vec<String>>, String) {
    let o = hitchin(&["psi-trace", "--config", fixture("surface_n3.json").to_str().unwrap(), "--word", word]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    (body(&stdout(&o)), stderr(&o))
}

fn counts(summary: &str) -> (String, String) {
    let field = |k: &str| summary.split_whitespace().find_map(|f| f.strip_prefix(k)).unwrap().to_string();
    (field("r="), field("s="))
}

#[test]
fn pants_curves_are_closed_leaves() {
    let (rows, summary) = trace("Tbat");
    assert_eq!(rows.len(), 1);
    assert!(summary.contains("outcome=closed-leaf r=0"));
}

#[test]
fn conjugate_words_share_r_and_s() {
    let (_, a) = trace("aaaB");
    let (_, b) = trace("tBSaaaBsbT");
    assert_eq!(counts(&a), counts(&b));
    assert_eq!(counts(&a), ("2".into(), "2".into()));
}

#[test]
fn transversal_curve_matches_the_recorded_encoding() {
    let o = hitchin(&["psi-trace", "--config", fixture("surface_n3.json").to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let golden = std::fs::read_to_string(fixture("psi_sTab.csv")).unwrap();
    assert_eq!(body(&stdout(&o)), body(&golden));
}

#[test]
fn reruns_differ_only_in_the_timestamp() {
    let cfg = fixture("surface_n3.json");
    let strip = |o: Output| -> Vec<String> {
        stdout(&o).lines().filter(|l| !l.starts_with("# generated_unix")).map(str::to_string).collect()
    };
    let a = strip(hitchin(&["kbound", "--config", cfg.to_str().unwrap()]));
    let b = strip(hitchin(&["kbound", "--config", cfg.to_str().unwrap()]));
    assert_eq!(a, b);
    assert!(a.iter().any(|l| l.starts_with("# config_sha256: ")));
}

#[test]
fn selftest_passes_and_catches_injected_faults() {
    let o = hitchin(&["selftest"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let o = hitchin(&["selftest", "--inject", "sign-flip"]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("FAIL cross-ratio identities") && stdout(&o).contains("swap identity"));
    let o = hitchin(&["selftest", "--inject", "backend-drift"]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("exact and float backends disagree"));
}
