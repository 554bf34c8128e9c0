//! End-to-end tests of the `cplab` binary: exit codes, output layout and
//! byte-level reproducibility.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn cplab(args: &[&str], env_out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_cplab"));
    cmd.args(args);
    match env_out {
        Some(p) => cmd.env("CPLAB_OUT", p),
        None => cmd.env_remove("CPLAB_OUT"),
    };
    cmd.output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn scenario(name: &str, op: &str, params: Value) -> Value {
    json!({
        "schema": 1,
        "name": name,
        "graph": {"family": {"lattice": {"dim": 1}}, "truncation": 10},
        "lambda": 2.0,
        "operation": op,
        "params": params,
        "reps": 200,
        "seed": 42
    })
}

fn write(dir: &Path, file: &str, v: &Value) -> PathBuf {
    let p = dir.join(file);
    std::fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn tail() -> Value {
    scenario("tail", "tau_tail", json!({"t_grid": [1.0, 2.0, 4.0, 8.0], "horizon": 20.0, "fit_range": [1.0, 8.0]}))
}

fn listing(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    v.sort();
    v
}

#[test]
fn zero_reps_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = tail();
    v["reps"] = json!(0);
    let out = cplab(&["run", s(&write(dir.path(), "x.json", &v)), "-o", s(&dir.path().join("out"))], None);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("reps"));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn missing_seed_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = tail();
    v.as_object_mut().unwrap().remove("seed");
    let out = cplab(&["run", s(&write(dir.path(), "x.json", &v))], None);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed"));
}

#[test]
fn injected_fault_fails_the_deterministic_checks() {
    let dir = tempfile::tempdir().unwrap();
    for op in ["check_monotone", "check_additivity", "check_duality_identity"] {
        let clean = write(dir.path(), "clean.json", &scenario("c", op, json!({})));
        assert_eq!(code(&cplab(&["run", s(&clean), "-o", s(&dir.path().join(op).join("clean"))], None)), 0, "{op}");
        let faulty = write(dir.path(), "fault.json", &scenario("f", op, json!({"fault": "desync"})));
        let out_dir = dir.path().join(op).join("fault");
        assert_eq!(code(&cplab(&["run", s(&faulty), "-o", s(&out_dir)], None)), 1, "{op}");
        let rec: Value = serde_json::from_str(std::fs::read_to_string(out_dir.join("records.jsonl")).unwrap().trim()).unwrap();
        assert_eq!(rec["status"], "check_failed");
        assert!(rec["result"]["statistic"].as_f64().unwrap() > 0.0);
    }
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(dir.path(), "tail.json", &tail());
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(code(&cplab(&["run", s(&file), "-o", s(&a)], None)), 0);
    assert_eq!(code(&cplab(&["run", s(&file), "-o", s(&b)], None)), 0);
    let files = listing(&a);
    assert_eq!(files, ["manifest.json", "records.jsonl", "tail.csv", "tail.svg"]);
    assert_eq!(files, listing(&b));
    for f in files.iter().filter(|f| *f != "manifest.json") {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    let ma: Value = serde_json::from_slice(&std::fs::read(a.join("manifest.json")).unwrap()).unwrap();
    let mb: Value = serde_json::from_slice(&std::fs::read(b.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(ma["files"], mb["files"]);
    assert_eq!(ma["scenario_hash"], mb["scenario_hash"]);
    for f in ma["files"].as_array().unwrap() {
        let bytes = std::fs::read(a.join(f["path"].as_str().unwrap())).unwrap();
        assert_eq!(f["sha256"], contact_lab::io::sha256_hex(&bytes));
    }
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for threads in [1, 3] {
        let mut v = tail();
        v["threads"] = json!(threads);
        let file = write(dir.path(), "t.json", &v);
        let out = dir.path().join(format!("t{threads}"));
        assert_eq!(code(&cplab(&["run", s(&file), "-o", s(&out)], None)), 0);
        outputs.push(std::fs::read(out.join("tail.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn default_output_root_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(dir.path(), "tail.json", &tail());
    let root = dir.path().join("root");
    assert_eq!(code(&cplab(&["run", s(&file)], Some(&root))), 0);
    assert!(root.join("tail").join("manifest.json").exists());
}

#[test]
fn acceptance_floor_aborts_with_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let params = json!({
        "burn_in": 10.0,
        "t_grid": [0.0, 1.0],
        "pasts": [{"all_infected": {"sites": [0], "from": -4.0, "to": 0.0}}],
        "floor": 0.5
    });
    let file = write(dir.path(), "phi.json", &scenario("phi", "phi_mixing", params));
    let out = dir.path().join("out");
    let o = cplab(&["run", s(&file), "-o", s(&out)], None);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    let rec = std::fs::read_to_string(out.join("records.jsonl")).unwrap();
    assert!(rec.contains("aborted") && rec.contains("acceptance rate"), "{rec}");
    assert!(out.join("manifest.json").exists());
}

#[test]
fn truncation_guard_aborts() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = scenario("rho", "rho", json!({"burn_in": 20.0, "t_grid": [1.0, 2.0], "truncation_pilot": 400}));
    v["graph"]["truncation"] = json!(1);
    let file = write(dir.path(), "rho.json", &v);
    let out = dir.path().join("out");
    assert_eq!(code(&cplab(&["run", s(&file), "-o", s(&out)], None)), 3);
    let rec = std::fs::read_to_string(out.join("records.jsonl")).unwrap();
    assert!(rec.contains("discrepancy"), "{rec}");
}

#[test]
fn suites_aggregate_the_worst_status() {
    let dir = tempfile::tempdir().unwrap();
    let empty = write(dir.path(), "empty.json", &json!({"schema": 1, "name": "empty", "scenarios": []}));
    let out = dir.path().join("empty_out");
    assert_eq!(code(&cplab(&["suite", s(&empty), "-o", s(&out)], None)), 0);
    let summary: Value = serde_json::from_slice(&std::fs::read(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["scenarios"], json!([]));
    assert!(out.join("dashboard.svg").exists());

    write(dir.path(), "tail.json", &tail());
    let suite = json!({
        "schema": 1,
        "name": "mixed",
        "scenarios": ["tail.json", scenario("bad", "check_monotone", json!({"fault": "desync"}))]
    });
    let file = write(dir.path(), "mixed.json", &suite);
    let out = dir.path().join("mixed_out");
    assert_eq!(code(&cplab(&["suite", s(&file), "-o", s(&out)], None)), 1);
    let summary: Value = serde_json::from_slice(&std::fs::read(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["scenarios"][0]["status"], "ok");
    assert_eq!(summary["scenarios"][1]["exit_code"], 1);
    assert!(out.join("tail").join("tail.csv").exists() && out.join("bad").join("records.jsonl").exists());
    assert!(std::fs::read_to_string(out.join("dashboard.svg")).unwrap().contains("tail: "));
}

#[test]
fn plot_renders_curves_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("curve.csv");
    std::fs::write(&csv, "t,value,stderr\n1,0.5,0.05\n2,0.25,0.02\n").unwrap();
    let (a, b) = (dir.path().join("a.svg"), dir.path().join("b.svg"));
    assert_eq!(code(&cplab(&["plot", s(&csv), "-o", s(&a), "--log-y"], None)), 0);
    assert_eq!(code(&cplab(&["plot", s(&csv), "-o", s(&b), "--log-y"], None)), 0);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "time,v\n1,2\n").unwrap();
    let out = cplab(&["plot", s(&bad), "-o", s(&dir.path().join("c.svg"))], None);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("header"));
}

#[test]
fn validate_reports_each_file() {
    let dir = tempfile::tempdir().unwrap();
    let good = write(dir.path(), "good.json", &tail());
    let mut v = tail();
    v["operation"] = json!("no_such_operation");
    let bad = write(dir.path(), "bad.json", &v);
    assert_eq!(code(&cplab(&["validate", s(&good)], None)), 0);
    let out = cplab(&["validate", s(&good), s(&bad)], None);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stdout).contains("unknown operation"));
}

#[test]
fn trajectory_export_has_a_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = scenario("traj", "trajectory", json!({"horizon": 3.0, "record": [0, 1, 2]}));
    v["reps"] = json!(2);
    let file = write(dir.path(), "traj.json", &v);
    let out = dir.path().join("out");
    assert_eq!(code(&cplab(&["run", s(&file), "-o", s(&out)], None)), 0);
    let csv = std::fs::read_to_string(out.join("trajectory_1.csv")).unwrap();
    assert!(csv.starts_with("time,vertex,state\n0,0,1\n0,1,0\n0,2,0\n"));
    let side: Value = serde_json::from_slice(&std::fs::read(out.join("trajectory_1.json")).unwrap()).unwrap();
    assert_eq!(side["vertices"], json!([0, 1, 2]));
    assert_eq!(side["events"].as_u64().unwrap() as usize, csv.lines().count() - 4);
}

#[test]
fn shipped_scenarios_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let files: Vec<String> = listing(&dir).into_iter().filter(|f| f.ends_with(".json")).map(|f| s(&dir.join(f)).to_owned()).collect();
    assert!(!files.is_empty());
    let mut args = vec!["validate"];
    args.extend(files.iter().map(String::as_str));
    let out = cplab(&args, None);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
}
