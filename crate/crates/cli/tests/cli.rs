use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn xplab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_xplab"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .env_remove("XPLAB_DP_BUDGET")
        .output()
        .unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn gen_writes_graph_and_structure() {
    let d = TempDir::new().unwrap();
    let o = xplab(d.path(), &["gen", "--kappa", "2.5", "--lambda", "2", "--gamma", "2"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rep = json(&d.path().join("structure.json"));
    assert_eq!(rep["report"]["path_len"], 53);
    assert_eq!(rep["config"]["kappa"], "2.5");
    let g = json(&d.path().join("graph.json"));
    assert!(g.is_object());
    let graph = d.path().join("graph.json");
    let v = Command::new(env!("CARGO_BIN_EXE_xplab"))
        .args(["validate", "--kappa", "2.5", "--lambda", "2", "--gamma", "2", "--graph"])
        .arg(&graph)
        .arg("--out")
        .arg(d.path())
        .output()
        .unwrap();
    assert_eq!(code(&v), 0);
}

#[test]
fn validate_flags_a_mismatched_graph() {
    let d = TempDir::new().unwrap();
    assert_eq!(code(&xplab(d.path(), &["gen", "--kappa", "2", "--gamma", "1"])), 0);
    let graph = d.path().join("graph.json");
    let o = Command::new(env!("CARGO_BIN_EXE_xplab"))
        .args(["validate", "--kappa", "2", "--gamma", "2", "--graph"])
        .arg(&graph)
        .arg("--out")
        .arg(d.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 3);
}

#[test]
fn bad_parameters_exit_two() {
    let d = TempDir::new().unwrap();
    assert_eq!(code(&xplab(d.path(), &["gen", "--lambda", "1"])), 2);
    assert_eq!(code(&xplab(d.path(), &["gen", "--kappa", "0.5"])), 2);
    assert_eq!(code(&xplab(d.path(), &["run", "--algo", "nope"])), 2);
    std::fs::write(d.path().join("cfg.json"), r#"{"kapa": 2}"#).unwrap();
    let cfg = d.path().join("cfg.json");
    assert_eq!(code(&xplab(d.path(), &["gen", "--config", cfg.to_str().unwrap()])), 2);
}

#[test]
fn flags_override_config_file() {
    let d = TempDir::new().unwrap();
    let cfg = d.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"kappa": 2.5, "lambda": 2, "gamma": 3, "seed": 5}"#).unwrap();
    let o = xplab(d.path(), &["gen", "--config", cfg.to_str().unwrap(), "--gamma", "1"]);
    assert_eq!(code(&o), 0);
    let rep = json(&d.path().join("structure.json"));
    assert_eq!(rep["config"]["gamma"], 1);
    assert_eq!(rep["config"]["seed"], 5);
    assert_eq!(rep["config"]["kappa"], "2.5");
    assert_eq!(rep["report"]["node_count"], 93);
}

#[test]
fn cutsim_relay_fits_on_wide_family() {
    let d = TempDir::new().unwrap();
    let o = xplab(
        d.path(),
        &["cutsim", "--algo", "relay", "--kappa", "2.5", "--lambda", "4", "--m", "4", "--format", "csv"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let mut rdr = csv::Reader::from_path(d.path().join("cutsim.csv")).unwrap();
    let header: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    let required = [
        "kappa", "lambda", "gamma", "T_A", "rounds_used", "round_bound", "bits", "bit_bound", "output_match",
    ];
    assert_eq!(&header[..required.len()], required);
    let row = rdr.records().next().unwrap().unwrap();
    assert_eq!(&row[8], "true");
    let transcript = json(&d.path().join("cutsim_transcript.json"));
    let first = &transcript["iterations"][0];
    for key in ["round", "phase", "index", "tau", "messages", "cumulative_bits"] {
        assert!(first.get(key).is_some(), "{key}");
    }
}

#[test]
fn cutsim_relay_on_smallest_family_is_a_bound_violation() {
    let d = TempDir::new().unwrap();
    let o = xplab(d.path(), &["cutsim", "--algo", "relay", "--kappa", "1", "--m", "2"]);
    assert_eq!(code(&o), 3);
    let o = xplab(d.path(), &["cutsim", "--algo", "flood"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn cutsim_chatter_at_the_step_limit() {
    let d = TempDir::new().unwrap();
    let base = ["cutsim", "--algo", "chatter", "--kappa", "2.5", "--lambda", "2"];
    let ok = xplab(d.path(), &[&base[..], &["--rounds", "14"]].concat());
    assert_eq!(code(&ok), 0, "{}", String::from_utf8_lossy(&ok.stderr));
    let over = xplab(d.path(), &[&base[..], &["--rounds", "15"]].concat());
    assert_eq!(code(&over), 3);
}

#[test]
fn run_writes_jsonl_trace() {
    let d = TempDir::new().unwrap();
    let o = xplab(d.path(), &["run", "--algo", "relay", "--m", "4", "--r", "2", "--seed", "9"]);
    assert_eq!(code(&o), 0);
    let text = std::fs::read_to_string(d.path().join("trace.jsonl")).unwrap();
    assert!(text.lines().all(|l| serde_json::from_str::<serde_json::Value>(l).is_ok()));
    let rep = json(&d.path().join("run.json"));
    assert!(rep["report"]["pc"].is_u64());
    let o = xplab(d.path(), &["run", "--algo", "chatter", "--bandwidth", "1", "--rounds", "3"]);
    assert_eq!(code(&o), 0);
    let rep = json(&d.path().join("run.json"));
    assert_eq!(rep["report"]["bandwidth"], 1);
    let text = std::fs::read_to_string(d.path().join("trace.jsonl")).unwrap();
    for line in text.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        if v["kind"] == "message" {
            assert!(v["bits"].as_u64().unwrap() <= 1);
        }
    }
}

#[test]
fn reduce_reports_exact_fraction() {
    let d = TempDir::new().unwrap();
    let o = xplab(d.path(), &["reduce", "--trials", "0", "--ell-check", "--format", "csv"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let mut rdr = csv::Reader::from_path(d.path().join("reduce.csv")).unwrap();
    let header: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    let required = [
        "kappa", "lambda", "gamma", "r", "m", "L", "ell", "exact_prob", "trials", "successes",
    ];
    assert_eq!(&header[..required.len()], required);
    let row = rdr.records().next().unwrap().unwrap();
    let (n, den) = row[7].split_once('/').expect("fraction");
    let (n, den): (u64, u64) = (n.parse().unwrap(), den.parse().unwrap());
    assert!(3 * n >= 2 * den);
    assert_eq!((&row[8], &row[9]), ("0", "0"));
}

#[test]
fn reduce_with_instance_file() {
    let d = TempDir::new().unwrap();
    let inst = d.path().join("inst.json");
    std::fs::write(&inst, r#"{"m":4,"r":2,"fA":[2,3,4,1],"fB":[3,1,4,2]}"#).unwrap();
    let args = ["reduce", "--instance", inst.to_str().unwrap(), "--gamma", "16", "--trials", "200"];
    let o = xplab(d.path(), &args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rep = json(&d.path().join("reduce.json"));
    assert_eq!(rep["config"]["m"], 4);
    assert_eq!(rep["report"]["modal_output"], 1);
    let o = xplab(d.path(), &[&args[..], &["--m", "3"]].concat());
    assert_eq!(code(&o), 2);
    let o = xplab(d.path(), &["reduce", "--m", "4", "--r", "2", "--gamma", "2"]);
    assert_eq!(code(&o), 2, "gadget does not fit");
}

#[test]
fn dp_budget_env_is_respected() {
    let d = TempDir::new().unwrap();
    let run = |budget: &str| {
        Command::new(env!("CARGO_BIN_EXE_xplab"))
            .args(["reduce", "--trials", "0", "--out"])
            .arg(d.path())
            .env("XPLAB_DP_BUDGET", budget)
            .output()
            .unwrap()
    };
    assert_eq!(code(&run("5")), 0);
    let rep = json(&d.path().join("reduce.json"));
    assert!(rep["report"]["exact_prob"].is_null());
    assert_eq!(rep["config"]["dp_budget"], 5);
    assert_eq!(code(&run("many")), 2);
}

#[test]
fn pc_solvers_agree() {
    let d = TempDir::new().unwrap();
    let o = xplab(d.path(), &["pc", "--m", "64", "--r", "8", "--seed", "3"]);
    assert_eq!(code(&o), 0);
    let inst = json(&d.path().join("instance.json"));
    assert_eq!(inst["m"], 64);
    assert_eq!(inst["fA"].as_array().unwrap().len(), 64);
    assert!(d.path().join("pc.json").exists());
}
