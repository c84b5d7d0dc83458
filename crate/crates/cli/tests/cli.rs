use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn rpr2(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rpr2")).args(args).output().expect("binary runs")
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("rpr2-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn json_stdout(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn bound_nae35() {
    let v = json_stdout(&rpr2(&["bound", "nae35"]));
    let want = 3.0 * (21f64.sqrt() - 4.0) / 2.0;
    assert!((v["bound"].as_f64().unwrap() - want).abs() < 1e-9);
    assert!((v["p_star"].as_f64().unwrap() - 3.0 / 21f64.sqrt()).abs() < 1e-9);
    assert!(v["residual"].as_f64().unwrap() < 1e-9);
}

#[test]
fn exit_codes() {
    assert_eq!(rpr2(&["bound", "nae35", "--bogus"]).status.code(), Some(1));
    assert_eq!(rpr2(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(rpr2(&["hermite", "boundary", "--k", "3"]).status.code(), Some(1));
    assert_eq!(rpr2(&["sweep", "--base", "slin:x", "--K", "3"]).status.code(), Some(1));
    assert_eq!(rpr2(&["witness", "f4neg", "--eps=-1", "--samples", "10"]).status.code(), Some(2));
    assert_eq!(rpr2(&["gap", "gen", "--n", "5", "--instance", "/dev/null", "--vectors", "/dev/null"]).status.code(), Some(2));
    assert_eq!(rpr2(&["--help"]).status.code(), Some(0));
}

#[test]
fn stepopt_csv_row() {
    let out = rpr2(&["stepopt", "--K", "3,5", "--steps", "2", "--pm1", "--restarts", "8"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header, ["K", "steps", "pm1", "objective", "a_1", "b_0", "b_1", "alpha_3", "alpha_5"]);
    let objective: f64 = row[3].parse().unwrap();
    let a1: f64 = row[4].parse().unwrap();
    assert!((objective - 0.872886331).abs() < 1e-5, "{objective}");
    assert!((a1 - 2.27519364).abs() < 1e-4, "{a1}");
}

#[test]
fn sweep_csv() {
    let out = rpr2(&["sweep", "--base", r#"{"a":[2.27519364],"b":[-1,1]}"#, "--K", "3,5", "--range", "3:10:1"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "a,alpha_3,alpha_5");
    assert_eq!(lines.len(), 9);
    let last: Vec<f64> = lines[8].split(',').map(|s| s.parse().unwrap()).collect();
    assert_eq!(last[0], 10.0);
    assert!((last[1] - last[2]).abs() < 1e-9);
}

#[test]
fn hermite_boundary_csv() {
    let out = rpr2(&["hermite", "boundary", "--k", "2", "--angles", "8"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "angle_rad,c1,c3");
    assert_eq!(lines.len(), 9);
    // θ = 0 gives sign(x), whose first coefficient is √(2/π)
    let first: Vec<f64> = lines[1].split(',').map(|s| s.parse().unwrap()).collect();
    assert!((first[1] - (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-8);
}

#[test]
fn gap_round_and_manifest_replay() {
    let inst = tmp("inst.txt");
    let vecs = tmp("vecs.txt");
    let res = tmp("gen.json");
    let out = rpr2(&[
        "gap", "gen", "--n", "12", "--m3", "200", "--m5", "200", "--seed", "3",
        "--instance", inst.to_str().unwrap(), "--vectors", vecs.to_str().unwrap(),
        "--out", res.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let gen: Value = serde_json::from_str(&std::fs::read_to_string(&res).unwrap()).unwrap();
    assert_eq!(gen["biases_verified"], true);
    assert!((gen["total_weight"].as_f64().unwrap() - 1.0).abs() < 1e-9);

    let manifest_path = PathBuf::from(format!("{}.manifest.json", res.display()));
    let manifest: Value = serde_json::from_str(&std::fs::read_to_string(&manifest_path).unwrap()).unwrap();
    assert_eq!(manifest["subcommand"], "gap gen");
    assert_eq!(manifest["seeds"][0], 3);
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 3);

    let instance_before = std::fs::read_to_string(&inst).unwrap();
    let res2 = tmp("gen2.json");
    let out = rpr2(&["replay", manifest_path.to_str().unwrap(), "--out", res2.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(std::fs::read(&res).unwrap(), std::fs::read(&res2).unwrap());
    assert_eq!(std::fs::read_to_string(&inst).unwrap(), instance_before);

    let round = |f: &str| {
        json_stdout(&rpr2(&[
            "round", "--instance", inst.to_str().unwrap(), "--vectors", vecs.to_str().unwrap(),
            "--f", f, "--rounds", "50", "--seed", "9",
        ]))
    };
    let r = round("slin:4.072");
    assert_eq!(r["rounds"], 50);
    assert_eq!(r["f_spec"], "slin:4.072");
    let fraction = r["fraction"].as_f64().unwrap();
    assert!(fraction >= r["mean"].as_f64().unwrap() && fraction <= 1.0);
    assert_eq!(r, round("slin:4.072"));
    // f = 0 is the uniformly random assignment
    let z = round("zero");
    let (mean, se, base) = (z["mean"].as_f64().unwrap(), z["std_error"].as_f64().unwrap(), z["baseline"].as_f64().unwrap());
    assert!((mean - base).abs() < 4.0 * se + 1e-9, "{mean} vs {base} ± {se}");
}

#[test]
fn f_spec_from_file() {
    let path = tmp("f.json");
    std::fs::write(&path, r#"{"a": [2.27519364], "b": [-1.0, 1.0]}"#).unwrap();
    let a = rpr2(&["sweep", "--base", path.to_str().unwrap(), "--K", "3", "--range", "4:4:1"]);
    let b = rpr2(&["sweep", "--base", r#"{"a":[2.27519364],"b":[-1,1]}"#, "--K", "3", "--range", "4:4:1"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    std::fs::write(&path, r#"{"a": [2.0], "b": [0.5]}"#).unwrap();
    assert_eq!(rpr2(&["sweep", "--base", path.to_str().unwrap(), "--K", "3"]).status.code(), Some(1));
}

#[test]
fn witness_json() {
    let v = json_stdout(&rpr2(&["witness", "f4neg", "--delta", "0.1", "--eps", "0.2", "--samples", "200000"]));
    assert!((v["bias_first"].as_f64().unwrap() - 1.9 / 3.0).abs() < 1e-9);
    assert!((v["bias_rest"].as_f64().unwrap() - (1.0 - 0.4 + 0.01) / 6.0).abs() < 1e-9);
    assert_eq!(v["f4"]["samples"], 200000);
}

#[test]
fn small_ratio_and_curve() {
    let v = json_stdout(&rpr2(&["ratio", "--problem", "maxcut", "--N", "100", "--grid", "20", "--grid-cells", "50", "--rounds", "2"]));
    assert!((v["ratio"].as_f64().unwrap() - 0.8786).abs() < 3e-3, "{v}");
    let out = rpr2(&["curve", "--problem", "nae3", "--alphas", "4", "--rhos", "4", "--N", "40", "--buckets", "5"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("problem,alpha,rho,rho0_variant,completeness,soundness,ratio\n"));
    assert!(text.lines().count() > 1);
}
