use std::path::Path;
use std::process::{Command, Output};

use srmag_core::scenario::LIBRARY;

fn srmag(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_srmag")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

const HEIS: &str = "[frame]\nX1 = [\"1\", \"0\", \"-y/2\"]\nX2 = [\"0\", \"1\", \"x/2\"]\n";

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn validate_exit_codes() {
    for (name, _) in LIBRARY {
        let o = srmag(&["validate", name]);
        assert_eq!(code(&o), 0, "{name}: {}", stdout(&o));
    }
    let dir = tempfile::tempdir().unwrap();
    let swapped = write(
        dir.path(),
        "swapped.toml",
        "name = \"swapped\"\n[frame]\nX1 = [\"0\", \"1\", \"x/2\"]\nX2 = [\"1\", \"0\", \"-y/2\"]\n[field]\nB1 = \"1\"\nB2 = \"0\"\n",
    );
    let o = srmag(&["validate", &swapped]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("FAIL frame"));
    let malformed = write(dir.path(), "bad.toml", &format!("name = \"bad\"\n{HEIS}[field]\nB1 = \"x*(\"\nB2 = \"0\"\n"));
    assert_eq!(code(&srmag(&["validate", &malformed])), 2);
    assert_eq!(code(&srmag(&["validate", "no-such-scenario"])), 2);
    let json = srmag(&["validate", "engel", "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&json.stdout).unwrap();
    assert_eq!(v["checks"].as_array().unwrap().len(), 5);
}

#[test]
fn flow_is_deterministic_and_matches_the_lift() {
    let dir = tempfile::tempdir().unwrap();
    let run = |tag: &str, lifted: bool| {
        let out = dir.path().join(format!("{tag}.csv"));
        let man = dir.path().join(format!("{tag}.json"));
        let init = if lifted { "0,0,0,0,1,0,0,1" } else { "0,0,0,1,0,0" };
        let mut args = vec!["flow", "engel", "--init", init, "--T", "1", "--dt", "1e-3"];
        if lifted {
            args.push("--lifted");
        }
        args.extend(["--out", out.to_str().unwrap(), "--manifest", man.to_str().unwrap()]);
        assert_eq!(code(&srmag(&args)), 0);
        (std::fs::read(&out).unwrap(), std::fs::read(&man).unwrap())
    };
    let a = run("a", false);
    let b = run("b", false);
    assert_eq!(a.0, b.0);
    assert_eq!(a.1, b.1);
    let text = String::from_utf8(a.0).unwrap();
    assert!(text.starts_with("t,x,y,z,h1,h2,h0,u1,u2,alpha,energy\n"));
    assert_eq!(text.lines().count(), 1002);
    let lifted = String::from_utf8(run("l", true).0).unwrap();
    assert!(lifted.starts_with("t,x,y,z,w,z1,z2,z0,zw,energy\n"));
    let parse = |line: &str| line.split(',').map(|c| c.parse::<f64>().unwrap()).collect::<Vec<_>>();
    for (l1, l2) in text.lines().skip(1).zip(lifted.lines().skip(1)) {
        let (m, l) = (parse(l1), parse(l2));
        for k in 1..4 {
            assert!((m[k] - l[k]).abs() < 1e-6);
        }
        assert_eq!(l[8], 1.0);
    }
    let man: serde_json::Value = serde_json::from_slice(&run("c", false).1).unwrap();
    assert_eq!(man["scenario"], "engel");
    assert_eq!(man["scenario_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn flow_failures() {
    assert_eq!(code(&srmag(&["flow", "engel", "--init", "NaN,0,0,1,0,0", "--T", "1", "--dt", "0.01"])), 3);
    assert_eq!(code(&srmag(&["flow", "engel", "--init", "0,0,0,1,0,0", "--T", "1", "--dt", "0"])), 3);
    assert_eq!(code(&srmag(&["flow", "engel", "--init", "0,0,0,1,0", "--T", "1", "--dt", "0.01"])), 2);
    let dir = tempfile::tempdir().unwrap();
    let field_only = write(dir.path(), "b.toml", &format!("name = \"b\"\n{HEIS}[field]\nB1 = \"1\"\nB2 = \"0\"\n"));
    assert_eq!(code(&srmag(&["flow", &field_only, "--init", "0,0,0,1,0,0", "--T", "1", "--dt", "0.01"])), 2);
}

#[test]
fn zero_charge_flow_is_a_circle() {
    let dir = tempfile::tempdir().unwrap();
    let src = write(dir.path(), "q0.toml", &format!("name = \"q0\"\n{HEIS}[potential]\nA1 = \"0\"\nA2 = \"x^2/2\"\n[charge]\nq = 0.0\n"));
    let o = srmag(&["flow", &src, "--init", "0,0,0,1,0,1", "--T", "6.283185307179586", "--dt", "1e-3"]);
    assert_eq!(code(&o), 0);
    for line in stdout(&o).lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert!((v[1] * v[1] + (v[2] - 1.0).powi(2) - 1.0).abs() < 1e-8);
    }
}

#[test]
fn step_tables() {
    let o = srmag(&["step", "rank1-4z-x2", "--grid", "0:0:1,-2:2:5,0:0:1"]);
    assert_eq!(code(&o), 0);
    let rows: Vec<String> = stdout(&o).lines().map(str::to_string).collect();
    assert_eq!(rows[0], "x,y,z,step,method,witness_word,rank,char_flag");
    let steps: Vec<&str> = rows[1..].iter().map(|r| r.split(',').nth(3).unwrap()).collect();
    assert_eq!(steps, ["4", "4", "5", "4", "4"]);
    assert_eq!(rows[3], "0,0,0,5,both,X2X1b1,1,true");

    let o = srmag(&["step", "rank0-xn-3", "--grid", "0:0:1,-1:1:3,-1:1:3", "--budget", "8"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).lines().skip(1).all(|r| r.split(',').nth(3) == Some("6")));

    assert_eq!(code(&srmag(&["step", "engel", "--grid", "0:1:0,0:1:2,0:1:2"])), 2);

    let dir = tempfile::tempdir().unwrap();
    let pts = write(dir.path(), "p.txt", "# surface family\n1,0,1\n0,1,0\n1,0,0\n");
    let o = srmag(&["step", "surface-family-2", "--points", &pts, "--method", "brackets"]);
    let steps: Vec<String> = stdout(&o).lines().skip(1).map(|r| r.split(',').nth(3).unwrap().to_string()).collect();
    assert_eq!(steps, ["3", "5", "7"]);

    let o = srmag(&["step", "crossing-2"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).lines().count(), 4);
}

#[test]
fn thread_cap_does_not_change_output() {
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_srmag"))
            .env("SRMAG_THREADS", threads)
            .args(["step", "surface-family-1", "--grid", "-1:1:3,-1:1:3,-1:1:3"])
            .output()
            .unwrap()
    };
    let a = run("1");
    let b = run("3");
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(code(&run("zero")), 2);
}

#[test]
fn abnormal_reports() {
    let o = srmag(&["abnormal", "engel"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["passed"], true);
    assert_eq!(v["segments"].as_array().unwrap().len(), 1);

    let o = srmag(&["abnormal", "crossing-2", "--steps"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let classes: Vec<&str> = v["segments"].as_array().unwrap().iter().map(|s| s["class"].as_str().unwrap()).collect();
    assert_eq!(classes, ["characteristic", "zero_locus"]);
    let steps: Vec<&str> = v["samples"].as_array().unwrap().iter().map(|s| s["step"].as_str().unwrap()).collect();
    assert_eq!(steps[0], "3");
    assert_eq!(steps[8], "5");
    assert_eq!(steps[16], "4");

    let o = srmag(&["abnormal", "spiral-cylinder", "--init", "1,0,0", "--T", "1", "--dt", "0.01"]);
    assert_eq!(code(&o), 0);
    assert_eq!(code(&srmag(&["abnormal", "spiral-cylinder"])), 2);
}

#[test]
fn ksr_of_a_straight_line_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let src = write(dir.path(), "flat.toml", &format!("name = \"flat\"\n{HEIS}[potential]\nA1 = \"0\"\nA2 = \"0\"\n"));
    let traj = dir.path().join("t.csv");
    let o = srmag(&["flow", &src, "--init", "0,0,0,1,0,0", "--T", "0.4", "--dt", "1e-3", "--out", traj.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let o = srmag(&["ksr", &src, "--traj", traj.to_str().unwrap(), "--t", "0.2"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["ksr"].as_f64().unwrap().abs() < 1e-8);
    assert_eq!(code(&srmag(&["ksr", &src, "--traj", "/nonexistent", "--t", "0"])), 2);
}
