use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_multiport-witness")).args(args).output().expect("binary runs")
}

fn run_line(line: &str) -> Output {
    run(&line.split_whitespace().collect::<Vec<_>>())
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

#[test]
fn mub_exports_certified_matrices() {
    let v = stdout_json(&run(&["mub", "--p", "3"]));
    let mats = v["matrices"].as_array().unwrap();
    assert_eq!(mats.len(), 4);
    assert_eq!(mats[0]["matrix"].as_array().unwrap().len(), 3);
    assert!(v["certification"]["max_overlap_dev"].as_f64().unwrap() < 1e-12);
    assert_eq!(v["certification"]["passed"], true);
}

#[test]
fn mub_p2_is_hadamard_pair_plus_identity() {
    let v = stdout_json(&run(&["mub", "--p", "2"]));
    let mats = v["matrices"].as_array().unwrap();
    assert_eq!(mats.len(), 3);
    let entry = |m: usize, r: usize, c: usize| {
        let z = &mats[m]["matrix"][r][c];
        (z[0].as_f64().unwrap(), z[1].as_f64().unwrap())
    };
    for m in 0..2 {
        for r in 0..2 {
            for c in 0..2 {
                let (re, im) = entry(m, r, c);
                assert!((re * re + im * im - 0.5).abs() < 1e-11);
            }
        }
    }
    assert_eq!(entry(2, 0, 0), (1.0, 0.0));
    assert_eq!(entry(2, 0, 1), (0.0, 0.0));
}

#[test]
fn mub_rejects_composite_p_with_usage_code() {
    let out = run(&["mub", "--p", "4"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not prime"));
}

#[test]
fn mub_writes_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("mub5.json");
    let out = run(&["mub", "--p", "5", "--output", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["matrices"].as_array().unwrap().len(), 6);
}

#[test]
fn witness_report_fields() {
    let v = stdout_json(&run(&["witness", "--criterion", "rate-d3", "--gamma", "1", "--eta", "1"]));
    let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(
        keys,
        [
            "criterion",
            "p",
            "gamma",
            "eta",
            "cutoff",
            "weighting",
            "renormalized",
            "lhs",
            "rhs",
            "witness",
            "verdict",
            "truncated_mass"
        ]
    );
    assert_eq!(v["lhs"].as_f64().unwrap(), 0.0);
    assert_eq!(v["verdict"], "entangled");
    assert_eq!(v["renormalized"], true);
    assert_eq!(v["weighting"], "state-norm");
}

#[test]
fn witness_verdicts_at_low_efficiency() {
    let v = stdout_json(&run(&["witness", "--criterion", "intensity-d3", "--gamma", "1", "--eta", "0.2"]));
    assert!(v["witness"].as_f64().unwrap() >= 0.0);
    assert_eq!(v["verdict"], "inconclusive");

    let v = stdout_json(&run(&["witness", "--criterion", "rate-d3", "--gamma", "3", "--eta", "0.2"]));
    assert_eq!(v["verdict"], "entangled");
}

#[test]
fn witness_not_evaluable_has_reason() {
    let v = stdout_json(&run(&["witness", "--criterion", "intensity-d3", "--gamma", "1", "--eta", "0"]));
    assert_eq!(v["verdict"], "inconclusive");
    assert!(v["witness"].is_null());
    assert!(v["reason"].is_string());
}

#[test]
fn witness_usage_errors() {
    assert_eq!(run(&["witness", "--gamma", "1", "--eta", "1.5"]).status.code(), Some(2));
    assert_eq!(run(&["witness", "--gamma", "1", "--eta", "1", "--p", "6"]).status.code(), Some(2));
    assert_eq!(
        run(&["witness", "--criterion", "rate-d3", "--p", "5", "--gamma", "1", "--eta", "1"]).status.code(),
        Some(2)
    );
    assert_eq!(run(&["witness", "--criterion", "bogus", "--gamma", "1", "--eta", "1"]).status.code(), Some(2));
}

fn parse_csv(text: &str) -> Vec<Vec<String>> {
    text.lines().map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn sweep_grid_shape_and_order() {
    let out = run_line("sweep --criterion rate-d3 --gamma-min 0.1 --gamma-max 3 --gamma-steps 10 --eta-min 0.1 --eta-max 1 --eta-steps 10");
    assert!(out.status.success());
    let rows = parse_csv(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(rows[0].join(","), "criterion,p,gamma,eta,cutoff,lhs,rhs,witness,entangled");
    let body = &rows[1..];
    assert_eq!(body.len(), 100);
    let num = |r: &Vec<String>, i: usize| r[i].parse::<f64>().unwrap();
    for (i, r) in body.iter().enumerate() {
        assert_eq!(num(r, 2), num(&body[(i / 10) * 10], 2));
        if i % 10 > 0 {
            assert!(num(r, 3) > num(&body[i - 1], 3));
        }
    }
    for g in 0..10 {
        let block = &body[g * 10..(g + 1) * 10];
        assert!(num(&block[9], 7) < 0.0);
        assert_eq!(block[9][8], "true");
        let flips = block.windows(2).filter(|w| w[0][8] != w[1][8]).count();
        assert!(flips <= 1);
    }
}

#[test]
fn sweep_numbers_have_twelve_significant_digits() {
    let out = run(&["sweep", "--gamma-min", "1", "--gamma-max", "1", "--gamma-steps", "1", "--eta-steps", "2"]);
    let rows = parse_csv(&String::from_utf8(out.stdout).unwrap());
    let lhs = &rows[2][5];
    let mantissa = lhs.split('e').next().unwrap().trim_start_matches('-').replace('.', "");
    assert_eq!(mantissa.len(), 12, "{lhs}");
}

#[test]
fn sweep_json_and_file_output() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("grid.json");
    let out = run(&[
        "sweep",
        "--criterion",
        "intensity-d3",
        "--gamma-steps",
        "2",
        "--eta-steps",
        "3",
        "--format",
        "json",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 6);
}

#[test]
fn sweep_unwritable_path_fails() {
    let out = run(&["sweep", "--gamma-steps", "1", "--eta-steps", "1", "--output", "/nonexistent-dir/x.csv"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn critical_eta_list() {
    let v =
        stdout_json(&run_line("critical-eta --criterion intensity-d3 --gamma-min 0.5 --gamma-max 1.5 --gamma-steps 3"));
    let list = v.as_array().unwrap();
    assert_eq!(list.len(), 3);
    for e in list {
        assert!((e["eta_critical"].as_f64().unwrap() - 0.25).abs() < 0.005);
        assert!(e["iterations"].as_u64().unwrap() > 0);
    }
}

#[test]
fn critical_eta_without_bracket_is_null() {
    let v = stdout_json(&run_line(
        "critical-eta --criterion rate-d3 --renormalized false --gamma-min 0 --gamma-max 0 --gamma-steps 1",
    ));
    let e = &v[0];
    assert!(e["eta_critical"].is_null());
    assert!(e["reason"].is_string());
}
