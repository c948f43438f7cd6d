use std::path::PathBuf;
use std::process::Command;

use polybias_cli::report::{Report, SCHEMA};
use serde_json::Value;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn run(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_polybias")).args(args).output().expect("binary runs");
    (out.status.code().unwrap_or(-1), String::from_utf8(out.stdout).unwrap())
}

fn report(args: &[&str]) -> (i32, Report) {
    let (code, stdout) = run(args);
    let r: Report = serde_json::from_str(&stdout).unwrap_or_else(|e| panic!("{e}: {stdout}"));
    (code, r)
}

fn ok(args: &[&str]) -> Value {
    let (code, r) = report(args);
    assert_eq!(code, 0, "{r:?}");
    assert_eq!(r.schema, SCHEMA);
    r.result.expect("result present")
}

#[test]
fn bias_of_x1x2() {
    let input = data("gf2.txt");
    let v = ok(&["bias", "--input", input.to_str().unwrap(), "--poly", "P1"]);
    assert_eq!(v["magnitude"], 0.5);
    assert_eq!(v["analytic_rank"], 1.0);
    assert_eq!(v["phase_counts"], serde_json::json!([3, 1]));
}

#[test]
fn nu_is_exact() {
    let input = data("gf2.txt");
    let v = ok(&["nu", "--input", input.to_str().unwrap(), "--collection", "P1,P2", "--fourier"]);
    let nu: Vec<&str> = v["nu"].as_array().unwrap().iter().map(|e| e["nu"].as_str().unwrap()).collect();
    assert_eq!(nu, ["1/1", "2/1", "1/1", "0/1"]);
    assert_eq!(v["deviation"], "1/1");
    assert_eq!(v["fourier"]["reconstruction_exact"], true);
}

#[test]
fn nullstellensatz_probe_on_square() {
    let input = data("square.txt");
    let v = ok(&["nullstellensatz", "--input", input.to_str().unwrap(), "--collection", "C", "--probe", "--a", "1"]);
    assert_eq!(v["fraction_certified"], 0.0);
    assert_eq!(v["kernel"], serde_json::json!(["x1"]));
}

#[test]
fn membership_certificate() {
    let input = data("quadric.txt");
    let v = ok(&["nullstellensatz", "--input", input.to_str().unwrap(), "--collection", "Q", "--member", "Q"]);
    assert_eq!(v["certified"], true);
    assert_eq!(v["cofactors"], serde_json::json!(["1"]));
}

#[test]
fn pullback_and_nonexistence() {
    let input = data("gf2.txt");
    let path = input.to_str().unwrap();
    let v = ok(&["pullback", "--input", path, "--poly", "P1", "--target", "Q"]);
    assert_eq!(v["outcome"], "found");
    assert_eq!(v["images"], serde_json::json!(["x1", "x1 + 1"]));
    let v = ok(&["pullback", "--input", path, "--poly", "P1", "--target", "Q0"]);
    assert_eq!(v["outcome"], "proven_nonexistent");
}

#[test]
fn weakly_linear_table_does_not_extend() {
    let input = data("cubic.txt");
    let path = input.to_str().unwrap();
    let v = ok(&["weakpoly", "--input", path, "--table", "f", "--a", "1"]);
    assert_eq!(v["points"], 19);
    assert_eq!(v["weakly_polynomial"], true);
    assert_eq!(v["extension"], Value::Null);
    let v = ok(&["weakpoly", "--input", path, "--collection", "X", "--a", "1"]);
    assert_eq!((v["dim_global"].as_u64(), v["dim_weak_upper"].as_u64()), (Some(3), Some(4)));
    assert_eq!(v["equal"], false);
}

#[test]
fn padic_commands() {
    let input = data("z9.txt");
    let path = input.to_str().unwrap();
    let v = ok(&["padic", "--input", path, "--poly", "XY", "--character", "1"]);
    assert!((v["magnitude"].as_f64().unwrap() - 1.0 / 9.0).abs() < 1e-12);
    let v = ok(&["padic", "--input", path, "--poly", "H2", "--s", "2"]);
    assert_eq!(v["hypothesis_holds"], false);
    let v = ok(&["probe", "--input", path, "--polys", "XY,H2,D"]);
    assert_eq!(v["entries"][2]["degenerate"], true);
    let v = ok(&["ratsing", "--input", path, "--poly", "XY", "--levels", "2"]);
    let counts: Vec<u64> = v["levels"].as_array().unwrap().iter().map(|l| l["count"].as_u64().unwrap()).collect();
    assert_eq!(counts, [5 * 9, 21 * 81]);
}

#[test]
fn remaining_subcommands_succeed() {
    let input = data("quadric.txt");
    let path = input.to_str().unwrap();
    for args in [
        vec!["gowers", "--poly", "Q", "--m", "2"],
        vec!["rank", "--poly", "Q"],
        vec!["rank", "--collection", "Q,L"],
        vec!["ncrank", "--poly", "E"],
        vec!["tau", "--collection", "Q", "--t", "1", "--levels", "2"],
        vec!["fibers", "--collection", "Q,L"],
        vec!["fibers", "--collection", "Q", "--t", "0"],
        vec!["bias", "--collection", "Q,L", "--a", "1,2"],
    ] {
        let mut full = args.clone();
        full.extend(["--input", path]);
        ok(&full);
    }
    let v = ok(&["rank", "--input", path, "--poly", "Q"]);
    assert_eq!(v["rank"]["upper"], 2);
    assert_eq!(v["rank"]["exact"], true);
}

#[test]
fn shard_count_only_changes_timing() {
    let input = data("quadric.txt");
    let path = input.to_str().unwrap();
    for cmd in [
        vec!["nu", "--collection", "Q,L", "--fourier"],
        vec!["fibers", "--collection", "Q,L"],
        vec!["tau", "--collection", "Q", "--levels", "2"],
    ] {
        let mut one = cmd.clone();
        one.extend(["--input", path, "--shards", "1"]);
        let mut four = cmd.clone();
        four.extend(["--input", path, "--shards", "4"]);
        let (_, a) = report(&one);
        let (_, b) = report(&four);
        let a = serde_json::to_string(&a.without_timing()).unwrap();
        let b = serde_json::to_string(&b.without_timing()).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn report_round_trips() {
    let input = data("gf2.txt");
    let (_, stdout) = run(&["nu", "--input", input.to_str().unwrap(), "--collection", "P1"]);
    let r: Report = serde_json::from_str(&stdout).unwrap();
    let again: Report = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
    assert_eq!(r, again);
    assert_eq!(r.instance.as_ref().unwrap().sha256.len(), 64);
}

#[test]
fn exit_codes() {
    let input = data("quadric.txt");
    let path = input.to_str().unwrap();
    let (code, r) = report(&["bias", "--input", path, "--poly", "Q", "--budget", "10"]);
    assert_eq!(code, 2);
    assert_eq!(r.error.unwrap().kind, "budget");
    let (code, r) = report(&["bias", "--input", path, "--poly", "missing"]);
    assert_eq!(code, 3);
    assert_eq!(r.error.unwrap().kind, "input");
    let (code, _) = report(&["bias", "--poly", "Q"]);
    assert_eq!(code, 3);
    let (code, _) = run(&["bias", "--input", path, "--no-such-flag"]);
    assert_eq!(code, 3);
    let (code, _) = report(&["bias", "--input", "/nonexistent/instance.txt", "--poly", "Q"]);
    assert_eq!(code, 3);
}
