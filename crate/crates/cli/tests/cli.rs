// Copyright 2023 Google LLC
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn padic(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_padic"))
        .args(args)
        .output()
        .expect("padic runs")
}

fn ok_json(args: &[&str]) -> Value {
    let out = padic(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn q_exp(v: &Value) -> (i64, i64) {
    let e = &v["qExponent"];
    (e["num"].as_i64().unwrap(), e["den"].as_i64().unwrap())
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn template_with_unit_alpha_satisfies_both_conditions() {
    let v = ok_json(&["analyze", arg(&data("template_basic.json"))]);
    let a = &v["analysis"];
    assert_eq!(v["kind"], "template");
    assert_eq!(a["firstHolds"], true);
    assert_eq!(a["secondHolds"], true);
    assert_eq!(a["r"]["num"], 0);
    assert_eq!(a["J3"], serde_json::json!([0]));
    assert_eq!(a["consistent"], true);
}

#[test]
fn template_with_large_alpha_tilde_reports_zero_completion() {
    let v = ok_json(&["analyze", arg(&data("template_failing.json"))]);
    assert_eq!(v["analysis"]["secondHolds"], false);
    assert!(v["analysis"]["verdict"].as_str().unwrap().contains("zero"));
}

#[test]
fn trivial_datum_is_integral_with_r_zero() {
    let v = ok_json(&["analyze", arg(&data("datum_trivial.json"))]);
    assert_eq!(v["kind"], "datum");
    assert_eq!(v["analysis"]["integral"], true);
    assert_eq!(v["analysis"]["r"]["num"], 0);
}

#[test]
fn crnorm_of_constant_and_disk_indicator() {
    let v = ok_json(&["crnorm", arg(&data("function_constant.json"))]);
    assert_eq!(q_exp(&v["lower"]), (0, 1));
    assert_eq!(q_exp(&v["upper"]), (0, 1));
    // 1_{D(0,2)} at r = 1: q^{(2-1) * 1}.
    let v = ok_json(&["crnorm", arg(&data("function_disk.json")), "--r", "1", "--scale-into", "2"]);
    assert_eq!(q_exp(&v["lower"]), (1, 1));
    assert_eq!(q_exp(&v["upper"]), (1, 1));
    assert_eq!(v["scaled"]["boundRespected"], true);
}

#[test]
fn avv_accepts_point_mass_and_rejects_growth() {
    let v = ok_json(&["avv", arg(&data("dirac_origin.json")), "--r", "1/2"]);
    assert_eq!(v["report"]["satisfied"], true);
    let v = ok_json(&["avv", arg(&data("growth.json")), "--r", "1"]);
    assert_eq!(v["report"]["satisfied"], false);
    assert_eq!(v["report"]["deepestViolation"]["n"], 6);
}

#[test]
fn equiv_on_zero_table_has_zero_constants() {
    let v = ok_json(&["equiv", arg(&data("two_chart_zero.json")), "--datum", arg(&data("datum_harness.json"))]);
    assert_eq!(v["report"]["C_A"]["qExponent"], "-inf");
    assert_eq!(v["report"]["C_B"]["qExponent"], "-inf");
    assert_eq!(v["report"]["budgetAtoB"], true);
    assert_eq!(v["report"]["budgetBtoA"], true);
}

#[test]
fn equiv_is_deterministic_for_a_seed() {
    let (table, datum) = (data("two_chart_random.json"), data("datum_harness.json"));
    let args = [
        "equiv",
        arg(&table),
        "--datum",
        arg(&datum),
        "--seed",
        "17",
        "--range-n",
        "4",
    ];
    let a = padic(&args);
    let b = padic(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["report"]["budgetAtoB"], true);
    assert_eq!(v["report"]["budgetBtoA"], true);
}

#[test]
fn cond_reports_only_the_requested_side() {
    let v = ok_json(&[
        "cond",
        arg(&data("two_chart_random.json")),
        "--datum",
        arg(&data("datum_harness.json")),
        "--side",
        "A",
        "--range-n",
        "3",
    ]);
    assert!(v.get("A").is_some());
    assert!(v.get("B").is_none());
}

#[test]
fn collapse_certificate_file_reverifies() {
    let dir = tempfile::tempdir().unwrap();
    let cert = dir.path().join("cert.json");
    let datum = data("datum_collapse.json");
    let out = padic(&["collapse", "--datum", arg(&datum), "--t", "2", "--out", arg(&cert)]);
    assert!(out.status.success());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&cert).unwrap()).unwrap();
    assert_eq!(v["certificate"]["count"], 27);
    assert_eq!(v["verification"]["ok"], true);
    let v = ok_json(&["collapse", "--datum", arg(&datum), "--verify", arg(&cert), "--seed", "3"]);
    assert_eq!(v["verification"]["ok"], true);
    assert_eq!(v["verification"]["mismatches"], 0);
}

#[test]
fn exit_codes_follow_error_class() {
    let dir = tempfile::tempdir().unwrap();
    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, "{not json").unwrap();
    assert_eq!(padic(&["analyze", arg(&broken)]).status.code(), Some(2));
    assert_eq!(padic(&["avv", arg(&data("dirac_origin.json")), "--r", "x"]).status.code(), Some(2));
    let precondition = padic(&["collapse", "--datum", arg(&data("datum_harness.json"))]);
    assert_eq!(precondition.status.code(), Some(3));
    let coverage = padic(&[
        "equiv",
        arg(&data("two_chart_random.json")),
        "--datum",
        arg(&data("datum_harness.json")),
        "--range-n",
        "9",
    ]);
    assert_eq!(coverage.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&coverage.stderr).contains("n=7"));
}

#[test]
fn field_flag_overrides_file() {
    let out = padic(&["crnorm", arg(&data("function_constant.json")), "--field", "5,1"]);
    assert!(out.status.success());
    let out = padic(&["crnorm", arg(&data("function_constant.json")), "--field", "5,x"]);
    assert_eq!(out.status.code(), Some(2));
}

fn golden(name: &str, args: &[&str]) {
    let out = padic(args);
    assert!(out.status.success());
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    let expect = std::fs::read(&path).unwrap();
    assert!(out.stdout == expect, "{name} differs from the golden file");
}

#[test]
fn golden_reports_are_byte_identical() {
    golden("analyze_template_basic.json", &["analyze", arg(&data("template_basic.json"))]);
    golden(
        "crnorm_disk.json",
        &["crnorm", arg(&data("function_disk.json")), "--r", "1", "--scale-into", "2"],
    );
    golden("avv_dirac.json", &["avv", arg(&data("dirac_origin.json")), "--r", "1/2"]);
    golden("collapse_t1.json", &["collapse", "--datum", arg(&data("datum_collapse.json")), "--t", "1"]);
}
