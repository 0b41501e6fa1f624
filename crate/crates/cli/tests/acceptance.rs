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


//! One PASS/FAIL line per acceptance criterion, with pinned time limits.
//! Criterion 9 runs the `padic selftest` binary twice.

use std::process::Command;
use std::time::{Duration, Instant};

use padic_core::selftest::{self, Outcome, CRITERIA};

/// Wall-clock limits in seconds, by criterion.
const LIMITS: [(u32, u64); 9] = [
    (1, 5),
    (2, 30),
    (3, 60),
    (4, 20),
    (5, 60),
    (6, 300),
    (7, 30),
    (8, 1),
    (9, 600),
];

fn limit(id: u32) -> Duration {
    Duration::from_secs(LIMITS.iter().find(|l| l.0 == id).unwrap().1)
}

fn line(id: u32, title: &str, pass: bool, took: Duration, note: &str) -> bool {
    let ok = pass && took <= limit(id);
    println!(
        "criterion {id} {:<4} {title}: {:.2}s (limit {}s){note}",
        if ok { "PASS" } else { "FAIL" },
        took.as_secs_f64(),
        limit(id).as_secs(),
    );
    ok
}

fn run_selftest(out: &std::path::Path) -> (bool, Vec<u8>) {
    let status = Command::new(env!("CARGO_BIN_EXE_padic"))
        .arg("selftest")
        .arg("--out")
        .arg(out)
        .status()
        .expect("padic runs");
    (status.success(), std::fs::read(out).unwrap_or_default())
}

#[test]
fn acceptance() {
    let mut all = true;
    let mut outcomes: Vec<Outcome> = Vec::new();
    for (id, title) in CRITERIA {
        let start = Instant::now();
        let res = selftest::criterion(id);
        let took = start.elapsed();
        match res {
            Ok(o) => {
                all &= line(id, title, o.pass, took, "");
                if !o.pass {
                    println!("  detail: {}", o.detail);
                }
                outcomes.push(o);
            }
            Err(e) => all &= line(id, title, false, took, &format!(" error: {e}")),
        }
    }

    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let (ok1, first) = run_selftest(&dir.path().join("first.json"));
    let (ok2, second) = run_selftest(&dir.path().join("second.json"));
    let took = start.elapsed();
    let mut expect = serde_json::to_string(&selftest::report(&outcomes)).unwrap();
    expect.push('\n');
    let stable = ok1 && ok2 && !first.is_empty() && first == second;
    let reproduces = first == expect.as_bytes();
    let note = format!(" byte-stable {stable}, matches in-process checks {reproduces}");
    all &= line(9, "selftest reports", stable && reproduces, took, &note);

    assert!(all, "at least one acceptance criterion failed");
}
