//
// Copyright 2026 The shufdp-kde Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

//! Runs the command-line binary end to end.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_shufdp-kde"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn gen(dir: &Path, name: &str, seed: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    ok(&[
        "gen-synth",
        "--classes",
        "3",
        "--per-class",
        "40",
        "--dim",
        "8",
        "--separation",
        "1.0",
        "--seed",
        seed,
        "--test-per-class",
        "10",
        "--out",
        p(&path),
        "--test-out",
        p(&dir.join(format!("{name}.test"))),
        "--vocab-out",
        p(&dir.join(format!("{name}.vocab"))),
        "--distractors",
        "5",
    ]);
    path
}

#[test]
fn gen_synth_is_deterministic_and_valid() {
    let dir = tempfile::tempdir().unwrap();
    let a = gen(dir.path(), "a.txt", "9");
    let b = gen(dir.path(), "b.txt", "9");
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let text = fs::read_to_string(&a).unwrap();
    assert!(text.starts_with("120 8 3\n"));
    for line in text.lines().skip(1) {
        let v: Vec<f64> = line
            .split(' ')
            .take(8)
            .map(|s| s.parse().unwrap())
            .collect();
        assert!((v.iter().map(|x| x * x).sum::<f64>().sqrt() - 1.0).abs() <= 1e-6);
    }
    let meta = fs::read_to_string(dir.path().join("a.txt.meta.json")).unwrap();
    assert!(meta.contains("\"separation\""));
    let zero = dir.path().join("zero.txt");
    ok(&[
        "gen-synth",
        "--classes",
        "2",
        "--per-class",
        "7",
        "--dim",
        "3",
        "--out",
        p(&zero),
    ]);
    assert!(fs::read_to_string(zero).unwrap().starts_with("14 3 2\n"));
}

#[test]
fn train_classify_decode_round() {
    let dir = tempfile::tempdir().unwrap();
    let data = gen(dir.path(), "d.txt", "1");
    let out1 = dir.path().join("run1");
    let out2 = dir.path().join("run2");
    for out in [&out1, &out2] {
        ok(&[
            "train",
            "--dataset",
            p(&data),
            "--bitsum",
            "3nb",
            "--eps",
            "7",
            "--eps-label",
            "inf",
            "--seed",
            "4",
            "--out",
            p(out),
        ]);
    }
    let m1 = fs::read(out1.join("model.json")).unwrap();
    assert_eq!(m1, fs::read(out2.join("model.json")).unwrap());

    let test = dir.path().join("d.txt.test");
    let vocab = dir.path().join("d.txt.vocab");
    let text = ok(&[
        "classify",
        "--model",
        p(&out1.join("model.json")),
        "--dataset",
        p(&test),
        "--out",
        p(&out1),
    ]);
    assert!(text.starts_with("accuracy"));
    let preds = fs::read_to_string(out1.join("predictions.csv")).unwrap();
    assert!(preds.starts_with("index,true_label,predicted_label\n"));
    assert_eq!(preds.lines().count(), 31);
    let results = fs::read_to_string(out1.join("results.csv")).unwrap();
    assert!(
        results.starts_with("kernel,bitsum,eps,eps_label,seed,metric,value\ngaussian,3nb,7,inf,")
    );

    ok(&["decode", "--out", p(&out1), "--vocab", p(&vocab)]);
    let decode = fs::read_to_string(out1.join("decode.csv")).unwrap();
    let lines: Vec<&str> = decode.lines().collect();
    assert_eq!(lines[0], "class,rank,term,score");
    assert_eq!(lines.len(), 1 + 3 * 3);
    assert!(lines[1].starts_with("1,1,"));
}

#[test]
fn kde_eval_reports_bound_and_empirical() {
    let dir = tempfile::tempdir().unwrap();
    let data = gen(dir.path(), "d.txt", "2");
    let out = dir.path().join("eval");
    ok(&[
        "kde-eval",
        "--dataset",
        p(&data),
        "--bitsum",
        "exact",
        "--eps",
        "1",
        "--repetitions",
        "64",
        "--num-queries",
        "10",
        "--trials",
        "30",
        "--out",
        p(&out),
    ]);
    let csv = fs::read_to_string(out.join("kde_eval.csv")).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();
    let emp: f64 = row[col("empirical_max_rmse")].parse().unwrap();
    let bound: f64 = row[col("theoretical_bound")].parse().unwrap();
    assert!(bound >= emp);
    assert_eq!(
        fs::read_to_string(out.join("kde_eval_queries.csv"))
            .unwrap()
            .lines()
            .count(),
        11
    );
}

#[test]
fn meter_counts_rr_messages() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.txt");
    ok(&[
        "gen-synth",
        "--classes",
        "2",
        "--per-class",
        "10",
        "--dim",
        "32",
        "--out",
        p(&data),
    ]);
    let out = dir.path().join("m");
    ok(&[
        "meter",
        "--dataset",
        p(&data),
        "--bitsum",
        "rr",
        "--flip-prob",
        "0.2",
        "--eps",
        "1",
        "--out",
        p(&out),
    ]);
    let csv = fs::read_to_string(out.join("meter.csv")).unwrap();
    for line in csv.lines().skip(1) {
        assert!(line.ends_with(",32,192"), "{line}");
    }
    let results = fs::read_to_string(out.join("results.csv")).unwrap();
    assert!(results.contains("bits_per_message,6.0000000000000000e0"));
}

#[test]
fn account_and_exit_codes() {
    let text = ok(&[
        "account",
        "--mode",
        "pure",
        "--eps",
        "6",
        "--repetitions",
        "3",
        "--sparsity",
        "2",
    ]);
    assert!(
        text.contains("eps0                               1.0000000000"),
        "{text}"
    );
    let text = ok(&[
        "account",
        "--eps",
        "3.2",
        "--eps-label",
        "5",
        "--delta",
        "1e-6",
        "--kernel",
        "gaussian",
        "--dim",
        "32",
    ]);
    assert!(
        text.lines()
            .any(|l| l.starts_with("communication-threat (eps, delta)")
                && l.ends_with("(8.2000000000, 1.000000e-6)")),
        "{text}"
    );

    let infeasible = run(&[
        "account",
        "--mode",
        "pure",
        "--eps",
        "500",
        "--repetitions",
        "1",
        "--sparsity",
        "1",
    ]);
    assert_eq!(infeasible.status.code(), Some(3));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.txt");
    fs::write(&bad, "2 2 2\n1 0 1\n1 1 2\n").unwrap();
    let out = run(&[
        "train",
        "--dataset",
        p(&bad),
        "--eps",
        "1",
        "--out",
        p(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("model.json").exists());
    assert_eq!(run(&["train", "--bogus"]).status.code(), Some(2));
}

#[test]
fn config_file_drives_commands() {
    let dir = tempfile::tempdir().unwrap();
    let data = gen(dir.path(), "d.txt", "3");
    let cfg = dir.path().join("cfg.json");
    fs::write(
        &cfg,
        r#"{"dataset": "d.txt", "bitsum": "central-gaussian", "eps": [5], "seed": 8, "out": "cfg-out"}"#,
    )
    .unwrap();
    ok(&["train", "--config", p(&cfg)]);
    assert!(dir.path().join("cfg-out/model.json").exists());
    let _ = data;
}
