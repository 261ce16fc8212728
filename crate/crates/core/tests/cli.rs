mod common;

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use zsplit::io::{self, FileFormat};
use zsplit::{Dataset, Record};

fn zsplit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zsplit"))
        .args(args)
        .env("ZSPLIT_THREADS", "2")
        .output()
        .unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "{e}: {}\n{}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn synth_csv(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("d.csv");
    let out = zsplit(&[
        "synth",
        "--seed",
        "3",
        "--identities",
        "300",
        "--attributes",
        "5",
        "--prevalence-min",
        "0.2",
        "--prevalence-max",
        "0.6",
        "--out",
        p(&path),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(json(&out)["identities"].as_u64().unwrap() > 0);
    path
}

#[test]
fn split_then_audit_then_eval() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth_csv(dir.path());
    let split_path = dir.path().join("s.json");
    let args = [
        "split",
        "--dataset",
        p(&data),
        "--seed",
        "1",
        "--tid",
        "0.02",
        "--timg",
        "60",
        "--tattr",
        "0.05",
        "--out",
        p(&split_path),
    ];
    let out = zsplit(&args);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(json(&out)["report"]["pass"], Value::Bool(true));
    let first = std::fs::read(&split_path).unwrap();
    let again = zsplit(&args);
    assert_eq!(again.stdout, out.stdout);
    assert_eq!(std::fs::read(&split_path).unwrap(), first);

    let audit = zsplit(&[
        "audit",
        "--dataset",
        p(&data),
        "--split",
        p(&split_path),
        "--tid",
        "0.02",
        "--timg",
        "60",
        "--tattr",
        "0.05",
    ]);
    assert_eq!(audit.status.code(), Some(0));
    let v = json(&audit);
    assert_eq!(v["report"]["pass"], Value::Bool(true));
    assert_eq!(
        v["overlap"]["common_image_fraction_test"].as_f64(),
        Some(0.0)
    );

    let ds = io::load_dataset(&data, FileFormat::Csv).unwrap();
    let pred_path = dir.path().join("p.csv");
    let mut text = String::from("image_id");
    for name in ds.catalog().names() {
        text.push(',');
        text.push_str(name);
    }
    text.push('\n');
    for (i, r) in ds.records().iter().enumerate() {
        text.push_str(&r.image_id);
        for &y in &r.labels {
            let z = if (i % 7 == 0) ^ (y == 1) { 2.0 } else { -2.0 };
            text.push_str(&format!(",{z}"));
        }
        text.push('\n');
    }
    std::fs::write(&pred_path, text).unwrap();
    let eval = zsplit(&[
        "eval",
        "--dataset",
        p(&data),
        "--pred",
        p(&pred_path),
        "--kind",
        "logits",
        "--split",
        p(&split_path),
        "--by-identity-overlap",
    ]);
    assert_eq!(
        eval.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&eval.stderr)
    );
    let v = json(&eval);
    assert_eq!(v["common_identity"]["empty"], Value::Bool(true));
    assert_eq!(v["unique_identity"]["images"], v["all"]["images"]);

    let stats = zsplit(&["stats", "--dataset", p(&data), "--split", p(&split_path)]);
    assert_eq!(stats.status.code(), Some(0));
    assert_eq!(
        json(&stats)["positive_ratios"]["attributes"]
            .as_array()
            .unwrap()
            .len(),
        5
    );

    let loss = zsplit(&[
        "loss",
        "--dataset",
        p(&data),
        "--pred",
        p(&pred_path),
        "--split",
        p(&split_path),
        "--grad",
    ]);
    assert_eq!(
        loss.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&loss.stderr)
    );
    let v = json(&loss);
    assert!(v["loss"].as_f64().unwrap() > 0.0);
    assert_eq!(v["gradient"].as_array().unwrap().len(), ds.len());
}

#[test]
fn audit_of_leaky_split_succeeds_with_failing_report() {
    let dir = tempfile::tempdir().unwrap();
    let ds = Dataset::new(
        common::catalog(1),
        vec![
            Record::new("a", Some("p1"), vec![0]),
            Record::new("b", Some("p1"), vec![0]),
            Record::new("c", Some("p2"), vec![0]),
            Record::new("d", Some("p3"), vec![0]),
        ],
    )
    .unwrap();
    let data = dir.path().join("d.csv");
    io::save_dataset(&ds, &data, FileFormat::Csv).unwrap();
    let split = dir.path().join("s.json");
    std::fs::write(&split, r#"{"train":["a","c"],"valid":["d"],"test":["b"]}"#).unwrap();
    let out = zsplit(&["audit", "--dataset", p(&data), "--split", p(&split)]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["report"]["pass"], Value::Bool(false));
    assert_eq!(v["report"]["c2_disjoint"]["pass"], Value::Bool(false));
    assert_eq!(v["overlap"]["common_identity_count"].as_u64(), Some(1));
}

#[test]
fn single_identity_split_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let ds = Dataset::new(
        common::catalog(1),
        (0..6)
            .map(|i| Record::new(format!("i{i}"), Some("solo"), vec![0]))
            .collect(),
    )
    .unwrap();
    let data = dir.path().join("d.csv");
    io::save_dataset(&ds, &data, FileFormat::Csv).unwrap();
    let out = zsplit(&["split", "--dataset", p(&data), "--seed", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn invalid_dataset_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("bad.csv");
    std::fs::write(&data, "image_id,identity,attr:a\nx,p,1\nx,q,0\n").unwrap();
    let out = zsplit(&["validate", "--dataset", p(&data)]);
    assert_eq!(out.status.code(), Some(3));
    let v = json(&out);
    assert_eq!(v["ok"], Value::Bool(false));

    let out = zsplit(&["stats", "--dataset", p(&data)]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(zsplit(&["split"]).status.code(), Some(1));
    assert_eq!(zsplit(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(zsplit(&["weights", "--r", "0.5"]).status.code(), Some(0));
    assert_eq!(zsplit(&["weights", "--r", "1.5"]).status.code(), Some(1));
}

#[test]
fn every_subcommand_has_help() {
    for cmd in [
        "split", "audit", "stats", "eval", "weights", "loss", "synth", "validate",
    ] {
        let out = zsplit(&[cmd, "--help"]);
        assert_eq!(out.status.code(), Some(0), "{cmd}");
        assert!(!out.stdout.is_empty(), "{cmd}");
    }
    let eval = String::from_utf8(zsplit(&["eval", "--help"]).stdout).unwrap();
    assert!(eval.contains("0.5") && eval.contains("sigmoid"));
}
