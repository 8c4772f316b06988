//! End-to-end CLI behaviour: exit codes, env seed override, flag toggles,
//! and agreement between emitted reports and an independent rescoring.

mod common;

use std::path::Path;
use std::process::Command;

use gramkit::datamodel::{load_benchmark, load_predictions, ScenarioCategory};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_gramkit"));
    cmd.env_remove("GRAMKIT_SEED");
    cmd
}

fn gen_fixture(dir: &Path, extra: &[&str]) {
    let mut cmd = bin();
    cmd.args(["gen", "--count", "4", "--seed", "13"]);
    cmd.args(extra);
    cmd.arg("--out").arg(dir);
    assert!(cmd.status().unwrap().success());
}

#[test]
fn eval_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let fix = dir.path().join("fix");
    gen_fixture(&fix, &[]);

    // 0 on success.
    let status = bin()
        .arg("eval")
        .arg("--benchmark")
        .arg(fix.join("benchmark.json"))
        .arg("--predictions")
        .arg(fix.join("predictions.jsonl"))
        .arg("--out")
        .arg(dir.path().join("out"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));

    // 2 on a malformed benchmark document.
    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, "[{\"id\": }]").unwrap();
    let status = bin()
        .arg("eval")
        .arg("--benchmark")
        .arg(&broken)
        .arg("--predictions")
        .arg(fix.join("predictions.jsonl"))
        .arg("--out")
        .arg(dir.path().join("out2"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));

    // 2 on a schema violation (reversed prediction interval).
    let bad_preds = dir.path().join("bad.jsonl");
    std::fs::write(
        &bad_preds,
        "{\"instance_id\":\"person_gr_000\",\"answer_text\":\"\",\"time\":{\"interval\":[6.0,2.0]}}\n",
    )
    .unwrap();
    let status = bin()
        .arg("eval")
        .arg("--benchmark")
        .arg(fix.join("benchmark.json"))
        .arg("--predictions")
        .arg(&bad_preds)
        .arg("--out")
        .arg(dir.path().join("out3"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));

    // 3 when --strict promotes unmatched ids.
    let ghost = dir.path().join("ghost.jsonl");
    let mut text = std::fs::read_to_string(fix.join("predictions.jsonl")).unwrap();
    text.push_str("{\"instance_id\":\"ghost\",\"answer_text\":\"\",\"time\":{\"point\":1.0}}\n");
    std::fs::write(&ghost, text).unwrap();
    let status = bin()
        .arg("eval")
        .arg("--benchmark")
        .arg(fix.join("benchmark.json"))
        .arg("--predictions")
        .arg(&ghost)
        .arg("--strict")
        .arg("--out")
        .arg(dir.path().join("out4"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(3));
}

#[test]
fn env_seed_overrides_the_flag() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let c = dir.path().join("c");

    // --seed 1 with GRAMKIT_SEED=13 must equal a plain --seed 13 run.
    let mut cmd = bin();
    cmd.env("GRAMKIT_SEED", "13");
    cmd.args(["gen", "--count", "4", "--seed", "1"]);
    cmd.arg("--out").arg(&a);
    assert!(cmd.status().unwrap().success());
    gen_fixture(&b, &[]); // --seed 13
    let mut cmd = bin();
    cmd.args(["gen", "--count", "4", "--seed", "1"]);
    cmd.arg("--out").arg(&c);
    assert!(cmd.status().unwrap().success());

    let read = |d: &Path| std::fs::read(d.join("benchmark.json")).unwrap();
    assert_eq!(read(&a), read(&b), "env seed must win over --seed");
    assert_ne!(read(&a), read(&c), "different seeds must differ");

    // A non-integer env seed is a usage error.
    let mut cmd = bin();
    cmd.env("GRAMKIT_SEED", "not-a-number");
    cmd.args(["gen", "--count", "1"]);
    cmd.arg("--out").arg(dir.path().join("d"));
    let status = cmd.status().unwrap();
    assert_ne!(status.code(), Some(0));
}

#[test]
fn demo_writes_trace_unless_disabled() {
    let dir = tempfile::tempdir().unwrap();
    let with = dir.path().join("with");
    let status = bin()
        .args(["demo", "--seed", "4", "--frames", "2", "--max-new", "6"])
        .arg("--out")
        .arg(&with)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert!(with.join("trace.json").exists());

    let without = dir.path().join("without");
    let status = bin()
        .args([
            "demo",
            "--seed",
            "4",
            "--frames",
            "2",
            "--max-new",
            "6",
            "--no-gram",
        ])
        .arg("--out")
        .arg(&without)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert!(!without.join("trace.json").exists());
}

#[test]
fn demo_loads_a_model_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("model.json");
    std::fs::write(
        &cfg_path,
        r#"{"n_layers":2,"n_heads":2,"d_model":24,"d_ff":48,"vocab_size":288,"patch_grid":[2,2],"max_frames":8,"seed":5}"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let status = bin()
        .args(["demo", "--frames", "2", "--max-new", "4"])
        .arg("--model-config")
        .arg(&cfg_path)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert!(out.join("trace.json").exists());

    // A config violating the shape invariants is rejected.
    std::fs::write(&cfg_path, r#"{"d_model":65}"#).unwrap();
    let status = bin()
        .args(["demo", "--frames", "2", "--max-new", "4"])
        .arg("--model-config")
        .arg(&cfg_path)
        .arg("--out")
        .arg(dir.path().join("out2"))
        .status()
        .unwrap();
    assert_ne!(status.code(), Some(0));
}

#[test]
fn reports_agree_with_independent_rescoring() {
    let dir = tempfile::tempdir().unwrap();
    let fix = dir.path().join("fix");
    gen_fixture(
        &fix,
        &[
            "--t-acc",
            "0.75",
            "--acc",
            "0.25=0.5,0.5=0.25",
            "--deviations",
            "1,3,5",
        ],
    );
    let out = dir.path().join("out");
    let status = bin()
        .arg("eval")
        .arg("--benchmark")
        .arg(fix.join("benchmark.json"))
        .arg("--predictions")
        .arg(fix.join("predictions.jsonl"))
        .args(["--format", "structured"])
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());

    let instances = load_benchmark(fix.join("benchmark.json")).unwrap();
    let predictions = load_predictions(fix.join("predictions.jsonl")).unwrap();
    let round1 = |v: f64| (v * 10.0).round() / 10.0;

    for category in [
        ScenarioCategory::PersonGr,
        ScenarioCategory::ObjectGr,
        ScenarioCategory::PersonObjectCoGr,
        ScenarioCategory::HandObjectCoGr,
    ] {
        let (t_acc, accs) =
            common::naive_spatial_rates(&instances, &predictions, category, &[0.25, 0.5]);
        let text =
            std::fs::read_to_string(out.join(format!("report_{}.json", category.label()))).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["t_acc"].as_f64().unwrap(), round1(t_acc), "{category:?}");
        assert_eq!(v["thresholds"][0]["acc"].as_f64().unwrap(), round1(accs[0]));
        assert_eq!(v["thresholds"][1]["acc"].as_f64().unwrap(), round1(accs[1]));
    }

    let (action_acc, mad, windows) =
        common::naive_temporal_rates(&instances, &predictions, &[2.0, 4.0, 6.0]);
    let text = std::fs::read_to_string(out.join("report_temporal_gr.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["action_acc"].as_f64().unwrap(), round1(action_acc));
    assert_eq!(v["mad"].as_f64().unwrap(), round1(mad.unwrap()));
    for (k, (time_acc, acc)) in windows.iter().enumerate() {
        assert_eq!(
            v["windows"][k]["time_acc"].as_f64().unwrap(),
            round1(*time_acc)
        );
        assert_eq!(v["windows"][k]["acc"].as_f64().unwrap(), round1(*acc));
    }
}

#[test]
fn category_filter_and_tau_flags() {
    let dir = tempfile::tempdir().unwrap();
    let fix = dir.path().join("fix");
    gen_fixture(&fix, &[]);
    let out = dir.path().join("out");
    let status = bin()
        .arg("eval")
        .arg("--benchmark")
        .arg(fix.join("benchmark.json"))
        .arg("--predictions")
        .arg(fix.join("predictions.jsonl"))
        .args(["--category", "person_gr", "--tau", "0.3,0.7"])
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let files: Vec<_> = std::fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    assert_eq!(files, vec!["report_person_gr.csv"]);
    let text = std::fs::read_to_string(out.join("report_person_gr.csv")).unwrap();
    assert!(text.contains("Acc@0.3"), "{text}");
    assert!(text.contains("Acc@0.7"), "{text}");

    // Unknown category label is a usage error.
    let status = bin()
        .arg("eval")
        .arg("--benchmark")
        .arg(fix.join("benchmark.json"))
        .arg("--predictions")
        .arg(fix.join("predictions.jsonl"))
        .args(["--category", "bogus"])
        .arg("--out")
        .arg(dir.path().join("out2"))
        .status()
        .unwrap();
    assert_ne!(status.code(), Some(0));
}
