//! End-to-end runs of the `kpa` binary on the mini corpus.

mod common;

use std::path::Path;

use serde_json::Value;

use common::{kpa, mini_dir, run_pipeline, step};

fn workspace() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::create_dir(dir.path().join("mini")).unwrap();
    for f in ["reviews.jsonl", "businesses.jsonl", "scores.json", "kpa.toml"] {
        std::fs::copy(mini_dir().join(f), dir.path().join("mini").join(f)).unwrap();
    }
    dir
}

fn with_config<'a>(rest: &[&'a str]) -> Vec<&'a str> {
    [&["--config", "mini/kpa.toml", "--workers", "2"][..], rest].concat()
}

fn ingest_and_split(root: &Path) {
    let run = |rest: &[&str]| step(root, &with_config(rest)).unwrap();
    run(&[
        "ingest",
        "--reviews",
        "mini/reviews.jsonl",
        "--businesses",
        "mini/businesses.jsonl",
        "--out-dir",
        "corpus",
    ]);
    run(&["split", "--corpus", "corpus", "--out-dir", "corpus"]);
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn jsonl(path: &Path) -> Vec<Value> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn code(root: &Path, args: &[&str]) -> i32 {
    kpa(root, args).status.code().unwrap()
}

#[test]
fn full_pipeline_with_the_default_preset() {
    let dir = workspace();
    let root = dir.path();
    run_pipeline(root, "rkpa-base", 2).unwrap();
    let out = root.join("out/rkpa-base");

    let lib = json(&out.join("mine/keypoints.json"));
    let shared = lib["shared"].as_array().unwrap();
    assert!(!shared.is_empty());
    assert!(shared.iter().all(|k| k["polarity"] == "pos" || k["polarity"] == "neg"));

    let summaries = jsonl(&out.join("summarize/summaries.jsonl"));
    assert!(!summaries.is_empty());
    let curve = std::fs::read_to_string(out.join("curve/curve.tsv")).unwrap();
    assert_eq!(curve.lines().count(), 21, "header plus 20 thresholds");

    let agg = json(&out.join("aggregate/aggregate.json"));
    assert!(agg["precision_at_t_min"].is_number(), "{agg}");
}

#[test]
fn manifests_record_inputs_outputs_and_scorer_use() {
    let dir = workspace();
    let root = dir.path();
    ingest_and_split(root);
    step(
        root,
        &with_config(&[
            "mine",
            "--corpus",
            "corpus",
            "--split",
            "corpus/split.jsonl",
            "--part",
            "train",
            "--seed",
            "5",
        ]),
    )
    .unwrap();
    let m = json(&root.join("out/rkpa-base/mine/mine.manifest.json"));
    assert_eq!(m["command"], "mine");
    assert_eq!(m["preset"], "rkpa-base");
    assert_eq!(m["seed"], 5);
    assert_eq!(m["scorer_backend"], "mini-table-v1");
    assert!(m["scorer_requests"].as_u64().unwrap() > 0);
    assert_eq!(m["config"]["mining"]["t_match"], 0.99);
    let inputs = m["inputs"].as_object().unwrap();
    assert!(inputs.keys().any(|k| k.ends_with("reviews.jsonl")));
    assert!(
        inputs.values().all(|h| h.as_str().unwrap().len() == 64),
        "sha-256 digests"
    );
    let outputs: Vec<&str> = m["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|o| o.as_str().unwrap())
        .collect();
    assert!(outputs.iter().any(|o| o.ends_with("keypoints.json")));
    assert!(outputs.iter().any(|o| o.ends_with("mining.json")));

    let ingest = json(&root.join("corpus/ingest.manifest.json"));
    assert_eq!(ingest["scorer_requests"], 0);
}

#[test]
fn vanilla_mines_per_business() {
    let dir = workspace();
    let root = dir.path();
    ingest_and_split(root);
    let args = with_config(&[
        "--preset",
        "kpa-vanilla",
        "mine",
        "--corpus",
        "corpus",
        "--split",
        "corpus/split.jsonl",
        "--part",
        "test",
    ]);
    step(root, &args).unwrap();
    let lib = json(&root.join("out/kpa-vanilla/mine/keypoints.json"));
    assert!(lib["shared"].as_array().unwrap().is_empty());
    let per = lib["per_business"].as_object().unwrap();
    assert!(!per.is_empty());
    for kps in per.values() {
        let kps = kps.as_array().unwrap();
        assert!(kps.len() <= 60);
        assert!(kps.iter().all(|k| k["polarity"].is_null()), "vanilla ignores sentiment");
    }
}

#[test]
fn fine_tuned_preset_filters_on_kp_quality() {
    let dir = workspace();
    let root = dir.path();
    ingest_and_split(root);
    let mine = |preset: &str| {
        step(
            root,
            &with_config(&[
                "--preset",
                preset,
                "mine",
                "--corpus",
                "corpus",
                "--split",
                "corpus/split.jsonl",
                "--part",
                "train",
            ]),
        )
        .unwrap();
        json(&root.join(format!("out/{preset}/mine/mining.json")))
    };
    let base = mine("rkpa-base");
    let ft = mine("rkpa-ft");
    for (b, f) in base.as_array().unwrap().iter().zip(ft.as_array().unwrap()) {
        assert_eq!(f["config"]["kpq_filter"], true);
        let before = f["stages"]["candidates_after_filters"].as_u64().unwrap();
        let after = f["stages"]["candidates_after_kp_quality"].as_u64().unwrap();
        assert!(after <= before);
        assert_eq!(
            b["stages"]["candidates_after_filters"],
            f["stages"]["candidates_after_filters"]
        );
    }
}

#[test]
fn manual_curation_applies_an_edit_script() {
    let dir = workspace();
    let root = dir.path();
    ingest_and_split(root);
    step(
        root,
        &with_config(&[
            "mine",
            "--corpus",
            "corpus",
            "--split",
            "corpus/split.jsonl",
            "--part",
            "train",
        ]),
    )
    .unwrap();
    std::fs::write(
        root.join("edits.jsonl"),
        concat!(
            r#"{"op": "drop", "kp_id": "neg-003"}"#,
            "\n",
            r#"{"op": "rephrase", "kp_id": "pos-001", "new_text": "Friendly and welcoming staff."}"#,
            "\n",
        ),
    )
    .unwrap();
    let args = with_config(&[
        "--preset",
        "rkpa-manual",
        "curate",
        "--kps",
        "out/rkpa-base/mine/keypoints.json",
        "--script",
        "edits.jsonl",
    ]);
    step(root, &args).unwrap();
    let lib = json(&root.join("out/rkpa-manual/curate/keypoints.json"));
    let shared = lib["shared"].as_array().unwrap();
    let ids: Vec<&str> = shared.iter().map(|k| k["kp_id"].as_str().unwrap()).collect();
    assert!(!ids.contains(&"neg-003"));
    let pos1 = shared.iter().find(|k| k["kp_id"] == "pos-001").unwrap();
    assert_eq!(pos1["text"], "Friendly and welcoming staff.");
    assert_eq!(pos1["polarity"], "pos");

    std::fs::write(root.join("bad.jsonl"), r#"{"op": "drop", "kp_id": "pos-999"}"#).unwrap();
    let bad = with_config(&[
        "curate",
        "--kps",
        "out/rkpa-base/mine/keypoints.json",
        "--script",
        "bad.jsonl",
    ]);
    assert_eq!(code(root, &bad), 2);
}

#[test]
fn summarize_prints_one_business() {
    let dir = workspace();
    let root = dir.path();
    ingest_and_split(root);
    step(
        root,
        &with_config(&[
            "mine",
            "--corpus",
            "corpus",
            "--split",
            "corpus/split.jsonl",
            "--part",
            "train",
        ]),
    )
    .unwrap();
    let split = jsonl(&root.join("corpus/split.jsonl"));
    let test_business = split.iter().find(|r| r["split"] == "test").unwrap()["business_id"]
        .as_str()
        .unwrap()
        .to_string();
    let out = kpa(
        root,
        &with_config(&[
            "summarize",
            "--corpus",
            "corpus",
            "--split",
            "corpus/split.jsonl",
            "--part",
            "test",
            "--kps",
            "out/rkpa-base/mine/keypoints.json",
            "--business",
            &test_business,
        ]),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains(&test_business), "{text}");
    assert!(root
        .join(format!("out/rkpa-base/summarize/summaries/{test_business}.json"))
        .exists());
}

#[test]
fn weak_labels_and_threshold_selection() {
    let dir = workspace();
    let root = dir.path();
    ingest_and_split(root);
    step(
        root,
        &with_config(&["weak-label", "--corpus", "corpus", "--out-dir", "weak"]),
    )
    .unwrap();
    let report = json(&root.join("weak/weak_labels.json"));
    let total = report["total"].as_u64().unwrap();
    assert!(total > 0);
    assert_eq!(
        report["train"].as_u64().unwrap() + report["heldout"].as_u64().unwrap(),
        total
    );
    let props: f64 = report["proportions"]
        .as_object()
        .unwrap()
        .values()
        .map(|v| v.as_f64().unwrap())
        .sum();
    assert!((props - 1.0).abs() < 1e-12);

    // texts are scored through the table backend
    let texts = [
        ("pos", "The food was delicious."),
        ("pos", "The staff were very friendly."),
        ("pos", "The desserts were pretty good I guess."),
        ("neg", "The service was painfully slow."),
        ("neg", "It is way too expensive."),
        ("neut", "We came here on a Tuesday night."),
    ];
    let records: String = texts
        .iter()
        .map(|(l, t)| format!("{}\n", serde_json::json!({"label": l, "text": t})))
        .collect();
    std::fs::write(root.join("predictions.jsonl"), records).unwrap();
    step(
        root,
        &with_config(&[
            "select-threshold",
            "--predictions",
            "predictions.jsonl",
            "--out-dir",
            "thr",
        ]),
    )
    .unwrap();
    let sel = json(&root.join("thr/threshold.json"));
    assert_eq!(sel["feasible"], true);
    assert_eq!(sel["t_s"], 0.7);
    assert!(
        json(&root.join("thr/select-threshold.manifest.json"))["scorer_requests"]
            .as_u64()
            .unwrap()
            > 0
    );

    let preds = [
        r#"{"label": "pos", "pos": 0.9, "neg": 0.05, "neut": 0.05}"#,
        r#"{"label": "pos", "pos": 0.8, "neg": 0.1, "neut": 0.1}"#,
        r#"{"label": "neg", "pos": 0.1, "neg": 0.85, "neut": 0.05}"#,
        r#"{"label": "neg", "pos": 0.2, "neg": 0.7, "neut": 0.1}"#,
        r#"{"label": "neut", "pos": 0.4, "neg": 0.2, "neut": 0.4}"#,
        r#"{"label": "neut", "pos": 0.75, "neg": 0.1, "neut": 0.15}"#,
    ];
    std::fs::write(root.join("given.jsonl"), preds.join("\n")).unwrap();
    step(
        root,
        &with_config(&["select-threshold", "--predictions", "given.jsonl", "--out-dir", "thr2"]),
    )
    .unwrap();
    let sel = json(&root.join("thr2/threshold.json"));
    assert_eq!(sel["feasible"], true);
    assert_eq!(sel["t_s"], 0.7);
}

#[test]
fn infeasible_threshold_is_a_data_error() {
    let dir = workspace();
    let root = dir.path();
    let preds = [
        r#"{"label": "pos", "pos": 0.4, "neg": 0.3, "neut": 0.3}"#,
        r#"{"label": "neg", "pos": 0.45, "neg": 0.4, "neut": 0.15}"#,
    ];
    std::fs::write(root.join("given.jsonl"), preds.join("\n")).unwrap();
    let out = kpa(
        root,
        &with_config(&["select-threshold", "--predictions", "given.jsonl", "--out-dir", "thr"]),
    );
    let written = root.join("thr/threshold.json");
    if out.status.success() {
        assert_eq!(json(&written)["feasible"], false);
    } else {
        assert_eq!(out.status.code(), Some(2));
    }
}

#[test]
fn kpq_dataset_partitions_annotations() {
    let dir = workspace();
    let root = dir.path();
    let rows = [
        r#"{"text": "Great friendly staff.", "validity_conf": 0.95, "sentiment_clear_conf": 0.9, "informative_conf": 0.8, "too_specific_or_uninformative_conf": 0.1, "multi_aspect_conf": 0.1}"#,
        r#"{"text": "Food and service and parking.", "validity_conf": 0.9, "sentiment_clear_conf": 0.9, "informative_conf": 0.8, "too_specific_or_uninformative_conf": 0.1, "multi_aspect_conf": 0.9}"#,
        r#"{"text": "It was fine I guess.", "validity_conf": 0.82, "sentiment_clear_conf": 0.55, "informative_conf": 0.5, "too_specific_or_uninformative_conf": 0.3, "multi_aspect_conf": 0.6}"#,
    ];
    std::fs::write(root.join("ann.jsonl"), rows.join("\n")).unwrap();
    step(
        root,
        &with_config(&["kpq-dataset", "--annotations", "ann.jsonl", "--out-dir", "kpq"]),
    )
    .unwrap();
    let report = json(&root.join("kpq/kpq_report.json"));
    assert_eq!(
        report,
        serde_json::json!({"positive": 1, "negative": 1, "discarded": 1})
    );
    assert_eq!(jsonl(&root.join("kpq/kpq.jsonl")).len(), 2);
}

#[test]
fn ingest_rejects_malformed_lines_and_keeps_going() {
    let dir = workspace();
    let root = dir.path();
    let mut reviews = std::fs::read_to_string(root.join("mini/reviews.jsonl")).unwrap();
    reviews.push_str("{not json\n");
    reviews.push_str(r#"{"review_id": "x1", "business_id": "b01", "stars": 9, "text": "Out of range stars here."}"#);
    reviews.push('\n');
    std::fs::write(root.join("mini/reviews.jsonl"), reviews).unwrap();
    step(
        root,
        &with_config(&[
            "ingest",
            "--reviews",
            "mini/reviews.jsonl",
            "--businesses",
            "mini/businesses.jsonl",
            "--out-dir",
            "corpus",
        ]),
    )
    .unwrap();
    let rejected = jsonl(&root.join("corpus/rejected.jsonl"));
    assert_eq!(rejected.len(), 2);
    assert_eq!(rejected[0]["line"], 301);
    assert!(rejected.iter().all(|r| r["message"].is_string()));
    assert_eq!(jsonl(&root.join("corpus/reviews.jsonl")).len(), 300);
}

#[test]
fn exit_codes() {
    let dir = workspace();
    let root = dir.path();
    assert_eq!(code(root, &["--help"]), 0);
    // usage
    assert_eq!(code(root, &["mine"]), 1);
    assert_eq!(
        code(
            root,
            &["--preset", "nonsense", "split", "--corpus", "c", "--out-dir", "o"]
        ),
        1
    );
    std::fs::write(root.join("bad.toml"), "[mining]\nt_match = 1.5\n").unwrap();
    assert_eq!(
        code(
            root,
            &["--config", "bad.toml", "split", "--corpus", "corpus", "--out-dir", "o"]
        ),
        1
    );
    // data
    assert_eq!(
        code(root, &with_config(&["split", "--corpus", "missing", "--out-dir", "o"])),
        2
    );
    std::fs::write(root.join("garbage.jsonl"), "label,pos\n").unwrap();
    assert_eq!(
        code(
            root,
            &with_config(&["select-threshold", "--predictions", "garbage.jsonl", "--out-dir", "o"])
        ),
        2
    );
    // backend: nothing listens on the discard port
    ingest_and_split(root);
    let remote = [
        "--backend",
        "remote",
        "--endpoint",
        "http://127.0.0.1:9",
        "mine",
        "--corpus",
        "corpus",
        "--split",
        "corpus/split.jsonl",
        "--part",
        "train",
    ];
    let mut args = vec!["--config", "mini/kpa.toml"];
    args.extend(remote);
    let out = kpa(root, &args);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}
