//! Shared fixtures: random extraction instances and a straight-line
//! reference implementation of the greedy extraction to check against.
#![allow(dead_code)]

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use kpa_core::mining::{Candidate, Comment, Extraction};
use kpa_core::scoring::{Scorer, TableScorer};
use kpa_core::sentiment::Polarity;

pub const PALETTE: [f64; 10] = [0.1, 0.4, 0.85, 0.9, 0.95, 0.97, 0.99, 0.993, 0.996, 1.0];
pub const QUALITIES: [f64; 4] = [0.5, 0.6, 0.7, 0.8];

#[derive(Debug, Clone)]
pub struct Instance {
    pub candidates: Vec<Candidate>,
    pub comments: Vec<Comment>,
    /// (sentence text, kp text) -> score; anything missing scores 0.
    pub table: HashMap<(String, String), f64>,
    pub t_match: f64,
    pub k: usize,
}

impl Instance {
    pub fn score(&self, sentence: &str, kp: &str) -> f64 {
        self.table
            .get(&(sentence.to_string(), kp.to_string()))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn scorer(&self) -> Scorer {
        let mut t = TableScorer::new().with_default_match(0.0);
        for ((s, kp), v) in &self.table {
            t.insert_match(s, kp, *v);
        }
        Scorer::new(Arc::new(t))
    }
}

/// Up to `max_cands` candidates (about half of them also comments) and up to
/// `max_comments` comments, all of one polarity, with scores drawn from a
/// small palette so ties and threshold-boundary values are common.
pub fn random_instance(rng: &mut ChaCha8Rng, max_cands: usize, max_comments: usize) -> Instance {
    let polarity = if rng.gen_bool(0.5) {
        Some(Polarity::Pos)
    } else {
        Some(Polarity::Neg)
    };
    let n_comments = rng.gen_range(0..=max_comments);
    let n_cands = rng.gen_range(1..=max_cands);
    let comments: Vec<Comment> = (0..n_comments)
        .map(|i| Comment {
            id: format!("c{i:02}"),
            text: format!("comment {i}"),
            polarity,
        })
        .collect();
    let mut pool: Vec<&Comment> = comments.iter().collect();
    pool.shuffle(rng);
    let mut candidates = Vec::new();
    for j in 0..n_cands {
        let (id, text) = match pool.pop() {
            Some(c) if rng.gen_bool(0.5) => (c.id.clone(), c.text.clone()),
            _ => (format!("k{j}"), format!("candidate {j}")),
        };
        candidates.push(Candidate {
            id,
            text,
            quality: *QUALITIES.choose(rng).unwrap(),
            kp_quality: None,
            polarity,
        });
    }
    let mut rows: Vec<String> = comments.iter().map(|c| c.text.clone()).collect();
    rows.extend(candidates.iter().map(|c| c.text.clone()));
    rows.sort();
    rows.dedup();
    let mut table = HashMap::new();
    for r in &rows {
        for c in &candidates {
            if rng.gen_bool(0.85) {
                table.insert((r.clone(), c.text.clone()), *PALETTE.choose(rng).unwrap());
            }
        }
    }
    Instance {
        candidates,
        comments,
        table,
        t_match: *[0.9, 0.95, 0.99].choose(rng).unwrap(),
        k: rng.gen_range(1..=8),
    }
}

/// What both implementations are compared on.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    /// (candidate id, final match count) in rank order.
    pub key_points: Vec<(String, usize)>,
    /// Row id -> key point id; rows are the comments plus removed candidates.
    pub mapping: BTreeMap<String, Option<String>>,
    pub removed: Vec<String>,
}

pub fn outcome_of(e: &Extraction) -> Outcome {
    Outcome {
        key_points: e
            .key_points
            .iter()
            .map(|k| (k.candidate.id.clone(), k.match_count))
            .collect(),
        mapping: e
            .mapping
            .iter()
            .map(|a| (a.comment_id.clone(), a.kp_id.clone()))
            .collect(),
        removed: e.removed.clone(),
    }
}

fn precedes(a: &Candidate, b: &Candidate) -> bool {
    match b.quality.partial_cmp(&a.quality).unwrap() {
        Ordering::Less => true,
        Ordering::Greater => false,
        Ordering::Equal => (a.text.as_str(), a.id.as_str()) < (b.text.as_str(), b.id.as_str()),
    }
}

fn best<'a>(inst: &Instance, row_id: &str, row_text: &str, pool: &[&'a Candidate]) -> Option<&'a Candidate> {
    let mut found: Option<(&Candidate, f64)> = None;
    for &c in pool {
        if c.id == row_id {
            continue;
        }
        let s = inst.score(row_text, &c.text);
        if s <= inst.t_match {
            continue;
        }
        found = match found {
            None => Some((c, s)),
            Some((b, bs)) if s > bs || (s == bs && precedes(c, b)) => Some((c, s)),
            keep => keep,
        };
    }
    found.map(|(c, _)| c)
}

fn ranked<'a>(pool: &[&'a Candidate], counts: &HashMap<&str, usize>) -> Vec<&'a Candidate> {
    let mut v = pool.to_vec();
    let count = |c: &Candidate| counts.get(c.id.as_str()).copied().unwrap_or(0);
    v.sort_by(|a, b| {
        count(b).cmp(&count(a)).then_with(|| {
            if precedes(a, b) {
                Ordering::Less
            } else if precedes(b, a) {
                Ordering::Greater
            } else {
                Ordering::Equal
            }
        })
    });
    v
}

/// Map, rank, drop near-duplicates, re-map, re-rank: written out directly
/// from the algorithm's description with no shared code.
pub fn reference_extract(inst: &Instance) -> Outcome {
    let all: Vec<&Candidate> = inst.candidates.iter().collect();

    let mut target: BTreeMap<String, Option<String>> = BTreeMap::new();
    for c in &inst.comments {
        target.insert(c.id.clone(), best(inst, &c.id, &c.text, &all).map(|k| k.id.clone()));
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for k in target.values().flatten() {
        *counts.entry(k.as_str()).or_default() += 1;
    }

    let mut kept: Vec<&Candidate> = Vec::new();
    let mut removed: Vec<&Candidate> = Vec::new();
    for c in ranked(&all, &counts) {
        if kept
            .iter()
            .any(|k| k.id != c.id && inst.score(&c.text, &k.text) > inst.t_match)
        {
            removed.push(c);
        } else {
            kept.push(c);
        }
    }
    let is_removed = |id: &str| removed.iter().any(|r| r.id == id);

    let texts: HashMap<&str, &str> = inst
        .comments
        .iter()
        .map(|c| (c.id.as_str(), c.text.as_str()))
        .chain(inst.candidates.iter().map(|c| (c.id.as_str(), c.text.as_str())))
        .collect();
    for r in &removed {
        target.entry(r.id.clone()).or_insert(None);
    }
    let ids: Vec<String> = target.keys().cloned().collect();
    for id in ids {
        let stale = is_removed(&id) || target[&id].as_deref().is_some_and(is_removed);
        if stale {
            let t = best(inst, &id, texts[id.as_str()], &kept).map(|k| k.id.clone());
            target.insert(id, t);
        }
    }

    let mut counts: HashMap<&str, usize> = HashMap::new();
    for k in target.values().flatten() {
        *counts.entry(k.as_str()).or_default() += 1;
    }
    let top: Vec<&Candidate> = ranked(&kept, &counts).into_iter().take(inst.k).collect();
    let in_top = |id: &str| top.iter().any(|c| c.id == id);
    Outcome {
        key_points: top
            .iter()
            .map(|c| (c.id.clone(), counts.get(c.id.as_str()).copied().unwrap_or(0)))
            .collect(),
        mapping: target
            .into_iter()
            .map(|(id, t)| (id, t.filter(|k| in_top(k))))
            .collect(),
        removed: removed.iter().map(|c| c.id.clone()).collect(),
    }
}

pub fn mini_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/mini")
}

/// Runs the `kpa` binary inside `root`.
pub fn kpa(root: &std::path::Path, args: &[&str]) -> std::process::Output {
    std::process::Command::new(env!("CARGO_BIN_EXE_kpa"))
        .args(args)
        .current_dir(root)
        .env_remove("KPA_SCORER_ENDPOINT")
        .env("RUST_LOG", "error")
        .output()
        .expect("kpa runs")
}

pub fn step(root: &std::path::Path, args: &[&str]) -> Result<(), String> {
    let out = kpa(root, args);
    if out.status.success() {
        Ok(())
    } else {
        Err(format!(
            "`kpa {}` exited with {:?}: {}",
            args.join(" "),
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        ))
    }
}

/// Eight synthetic judgments per sampled pair, more of them positive the
/// higher the score.
pub fn synthesize_judgments(sample: &std::path::Path, out: &std::path::Path) {
    let mut lines = String::new();
    for line in std::fs::read_to_string(sample).unwrap().lines() {
        let pair: serde_json::Value = serde_json::from_str(line).unwrap();
        let score = pair["score"].as_f64().unwrap();
        let yes = if score > 0.95 {
            8
        } else if score > 0.8 {
            7
        } else {
            3
        };
        for a in 0..8 {
            let judgment = if a < yes {
                "yes"
            } else if a == 7 {
                "faulty_kp"
            } else {
                "no"
            };
            lines.push_str(&format!(
                "{}\n",
                serde_json::json!({"pair_id": pair["pair_id"], "annotator_id": format!("a{a}"), "judgment": judgment})
            ));
        }
    }
    std::fs::write(out, lines).unwrap();
}

/// ingest → split → mine → summarize → sample → aggregate → curve on a copy
/// of the mini corpus under `root`, all paths relative to `root`.
pub fn run_pipeline(root: &std::path::Path, preset: &str, workers: usize) -> Result<(), String> {
    let data = root.join("mini");
    std::fs::create_dir_all(&data).map_err(|e| e.to_string())?;
    for f in ["reviews.jsonl", "businesses.jsonl", "scores.json", "kpa.toml"] {
        std::fs::copy(mini_dir().join(f), data.join(f)).map_err(|e| e.to_string())?;
    }
    let w = workers.to_string();
    let g = ["--config", "mini/kpa.toml", "--preset", preset, "--workers", w.as_str()];
    let run = |rest: &[&str]| step(root, &[&g[..], rest].concat());
    let out = format!("out/{preset}");
    let kps = format!("{out}/mine/keypoints.json");
    let matches = format!("{out}/summarize/matches.jsonl");
    run(&[
        "ingest",
        "--reviews",
        "mini/reviews.jsonl",
        "--businesses",
        "mini/businesses.jsonl",
        "--out-dir",
        "corpus",
    ])?;
    run(&["split", "--corpus", "corpus", "--out-dir", "corpus"])?;
    run(&[
        "mine",
        "--corpus",
        "corpus",
        "--split",
        "corpus/split.jsonl",
        "--part",
        "train",
    ])?;
    run(&[
        "summarize",
        "--corpus",
        "corpus",
        "--split",
        "corpus/split.jsonl",
        "--part",
        "test",
        "--kps",
        &kps,
    ])?;
    run(&[
        "sample",
        "--corpus",
        "corpus",
        "--split",
        "corpus/split.jsonl",
        "--part",
        "test",
        "--kps",
        &kps,
        "--matches",
        &matches,
    ])?;
    synthesize_judgments(
        &root.join(format!("{out}/sample/sample.jsonl")),
        &root.join("judgments.jsonl"),
    );
    run(&[
        "aggregate",
        "--sample",
        &format!("{out}/sample/sample.jsonl"),
        "--judgments",
        "judgments.jsonl",
    ])?;
    run(&[
        "curve",
        "--corpus",
        "corpus",
        "--sample",
        &format!("{out}/aggregate/labeled.jsonl"),
        "--matches",
        &matches,
        "--businesses",
        &format!("{out}/sample/eval_businesses.json"),
    ])
}

/// Every file under `root`, keyed by relative path.
pub fn snapshot(root: &std::path::Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(dir: &std::path::Path, base: &std::path::Path, out: &mut BTreeMap<String, Vec<u8>>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(&path, base, out);
            } else {
                let rel = path.strip_prefix(base).unwrap().display().to_string();
                out.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}
