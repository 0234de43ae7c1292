use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use kpa_core::config::{BackendKind, PipelineConfig};
use kpa_core::corpus::{
    filter_corpus, parse_businesses, parse_reviews, split_dataset, Corpus, DatasetSplit, SplitPart,
};
use kpa_core::evaluate::{
    attach_judgments, build_precision_sample, consistency_split_check, faulty_kp_counts, pc_curve, precision_at,
    select_eval_businesses, threshold_grid, write_curve, BusinessMatches, JudgmentRecord, PairLabel, PrecisionPair,
    SampleExport,
};
use kpa_core::io::{self, Manifest};
use kpa_core::mining::{
    apply_manual_curation, build_kpq_dataset, mine_business_kps, mine_domain_kps, parse_edit_script, KeyPoint,
    KpLibrary, KpqAnnotation, MiningError, MiningResult,
};
use kpa_core::scoring::{
    Capability, LexicalScorer, RemoteBackend, RetryPolicy, RoutedBackend, ScoreCache, Scorer, ScorerBackend,
    SentimentDistribution, TableScorer,
};
use kpa_core::sentiment::{self, split_heldout, weak_label_reviews, Polarity, SentimentLabel};
use kpa_core::summarize::{render_summary, summarize_businesses, MatchRecord, RenderFormat};

use crate::failure::Failure;
use crate::{
    AggregateArgs, CorpusSelection, CurateArgs, CurveArgs, Globals, IngestArgs, KpqDatasetArgs, MineArgs, SampleArgs,
    SelectThresholdArgs, SplitArgs, SummarizeArgs, WeakLabelArgs,
};

type Outcome = Result<(), Failure>;

/// Collects what a run read and wrote, then writes `<out_dir>/<command>.manifest.json`.
struct Run<'a> {
    out_dir: PathBuf,
    manifest: Manifest,
    globals: &'a Globals,
}

impl<'a> Run<'a> {
    fn new(globals: &'a Globals, command: &str, args: &serde_json::Value, out_dir: PathBuf, seed: u64) -> Self {
        let config = &globals.config;
        Run {
            out_dir,
            manifest: Manifest {
                command: command.to_string(),
                args: args.clone(),
                preset: config.preset.name().to_string(),
                config: serde_json::to_value(config).expect("config serializes"),
                seed,
                inputs: BTreeMap::new(),
                outputs: Vec::new(),
                scorer_backend: None,
                scorer_requests: 0,
            },
            globals,
        }
    }

    fn config(&self) -> &'a PipelineConfig {
        &self.globals.config
    }

    fn input(&mut self, path: &Path) -> Result<(), Failure> {
        Ok(self.manifest.add_input(path)?)
    }

    fn output(&mut self, name: &str) -> PathBuf {
        let path = self.out_dir.join(name);
        self.manifest.outputs.push(path.display().to_string());
        path
    }

    fn finish(mut self, scorer: Option<&Scorer>) -> Outcome {
        if let Some(s) = scorer {
            self.manifest.scorer_backend = Some(s.backend_id().to_string());
            self.manifest.scorer_requests = s.stats().requests();
        }
        let path = self.out_dir.join(format!("{}.manifest.json", self.manifest.command));
        io::write_json(&path, &self.manifest)?;
        Ok(())
    }
}

fn default_out(globals: &Globals, command: &str, given: &Option<PathBuf>) -> PathBuf {
    given
        .clone()
        .unwrap_or_else(|| PathBuf::from("out").join(globals.config.preset.name()).join(command))
}

fn build_scorer(config: &PipelineConfig) -> Result<Scorer, Failure> {
    let b = &config.backend;
    let table = || -> Result<TableScorer, Failure> {
        let path = b
            .table
            .as_ref()
            .ok_or_else(|| Failure::Usage("the table backend needs --table or backend.table".into()))?;
        TableScorer::load(path).map_err(|e| Failure::Data(format!("score table {}: {e}", path.display())))
    };
    let backend: Arc<dyn ScorerBackend> = match b.kind {
        BackendKind::Table => Arc::new(table()?),
        BackendKind::Lexical => Arc::new(LexicalScorer::new()),
        BackendKind::LexicalTable => {
            let t: Arc<dyn ScorerBackend> = Arc::new(table()?);
            let mut routes: Vec<(Capability, Arc<dyn ScorerBackend>)> =
                vec![(Capability::Match, Arc::new(LexicalScorer::new()))];
            for c in [Capability::Quality, Capability::Sentiment, Capability::KpQuality] {
                routes.push((c, t.clone()));
            }
            Arc::new(RoutedBackend::new(routes))
        }
        BackendKind::Remote => {
            let url = b
                .endpoint
                .as_deref()
                .ok_or_else(|| Failure::Usage("the remote backend needs --endpoint or KPA_SCORER_ENDPOINT".into()))?;
            let mut retry = RetryPolicy::default();
            if let Some(n) = b.retries {
                retry.attempts = n;
            }
            Arc::new(RemoteBackend::connect(url, retry)?)
        }
    };
    Ok(Scorer::new(backend).with_cache(Arc::new(ScoreCache::new())))
}

fn load_corpus(dir: &Path, run: &mut Run) -> Result<Corpus, Failure> {
    let policy = run.config().malformed;
    let rpath = dir.join("reviews.jsonl");
    let bpath = dir.join("businesses.jsonl");
    run.input(&rpath)?;
    run.input(&bpath)?;
    let reviews = parse_reviews(io::open(&rpath)?, policy)?;
    let businesses = parse_businesses(io::open(&bpath)?, policy)?;
    Ok(Corpus {
        businesses: businesses.records,
        reviews: reviews.records,
    })
}

fn select_corpus(sel: &CorpusSelection, run: &mut Run) -> Result<Corpus, Failure> {
    let corpus = load_corpus(&sel.corpus, run)?;
    let (Some(split_path), Some(part)) = (&sel.split, &sel.part) else {
        return Ok(corpus);
    };
    let part: SplitPart = part.parse().map_err(|e| Failure::Usage(format!("--part: {e}")))?;
    run.input(split_path)?;
    let split = DatasetSplit::read_manifest(io::open(split_path)?)?;
    let ids = split.ids(part);
    Ok(corpus.retain_businesses(|b| ids.contains(&b.business_id)))
}

pub fn ingest(g: &Globals, a: &IngestArgs, name: &str, args: &serde_json::Value) -> Outcome {
    let mut run = Run::new(g, name, args, a.out_dir.clone(), 0);
    let policy = g.config.malformed;
    run.input(&a.reviews)?;
    run.input(&a.businesses)?;
    let reviews = parse_reviews(io::open(&a.reviews)?, policy)?;
    let businesses = parse_businesses(io::open(&a.businesses)?, policy)?;
    let mut corpus = Corpus {
        businesses: businesses.records,
        reviews: reviews.records,
    };
    if let Some(domain) = a.domain.as_ref().or(g.config.domain.as_ref()) {
        corpus = corpus.retain_businesses(|b| b.in_domain(domain));
    }
    let filtered = filter_corpus(&corpus, &g.config.filter);

    #[derive(Serialize)]
    struct Rejected<'a> {
        file: &'a str,
        line: usize,
        message: &'a str,
    }
    let rejected: Vec<Rejected> = reviews
        .errors
        .iter()
        .map(|e| Rejected {
            file: "reviews",
            line: e.line,
            message: &e.message,
        })
        .chain(businesses.errors.iter().map(|e| Rejected {
            file: "businesses",
            line: e.line,
            message: &e.message,
        }))
        .collect();
    let mut w = io::create(&run.output("reviews.jsonl"))?;
    filtered.write_reviews(&mut w)?;
    drop(w);
    let mut w = io::create(&run.output("businesses.jsonl"))?;
    filtered.write_businesses(&mut w)?;
    drop(w);
    io::write_jsonl(&run.output("rejected.jsonl"), &rejected)?;
    println!(
        "ingest: kept {} reviews of {} businesses ({} of {} reviews read, {} rejected lines)",
        filtered.reviews.len(),
        filtered.businesses.len(),
        corpus.reviews.len(),
        corpus.reviews.len(),
        rejected.len()
    );
    run.finish(None)
}

pub fn split(g: &Globals, a: &SplitArgs, name: &str, args: &serde_json::Value) -> Outcome {
    let seed = a.seed.unwrap_or(g.config.split_seed);
    let mut run = Run::new(g, name, args, a.out_dir.clone(), seed);
    let corpus = load_corpus(&a.corpus, &mut run)?;
    let ids: Vec<&str> = corpus.businesses.iter().map(|b| b.business_id.as_str()).collect();
    let split = split_dataset(&ids, g.config.split_ratios, seed)?;
    let mut w = io::create(&run.output("split.jsonl"))?;
    split.write_manifest(&mut w)?;
    drop(w);
    println!(
        "split: train {} / dev {} / test {}",
        split.train.len(),
        split.dev.len(),
        split.test.len()
    );
    run.finish(None)
}

pub fn weak_label(g: &Globals, a: &WeakLabelArgs, name: &str, args: &serde_json::Value) -> Outcome {
    let mut run = Run::new(g, name, args, a.out_dir.clone(), a.seed);
    let corpus = load_corpus(&a.corpus, &mut run)?;
    let wl = &g.config.sentiment.weak_labels;
    let labels = weak_label_reviews(&corpus.reviews, wl);
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for l in &labels {
        *counts.entry(l.label.to_string()).or_default() += 1;
    }
    let total = labels.len();
    let (train, heldout) = split_heldout(labels, wl.heldout_fraction, a.seed)?;
    io::write_jsonl(&run.output("train.jsonl"), &train)?;
    io::write_jsonl(&run.output("heldout.jsonl"), &heldout)?;
    let proportions: BTreeMap<&String, f64> = counts.iter().map(|(k, &v)| (k, v as f64 / total as f64)).collect();
    io::write_json(
        &run.output("weak_labels.json"),
        &serde_json::json!({"total": total, "counts": counts, "proportions": proportions, "train": train.len(), "heldout": heldout.len()}),
    )?;
    println!(
        "weak-label: {total} reviews labeled, {} train / {} held out",
        train.len(),
        heldout.len()
    );
    run.finish(None)
}

#[derive(Debug, Deserialize)]
struct PredictionRecord {
    label: SentimentLabel,
    #[serde(default)]
    text: Option<String>,
    #[serde(default)]
    pos: Option<f64>,
    #[serde(default)]
    neg: Option<f64>,
    #[serde(default)]
    neut: Option<f64>,
}

pub fn select_threshold(g: &Globals, a: &SelectThresholdArgs, name: &str, args: &serde_json::Value) -> Outcome {
    let mut run = Run::new(g, name, args, a.out_dir.clone(), 0);
    run.input(&a.predictions)?;
    let records: Vec<PredictionRecord> = io::read_jsonl(&a.predictions)?;
    let gold: Vec<SentimentLabel> = records.iter().map(|r| r.label).collect();
    let given: Option<Vec<SentimentDistribution>> = records
        .iter()
        .map(|r| {
            Some(SentimentDistribution {
                pos: r.pos?,
                neg: r.neg?,
                neut: r.neut?,
            })
        })
        .collect();
    let mut scorer = None;
    let predictions = match given {
        Some(p) => p,
        None => {
            let texts: Option<Vec<&str>> = records.iter().map(|r| r.text.as_deref()).collect();
            let texts = texts
                .ok_or_else(|| Failure::data("select-threshold", "every record needs either pos/neg/neut or text"))?;
            let s = build_scorer(&g.config)?;
            let p = s.sentiment_batch(&texts)?;
            scorer = Some(s);
            p
        }
    };
    let min_recall = a.min_recall.unwrap_or(g.config.sentiment.min_recall);
    let selection = sentiment::select_threshold(&predictions, &gold, min_recall)?;
    io::write_json(&run.output("threshold.json"), &selection)?;
    match selection.t_s {
        Some(t) => println!("select-threshold: t_s = {t}"),
        None => println!("select-threshold: infeasible at min_recall {min_recall}"),
    }
    run.finish(scorer.as_ref())
}

pub fn mine(g: &Globals, a: &MineArgs, name: &str, args: &serde_json::Value) -> Outcome {
    let mut mining = g.config.effective_mining();
    if let Some(seed) = a.seed {
        mining.seed = seed;
    }
    let out_dir = default_out(g, name, &a.out_dir);
    let mut run = Run::new(g, name, args, out_dir, mining.seed);
    let corpus = select_corpus(&a.input, &mut run)?;
    let scorer = build_scorer(&g.config)?;

    let mut library = KpLibrary::default();
    let results: Vec<MiningResult> = if g.config.preset.per_business() {
        let by_business = corpus.reviews_by_business();
        let mined: Vec<(String, Option<MiningResult>)> = by_business
            .par_iter()
            .map(
                |(&id, reviews)| match mine_business_kps(reviews, id, &mining, &scorer) {
                    Ok(r) => Ok((id.to_string(), Some(r))),
                    Err(MiningError::NoCandidates) => {
                        log::warn!("business {id}: no key point candidates");
                        Ok((id.to_string(), None))
                    }
                    Err(e) => Err(e),
                },
            )
            .collect::<Result<_, MiningError>>()?;
        let mut results = Vec::new();
        for (id, r) in mined {
            let kps = r.as_ref().map(|r| r.key_points.clone()).unwrap_or_default();
            library.per_business.insert(id, kps);
            results.extend(r);
        }
        results
    } else {
        if !mining.use_sentiment {
            return Err(Failure::Usage(
                "collective mining runs per polarity; enable mining.use_sentiment".into(),
            ));
        }
        let domain = a.domain.as_deref().or(g.config.domain.as_deref());
        let t_s = a.t_s.unwrap_or(g.config.sentiment.t_s);
        let polarities = a.polarity.map_or(vec![Polarity::Pos, Polarity::Neg], |p| vec![p]);
        let mut results = Vec::new();
        for p in polarities {
            let r = mine_domain_kps(&corpus, domain, p, &mining, t_s, &scorer)?;
            library.shared.extend(r.key_points.iter().cloned());
            results.push(r);
        }
        results
    };
    io::write_json(&run.output("keypoints.json"), &library)?;
    io::write_json(&run.output("mining.json"), &results)?;
    for r in &results {
        let scope = match &r.scope {
            kpa_core::mining::Scope::Domain { domain } => domain.clone(),
            kpa_core::mining::Scope::Business { business_id } => business_id.clone(),
        };
        let pol = r.polarity.map_or("-".to_string(), |p| p.to_string());
        println!(
            "mine {scope} {pol}: {} sentences, {} candidates, {} key points",
            r.stages.sentences, r.stages.candidates, r.stages.published
        );
    }
    run.finish(Some(&scorer))
}

pub fn curate(g: &Globals, a: &CurateArgs, name: &str, args: &serde_json::Value) -> Outcome {
    let out_dir = default_out(g, name, &a.out_dir);
    let mut run = Run::new(g, name, args, out_dir, 0);
    run.input(&a.kps)?;
    run.input(&a.script)?;
    let library: KpLibrary = io::read_json(&a.kps)?;
    if !library.per_business.is_empty() {
        return Err(Failure::Usage(
            "curation applies to a shared (collectively mined) key point set".into(),
        ));
    }
    let ops = parse_edit_script(io::open(&a.script)?)?;
    let before = library.shared.len();
    let curated = apply_manual_curation(library.shared, &ops)?;
    println!("curate: {before} -> {} key points", curated.len());
    io::write_json(&run.output("keypoints.json"), &KpLibrary::shared(curated))?;
    run.finish(None)
}

pub fn summarize(g: &Globals, a: &SummarizeArgs, name: &str, args: &serde_json::Value) -> Outcome {
    let format: RenderFormat = a.format.parse().map_err(|e| Failure::Usage(format!("{e}")))?;
    let out_dir = default_out(g, name, &a.out_dir);
    let mut run = Run::new(g, name, args, out_dir, 0);
    let corpus = select_corpus(&a.input, &mut run)?;
    run.input(&a.kps)?;
    let library: KpLibrary = io::read_json(&a.kps)?;
    let scorer = build_scorer(&g.config)?;

    let t_match = a.t_match.unwrap_or(g.config.summary.t_match);
    let top_k = a.top_k.unwrap_or(g.config.summary.top_k);
    let t_s = g
        .config
        .effective_mining()
        .use_sentiment
        .then(|| a.t_s.unwrap_or(g.config.sentiment.t_s));
    // records are kept down to the evaluation floor so `sample` and `curve`
    // can reuse them; summaries count only those above t_match
    let floor = g.config.eval.t_min.min(t_match);

    let mut by_business = corpus.reviews_by_business();
    if let Some(id) = &a.business {
        if !by_business.contains_key(id.as_str()) {
            return Err(Failure::data("summarize", format!("unknown business {id}")));
        }
        by_business.retain(|k, _| k == id);
    }
    let results = summarize_businesses(&by_business, &library, &scorer, floor, t_match, t_s, top_k)
        .map_err(|(b, e)| Failure::Backend(format!("summarize {b}: {e}")))?;

    let summaries: Vec<_> = results.iter().map(|(s, _)| s).collect();
    io::write_jsonl(&run.output("summaries.jsonl"), summaries.iter().copied())?;
    for s in &summaries {
        io::write_json(&run.output(&format!("summaries/{}.json", s.business_id)), s)?;
    }
    io::write_jsonl(&run.output("matches.jsonl"), results.iter().flat_map(|(_, r)| r))?;
    if a.business.is_some() {
        for s in &summaries {
            print!("{}", render_summary(s, format));
        }
    } else {
        println!("summarize: {} businesses", summaries.len());
    }
    run.finish(Some(&scorer))
}

fn all_key_points(library: &KpLibrary) -> Vec<KeyPoint> {
    let mut kps = library.shared.clone();
    for local in library.per_business.values() {
        kps.extend(local.iter().cloned());
    }
    kps
}

fn group_records(records: Vec<MatchRecord>) -> HashMap<String, Vec<MatchRecord>> {
    let mut out: HashMap<String, Vec<MatchRecord>> = HashMap::new();
    for r in records {
        out.entry(r.business_id.clone()).or_default().push(r);
    }
    out
}

fn business_matches(
    corpus: &Corpus,
    ids: &[String],
    records: Vec<MatchRecord>,
) -> Result<Vec<BusinessMatches>, Failure> {
    let by_business = corpus.reviews_by_business();
    let mut grouped = group_records(records);
    ids.iter()
        .map(|id| {
            let reviews = by_business
                .get(id.as_str())
                .ok_or_else(|| Failure::data("evaluate", format!("business {id} is not in the corpus")))?;
            Ok(BusinessMatches::from_reviews(
                id,
                reviews,
                grouped.remove(id).unwrap_or_default(),
            ))
        })
        .collect()
}

pub fn sample(g: &Globals, a: &SampleArgs, name: &str, args: &serde_json::Value) -> Outcome {
    let eval = &g.config.eval;
    let seed = a.seed.unwrap_or(eval.seed);
    let out_dir = default_out(g, name, &a.out_dir);
    let mut run = Run::new(g, name, args, out_dir, seed);
    let corpus = select_corpus(&a.input, &mut run)?;
    run.input(&a.kps)?;
    run.input(&a.matches)?;
    let library: KpLibrary = io::read_json(&a.kps)?;
    let records: Vec<MatchRecord> = io::read_jsonl(&a.matches)?;

    let counts: BTreeMap<String, usize> = corpus
        .reviews_by_business()
        .into_iter()
        .map(|(id, rs)| (id.to_string(), rs.len()))
        .collect();
    let ids = select_eval_businesses(&counts, eval.review_count_bounds, eval.businesses_per_domain, seed);
    if ids.is_empty() {
        return Err(Failure::data(
            "sample",
            format!(
                "no business has between {} and {} reviews",
                eval.review_count_bounds[0], eval.review_count_bounds[1]
            ),
        ));
    }
    let businesses = business_matches(&corpus, &ids, records)?;
    let size = a.size.unwrap_or(eval.sample_size);
    let s = build_precision_sample(
        &businesses,
        &all_key_points(&library),
        eval.t_min,
        size,
        seed,
        eval.max_draws_per_pair,
    )?;
    io::write_jsonl(&run.output("sample.jsonl"), &s.pairs)?;
    let export: Vec<SampleExport> = s.pairs.iter().map(SampleExport::from).collect();
    io::write_jsonl(&run.output("annotation.jsonl"), &export)?;
    io::write_json(&run.output("eval_businesses.json"), &ids)?;
    io::write_json(
        &run.output("sample_report.json"),
        &serde_json::json!({"requested": size, "pairs": s.pairs.len(), "draws": s.draws, "shortfall": s.shortfall, "businesses": ids.len()}),
    )?;
    println!(
        "sample: {} pairs from {} businesses ({} draws, shortfall {})",
        s.pairs.len(),
        ids.len(),
        s.draws,
        s.shortfall
    );
    run.finish(None)
}

pub fn aggregate(g: &Globals, a: &AggregateArgs, name: &str, args: &serde_json::Value) -> Outcome {
    let eval = &g.config.eval;
    let seed = a.seed.unwrap_or(eval.seed);
    let out_dir = default_out(g, name, &a.out_dir);
    let mut run = Run::new(g, name, args, out_dir, seed);
    run.input(&a.sample)?;
    run.input(&a.judgments)?;
    let mut pairs: Vec<PrecisionPair> = io::read_jsonl(&a.sample)?;
    let judgments: Vec<JudgmentRecord> = io::read_jsonl(&a.judgments)?;
    attach_judgments(&mut pairs, &judgments, eval.min_agree)?;
    let labeled = pairs.iter().filter(|p| p.label != PairLabel::Unlabeled).count();
    let precision = if labeled == pairs.len() {
        precision_at(&pairs, eval.t_min)?
    } else {
        None
    };
    let consistency = if a.consistency {
        let sets: Vec<_> = pairs.iter().map(|p| p.judgments.clone()).collect();
        Some(consistency_split_check(&sets, eval.min_agree, seed)?)
    } else {
        None
    };
    io::write_jsonl(&run.output("labeled.jsonl"), &pairs)?;
    io::write_json(
        &run.output("aggregate.json"),
        &serde_json::json!({
            "pairs": pairs.len(),
            "labeled": labeled,
            "precision_at_t_min": precision,
            "faulty_kp_judgments": faulty_kp_counts(&pairs),
            "consistency": consistency,
        }),
    )?;
    match precision {
        Some(p) => println!("aggregate: {labeled} pairs labeled, precision {p:.3} above t_min"),
        None => println!("aggregate: {labeled} of {} pairs labeled", pairs.len()),
    }
    run.finish(None)
}

pub fn curve(g: &Globals, a: &CurveArgs, name: &str, args: &serde_json::Value) -> Outcome {
    let delimiter = match a.format.as_str() {
        "tsv" => '\t',
        "csv" => ',',
        other => {
            return Err(Failure::Usage(format!(
                "unknown curve format {other:?} (expected tsv or csv)"
            )))
        }
    };
    let t_min = g.config.eval.t_min;
    let out_dir = default_out(g, name, &a.out_dir);
    let mut run = Run::new(g, name, args, out_dir, 0);
    let corpus = load_corpus(&a.corpus, &mut run)?;
    run.input(&a.sample)?;
    run.input(&a.matches)?;
    run.input(&a.businesses)?;
    let pairs: Vec<PrecisionPair> = io::read_jsonl(&a.sample)?;
    let records: Vec<MatchRecord> = io::read_jsonl(&a.matches)?;
    let ids: Vec<String> = io::read_json(&a.businesses)?;
    let businesses = business_matches(&corpus, &ids, records)?;
    let thresholds = if a.thresholds.is_empty() {
        threshold_grid(t_min, a.to, a.points)
    } else {
        a.thresholds.clone()
    };
    let points = pc_curve(&pairs, &businesses, &thresholds, t_min)?;
    let path = run.output(&format!("curve.{}", a.format));
    let mut w = io::create(&path)?;
    write_curve(&points, &mut w, delimiter).map_err(|e| Failure::data("curve", e))?;
    drop(w);
    println!("curve: {} points", points.len());
    run.finish(None)
}

pub fn kpq_dataset(g: &Globals, a: &KpqDatasetArgs, name: &str, args: &serde_json::Value) -> Outcome {
    let mut run = Run::new(g, name, args, a.out_dir.clone(), 0);
    run.input(&a.annotations)?;
    let annotations: Vec<KpqAnnotation> = io::read_jsonl(&a.annotations)?;
    let ds = build_kpq_dataset(annotations)?;
    io::write_jsonl(&run.output("kpq.jsonl"), &ds.examples())?;
    io::write_json(
        &run.output("kpq_report.json"),
        &serde_json::json!({"positive": ds.positive.len(), "negative": ds.negative.len(), "discarded": ds.discarded.len()}),
    )?;
    println!(
        "kpq-dataset: {} positive, {} negative, {} discarded",
        ds.positive.len(),
        ds.negative.len(),
        ds.discarded.len()
    );
    run.finish(None)
}
