//! Review corpora: parsing, segmentation, filtering and business splits.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: {message}")]
    Record { line: usize, message: String },
    #[error("cannot split an empty business set")]
    EmptyBusinessSet,
    #[error("invalid split ratios {0:?}: must be non-negative and sum to 1")]
    InvalidRatios([f64; 3]),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// What to do with a record that fails to parse or validate.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MalformedPolicy {
    #[default]
    Skip,
    Abort,
}

/// A rejected input line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RecordError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Business {
    pub business_id: String,
    #[serde(default)]
    pub categories: Vec<String>,
    #[serde(default)]
    pub review_count: usize,
}

impl Business {
    /// Case-insensitive category membership, e.g. `"restaurants"` or `"hotels"`.
    pub fn in_domain(&self, domain: &str) -> bool {
        self.categories.iter().any(|c| c.trim().eq_ignore_ascii_case(domain))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub sentence_id: String,
    pub review_id: String,
    pub index: usize,
    pub text: String,
    /// Tokens including punctuation.
    pub token_count_all: usize,
    /// Tokens excluding punctuation.
    pub token_count_content: usize,
    pub char_count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Review {
    pub review_id: String,
    pub business_id: String,
    pub stars: u8,
    pub text: String,
    pub sentences: Vec<Sentence>,
}

impl Review {
    pub fn token_count_all(&self) -> usize {
        self.sentences.iter().map(|s| s.token_count_all).sum()
    }
}

/// The on-disk review record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReviewRecord {
    pub review_id: String,
    pub business_id: String,
    pub stars: f64,
    pub text: String,
}

impl From<&Review> for ReviewRecord {
    fn from(r: &Review) -> Self {
        ReviewRecord {
            review_id: r.review_id.clone(),
            business_id: r.business_id.clone(),
            stars: f64::from(r.stars),
            text: r.text.clone(),
        }
    }
}

/// Builds [`Sentence`]s for one review. Ids are `{review_id}#{index}`.
pub fn segment_sentences(review_id: &str, text: &str) -> Vec<Sentence> {
    text::split_sentences(text)
        .into_iter()
        .enumerate()
        .map(|(index, s)| {
            let (all, content) = text::token_counts(&s);
            Sentence {
                sentence_id: format!("{review_id}#{index}"),
                review_id: review_id.to_string(),
                index,
                char_count: s.chars().count(),
                token_count_all: all,
                token_count_content: content,
                text: s,
            }
        })
        .collect()
}

fn review_from_record(rec: ReviewRecord) -> Result<Review, String> {
    if rec.review_id.is_empty() {
        return Err("empty review_id".into());
    }
    if rec.business_id.is_empty() {
        return Err("empty business_id".into());
    }
    if rec.stars.fract() != 0.0 || !(1.0..=5.0).contains(&rec.stars) {
        return Err(format!("stars out of range: {}", rec.stars));
    }
    let sentences = segment_sentences(&rec.review_id, &rec.text);
    Ok(Review {
        review_id: rec.review_id,
        business_id: rec.business_id,
        stars: rec.stars as u8,
        text: rec.text,
        sentences,
    })
}

/// Output of a lenient parse: the good records plus what was skipped.
#[derive(Debug, Default)]
pub struct Parsed<T> {
    pub records: Vec<T>,
    pub errors: Vec<RecordError>,
}

fn parse_lines<R, T, F>(reader: R, policy: MalformedPolicy, f: F) -> Result<Parsed<T>, CorpusError>
where
    R: BufRead,
    T: Send,
    F: Fn(&str) -> Result<T, String> + Sync,
{
    let lines: Vec<(usize, String)> = reader
        .lines()
        .enumerate()
        .map(|(i, l)| l.map(|l| (i + 1, l)))
        .collect::<Result<_, _>>()?;
    let results: Vec<(usize, Result<T, String>)> = lines
        .par_iter()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| (*n, f(l)))
        .collect();
    let mut parsed = Parsed {
        records: Vec::with_capacity(results.len()),
        errors: Vec::new(),
    };
    for (line, r) in results {
        match r {
            Ok(v) => parsed.records.push(v),
            Err(message) => {
                if policy == MalformedPolicy::Abort {
                    return Err(CorpusError::Record { line, message });
                }
                log::warn!("skipping line {line}: {message}");
                parsed.errors.push(RecordError { line, message });
            }
        }
    }
    Ok(parsed)
}

/// Parses line-delimited review records and segments them, preserving input order.
pub fn parse_reviews<R: BufRead>(reader: R, policy: MalformedPolicy) -> Result<Parsed<Review>, CorpusError> {
    parse_lines(reader, policy, |line| {
        let rec: ReviewRecord = serde_json::from_str(line).map_err(|e| e.to_string())?;
        review_from_record(rec)
    })
}

pub fn parse_businesses<R: BufRead>(reader: R, policy: MalformedPolicy) -> Result<Parsed<Business>, CorpusError> {
    parse_lines(reader, policy, |line| {
        let b: Business = serde_json::from_str(line).map_err(|e| e.to_string())?;
        if b.business_id.is_empty() {
            return Err("empty business_id".into());
        }
        Ok(b)
    })
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    pub businesses: Vec<Business>,
    pub reviews: Vec<Review>,
}

impl Corpus {
    /// Reviews grouped by business id, each group in corpus order.
    pub fn reviews_by_business(&self) -> BTreeMap<&str, Vec<&Review>> {
        let mut map: BTreeMap<&str, Vec<&Review>> = BTreeMap::new();
        for r in &self.reviews {
            map.entry(r.business_id.as_str()).or_default().push(r);
        }
        map
    }

    /// Restricts to businesses matching `keep`, dropping their reviews too.
    pub fn retain_businesses(&self, keep: impl Fn(&Business) -> bool) -> Corpus {
        let businesses: Vec<Business> = self.businesses.iter().filter(|b| keep(b)).cloned().collect();
        let ids: BTreeSet<&str> = businesses.iter().map(|b| b.business_id.as_str()).collect();
        let reviews = self
            .reviews
            .iter()
            .filter(|r| ids.contains(r.business_id.as_str()))
            .cloned()
            .collect();
        Corpus { businesses, reviews }
    }

    pub fn write_reviews<W: Write>(&self, mut w: W) -> Result<(), CorpusError> {
        for r in &self.reviews {
            serde_json::to_writer(&mut w, &ReviewRecord::from(r))?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn write_businesses<W: Write>(&self, mut w: W) -> Result<(), CorpusError> {
        for b in &self.businesses {
            serde_json::to_writer(&mut w, b)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    pub max_sentences: usize,
    pub min_reviews: usize,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            max_sentences: 15,
            min_reviews: 50,
        }
    }
}

/// Drops long reviews, then businesses left with too few reviews.
///
/// Business review counts are recomputed after the first stage. Reviews of
/// businesses missing from the business list are dropped.
pub fn filter_corpus(corpus: &Corpus, config: &FilterConfig) -> Corpus {
    let known: BTreeSet<&str> = corpus.businesses.iter().map(|b| b.business_id.as_str()).collect();
    let short: Vec<&Review> = corpus
        .reviews
        .iter()
        .filter(|r| r.sentences.len() <= config.max_sentences && known.contains(r.business_id.as_str()))
        .collect();
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for r in &short {
        *counts.entry(r.business_id.as_str()).or_default() += 1;
    }
    let mut seen = BTreeSet::new();
    let businesses: Vec<Business> = corpus
        .businesses
        .iter()
        .filter(|b| seen.insert(b.business_id.as_str()))
        .filter_map(|b| {
            let n = counts.get(b.business_id.as_str()).copied().unwrap_or(0);
            (n >= config.min_reviews).then(|| Business {
                review_count: n,
                ..b.clone()
            })
        })
        .collect();
    let kept: BTreeSet<&str> = businesses.iter().map(|b| b.business_id.as_str()).collect();
    let reviews = short
        .into_iter()
        .filter(|r| kept.contains(r.business_id.as_str()))
        .cloned()
        .collect();
    Corpus { businesses, reviews }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitPart {
    Train,
    Dev,
    Test,
}

impl std::str::FromStr for SplitPart {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(SplitPart::Train),
            "dev" => Ok(SplitPart::Dev),
            "test" => Ok(SplitPart::Test),
            other => Err(format!("unknown split {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: BTreeSet<String>,
    pub dev: BTreeSet<String>,
    pub test: BTreeSet<String>,
    pub ratios: [f64; 3],
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SplitRow {
    business_id: String,
    split: SplitPart,
}

impl DatasetSplit {
    pub fn part_of(&self, business_id: &str) -> Option<SplitPart> {
        if self.train.contains(business_id) {
            Some(SplitPart::Train)
        } else if self.dev.contains(business_id) {
            Some(SplitPart::Dev)
        } else if self.test.contains(business_id) {
            Some(SplitPart::Test)
        } else {
            None
        }
    }

    pub fn ids(&self, part: SplitPart) -> &BTreeSet<String> {
        match part {
            SplitPart::Train => &self.train,
            SplitPart::Dev => &self.dev,
            SplitPart::Test => &self.test,
        }
    }

    /// Writes the `{business_id, split}` manifest, sorted by business id.
    pub fn write_manifest<W: Write>(&self, mut w: W) -> Result<(), CorpusError> {
        let mut rows: Vec<SplitRow> = Vec::new();
        for part in [SplitPart::Train, SplitPart::Dev, SplitPart::Test] {
            rows.extend(self.ids(part).iter().map(|id| SplitRow {
                business_id: id.clone(),
                split: part,
            }));
        }
        rows.sort_by(|a, b| a.business_id.cmp(&b.business_id));
        for row in rows {
            serde_json::to_writer(&mut w, &row)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Reads a manifest written by [`DatasetSplit::write_manifest`]. Ratios and
    /// seed are not part of the manifest and come back as zero.
    pub fn read_manifest<R: BufRead>(reader: R) -> Result<DatasetSplit, CorpusError> {
        let mut split = DatasetSplit {
            train: BTreeSet::new(),
            dev: BTreeSet::new(),
            test: BTreeSet::new(),
            ratios: [0.0; 3],
            seed: 0,
        };
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let row: SplitRow = serde_json::from_str(&line).map_err(|e| CorpusError::Record {
                line: i + 1,
                message: e.to_string(),
            })?;
            let set = match row.split {
                SplitPart::Train => &mut split.train,
                SplitPart::Dev => &mut split.dev,
                SplitPart::Test => &mut split.test,
            };
            set.insert(row.business_id);
        }
        Ok(split)
    }
}

/// Part sizes for `n` items by the largest-remainder method. Remainder ties go
/// to the larger ratio, then to the earlier part.
pub fn largest_remainder_sizes(n: usize, ratios: [f64; 3]) -> [usize; 3] {
    let quotas = ratios.map(|r| r * n as f64);
    let mut sizes = quotas.map(|q| (q + 1e-9).floor() as usize);
    let assigned: usize = sizes.iter().sum();
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| {
        let fa = quotas[a] - sizes[a] as f64;
        let fb = quotas[b] - sizes[b] as f64;
        fb.total_cmp(&fa).then(ratios[b].total_cmp(&ratios[a])).then(a.cmp(&b))
    });
    for &idx in order.iter().take(n.saturating_sub(assigned)) {
        sizes[idx] += 1;
    }
    sizes
}

/// Seeded partition of businesses into train/dev/test.
pub fn split_dataset<S: AsRef<str>>(
    business_ids: &[S],
    ratios: [f64; 3],
    seed: u64,
) -> Result<DatasetSplit, CorpusError> {
    if ratios.iter().any(|r| !r.is_finite() || *r < 0.0) || (ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(CorpusError::InvalidRatios(ratios));
    }
    let unique: BTreeSet<&str> = business_ids.iter().map(AsRef::as_ref).collect();
    if unique.is_empty() {
        return Err(CorpusError::EmptyBusinessSet);
    }
    let mut ids: Vec<&str> = unique.into_iter().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ids.shuffle(&mut rng);
    let [n_train, n_dev, _] = largest_remainder_sizes(ids.len(), ratios);
    let owned = |s: &[&str]| s.iter().map(|x| x.to_string()).collect::<BTreeSet<_>>();
    Ok(DatasetSplit {
        train: owned(&ids[..n_train]),
        dev: owned(&ids[n_train..n_train + n_dev]),
        test: owned(&ids[n_train + n_dev..]),
        ratios,
        seed,
    })
}
