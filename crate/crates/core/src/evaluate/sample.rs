//! The precision-annotation sample.

use std::collections::{BTreeMap, HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{aggregate_pair_label, BusinessMatches, EvalError, Judgment};
use crate::mining::KeyPoint;
use crate::summarize::MatchRecord;

/// Up to `n` businesses whose review count lies within `bounds` (inclusive),
/// chosen uniformly with `seed`; returned sorted.
pub fn select_eval_businesses(
    review_counts: &BTreeMap<String, usize>,
    bounds: [usize; 2],
    n: usize,
    seed: u64,
) -> Vec<String> {
    let mut eligible: Vec<&String> = review_counts
        .iter()
        .filter(|(_, &c)| (bounds[0]..=bounds[1]).contains(&c))
        .map(|(id, _)| id)
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    eligible.shuffle(&mut rng);
    let mut chosen: Vec<String> = eligible.into_iter().take(n).cloned().collect();
    if chosen.len() < n {
        log::warn!(
            "only {} businesses within review bounds {bounds:?}, wanted {n}",
            chosen.len()
        );
    }
    chosen.sort();
    chosen
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairLabel {
    Correct,
    Incorrect,
    #[default]
    Unlabeled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrecisionPair {
    pub pair_id: String,
    pub business_id: String,
    pub review_id: String,
    pub sentence_id: String,
    pub sentence: String,
    pub kp_id: String,
    pub kp: String,
    pub score: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub judgments: Vec<Judgment>,
    #[serde(default)]
    pub label: PairLabel,
}

/// What annotators see.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleExport {
    pub pair_id: String,
    pub sentence: String,
    pub kp: String,
    pub score: f64,
}

impl From<&PrecisionPair> for SampleExport {
    fn from(p: &PrecisionPair) -> Self {
        SampleExport {
            pair_id: p.pair_id.clone(),
            sentence: p.sentence.clone(),
            kp: p.kp.clone(),
            score: p.score,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JudgmentRecord {
    pub pair_id: String,
    pub annotator_id: String,
    pub judgment: Judgment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrecisionSample {
    pub pairs: Vec<PrecisionPair>,
    pub draws: usize,
    pub shortfall: usize,
}

/// Draws a business, one of its reviews and one of that review's sentences,
/// all uniformly, and keeps the sentence's best key point when it scores
/// above `t_min` and the (sentence, key point) pair is new. Stops at `n` pairs
/// or after `n * max_draws_per_pair` draws, reporting any shortfall.
///
/// `businesses` must carry match records taken at a floor no higher than
/// `t_min`.
pub fn build_precision_sample(
    businesses: &[BusinessMatches],
    kps: &[KeyPoint],
    t_min: f64,
    n: usize,
    seed: u64,
    max_draws_per_pair: usize,
) -> Result<PrecisionSample, EvalError> {
    if n == 0 {
        return Err(EvalError::EmptySampleRequest);
    }
    let mut pool: Vec<&BusinessMatches> = businesses.iter().filter(|b| !b.reviews.is_empty()).collect();
    if pool.is_empty() {
        return Err(EvalError::EmptyBusinessSet);
    }
    pool.sort_by(|a, b| a.business_id.cmp(&b.business_id));
    let kp_text: HashMap<&str, &str> = kps.iter().map(|k| (k.kp_id.as_str(), k.text.as_str())).collect();
    let best: HashMap<&str, &MatchRecord> = pool
        .iter()
        .flat_map(|b| b.records.iter())
        .map(|r| (r.sentence_id.as_str(), r))
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let budget = n.saturating_mul(max_draws_per_pair.max(1));
    let mut seen: HashSet<(&str, &str)> = HashSet::new();
    let mut pairs = Vec::with_capacity(n);
    let mut draws = 0;
    while pairs.len() < n && draws < budget {
        draws += 1;
        let b = pool[rng.gen_range(0..pool.len())];
        let review = &b.reviews[rng.gen_range(0..b.reviews.len())];
        if review.sentences.is_empty() {
            continue;
        }
        let sentence = &review.sentences[rng.gen_range(0..review.sentences.len())];
        let Some(rec) = best.get(sentence.sentence_id.as_str()) else {
            continue;
        };
        if rec.score <= t_min || !seen.insert((rec.sentence_id.as_str(), rec.kp_id.as_str())) {
            continue;
        }
        pairs.push(PrecisionPair {
            pair_id: format!("p{:04}", pairs.len() + 1),
            business_id: b.business_id.clone(),
            review_id: review.review_id.clone(),
            sentence_id: sentence.sentence_id.clone(),
            sentence: sentence.text.clone(),
            kp_id: rec.kp_id.clone(),
            kp: kp_text
                .get(rec.kp_id.as_str())
                .map(|s| s.to_string())
                .unwrap_or_default(),
            score: rec.score,
            judgments: Vec::new(),
            label: PairLabel::Unlabeled,
        });
    }
    let shortfall = n - pairs.len();
    if shortfall > 0 {
        log::warn!(
            "precision sample stalled after {draws} draws: {} of {n} pairs",
            pairs.len()
        );
    }
    Ok(PrecisionSample {
        pairs,
        draws,
        shortfall,
    })
}

/// Adds judgments to their pairs and labels every judged pair.
pub fn attach_judgments(
    pairs: &mut [PrecisionPair],
    judgments: &[JudgmentRecord],
    min_agree: f64,
) -> Result<(), EvalError> {
    let index: HashMap<String, usize> = pairs.iter().enumerate().map(|(i, p)| (p.pair_id.clone(), i)).collect();
    for j in judgments {
        let &i = index
            .get(&j.pair_id)
            .ok_or_else(|| EvalError::UnknownPair(j.pair_id.clone()))?;
        pairs[i].judgments.push(j.judgment);
    }
    for p in pairs.iter_mut().filter(|p| !p.judgments.is_empty()) {
        p.label = if aggregate_pair_label(&p.judgments, min_agree)? {
            PairLabel::Correct
        } else {
            PairLabel::Incorrect
        };
    }
    Ok(())
}

/// Share of correct pairs among those scoring above `t`; `None` when there
/// are none.
pub fn precision_at(sample: &[PrecisionPair], t: f64) -> Result<Option<f64>, EvalError> {
    if let Some(p) = sample.iter().find(|p| p.label == PairLabel::Unlabeled) {
        return Err(EvalError::Unlabeled(p.pair_id.clone()));
    }
    let above: Vec<&PrecisionPair> = sample.iter().filter(|p| p.score > t).collect();
    if above.is_empty() {
        return Ok(None);
    }
    let correct = above.iter().filter(|p| p.label == PairLabel::Correct).count();
    Ok(Some(correct as f64 / above.len() as f64))
}

/// "Faulty key point" judgments per key point.
pub fn faulty_kp_counts(sample: &[PrecisionPair]) -> BTreeMap<String, usize> {
    let mut out = BTreeMap::new();
    for p in sample {
        let n = p.judgments.iter().filter(|j| **j == Judgment::FaultyKp).count();
        if n > 0 {
            *out.entry(p.kp_id.clone()).or_default() += n;
        }
    }
    out
}
