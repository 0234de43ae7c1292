//! Star-rating weak labels, sentiment threshold selection and sentence-level
//! polarity decisions.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Review;
use crate::scoring::{ScoreError, Scorer, SentimentDistribution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SentimentLabel {
    Pos,
    Neg,
    Neut,
}

impl SentimentLabel {
    pub fn polarity(self) -> Option<Polarity> {
        match self {
            SentimentLabel::Pos => Some(Polarity::Pos),
            SentimentLabel::Neg => Some(Polarity::Neg),
            SentimentLabel::Neut => None,
        }
    }
}

impl fmt::Display for SentimentLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SentimentLabel::Pos => "pos",
            SentimentLabel::Neg => "neg",
            SentimentLabel::Neut => "neut",
        })
    }
}

/// Polarity of a key point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Pos,
    Neg,
}

impl Polarity {
    pub fn label(self) -> SentimentLabel {
        match self {
            Polarity::Pos => SentimentLabel::Pos,
            Polarity::Neg => SentimentLabel::Neg,
        }
    }
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.label().fmt(f)
    }
}

impl FromStr for Polarity {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "pos" | "positive" => Ok(Polarity::Pos),
            "neg" | "negative" => Ok(Polarity::Neg),
            other => Err(format!("unknown polarity {other:?}")),
        }
    }
}

#[derive(Debug, Error)]
pub enum SentimentError {
    #[error("input is empty")]
    Empty,
    #[error("held-out fraction {0} must be in (0, 1)")]
    BadFraction(f64),
    #[error("{predictions} predictions but {gold} gold labels")]
    Misaligned { predictions: usize, gold: usize },
    #[error("gold labels contain no {0} items")]
    MissingClass(SentimentLabel),
    #[error("invalid prediction at {position}: {message}")]
    InvalidPrediction { position: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WeakLabelConfig {
    pub max_sentences: usize,
    /// Punctuation-inclusive token budget for the whole review.
    pub max_tokens: usize,
    /// Label for 1..=5 stars.
    pub star_map: [SentimentLabel; 5],
    pub heldout_fraction: f64,
}

pub const DEFAULT_STAR_MAP: [SentimentLabel; 5] = [
    SentimentLabel::Neg,
    SentimentLabel::Neg,
    SentimentLabel::Neut,
    SentimentLabel::Pos,
    SentimentLabel::Pos,
];

impl Default for WeakLabelConfig {
    fn default() -> Self {
        WeakLabelConfig {
            max_sentences: 3,
            max_tokens: 64,
            star_map: DEFAULT_STAR_MAP,
            heldout_fraction: 0.1,
        }
    }
}

/// Review-level polarity from the star rating (1-2 neg, 3 neut, 4-5 pos).
pub fn review_polarity(review: &Review) -> SentimentLabel {
    star_label(review.stars, &DEFAULT_STAR_MAP)
}

pub fn star_label(stars: u8, star_map: &[SentimentLabel; 5]) -> SentimentLabel {
    let idx = usize::from(stars.clamp(1, 5)) - 1;
    star_map[idx]
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeakLabel {
    pub review_id: String,
    pub label: SentimentLabel,
    pub stars: u8,
}

/// Labels short reviews by their stars; longer reviews are skipped.
pub fn weak_label_reviews(reviews: &[Review], config: &WeakLabelConfig) -> Vec<WeakLabel> {
    reviews
        .iter()
        .filter(|r| r.sentences.len() <= config.max_sentences && r.token_count_all() <= config.max_tokens)
        .map(|r| WeakLabel {
            review_id: r.review_id.clone(),
            label: star_label(r.stars, &config.star_map),
            stars: r.stars,
        })
        .collect()
}

/// Seeded `(train, heldout)` split; the held-out part has
/// `round(fraction * n)` items and both parts keep input order.
pub fn split_heldout<T>(items: Vec<T>, fraction: f64, seed: u64) -> Result<(Vec<T>, Vec<T>), SentimentError> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(SentimentError::BadFraction(fraction));
    }
    if items.is_empty() {
        return Err(SentimentError::Empty);
    }
    let n = items.len();
    let n_heldout = (fraction * n as f64).round() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut heldout_mask = vec![false; n];
    for &i in &order[..n_heldout] {
        heldout_mask[i] = true;
    }
    let mut train = Vec::with_capacity(n - n_heldout);
    let mut heldout = Vec::with_capacity(n_heldout);
    for (item, held) in items.into_iter().zip(heldout_mask) {
        if held {
            heldout.push(item);
        } else {
            train.push(item);
        }
    }
    Ok((train, heldout))
}

/// Decision rule: POS when `pos >= neg` and `pos >= t_s`; NEG when
/// `neg > pos` and `neg >= t_s`; otherwise NEUT.
pub fn label_from_distribution(d: &SentimentDistribution, t_s: f64) -> SentimentLabel {
    if d.pos >= d.neg && d.pos >= t_s {
        SentimentLabel::Pos
    } else if d.neg > d.pos && d.neg >= t_s {
        SentimentLabel::Neg
    } else {
        SentimentLabel::Neut
    }
}

pub fn classify_sentence(scorer: &Scorer, t_s: f64, text: &str) -> Result<SentimentLabel, ScoreError> {
    Ok(label_from_distribution(&scorer.sentiment_probs(text)?, t_s))
}

pub fn classify_sentences(scorer: &Scorer, t_s: f64, texts: &[&str]) -> Result<Vec<SentimentLabel>, ScoreError> {
    Ok(scorer
        .sentiment_batch(texts)?
        .iter()
        .map(|d| label_from_distribution(d, t_s))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    /// Zero when the class was never predicted.
    pub precision: f64,
    pub recall: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub pos: ClassMetrics,
    pub neg: ClassMetrics,
    pub neut: ClassMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSelection {
    pub feasible: bool,
    pub t_s: Option<f64>,
    pub per_class: Option<ClassReport>,
    pub min_recall: f64,
    pub candidates: usize,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Per-class precision/recall of `label_from_distribution(_, t_s)` against gold.
pub fn evaluate_threshold(predictions: &[SentimentDistribution], gold: &[SentimentLabel], t_s: f64) -> ClassReport {
    let mut tp = [0usize; 3];
    let mut predicted = [0usize; 3];
    let mut actual = [0usize; 3];
    let idx = |l: SentimentLabel| l as usize;
    for (d, &g) in predictions.iter().zip(gold) {
        let p = label_from_distribution(d, t_s);
        predicted[idx(p)] += 1;
        actual[idx(g)] += 1;
        if p == g {
            tp[idx(g)] += 1;
        }
    }
    let m = |l: SentimentLabel| ClassMetrics {
        precision: ratio(tp[idx(l)], predicted[idx(l)]),
        recall: ratio(tp[idx(l)], actual[idx(l)]),
    };
    ClassReport {
        pos: m(SentimentLabel::Pos),
        neg: m(SentimentLabel::Neg),
        neut: m(SentimentLabel::Neut),
    }
}

/// Picks the sentiment threshold: among candidate thresholds (the distinct
/// values of `max(pos, neg)`) where POS and NEG recall both reach
/// `min_recall`, the one with the highest mean of POS and NEG precision;
/// ties go to the larger threshold.
///
/// One sweep from the largest candidate down: lowering the threshold only
/// turns NEUT predictions into the item's fixed polar prediction.
pub fn select_threshold(
    predictions: &[SentimentDistribution],
    gold: &[SentimentLabel],
    min_recall: f64,
) -> Result<ThresholdSelection, SentimentError> {
    if predictions.len() != gold.len() {
        return Err(SentimentError::Misaligned {
            predictions: predictions.len(),
            gold: gold.len(),
        });
    }
    if predictions.is_empty() {
        return Err(SentimentError::Empty);
    }
    for (position, d) in predictions.iter().enumerate() {
        d.validate()
            .map_err(|message| SentimentError::InvalidPrediction { position, message })?;
    }
    let gold_pos = gold.iter().filter(|&&g| g == SentimentLabel::Pos).count();
    let gold_neg = gold.iter().filter(|&&g| g == SentimentLabel::Neg).count();
    let gold_neut = gold.len() - gold_pos - gold_neg;
    if gold_pos == 0 {
        return Err(SentimentError::MissingClass(SentimentLabel::Pos));
    }
    if gold_neg == 0 {
        return Err(SentimentError::MissingClass(SentimentLabel::Neg));
    }

    let mut order: Vec<usize> = (0..predictions.len()).collect();
    order.sort_by(|&a, &b| predictions[b].max_polar().total_cmp(&predictions[a].max_polar()));

    let (mut tp_pos, mut pred_pos, mut tp_neg, mut pred_neg, mut neut_made_polar) = (0, 0, 0, 0, 0);
    let mut best: Option<(f64, f64, ClassReport)> = None;
    let mut candidates = 0;
    let mut i = 0;
    while i < order.len() {
        let t = predictions[order[i]].max_polar();
        while i < order.len() && predictions[order[i]].max_polar() == t {
            let d = &predictions[order[i]];
            let g = gold[order[i]];
            if d.pos >= d.neg {
                pred_pos += 1;
                tp_pos += usize::from(g == SentimentLabel::Pos);
            } else {
                pred_neg += 1;
                tp_neg += usize::from(g == SentimentLabel::Neg);
            }
            neut_made_polar += usize::from(g == SentimentLabel::Neut);
            i += 1;
        }
        candidates += 1;
        let pred_neut = predictions.len() - pred_pos - pred_neg;
        let report = ClassReport {
            pos: ClassMetrics {
                precision: ratio(tp_pos, pred_pos),
                recall: ratio(tp_pos, gold_pos),
            },
            neg: ClassMetrics {
                precision: ratio(tp_neg, pred_neg),
                recall: ratio(tp_neg, gold_neg),
            },
            neut: ClassMetrics {
                precision: ratio(gold_neut - neut_made_polar, pred_neut),
                recall: ratio(gold_neut - neut_made_polar, gold_neut),
            },
        };
        if report.pos.recall >= min_recall && report.neg.recall >= min_recall {
            let objective = (report.pos.precision + report.neg.precision) / 2.0;
            // descending sweep: an equal objective later means a smaller threshold
            if best.as_ref().is_none_or(|(b, _, _)| objective > *b) {
                best = Some((objective, t, report));
            }
        }
    }
    Ok(match best {
        Some((_, t, report)) => ThresholdSelection {
            feasible: true,
            t_s: Some(t),
            per_class: Some(report),
            min_recall,
            candidates,
        },
        None => ThresholdSelection {
            feasible: false,
            t_s: None,
            per_class: None,
            min_recall,
            candidates,
        },
    })
}
