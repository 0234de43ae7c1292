//! Sentence collection, quality pruning and candidate selection.

use serde::{Deserialize, Serialize};

use super::{Candidate, Comment, MiningError, Stage};
use crate::config::MiningConfig;
use crate::corpus::{Review, Sentence};
use crate::scoring::{Capability, Scorer};
use crate::sentiment::{label_from_distribution, review_polarity, Polarity};

/// A review sentence admitted to mining.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinedSentence {
    pub sentence_id: String,
    pub review_id: String,
    pub business_id: String,
    pub text: String,
    pub word_count: usize,
    pub polarity: Option<Polarity>,
}

impl MinedSentence {
    pub fn as_comment(&self) -> Comment {
        Comment {
            id: self.sentence_id.clone(),
            text: self.text.clone(),
            polarity: self.polarity,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredSentence {
    pub sentence: MinedSentence,
    pub quality: f64,
}

fn passes_length(s: &Sentence, config: &MiningConfig) -> bool {
    let [lo, hi] = config.sentence_tokens;
    (lo..=hi).contains(&s.token_count_content) && s.char_count >= config.sentence_min_chars
}

/// Sentences of `reviews` that pass the length filters and, when `polarity`
/// is set, are classified with that polarity at threshold `t_s`.
///
/// With a polarity, every review must carry the same star polarity.
pub fn collect_polar_sentences(
    reviews: &[&Review],
    polarity: Option<Polarity>,
    scorer: &Scorer,
    t_s: f64,
    config: &MiningConfig,
) -> Result<Vec<MinedSentence>, MiningError> {
    if let Some(p) = polarity {
        if let Some(r) = reviews.iter().find(|r| review_polarity(r) != p.label()) {
            return Err(MiningError::ReviewPolarity {
                review_id: r.review_id.clone(),
                expected: p,
            });
        }
    }
    let eligible: Vec<(&Review, &Sentence)> = reviews
        .iter()
        .flat_map(|r| r.sentences.iter().map(move |s| (*r, s)))
        .filter(|(_, s)| passes_length(s, config))
        .collect();
    let keep: Vec<bool> = match polarity {
        None => vec![true; eligible.len()],
        Some(p) => {
            let texts: Vec<&str> = eligible.iter().map(|(_, s)| s.text.as_str()).collect();
            scorer
                .sentiment_batch(&texts)
                .map_err(|e| MiningError::scoring(Stage::Collect, e))?
                .iter()
                .map(|d| label_from_distribution(d, t_s) == p.label())
                .collect()
        }
    };
    Ok(eligible
        .into_iter()
        .zip(keep)
        .filter(|(_, k)| *k)
        .map(|((r, s), _)| MinedSentence {
            sentence_id: s.sentence_id.clone(),
            review_id: r.review_id.clone(),
            business_id: r.business_id.clone(),
            text: s.text.clone(),
            word_count: s.token_count_content,
            polarity,
        })
        .collect())
}

fn quality_order(a: &ScoredSentence, b: &ScoredSentence) -> std::cmp::Ordering {
    b.quality
        .total_cmp(&a.quality)
        .then_with(|| a.sentence.text.cmp(&b.sentence.text))
        .then_with(|| a.sentence.sentence_id.cmp(&b.sentence.sentence_id))
}

/// Scores argument quality and keeps the top `ceil(keep_fraction * N)`,
/// ordered by (quality desc, text asc, id asc).
pub fn prune_by_quality(
    sentences: Vec<MinedSentence>,
    scorer: &Scorer,
    keep_fraction: f64,
) -> Result<Vec<ScoredSentence>, MiningError> {
    let texts: Vec<&str> = sentences.iter().map(|s| s.text.as_str()).collect();
    let scores = scorer
        .text_scores(Capability::Quality, &texts)
        .map_err(|e| MiningError::scoring(Stage::Prune, e))?;
    let mut scored: Vec<ScoredSentence> = sentences
        .into_iter()
        .zip(scores)
        .map(|(sentence, q)| ScoredSentence {
            sentence,
            quality: q.value(),
        })
        .collect();
    scored.sort_by(quality_order);
    let keep = (keep_fraction * scored.len() as f64 - 1e-9).ceil().max(0.0) as usize;
    scored.truncate(keep);
    Ok(scored)
}

/// `floor(factor * sqrt(n_sentences))`.
pub fn candidate_cap(n_sentences: usize, factor: f64) -> usize {
    (factor * (n_sentences as f64).sqrt() + 1e-9).floor() as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionCounts {
    pub input_sentences: usize,
    pub after_length_and_quality: usize,
    pub after_kp_quality: usize,
    pub cap: usize,
    pub selected: usize,
}

/// Candidates among `sentences`: word count within `kp_tokens`, quality at
/// least `t_quality`, KP quality at least `kpq_threshold` when enabled; then
/// the `candidate_cap` highest-quality ones.
pub fn select_candidates(
    sentences: &[ScoredSentence],
    scorer: &Scorer,
    config: &MiningConfig,
) -> Result<(Vec<Candidate>, SelectionCounts), MiningError> {
    let [lo, hi] = config.kp_tokens;
    let mut pool: Vec<&ScoredSentence> = sentences
        .iter()
        .filter(|s| (lo..=hi).contains(&s.sentence.word_count) && s.quality >= config.t_quality)
        .collect();
    let after_length_and_quality = pool.len();

    let mut kpq: Vec<Option<f64>> = vec![None; pool.len()];
    if config.kpq_filter {
        let texts: Vec<&str> = pool.iter().map(|s| s.sentence.text.as_str()).collect();
        let scores = scorer
            .text_scores(Capability::KpQuality, &texts)
            .map_err(|e| MiningError::scoring(Stage::Select, e))?;
        let keep: Vec<bool> = scores.iter().map(|s| s.value() >= config.kpq_threshold).collect();
        kpq = scores.iter().map(|s| Some(s.value())).collect();
        let mut it = keep.iter();
        pool.retain(|_| *it.next().unwrap());
        let mut it = keep.iter();
        kpq.retain(|_| *it.next().unwrap());
    }
    let after_kp_quality = pool.len();
    if pool.is_empty() {
        return Err(MiningError::NoCandidates);
    }

    let mut ranked: Vec<(&ScoredSentence, Option<f64>)> = pool.into_iter().zip(kpq).collect();
    ranked.sort_by(|a, b| quality_order(a.0, b.0));
    let cap = candidate_cap(sentences.len(), config.candidate_cap_factor);
    ranked.truncate(cap);
    let candidates: Vec<Candidate> = ranked
        .into_iter()
        .map(|(s, kpq)| Candidate {
            id: s.sentence.sentence_id.clone(),
            text: s.sentence.text.clone(),
            quality: s.quality,
            kp_quality: kpq,
            polarity: s.sentence.polarity,
        })
        .collect();
    let counts = SelectionCounts {
        input_sentences: sentences.len(),
        after_length_and_quality,
        after_kp_quality,
        cap,
        selected: candidates.len(),
    };
    if candidates.is_empty() {
        return Err(MiningError::NoCandidates);
    }
    Ok((candidates, counts))
}
