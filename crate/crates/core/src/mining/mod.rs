//! Collective key point mining.

pub mod candidates;
pub mod curation;
pub mod extract;
pub mod kpq;
pub mod sample;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

pub use candidates::{
    candidate_cap, collect_polar_sentences, prune_by_quality, select_candidates, MinedSentence, ScoredSentence,
    SelectionCounts,
};
pub use curation::{apply_manual_curation, parse_edit_script, EditKind, EditOp};
pub use extract::{dedup_candidates, extract_key_points, Assignment, Candidate, Comment, Extraction, RankedCandidate};
pub use kpq::{build_kpq_dataset, classify_annotation, KpqAnnotation, KpqDataset, KpqExample, KpqLabel, KpqOutcome};
pub use sample::{sample_reviews_two_stage, ReviewSample};

use crate::config::{ConfigError, MiningConfig};
use crate::corpus::{Corpus, Review};
use crate::scoring::{ScoreError, Scorer};
use crate::sentiment::Polarity;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Sample,
    Collect,
    Prune,
    Select,
    Extract,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Sample => "sample",
            Stage::Collect => "collect",
            Stage::Prune => "prune",
            Stage::Select => "select",
            Stage::Extract => "extract",
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum MiningError {
    #[error("{stage} stage: {source}")]
    Scoring {
        stage: Stage,
        #[source]
        source: ScoreError,
    },
    #[error("select stage: no key point candidates survived the filters")]
    NoCandidates,
    #[error("sample stage: no reviews of the requested polarity")]
    EmptySample,
    #[error("extract stage: comments and candidates must share one polarity")]
    MixedPolarity,
    #[error("duplicate {what} id {id:?}")]
    DuplicateId { what: String, id: String },
    #[error("collect stage: review {review_id} is not a {expected} review")]
    ReviewPolarity { review_id: String, expected: Polarity },
    #[error("unknown key point ids in edit script: {}", .0.join(", "))]
    UnknownKeyPoints(Vec<String>),
    #[error("curation: {0}")]
    Curation(String),
    #[error("annotation {text:?}: {field} = {value} is outside [0, 1]")]
    Confidence {
        text: String,
        field: &'static str,
        value: f64,
    },
    #[error(transparent)]
    Config(#[from] ConfigError),
}

impl MiningError {
    pub fn scoring(stage: Stage, source: ScoreError) -> Self {
        MiningError::Scoring { stage, source }
    }

    pub fn stage(&self) -> Option<Stage> {
        match self {
            MiningError::Scoring { stage, .. } => Some(*stage),
            MiningError::NoCandidates => Some(Stage::Select),
            MiningError::EmptySample => Some(Stage::Sample),
            MiningError::ReviewPolarity { .. } => Some(Stage::Collect),
            MiningError::MixedPolarity | MiningError::DuplicateId { .. } => Some(Stage::Extract),
            _ => None,
        }
    }
}

impl From<ScoreError> for MiningError {
    fn from(e: ScoreError) -> Self {
        MiningError::scoring(Stage::Extract, e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Mined,
    FtFiltered,
    Curated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyPoint {
    pub kp_id: String,
    pub text: String,
    /// `None` only for key points mined without sentiment.
    pub polarity: Option<Polarity>,
    pub match_count: usize,
    pub rank: usize,
    pub provenance: Provenance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_sentence_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quality: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Scope {
    Domain { domain: String },
    Business { business_id: String },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageCounts {
    pub reviews_requested: usize,
    pub reviews_sampled: usize,
    pub sample_shortfall: usize,
    pub sentences: usize,
    pub after_quality_prune: usize,
    pub candidates_after_filters: usize,
    pub candidates_after_kp_quality: usize,
    pub candidate_cap: usize,
    pub candidates: usize,
    pub removed_as_duplicates: usize,
    pub mined: usize,
    pub published: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiningResult {
    pub scope: Scope,
    pub polarity: Option<Polarity>,
    pub config: MiningConfig,
    pub t_s: Option<f64>,
    pub stages: StageCounts,
    pub key_points: Vec<KeyPoint>,
    /// Comment (sentence id) to published key point id.
    pub mapping: Vec<Assignment>,
}

fn provenance_for(config: &MiningConfig) -> Provenance {
    if config.kpq_filter {
        Provenance::FtFiltered
    } else {
        Provenance::Mined
    }
}

/// Runs prune, select and extract over `sentences`; `k = mined_k`, then
/// truncation to `final_k` without re-running deduplication.
fn mine_sentences(
    sentences: Vec<MinedSentence>,
    scorer: &Scorer,
    config: &MiningConfig,
    id_prefix: &str,
    stages: &mut StageCounts,
) -> Result<(Vec<KeyPoint>, Vec<Assignment>), MiningError> {
    stages.sentences = sentences.len();
    let comments: Vec<Comment> = sentences.iter().map(MinedSentence::as_comment).collect();
    let pruned = prune_by_quality(sentences, scorer, config.quality_keep_fraction)?;
    stages.after_quality_prune = pruned.len();
    let (cands, counts) = select_candidates(&pruned, scorer, config)?;
    stages.candidates_after_filters = counts.after_length_and_quality;
    stages.candidates_after_kp_quality = counts.after_kp_quality;
    stages.candidate_cap = counts.cap;
    stages.candidates = counts.selected;

    let extraction = extract_key_points(&cands, &comments, scorer, config.t_match, config.mined_k)?;
    stages.removed_as_duplicates = extraction.removed.len();
    stages.mined = extraction.key_points.len();

    let provenance = provenance_for(config);
    let published: Vec<&RankedCandidate> = extraction.key_points.iter().take(config.final_k).collect();
    stages.published = published.len();
    let ids: HashMap<&str, String> = published
        .iter()
        .map(|r| (r.candidate.id.as_str(), format!("{id_prefix}-{:03}", r.rank)))
        .collect();
    let key_points = published
        .iter()
        .map(|r| KeyPoint {
            kp_id: ids[r.candidate.id.as_str()].clone(),
            text: r.candidate.text.clone(),
            polarity: r.candidate.polarity,
            match_count: r.match_count,
            rank: r.rank,
            provenance,
            source_sentence_id: Some(r.candidate.id.clone()),
            quality: Some(r.candidate.quality),
        })
        .collect();
    let mapping = extraction
        .mapping
        .into_iter()
        .map(|a| {
            let target = a.kp_id.as_deref().and_then(|id| ids.get(id));
            Assignment {
                comment_id: a.comment_id,
                kp_id: target.cloned(),
                score: target.and(a.score),
            }
        })
        .collect();
    Ok((key_points, mapping))
}

/// Domain-level mining for one polarity: two-stage sample, sentence
/// collection at `t_s`, quality prune, candidate selection, extraction.
pub fn mine_domain_kps(
    corpus: &Corpus,
    domain: Option<&str>,
    polarity: Polarity,
    config: &MiningConfig,
    t_s: f64,
    scorer: &Scorer,
) -> Result<MiningResult, MiningError> {
    config.validate()?;
    let in_domain: std::collections::HashSet<&str> = corpus
        .businesses
        .iter()
        .filter(|b| domain.is_none_or(|d| b.in_domain(d)))
        .map(|b| b.business_id.as_str())
        .collect();
    let reviews: Vec<Review> = corpus
        .reviews
        .iter()
        .filter(|r| in_domain.contains(r.business_id.as_str()))
        .cloned()
        .collect();
    let sample = sample_reviews_two_stage(&reviews, polarity, config.reviews_per_polarity, config.seed);
    if sample.reviews.is_empty() {
        return Err(MiningError::EmptySample);
    }
    let mut stages = StageCounts {
        reviews_requested: config.reviews_per_polarity,
        reviews_sampled: sample.reviews.len(),
        sample_shortfall: sample.shortfall,
        ..Default::default()
    };
    let sentences = collect_polar_sentences(&sample.reviews, Some(polarity), scorer, t_s, config)?;
    let prefix = polarity.to_string();
    let (key_points, mapping) = mine_sentences(sentences, scorer, config, &prefix, &mut stages)?;
    let domain = domain.unwrap_or("all").to_string();
    log::info!(
        "{domain} {polarity}: {} sentences, {} candidates, {} published key points",
        stages.sentences,
        stages.candidates,
        stages.published
    );
    Ok(MiningResult {
        scope: Scope::Domain { domain },
        polarity: Some(polarity),
        config: config.clone(),
        t_s: Some(t_s),
        stages,
        key_points,
        mapping,
    })
}

/// Sentiment-free extraction over one business's own reviews (the vanilla
/// baseline): all reviews, all length-eligible sentences.
pub fn mine_business_kps(
    reviews: &[&Review],
    business_id: &str,
    config: &MiningConfig,
    scorer: &Scorer,
) -> Result<MiningResult, MiningError> {
    config.validate()?;
    let mut stages = StageCounts {
        reviews_requested: reviews.len(),
        reviews_sampled: reviews.len(),
        ..Default::default()
    };
    let sentences = collect_polar_sentences(reviews, None, scorer, 1.0, config)?;
    let (key_points, mapping) = mine_sentences(sentences, scorer, config, business_id, &mut stages)?;
    Ok(MiningResult {
        scope: Scope::Business {
            business_id: business_id.to_string(),
        },
        polarity: None,
        config: config.clone(),
        t_s: None,
        stages,
        key_points,
        mapping,
    })
}

/// Key points available to each business: a shared domain set plus, for the
/// vanilla baseline, business-local sets.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct KpLibrary {
    pub shared: Vec<KeyPoint>,
    pub per_business: BTreeMap<String, Vec<KeyPoint>>,
}

impl KpLibrary {
    pub fn shared(key_points: Vec<KeyPoint>) -> Self {
        KpLibrary {
            shared: key_points,
            per_business: BTreeMap::new(),
        }
    }

    pub fn for_business(&self, business_id: &str) -> Vec<KeyPoint> {
        let mut out = self.shared.clone();
        if let Some(local) = self.per_business.get(business_id) {
            out.extend(local.iter().cloned());
        }
        out
    }

    pub fn is_empty(&self) -> bool {
        self.shared.is_empty() && self.per_business.values().all(Vec::is_empty)
    }
}
