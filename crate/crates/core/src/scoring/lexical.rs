use std::collections::{BTreeSet, HashSet};

use super::{BackendError, Capability, RawOutput, Request, ScorerBackend};
use crate::text;

/// Function words ignored by [`LexicalScorer`]. Negations are kept on purpose
/// since they flip meaning.
pub const STOPWORDS: &[&str] = &[
    "a", "an", "the", "and", "or", "but", "if", "of", "to", "in", "on", "at", "for", "with", "as", "by", "from",
    "into", "about", "is", "are", "was", "were", "be", "been", "being", "am", "do", "does", "did", "has", "have",
    "had", "i", "me", "my", "we", "us", "our", "you", "your", "he", "him", "his", "she", "her", "it", "its", "they",
    "them", "their", "this", "that", "these", "those", "there", "which", "who", "so", "than", "then", "just", "also",
];

/// Lowercased word tokens of `text` minus [`STOPWORDS`], as a set.
pub fn lexical_terms(text: &str) -> HashSet<String> {
    text::words(text)
        .into_iter()
        .filter(|w| !STOPWORDS.contains(&w.as_str()))
        .collect()
}

/// Binary cosine `|A ∩ B| / sqrt(|A| |B|)` between the term sets of two texts;
/// zero when either set is empty.
pub fn binary_cosine(a: &str, b: &str) -> f64 {
    let ta = lexical_terms(a);
    let tb = lexical_terms(b);
    if ta.is_empty() || tb.is_empty() {
        return 0.0;
    }
    let shared = ta.intersection(&tb).count();
    let score = shared as f64 / ((ta.len() * tb.len()) as f64).sqrt();
    score.min(1.0)
}

/// Deterministic match-only backend based on term overlap.
#[derive(Debug, Clone, Default)]
pub struct LexicalScorer;

impl LexicalScorer {
    pub const ID: &'static str = "lexical-binary-cosine-v1";

    pub fn new() -> Self {
        LexicalScorer
    }
}

impl ScorerBackend for LexicalScorer {
    fn backend_id(&self) -> &str {
        Self::ID
    }

    fn capabilities(&self) -> BTreeSet<Capability> {
        [Capability::Match].into_iter().collect()
    }

    fn score_batch(&self, function: Capability, requests: &[Request]) -> Result<Vec<RawOutput>, BackendError> {
        if function != Capability::Match {
            return Err(BackendError::fatal(
                format!("lexical scorer cannot compute {function}"),
                vec![],
            ));
        }
        requests
            .iter()
            .enumerate()
            .map(|(i, r)| match r {
                Request::Pair { sentence, kp } => Ok(RawOutput::Score(binary_cosine(sentence, kp))),
                Request::Text(_) => Err(BackendError::fatal("match needs a pair", vec![i])),
            })
            .collect()
    }
}
