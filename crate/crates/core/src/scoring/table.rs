use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{BackendError, Capability, RawOutput, Request, ScorerBackend, SentimentDistribution};
use crate::text::normalize_whitespace;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchEntry {
    pub sentence: String,
    pub kp: String,
    pub score: f64,
}

/// Serialized form of a [`TableScorer`]. Missing entries fall back to the
/// declared default for that function, or fail when none is declared.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreTable {
    #[serde(default = "default_table_id")]
    pub backend_id: String,
    #[serde(default, rename = "match")]
    pub matches: Vec<MatchEntry>,
    #[serde(default)]
    pub quality: BTreeMap<String, f64>,
    #[serde(default)]
    pub kp_quality: BTreeMap<String, f64>,
    #[serde(default)]
    pub sentiment: BTreeMap<String, SentimentDistribution>,
    #[serde(default)]
    pub default_match: Option<f64>,
    #[serde(default)]
    pub default_quality: Option<f64>,
    #[serde(default)]
    pub default_kp_quality: Option<f64>,
    #[serde(default)]
    pub default_sentiment: Option<SentimentDistribution>,
}

fn default_table_id() -> String {
    "table".to_string()
}

/// Explicit lookup-table backend. Every capability is advertised; keys are
/// whitespace-normalized on load so lookups match the normalized requests.
#[derive(Debug, Clone)]
pub struct TableScorer {
    id: String,
    matches: HashMap<(String, String), f64>,
    quality: HashMap<String, f64>,
    kp_quality: HashMap<String, f64>,
    sentiment: HashMap<String, [f64; 3]>,
    default_match: Option<f64>,
    default_quality: Option<f64>,
    default_kp_quality: Option<f64>,
    default_sentiment: Option<[f64; 3]>,
    capabilities: BTreeSet<Capability>,
}

impl Default for TableScorer {
    fn default() -> Self {
        Self::new()
    }
}

impl TableScorer {
    pub fn new() -> Self {
        TableScorer::from_table(ScoreTable {
            backend_id: default_table_id(),
            ..ScoreTable::default()
        })
    }

    pub fn from_table(table: ScoreTable) -> Self {
        let n = normalize_whitespace;
        let dist = |d: SentimentDistribution| [d.pos, d.neg, d.neut];
        TableScorer {
            id: table.backend_id,
            matches: table
                .matches
                .into_iter()
                .map(|e| ((n(&e.sentence), n(&e.kp)), e.score))
                .collect(),
            quality: table.quality.into_iter().map(|(k, v)| (n(&k), v)).collect(),
            kp_quality: table.kp_quality.into_iter().map(|(k, v)| (n(&k), v)).collect(),
            sentiment: table.sentiment.into_iter().map(|(k, v)| (n(&k), dist(v))).collect(),
            default_match: table.default_match,
            default_quality: table.default_quality,
            default_kp_quality: table.default_kp_quality,
            default_sentiment: table.default_sentiment.map(dist),
            capabilities: Capability::ALL.into_iter().collect(),
        }
    }

    pub fn load(path: &Path) -> Result<Self, std::io::Error> {
        let raw = std::fs::read_to_string(path)?;
        let table: ScoreTable = serde_json::from_str(&raw).map_err(std::io::Error::other)?;
        Ok(Self::from_table(table))
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    /// Restricts the advertised capabilities.
    pub fn with_capabilities(mut self, caps: impl IntoIterator<Item = Capability>) -> Self {
        self.capabilities = caps.into_iter().collect();
        self
    }

    pub fn with_match(mut self, sentence: &str, kp: &str, score: f64) -> Self {
        self.insert_match(sentence, kp, score);
        self
    }

    pub fn insert_match(&mut self, sentence: &str, kp: &str, score: f64) {
        self.matches
            .insert((normalize_whitespace(sentence), normalize_whitespace(kp)), score);
    }

    pub fn with_quality(mut self, text: &str, score: f64) -> Self {
        self.quality.insert(normalize_whitespace(text), score);
        self
    }

    pub fn with_kp_quality(mut self, text: &str, score: f64) -> Self {
        self.kp_quality.insert(normalize_whitespace(text), score);
        self
    }

    /// Stores `(pos, neg, neut)` as given; validation happens in the scorer.
    pub fn with_sentiment(mut self, text: &str, pos: f64, neg: f64, neut: f64) -> Self {
        self.sentiment.insert(normalize_whitespace(text), [pos, neg, neut]);
        self
    }

    pub fn with_default_match(mut self, v: f64) -> Self {
        self.default_match = Some(v);
        self
    }

    pub fn with_default_quality(mut self, v: f64) -> Self {
        self.default_quality = Some(v);
        self
    }

    pub fn with_default_kp_quality(mut self, v: f64) -> Self {
        self.default_kp_quality = Some(v);
        self
    }

    pub fn with_default_sentiment(mut self, pos: f64, neg: f64, neut: f64) -> Self {
        self.default_sentiment = Some([pos, neg, neut]);
        self
    }

    fn lookup(&self, function: Capability, request: &Request) -> Option<RawOutput> {
        match (function, request) {
            (Capability::Match, Request::Pair { sentence, kp }) => self
                .matches
                .get(&(sentence.clone(), kp.clone()))
                .copied()
                .or(self.default_match)
                .map(RawOutput::Score),
            (Capability::Quality, Request::Text(t)) => self
                .quality
                .get(t)
                .copied()
                .or(self.default_quality)
                .map(RawOutput::Score),
            (Capability::KpQuality, Request::Text(t)) => self
                .kp_quality
                .get(t)
                .copied()
                .or(self.default_kp_quality)
                .map(RawOutput::Score),
            (Capability::Sentiment, Request::Text(t)) => self
                .sentiment
                .get(t)
                .copied()
                .or(self.default_sentiment)
                .map(RawOutput::Distribution),
            _ => None,
        }
    }
}

impl ScorerBackend for TableScorer {
    fn backend_id(&self) -> &str {
        &self.id
    }

    fn capabilities(&self) -> BTreeSet<Capability> {
        self.capabilities.clone()
    }

    fn score_batch(&self, function: Capability, requests: &[Request]) -> Result<Vec<RawOutput>, BackendError> {
        let mut out = Vec::with_capacity(requests.len());
        let mut missing = Vec::new();
        for (i, r) in requests.iter().enumerate() {
            match self.lookup(function, r) {
                Some(v) => out.push(v),
                None => missing.push(i),
            }
        }
        if missing.is_empty() {
            Ok(out)
        } else {
            Err(BackendError::fatal(
                format!("no {function} entry and no declared default"),
                missing,
            ))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scoring::{ScoreError, Scorer};
    use std::sync::Arc;

    #[test]
    fn lookup_and_default() {
        let t = TableScorer::new().with_match("s1", "k1", 0.95).with_default_match(0.0);
        let s = Scorer::new(Arc::new(t));
        assert_eq!(s.match_score("s1", "k1").unwrap().value(), 0.95);
        assert_eq!(s.match_score("s2", "k1").unwrap().value(), 0.0);
    }

    #[test]
    fn missing_without_default_is_an_error() {
        let s = Scorer::new(Arc::new(TableScorer::new()));
        let err = s.quality_score("nope").unwrap_err();
        assert!(matches!(err, ScoreError::Backend { retriable: false, .. }));
    }

    #[test]
    fn simple_lookups() {
        let t = TableScorer::new()
            .with_quality("q", 0.42)
            .with_kp_quality("Clean rooms and great views.", 0.41)
            .with_sentiment("nice", 0.9, 0.05, 0.05);
        let s = Scorer::new(Arc::new(t));
        assert_eq!(s.quality_score("q").unwrap().value(), 0.42);
        assert_eq!(
            s.kp_quality_score("  Clean rooms  and great views.\n").unwrap().value(),
            0.41
        );
        let d = s.sentiment_probs("nice").unwrap();
        assert_eq!((d.pos, d.neg, d.neut), (0.9, 0.05, 0.05));
    }

    #[test]
    fn table_json_schema() {
        let json = r#"{
            "backend_id": "fixture",
            "match": [{"sentence": "a  b", "kp": "c", "score": 0.5}],
            "quality": {"a b": 0.7},
            "sentiment": {"a b": {"pos": 0.8, "neg": 0.1, "neut": 0.1}},
            "default_match": 0.0
        }"#;
        let table: ScoreTable = serde_json::from_str(json).unwrap();
        let s = Scorer::new(Arc::new(TableScorer::from_table(table)));
        assert_eq!(s.backend_id(), "fixture");
        assert_eq!(s.match_score("a b", "c").unwrap().value(), 0.5);
        assert_eq!(s.quality_score("a b").unwrap().value(), 0.7);
    }
}
