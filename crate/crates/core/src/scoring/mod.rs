//! The scorer contract every learned model hides behind.
//!
//! A [`ScorerBackend`] answers batches for one of four functions (match,
//! argument quality, sentiment, key point quality). Callers never talk to a
//! backend directly: they go through [`Scorer`], which normalizes text,
//! validates outputs, consults the [`ScoreCache`], splits work into chunks and
//! counts backend calls.

mod cache;
mod lexical;
mod remote;
mod table;

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cache::{CacheKey, ScoreCache};
pub use lexical::{lexical_terms, LexicalScorer, STOPWORDS};
pub use remote::{
    DistributionBody, DistributionsBody, MatchRequestBody, PairBody, RemoteBackend, RetryPolicy, ScoresBody,
    ServiceInfo, TextsRequestBody,
};
pub use table::{MatchEntry, ScoreTable, TableScorer};

use crate::text::normalize_whitespace;

/// A real value in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Score(f64);

impl Score {
    pub fn new(value: f64) -> Result<Score, InvalidScore> {
        if (0.0..=1.0).contains(&value) {
            Ok(Score(value))
        } else {
            Err(InvalidScore(value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

#[derive(Debug, Error)]
#[error("score {0} outside [0, 1]")]
pub struct InvalidScore(pub f64);

impl TryFrom<f64> for Score {
    type Error = InvalidScore;
    fn try_from(v: f64) -> Result<Self, Self::Error> {
        Score::new(v)
    }
}

impl From<Score> for f64 {
    fn from(s: Score) -> f64 {
        s.0
    }
}

impl fmt::Display for Score {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Three-way sentence sentiment probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SentimentDistribution {
    pub pos: f64,
    pub neg: f64,
    pub neut: f64,
}

pub const DISTRIBUTION_TOLERANCE: f64 = 1e-6;

impl SentimentDistribution {
    pub fn new(pos: f64, neg: f64, neut: f64) -> Result<Self, String> {
        let d = SentimentDistribution { pos, neg, neut };
        d.validate().map(|_| d)
    }

    pub fn validate(&self) -> Result<(), String> {
        let parts = [self.pos, self.neg, self.neut];
        if parts.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(format!("component outside [0, 1]: {self:?}"));
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > DISTRIBUTION_TOLERANCE {
            return Err(format!("components sum to {sum}, not 1: {self:?}"));
        }
        Ok(())
    }

    /// The larger of the two polar probabilities.
    pub fn max_polar(&self) -> f64 {
        self.pos.max(self.neg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Capability {
    Match,
    Quality,
    Sentiment,
    KpQuality,
}

impl Capability {
    pub const ALL: [Capability; 4] = [
        Capability::Match,
        Capability::Quality,
        Capability::Sentiment,
        Capability::KpQuality,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Capability::Match => "match",
            Capability::Quality => "quality",
            Capability::Sentiment => "sentiment",
            Capability::KpQuality => "kp_quality",
        }
    }
}

impl fmt::Display for Capability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One scoring request. Match requests are asymmetric: `sentence` plays the
/// comment role, `kp` the key point.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Request {
    Pair { sentence: String, kp: String },
    Text(String),
}

impl Request {
    fn normalized(&self) -> Request {
        match self {
            Request::Pair { sentence, kp } => Request::Pair {
                sentence: normalize_whitespace(sentence),
                kp: normalize_whitespace(kp),
            },
            Request::Text(t) => Request::Text(normalize_whitespace(t)),
        }
    }

    fn is_empty(&self) -> bool {
        match self {
            Request::Pair { sentence, kp } => sentence.is_empty() || kp.is_empty(),
            Request::Text(t) => t.is_empty(),
        }
    }
}

/// What a backend returns per request, before validation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RawOutput {
    Score(f64),
    Distribution([f64; 3]),
}

/// A validated output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Output {
    Score(Score),
    Distribution(SentimentDistribution),
}

impl Output {
    pub fn score(self) -> Option<Score> {
        match self {
            Output::Score(s) => Some(s),
            Output::Distribution(_) => None,
        }
    }

    pub fn distribution(self) -> Option<SentimentDistribution> {
        match self {
            Output::Distribution(d) => Some(d),
            Output::Score(_) => None,
        }
    }
}

/// Failure reported by a backend for one batch call. Positions are relative
/// to the batch the backend received.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BackendError {
    pub message: String,
    pub retriable: bool,
    pub positions: Vec<usize>,
}

impl BackendError {
    pub fn fatal(message: impl Into<String>, positions: Vec<usize>) -> Self {
        BackendError {
            message: message.into(),
            retriable: false,
            positions,
        }
    }
}

#[derive(Debug, Error)]
pub enum ScoreError {
    #[error("backend {backend_id} does not support {capability}")]
    Unsupported { backend_id: String, capability: Capability },
    #[error("empty text at request position {position}")]
    EmptyText { position: usize },
    #[error("backend {backend_id}: score {value} at position {position} outside [0, 1]")]
    OutOfRange {
        backend_id: String,
        position: usize,
        value: f64,
    },
    #[error("backend {backend_id}: position {position}: {message}")]
    Normalization {
        backend_id: String,
        position: usize,
        message: String,
    },
    #[error("backend {backend_id} returned {got} outputs for {expected} requests")]
    LengthMismatch {
        backend_id: String,
        expected: usize,
        got: usize,
    },
    #[error("backend {backend_id} failed at positions {positions:?}: {message}")]
    Backend {
        backend_id: String,
        positions: Vec<usize>,
        message: String,
        retriable: bool,
    },
}

impl ScoreError {
    pub fn is_retriable(&self) -> bool {
        matches!(self, ScoreError::Backend { retriable: true, .. })
    }
}

/// A source of scores. Implementations must be pure: identical requests get
/// identical outputs for the lifetime of a backend id.
pub trait ScorerBackend: Send + Sync {
    fn backend_id(&self) -> &str;

    fn capabilities(&self) -> BTreeSet<Capability>;

    /// Largest batch the backend accepts in one call, if bounded.
    fn max_batch(&self) -> Option<usize> {
        None
    }

    /// Scores a homogeneous batch. Match requests arrive as [`Request::Pair`],
    /// all others as [`Request::Text`]; texts are already normalized.
    fn score_batch(&self, function: Capability, requests: &[Request]) -> Result<Vec<RawOutput>, BackendError>;
}

/// Routes each capability to its own backend, e.g. lexical matching with
/// table-driven sentiment.
pub struct RoutedBackend {
    id: String,
    routes: Vec<(Capability, Arc<dyn ScorerBackend>)>,
}

impl RoutedBackend {
    pub fn new(routes: Vec<(Capability, Arc<dyn ScorerBackend>)>) -> Self {
        let id = routes
            .iter()
            .map(|(c, b)| format!("{c}={}", b.backend_id()))
            .collect::<Vec<_>>()
            .join(",");
        RoutedBackend {
            id: format!("routed[{id}]"),
            routes,
        }
    }

    fn route(&self, function: Capability) -> Option<&Arc<dyn ScorerBackend>> {
        self.routes.iter().find(|(c, _)| *c == function).map(|(_, b)| b)
    }
}

impl ScorerBackend for RoutedBackend {
    fn backend_id(&self) -> &str {
        &self.id
    }

    fn capabilities(&self) -> BTreeSet<Capability> {
        self.routes
            .iter()
            .filter(|(c, b)| b.capabilities().contains(c))
            .map(|(c, _)| *c)
            .collect()
    }

    fn max_batch(&self) -> Option<usize> {
        self.routes.iter().filter_map(|(_, b)| b.max_batch()).min()
    }

    fn score_batch(&self, function: Capability, requests: &[Request]) -> Result<Vec<RawOutput>, BackendError> {
        match self.route(function) {
            Some(b) => b.score_batch(function, requests),
            None => Err(BackendError::fatal(format!("no route for {function}"), vec![])),
        }
    }
}

/// Backend call accounting.
#[derive(Debug, Default)]
pub struct CallStats {
    requests: AtomicU64,
    calls: AtomicU64,
    items: AtomicU64,
}

impl CallStats {
    /// Requests asked of the scorer, before caching and deduplication. Does
    /// not depend on worker count or cache state.
    pub fn requests(&self) -> u64 {
        self.requests.load(Ordering::Relaxed)
    }

    /// Number of `score_batch` invocations on the backend.
    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }

    /// Number of requests sent to the backend.
    pub fn items(&self) -> u64 {
        self.items.load(Ordering::Relaxed)
    }
}

const DEFAULT_CHUNK: usize = 256;

/// Front-end over a backend: normalization, validation, caching, chunking.
#[derive(Clone)]
pub struct Scorer {
    backend: Arc<dyn ScorerBackend>,
    cache: Option<Arc<ScoreCache>>,
    stats: Arc<CallStats>,
    chunk_size: usize,
}

impl fmt::Debug for Scorer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Scorer")
            .field("backend", &self.backend.backend_id())
            .field("cached", &self.cache.is_some())
            .finish()
    }
}

impl Scorer {
    pub fn new(backend: Arc<dyn ScorerBackend>) -> Self {
        Scorer {
            backend,
            cache: None,
            stats: Arc::new(CallStats::default()),
            chunk_size: DEFAULT_CHUNK,
        }
    }

    pub fn with_cache(mut self, cache: Arc<ScoreCache>) -> Self {
        self.cache = Some(cache);
        self
    }

    pub fn with_chunk_size(mut self, chunk_size: usize) -> Self {
        self.chunk_size = chunk_size.max(1);
        self
    }

    pub fn backend_id(&self) -> &str {
        self.backend.backend_id()
    }

    pub fn supports(&self, capability: Capability) -> bool {
        self.backend.capabilities().contains(&capability)
    }

    pub fn stats(&self) -> &CallStats {
        &self.stats
    }

    pub fn cache(&self) -> Option<&Arc<ScoreCache>> {
        self.cache.as_ref()
    }

    pub fn match_score(&self, sentence: &str, kp: &str) -> Result<Score, ScoreError> {
        Ok(self.match_scores(&[(sentence, kp)])?[0])
    }

    pub fn quality_score(&self, text: &str) -> Result<Score, ScoreError> {
        Ok(self.text_scores(Capability::Quality, &[text])?[0])
    }

    pub fn kp_quality_score(&self, text: &str) -> Result<Score, ScoreError> {
        Ok(self.text_scores(Capability::KpQuality, &[text])?[0])
    }

    pub fn sentiment_probs(&self, text: &str) -> Result<SentimentDistribution, ScoreError> {
        Ok(self.sentiment_batch(&[text])?[0])
    }

    pub fn match_scores(&self, pairs: &[(&str, &str)]) -> Result<Vec<Score>, ScoreError> {
        let requests: Vec<Request> = pairs
            .iter()
            .map(|(s, k)| Request::Pair {
                sentence: s.to_string(),
                kp: k.to_string(),
            })
            .collect();
        Ok(self
            .batch_score(Capability::Match, &requests)?
            .into_iter()
            .filter_map(Output::score)
            .collect())
    }

    /// Quality or KP-quality scores for a list of texts.
    pub fn text_scores(&self, function: Capability, texts: &[&str]) -> Result<Vec<Score>, ScoreError> {
        let requests: Vec<Request> = texts.iter().map(|t| Request::Text(t.to_string())).collect();
        Ok(self
            .batch_score(function, &requests)?
            .into_iter()
            .filter_map(Output::score)
            .collect())
    }

    pub fn sentiment_batch(&self, texts: &[&str]) -> Result<Vec<SentimentDistribution>, ScoreError> {
        let requests: Vec<Request> = texts.iter().map(|t| Request::Text(t.to_string())).collect();
        Ok(self
            .batch_score(Capability::Sentiment, &requests)?
            .into_iter()
            .filter_map(Output::distribution)
            .collect())
    }

    /// Scores a homogeneous batch. Outputs are positionally aligned with
    /// `requests` and identical to element-wise calls; any failure fails the
    /// whole batch.
    pub fn batch_score(&self, function: Capability, requests: &[Request]) -> Result<Vec<Output>, ScoreError> {
        let backend_id = self.backend.backend_id().to_string();
        if !self.supports(function) {
            return Err(ScoreError::Unsupported {
                backend_id,
                capability: function,
            });
        }
        if requests.is_empty() {
            return Ok(Vec::new());
        }
        self.stats.requests.fetch_add(requests.len() as u64, Ordering::Relaxed);
        let normalized: Vec<Request> = requests.iter().map(Request::normalized).collect();
        for (position, r) in normalized.iter().enumerate() {
            let well_formed = matches!(
                (function, r),
                (Capability::Match, Request::Pair { .. })
                    | (
                        Capability::Quality | Capability::Sentiment | Capability::KpQuality,
                        Request::Text(_)
                    )
            );
            if !well_formed {
                return Err(ScoreError::Backend {
                    backend_id,
                    positions: vec![position],
                    message: format!("request shape does not fit {function}"),
                    retriable: false,
                });
            }
            if r.is_empty() {
                return Err(ScoreError::EmptyText { position });
            }
        }

        let mut results: Vec<Option<Output>> = vec![None; normalized.len()];
        // unique uncached requests -> positions that want them
        let mut pending: Vec<(Request, Vec<usize>)> = Vec::new();
        let mut index: HashMap<&Request, usize> = HashMap::new();
        for (pos, r) in normalized.iter().enumerate() {
            if let Some(hit) = self.cache.as_ref().and_then(|c| c.get(&backend_id, function, r)) {
                results[pos] = Some(hit);
                continue;
            }
            match index.get(r) {
                Some(&slot) => pending[slot].1.push(pos),
                None => {
                    index.insert(r, pending.len());
                    pending.push((r.clone(), vec![pos]));
                }
            }
        }

        if !pending.is_empty() {
            let chunk = self
                .backend
                .max_batch()
                .map_or(self.chunk_size, |m| m.min(self.chunk_size))
                .max(1);
            let unique: Vec<Request> = pending.iter().map(|(r, _)| r.clone()).collect();
            let chunk_results: Vec<Result<Vec<Output>, ScoreError>> = unique
                .par_chunks(chunk)
                .enumerate()
                .map(|(ci, reqs)| {
                    self.stats.calls.fetch_add(1, Ordering::Relaxed);
                    self.stats.items.fetch_add(reqs.len() as u64, Ordering::Relaxed);
                    let offset = ci * chunk;
                    let to_original = |local: usize| pending[offset + local].1[0];
                    let raw = self
                        .backend
                        .score_batch(function, reqs)
                        .map_err(|e| ScoreError::Backend {
                            backend_id: backend_id.clone(),
                            positions: if e.positions.is_empty() {
                                (0..reqs.len()).map(to_original).collect()
                            } else {
                                e.positions.iter().map(|&p| to_original(p)).collect()
                            },
                            message: e.message,
                            retriable: e.retriable,
                        })?;
                    if raw.len() != reqs.len() {
                        return Err(ScoreError::LengthMismatch {
                            backend_id: backend_id.clone(),
                            expected: reqs.len(),
                            got: raw.len(),
                        });
                    }
                    raw.into_iter()
                        .enumerate()
                        .map(|(i, out)| validate(&backend_id, function, to_original(i), out))
                        .collect()
                })
                .collect();
            let mut flat = Vec::with_capacity(unique.len());
            for r in chunk_results {
                flat.extend(r?);
            }
            for ((req, positions), out) in pending.iter().zip(flat) {
                if let Some(cache) = &self.cache {
                    cache.insert(&backend_id, function, req, out);
                }
                for &p in positions {
                    results[p] = Some(out);
                }
            }
        }
        Ok(results.into_iter().map(|o| o.expect("every position filled")).collect())
    }
}

fn validate(backend_id: &str, function: Capability, position: usize, out: RawOutput) -> Result<Output, ScoreError> {
    match (function, out) {
        (Capability::Sentiment, RawOutput::Distribution([pos, neg, neut])) => {
            let d = SentimentDistribution { pos, neg, neut };
            d.validate().map_err(|message| ScoreError::Normalization {
                backend_id: backend_id.to_string(),
                position,
                message,
            })?;
            Ok(Output::Distribution(d))
        }
        (Capability::Sentiment, RawOutput::Score(_)) | (_, RawOutput::Distribution(_)) => Err(ScoreError::Backend {
            backend_id: backend_id.to_string(),
            positions: vec![position],
            message: format!("output kind does not fit {function}"),
            retriable: false,
        }),
        (_, RawOutput::Score(v)) => Score::new(v).map(Output::Score).map_err(|_| ScoreError::OutOfRange {
            backend_id: backend_id.to_string(),
            position,
            value: v,
        }),
    }
}
