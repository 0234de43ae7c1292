//! Pipeline configuration and the four experimental presets.
//!
//! Every default is the constant used for the published Yelp experiments.
//! A config file is TOML; any table or key may be omitted.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{FilterConfig, MalformedPolicy};
use crate::sentiment::WeakLabelConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cannot parse {path}: {source}")]
    Parse { path: PathBuf, source: toml::de::Error },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MiningConfig {
    /// Strict: a match needs a score above this.
    pub t_match: f64,
    /// Inclusive minimum argument quality for candidates.
    pub t_quality: f64,
    /// Candidate length in word tokens, inclusive.
    pub kp_tokens: [usize; 2],
    /// Sentence length in word tokens, inclusive.
    pub sentence_tokens: [usize; 2],
    pub sentence_min_chars: usize,
    pub reviews_per_polarity: usize,
    pub quality_keep_fraction: f64,
    /// Candidates are capped at `floor(factor * sqrt(N_s))`.
    pub candidate_cap_factor: f64,
    pub mined_k: usize,
    pub final_k: usize,
    pub kpq_filter: bool,
    /// Inclusive minimum KP-quality score, applied only when `kpq_filter` is set.
    pub kpq_threshold: f64,
    /// Classify sentences and mine per polarity.
    pub use_sentiment: bool,
    pub seed: u64,
}

impl Default for MiningConfig {
    fn default() -> Self {
        MiningConfig {
            t_match: 0.99,
            t_quality: 0.42,
            kp_tokens: [3, 5],
            sentence_tokens: [3, 36],
            sentence_min_chars: 10,
            reviews_per_polarity: 12_000,
            quality_keep_fraction: 0.25,
            candidate_cap_factor: 1.5,
            mined_k: 70,
            final_k: 30,
            kpq_filter: false,
            kpq_threshold: 0.4,
            use_sentiment: true,
            seed: 0,
        }
    }
}

fn unit(name: &str, v: f64) -> Result<(), ConfigError> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(ConfigError::Invalid(format!("{name}={v} outside [0, 1]")))
    }
}

fn range(name: &str, r: [usize; 2]) -> Result<(), ConfigError> {
    if r[0] <= r[1] {
        Ok(())
    } else {
        Err(ConfigError::Invalid(format!("{name} min {} > max {}", r[0], r[1])))
    }
}

impl MiningConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        unit("t_match", self.t_match)?;
        unit("t_quality", self.t_quality)?;
        unit("kpq_threshold", self.kpq_threshold)?;
        range("kp_tokens", self.kp_tokens)?;
        range("sentence_tokens", self.sentence_tokens)?;
        if !(self.quality_keep_fraction > 0.0 && self.quality_keep_fraction <= 1.0) {
            return Err(ConfigError::Invalid(format!(
                "quality_keep_fraction={} outside (0, 1]",
                self.quality_keep_fraction
            )));
        }
        if self.candidate_cap_factor.is_nan() || self.candidate_cap_factor <= 0.0 {
            return Err(ConfigError::Invalid("candidate_cap_factor must be positive".into()));
        }
        if self.final_k > self.mined_k {
            return Err(ConfigError::Invalid(format!(
                "final_k {} exceeds mined_k {}",
                self.final_k, self.mined_k
            )));
        }
        if self.reviews_per_polarity == 0 {
            return Err(ConfigError::Invalid("reviews_per_polarity must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SentimentConfig {
    /// Minimum polar probability; below it for both classes a sentence is neutral.
    pub t_s: f64,
    pub min_recall: f64,
    pub weak_labels: WeakLabelConfig,
}

impl Default for SentimentConfig {
    fn default() -> Self {
        SentimentConfig {
            t_s: 0.79,
            min_recall: 0.70,
            weak_labels: WeakLabelConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SummaryConfig {
    /// Strict threshold for counting a sentence-KP match in a summary.
    pub t_match: f64,
    /// Key points shown per polarity.
    pub top_k: usize,
}

impl Default for SummaryConfig {
    fn default() -> Self {
        SummaryConfig {
            t_match: 0.99,
            top_k: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// Floor score for the precision sample; also the floor for stored match records.
    pub t_min: f64,
    pub sample_size: usize,
    pub businesses_per_domain: usize,
    /// Inclusive review-count bounds for evaluated businesses.
    pub review_count_bounds: [usize; 2],
    pub min_agree: f64,
    /// Draw budget per requested pair before the sampler reports a shortfall.
    pub max_draws_per_pair: usize,
    pub seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            t_min: 0.5,
            sample_size: 400,
            businesses_per_domain: 40,
            review_count_bounds: [100, 5000],
            min_agree: 0.85,
            max_draws_per_pair: 50,
            seed: 0,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(0.0..1.0).contains(&self.t_min) {
            return Err(ConfigError::Invalid(format!("t_min={} must be in [0, 1)", self.t_min)));
        }
        if self.sample_size == 0 {
            return Err(ConfigError::Invalid("sample_size must be at least 1".into()));
        }
        unit("min_agree", self.min_agree)?;
        range("review_count_bounds", self.review_count_bounds)
    }
}

/// The four evaluated ways of building a key point set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// Per-business extraction, no sentiment, top 60. Model pre-training is
    /// not switchable here; only the pipeline adaptations are turned off.
    KpaVanilla,
    /// Collective mining with length and argument-quality filtering, top 30 per polarity.
    RkpaBase,
    /// Base plus the KP-quality filter at 0.4.
    RkpaFt,
    /// Base key points edited by a curation script.
    RkpaManual,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::KpaVanilla, Preset::RkpaBase, Preset::RkpaFt, Preset::RkpaManual];

    pub fn name(self) -> &'static str {
        match self {
            Preset::KpaVanilla => "kpa-vanilla",
            Preset::RkpaBase => "rkpa-base",
            Preset::RkpaFt => "rkpa-ft",
            Preset::RkpaManual => "rkpa-manual",
        }
    }

    /// Whether key points are mined per business rather than per domain.
    pub fn per_business(self) -> bool {
        self == Preset::KpaVanilla
    }

    pub fn needs_curation(self) -> bool {
        self == Preset::RkpaManual
    }

    /// Applies this preset's flag bundle on top of `base`.
    pub fn apply(self, base: &MiningConfig) -> MiningConfig {
        let mut c = base.clone();
        match self {
            Preset::KpaVanilla => {
                c.use_sentiment = false;
                c.kpq_filter = false;
                c.quality_keep_fraction = 1.0;
                c.mined_k = 60;
                c.final_k = 60;
            }
            Preset::RkpaBase | Preset::RkpaManual => {
                c.use_sentiment = true;
                c.kpq_filter = false;
                c.final_k = 30;
            }
            Preset::RkpaFt => {
                c.use_sentiment = true;
                c.kpq_filter = true;
                c.kpq_threshold = 0.4;
                c.final_k = 30;
            }
        }
        c
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s.to_ascii_lowercase())
            .ok_or_else(|| {
                format!("unknown preset {s:?} (expected one of kpa-vanilla, rkpa-base, rkpa-ft, rkpa-manual)")
            })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendKind {
    #[default]
    Table,
    Lexical,
    /// Lexical matching, everything else from the table.
    LexicalTable,
    Remote,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendConfig {
    pub kind: BackendKind,
    /// Score table for `table` and `lexical-table`.
    pub table: Option<PathBuf>,
    /// Base URL for `remote`.
    pub endpoint: Option<String>,
    pub retries: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub preset: Preset,
    pub domain: Option<String>,
    pub malformed: MalformedPolicy,
    pub filter: FilterConfig,
    pub split_ratios: [f64; 3],
    pub split_seed: u64,
    pub backend: BackendConfig,
    pub mining: MiningConfig,
    pub sentiment: SentimentConfig,
    pub summary: SummaryConfig,
    pub eval: EvalConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            preset: Preset::RkpaBase,
            domain: None,
            malformed: MalformedPolicy::Skip,
            filter: FilterConfig::default(),
            split_ratios: [0.25, 0.25, 0.50],
            split_seed: 0,
            backend: BackendConfig::default(),
            mining: MiningConfig::default(),
            sentiment: SentimentConfig::default(),
            summary: SummaryConfig::default(),
            eval: EvalConfig::default(),
        }
    }
}

impl PipelineConfig {
    /// Reads a TOML file. A relative `backend.table` is taken relative to the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let raw = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut config: PipelineConfig = toml::from_str(&raw).map_err(|source| ConfigError::Parse {
            path: path.to_path_buf(),
            source,
        })?;
        if let (Some(table), Some(dir)) = (&config.backend.table, path.parent()) {
            if table.is_relative() {
                config.backend.table = Some(dir.join(table));
            }
        }
        Ok(config)
    }

    /// Mining settings after the preset's flag bundle.
    pub fn effective_mining(&self) -> MiningConfig {
        self.preset.apply(&self.mining)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.effective_mining().validate()?;
        self.eval.validate()?;
        unit("sentiment.t_s", self.sentiment.t_s)?;
        unit("sentiment.min_recall", self.sentiment.min_recall)?;
        unit("summary.t_match", self.summary.t_match)
    }
}
