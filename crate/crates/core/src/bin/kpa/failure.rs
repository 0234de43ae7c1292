use std::fmt;

use kpa_core::config::ConfigError;
use kpa_core::corpus::CorpusError;
use kpa_core::evaluate::EvalError;
use kpa_core::io::IoError;
use kpa_core::mining::MiningError;
use kpa_core::scoring::{BackendError, ScoreError};
use kpa_core::sentiment::SentimentError;

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Data(String),
    Backend(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Backend(_) => 3,
        }
    }

    pub fn data(stage: &str, e: impl fmt::Display) -> Self {
        Failure::Data(format!("{stage}: {e}"))
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "usage: {m}"),
            Failure::Data(m) => write!(f, "data error: {m}"),
            Failure::Backend(m) => write!(f, "scorer backend error: {m}"),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        Failure::Data(e.to_string())
    }
}

impl From<CorpusError> for Failure {
    fn from(e: CorpusError) -> Self {
        Failure::data("corpus", e)
    }
}

impl From<SentimentError> for Failure {
    fn from(e: SentimentError) -> Self {
        Failure::data("sentiment", e)
    }
}

impl From<EvalError> for Failure {
    fn from(e: EvalError) -> Self {
        Failure::data("evaluate", e)
    }
}

impl From<ScoreError> for Failure {
    fn from(e: ScoreError) -> Self {
        Failure::Backend(e.to_string())
    }
}

impl From<BackendError> for Failure {
    fn from(e: BackendError) -> Self {
        Failure::Backend(e.message)
    }
}

impl From<MiningError> for Failure {
    fn from(e: MiningError) -> Self {
        match e {
            MiningError::Scoring { .. } => Failure::Backend(format!("mining: {e}")),
            MiningError::Config(c) => c.into(),
            other => Failure::data("mining", other),
        }
    }
}
