//! HTTP client for a remote scorer service.
//!
//! Wire protocol (JSON bodies):
//!
//! | route                  | request                          | response                               |
//! |------------------------|----------------------------------|----------------------------------------|
//! | `GET /info`            |                                  | `{backend_id, capabilities, max_batch}` |
//! | `POST /score/match`    | `{pairs: [{sentence, kp}]}`      | `{scores: [..]}`                       |
//! | `POST /score/quality`  | `{texts: [..]}`                  | `{scores: [..]}`                       |
//! | `POST /score/sentiment`| `{texts: [..]}`                  | `{distributions: [{pos, neg, neut}]}`  |
//! | `POST /score/kp_quality`| `{texts: [..]}`                 | `{scores: [..]}`                       |
//!
//! Batches larger than the advertised `max_batch` are split client-side.

use std::collections::BTreeSet;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{BackendError, Capability, RawOutput, Request, ScorerBackend};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServiceInfo {
    pub backend_id: String,
    pub capabilities: Vec<Capability>,
    pub max_batch: usize,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PairBody {
    pub sentence: String,
    pub kp: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct MatchRequestBody {
    pub pairs: Vec<PairBody>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TextsRequestBody {
    pub texts: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ScoresBody {
    pub scores: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct DistributionBody {
    pub pos: f64,
    pub neg: f64,
    pub neut: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct DistributionsBody {
    pub distributions: Vec<DistributionBody>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub initial_backoff: Duration,
    pub timeout: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            attempts: 3,
            initial_backoff: Duration::from_millis(200),
            timeout: Duration::from_secs(60),
        }
    }
}

pub struct RemoteBackend {
    base_url: String,
    info: ServiceInfo,
    agent: ureq::Agent,
    retry: RetryPolicy,
}

impl std::fmt::Debug for RemoteBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RemoteBackend")
            .field("base_url", &self.base_url)
            .field("info", &self.info)
            .finish()
    }
}

impl RemoteBackend {
    /// Connects and reads `/info`.
    pub fn connect(base_url: &str, retry: RetryPolicy) -> Result<Self, BackendError> {
        let agent = ureq::AgentBuilder::new().timeout(retry.timeout).build();
        let base_url = base_url.trim_end_matches('/').to_string();
        let url = format!("{base_url}/info");
        let info: ServiceInfo = with_retries(retry, || {
            agent
                .get(&url)
                .call()
                .map_err(classify)?
                .into_json()
                .map_err(|e| BackendError::fatal(format!("bad /info body: {e}"), vec![]))
        })?;
        if info.max_batch == 0 {
            return Err(BackendError::fatal("service advertises max_batch 0", vec![]));
        }
        Ok(RemoteBackend {
            base_url,
            info,
            agent,
            retry,
        })
    }

    pub fn info(&self) -> &ServiceInfo {
        &self.info
    }

    fn post_chunk(&self, function: Capability, requests: &[Request]) -> Result<Vec<RawOutput>, BackendError> {
        let url = format!("{}/score/{}", self.base_url, function.name());
        let body = match function {
            Capability::Match => serde_json::to_value(MatchRequestBody {
                pairs: requests
                    .iter()
                    .map(|r| match r {
                        Request::Pair { sentence, kp } => PairBody {
                            sentence: sentence.clone(),
                            kp: kp.clone(),
                        },
                        Request::Text(t) => PairBody {
                            sentence: t.clone(),
                            kp: String::new(),
                        },
                    })
                    .collect(),
            }),
            _ => serde_json::to_value(TextsRequestBody {
                texts: requests
                    .iter()
                    .map(|r| match r {
                        Request::Text(t) => t.clone(),
                        Request::Pair { sentence, .. } => sentence.clone(),
                    })
                    .collect(),
            }),
        }
        .expect("request bodies serialize");

        with_retries(self.retry, || {
            let resp = self.agent.post(&url).send_json(body.clone()).map_err(classify)?;
            let outputs: Vec<RawOutput> = if function == Capability::Sentiment {
                let b: DistributionsBody = resp
                    .into_json()
                    .map_err(|e| BackendError::fatal(format!("bad response body: {e}"), vec![]))?;
                b.distributions
                    .into_iter()
                    .map(|d| RawOutput::Distribution([d.pos, d.neg, d.neut]))
                    .collect()
            } else {
                let b: ScoresBody = resp
                    .into_json()
                    .map_err(|e| BackendError::fatal(format!("bad response body: {e}"), vec![]))?;
                b.scores.into_iter().map(RawOutput::Score).collect()
            };
            Ok(outputs)
        })
    }
}

fn classify(err: ureq::Error) -> BackendError {
    match err {
        ureq::Error::Status(code, resp) => {
            let body = resp.into_string().unwrap_or_default();
            BackendError {
                message: format!("HTTP {code}: {body}"),
                retriable: code >= 500 || code == 429,
                positions: vec![],
            }
        }
        ureq::Error::Transport(t) => BackendError {
            message: format!("transport: {t}"),
            retriable: true,
            positions: vec![],
        },
    }
}

fn with_retries<T>(policy: RetryPolicy, mut f: impl FnMut() -> Result<T, BackendError>) -> Result<T, BackendError> {
    let mut backoff = policy.initial_backoff;
    let mut attempt = 1;
    loop {
        match f() {
            Ok(v) => return Ok(v),
            Err(e) if e.retriable && attempt < policy.attempts.max(1) => {
                log::warn!("scorer request failed (attempt {attempt}): {}; retrying", e.message);
                thread::sleep(backoff);
                backoff *= 2;
                attempt += 1;
            }
            Err(mut e) => {
                if e.retriable {
                    e.message = format!("{} (gave up after {attempt} attempts)", e.message);
                }
                return Err(e);
            }
        }
    }
}

impl ScorerBackend for RemoteBackend {
    fn backend_id(&self) -> &str {
        &self.info.backend_id
    }

    fn capabilities(&self) -> BTreeSet<Capability> {
        self.info.capabilities.iter().copied().collect()
    }

    fn max_batch(&self) -> Option<usize> {
        Some(self.info.max_batch)
    }

    fn score_batch(&self, function: Capability, requests: &[Request]) -> Result<Vec<RawOutput>, BackendError> {
        let mut out = Vec::with_capacity(requests.len());
        for (ci, chunk) in requests.chunks(self.info.max_batch).enumerate() {
            let offset = ci * self.info.max_batch;
            let scored = self.post_chunk(function, chunk).map_err(|mut e| {
                e.positions = (offset..offset + chunk.len()).collect();
                e
            })?;
            if scored.len() != chunk.len() {
                return Err(BackendError::fatal(
                    format!("service returned {} outputs for {} requests", scored.len(), chunk.len()),
                    (offset..offset + chunk.len()).collect(),
                ));
            }
            out.extend(scored);
        }
        Ok(out)
    }
}
