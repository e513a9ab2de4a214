//! HTTP client for a scorer service.
//!
//! Endpoints (JSON bodies):
//!
//! | method | path              | request                              | response |
//! |--------|-------------------|--------------------------------------|----------|
//! | POST   | `/v1/token_scores`| `{"text"}`                           | `{"tokens", "log_probs", "attentions"}` |
//! | POST   | `/v1/fill_mask`   | `{"text", "mask_index", "top_k"}`    | `{"predictions": [{"token", "prob"}]}` |
//! | POST   | `/v1/embed`       | `{"text"}`                           | `{"vector"}` |
//! | GET    | `/v1/info`        |                                      | `{"model_id", "max_tokens", "embedding_dim"}` |
//!
//! Errors come back as HTTP 4xx/5xx with `{"error": "..."}`.

use std::sync::{Condvar, Mutex};
use std::thread;
use std::time::Duration;

use genbias_core::scoring::{check_predictions, check_token_scores, TokenScoreColumns};
use genbias_core::{BackendError, BackendInfo, MaskPrediction, ScorerBackend, TokenScore};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub const DEFAULT_MAX_IN_FLIGHT: usize = 8;

#[derive(Debug, Serialize, Deserialize)]
pub struct TextRequest<'a> {
    pub text: &'a str,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct FillMaskRequest<'a> {
    pub text: &'a str,
    pub mask_index: usize,
    pub top_k: usize,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct FillMaskResponse {
    pub predictions: Vec<MaskPrediction>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EmbedResponse {
    pub vector: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
}

/// Counting semaphore bounding in-flight requests.
#[derive(Debug)]
struct Slots {
    free: Mutex<usize>,
    cv: Condvar,
}

impl Slots {
    fn new(n: usize) -> Self {
        Self {
            free: Mutex::new(n.max(1)),
            cv: Condvar::new(),
        }
    }

    fn acquire(&self) -> SlotGuard<'_> {
        let mut free = self.free.lock().unwrap_or_else(|e| e.into_inner());
        while *free == 0 {
            free = self.cv.wait(free).unwrap_or_else(|e| e.into_inner());
        }
        *free -= 1;
        SlotGuard(self)
    }
}

struct SlotGuard<'a>(&'a Slots);

impl Drop for SlotGuard<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.0.cv.notify_one();
    }
}

#[derive(Debug, Clone)]
pub struct RemoteOptions {
    pub timeout: Duration,
    pub max_retries: u32,
    pub max_in_flight: usize,
    /// First retry delay; doubles on each further attempt.
    pub backoff: Duration,
}

impl Default for RemoteOptions {
    fn default() -> Self {
        Self {
            timeout: Duration::from_secs(30),
            max_retries: 3,
            max_in_flight: DEFAULT_MAX_IN_FLIGHT,
            backoff: Duration::from_millis(100),
        }
    }
}

#[derive(Debug)]
pub struct RemoteBackend {
    agent: ureq::Agent,
    endpoint: String,
    options: RemoteOptions,
    slots: Slots,
    info: BackendInfo,
}

enum Attempt<T> {
    Done(T),
    Retry(BackendError),
}

impl RemoteBackend {
    /// Connect and fetch `/v1/info`.
    pub fn connect(endpoint: &str, options: RemoteOptions) -> Result<Self, BackendError> {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(options.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        let mut backend = RemoteBackend {
            agent,
            endpoint: endpoint.trim_end_matches('/').to_string(),
            slots: Slots::new(options.max_in_flight),
            options,
            info: BackendInfo {
                model_id: String::new(),
                max_tokens: 0,
                embedding_dim: 0,
                embedding_source: None,
            },
        };
        backend.info = backend.call::<(), BackendInfo>("/v1/info", None)?;
        Ok(backend)
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    fn call<Req: Serialize, Resp: DeserializeOwned>(&self, path: &str, body: Option<&Req>) -> Result<Resp, BackendError> {
        let request = match body {
            Some(_) => format!("POST {path}"),
            None => format!("GET {path}"),
        };
        let mut attempt = 0;
        loop {
            let outcome = {
                let _slot = self.slots.acquire();
                self.attempt(path, &request, body)
            };
            match outcome {
                Attempt::Done(v) => return v,
                Attempt::Retry(err) if attempt < self.options.max_retries => {
                    log::debug!("retrying {request} after: {err}");
                    thread::sleep(self.options.backoff * 2u32.saturating_pow(attempt));
                    attempt += 1;
                }
                Attempt::Retry(err) => return Err(err),
            }
        }
    }

    fn attempt<Req: Serialize, Resp: DeserializeOwned>(
        &self,
        path: &str,
        request: &str,
        body: Option<&Req>,
    ) -> Attempt<Result<Resp, BackendError>> {
        let url = format!("{}{path}", self.endpoint);
        let sent = match body {
            Some(b) => self.agent.post(&url).send_json(b),
            None => self.agent.get(&url).call(),
        };
        let mut response = match sent {
            Ok(r) => r,
            Err(ureq::Error::Timeout(_)) => {
                return Attempt::Retry(BackendError::Timeout {
                    endpoint: self.endpoint.clone(),
                    request: request.to_string(),
                })
            }
            Err(e) => {
                return Attempt::Retry(BackendError::Connection {
                    endpoint: self.endpoint.clone(),
                    request: request.to_string(),
                    message: e.to_string(),
                })
            }
        };
        let status = response.status().as_u16();
        let text = match response.body_mut().read_to_string() {
            Ok(t) => t,
            Err(ureq::Error::Timeout(_)) => {
                return Attempt::Retry(BackendError::Timeout {
                    endpoint: self.endpoint.clone(),
                    request: request.to_string(),
                })
            }
            Err(e) => {
                return Attempt::Done(Err(BackendError::MalformedResponse {
                    request: request.to_string(),
                    message: format!("unreadable body: {e}"),
                }))
            }
        };
        if status >= 400 {
            let message = serde_json::from_str::<ErrorBody>(&text)
                .map(|b| b.error)
                .unwrap_or(text);
            let err = BackendError::Server {
                request: request.to_string(),
                status,
                message,
            };
            // server-side failures may be transient; client errors are not
            return if status >= 500 {
                Attempt::Retry(err)
            } else {
                Attempt::Done(Err(err))
            };
        }
        Attempt::Done(serde_json::from_str(&text).map_err(|e| BackendError::MalformedResponse {
            request: request.to_string(),
            message: e.to_string(),
        }))
    }
}

impl ScorerBackend for RemoteBackend {
    fn info(&self) -> BackendInfo {
        self.info.clone()
    }

    fn token_scores(&self, text: &str) -> Result<Vec<TokenScore>, BackendError> {
        let cols: TokenScoreColumns = self.call("/v1/token_scores", Some(&TextRequest { text }))?;
        let scores = cols.into_scores(text, "token_scores")?;
        check_token_scores(text, &scores)?;
        Ok(scores)
    }

    fn fill_mask(&self, text: &str, mask_index: usize, k: usize) -> Result<Vec<MaskPrediction>, BackendError> {
        let resp: FillMaskResponse = self.call(
            "/v1/fill_mask",
            Some(&FillMaskRequest {
                text,
                mask_index,
                top_k: k,
            }),
        )?;
        check_predictions(text, &resp.predictions, Some(k))?;
        Ok(resp.predictions)
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>, BackendError> {
        let resp: EmbedResponse = self.call("/v1/embed", Some(&TextRequest { text }))?;
        if self.info.embedding_dim > 0 && resp.vector.len() != self.info.embedding_dim {
            return Err(BackendError::Contract {
                kind: "embed",
                text: text.to_string(),
                message: format!(
                    "vector has dimension {} but the service advertises {}",
                    resp.vector.len(),
                    self.info.embedding_dim
                ),
            });
        }
        Ok(resp.vector)
    }
}
