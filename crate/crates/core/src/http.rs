//! Blocking JSON-over-HTTP calls with bounded retries and exponential backoff.

use std::time::{Duration, Instant};

use serde::de::DeserializeOwned;
use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RetryPolicy {
    /// Total attempts, including the first.
    pub attempts: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            attempts: 3,
            base_delay: Duration::from_millis(250),
        }
    }
}

impl RetryPolicy {
    fn delay_before(&self, attempt: u32) -> Duration {
        // attempt is 1-based; no wait before the first one
        self.base_delay * 2u32.saturating_pow(attempt.saturating_sub(2))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Endpoint {
    pub url: String,
    pub token: Option<String>,
    pub timeout: Duration,
}

impl Endpoint {
    pub fn new(url: impl Into<String>) -> Self {
        Endpoint {
            url: url.into(),
            token: None,
            timeout: Duration::from_secs(60),
        }
    }

    /// Reads the URL (and optional bearer token) from environment variables.
    pub fn from_env(url_var: &str, token_var: &str) -> Option<Self> {
        let url = std::env::var(url_var).ok().filter(|u| !u.is_empty())?;
        let mut ep = Endpoint::new(url);
        ep.token = std::env::var(token_var).ok().filter(|t| !t.is_empty());
        Some(ep)
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }
}

#[derive(Debug)]
pub(crate) struct Reply<T> {
    pub value: T,
    pub attempts: u32,
    pub latency: Duration,
}

#[derive(Debug)]
pub(crate) struct CallFailure {
    pub attempts: u32,
    pub message: String,
}

pub(crate) struct JsonClient {
    client: reqwest::blocking::Client,
    endpoint: Endpoint,
    retry: RetryPolicy,
}

impl JsonClient {
    pub fn new(endpoint: Endpoint, retry: RetryPolicy) -> Result<Self, CallFailure> {
        let client = reqwest::blocking::Client::builder()
            .timeout(endpoint.timeout)
            .build()
            .map_err(|e| CallFailure {
                attempts: 0,
                message: e.to_string(),
            })?;
        Ok(JsonClient {
            client,
            endpoint,
            retry,
        })
    }

    pub fn post<B: Serialize, T: DeserializeOwned>(
        &self,
        body: &B,
    ) -> Result<Reply<T>, CallFailure> {
        let started = Instant::now();
        let attempts = self.retry.attempts.max(1);
        let mut last = String::new();
        for attempt in 1..=attempts {
            if attempt > 1 {
                std::thread::sleep(self.retry.delay_before(attempt));
            }
            let mut req = self.client.post(&self.endpoint.url).json(body);
            if let Some(token) = &self.endpoint.token {
                req = req.bearer_auth(token);
            }
            match req.send() {
                Ok(resp) => {
                    let status = resp.status();
                    if status.is_success() {
                        let value = resp.json::<T>().map_err(|e| CallFailure {
                            attempts: attempt,
                            message: format!("malformed reply: {e}"),
                        })?;
                        return Ok(Reply {
                            value,
                            attempts: attempt,
                            latency: started.elapsed(),
                        });
                    }
                    last = format!("HTTP {status}");
                    if status.is_client_error() && status.as_u16() != 429 {
                        return Err(CallFailure {
                            attempts: attempt,
                            message: last,
                        });
                    }
                }
                Err(e) => last = e.to_string(),
            }
            log::warn!(
                "{} attempt {attempt}/{attempts} failed: {last}",
                self.endpoint.url
            );
        }
        Err(CallFailure {
            attempts,
            message: last,
        })
    }
}
