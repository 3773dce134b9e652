//! JSON-over-HTTP POST with bounded retries and exponential backoff.

use std::time::Duration;

use serde::Serialize;

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum HttpError {
    #[error("request timed out after {attempts} attempt(s)")]
    Timeout { attempts: u32 },
    #[error("transport failure after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("authentication rejected (HTTP {0})")]
    Auth(u16),
    #[error("HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("response body is not the expected JSON: {0}")]
    Decode(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    /// Retries after the first attempt.
    pub max_retries: u32,
    /// Delay before the first retry; doubles on each further retry.
    pub backoff_base: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_retries: 2,
            backoff_base: Duration::from_millis(500),
        }
    }
}

impl RetryPolicy {
    pub fn delay_before_retry(&self, retry: u32) -> Duration {
        self.backoff_base.saturating_mul(1u32 << retry.min(16))
    }
}

enum Attempt {
    Retryable { timeout: bool, message: String },
    Fatal(HttpError),
}

fn is_retryable_status(status: u16) -> bool {
    matches!(status, 408 | 429 | 500 | 502 | 503 | 504)
}

async fn attempt<B: Serialize + ?Sized>(
    client: &reqwest::Client,
    url: &str,
    bearer: Option<&str>,
    body: &B,
) -> Result<serde_json::Value, Attempt> {
    let mut req = client.post(url).json(body);
    if let Some(token) = bearer {
        req = req.bearer_auth(token);
    }
    let resp = req.send().await.map_err(|e| Attempt::Retryable {
        timeout: e.is_timeout(),
        message: e.to_string(),
    })?;
    let status = resp.status().as_u16();
    if status == 401 || status == 403 {
        return Err(Attempt::Fatal(HttpError::Auth(status)));
    }
    if is_retryable_status(status) {
        return Err(Attempt::Retryable {
            timeout: status == 408,
            message: format!("HTTP {status}"),
        });
    }
    let text = resp.text().await.map_err(|e| Attempt::Retryable {
        timeout: e.is_timeout(),
        message: e.to_string(),
    })?;
    if !(200..300).contains(&status) {
        return Err(Attempt::Fatal(HttpError::Status { status, body: text }));
    }
    serde_json::from_str(&text).map_err(|e| Attempt::Fatal(HttpError::Decode(e.to_string())))
}

/// POSTs `body` as JSON and returns the decoded JSON response.
///
/// Only transport-level failures (connection errors, timeouts, 408/429/5xx)
/// are retried, at most `policy.max_retries` times. Auth rejections and
/// other HTTP errors return immediately.
pub async fn post_json<B: Serialize + ?Sized>(
    client: &reqwest::Client,
    url: &str,
    bearer: Option<&str>,
    body: &B,
    policy: RetryPolicy,
) -> Result<serde_json::Value, HttpError> {
    let mut attempts = 0;
    loop {
        attempts += 1;
        match attempt(client, url, bearer, body).await {
            Ok(v) => return Ok(v),
            Err(Attempt::Fatal(e)) => return Err(e),
            Err(Attempt::Retryable { timeout, message }) => {
                if attempts > policy.max_retries {
                    return Err(if timeout {
                        HttpError::Timeout { attempts }
                    } else {
                        HttpError::Transport { attempts, message }
                    });
                }
                let delay = policy.delay_before_retry(attempts - 1);
                tracing::warn!(url, attempts, ?delay, %message, "retrying request");
                tokio::time::sleep(delay).await;
            }
        }
    }
}
