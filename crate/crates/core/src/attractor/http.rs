use std::collections::BTreeMap;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{Judge, JudgeError};

/// Environment variable that overrides the configured endpoint.
pub const ENDPOINT_ENV: &str = "GOALPLAN_JUDGE_ENDPOINT";

#[derive(Serialize)]
struct Request<'a> {
    source: &'a str,
    targets: &'a [String],
    context: &'a str,
}

#[derive(Deserialize)]
struct Reply {
    scores: BTreeMap<String, f64>,
}

/// Judge served over HTTP: POSTs `{source, targets, context}` and expects
/// `{"scores": {target: number}}` back. Plain `http://` endpoints only.
pub struct HttpJudge {
    endpoint: String,
    agent: ureq::Agent,
}

impl HttpJudge {
    pub fn new(endpoint: &str, timeout: Duration) -> Self {
        let agent: ureq::Agent =
            ureq::Agent::config_builder().timeout_global(Some(timeout)).http_status_as_error(true).build().into();
        HttpJudge { endpoint: endpoint.to_string(), agent }
    }

    /// Uses the environment override when set, otherwise `endpoint`.
    pub fn from_env_or(endpoint: Option<&str>, timeout: Duration) -> Result<Self, JudgeError> {
        match std::env::var(ENDPOINT_ENV).ok().or(endpoint.map(str::to_string)) {
            Some(e) if !e.is_empty() => Ok(HttpJudge::new(&e, timeout)),
            _ => Err(JudgeError::Config(format!("no judge endpoint (set {ENDPOINT_ENV})"))),
        }
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }
}

impl Judge for HttpJudge {
    fn score(&self, source: &str, targets: &[String], context: &str) -> Result<BTreeMap<String, f64>, JudgeError> {
        let body = Request { source, targets, context };
        let resp =
            self.agent.post(&self.endpoint).send_json(&body).map_err(|e| JudgeError::Unavailable(e.to_string()))?;
        let reply: Reply = resp.into_body().read_json().map_err(|e| JudgeError::Malformed(e.to_string()))?;
        Ok(reply.scores)
    }
}
