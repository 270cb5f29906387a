use std::sync::Arc;
use std::time::Duration;

use ureq::Agent;

use super::{CausalScorer, InfillQuery, InfillScorer, LogDist, ScoreError, TokenId, Vocab};
use crate::critics::MaskedView;
use crate::num::Real;

/// JSON bodies of the model-shim protocol. Log-probabilities are natural
/// logs; every response carries exactly one item per request item.
pub mod wire {
    use serde::{Deserialize, Serialize};

    use crate::critics::AnswerSpan;

    pub const SCHEMA: u32 = 1;

    #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
    pub struct Health {
        pub status: String,
        pub model: String,
        pub version: String,
    }

    #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
    pub struct VocabResponse {
        pub schema: u32,
        pub tokens: Vec<String>,
    }

    #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
    pub struct NextRequest {
        pub schema: u32,
        /// Truncate each distribution to the `k` most likely tokens.
        #[serde(skip_serializing_if = "Option::is_none", default)]
        pub top_k: Option<usize>,
        pub items: Vec<NextItem>,
    }

    #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
    pub struct NextItem {
        pub context: Vec<String>,
    }

    #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
    pub struct TokenLogprob {
        pub token: String,
        pub logprob: f64,
    }

    #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
    pub struct NextResult {
        pub entries: Vec<TokenLogprob>,
        /// Probability mass of the tokens left out of `entries`.
        pub tail_mass: f64,
    }

    #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
    pub struct NextResponse {
        pub schema: u32,
        pub model: String,
        pub version: String,
        pub items: Vec<NextResult>,
    }

    #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
    pub struct SeqRequest {
        pub schema: u32,
        pub items: Vec<SeqItem>,
    }

    #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
    pub struct SeqItem {
        pub context: Vec<String>,
        pub continuation: Vec<String>,
    }

    #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
    pub struct InfillRequest {
        pub schema: u32,
        pub items: Vec<InfillItem>,
    }

    #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
    pub struct InfillItem {
        /// Visible tokens with `<mask>` at every gap.
        pub tokens: Vec<String>,
        pub answers: Vec<AnswerSpan>,
        pub condition: Option<Vec<String>>,
    }

    #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
    pub struct LogprobResult {
        pub logprob: f64,
    }

    #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
    pub struct LogprobResponse {
        pub schema: u32,
        pub model: String,
        pub version: String,
        pub items: Vec<LogprobResult>,
    }

    #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
    pub struct ErrorBody {
        pub error: String,
        pub message: String,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub initial_backoff: Duration,
    pub max_backoff: Duration,
    pub timeout: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 5,
            initial_backoff: Duration::from_millis(100),
            max_backoff: Duration::from_secs(5),
            timeout: Duration::from_secs(60),
        }
    }
}

impl RetryPolicy {
    fn backoff(&self, attempt: u32) -> Duration {
        let factor = 1u32.checked_shl(attempt).unwrap_or(u32::MAX);
        self.initial_backoff.saturating_mul(factor).min(self.max_backoff)
    }
}

/// Client for a model shim. Each contract call is one HTTP request.
pub struct RemoteScorer {
    base: String,
    auth: Option<String>,
    agent: Agent,
    retry: RetryPolicy,
    vocab: Arc<Vocab>,
    top_k: Option<usize>,
}

enum Attempt {
    Retry(String),
    Fail(ScoreError),
}

impl RemoteScorer {
    /// Connects, checks health and fetches the vocabulary.
    pub fn connect(endpoint: &str, auth: Option<String>, retry: RetryPolicy) -> Result<Self, ScoreError> {
        if retry.max_attempts == 0 {
            return Err(ScoreError::InvalidConfig("max_attempts must be at least 1".into()));
        }
        let config = Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(retry.timeout))
            .build();
        let mut client = Self {
            base: endpoint.trim_end_matches('/').to_string(),
            auth,
            agent: Agent::new_with_config(config),
            retry,
            vocab: Arc::new(Vocab::from_words(std::iter::empty::<&str>())),
            top_k: None,
        };
        let health: wire::Health = client.exchange("/v1/health", None)?;
        if health.status != "ok" {
            return Err(ScoreError::Protocol(format!("shim reports status `{}`", health.status)));
        }
        let vocab: wire::VocabResponse = client.exchange("/v1/vocab", None)?;
        check_schema(vocab.schema)?;
        client.vocab = Arc::new(Vocab::from_ordered(&vocab.tokens)?);
        Ok(client)
    }

    pub fn with_top_k(mut self, k: Option<usize>) -> Self {
        self.top_k = k;
        self
    }

    fn exchange<T: serde::de::DeserializeOwned>(&self, path: &str, body: Option<String>) -> Result<T, ScoreError> {
        let url = format!("{}{}", self.base, path);
        let mut last = String::new();
        for attempt in 0..self.retry.max_attempts {
            if attempt > 0 {
                std::thread::sleep(self.retry.backoff(attempt - 1));
            }
            match self.attempt(&url, body.as_deref()) {
                Ok(text) => {
                    return serde_json::from_str(&text)
                        .map_err(|e| ScoreError::Protocol(format!("{path}: malformed response: {e}")));
                }
                Err(Attempt::Fail(e)) => return Err(e),
                Err(Attempt::Retry(msg)) => {
                    log::warn!("{path}: attempt {} failed: {msg}", attempt + 1);
                    last = msg;
                }
            }
        }
        Err(ScoreError::Transport(format!(
            "{path}: gave up after {} attempts: {last}",
            self.retry.max_attempts
        )))
    }

    fn attempt(&self, url: &str, body: Option<&str>) -> Result<String, Attempt> {
        let result = match body {
            Some(b) => {
                let mut req = self.agent.post(url).header("content-type", "application/json");
                if let Some(token) = &self.auth {
                    req = req.header("authorization", format!("Bearer {token}"));
                }
                req.send(b)
            }
            None => {
                let mut req = self.agent.get(url);
                if let Some(token) = &self.auth {
                    req = req.header("authorization", format!("Bearer {token}"));
                }
                req.call()
            }
        };
        let mut resp = match result {
            Ok(r) => r,
            Err(ureq::Error::BadUri(u)) => return Err(Attempt::Fail(ScoreError::InvalidConfig(format!("bad endpoint {u}")))),
            Err(e) => return Err(Attempt::Retry(e.to_string())),
        };
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().map_err(|e| Attempt::Retry(e.to_string()))?;
        match status {
            200..=299 => Ok(text),
            429 | 500..=599 => Err(Attempt::Retry(format!("status {status}: {text}"))),
            _ => Err(Attempt::Fail(ScoreError::Protocol(format!("status {status}: {text}")))),
        }
    }

    fn post<Req: serde::Serialize, Resp: serde::de::DeserializeOwned>(&self, path: &str, req: &Req) -> Result<Resp, ScoreError> {
        let body = serde_json::to_string(req).map_err(|e| ScoreError::Protocol(e.to_string()))?;
        self.exchange(path, Some(body))
    }

    fn decode(&self, ids: &[TokenId]) -> Vec<String> {
        ids.iter().map(|&t| self.vocab.token(t).to_string()).collect()
    }

    fn to_dist<F: Real>(&self, item: wire::NextResult) -> Result<LogDist<F>, ScoreError> {
        if !(item.tail_mass.is_finite() && (0.0..=1.0).contains(&item.tail_mass)) {
            return Err(ScoreError::Data(format!("tail mass {} outside [0, 1]", item.tail_mass)));
        }
        let mut logp: Vec<Option<f64>> = vec![None; self.vocab.len()];
        for e in &item.entries {
            check_logprob(e.logprob)?;
            let id = self
                .vocab
                .get(&e.token)
                .ok_or_else(|| ScoreError::Data(format!("token `{}` outside the vocabulary", e.token)))?;
            if logp[id as usize].replace(e.logprob).is_some() {
                return Err(ScoreError::Data(format!("token `{}` listed twice", e.token)));
            }
        }
        let missing = logp.iter().filter(|l| l.is_none()).count();
        let fill = if missing == 0 {
            0.0
        } else if item.tail_mass > 0.0 {
            (item.tail_mass / missing as f64).ln()
        } else {
            return Err(ScoreError::Data(format!("{missing} tokens missing with zero tail mass")));
        };
        let values: Vec<F> = logp.into_iter().map(|l| F::lit(l.unwrap_or(fill))).collect();
        let dist = LogDist::new(self.vocab.clone(), values)?;
        let mass = dist.total_mass().to_f64_lossy();
        if (mass - 1.0).abs() > 1e-6 {
            return Err(ScoreError::Data(format!("distribution sums to {mass}")));
        }
        Ok(dist)
    }

    fn logprobs<F: Real>(&self, resp: wire::LogprobResponse, expected: usize) -> Result<Vec<F>, ScoreError> {
        check_schema(resp.schema)?;
        if resp.items.len() != expected {
            return Err(ScoreError::Protocol(format!(
                "expected {expected} items, got {}",
                resp.items.len()
            )));
        }
        resp.items
            .into_iter()
            .map(|r| {
                check_logprob(r.logprob)?;
                Ok(F::lit(r.logprob))
            })
            .collect()
    }
}

fn check_schema(schema: u32) -> Result<(), ScoreError> {
    if schema != wire::SCHEMA {
        return Err(ScoreError::Protocol(format!("unsupported schema {schema}")));
    }
    Ok(())
}

fn check_logprob(lp: f64) -> Result<(), ScoreError> {
    if !lp.is_finite() {
        return Err(ScoreError::Data(format!("non-finite log-probability {lp}")));
    }
    if lp > 0.0 {
        return Err(ScoreError::Data(format!("positive log-probability {lp}")));
    }
    Ok(())
}

impl<F: Real> CausalScorer<F> for RemoteScorer {
    fn vocab(&self) -> &Arc<Vocab> {
        &self.vocab
    }

    fn next_token_distribution(&self, context: &[TokenId]) -> Result<LogDist<F>, ScoreError> {
        let req = wire::NextRequest {
            schema: wire::SCHEMA,
            top_k: self.top_k,
            items: vec![wire::NextItem { context: self.decode(context) }],
        };
        let resp: wire::NextResponse = self.post("/v1/causal/next", &req)?;
        check_schema(resp.schema)?;
        let mut items = resp.items;
        if items.len() != 1 {
            return Err(ScoreError::Protocol(format!("expected 1 item, got {}", items.len())));
        }
        self.to_dist(items.pop().expect("one item"))
    }

    fn sequence_logprob(&self, context: &[TokenId], continuation: &[TokenId]) -> Result<F, ScoreError> {
        if continuation.is_empty() {
            return Err(ScoreError::EmptyContinuation);
        }
        let req = wire::SeqRequest {
            schema: wire::SCHEMA,
            items: vec![wire::SeqItem { context: self.decode(context), continuation: self.decode(continuation) }],
        };
        let resp: wire::LogprobResponse = self.post("/v1/causal/seq", &req)?;
        Ok(self.logprobs::<F>(resp, 1)?[0])
    }
}

impl<F: Real> InfillScorer<F> for RemoteScorer {
    fn infill_logprob(&self, masked: &MaskedView, condition: Option<&[String]>) -> Result<F, ScoreError> {
        Ok(self.infill_logprob_batch(&[InfillQuery { masked, condition }])?[0])
    }

    fn infill_logprob_batch(&self, queries: &[InfillQuery<'_>]) -> Result<Vec<F>, ScoreError> {
        if queries.iter().any(|q| q.masked.spans().is_empty()) {
            return Err(ScoreError::NoMaskedSpans);
        }
        let req = wire::InfillRequest {
            schema: wire::SCHEMA,
            items: queries
                .iter()
                .map(|q| wire::InfillItem {
                    tokens: q.masked.slots(),
                    answers: q.masked.spans().to_vec(),
                    condition: q.condition.map(<[String]>::to_vec),
                })
                .collect(),
        };
        let resp: wire::LogprobResponse = self.post("/v1/infill", &req)?;
        self.logprobs(resp, queries.len())
    }
}
