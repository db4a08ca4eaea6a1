//! HTTP client for remote proposer/verifier backends, plus adapters that
//! plug remote models into the core search machinery.
//!
//! Protocol (JSON over POST):
//!
//! - `/propose` request `{question, context, temperature, max_steps}` →
//!   response `{steps, final_answer}`
//! - `/score` request `{question, steps}` → response `{scores}` with one
//!   value in `[0, 1]` per step
//!
//! Requests retry with exponential backoff and carry an `Idempotency-Key`
//! header that is stable across retries of the same logical request. The
//! bearer token, if any, comes from an environment variable named in config.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::Deserialize;
use sha2::{Digest, Sha256};
use ttc_core::proposer::{Capability, ProposeError, Proposer, RevisionContext};
use ttc_core::rng::RandomStream;
use ttc_core::types::{AnswerId, FinalAnswer, PartialSolution, Question, Solution, Step};
use ttc_core::verifier::{ScoreError, StepScores, Verifier, VerifierMode};

use crate::config::RemoteConfig;

/// Steps requested from the backend when the task itself imposes no depth.
pub const DEFAULT_REMOTE_MAX_STEPS: u64 = 40;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RemoteError {
    #[error("endpoint unreachable after {attempts} attempts")]
    Timeout { attempts: u32 },
    #[error("server returned status {status}")]
    Http { status: u16 },
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error("transport failure: {0}")]
    Transport(String),
}

#[derive(Debug, Clone)]
pub struct RemoteModelEndpoint {
    pub base_url: String,
    pub timeout: Duration,
    pub max_retries: u32,
    pub auth_token: Option<String>,
    pub backoff: Duration,
}

impl RemoteModelEndpoint {
    /// Build from config, reading the bearer token from the named
    /// environment variable (unset or empty means no auth header).
    pub fn from_config(config: &RemoteConfig) -> Self {
        let auth_token = config
            .auth_token_env
            .as_deref()
            .and_then(|name| std::env::var(name).ok())
            .filter(|token| !token.is_empty());
        RemoteModelEndpoint {
            base_url: config.base_url.clone(),
            timeout: Duration::from_millis(config.timeout_ms),
            max_retries: config.max_retries,
            auth_token,
            backoff: Duration::from_millis(50),
        }
    }
}

static REQUEST_COUNTER: AtomicU64 = AtomicU64::new(0);

/// A blocking HTTP client bound to one endpoint.
pub struct RemoteClient {
    endpoint: RemoteModelEndpoint,
    http: reqwest::blocking::Client,
}

impl RemoteClient {
    pub fn new(endpoint: RemoteModelEndpoint) -> Result<Self, RemoteError> {
        let http = reqwest::blocking::Client::builder()
            .timeout(endpoint.timeout)
            .build()
            .map_err(|e| RemoteError::Transport(e.to_string()))?;
        Ok(RemoteClient { endpoint, http })
    }

    fn post(&self, path: &str, body: &serde_json::Value) -> Result<Vec<u8>, RemoteError> {
        let url = format!("{}/{}", self.endpoint.base_url.trim_end_matches('/'), path);
        let payload = serde_json::to_vec(body).expect("request body serializes");
        // One key per logical request, reused across its retries, so the
        // server can deduplicate replays.
        let key = idempotency_key(&payload);
        let mut last_unreachable = true;
        let mut last_status = 0u16;
        let attempts = self.endpoint.max_retries + 1;
        for attempt in 0..attempts {
            if attempt > 0 {
                std::thread::sleep(self.endpoint.backoff * (1 << (attempt - 1).min(6)));
            }
            let mut request = self
                .http
                .post(&url)
                .header("Content-Type", "application/json")
                .header("Idempotency-Key", &key)
                .body(payload.clone());
            if let Some(token) = &self.endpoint.auth_token {
                request = request.header("Authorization", format!("Bearer {token}"));
            }
            match request.send() {
                Ok(response) => {
                    let status = response.status();
                    if status.is_success() {
                        return response
                            .bytes()
                            .map(|b| b.to_vec())
                            .map_err(|e| RemoteError::Transport(e.to_string()));
                    }
                    if status.is_server_error() || status.as_u16() == 429 {
                        last_unreachable = false;
                        last_status = status.as_u16();
                        continue;
                    }
                    return Err(RemoteError::Http {
                        status: status.as_u16(),
                    });
                }
                Err(e) if e.is_timeout() || e.is_connect() => {
                    last_unreachable = true;
                    continue;
                }
                Err(e) => return Err(RemoteError::Transport(e.to_string())),
            }
        }
        if last_unreachable {
            Err(RemoteError::Timeout { attempts })
        } else {
            Err(RemoteError::Http {
                status: last_status,
            })
        }
    }
}

fn idempotency_key(payload: &[u8]) -> String {
    let counter = REQUEST_COUNTER.fetch_add(1, Ordering::Relaxed);
    let digest = Sha256::digest(payload);
    let prefix: String = digest[..8].iter().map(|b| format!("{b:02x}")).collect();
    format!("ttc-{prefix}-{counter}")
}

/// Collapse runs of whitespace and trim, the normalization used before
/// comparing answer text.
pub fn normalize_answer(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Grades remote answer text against the dataset's expected answers, and
/// interns every distinct wrong answer to a stable numeric label so core
/// selection (which votes over answer labels) works unchanged.
pub struct AnswerBook {
    truths: BTreeMap<String, String>,
    interned: Mutex<BTreeMap<(String, String), AnswerId>>,
}

impl AnswerBook {
    pub fn new(answer_key: &BTreeMap<String, String>) -> Self {
        AnswerBook {
            truths: answer_key
                .iter()
                .map(|(id, answer)| (id.clone(), normalize_answer(answer)))
                .collect(),
            interned: Mutex::new(BTreeMap::new()),
        }
    }

    /// Map answer text to a label: the expected answer (exact match after
    /// whitespace normalization) grades as the reserved correct label, blank
    /// text is invalid, and each other distinct text gets the next wrong
    /// label for its question.
    pub fn grade(&self, question_id: &str, text: &str) -> FinalAnswer {
        let normalized = normalize_answer(text);
        if normalized.is_empty() {
            return FinalAnswer::Invalid;
        }
        if self.truths.get(question_id).map(String::as_str) == Some(normalized.as_str()) {
            return FinalAnswer::Answer(AnswerId::CORRECT);
        }
        let mut interned = self.interned.lock().expect("interner lock");
        let next = AnswerId(
            1 + interned
                .iter()
                .filter(|((id, _), _)| id == question_id)
                .count() as u64,
        );
        let label = *interned
            .entry((question_id.to_string(), normalized))
            .or_insert(next);
        FinalAnswer::Answer(label)
    }
}

#[derive(Deserialize)]
struct ProposeResponse {
    steps: Vec<String>,
    final_answer: String,
}

#[derive(Deserialize)]
struct ScoreResponse {
    scores: Vec<f64>,
}

/// Ask the backend for a solution, optionally conditioned on prior attempts.
pub fn remote_propose(
    client: &RemoteClient,
    question: &Question,
    context: Option<&RevisionContext>,
    temperature: f64,
    max_steps: u64,
    answers: &AnswerBook,
) -> Result<Solution, RemoteError> {
    let context_texts: Vec<String> = context
        .map(|c| c.attempts().iter().map(Solution::joined_text).collect())
        .unwrap_or_default();
    let body = serde_json::json!({
        "question": question.prompt(),
        "context": context_texts,
        "temperature": temperature,
        "max_steps": max_steps,
    });
    let raw = client.post("propose", &body)?;
    let response: ProposeResponse =
        serde_json::from_slice(&raw).map_err(|e| RemoteError::Malformed(e.to_string()))?;
    if response.steps.is_empty() {
        return Err(RemoteError::Malformed("response contained no steps".into()));
    }
    Ok(Solution {
        steps: response.steps.into_iter().map(Step::external).collect(),
        final_answer: answers.grade(&question.id, &response.final_answer),
        sample_success_prob: None,
    })
}

/// Ask the backend to score each step of a solution prefix.
pub fn remote_score(
    client: &RemoteClient,
    question: &Question,
    steps: &[String],
) -> Result<StepScores, RemoteError> {
    let body = serde_json::json!({
        "question": question.prompt(),
        "steps": steps,
    });
    let raw = client.post("score", &body)?;
    let response: ScoreResponse =
        serde_json::from_slice(&raw).map_err(|e| RemoteError::Malformed(e.to_string()))?;
    if response.scores.len() != steps.len() {
        return Err(RemoteError::Malformed(format!(
            "expected {} scores, got {}",
            steps.len(),
            response.scores.len()
        )));
    }
    if let Some(bad) = response
        .scores
        .iter()
        .find(|s| !s.is_finite() || !(0.0..=1.0).contains(*s))
    {
        return Err(RemoteError::Malformed(format!(
            "score {bad} outside [0, 1]"
        )));
    }
    Ok(StepScores {
        values: response.scores,
    })
}

/// A [`Proposer`] backed by the remote endpoint. Supports full sampling and
/// revisions; step-level sampling (beam search) is not part of the remote
/// protocol.
pub struct RemoteProposer {
    client: RemoteClient,
    answers: AnswerBook,
    pub max_steps: u64,
    pub temperature: f64,
}

impl RemoteProposer {
    pub fn new(client: RemoteClient, answers: AnswerBook) -> Self {
        RemoteProposer {
            client,
            answers,
            max_steps: DEFAULT_REMOTE_MAX_STEPS,
            temperature: 1.0,
        }
    }
}

impl Proposer for RemoteProposer {
    fn supports(&self, capability: Capability) -> bool {
        matches!(
            capability,
            Capability::SampleFull | Capability::SampleRevision
        )
    }

    fn sample_full(
        &self,
        question: &Question,
        _rng: &mut RandomStream,
    ) -> Result<Solution, ProposeError> {
        remote_propose(
            &self.client,
            question,
            None,
            self.temperature,
            self.max_steps,
            &self.answers,
        )
        .map_err(|e| ProposeError::Backend(e.to_string()))
    }

    fn sample_revision(
        &self,
        question: &Question,
        context: &RevisionContext,
        _rng: &mut RandomStream,
    ) -> Result<Solution, ProposeError> {
        remote_propose(
            &self.client,
            question,
            Some(context),
            self.temperature,
            self.max_steps,
            &self.answers,
        )
        .map_err(|e| ProposeError::Backend(e.to_string()))
    }
}

/// A process-style [`Verifier`] backed by the remote `/score` route.
pub struct RemoteVerifier {
    client: RemoteClient,
}

impl RemoteVerifier {
    pub fn new(client: RemoteClient) -> Self {
        RemoteVerifier { client }
    }

    fn score_texts(&self, question: &Question, steps: &[Step]) -> Result<StepScores, ScoreError> {
        let texts: Vec<String> = steps.iter().map(|s| s.text.clone()).collect();
        remote_score(&self.client, question, &texts)
            .map_err(|e| ScoreError::Backend(e.to_string()))
    }
}

impl Verifier for RemoteVerifier {
    fn mode(&self) -> VerifierMode {
        VerifierMode::Process
    }

    fn score_solution(
        &self,
        question: &Question,
        solution: &Solution,
    ) -> Result<StepScores, ScoreError> {
        self.score_texts(question, &solution.steps)
    }

    fn score_prefix(
        &self,
        question: &Question,
        prefix: &PartialSolution,
    ) -> Result<StepScores, ScoreError> {
        self.score_texts(question, &prefix.steps)
    }
}
