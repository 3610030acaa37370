//! Masked queries and substitution candidates from a masked language model.
//!
//! Every complex span of a sentence is replaced by a single mask token and the
//! model sees the original and the masked sentence together. The model itself
//! lives behind [`MaskedLmProvider`]; this crate ships an HTTP client for the
//! inference sidecar and a fixture provider that replays recorded responses.
//!
//! Wire protocol:
//!
//! ```text
//! POST /v1/fill  {"original": S, "masked": S', "top_n": n}
//!             -> {"slots": [[{"token": t, "prob": p}, ...], ...]}
//! POST /v1/loss  {"sentence": text, "position": i}
//!             -> {"loss": x}
//! ```
//!
//! `position` counts word tokens (see [`crate::text::tokenize`]), ignoring
//! punctuation and numbers.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cwi::TokenSpan;
use crate::error::{read_to_string, Error, Result};
use crate::text;

pub const MASK_TOKEN: &str = "[MASK]";

/// Candidates with probability below this are dropped.
pub const PROBABILITY_FLOOR: f64 = 1e-8;

pub const DEFAULT_TOP_N: usize = 76;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FillRequest {
    pub original: String,
    pub masked: String,
    pub top_n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub token: String,
    pub prob: f64,
}

impl Candidate {
    pub fn new(token: impl Into<String>, prob: f64) -> Self {
        Candidate {
            token: token.into(),
            prob,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FillResponse {
    pub slots: Vec<Vec<Candidate>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossRequest {
    pub sentence: String,
    pub position: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossResponse {
    pub loss: f64,
}

#[derive(Debug, Error)]
pub enum ProviderError {
    /// The provider could not be reached or failed; the request may succeed later.
    #[error("provider transport error: {0}")]
    Transport(String),
    /// The provider answered with something that violates the protocol.
    #[error("provider protocol error: {0}")]
    Protocol(String),
    #[error("no fixture recorded for {0}")]
    MissingFixture(String),
}

impl ProviderError {
    pub fn is_retriable(&self) -> bool {
        matches!(self, ProviderError::Transport(_))
    }
}

/// Source of fill-mask candidates and masked-token losses.
pub trait MaskedLmProvider: Send + Sync {
    fn fill(&self, request: &FillRequest) -> Result<FillResponse, ProviderError>;

    /// Cross-entropy of the true word at word index `position` when it is masked.
    fn loss(&self, request: &LossRequest) -> Result<f64, ProviderError>;
}

impl<P: MaskedLmProvider + ?Sized> MaskedLmProvider for &P {
    fn fill(&self, request: &FillRequest) -> Result<FillResponse, ProviderError> {
        (**self).fill(request)
    }

    fn loss(&self, request: &LossRequest) -> Result<f64, ProviderError> {
        (**self).loss(request)
    }
}

impl<P: MaskedLmProvider + ?Sized> MaskedLmProvider for Box<P> {
    fn fill(&self, request: &FillRequest) -> Result<FillResponse, ProviderError> {
        (**self).fill(request)
    }

    fn loss(&self, request: &LossRequest) -> Result<f64, ProviderError> {
        (**self).loss(request)
    }
}

/// One masked span: token span plus its byte ranges in both sentences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskSlot {
    pub span: TokenSpan,
    /// Byte range of the span in the original sentence.
    pub original_range: (usize, usize),
    /// Byte offset of the mask token in the masked sentence.
    pub masked_offset: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskedQuery {
    pub original: String,
    pub masked: String,
    pub slots: Vec<MaskSlot>,
}

impl MaskedQuery {
    pub fn request(&self, top_n: usize) -> FillRequest {
        FillRequest {
            original: self.original.clone(),
            masked: self.masked.clone(),
            top_n,
        }
    }

    /// Restores the original surface of every slot.
    pub fn unmask(&self) -> String {
        let mut out = String::with_capacity(self.original.len());
        let mut cursor = 0;
        for slot in &self.slots {
            out.push_str(&self.masked[cursor..slot.masked_offset]);
            out.push_str(&self.original[slot.original_range.0..slot.original_range.1]);
            cursor = slot.masked_offset + MASK_TOKEN.len();
        }
        out.push_str(&self.masked[cursor..]);
        out
    }
}

/// Masks every span at once. Spans index the tokens of
/// [`text::tokenize`]`(sentence)` and must be disjoint and sorted.
pub fn build_masked_query(sentence: &str, spans: &[TokenSpan]) -> Result<MaskedQuery> {
    let tokens = text::tokenize(sentence);
    let mut masked = String::with_capacity(sentence.len());
    let mut slots = Vec::with_capacity(spans.len());
    let mut cursor = 0;
    let mut prev_end = 0;
    for span in spans {
        if span.start >= span.end || span.end > tokens.len() || span.start < prev_end {
            return Err(Error::Domain(format!(
                "span {}..{} is empty, out of bounds or overlapping",
                span.start, span.end
            )));
        }
        prev_end = span.end;
        let (b0, b1) = (tokens[span.start].start, tokens[span.end - 1].end);
        masked.push_str(&sentence[cursor..b0]);
        slots.push(MaskSlot {
            span: span.clone(),
            original_range: (b0, b1),
            masked_offset: masked.len(),
        });
        masked.push_str(MASK_TOKEN);
        cursor = b1;
    }
    masked.push_str(&sentence[cursor..]);
    Ok(MaskedQuery {
        original: sentence.to_string(),
        masked,
        slots,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub slots: Vec<Vec<Candidate>>,
    pub n_requested: usize,
}

impl CandidateSet {
    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }
}

/// Descending probability, ties broken by token.
pub fn candidate_order(a: &Candidate, b: &Candidate) -> Ordering {
    b.prob
        .partial_cmp(&a.prob)
        .unwrap_or(Ordering::Equal)
        .then_with(|| a.token.cmp(&b.token))
}

/// Queries the provider and keeps the top `n` candidates of every slot.
pub fn generate_candidates(
    provider: &dyn MaskedLmProvider,
    query: &MaskedQuery,
    n: usize,
) -> Result<CandidateSet> {
    if n == 0 {
        return Err(Error::Config("candidate count must be at least 1".into()));
    }
    if query.slots.is_empty() {
        return Ok(CandidateSet {
            slots: Vec::new(),
            n_requested: n,
        });
    }
    let response = provider.fill(&query.request(n))?;
    if response.slots.len() != query.slots.len() {
        return Err(ProviderError::Protocol(format!(
            "expected {} slots, got {}",
            query.slots.len(),
            response.slots.len()
        ))
        .into());
    }
    let slots = response
        .slots
        .into_iter()
        .map(|mut cands| {
            cands.retain(|c| c.prob.is_finite() && c.prob >= PROBABILITY_FLOOR && c.prob <= 1.0);
            cands.sort_by(candidate_order);
            cands.truncate(n);
            cands
        })
        .collect();
    Ok(CandidateSet {
        slots,
        n_requested: n,
    })
}

/// A recorded request/response pair, as written by the sidecar's record mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "endpoint")]
pub enum FixtureRecord {
    #[serde(rename = "/v1/fill")]
    Fill {
        request: FillRequest,
        response: FillResponse,
    },
    #[serde(rename = "/v1/loss")]
    Loss {
        request: LossRequest,
        response: LossResponse,
    },
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
struct FixtureDefaults {
    default_loss: Option<f64>,
}

/// In-process provider answering from recorded fixtures. Fill responses are
/// keyed by masked sentence, losses by `(sentence, position)`.
#[derive(Debug, Clone, Default)]
pub struct FixtureProvider {
    fills: HashMap<String, Vec<Vec<Candidate>>>,
    losses: HashMap<(String, usize), f64>,
    default_loss: Option<f64>,
}

impl FixtureProvider {
    pub fn new() -> Self {
        Self::default()
    }

    /// Loss returned for positions without a recording.
    pub fn with_default_loss(mut self, loss: f64) -> Self {
        self.default_loss = Some(loss);
        self
    }

    pub fn insert_fill(&mut self, masked: impl Into<String>, slots: Vec<Vec<Candidate>>) {
        self.fills.insert(masked.into(), slots);
    }

    pub fn insert_loss(&mut self, sentence: impl Into<String>, position: usize, loss: f64) {
        self.losses.insert((sentence.into(), position), loss);
    }

    pub fn insert_record(&mut self, record: FixtureRecord) {
        match record {
            FixtureRecord::Fill { request, response } => {
                self.insert_fill(request.masked, response.slots)
            }
            FixtureRecord::Loss { request, response } => {
                self.insert_loss(request.sentence, request.position, response.loss)
            }
        }
    }

    /// Loads every `*.json` (one record or an array) and `*.jsonl` file in
    /// `dir`. An optional `defaults.json` may set `default_loss`.
    pub fn load_dir(dir: &Path) -> Result<Self> {
        let mut provider = FixtureProvider::new();
        let mut paths: Vec<_> = std::fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .collect();
        paths.sort();
        for path in paths {
            let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
            let content = match ext {
                "json" | "jsonl" => read_to_string(&path)?,
                _ => continue,
            };
            if path.file_name().is_some_and(|n| n == "defaults.json") {
                let d: FixtureDefaults = serde_json::from_str(&content)
                    .map_err(|e| Error::parse(&path, e.line(), e.to_string()))?;
                provider.default_loss = d.default_loss;
                continue;
            }
            if ext == "jsonl" {
                for (i, line) in content
                    .lines()
                    .enumerate()
                    .filter(|(_, l)| !l.trim().is_empty())
                {
                    let rec: FixtureRecord = serde_json::from_str(line)
                        .map_err(|e| Error::parse(&path, i + 1, e.to_string()))?;
                    provider.insert_record(rec);
                }
            } else {
                let value: serde_json::Value = serde_json::from_str(&content)
                    .map_err(|e| Error::parse(&path, e.line(), e.to_string()))?;
                let records: Vec<FixtureRecord> = if value.is_array() {
                    serde_json::from_value(value)
                } else {
                    serde_json::from_value(value).map(|r| vec![r])
                }
                .map_err(|e| Error::parse(&path, 0, e.to_string()))?;
                for rec in records {
                    provider.insert_record(rec);
                }
            }
        }
        Ok(provider)
    }
}

impl MaskedLmProvider for FixtureProvider {
    fn fill(&self, request: &FillRequest) -> Result<FillResponse, ProviderError> {
        let slots = self
            .fills
            .get(&request.masked)
            .ok_or_else(|| ProviderError::MissingFixture(format!("fill {:?}", request.masked)))?;
        Ok(FillResponse {
            slots: slots
                .iter()
                .map(|s| s.iter().take(request.top_n).cloned().collect())
                .collect(),
        })
    }

    fn loss(&self, request: &LossRequest) -> Result<f64, ProviderError> {
        self.losses
            .get(&(request.sentence.clone(), request.position))
            .copied()
            .or(self.default_loss)
            .ok_or_else(|| {
                ProviderError::MissingFixture(format!(
                    "loss {:?} @ {}",
                    request.sentence, request.position
                ))
            })
    }
}

/// Blocking JSON client for the inference sidecar.
pub struct HttpProvider {
    base_url: String,
    agent: ureq::Agent,
    retries: usize,
}

impl HttpProvider {
    pub fn new(base_url: &str) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(60)))
            .http_status_as_error(true)
            .build()
            .into();
        HttpProvider {
            base_url: base_url.trim_end_matches('/').to_string(),
            agent,
            retries: 2,
        }
    }

    pub fn with_retries(mut self, retries: usize) -> Self {
        self.retries = retries;
        self
    }

    fn post<Req: Serialize, Resp: for<'de> Deserialize<'de>>(
        &self,
        endpoint: &str,
        body: &Req,
    ) -> Result<Resp, ProviderError> {
        let url = format!("{}{endpoint}", self.base_url);
        let mut attempt = 0;
        loop {
            match self.post_once(&url, body) {
                Err(e) if e.is_retriable() && attempt < self.retries => {
                    attempt += 1;
                    log::warn!("{url}: {e}; retry {attempt}/{}", self.retries);
                    std::thread::sleep(Duration::from_millis(200 * attempt as u64));
                }
                other => return other,
            }
        }
    }

    fn post_once<Req: Serialize, Resp: for<'de> Deserialize<'de>>(
        &self,
        url: &str,
        body: &Req,
    ) -> Result<Resp, ProviderError> {
        let response = self.agent.post(url).send_json(body).map_err(|e| match e {
            ureq::Error::StatusCode(code) if (400..500).contains(&code) => {
                ProviderError::Protocol(format!("{url} returned {code}"))
            }
            other => ProviderError::Transport(format!("{url}: {other}")),
        })?;
        response
            .into_body()
            .read_json::<Resp>()
            .map_err(|e| ProviderError::Protocol(format!("{url}: malformed response: {e}")))
    }
}

impl MaskedLmProvider for HttpProvider {
    fn fill(&self, request: &FillRequest) -> Result<FillResponse, ProviderError> {
        self.post("/v1/fill", request)
    }

    fn loss(&self, request: &LossRequest) -> Result<f64, ProviderError> {
        let r: LossResponse = self.post("/v1/loss", request)?;
        if r.loss.is_finite() && r.loss >= 0.0 {
            Ok(r.loss)
        } else {
            Err(ProviderError::Protocol(format!("invalid loss {}", r.loss)))
        }
    }
}
