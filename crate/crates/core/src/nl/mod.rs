//! Language front end: decomposition, ordering, action completion and
//! translation requests behind a [`Provider`], with recorded-transcript replay.

mod diagnose;
mod http;
mod pattern;
mod pipeline;

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::htt::{node_formula, SkillRegistry, TaskTree};

pub use diagnose::{diagnose, implied_order, Diagnosis};
pub use http::{HttpProvider, PromptSet, ENDPOINT_ENV, TOKEN_ENV};
pub use pattern::{display_id, id_from_display, leaf_sentence, node_sentence, pattern_translate, PatternError};
pub use pipeline::{run_pipeline, PipelineError, PipelineOptions, PipelineOutput, Stage, Warning};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RequestKind {
    Decompose,
    Relations,
    Translate,
    Complete,
}

impl RequestKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RequestKind::Decompose => "decompose",
            RequestKind::Relations => "relations",
            RequestKind::Translate => "translate",
            RequestKind::Complete => "complete",
        }
    }
}

impl fmt::Display for RequestKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The four ways the front end can go wrong.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FailureClass {
    #[serde(rename = "task decomposition")]
    Decomposition,
    #[serde(rename = "temporal extraction")]
    TemporalExtraction,
    #[serde(rename = "LTL translation")]
    LtlTranslation,
    #[serde(rename = "action completion")]
    ActionCompletion,
}

impl fmt::Display for FailureClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FailureClass::Decomposition => "task decomposition",
            FailureClass::TemporalExtraction => "temporal extraction",
            FailureClass::LtlTranslation => "LTL translation",
            FailureClass::ActionCompletion => "action completion",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProviderError {
    #[error("no recorded response for {kind} request {key}")]
    CacheMiss { kind: RequestKind, key: String },
    #[error("provider `{provider}` does not handle {kind} requests")]
    Unsupported { provider: String, kind: RequestKind },
    #[error("transport error: {0}")]
    Transport(String),
    #[error("bad response: {0}")]
    BadResponse(String),
}

/// Source of answers to the four request kinds. Responses are raw text; the
/// pipeline parses and validates them per kind.
pub trait Provider: Send + Sync {
    fn name(&self) -> &str;
    fn call(&self, kind: RequestKind, payload: &Value) -> Result<String, ProviderError>;
}

/// SHA-256 over the kind and the canonical (key-sorted, compact) payload.
pub fn fixture_key(kind: RequestKind, payload: &Value) -> String {
    let mut h = Sha256::new();
    h.update(kind.as_str().as_bytes());
    h.update(b"\n");
    h.update(payload.to_string().as_bytes());
    hex::encode(h.finalize())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub kind: RequestKind,
    pub key: String,
    pub payload: Value,
    pub response: String,
    /// Milliseconds since the Unix epoch.
    pub timestamp_ms: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    #[serde(default = "format_version")]
    pub format_version: u32,
    #[serde(default)]
    pub instruction: String,
    pub entries: Vec<TranscriptEntry>,
}

fn format_version() -> u32 {
    FORMAT_VERSION
}

#[derive(Debug, thiserror::Error)]
pub enum TranscriptError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed transcript: {0}")]
    Format(String),
}

impl Transcript {
    pub fn new(instruction: impl Into<String>) -> Self {
        Transcript { format_version: FORMAT_VERSION, instruction: instruction.into(), entries: Vec::new() }
    }

    pub fn push(&mut self, kind: RequestKind, payload: Value, response: String) {
        let timestamp_ms = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_millis() as u64)
            .unwrap_or(0);
        let key = fixture_key(kind, &payload);
        self.entries.push(TranscriptEntry { kind, key, payload, response, timestamp_ms });
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn count(&self, kind: RequestKind) -> usize {
        self.entries.iter().filter(|e| e.kind == kind).count()
    }

    pub fn from_json_str(s: &str) -> Result<Self, TranscriptError> {
        let t: Transcript = serde_json::from_str(s).map_err(|e| TranscriptError::Format(e.to_string()))?;
        if t.format_version != FORMAT_VERSION {
            return Err(TranscriptError::Format(format!("unsupported format_version {}", t.format_version)));
        }
        Ok(t)
    }

    pub fn load(path: &Path) -> Result<Self, TranscriptError> {
        let s = std::fs::read_to_string(path)
            .map_err(|source| TranscriptError::Io { path: path.display().to_string(), source })?;
        Transcript::from_json_str(&s)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("transcript serializes")
    }
}

/// Replays recorded responses; unknown requests are a cache miss.
#[derive(Debug, Clone, Default)]
pub struct FixtureProvider {
    responses: HashMap<String, String>,
}

impl FixtureProvider {
    pub fn from_transcript(t: &Transcript) -> Self {
        let responses = t
            .entries
            .iter()
            .map(|e| (fixture_key(e.kind, &e.payload), e.response.clone()))
            .collect();
        FixtureProvider { responses }
    }

    pub fn load(path: &Path) -> Result<Self, TranscriptError> {
        Ok(FixtureProvider::from_transcript(&Transcript::load(path)?))
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }
}

impl Provider for FixtureProvider {
    fn name(&self) -> &str {
        "fixture"
    }

    fn call(&self, kind: RequestKind, payload: &Value) -> Result<String, ProviderError> {
        let key = fixture_key(kind, payload);
        self.responses
            .get(&key)
            .cloned()
            .ok_or(ProviderError::CacheMiss { kind, key })
    }
}

/// Deterministic translator for structured English; also answers ordering
/// requests from cue words in the parent instruction.
#[derive(Debug, Clone, Copy, Default)]
pub struct PatternProvider;

const ORDER_CUES: [&str; 7] = ["then", "before", "after", "first", "finally", "next", "followed"];

impl Provider for PatternProvider {
    fn name(&self) -> &str {
        "pattern"
    }

    fn call(&self, kind: RequestKind, payload: &Value) -> Result<String, ProviderError> {
        match kind {
            RequestKind::Translate => {
                let s = payload["sentence"]
                    .as_str()
                    .ok_or_else(|| ProviderError::BadResponse("translate payload lacks `sentence`".into()))?;
                pattern_translate(s)
                    .map(|f| f.to_string())
                    .map_err(|e| ProviderError::BadResponse(e.to_string()))
            }
            RequestKind::Relations => {
                let text = payload["instruction"].as_str().unwrap_or("").to_lowercase();
                let ordered = text
                    .split(|c: char| !c.is_alphanumeric())
                    .any(|w| ORDER_CUES.contains(&w));
                let ids: Vec<&str> = payload["children"]
                    .as_array()
                    .map(|a| a.iter().filter_map(|c| c["id"].as_str()).collect())
                    .unwrap_or_default();
                let pairs: Vec<[&str; 2]> =
                    if ordered { ids.windows(2).map(|w| [w[0], w[1]]).collect() } else { Vec::new() };
                Ok(json!(pairs).to_string())
            }
            _ => Err(ProviderError::Unsupported { provider: "pattern".into(), kind }),
        }
    }
}

/// Asks `primary` first and falls back to `secondary` on a cache miss or an
/// unsupported request.
pub struct LayeredProvider<A, B> {
    pub primary: A,
    pub secondary: B,
}

impl<A: Provider, B: Provider> Provider for LayeredProvider<A, B> {
    fn name(&self) -> &str {
        "layered"
    }

    fn call(&self, kind: RequestKind, payload: &Value) -> Result<String, ProviderError> {
        match self.primary.call(kind, payload) {
            Err(ProviderError::CacheMiss { .. }) | Err(ProviderError::Unsupported { .. }) => {
                self.secondary.call(kind, payload)
            }
            other => other,
        }
    }
}

/// Answers every request from a known, complete task tree. Running the
/// pipeline against it records a fixture transcript for that tree.
#[derive(Debug, Clone)]
pub struct TreeProvider {
    tree: TaskTree,
    skills: SkillRegistry,
}

impl TreeProvider {
    pub fn new(tree: TaskTree, skills: SkillRegistry) -> Self {
        TreeProvider { tree, skills }
    }
}

impl Provider for TreeProvider {
    fn name(&self) -> &str {
        "tree"
    }

    fn call(&self, kind: RequestKind, payload: &Value) -> Result<String, ProviderError> {
        let node_of = |field: &str| {
            let id = payload[field].as_str().unwrap_or("");
            self.tree
                .node(id)
                .ok_or_else(|| ProviderError::BadResponse(format!("unknown node `{id}`")))
        };
        match kind {
            RequestKind::Decompose => {
                let mut skeleton = self.tree.clone();
                for n in skeleton.nodes.values_mut() {
                    n.relations.clear();
                    n.actions.clear();
                }
                skeleton.objects.clear();
                Ok(serde_json::to_string(&json!({"root": skeleton.root, "nodes": skeleton.nodes})).unwrap())
            }
            RequestKind::Relations => Ok(serde_json::to_string(&node_of("parent")?.relations).unwrap()),
            RequestKind::Complete => {
                let calls: Vec<String> = node_of("node")?.actions.iter().map(|a| a.to_string()).collect();
                Ok(serde_json::to_string(&calls).unwrap())
            }
            RequestKind::Translate => {
                let id = payload["node"].as_str().unwrap_or("");
                node_formula(&self.tree, id, &self.skills)
                    .map(|f| f.to_string())
                    .map_err(|e| ProviderError::BadResponse(e.to_string()))
            }
        }
    }
}
