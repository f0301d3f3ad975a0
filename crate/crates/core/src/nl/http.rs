use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{Provider, ProviderError, RequestKind};

/// Endpoint URL for [`HttpProvider::from_env`].
pub const ENDPOINT_ENV: &str = "HLTL_LLM_ENDPOINT";
/// Optional bearer token sent with every request.
pub const TOKEN_ENV: &str = "HLTL_LLM_TOKEN";

/// Prompt template per request kind. The service fills them in; `{payload}`
/// marks where the request payload goes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptSet {
    pub decompose: String,
    pub relations: String,
    pub translate: String,
    pub complete: String,
}

impl Default for PromptSet {
    fn default() -> Self {
        PromptSet {
            decompose: "Decompose the instruction into a task tree. Reply with JSON {\"root\", \"nodes\"}.\n{payload}".into(),
            relations: "List ordering constraints among the child tasks as JSON [[before, after], ...].\n{payload}".into(),
            translate: "Translate the sentence into a co-safe LTL formula. Reply with the formula only.\n{payload}".into(),
            complete: "Expand the task into robot API calls, one `Verb(args)` per line.\n{payload}".into(),
        }
    }
}

impl PromptSet {
    pub fn get(&self, kind: RequestKind) -> &str {
        match kind {
            RequestKind::Decompose => &self.decompose,
            RequestKind::Relations => &self.relations,
            RequestKind::Translate => &self.translate,
            RequestKind::Complete => &self.complete,
        }
    }
}

/// POSTs `{"kind", "payload", "prompt_template"}` to one endpoint and reads
/// `{"text"}` back.
#[derive(Debug, Clone)]
pub struct HttpProvider {
    endpoint: String,
    token: Option<String>,
    prompts: PromptSet,
    client: reqwest::blocking::Client,
}

#[derive(Deserialize)]
struct Reply {
    text: String,
}

impl HttpProvider {
    pub fn new(endpoint: impl Into<String>, token: Option<String>, prompts: PromptSet) -> Result<Self, ProviderError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(120))
            .build()
            .map_err(|e| ProviderError::Transport(e.to_string()))?;
        Ok(HttpProvider { endpoint: endpoint.into(), token, prompts, client })
    }

    pub fn from_env(prompts: PromptSet) -> Result<Self, ProviderError> {
        let endpoint = std::env::var(ENDPOINT_ENV)
            .map_err(|_| ProviderError::Transport(format!("{ENDPOINT_ENV} is not set")))?;
        HttpProvider::new(endpoint, std::env::var(TOKEN_ENV).ok(), prompts)
    }
}

impl Provider for HttpProvider {
    fn name(&self) -> &str {
        "http"
    }

    fn call(&self, kind: RequestKind, payload: &Value) -> Result<String, ProviderError> {
        let body = json!({ "kind": kind, "payload": payload, "prompt_template": self.prompts.get(kind) });
        let mut req = self.client.post(&self.endpoint).json(&body);
        if let Some(t) = &self.token {
            req = req.bearer_auth(t);
        }
        let resp = req
            .send()
            .and_then(|r| r.error_for_status())
            .map_err(|e| ProviderError::Transport(e.to_string()))?;
        let reply: Reply = resp.json().map_err(|e| ProviderError::BadResponse(e.to_string()))?;
        Ok(reply.text)
    }
}
