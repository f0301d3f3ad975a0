//! Typed blocking client for the hltl service. One method per route; the
//! bodies are the `hltl::api` types.

use hltl::api::*;
use hltl::harness::EvalReport;
use hltl::nl::{Diagnosis, PipelineOutput};
use hltl::planner::PlanResult;
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Environment variable naming a remote server.
pub const SERVER_ENV: &str = "HLTL_SERVER";

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("cannot reach {url}: {source}")]
    Transport { url: String, source: reqwest::Error },
    /// The server answered with an error body.
    #[error("{error}")]
    Api { status: u16, error: ApiError },
    #[error("unexpected response from {url} (status {status}): {message}")]
    Decode { url: String, status: u16, message: String },
}

impl ClientError {
    /// True when the request itself was malformed, as opposed to a domain
    /// failure or an unreachable server.
    pub fn is_bad_request(&self) -> bool {
        matches!(self, ClientError::Api { error, .. } if error.is_bad_request())
    }
}

pub struct Client {
    base: String,
    http: reqwest::blocking::Client,
}

impl Client {
    pub fn new(base: impl Into<String>) -> Result<Client, ClientError> {
        let base = base.into().trim_end_matches('/').to_string();
        // Planning and evaluation can run for minutes; the server enforces
        // its own budgets.
        let http = reqwest::blocking::Client::builder()
            .timeout(None)
            .build()
            .map_err(|source| ClientError::Transport { url: base.clone(), source })?;
        Ok(Client { base, http })
    }

    pub fn base_url(&self) -> &str {
        &self.base
    }

    fn decode<T: DeserializeOwned>(&self, url: String, r: reqwest::blocking::Response) -> Result<T, ClientError> {
        let status = r.status().as_u16();
        let text = r.text().map_err(|source| ClientError::Transport { url: url.clone(), source })?;
        if (200..300).contains(&status) {
            return serde_json::from_str(&text).map_err(|e| ClientError::Decode { url, status, message: e.to_string() });
        }
        match serde_json::from_str::<ApiError>(&text) {
            Ok(error) => Err(ClientError::Api { status, error }),
            Err(_) => Err(ClientError::Decode { url, status, message: text }),
        }
    }

    fn post<Req: Serialize, Resp: DeserializeOwned>(&self, path: &str, body: &Req) -> Result<Resp, ClientError> {
        let url = format!("{}{path}", self.base);
        let r = self
            .http
            .post(&url)
            .json(body)
            .send()
            .map_err(|source| ClientError::Transport { url: url.clone(), source })?;
        self.decode(url, r)
    }

    pub fn health(&self) -> Result<Health, ClientError> {
        let url = format!("{}/v1/health", self.base);
        let r = self.http.get(&url).send().map_err(|source| ClientError::Transport { url: url.clone(), source })?;
        self.decode(url, r)
    }

    pub fn ltl_parse(&self, req: &FormulaRequest) -> Result<ParseResponse, ClientError> {
        self.post("/v1/ltl/parse", req)
    }

    pub fn ltl_check(&self, req: &FormulaRequest) -> Result<CheckResponse, ClientError> {
        self.post("/v1/ltl/check", req)
    }

    pub fn ltl_eval(&self, req: &EvalRequest) -> Result<Verdict, ClientError> {
        self.post("/v1/ltl/eval", req)
    }

    pub fn spec_validate(&self, req: &SpecRequest) -> Result<SpecValidation, ClientError> {
        self.post("/v1/spec/validate", req)
    }

    pub fn spec_satisfies(&self, req: &SatisfiesRequest) -> Result<SatisfiesResponse, ClientError> {
        self.post("/v1/spec/satisfies", req)
    }

    pub fn spec_dot(&self, req: &SpecRequest) -> Result<DotResponse, ClientError> {
        self.post("/v1/spec/dot", req)
    }

    pub fn htt_validate(&self, req: &TreeRequest) -> Result<TreeValidation, ClientError> {
        self.post("/v1/htt/validate", req)
    }

    pub fn htt_construct(&self, req: &TreeRequest) -> Result<SpecRequest, ClientError> {
        self.post("/v1/htt/construct", req)
    }

    pub fn pipeline_run(&self, req: &PipelineRequest) -> Result<PipelineOutput, ClientError> {
        self.post("/v1/pipeline/run", req)
    }

    pub fn pipeline_translate(&self, req: &TranslateRequest) -> Result<TranslateResponse, ClientError> {
        self.post("/v1/pipeline/translate", req)
    }

    pub fn pipeline_diagnose(&self, req: &DiagnoseRequest) -> Result<Diagnosis, ClientError> {
        self.post("/v1/pipeline/diagnose", req)
    }

    pub fn plan(&self, req: &PlanRequest) -> Result<PlanResult, ClientError> {
        self.post("/v1/plan", req)
    }

    pub fn simulate(&self, req: &SimulateRequest) -> Result<SimulateResponse, ClientError> {
        self.post("/v1/simulate", req)
    }

    pub fn gen_tasks(&self, req: &GenTasksRequest) -> Result<GenTasksResponse, ClientError> {
        self.post("/v1/gen-tasks", req)
    }

    pub fn evaluate(&self, req: &EvaluateRequest) -> Result<EvalReport, ClientError> {
        self.post("/v1/evaluate", req)
    }
}
