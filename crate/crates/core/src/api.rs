//! Request and response bodies of the HTTP service, and the synchronous
//! handlers behind each route. The server only does routing and status
//! mapping; the client and CLI share these types.

use std::collections::BTreeMap;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::automata::compile;
use crate::harness::{base_library, evaluate, gen_derivative, EvalConfig, EvalReport};
use crate::hier::{satisfies, HierSpec, IntervalAssignment, Monitor, SiblingMode, Violation, DEFAULT_ORACLE_CAP};
use crate::htt::{SkillRegistry, TaskTree, TreeViolation};
use crate::ltl::{evaluate as eval_formula, is_sc_ltl, parse, Formula, Trace};
use crate::nl::{
    diagnose, pattern_translate, run_pipeline, Diagnosis, FixtureProvider, HttpProvider, PatternProvider, PipelineOptions,
    PipelineOutput, PromptSet, Provider, Transcript, TreeProvider,
};
use crate::planner::{greedy_plan, plan, Budget, Objective, PlanError, PlanOptions, PlanResult};
use crate::world::{check_success, metrics, simulate, CheckMethod, JointState, Metrics, PlanTrace, Scenario};

pub const API_VERSION: u32 = 1;

/// Error body. `kind` is `bad-request` for malformed input and names the
/// failing module otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, thiserror::Error)]
#[error("{kind}: {message}")]
pub struct ApiError {
    pub kind: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<Value>,
}

impl ApiError {
    pub fn new(kind: &str, message: impl ToString) -> Self {
        ApiError { kind: kind.into(), message: message.to_string(), detail: None }
    }

    pub fn bad_request(message: impl ToString) -> Self {
        ApiError::new("bad-request", message)
    }

    pub fn is_bad_request(&self) -> bool {
        self.kind == "bad-request"
    }
}

fn parsed(text: &str) -> Result<Formula, ApiError> {
    parse(text).map_err(|e| ApiError::new("ltl", e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub api_version: u32,
}

pub fn health() -> Health {
    Health { status: "ok".into(), api_version: API_VERSION }
}

// ltl

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormulaRequest {
    pub formula: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParseResponse {
    pub formula: String,
    pub ast: Value,
    pub props: Vec<String>,
    pub co_safe: bool,
}

pub fn ltl_parse(req: &FormulaRequest) -> Result<ParseResponse, ApiError> {
    let f = parsed(&req.formula)?;
    Ok(ParseResponse { formula: f.to_string(), ast: f.to_json(), props: f.props(), co_safe: is_sc_ltl(&f) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResponse {
    pub formula: String,
    pub co_safe: bool,
    /// Automaton size, when the formula is co-safe.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dfa_states: Option<usize>,
    /// Length of the shortest accepted trace; absent when unsatisfiable.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shortest_accepting: Option<u32>,
}

pub fn ltl_check(req: &FormulaRequest) -> Result<CheckResponse, ApiError> {
    let f = parsed(&req.formula)?;
    let co_safe = is_sc_ltl(&f);
    let mut out = CheckResponse { formula: f.to_string(), co_safe, dfa_states: None, shortest_accepting: None };
    if co_safe {
        let dfa = compile(&f).map_err(|e| ApiError::new("automata", e))?;
        out.dfa_states = Some(dfa.num_states());
        out.shortest_accepting = dfa.distance_to_accept(dfa.initial());
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRequest {
    pub formula: String,
    pub trace: Trace,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub satisfied: bool,
}

pub fn ltl_eval(req: &EvalRequest) -> Result<Verdict, ApiError> {
    let f = parsed(&req.formula)?;
    let satisfied = eval_formula(&f, &req.trace).map_err(|e| ApiError::new("ltl", e))?;
    Ok(Verdict { satisfied })
}

// spec

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecRequest {
    pub spec: HierSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecValidation {
    pub valid: bool,
    pub violations: Vec<Violation>,
}

pub fn spec_validate(req: &SpecRequest) -> SpecValidation {
    let violations = req.spec.validate();
    SpecValidation { valid: violations.is_empty(), violations }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DotResponse {
    pub dot: String,
}

pub fn spec_dot(req: &SpecRequest) -> Result<DotResponse, ApiError> {
    req.spec.ensure_valid().map_err(|e| ApiError::new("spec", e))?;
    Ok(DotResponse { dot: req.spec.to_dot() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SatisfiesRequest {
    pub spec: HierSpec,
    pub trace: Trace,
    #[serde(default)]
    pub mode: SiblingMode,
    #[serde(default)]
    pub method: CheckMethod,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SatisfiesResponse {
    pub satisfied: bool,
    pub method: CheckMethod,
    /// Interval witness (oracle) when satisfied.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<IntervalAssignment>,
    /// Completion step per formula (monitor) when satisfied.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub completions: Option<BTreeMap<String, usize>>,
}

pub fn spec_satisfies(req: &SatisfiesRequest) -> Result<SatisfiesResponse, ApiError> {
    req.spec.ensure_valid().map_err(|e| ApiError::new("spec", e))?;
    let method = match req.method {
        CheckMethod::Auto if req.trace.len() <= DEFAULT_ORACLE_CAP => CheckMethod::Oracle,
        CheckMethod::Auto => CheckMethod::Monitor,
        m => m,
    };
    let spec_err = |e| ApiError::new("spec", e);
    if method == CheckMethod::Oracle {
        let witness = satisfies(&req.spec, &req.trace, req.mode, DEFAULT_ORACLE_CAP).map_err(spec_err)?;
        Ok(SatisfiesResponse { satisfied: witness.is_some(), method, witness, completions: None })
    } else {
        let completions = Monitor::new(&req.spec, req.mode).map_err(spec_err)?.run(&req.trace);
        Ok(SatisfiesResponse { satisfied: completions.is_some(), method, witness: None, completions })
    }
}

// htt

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeRequest {
    pub tree: TaskTree,
    #[serde(default)]
    pub skills: SkillRegistry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeValidation {
    pub valid: bool,
    pub violations: Vec<TreeViolation>,
}

pub fn htt_validate(req: &TreeRequest) -> TreeValidation {
    let violations = req.tree.validate(&req.skills);
    TreeValidation { valid: violations.is_empty(), violations }
}

pub fn htt_construct(req: &TreeRequest) -> Result<SpecRequest, ApiError> {
    let spec = req.tree.construct(&req.skills).map_err(|e| ApiError::new("htt", e))?;
    Ok(SpecRequest { spec })
}

// pipeline

/// Where pipeline answers come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ProviderSpec {
    /// Replay a recorded transcript.
    Fixture { transcript: Transcript },
    /// Answer from a known task tree.
    Tree { tree: TaskTree },
    /// Rule-based answers for structured English.
    Pattern,
    /// Remote model configured through the server's environment.
    Http {
        #[serde(default)]
        prompts: Option<PromptSet>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineRequest {
    /// Defaults to the fixture's instruction or the tree root's.
    #[serde(default)]
    pub instruction: Option<String>,
    pub provider: ProviderSpec,
    #[serde(default)]
    pub skills: SkillRegistry,
}

pub fn pipeline_run(req: &PipelineRequest) -> Result<PipelineOutput, ApiError> {
    let (provider, default_instruction): (Box<dyn Provider>, Option<String>) = match &req.provider {
        ProviderSpec::Fixture { transcript } => (Box::new(FixtureProvider::from_transcript(transcript)), Some(transcript.instruction.clone())),
        ProviderSpec::Tree { tree } => (
            Box::new(TreeProvider::new(tree.clone(), req.skills.clone())),
            tree.node(&tree.root).map(|n| n.instruction.clone()),
        ),
        ProviderSpec::Pattern => (Box::new(PatternProvider), None),
        ProviderSpec::Http { prompts } => (
            Box::new(HttpProvider::from_env(prompts.clone().unwrap_or_default()).map_err(|e| ApiError::new("provider", e))?),
            None,
        ),
    };
    let instruction = req
        .instruction
        .clone()
        .or(default_instruction)
        .ok_or_else(|| ApiError::bad_request("an instruction is required for this provider"))?;
    let opts = PipelineOptions { skills: req.skills.clone(), ..Default::default() };
    run_pipeline(&instruction, provider.as_ref(), &opts).map_err(|e| ApiError {
        kind: "pipeline".into(),
        message: e.to_string(),
        detail: Some(json!({ "stage": e.stage, "class": e.stage.class(), "transcript": e.transcript })),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslateRequest {
    pub sentence: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslateResponse {
    pub formula: String,
    pub co_safe: bool,
}

pub fn pipeline_translate(req: &TranslateRequest) -> Result<TranslateResponse, ApiError> {
    let f = pattern_translate(&req.sentence).map_err(|e| ApiError::new("pattern", e))?;
    Ok(TranslateResponse { co_safe: is_sc_ltl(&f), formula: f.to_string() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnoseRequest {
    pub tree: TaskTree,
    pub spec: HierSpec,
    pub reference: HierSpec,
    #[serde(default)]
    pub skills: SkillRegistry,
}

pub fn pipeline_diagnose(req: &DiagnoseRequest) -> Diagnosis {
    diagnose(&req.tree, &req.spec, &req.reference, &req.skills)
}

// planning and simulation

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanRequest {
    pub scenario: Scenario,
    pub spec: HierSpec,
    #[serde(default)]
    pub objective: Objective,
    #[serde(default)]
    pub mode: SiblingMode,
    #[serde(default)]
    pub timeout_s: Option<f64>,
    #[serde(default)]
    pub node_cap: Option<usize>,
    /// Use the one-leaf-at-a-time baseline instead of the optimal search.
    #[serde(default)]
    pub greedy: bool,
}

impl PlanRequest {
    pub fn options(&self) -> Result<PlanOptions, ApiError> {
        let mut budget = Budget::default();
        if let Some(t) = self.timeout_s {
            budget.timeout = Duration::try_from_secs_f64(t).map_err(|e| ApiError::bad_request(format!("timeout_s: {e}")))?;
        }
        if let Some(n) = self.node_cap {
            budget.node_cap = n;
        }
        Ok(PlanOptions { objective: self.objective, mode: self.mode, budget })
    }
}

pub fn plan_request(req: &PlanRequest) -> Result<PlanResult, ApiError> {
    let opts = req.options()?;
    let run = if req.greedy { greedy_plan } else { plan };
    run(&req.scenario, &req.spec, &opts).map_err(|e| {
        let kind = match &e {
            PlanError::Infeasible { .. } => "infeasible",
            PlanError::Timeout { .. } => "timeout",
            PlanError::World(_) => "world",
            PlanError::Spec(_) => "spec",
            PlanError::Unverified => "internal",
        };
        let detail = match &e {
            PlanError::Timeout { incumbent: Some(r), .. } => Some(json!({ "incumbent": r })),
            _ => None,
        };
        ApiError { kind: kind.into(), message: e.to_string(), detail }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateRequest {
    pub scenario: Scenario,
    pub plan: PlanTrace,
    /// When given, the replayed trace is also checked against it.
    #[serde(default)]
    pub spec: Option<HierSpec>,
    #[serde(default)]
    pub mode: SiblingMode,
    #[serde(default)]
    pub method: CheckMethod,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateResponse {
    pub final_state: JointState,
    pub trace: Trace,
    pub metrics: Metrics,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub success: Option<bool>,
}

pub fn simulate_request(req: &SimulateRequest) -> Result<SimulateResponse, ApiError> {
    let world = |e| ApiError::new("world", e);
    let (final_state, trace) = simulate(&req.scenario, &req.plan).map_err(world)?;
    let success = match &req.spec {
        Some(spec) => Some(check_success(&req.scenario, &req.plan, spec, req.mode, req.method).map_err(world)?),
        None => None,
    };
    Ok(SimulateResponse { final_state, trace, metrics: metrics(&req.plan, &req.scenario), success })
}

// harness

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenTasksRequest {
    pub n_base: usize,
    pub count: usize,
    pub seed: u64,
    /// Defaults to the bundled desk library.
    #[serde(default)]
    pub bases: Option<Vec<TaskTree>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenTasksResponse {
    pub format_version: u32,
    pub n_base: usize,
    pub seed: u64,
    pub tasks: Vec<TaskTree>,
}

pub fn gen_tasks(req: &GenTasksRequest) -> Result<GenTasksResponse, ApiError> {
    let bases = req.bases.clone().unwrap_or_else(base_library);
    let tasks = gen_derivative(&bases, req.n_base, req.count, req.seed).map_err(|e| ApiError::new("harness", e))?;
    Ok(GenTasksResponse { format_version: API_VERSION, n_base: req.n_base, seed: req.seed, tasks })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalCase {
    pub id: String,
    pub tree: TaskTree,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluateRequest {
    pub cases: Vec<EvalCase>,
    #[serde(default)]
    pub config: EvalConfig,
}

pub fn evaluate_request(req: &EvaluateRequest) -> EvalReport {
    let cases: Vec<(String, TaskTree)> = req.cases.iter().map(|c| (c.id.clone(), c.tree.clone())).collect();
    evaluate(&cases, &req.config)
}
