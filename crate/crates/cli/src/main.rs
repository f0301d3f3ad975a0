//! `hltl`: command-line client of the hltl service. Without `--server` (or
//! `HLTL_SERVER`) it starts a server in-process on an ephemeral port.
//!
//! Exit codes: 0 success, 1 domain failure (including a negative verdict),
//! 2 usage error (bad flags, unreadable or malformed input).

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hltl::api::*;
use hltl::harness::EvalConfig;
use hltl::hier::SiblingMode;
use hltl::htt::{SkillRegistry, TaskTree};
use hltl::ltl::Trace;
use hltl::nl::Transcript;
use hltl::planner::Objective;
use hltl::world::{CheckMethod, PlanTrace, Scenario};
use hltl_client::{Client, ClientError, SERVER_ENV};
use hltl_server::Background;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

#[derive(Parser)]
#[command(name = "hltl", version, about = "Hierarchical LTL specifications, task trees and multi-robot planning")]
struct Cli {
    /// Server to use instead of an in-process one.
    #[arg(long, global = true, env = SERVER_ENV, value_name = "URL")]
    server: Option<String>,
    /// Write the result here instead of stdout.
    #[arg(short, long, global = true, value_name = "PATH")]
    output: Option<PathBuf>,
    /// Log to stderr (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Single formulas.
    #[command(subcommand)]
    Ltl(LtlCmd),
    /// Hierarchical specifications.
    #[command(subcommand)]
    Spec(SpecCmd),
    /// Hierarchical task trees.
    #[command(subcommand)]
    Htt(HttCmd),
    /// Natural-language front end.
    #[command(subcommand)]
    Pipeline(PipelineCmd),
    /// Optimal (or baseline) multi-robot plan for a specification.
    Plan(PlanArgs),
    /// Replay a plan and report metrics.
    Simulate(SimulateArgs),
    /// Seeded derivative tasks from base tasks.
    GenTasks(GenTasksArgs),
    /// Batch convert, plan and verify; prints the metrics table.
    Evaluate(EvaluateArgs),
    /// Run the HTTP service in the foreground.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: String,
    },
}

#[derive(Subcommand)]
enum LtlCmd {
    /// Parse and pretty-print.
    Parse { formula: String },
    /// Co-safety and automaton size; fails when not co-safe.
    Check { formula: String },
    /// Finite-trace satisfaction; fails when not satisfied.
    Eval {
        formula: String,
        #[arg(long, value_name = "PATH")]
        trace: PathBuf,
    },
}

#[derive(Subcommand)]
enum SpecCmd {
    /// Check the hierarchy rules; fails on any violation.
    Validate { spec: PathBuf },
    /// Check a trace against the hierarchy; fails when not satisfied.
    Satisfies {
        spec: PathBuf,
        #[arg(long, value_name = "PATH")]
        trace: PathBuf,
        #[arg(long, default_value = "overlap")]
        mode: SiblingMode,
        #[arg(long, default_value = "auto")]
        method: CheckMethod,
    },
    /// Graphviz rendering of the hierarchy.
    Dot { spec: PathBuf },
}

#[derive(Subcommand)]
enum HttCmd {
    /// Check tree well-formedness; fails on any violation.
    Validate { tree: PathBuf },
    /// Build the hierarchical specification.
    Construct { tree: PathBuf },
}

#[derive(Subcommand)]
enum PipelineCmd {
    /// Instruction to tree to specification.
    Run(PipelineRunArgs),
    /// Structured English sentence to a formula.
    Translate { sentence: String },
    /// Classify where a generated tree and specification diverge from a
    /// reference; fails when they do.
    Diagnose {
        #[arg(long)]
        tree: PathBuf,
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        reference: PathBuf,
    },
}

#[derive(Args)]
#[group(id = "provider", required = true, multiple = false)]
struct ProviderArgs {
    /// Replay a recorded transcript.
    #[arg(long, group = "provider", value_name = "PATH")]
    fixture: Option<PathBuf>,
    /// Answer from a complete task tree.
    #[arg(long, group = "provider", value_name = "PATH")]
    tree: Option<PathBuf>,
    /// Remote model; the server reads HLTL_LLM_ENDPOINT and HLTL_LLM_TOKEN.
    #[arg(long, group = "provider")]
    http: bool,
}

#[derive(Args)]
struct PipelineRunArgs {
    #[command(flatten)]
    provider: ProviderArgs,
    #[arg(long)]
    instruction: Option<String>,
    /// Also write the run's transcript here.
    #[arg(long, value_name = "PATH")]
    transcript_out: Option<PathBuf>,
}

#[derive(Args)]
struct Budget {
    #[arg(long, default_value = "travel_cost")]
    objective: Objective,
    #[arg(long, default_value = "overlap")]
    mode: SiblingMode,
    #[arg(long, value_name = "SECONDS")]
    timeout_s: Option<f64>,
    #[arg(long)]
    node_cap: Option<usize>,
}

#[derive(Args)]
struct PlanArgs {
    scenario: PathBuf,
    spec: PathBuf,
    #[command(flatten)]
    budget: Budget,
    /// One leaf at a time instead of the joint optimal search.
    #[arg(long)]
    greedy: bool,
}

#[derive(Args)]
struct SimulateArgs {
    scenario: PathBuf,
    /// A plan trace, or a `plan` result containing one.
    plan: PathBuf,
    /// Also check the replayed trace against this specification.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long, default_value = "overlap")]
    mode: SiblingMode,
    #[arg(long, default_value = "auto")]
    method: CheckMethod,
}

#[derive(Args)]
struct GenTasksArgs {
    #[arg(long, default_value_t = 1)]
    n_base: usize,
    #[arg(long, default_value_t = 10)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// JSON array of base task trees; defaults to the bundled desk library.
    #[arg(long, value_name = "PATH")]
    bases: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    /// `gen-tasks` outputs to evaluate; when absent, tasks are generated.
    #[arg(long, value_name = "PATH")]
    tasks: Vec<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "1,2")]
    n_base: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_delimiter = ',', default_value = "1,2,4")]
    robots: Vec<usize>,
    #[arg(long, default_value_t = 8)]
    width: i32,
    #[arg(long, default_value_t = 8)]
    height: i32,
    #[arg(long, default_value = "travel_cost")]
    objective: Objective,
    #[arg(long, default_value = "overlap")]
    mode: SiblingMode,
    /// Per-case planning budget.
    #[arg(long, default_value_t = 30.0, value_name = "SECONDS")]
    timeout_s: f64,
    #[arg(long)]
    node_cap: Option<usize>,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Also write the full report with per-case logs here.
    #[arg(long, value_name = "PATH")]
    json: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Domain(String),
}

impl From<ClientError> for Failure {
    fn from(e: ClientError) -> Self {
        match &e {
            e if e.is_bad_request() => Failure::Usage(e.to_string()),
            ClientError::Api { error, .. } if error.kind == "pipeline" => {
                let stage = error.detail.as_ref().and_then(|d| d["stage"].as_str()).unwrap_or("?");
                Failure::Domain(format!("{e} [stage {stage}]"))
            }
            _ => Failure::Domain(e.to_string()),
        }
    }
}

type Run = Result<bool, Failure>;

fn read_text(path: &Path) -> Result<String, Failure> {
    let mut s = String::new();
    let r = if path == Path::new("-") { io::stdin().read_to_string(&mut s).map(|_| ()) } else { fs::read_to_string(path).map(|t| s = t) };
    r.map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    Ok(s)
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    serde_json::from_str(&read_text(path)?).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

struct Out {
    path: Option<PathBuf>,
}

impl Out {
    fn text(&self, s: &str) -> Result<(), Failure> {
        let res = match &self.path {
            Some(p) => fs::write(p, s),
            None => io::stdout().lock().write_all(s.as_bytes()),
        };
        res.map_err(|e| Failure::Domain(format!("cannot write output: {e}")))
    }

    fn json<T: Serialize>(&self, v: &T) -> Result<(), Failure> {
        self.text(&(serde_json::to_string_pretty(v).expect("serializable") + "\n"))
    }
}

fn write_json<T: Serialize>(path: &Path, v: &T) -> Result<(), Failure> {
    fs::write(path, serde_json::to_string_pretty(v).expect("serializable") + "\n")
        .map_err(|e| Failure::Domain(format!("cannot write {}: {e}", path.display())))
}

fn ltl(c: &Client, out: &Out, cmd: LtlCmd) -> Run {
    match cmd {
        LtlCmd::Parse { formula } => {
            out.json(&c.ltl_parse(&FormulaRequest { formula })?)?;
            Ok(true)
        }
        LtlCmd::Check { formula } => {
            let r = c.ltl_check(&FormulaRequest { formula })?;
            out.json(&r)?;
            Ok(r.co_safe)
        }
        LtlCmd::Eval { formula, trace } => {
            let r = c.ltl_eval(&EvalRequest { formula, trace: read_json(&trace)? })?;
            out.json(&r)?;
            Ok(r.satisfied)
        }
    }
}

fn spec(c: &Client, out: &Out, cmd: SpecCmd) -> Run {
    match cmd {
        SpecCmd::Validate { spec } => {
            let r = c.spec_validate(&SpecRequest { spec: read_json(&spec)? })?;
            out.json(&r)?;
            Ok(r.valid)
        }
        SpecCmd::Satisfies { spec, trace, mode, method } => {
            let trace: Trace = read_json(&trace)?;
            let r = c.spec_satisfies(&SatisfiesRequest { spec: read_json(&spec)?, trace, mode, method })?;
            out.json(&r)?;
            Ok(r.satisfied)
        }
        SpecCmd::Dot { spec } => {
            out.text(&c.spec_dot(&SpecRequest { spec: read_json(&spec)? })?.dot)?;
            Ok(true)
        }
    }
}

fn htt(c: &Client, out: &Out, cmd: HttCmd) -> Run {
    let req = |tree: &Path| -> Result<TreeRequest, Failure> { Ok(TreeRequest { tree: read_json(tree)?, skills: SkillRegistry::default() }) };
    match cmd {
        HttCmd::Validate { tree } => {
            let r = c.htt_validate(&req(&tree)?)?;
            out.json(&r)?;
            Ok(r.valid)
        }
        HttCmd::Construct { tree } => {
            out.json(&c.htt_construct(&req(&tree)?)?.spec)?;
            Ok(true)
        }
    }
}

fn pipeline(c: &Client, out: &Out, cmd: PipelineCmd) -> Run {
    match cmd {
        PipelineCmd::Run(a) => {
            let p = &a.provider;
            let provider = if let Some(path) = &p.fixture {
                let transcript: Transcript = read_json(path)?;
                ProviderSpec::Fixture { transcript }
            } else if let Some(path) = &p.tree {
                let tree: TaskTree = read_json(path)?;
                ProviderSpec::Tree { tree }
            } else {
                ProviderSpec::Http { prompts: None }
            };
            let r = c.pipeline_run(&PipelineRequest { instruction: a.instruction, provider, skills: SkillRegistry::default() })?;
            if let Some(path) = &a.transcript_out {
                write_json(path, &r.transcript)?;
            }
            for w in &r.warnings {
                eprintln!("warning: {} ({}): {}", w.node, w.class, w.detail);
            }
            out.json(&r)?;
            Ok(true)
        }
        PipelineCmd::Translate { sentence } => {
            out.json(&c.pipeline_translate(&TranslateRequest { sentence })?)?;
            Ok(true)
        }
        PipelineCmd::Diagnose { tree, spec, reference } => {
            let r = c.pipeline_diagnose(&DiagnoseRequest {
                tree: read_json(&tree)?,
                spec: read_json(&spec)?,
                reference: read_json(&reference)?,
                skills: SkillRegistry::default(),
            })?;
            out.json(&r)?;
            Ok(r.class.is_none())
        }
    }
}

fn plan(c: &Client, out: &Out, a: PlanArgs) -> Run {
    let scenario: Scenario = read_json(&a.scenario)?;
    let req = PlanRequest {
        scenario,
        spec: read_json(&a.spec)?,
        objective: a.budget.objective,
        mode: a.budget.mode,
        timeout_s: a.budget.timeout_s,
        node_cap: a.budget.node_cap,
        greedy: a.greedy,
    };
    match c.plan(&req) {
        Ok(r) => {
            out.json(&r)?;
            Ok(true)
        }
        Err(ClientError::Api { error, .. }) if error.kind == "timeout" => {
            // Best plan found so far goes to the output; the exit code still
            // reports the exhausted budget.
            if let Some(inc) = error.detail.as_ref().map(|d| &d["incumbent"]).filter(|v| !v.is_null()) {
                out.json(inc)?;
            }
            Err(Failure::Domain(error.to_string()))
        }
        Err(e) => Err(e.into()),
    }
}

fn simulate(c: &Client, out: &Out, a: SimulateArgs) -> Run {
    let raw: Value = read_json(&a.plan)?;
    let raw = if raw.get("plan").is_some() { raw["plan"].clone() } else { raw };
    let plan: PlanTrace = serde_json::from_value(raw).map_err(|e| Failure::Usage(format!("{}: {e}", a.plan.display())))?;
    let spec = a.spec.as_deref().map(read_json).transpose()?;
    let r = c.simulate(&SimulateRequest { scenario: read_json(&a.scenario)?, plan, spec, mode: a.mode, method: a.method })?;
    out.json(&r)?;
    Ok(r.success != Some(false))
}

fn gen_tasks(c: &Client, out: &Out, a: GenTasksArgs) -> Run {
    let bases = a.bases.as_deref().map(read_json).transpose()?;
    out.json(&c.gen_tasks(&GenTasksRequest { n_base: a.n_base, count: a.count, seed: a.seed, bases })?)?;
    Ok(true)
}

fn evaluate(c: &Client, out: &Out, a: EvaluateArgs) -> Run {
    let mut sets: Vec<GenTasksResponse> = Vec::new();
    if a.tasks.is_empty() {
        for &n in &a.n_base {
            sets.push(c.gen_tasks(&GenTasksRequest { n_base: n, count: a.count, seed: a.seed, bases: None })?);
        }
    } else {
        for p in &a.tasks {
            sets.push(read_json(p)?);
        }
    }
    let cases = sets
        .iter()
        .flat_map(|s| s.tasks.iter().enumerate().map(move |(i, tree)| EvalCase { id: format!("n{}_{:02}", s.n_base, i + 1), tree: tree.clone() }))
        .collect();
    let timeout_s = Some(a.timeout_s);
    let budget = PlanRequest {
        scenario: Scenario::new(1, 1),
        spec: hltl::hier::HierSpec::new(Vec::new()),
        objective: a.objective,
        mode: a.mode,
        timeout_s,
        node_cap: a.node_cap,
        greedy: false,
    }
    .options()
    .map_err(|e| Failure::Usage(e.to_string()))?;
    let config = EvalConfig { robots: a.robots, width: a.width, height: a.height, plan: budget, seed: a.seed, threads: a.threads };
    let report = c.evaluate(&EvaluateRequest { cases, config })?;
    if let Some(p) = &a.json {
        write_json(p, &report)?;
    }
    out.text(&report.to_table())?;
    Ok(true)
}

fn serve(addr: &str) -> Run {
    let rt = tokio::runtime::Runtime::new().map_err(|e| Failure::Domain(e.to_string()))?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind(addr).await.map_err(|e| Failure::Usage(format!("cannot bind {addr}: {e}")))?;
        eprintln!("listening on http://{}", listener.local_addr().map_err(|e| Failure::Domain(e.to_string()))?);
        hltl_server::serve(listener).await.map_err(|e| Failure::Domain(e.to_string()))
    })?;
    Ok(true)
}

fn run(cli: Cli) -> Run {
    if let Cmd::Serve { addr } = &cli.cmd {
        return serve(addr);
    }
    // Keeps the in-process server alive for the whole command.
    let mut local = None;
    let url = match &cli.server {
        Some(u) => u.clone(),
        None => local.insert(Background::start().map_err(|e| Failure::Domain(format!("cannot start server: {e}")))?).url(),
    };
    tracing::debug!(%url, in_process = local.is_some(), "using server");
    let c = Client::new(url)?;
    let out = Out { path: cli.output };
    match cli.cmd {
        Cmd::Ltl(cmd) => ltl(&c, &out, cmd),
        Cmd::Spec(cmd) => spec(&c, &out, cmd),
        Cmd::Htt(cmd) => htt(&c, &out, cmd),
        Cmd::Pipeline(cmd) => pipeline(&c, &out, cmd),
        Cmd::Plan(a) => plan(&c, &out, a),
        Cmd::Simulate(a) => simulate(&c, &out, a),
        Cmd::GenTasks(a) => gen_tasks(&c, &out, a),
        Cmd::Evaluate(a) => evaluate(&c, &out, a),
        Cmd::Serve { .. } => unreachable!(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.verbose > 0 {
        let level = if cli.verbose > 1 { "debug" } else { "info" };
        tracing_subscriber::fmt()
            .with_writer(io::stderr)
            .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| level.into()))
            .init();
    }
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Domain(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(m)) => {
            eprintln!("usage error: {m}");
            ExitCode::from(2)
        }
    }
}
