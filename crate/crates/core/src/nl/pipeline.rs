use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::pattern::{id_from_display, leaf_sentence, node_sentence};
use super::{FailureClass, Provider, ProviderError, RequestKind, Transcript};
use crate::hier::{is_composite_like, HierSpec};
use crate::htt::{ApiCall, HttError, SkillRegistry, TaskNode, TaskTree, TreeRule};
use crate::ltl::{find_disagreement, parse, Formula, TraceUniverse};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Decompose,
    Relations,
    Complete,
    Translate,
    Construct,
}

impl Stage {
    pub fn class(self) -> FailureClass {
        match self {
            Stage::Decompose | Stage::Construct => FailureClass::Decomposition,
            Stage::Relations => FailureClass::TemporalExtraction,
            Stage::Complete => FailureClass::ActionCompletion,
            Stage::Translate => FailureClass::LtlTranslation,
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Decompose => "decompose",
            Stage::Relations => "relations",
            Stage::Complete => "complete",
            Stage::Translate => "translate",
            Stage::Construct => "construct",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PipelineFailure {
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error("schema error: {0}")]
    Schema(String),
    #[error(transparent)]
    Htt(#[from] HttError),
}

/// A failed run, with everything recorded up to the failure.
#[derive(Debug, Clone, thiserror::Error)]
#[error("{stage} stage failed ({}): {failure}", stage.class())]
pub struct PipelineError {
    pub stage: Stage,
    pub failure: PipelineFailure,
    pub transcript: Transcript,
}

/// Translation that disagrees with the constructed formula.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Warning {
    pub node: String,
    pub class: FailureClass,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct PipelineOptions {
    pub skills: SkillRegistry,
    /// Longest trace used when comparing translated and constructed formulas.
    pub crosscheck_len: usize,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions { skills: SkillRegistry::default(), crosscheck_len: 5 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineOutput {
    pub tree: TaskTree,
    pub spec: HierSpec,
    pub transcript: Transcript,
    pub warnings: Vec<Warning>,
}

struct Run<'a> {
    provider: &'a dyn Provider,
    transcript: Transcript,
}

impl Run<'_> {
    fn ask(&mut self, stage: Stage, kind: RequestKind, payload: Value) -> Result<String, (Stage, PipelineFailure)> {
        let out = self.provider.call(kind, &payload).map_err(|e| (stage, e.into()))?;
        self.transcript.push(kind, payload, out.clone());
        Ok(out)
    }
}

/// One decomposition request, then per node (breadth-first) an ordering
/// request for non-leaves or an action request for leaves, then one
/// translation request per node: `2 * (n1 + n2) + 1` calls in all.
pub fn run_pipeline(instruction: &str, provider: &dyn Provider, opts: &PipelineOptions) -> Result<PipelineOutput, PipelineError> {
    let mut run = Run { provider, transcript: Transcript::new(instruction) };
    match drive(instruction, &mut run, opts) {
        Ok((tree, spec, warnings)) => Ok(PipelineOutput { tree, spec, transcript: run.transcript, warnings }),
        Err((stage, failure)) => Err(PipelineError { stage, failure, transcript: run.transcript }),
    }
}

type Staged<T> = Result<T, (Stage, PipelineFailure)>;

fn schema(stage: Stage, msg: impl Into<String>) -> (Stage, PipelineFailure) {
    (stage, PipelineFailure::Schema(msg.into()))
}

fn drive(instruction: &str, run: &mut Run, opts: &PipelineOptions) -> Staged<(TaskTree, HierSpec, Vec<Warning>)> {
    if instruction.trim().is_empty() {
        return Err(schema(Stage::Decompose, "empty instruction"));
    }
    let text = run.ask(Stage::Decompose, RequestKind::Decompose, json!({ "instruction": instruction }))?;
    let mut tree = parse_decomposition(&text, &opts.skills)?;
    let order = tree.bfs();

    for id in &order {
        let node = tree.nodes[id].clone();
        if node.children.is_empty() {
            let payload = json!({ "node": id, "instruction": node.instruction });
            let text = run.ask(Stage::Complete, RequestKind::Complete, payload)?;
            let actions = parse_actions(&text, &opts.skills).map_err(|m| schema(Stage::Complete, format!("{id}: {m}")))?;
            tree.nodes.get_mut(id).unwrap().actions = actions;
        } else {
            let children: Vec<Value> = node
                .children
                .iter()
                .map(|c| json!({ "id": c, "instruction": tree.nodes[c].instruction }))
                .collect();
            let payload = json!({ "parent": id, "instruction": node.instruction, "children": children });
            let text = run.ask(Stage::Relations, RequestKind::Relations, payload)?;
            let rel = parse_relations(&text, &node).map_err(|m| schema(Stage::Relations, format!("{id}: {m}")))?;
            tree.nodes.get_mut(id).unwrap().relations = rel;
        }
    }
    let violations = tree.validate(&opts.skills);
    if let Some(v) = violations.iter().find(|v| v.rule == TreeRule::RelationCycle) {
        return Err(schema(Stage::Relations, v.to_string()));
    }

    let mut translated: BTreeMap<String, Formula> = BTreeMap::new();
    for id in &order {
        let node = &tree.nodes[id];
        let sentence = if node.children.is_empty() { leaf_sentence(&node.actions) } else { node_sentence(node) };
        let text = run.ask(Stage::Translate, RequestKind::Translate, json!({ "node": id, "sentence": sentence }))?;
        let f = parse(text.trim()).map_err(|e| schema(Stage::Translate, format!("{id}: {e}")))?;
        translated.insert(id.clone(), f);
    }

    let spec = tree.construct(&opts.skills).map_err(|e| (Stage::Construct, e.into()))?;
    let mut warnings = Vec::new();
    for level in spec.levels() {
        for sf in level {
            let t = &translated[&sf.name];
            if let Some(detail) = crosscheck(&sf.formula, t, opts.crosscheck_len) {
                warnings.push(Warning { node: sf.name.clone(), class: FailureClass::LtlTranslation, detail });
            }
        }
    }
    Ok((tree, spec, warnings))
}

/// Compares on pulse traces, shortening the bound so the enumeration stays
/// under about a million traces. Formulas over composite propositions only
/// see each proposition once.
pub(crate) fn crosscheck(expected: &Formula, got: &Formula, max_len: usize) -> Option<String> {
    let mut props = expected.props();
    for p in got.props() {
        if !props.contains(&p) {
            props.push(p);
        }
    }
    let mut len = max_len;
    while len > 1 && ((props.len() + 1) as f64).powi(len as i32) > 1e6 {
        len -= 1;
    }
    let universe = if props.iter().all(|p| is_composite_like(p)) { TraceUniverse::Once } else { TraceUniverse::Pulse };
    match find_disagreement(expected, got, len, universe) {
        Ok(None) => None,
        Ok(Some(t)) => {
            let steps: Vec<String> = t
                .steps
                .iter()
                .map(|v| if v.is_empty() { "-".to_string() } else { v.iter().cloned().collect::<Vec<_>>().join("+") })
                .collect();
            Some(format!("`{got}` differs from `{expected}` on [{}]", steps.join(", ")))
        }
        Err(e) => Some(format!("cannot compare `{got}` with `{expected}`: {e}")),
    }
}

fn parse_decomposition(text: &str, skills: &SkillRegistry) -> Staged<TaskTree> {
    #[derive(Deserialize)]
    struct Skeleton {
        root: String,
        nodes: BTreeMap<String, SkeletonNode>,
    }
    #[derive(Deserialize)]
    struct SkeletonNode {
        instruction: String,
        #[serde(default)]
        children: Vec<String>,
    }
    let sk: Skeleton =
        serde_json::from_str(text).map_err(|e| schema(Stage::Decompose, format!("not a task tree: {e}")))?;
    let norm = |s: &str| id_from_display(s);
    let nodes = sk
        .nodes
        .into_iter()
        .map(|(id, n)| {
            let node = TaskNode {
                instruction: n.instruction,
                children: n.children.iter().map(|c| norm(c)).collect(),
                ..Default::default()
            };
            (norm(&id), node)
        })
        .collect();
    let tree = TaskTree::new(norm(&sk.root), nodes);
    let structural: Vec<String> = tree
        .validate(skills)
        .into_iter()
        .filter(|v| v.rule != TreeRule::LeafWithoutActions)
        .map(|v| v.to_string())
        .collect();
    if !structural.is_empty() {
        return Err(schema(Stage::Decompose, structural.join("; ")));
    }
    Ok(tree)
}

fn parse_relations(text: &str, node: &TaskNode) -> Result<Vec<(String, String)>, String> {
    let raw: Vec<(String, String)> = serde_json::from_str(text).map_err(|e| format!("expected [[a, b], ...]: {e}"))?;
    let mut out = Vec::new();
    for (a, b) in raw {
        let (a, b) = (id_from_display(&a), id_from_display(&b));
        if !node.children.contains(&a) || !node.children.contains(&b) || a == b {
            return Err(format!("({a}, {b}) is not a pair of distinct children"));
        }
        if !out.contains(&(a.clone(), b.clone())) {
            out.push((a, b));
        }
    }
    Ok(out)
}

/// Accepts a JSON array of `Verb(args)` strings, or one call per line.
fn parse_actions(text: &str, skills: &SkillRegistry) -> Result<Vec<ApiCall>, String> {
    let items: Vec<String> = match serde_json::from_str::<Vec<String>>(text) {
        Ok(v) => v,
        Err(_) => text
            .lines()
            .flat_map(|l| l.split(';'))
            .map(|l| l.trim().trim_start_matches(|c: char| c.is_ascii_digit() || c == '.' || c == '-').trim())
            .filter(|l| !l.is_empty())
            .map(String::from)
            .collect(),
    };
    if items.is_empty() {
        return Err("no actions".into());
    }
    items
        .iter()
        .map(|s| {
            let c = ApiCall::parse(s).ok_or_else(|| format!("`{s}` is not a call"))?;
            if !skills.contains(&c.verb) {
                return Err(format!("`{}` is not a registered skill", c.verb));
            }
            if c.args.is_empty() {
                return Err(format!("`{s}` has no arguments"));
            }
            Ok(c)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::htt::tests::dishwasher_tree;
    use crate::nl::{FixtureProvider, LayeredProvider, PatternProvider, TreeProvider};

    const INSTR: &str = "Put the plates, mugs and utensils in the lower rack, then the saucers and cups in the upper rack.";

    fn record() -> PipelineOutput {
        let p = TreeProvider::new(dishwasher_tree(), SkillRegistry::default());
        run_pipeline(INSTR, &p, &PipelineOptions::default()).unwrap()
    }

    #[test]
    fn dishwasher_call_count() {
        let out = record();
        assert_eq!(out.transcript.len(), 17);
        assert_eq!(out.transcript.count(RequestKind::Decompose), 1);
        assert_eq!(out.transcript.count(RequestKind::Relations), 3);
        assert_eq!(out.transcript.count(RequestKind::Complete), 5);
        assert_eq!(out.transcript.count(RequestKind::Translate), 8);
        assert!(out.warnings.is_empty(), "{:?}", out.warnings);
        assert_eq!(out.tree, dishwasher_tree());
    }

    #[test]
    fn replay_is_byte_identical() {
        let rec = record();
        let fx = FixtureProvider::from_transcript(&rec.transcript);
        let a = run_pipeline(INSTR, &fx, &PipelineOptions::default()).unwrap();
        let b = run_pipeline(INSTR, &fx, &PipelineOptions::default()).unwrap();
        assert_eq!(a.spec.to_json_string(), rec.spec.to_json_string());
        assert_eq!(a.spec.to_json_string(), b.spec.to_json_string());
        assert_eq!(a.tree.to_json_string(), rec.tree.to_json_string());
    }

    #[test]
    fn pattern_translation_agrees_with_construction() {
        let rec = record();
        let mut t = rec.transcript.clone();
        t.entries.retain(|e| e.kind != RequestKind::Translate);
        let p = LayeredProvider { primary: FixtureProvider::from_transcript(&t), secondary: PatternProvider };
        let out = run_pipeline(INSTR, &p, &PipelineOptions::default()).unwrap();
        assert!(out.warnings.is_empty(), "{:?}", out.warnings);
        assert_eq!(out.transcript.len(), 17);
    }

    #[test]
    fn divergent_translation_is_a_warning() {
        let mut rec = record().transcript;
        let root = rec.entries.iter_mut().find(|e| e.kind == RequestKind::Translate).unwrap();
        root.response = "F task_1_1 & F task_1_2".into();
        let out = run_pipeline(INSTR, &FixtureProvider::from_transcript(&rec), &PipelineOptions::default()).unwrap();
        assert_eq!(out.warnings.len(), 1);
        assert_eq!(out.warnings[0].node, "task_1");
        assert_eq!(out.warnings[0].class, FailureClass::LtlTranslation);
    }

    #[test]
    fn failures_name_stage_and_keep_transcript() {
        let mut rec = record().transcript;
        rec.entries.retain(|e| e.kind != RequestKind::Complete || !e.payload["node"].as_str().unwrap().ends_with("_2_2"));
        let err = run_pipeline(INSTR, &FixtureProvider::from_transcript(&rec), &PipelineOptions::default()).unwrap_err();
        assert_eq!(err.stage, Stage::Complete);
        assert!(matches!(err.failure, PipelineFailure::Provider(ProviderError::CacheMiss { .. })));
        assert_eq!(err.transcript.len(), 1 + 3 + 4);

        let mut bad = record().transcript;
        bad.entries[0].response = r#"{"root":"task_1","nodes":{"task_1":{"instruction":"x","children":["task_1_9"]}}}"#.into();
        let err = run_pipeline(INSTR, &FixtureProvider::from_transcript(&bad), &PipelineOptions::default()).unwrap_err();
        assert_eq!(err.stage, Stage::Decompose);
        assert_eq!(err.stage.class(), FailureClass::Decomposition);
    }

    #[test]
    fn single_leaf_makes_three_calls() {
        let mut nodes = BTreeMap::new();
        nodes.insert(
            "task_1".to_string(),
            TaskNode {
                instruction: "Put the plate in the lower rack".into(),
                actions: vec![ApiCall::new("Pickup", ["plate"]), ApiCall::new("Move", ["plate", "lower_rack"])],
                ..Default::default()
            },
        );
        let p = TreeProvider::new(TaskTree::new("task_1", nodes), SkillRegistry::default());
        let out = run_pipeline("Put the plate in the lower rack", &p, &PipelineOptions::default()).unwrap();
        assert_eq!(out.transcript.len(), 3);
        assert!(run_pipeline("  ", &p, &PipelineOptions::default()).is_err());
    }

    #[test]
    fn action_text_forms() {
        let reg = SkillRegistry::default();
        let a = parse_actions(r#"["Pickup(plate)", "Move(plate, lower_rack)"]"#, &reg).unwrap();
        let b = parse_actions("1. Pickup(plate)\n2. Move(plate, lower_rack)\n", &reg).unwrap();
        assert_eq!(a, b);
        assert!(parse_actions("Juggle(plate)", &reg).is_err());
        assert!(parse_actions("", &reg).is_err());
    }
}
