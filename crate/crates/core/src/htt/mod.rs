//! Hierarchical task trees: decomposition, sibling ordering and the leaf
//! action sequences that ground them.

mod template;

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::hier::{HierSpec, SpecFormula};
use crate::ltl::{canonical_prop, Formula};

pub use template::{action_formula, generate_ltl};

pub const FORMAT_VERSION: u32 = 1;

pub const DEFAULT_SKILLS: [&str; 8] = ["Pickup", "Move", "Place", "Open", "Close", "Slice", "ToggleOn", "ToggleOff"];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum HttError {
    #[error("invalid task tree: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<TreeViolation>),
    #[error("cyclic ordering among siblings: {}", .0.join(" -> "))]
    Cycle(Vec<String>),
    #[error("relation ({0}, {1}) mentions a task outside the sibling set")]
    UnknownSibling(String, String),
    #[error("verb `{0}` is not in the skill registry")]
    UnregisteredVerb(String),
    #[error("action `{0}` has no arguments")]
    EmptyArgs(String),
    #[error("empty action sequence")]
    EmptyActions,
    #[error("malformed task tree file: {0}")]
    Format(String),
}

/// Set of verbs a robot can execute.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkillRegistry {
    verbs: BTreeSet<String>,
}

impl Default for SkillRegistry {
    fn default() -> Self {
        SkillRegistry::new(DEFAULT_SKILLS)
    }
}

impl SkillRegistry {
    pub fn new<I, S>(verbs: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        SkillRegistry { verbs: verbs.into_iter().map(Into::into).collect() }
    }

    pub fn contains(&self, verb: &str) -> bool {
        self.verbs.contains(verb)
    }

    pub fn verbs(&self) -> impl Iterator<Item = &str> {
        self.verbs.iter().map(String::as_str)
    }

    /// Canonical prop prefixes (`pickup`, `toggle_on`, ...) paired with their verb,
    /// longest prefix first.
    pub fn prefixes(&self) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = self
            .verbs
            .iter()
            .map(|v| (canonical_prop(v, &[] as &[&str]), v.clone()))
            .collect();
        out.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then(a.0.cmp(&b.0)));
        out
    }
}

/// One call into the robot skill API, e.g. `Move(plate, lower_rack)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ApiCall {
    pub verb: String,
    pub args: Vec<String>,
}

impl ApiCall {
    pub fn new<S: Into<String>>(verb: impl Into<String>, args: impl IntoIterator<Item = S>) -> Self {
        ApiCall { verb: verb.into(), args: args.into_iter().map(Into::into).collect() }
    }

    /// Atomic proposition emitted when this call completes.
    pub fn prop(&self) -> String {
        canonical_prop(&self.verb, &self.args)
    }

    /// Parses `Verb(arg, arg)`.
    pub fn parse(s: &str) -> Option<ApiCall> {
        let s = s.trim();
        let open = s.find('(')?;
        let inner = s[open + 1..].strip_suffix(')')?;
        let verb = s[..open].trim();
        if verb.is_empty() || !verb.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return None;
        }
        let args: Vec<String> = inner
            .split(',')
            .map(|a| a.trim().to_string())
            .filter(|a| !a.is_empty())
            .collect();
        Some(ApiCall { verb: verb.to_string(), args })
    }
}

impl fmt::Display for ApiCall {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.verb, self.args.join(", "))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskNode {
    pub instruction: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<String>,
    /// Ordered pairs `(a, b)` over this node's children: `a` completes before `b`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub relations: Vec<(String, String)>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub actions: Vec<ApiCall>,
}

impl TaskNode {
    pub fn new(instruction: impl Into<String>) -> Self {
        TaskNode { instruction: instruction.into(), ..Default::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskTree {
    #[serde(default = "format_version")]
    pub format_version: u32,
    pub root: String,
    pub nodes: BTreeMap<String, TaskNode>,
    /// Objects the task manipulates; derived from leaf actions when absent.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub objects: Vec<String>,
}

fn format_version() -> u32 {
    FORMAT_VERSION
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TreeRule {
    MissingRoot,
    UnknownNode,
    MultipleParents,
    Unreachable,
    BadNodeId,
    RelationSelf,
    RelationNotSiblings,
    RelationCycle,
    LeafWithoutActions,
    ActionsOnNonLeaf,
    UnregisteredVerb,
    EmptyArgs,
    RaggedDepth,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TreeViolation {
    pub rule: TreeRule,
    pub nodes: Vec<String>,
    pub detail: String,
}

impl TreeViolation {
    fn new(rule: TreeRule, nodes: Vec<String>, detail: impl Into<String>) -> Self {
        TreeViolation { rule, nodes, detail: detail.into() }
    }
}

impl fmt::Display for TreeViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:?}] {}: {}", self.rule, self.nodes.join(", "), self.detail)
    }
}

/// `task(_\d+)+`
pub fn is_node_id(s: &str) -> bool {
    match s.strip_prefix("task") {
        Some(rest) if !rest.is_empty() => rest
            .split('_')
            .skip(1)
            .all(|p| !p.is_empty() && p.bytes().all(|b| b.is_ascii_digit()))
            && rest.starts_with('_'),
        _ => false,
    }
}

impl TaskTree {
    pub fn new(root: impl Into<String>, nodes: BTreeMap<String, TaskNode>) -> Self {
        TaskTree { format_version: FORMAT_VERSION, root: root.into(), nodes, objects: Vec::new() }
    }

    pub fn from_json_str(s: &str) -> Result<Self, HttError> {
        let t: TaskTree = serde_json::from_str(s).map_err(|e| HttError::Format(e.to_string()))?;
        if t.format_version != FORMAT_VERSION {
            return Err(HttError::Format(format!("unsupported format_version {}", t.format_version)));
        }
        Ok(t)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("task tree serializes")
    }

    pub fn node(&self, id: &str) -> Option<&TaskNode> {
        self.nodes.get(id)
    }

    pub fn children(&self, id: &str) -> &[String] {
        self.nodes.get(id).map(|n| n.children.as_slice()).unwrap_or(&[])
    }

    pub fn is_leaf(&self, id: &str) -> bool {
        self.children(id).is_empty()
    }

    pub fn parent_map(&self) -> BTreeMap<&str, &str> {
        let mut m = BTreeMap::new();
        for (id, n) in &self.nodes {
            for c in &n.children {
                m.entry(c.as_str()).or_insert(id.as_str());
            }
        }
        m
    }

    /// Node ids in breadth-first order from the root, children in listed order.
    pub fn bfs(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut seen = BTreeSet::new();
        let mut q = VecDeque::new();
        if self.nodes.contains_key(&self.root) {
            q.push_back(self.root.clone());
            seen.insert(self.root.clone());
        }
        while let Some(id) = q.pop_front() {
            for c in self.children(&id) {
                if self.nodes.contains_key(c) && seen.insert(c.clone()) {
                    q.push_back(c.clone());
                }
            }
            out.push(id);
        }
        out
    }

    /// Depth of each reachable node, root at 1.
    pub fn depths(&self) -> BTreeMap<String, usize> {
        let mut d = BTreeMap::new();
        for id in self.bfs() {
            let k = if id == self.root { 1 } else { 0 };
            d.entry(id.clone()).or_insert(k);
            let here = d[&id];
            for c in self.children(&id) {
                d.entry(c.clone()).or_insert(here + 1);
            }
        }
        d
    }

    pub fn leaves(&self) -> Vec<String> {
        self.bfs().into_iter().filter(|id| self.is_leaf(id)).collect()
    }

    /// `(n1, n2)`: non-leaf and leaf node counts.
    pub fn counts(&self) -> (usize, usize) {
        let all = self.bfs();
        let leaves = all.iter().filter(|id| self.is_leaf(id)).count();
        (all.len() - leaves, leaves)
    }

    /// All sibling relations, tagged with the parent that declares them.
    pub fn relations(&self) -> Vec<(String, String, String)> {
        let mut out = Vec::new();
        for (id, n) in &self.nodes {
            for (a, b) in &n.relations {
                out.push((id.clone(), a.clone(), b.clone()));
            }
        }
        out
    }

    /// Explicit object list, or the first argument of every leaf action.
    pub fn objects(&self) -> Vec<String> {
        if !self.objects.is_empty() {
            return self.objects.clone();
        }
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for id in self.leaves() {
            for a in &self.nodes[&id].actions {
                if let Some(o) = a.args.first() {
                    if seen.insert(o.clone()) {
                        out.push(o.clone());
                    }
                }
            }
        }
        out
    }

    pub fn validate(&self, skills: &SkillRegistry) -> Vec<TreeViolation> {
        use TreeRule::*;
        let mut v = Vec::new();
        if !self.nodes.contains_key(&self.root) {
            v.push(TreeViolation::new(MissingRoot, vec![self.root.clone()], "root id has no node"));
            return v;
        }
        for id in self.nodes.keys() {
            if !is_node_id(id) {
                v.push(TreeViolation::new(BadNodeId, vec![id.clone()], "node ids must match task(_<n>)+"));
            }
        }
        let mut parents: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for (id, n) in &self.nodes {
            for c in &n.children {
                if !self.nodes.contains_key(c) {
                    v.push(TreeViolation::new(UnknownNode, vec![id.clone(), c.clone()], "child has no node"));
                }
                parents.entry(c.as_str()).or_default().push(id.as_str());
            }
        }
        for (c, ps) in &parents {
            if ps.len() > 1 || *c == self.root {
                let mut nodes = vec![c.to_string()];
                nodes.extend(ps.iter().map(|p| p.to_string()));
                v.push(TreeViolation::new(MultipleParents, nodes, "node has more than one parent or parents the root"));
            }
        }
        let reachable: BTreeSet<String> = self.bfs().into_iter().collect();
        for id in self.nodes.keys() {
            if !reachable.contains(id) {
                v.push(TreeViolation::new(Unreachable, vec![id.clone()], "not reachable from the root"));
            }
        }
        for (id, n) in &self.nodes {
            let kids: BTreeSet<&str> = n.children.iter().map(String::as_str).collect();
            let mut ok = true;
            for (a, b) in &n.relations {
                if a == b {
                    v.push(TreeViolation::new(RelationSelf, vec![a.clone()], "task ordered before itself"));
                    ok = false;
                } else if !kids.contains(a.as_str()) || !kids.contains(b.as_str()) {
                    v.push(TreeViolation::new(
                        RelationNotSiblings,
                        vec![a.clone(), b.clone()],
                        format!("not both children of {id}"),
                    ));
                    ok = false;
                }
            }
            if ok {
                if let Err(HttError::Cycle(cyc)) = template::order_dag(&n.children, &n.relations) {
                    v.push(TreeViolation::new(RelationCycle, cyc, format!("ordering among children of {id} is cyclic")));
                }
            }
            if n.children.is_empty() {
                if n.actions.is_empty() {
                    v.push(TreeViolation::new(LeafWithoutActions, vec![id.clone()], "leaf has no action sequence"));
                }
            } else if !n.actions.is_empty() {
                v.push(TreeViolation::new(ActionsOnNonLeaf, vec![id.clone()], "only leaves carry actions"));
            }
            for a in &n.actions {
                if !skills.contains(&a.verb) {
                    v.push(TreeViolation::new(UnregisteredVerb, vec![id.clone()], format!("`{}` is not a registered skill", a.verb)));
                }
                if a.args.is_empty() {
                    v.push(TreeViolation::new(EmptyArgs, vec![id.clone()], format!("`{a}` has no arguments")));
                }
            }
        }
        let depths = self.depths();
        let leaf_depths: BTreeMap<usize, Vec<String>> =
            self.leaves().into_iter().fold(BTreeMap::new(), |mut m, id| {
                m.entry(depths[&id]).or_insert_with(Vec::new).push(id);
                m
            });
        if leaf_depths.len() > 1 {
            let nodes: Vec<String> = leaf_depths.values().map(|ids| ids[0].clone()).collect();
            v.push(TreeViolation::new(
                RaggedDepth,
                nodes,
                format!("leaves sit at depths {:?}", leaf_depths.keys().collect::<Vec<_>>()),
            ));
        }
        v.sort();
        v.dedup();
        v
    }

    pub fn ensure_valid(&self, skills: &SkillRegistry) -> Result<(), HttError> {
        let v = self.validate(skills);
        if v.is_empty() {
            Ok(())
        } else {
            Err(HttError::Invalid(v))
        }
    }

    /// Builds the hierarchical specification: one formula per node, named by
    /// node id, at the level equal to the node's depth.
    pub fn construct(&self, skills: &SkillRegistry) -> Result<HierSpec, HttError> {
        self.ensure_valid(skills)?;
        let depths = self.depths();
        let mut levels: Vec<Vec<SpecFormula>> = Vec::new();
        let mut stack = vec![self.root.clone()];
        while let Some(id) = stack.pop() {
            let k = depths[&id];
            let node = &self.nodes[&id];
            let formula = if node.children.is_empty() {
                action_formula(&node.actions, skills)?
            } else {
                // Reversed so that siblings pop in their listed order.
                stack.extend(node.children.iter().rev().cloned());
                generate_ltl(&node.children, &node.relations)?
            };
            if levels.len() < k {
                levels.resize_with(k, Vec::new);
            }
            levels[k - 1].push(SpecFormula { name: id, formula });
        }
        Ok(HierSpec::new(levels))
    }
}

/// Formula for `actions` or `children` of a node, whichever applies.
pub fn node_formula(t: &TaskTree, id: &str, skills: &SkillRegistry) -> Result<Formula, HttError> {
    let n = t.node(id).ok_or_else(|| HttError::Format(format!("no node {id}")))?;
    if n.children.is_empty() {
        action_formula(&n.actions, skills)
    } else {
        generate_ltl(&n.children, &n.relations)
    }
}

/// Parent-to-child id used throughout: `task_1_2` + 3 = `task_1_2_3`.
pub fn child_id(parent: &str, index: usize) -> String {
    format!("{parent}_{index}")
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::hier;
    use crate::ltl::parse;

    fn leaf(instr: &str, obj: &str, rack: &str) -> TaskNode {
        TaskNode {
            instruction: instr.into(),
            actions: vec![ApiCall::new("Pickup", [obj]), ApiCall::new("Move", [obj, rack])],
            ..Default::default()
        }
    }

    pub(crate) fn dishwasher_tree() -> TaskTree {
        let mut nodes = BTreeMap::new();
        nodes.insert(
            "task_1".into(),
            TaskNode {
                instruction: "Put the dishes in the dishwasher".into(),
                children: vec!["task_1_1".into(), "task_1_2".into()],
                relations: vec![("task_1_1".into(), "task_1_2".into())],
                actions: vec![],
            },
        );
        nodes.insert(
            "task_1_1".into(),
            TaskNode {
                instruction: "Load the lower rack".into(),
                children: vec!["task_1_1_1".into(), "task_1_1_2".into(), "task_1_1_3".into()],
                ..Default::default()
            },
        );
        nodes.insert(
            "task_1_2".into(),
            TaskNode {
                instruction: "Load the upper rack".into(),
                children: vec!["task_1_2_1".into(), "task_1_2_2".into()],
                relations: vec![("task_1_2_1".into(), "task_1_2_2".into())],
                actions: vec![],
            },
        );
        nodes.insert("task_1_1_1".into(), leaf("Put plates in the lower rack", "plate", "lower_rack"));
        nodes.insert("task_1_1_2".into(), leaf("Put mugs in the lower rack", "mug", "lower_rack"));
        nodes.insert("task_1_1_3".into(), leaf("Put utensils in the lower rack", "utensil", "lower_rack"));
        nodes.insert("task_1_2_1".into(), leaf("Put saucers in the upper rack", "saucer", "upper_rack"));
        nodes.insert("task_1_2_2".into(), leaf("Put cups in the upper rack", "cup", "upper_rack"));
        TaskTree::new("task_1", nodes)
    }

    fn rules(t: &TaskTree) -> Vec<TreeRule> {
        t.validate(&SkillRegistry::default()).into_iter().map(|v| v.rule).collect()
    }

    #[test]
    fn node_id_grammar() {
        assert!(is_node_id("task_1"));
        assert!(is_node_id("task_1_20_3"));
        assert!(!is_node_id("task"));
        assert!(!is_node_id("task_"));
        assert!(!is_node_id("task_1_"));
        assert!(!is_node_id("task1"));
        assert!(!is_node_id("pickup_plate"));
    }

    #[test]
    fn dishwasher_is_valid() {
        let t = dishwasher_tree();
        assert!(t.validate(&SkillRegistry::default()).is_empty());
        assert_eq!(t.counts(), (3, 5));
        assert_eq!(t.objects(), ["plate", "mug", "utensil", "saucer", "cup"]);
    }

    #[test]
    fn non_sibling_relation_is_reported() {
        let mut t = dishwasher_tree();
        t.nodes.get_mut("task_1").unwrap().relations.push(("task_1_1_1".into(), "task_1_2_1".into()));
        let v = t.validate(&SkillRegistry::default());
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].rule, TreeRule::RelationNotSiblings);
        assert_eq!(v[0].nodes, ["task_1_1_1", "task_1_2_1"]);
    }

    #[test]
    fn cyclic_relation_is_reported() {
        let mut t = dishwasher_tree();
        t.nodes.get_mut("task_1").unwrap().relations.push(("task_1_2".into(), "task_1_1".into()));
        assert_eq!(rules(&t), [TreeRule::RelationCycle]);
    }

    #[test]
    fn structural_violations() {
        let mut t = dishwasher_tree();
        t.nodes.get_mut("task_1_2_2").unwrap().actions.clear();
        t.nodes.get_mut("task_1_1").unwrap().actions.push(ApiCall::new("Open", ["door"]));
        t.nodes.get_mut("task_1_1_1").unwrap().actions.push(ApiCall::new("Fly", ["plate"]));
        t.nodes.insert("task_9".into(), leaf("orphan", "x", "y"));
        t.nodes.insert("bogus".into(), leaf("orphan", "x", "y"));
        let r = rules(&t);
        for want in [
            TreeRule::LeafWithoutActions,
            TreeRule::ActionsOnNonLeaf,
            TreeRule::UnregisteredVerb,
            TreeRule::Unreachable,
            TreeRule::BadNodeId,
        ] {
            assert!(r.contains(&want), "{want:?} missing from {r:?}");
        }
    }

    #[test]
    fn ragged_depth_is_reported() {
        let mut t = dishwasher_tree();
        let n = t.nodes.get_mut("task_1_2").unwrap();
        n.children.clear();
        n.relations.clear();
        n.actions.push(ApiCall::new("Pickup", ["cup"]));
        t.nodes.remove("task_1_2_1");
        t.nodes.remove("task_1_2_2");
        assert_eq!(rules(&t), [TreeRule::RaggedDepth]);
    }

    #[test]
    fn json_round_trip() {
        let t = dishwasher_tree();
        let s = t.to_json_string();
        assert_eq!(TaskTree::from_json_str(&s).unwrap(), t);
        assert!(s.contains("\"relations\""));
        let legacy = r#"{"root":"task_1","nodes":{"task_1":{"instruction":"x","actions":[{"verb":"Pickup","args":["a"]}]}}}"#;
        assert_eq!(TaskTree::from_json_str(legacy).unwrap().format_version, 1);
        assert!(TaskTree::from_json_str(r#"{"format_version":7,"root":"task_1","nodes":{}}"#).is_err());
    }

    #[test]
    fn construct_dishwasher() {
        let spec = dishwasher_tree().construct(&SkillRegistry::default()).unwrap();
        assert!(spec.validate().is_empty());
        assert_eq!(spec.counts(), [1, 2, 5]);
        let l = spec.levels();
        assert_eq!(l[0][0].formula, parse("F(task_1_1 & F task_1_2)").unwrap());
        assert_eq!(l[1][0].name, "task_1_1");
        assert_eq!(l[1][0].formula, parse("F task_1_1_1 & F task_1_1_2 & F task_1_1_3").unwrap());
        assert_eq!(l[1][1].formula, parse("F(task_1_2_1 & F task_1_2_2)").unwrap());
        assert_eq!(l[2][0].name, "task_1_1_1");
        assert_eq!(l[2][0].formula, parse("F(pickup_plate & F move_plate_lower_rack)").unwrap());
        let names: Vec<&str> = l[2].iter().map(|f| f.name.as_str()).collect();
        assert_eq!(names, ["task_1_1_1", "task_1_1_2", "task_1_1_3", "task_1_2_1", "task_1_2_2"]);
    }

    #[test]
    fn construct_single_leaf() {
        let mut nodes = BTreeMap::new();
        nodes.insert("task_1".into(), leaf("Put the plate in the lower rack", "plate", "lower_rack"));
        let spec = TaskTree::new("task_1", nodes).construct(&SkillRegistry::default()).unwrap();
        assert_eq!(spec.depth(), 1);
        assert_eq!(spec.levels()[0][0].formula, parse("F(pickup_plate & F move_plate_lower_rack)").unwrap());
    }

    #[test]
    fn construct_orders_are_respected_by_oracle() {
        let spec = dishwasher_tree().construct(&SkillRegistry::default()).unwrap();
        let seq = |order: &[&str]| {
            let mut steps: Vec<Vec<String>> = Vec::new();
            for o in order {
                let rack = if ["plate", "mug", "utensil"].contains(o) { "lower_rack" } else { "upper_rack" };
                steps.push(vec![format!("pickup_{o}")]);
                steps.push(vec![format!("move_{o}_{rack}")]);
            }
            let refs: Vec<Vec<&str>> = steps.iter().map(|s| s.iter().map(String::as_str).collect()).collect();
            let slices: Vec<&[&str]> = refs.iter().map(Vec::as_slice).collect();
            crate::ltl::Trace::from_names(&slices)
        };
        let ok = seq(&["mug", "plate", "utensil", "saucer", "cup"]);
        // Interleaving is fine as long as the lower rack completes first.
        let mixed = seq(&["plate", "mug", "saucer", "utensil", "cup"]);
        let bad = seq(&["saucer", "cup", "plate", "mug", "utensil"]);
        let swap = seq(&["plate", "mug", "utensil", "cup", "saucer"]);
        let run = |t| hier::satisfies(&spec, &t, hier::SiblingMode::Overlap, 12).unwrap();
        assert!(run(ok).is_some());
        assert!(run(mixed).is_some());
        assert!(run(bad).is_none());
        assert!(run(swap).is_none());
    }

    #[test]
    fn api_call_text() {
        let c = ApiCall::parse("Move(plate, lower_rack)").unwrap();
        assert_eq!(c, ApiCall::new("Move", ["plate", "lower_rack"]));
        assert_eq!(c.to_string(), "Move(plate, lower_rack)");
        assert_eq!(c.prop(), "move_plate_lower_rack");
        assert_eq!(ApiCall::new("ToggleOn", ["stove"]).prop(), "toggle_on_stove");
        assert!(ApiCall::parse("Move plate").is_none());
        let pre = SkillRegistry::default().prefixes();
        assert_eq!(pre[0].0.len(), "toggle_off".len());
    }
}
