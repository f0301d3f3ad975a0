//! Leveled sets of flat co-safe formulas linked by composite propositions.
//!
//! Level `L1` holds the single root formula. A formula at level `k` refers to
//! formulas at level `k + 1` through propositions carrying their names, and
//! only the lowest level mentions atomic (action) propositions.

mod monitor;
mod oracle;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::ltl::{is_sc_ltl, Formula, LtlError, PropKind};

pub use monitor::{Monitor, MonitorState};
pub use oracle::{check_assignment, satisfies, Interval, IntervalAssignment, DEFAULT_ORACLE_CAP};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum HierError {
    #[error("invalid hierarchical specification: {}", render_violations(.0))]
    Invalid(Vec<Violation>),
    #[error("trace of length {len} exceeds the oracle cap of {cap}")]
    Capacity { len: usize, cap: usize },
    #[error(transparent)]
    Ltl(#[from] LtlError),
    #[error("malformed specification file: {0}")]
    Format(String),
}

fn render_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

/// How sibling intervals may relate when checking or planning.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SiblingMode {
    /// Siblings may be pursued concurrently.
    #[default]
    Overlap,
    /// Sibling intervals are pairwise disjoint.
    Serial,
}

impl std::str::FromStr for SiblingMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "overlap" => Ok(SiblingMode::Overlap),
            "serial" => Ok(SiblingMode::Serial),
            other => Err(format!("unknown sibling mode {other:?} (expected overlap|serial)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpecFormula {
    pub name: String,
    pub formula: Formula,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Rule {
    /// A non-lowest formula refers to something other than a formula one level down.
    #[serde(rename = "rule-1")]
    DerivedFromNextLevel,
    /// A formula below the root is referenced by zero or several parents.
    #[serde(rename = "rule-2")]
    IncludedExactlyOnce,
    /// Atomic propositions above the lowest level.
    #[serde(rename = "rule-3")]
    AtomicOnlyAtLowest,
    #[serde(rename = "unresolved-name")]
    UnresolvedName,
    #[serde(rename = "multi-root")]
    SingleRoot,
    #[serde(rename = "duplicate-name")]
    DuplicateName,
    #[serde(rename = "not-co-safe")]
    NotCoSafe,
    #[serde(rename = "empty-level")]
    EmptyLevel,
}

impl Rule {
    pub fn id(self) -> &'static str {
        match self {
            Rule::DerivedFromNextLevel => "rule-1",
            Rule::IncludedExactlyOnce => "rule-2",
            Rule::AtomicOnlyAtLowest => "rule-3",
            Rule::UnresolvedName => "unresolved-name",
            Rule::SingleRoot => "multi-root",
            Rule::DuplicateName => "duplicate-name",
            Rule::NotCoSafe => "not-co-safe",
            Rule::EmptyLevel => "empty-level",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Violation {
    pub rule: Rule,
    pub formula: String,
    pub prop: Option<String>,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.rule.id(), self.formula)?;
        if let Some(p) = &self.prop {
            write!(f, " ({p})")?;
        }
        write!(f, ": {}", self.detail)
    }
}

/// Names that can only denote formulas: task-tree node ids and the
/// auto-generated `phi_<level>_<index>` names.
pub fn is_composite_like(name: &str) -> bool {
    fn numbered(rest: &str) -> bool {
        !rest.is_empty()
            && rest
                .split('_')
                .all(|part| !part.is_empty() && part.bytes().all(|b| b.is_ascii_digit()))
    }
    if let Some(rest) = name.strip_prefix("task_") {
        return numbered(rest);
    }
    if let Some(rest) = name.strip_prefix("phi_") {
        return numbered(rest) && rest.split('_').count() == 2;
    }
    false
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HierSpec {
    levels: Vec<Vec<SpecFormula>>,
}

#[derive(Serialize, Deserialize)]
struct SpecFile {
    #[serde(default = "default_version")]
    format_version: u32,
    levels: Vec<Vec<EntryFile>>,
}

#[derive(Serialize, Deserialize)]
struct EntryFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    formula: Formula,
}

fn default_version() -> u32 {
    FORMAT_VERSION
}

impl Serialize for HierSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        SpecFile {
            format_version: FORMAT_VERSION,
            levels: self
                .levels
                .iter()
                .map(|l| {
                    l.iter()
                        .map(|e| EntryFile {
                            name: Some(e.name.clone()),
                            formula: e.formula.clone(),
                        })
                        .collect()
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for HierSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let file = SpecFile::deserialize(d)?;
        if file.format_version != FORMAT_VERSION {
            return Err(serde::de::Error::custom(format!(
                "unsupported format_version {}",
                file.format_version
            )));
        }
        let levels = file
            .levels
            .into_iter()
            .enumerate()
            .map(|(k, l)| {
                l.into_iter()
                    .enumerate()
                    .map(|(i, e)| SpecFormula {
                        name: e.name.unwrap_or_else(|| auto_name(k + 1, i + 1)),
                        formula: e.formula,
                    })
                    .collect()
            })
            .collect();
        Ok(HierSpec { levels })
    }
}

/// `phi_<level>_<index>`, both 1-based.
pub fn auto_name(level: usize, index: usize) -> String {
    format!("phi_{level}_{index}")
}

impl HierSpec {
    pub fn new(levels: Vec<Vec<SpecFormula>>) -> Self {
        HierSpec { levels }
    }

    /// Levels of bare formulas, named `phi_<level>_<index>`.
    pub fn from_formulas(levels: Vec<Vec<Formula>>) -> Self {
        HierSpec {
            levels: levels
                .into_iter()
                .enumerate()
                .map(|(k, l)| {
                    l.into_iter()
                        .enumerate()
                        .map(|(i, formula)| SpecFormula {
                            name: auto_name(k + 1, i + 1),
                            formula,
                        })
                        .collect()
                })
                .collect(),
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self, HierError> {
        serde_json::from_str(s).map_err(|e| HierError::Format(e.to_string()))
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    pub fn levels(&self) -> &[Vec<SpecFormula>] {
        &self.levels
    }

    /// Number of levels `K`.
    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    /// Formula count per level.
    pub fn counts(&self) -> Vec<usize> {
        self.levels.iter().map(Vec::len).collect()
    }

    pub fn len(&self) -> usize {
        self.levels.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Formula name -> (level, index), both 0-based. First occurrence wins.
    pub fn child_map(&self) -> BTreeMap<String, (usize, usize)> {
        let mut m = BTreeMap::new();
        for (k, l) in self.levels.iter().enumerate() {
            for (i, e) in l.iter().enumerate() {
                m.entry(e.name.clone()).or_insert((k, i));
            }
        }
        m
    }

    pub fn get(&self, name: &str) -> Option<&SpecFormula> {
        self.levels.iter().flatten().find(|e| e.name == name)
    }

    pub fn root(&self) -> Option<&SpecFormula> {
        self.levels.first().and_then(|l| l.first())
    }

    pub fn prop_kind(&self, prop: &str) -> PropKind {
        if self.get(prop).is_some() || is_composite_like(prop) {
            PropKind::Composite
        } else {
            PropKind::Atomic
        }
    }

    /// Lowest-level formulas in level-major, index-minor order.
    pub fn leaf_specs(&self) -> Vec<(String, Formula)> {
        self.levels
            .last()
            .map(|l| l.iter().map(|e| (e.name.clone(), e.formula.clone())).collect())
            .unwrap_or_default()
    }

    /// Atomic propositions of all leaf formulas, sorted.
    pub fn atomic_props(&self) -> BTreeSet<String> {
        self.leaf_specs().iter().flat_map(|(_, f)| f.props()).collect()
    }

    /// Child formula names of `name`, in order of first mention.
    pub fn children(&self, name: &str) -> Vec<String> {
        let Some(e) = self.get(name) else { return Vec::new() };
        e.formula
            .props()
            .into_iter()
            .filter(|p| self.get(p).is_some())
            .collect()
    }

    /// Check Def.-1 style well-formedness. Empty iff valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let v = |rule, formula: &str, prop: Option<&str>, detail: String| Violation {
            rule,
            formula: formula.to_string(),
            prop: prop.map(str::to_string),
            detail,
        };
        let k_max = self.levels.len();
        if self.levels.first().map_or(0, Vec::len) != 1 {
            out.push(v(
                Rule::SingleRoot,
                "L1",
                None,
                format!("expected exactly one root formula, found {}", self.levels.first().map_or(0, Vec::len)),
            ));
        }
        for (k, l) in self.levels.iter().enumerate() {
            if l.is_empty() {
                out.push(v(Rule::EmptyLevel, &format!("L{}", k + 1), None, "level has no formulas".into()));
            }
        }

        let mut seen = BTreeSet::new();
        for e in self.levels.iter().flatten() {
            if !seen.insert(e.name.as_str()) {
                out.push(v(Rule::DuplicateName, &e.name, None, "name defined more than once".into()));
            }
        }
        let map = self.child_map();

        // parent counts for rule 2
        let mut referenced_by: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
        for (k, l) in self.levels.iter().enumerate() {
            for e in l {
                if !is_sc_ltl(&e.formula) {
                    out.push(v(Rule::NotCoSafe, &e.name, None, format!("{} is not co-safe", e.formula)));
                }
                let lowest = k + 1 == k_max;
                for p in e.formula.props() {
                    match map.get(&p) {
                        Some(&(pk, _)) if pk == k + 1 => {
                            referenced_by.entry(self.levels[pk][map[&p].1].name.as_str()).or_default().insert(&e.name);
                        }
                        Some(&(pk, _)) => out.push(v(
                            Rule::DerivedFromNextLevel,
                            &e.name,
                            Some(&p),
                            format!("refers to a level-{} formula from level {}", pk + 1, k + 1),
                        )),
                        None if is_composite_like(&p) => out.push(v(
                            Rule::UnresolvedName,
                            &e.name,
                            Some(&p),
                            "composite proposition names no formula".into(),
                        )),
                        None if !lowest => out.push(v(
                            Rule::AtomicOnlyAtLowest,
                            &e.name,
                            Some(&p),
                            format!("atomic proposition at level {} of {}", k + 1, k_max),
                        )),
                        None => {}
                    }
                }
            }
        }
        for l in self.levels.iter().skip(1) {
            for e in l {
                let n = referenced_by.get(e.name.as_str()).map_or(0, BTreeSet::len);
                if n != 1 {
                    out.push(v(
                        Rule::IncludedExactlyOnce,
                        &e.name,
                        None,
                        format!("included in {n} formulas at the next higher level"),
                    ));
                }
            }
        }
        out.sort();
        out.dedup();
        out
    }

    pub fn ensure_valid(&self) -> Result<(), HierError> {
        let v = self.validate();
        if v.is_empty() {
            Ok(())
        } else {
            Err(HierError::Invalid(v))
        }
    }

    /// GraphViz rendering of the specification hierarchy.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph spec {\n  node [shape=box];\n");
        for e in self.levels.iter().flatten() {
            let label = format!("{}: {}", e.name, e.formula).replace('"', "\\\"");
            out.push_str(&format!("  \"{}\" [label=\"{}\"];\n", e.name, label));
        }
        for e in self.levels.iter().flatten() {
            for c in self.children(&e.name) {
                out.push_str(&format!("  \"{}\" -> \"{}\";\n", e.name, c));
            }
        }
        out.push_str("}\n");
        out
    }
}

/// Indexed view of a valid specification as a tree.
#[derive(Debug, Clone)]
pub(crate) struct SpecTree {
    pub names: Vec<String>,
    pub formulas: Vec<Formula>,
    pub children: Vec<Vec<usize>>,
    pub parent: Vec<Option<usize>>,
    pub is_leaf: Vec<bool>,
}

impl SpecTree {
    /// Node 0 is the root; nodes are in level order.
    pub fn new(spec: &HierSpec) -> Result<SpecTree, HierError> {
        spec.ensure_valid()?;
        let order: Vec<&SpecFormula> = spec.levels.iter().flatten().collect();
        let index: BTreeMap<&str, usize> = order.iter().enumerate().map(|(i, e)| (e.name.as_str(), i)).collect();
        let k_max = spec.depth();
        let mut t = SpecTree {
            names: order.iter().map(|e| e.name.clone()).collect(),
            formulas: order.iter().map(|e| e.formula.clone()).collect(),
            children: vec![Vec::new(); order.len()],
            parent: vec![None; order.len()],
            is_leaf: vec![false; order.len()],
        };
        let mut pos = 0;
        for (k, l) in spec.levels.iter().enumerate() {
            for _ in l {
                t.is_leaf[pos] = k + 1 == k_max;
                pos += 1;
            }
        }
        for (i, e) in order.iter().enumerate() {
            if t.is_leaf[i] {
                continue;
            }
            for c in spec.children(&e.name) {
                let ci = index[c.as_str()];
                t.children[i].push(ci);
                t.parent[ci] = Some(i);
            }
        }
        Ok(t)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ltl::parse;

    pub(crate) fn dishwasher() -> HierSpec {
        let f = |s: &str| parse(s).unwrap();
        HierSpec::from_formulas(vec![
            vec![f("F(phi_2_1 & F phi_2_2)")],
            vec![f("F plates_l & F mugs_l & F utensils_l"), f("F(saucers_u & F cups_u)")],
        ])
    }

    fn rules(s: &HierSpec) -> Vec<Rule> {
        s.validate().into_iter().map(|v| v.rule).collect()
    }

    #[test]
    fn dishwasher_is_valid() {
        let s = dishwasher();
        assert!(s.validate().is_empty(), "{:?}", s.validate());
        assert_eq!(s.depth(), 2);
        assert_eq!(s.counts(), vec![1, 2]);
        let leaves: Vec<String> = s.leaf_specs().into_iter().map(|(n, _)| n).collect();
        assert_eq!(leaves, vec!["phi_2_1", "phi_2_2"]);
        assert_eq!(s.prop_kind("phi_2_1"), PropKind::Composite);
        assert_eq!(s.prop_kind("cups_u"), PropKind::Atomic);
    }

    #[test]
    fn double_reference_breaks_rule_2() {
        let f = |s: &str| parse(s).unwrap();
        let s = HierSpec::from_formulas(vec![
            vec![f("F(phi_2_1 & F phi_2_2)"), f("F phi_2_2")],
            vec![f("F plates_l"), f("F cups_u")],
        ]);
        let r = rules(&s);
        assert!(r.contains(&Rule::IncludedExactlyOnce));
        assert!(r.contains(&Rule::SingleRoot));
    }

    #[test]
    fn atomic_in_root_breaks_rule_3() {
        let f = |s: &str| parse(s).unwrap();
        let s = HierSpec::from_formulas(vec![
            vec![f("F(phi_2_1 & F phi_2_2) & F plates_l")],
            vec![f("F plates_l & F mugs_l"), f("F(saucers_u & F cups_u)")],
        ]);
        assert_eq!(rules(&s), vec![Rule::AtomicOnlyAtLowest]);
        let bad = &s.validate()[0];
        assert_eq!(bad.formula, "phi_1_1");
        assert_eq!(bad.prop.as_deref(), Some("plates_l"));
    }

    #[test]
    fn unresolved_and_skipped_levels() {
        let f = |s: &str| parse(s).unwrap();
        let s = HierSpec::from_formulas(vec![vec![f("F(phi_2_1 & F phi_2_9)")], vec![f("F a")]]);
        assert_eq!(rules(&s), vec![Rule::UnresolvedName]);

        let s = HierSpec::from_formulas(vec![
            vec![f("F phi_2_1 & F phi_3_1")],
            vec![f("F phi_3_2")],
            vec![f("F a"), f("F b")],
        ]);
        let r = rules(&s);
        assert!(r.contains(&Rule::DerivedFromNextLevel));
        assert!(r.contains(&Rule::IncludedExactlyOnce));
    }

    #[test]
    fn json_roundtrip_and_auto_names() {
        let text = r#"{"levels":[[{"formula":"F(phi_2_1 & F phi_2_2)"}],[{"formula":"F a"},{"name":"phi_2_2","formula":{"op":"F","args":[{"op":"prop","name":"b"}]}}]]}"#;
        let s = HierSpec::from_json_str(text).unwrap();
        assert_eq!(s.root().unwrap().name, "phi_1_1");
        assert!(s.validate().is_empty());
        let out = s.to_json_string();
        assert_eq!(HierSpec::from_json_str(&out).unwrap(), s);
        let again = HierSpec::from_json_str(&out).unwrap().to_json_string();
        assert_eq!(out, again);
    }

    #[test]
    fn composite_like_names() {
        assert!(is_composite_like("task_1_2_3"));
        assert!(is_composite_like("phi_2_1"));
        assert!(!is_composite_like("phi_2"));
        assert!(!is_composite_like("task_"));
        assert!(!is_composite_like("pickup_plate"));
    }

    #[test]
    fn spec_tree_shape() {
        let t = SpecTree::new(&dishwasher()).unwrap();
        assert_eq!(t.children[0], vec![1, 2]);
        assert_eq!(t.parent[2], Some(0));
        assert_eq!(t.is_leaf, vec![false, true, true]);
    }
}
