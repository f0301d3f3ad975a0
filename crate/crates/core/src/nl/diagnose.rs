use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::pipeline::crosscheck;
use super::FailureClass;
use crate::hier::HierSpec;
use crate::htt::{action_formula, SkillRegistry, TaskTree};
use crate::ltl::{CompiledFormula, Formula};

/// First divergence from a reference specification, if any.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnosis {
    pub class: Option<FailureClass>,
    pub node: Option<String>,
    pub detail: String,
}

impl Diagnosis {
    fn found(class: FailureClass, node: Option<&str>, detail: String) -> Self {
        Diagnosis { class: Some(class), node: node.map(String::from), detail }
    }
}

const MAX_PERMUTED: usize = 8;

/// Order pairs `(a, b)` that hold in every accepted run where each child
/// pulses exactly once, one per step. `None` when no such run is accepted or
/// there are too many children to enumerate.
pub fn implied_order(f: &Formula, children: &[String]) -> Option<BTreeSet<(String, String)>> {
    if children.len() > MAX_PERMUTED {
        return None;
    }
    let c = CompiledFormula::new(f).ok()?;
    let bits: Vec<u64> = children.iter().map(|ch| c.prop_index(ch).map_or(0, |i| 1 << i)).collect();
    let n = children.len();
    // before[a][b]: a preceded b in every accepted permutation so far.
    let mut before = vec![vec![true; n]; n];
    let mut any = false;
    let mut perm: Vec<usize> = (0..n).collect();
    loop {
        let masks: Vec<u64> = perm.iter().map(|&i| bits[i]).collect();
        if c.eval_masks(&masks) {
            any = true;
            let mut pos = vec![0; n];
            for (k, &i) in perm.iter().enumerate() {
                pos[i] = k;
            }
            for a in 0..n {
                for b in 0..n {
                    if pos[a] >= pos[b] {
                        before[a][b] = false;
                    }
                }
            }
        }
        if !next_permutation(&mut perm) {
            break;
        }
    }
    any.then(|| {
        let mut out = BTreeSet::new();
        for a in 0..n {
            for b in 0..n {
                if a != b && before[a][b] {
                    out.insert((children[a].clone(), children[b].clone()));
                }
            }
        }
        out
    })
}

fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

fn closure(pairs: &[(String, String)]) -> BTreeSet<(String, String)> {
    let mut out: BTreeSet<(String, String)> = pairs.iter().cloned().collect();
    loop {
        let mut added = false;
        let snapshot: Vec<_> = out.iter().cloned().collect();
        for (a, b) in &snapshot {
            for (c, d) in &snapshot {
                if b == c && a != d && out.insert((a.clone(), d.clone())) {
                    added = true;
                }
            }
        }
        if !added {
            return out;
        }
    }
}

/// Classifies where a generated tree and specification first diverge from a
/// reference: node sets (decomposition), sibling order (temporal
/// extraction), leaf action sequences (action completion), and finally the
/// formulas themselves (translation).
pub fn diagnose(t: &TaskTree, spec: &HierSpec, reference: &HierSpec, skills: &SkillRegistry) -> Diagnosis {
    let ours: BTreeSet<String> = t.bfs().into_iter().collect();
    let theirs: BTreeSet<String> = reference.levels().iter().flatten().map(|f| f.name.clone()).collect();
    if ours != theirs {
        let missing: Vec<&String> = theirs.difference(&ours).collect();
        let extra: Vec<&String> = ours.difference(&theirs).collect();
        return Diagnosis::found(
            FailureClass::Decomposition,
            missing.first().or(extra.first()).map(|s| s.as_str()),
            format!("missing {missing:?}, extra {extra:?}"),
        );
    }
    let depth = reference.depth();
    for (k, level) in reference.levels().iter().enumerate() {
        if k + 1 == depth {
            break;
        }
        for sf in level {
            let kids = reference.children(&sf.name);
            let want = implied_order(&sf.formula, &kids);
            let have = closure(t.node(&sf.name).map(|n| n.relations.as_slice()).unwrap_or(&[]));
            if let Some(want) = want {
                if want != have {
                    let spurious: Vec<_> = have.difference(&want).collect();
                    let lost: Vec<_> = want.difference(&have).collect();
                    return Diagnosis::found(
                        FailureClass::TemporalExtraction,
                        Some(&sf.name),
                        format!("spurious {spurious:?}, missing {lost:?}"),
                    );
                }
            }
        }
    }
    for (name, want) in reference.leaf_specs() {
        let actions = t.node(&name).map(|n| n.actions.clone()).unwrap_or_default();
        let detail = match action_formula(&actions, skills) {
            Ok(got) => crosscheck(&want, &got, 6),
            Err(e) => Some(e.to_string()),
        };
        if let Some(d) = detail {
            return Diagnosis::found(FailureClass::ActionCompletion, Some(&name), d);
        }
    }
    for sf in reference.levels().iter().flatten() {
        let got = match spec.get(&sf.name) {
            Some(g) => &g.formula,
            None => {
                return Diagnosis::found(FailureClass::LtlTranslation, Some(&sf.name), "no formula".into());
            }
        };
        if let Some(d) = crosscheck(&sf.formula, got, 6) {
            return Diagnosis::found(FailureClass::LtlTranslation, Some(&sf.name), d);
        }
    }
    Diagnosis { class: None, node: None, detail: "matches the reference".into() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hier::SpecFormula;
    use crate::htt::tests::dishwasher_tree;
    use crate::htt::{ApiCall, TaskNode};
    use crate::ltl::parse;
    use std::collections::BTreeMap;

    fn reg() -> SkillRegistry {
        SkillRegistry::default()
    }

    #[test]
    fn orders_implied_by_templates() {
        let kids: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let o = implied_order(&parse("F(a & F b & F c)").unwrap(), &kids).unwrap();
        let want: BTreeSet<_> = [("a", "b"), ("a", "c")].iter().map(|(x, y)| (x.to_string(), y.to_string())).collect();
        assert_eq!(o, want);
        assert!(implied_order(&parse("F a & F b & F c").unwrap(), &kids).unwrap().is_empty());
        assert!(implied_order(&parse("F(a & b)").unwrap(), &kids).is_none());
    }

    #[test]
    fn clean_run() {
        let t = dishwasher_tree();
        let spec = t.construct(&reg()).unwrap();
        assert_eq!(diagnose(&t, &spec, &spec, &reg()).class, None);
    }

    #[test]
    fn missing_step_is_decomposition() {
        let reference = dishwasher_tree().construct(&reg()).unwrap();
        let mut t = dishwasher_tree();
        t.nodes.remove("task_1_1_3");
        t.nodes.get_mut("task_1_1").unwrap().children.pop();
        let spec = t.construct(&reg()).unwrap();
        let d = diagnose(&t, &spec, &reference, &reg());
        assert_eq!(d.class, Some(FailureClass::Decomposition));
        assert_eq!(d.node.as_deref(), Some("task_1_1_3"));
    }

    #[test]
    fn spurious_relation_is_temporal_extraction() {
        let reference = dishwasher_tree().construct(&reg()).unwrap();
        let mut t = dishwasher_tree();
        t.nodes.get_mut("task_1_1").unwrap().relations.push(("task_1_1_1".into(), "task_1_1_2".into()));
        let spec = t.construct(&reg()).unwrap();
        let d = diagnose(&t, &spec, &reference, &reg());
        assert_eq!(d.class, Some(FailureClass::TemporalExtraction));
        assert_eq!(d.node.as_deref(), Some("task_1_1"));
    }

    #[test]
    fn wrong_actions_are_action_completion() {
        let reference = dishwasher_tree().construct(&reg()).unwrap();
        let mut t = dishwasher_tree();
        t.nodes.get_mut("task_1_2_2").unwrap().actions[1] = ApiCall::new("Move", ["cup", "lower_rack"]);
        let spec = t.construct(&reg()).unwrap();
        let d = diagnose(&t, &spec, &reference, &reg());
        assert_eq!(d.class, Some(FailureClass::ActionCompletion));
        assert_eq!(d.node.as_deref(), Some("task_1_2_2"));
    }

    #[test]
    fn mistranslation_is_ltl_translation() {
        let mut nodes = BTreeMap::new();
        let kids: Vec<String> = (1..=4).map(|i| format!("task_1_{i}")).collect();
        nodes.insert(
            "task_1".to_string(),
            TaskNode {
                instruction: "Make a salad".into(),
                children: kids.clone(),
                relations: kids[1..].iter().map(|k| (kids[0].clone(), k.clone())).collect(),
                actions: vec![],
            },
        );
        for (k, obj) in kids.iter().zip(["bowl", "lettuce", "tomato", "cucumber"]) {
            nodes.insert(
                k.clone(),
                TaskNode { instruction: obj.into(), actions: vec![ApiCall::new("Pickup", [obj])], ..Default::default() },
            );
        }
        let t = TaskTree::new("task_1", nodes);
        let reference = t.construct(&reg()).unwrap();
        assert_eq!(
            reference.root().unwrap().formula,
            parse("F(task_1_1 & F task_1_2 & F task_1_3 & F task_1_4)").unwrap()
        );
        let mut levels = reference.levels().to_vec();
        levels[0][0] = SpecFormula {
            name: "task_1".into(),
            formula: parse("F(task_1_1 & F(task_1_2 & (task_1_3 & task_1_4)))").unwrap(),
        };
        let d = diagnose(&t, &HierSpec::new(levels), &reference, &reg());
        assert_eq!(d.class, Some(FailureClass::LtlTranslation));
        assert_eq!(d.node.as_deref(), Some("task_1"));
    }
}
