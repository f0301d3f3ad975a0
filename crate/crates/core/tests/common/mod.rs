#![allow(dead_code)]

use std::collections::BTreeMap;

use hltl::htt::{ApiCall, TaskNode, TaskTree};
use hltl::ltl::{Formula, Trace, Valuation};
use proptest::prelude::*;

pub const PROPS: [&str; 3] = ["a", "b", "c"];

/// Co-safe formulas over `a`, `b`, `c`.
pub fn formula() -> impl Strategy<Value = Formula> {
    let leaf = prop_oneof![
        1 => Just(Formula::True),
        4 => prop::sample::select(&PROPS[..]).prop_map(Formula::prop),
        1 => prop::sample::select(&PROPS[..]).prop_map(|p| Formula::prop(p).not()),
    ];
    leaf.prop_recursive(4, 20, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a.and(b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a.or(b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a.until(b)),
            inner.clone().prop_map(Formula::next),
            inner.prop_map(Formula::eventually),
        ]
    })
}

pub fn valuation() -> impl Strategy<Value = Valuation> {
    prop::sample::subsequence(&PROPS[..], 0..=3).prop_map(|v| v.into_iter().map(String::from).collect())
}

pub fn trace(max: usize) -> impl Strategy<Value = Trace> {
    prop::collection::vec(valuation(), 0..=max).prop_map(Trace::new)
}

/// Every trace over `a`, `b`, `c` up to `max_len` steps.
pub fn all_traces(max_len: usize) -> Vec<Trace> {
    let vals: Vec<Valuation> = (0..8u8)
        .map(|m| PROPS.iter().enumerate().filter(|(i, _)| m >> i & 1 == 1).map(|(_, p)| p.to_string()).collect())
        .collect();
    let mut out = vec![Trace::new(vec![])];
    let mut frontier = vec![Vec::<Valuation>::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for t in &frontier {
            for v in &vals {
                let mut t = t.clone();
                t.push(v.clone());
                out.push(Trace::new(t.clone()));
                next.push(t);
            }
        }
        frontier = next;
    }
    out
}

/// Shape of a random task tree: per internal node, its child count; leaves
/// get a pickup and a move of their own object.
#[derive(Debug, Clone)]
pub struct TreeShape {
    pub depth: usize,
    pub fanout: Vec<usize>,
    pub rel_bits: Vec<bool>,
    pub perm_seed: Vec<usize>,
}

pub fn tree_shape(max_depth: usize, max_fanout: usize) -> impl Strategy<Value = TreeShape> {
    (2..=max_depth, prop::collection::vec(1..=max_fanout, 16), prop::collection::vec(any::<bool>(), 64), prop::collection::vec(0usize..100, 64))
        .prop_map(|(depth, fanout, rel_bits, perm_seed)| TreeShape { depth, fanout, rel_bits, perm_seed })
}

/// Builds a valid tree of uniform depth from a shape.
pub fn build_tree(s: &TreeShape) -> TaskTree {
    let mut nodes = BTreeMap::new();
    let mut fan = s.fanout.iter().cycle();
    let mut bits = s.rel_bits.iter().cycle();
    let mut perm = s.perm_seed.iter().cycle();
    let mut leaf_no = 0;
    let mut frontier = vec!["task_1".to_string()];
    for level in 1..=s.depth {
        let mut next = Vec::new();
        for id in &frontier {
            if level == s.depth {
                leaf_no += 1;
                let obj = format!("obj{leaf_no}");
                let node = TaskNode {
                    actions: vec![ApiCall::new("Pickup", [obj.as_str()]), ApiCall::new("Move", [obj.as_str(), "bin"])],
                    ..TaskNode::new(format!("Put {obj} in the bin"))
                };
                nodes.insert(id.clone(), node);
                continue;
            }
            let k = *fan.next().unwrap();
            let kids: Vec<String> = (1..=k).map(|i| format!("{id}_{i}")).collect();
            // forward edges in a shuffled ranking keep relations acyclic
            let mut rank: Vec<usize> = (0..k).collect();
            for i in (1..k).rev() {
                rank.swap(i, perm.next().unwrap() % (i + 1));
            }
            let mut relations = Vec::new();
            for i in 0..k {
                for j in i + 1..k {
                    if *bits.next().unwrap() {
                        relations.push((kids[rank[i]].clone(), kids[rank[j]].clone()));
                    }
                }
            }
            nodes.insert(id.clone(), TaskNode { children: kids.clone(), relations, ..TaskNode::new(format!("Do {id}")) });
            next.extend(kids);
        }
        frontier = next;
    }
    TaskTree::new("task_1", nodes)
}
