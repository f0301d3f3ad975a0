//! Reference satisfaction check for whole hierarchies.
//!
//! Every non-root formula may be given a closed interval `[s, e]` of the
//! trace, nested inside its parent's interval. A leaf is satisfied by the
//! trace segment of its interval; a non-leaf is satisfied by the segment in
//! which each assigned child's proposition is true exactly at that child's
//! end step. `e` is the completion instant: the first step at which the
//! formula holds when read from `s`. The root spans the whole trace. A child
//! may be left unassigned, in which case its proposition never holds.
//!
//! The search enumerates child start steps exhaustively and is meant for
//! short traces only.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::{HierError, HierSpec, SiblingMode, SpecTree};
use crate::ltl::{CompiledFormula, Trace};

pub const DEFAULT_ORACLE_CAP: usize = 12;

/// A child's interval plus the witness for its own subtree, or unassigned.
type ChildOption = Option<(Interval, Vec<(usize, Interval)>)>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Interval {
    pub start: usize,
    pub end: usize,
}

impl Interval {
    fn disjoint(&self, other: &Interval) -> bool {
        self.end < other.start || other.end < self.start
    }
}

/// Witness intervals keyed by formula name. Unassigned formulas are absent.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IntervalAssignment {
    pub intervals: BTreeMap<String, Interval>,
}

struct Ctx<'a> {
    tree: &'a SpecTree,
    compiled: Vec<CompiledFormula>,
    /// For each non-leaf node, the bit of each child in its compiled formula.
    child_bits: Vec<Vec<Option<u32>>>,
    /// Leaf-node masks over the leaf's own propositions.
    leaf_masks: Vec<Vec<u64>>,
    n: usize,
    mode: SiblingMode,
    memo: HashMap<(usize, usize), Vec<(usize, Vec<(usize, Interval)>)>>,
}

impl Ctx<'_> {
    /// Possible completion instants of `node` when started at `start`, each
    /// with one witness for its subtree.
    fn outcomes(&mut self, node: usize, start: usize) -> Vec<(usize, Vec<(usize, Interval)>)> {
        if let Some(r) = self.memo.get(&(node, start)) {
            return r.clone();
        }
        let result: Vec<(usize, Vec<(usize, Interval)>)> = if self.tree.is_leaf[node] {
            self.compiled[node]
                .first_satisfied(&self.leaf_masks[node], start)
                .map(|e| (e, Vec::new()))
                .into_iter()
                .collect()
        } else {
            let mut found: BTreeMap<usize, Vec<(usize, Interval)>> = BTreeMap::new();
            let options = self.child_options(node, start);
            self.combine(node, &options, &mut Vec::new(), &mut |ctx: &mut Self, picked: &[&ChildOption]| {
                let pulses = ctx.pulses(node, start, picked);
                if let Some(rel) = ctx.compiled[node].first_satisfied(&pulses, 0) {
                    let e = start + rel;
                    found.entry(e).or_insert_with(|| ctx.witness(node, picked, e));
                }
            });
            found.into_iter().collect()
        };
        self.memo.insert((node, start), result.clone());
        result
    }

    /// Per child: `None` (unassigned) followed by every reachable interval.
    fn child_options(&mut self, node: usize, start: usize) -> Vec<Vec<ChildOption>> {
        let children = self.tree.children[node].clone();
        children
            .iter()
            .map(|&c| {
                let mut opts = vec![None];
                let mut seen_end = std::collections::BTreeSet::new();
                for s in start..self.n {
                    for (e, w) in self.outcomes(c, s) {
                        // Only the end step matters to the parent unless
                        // sibling intervals must be disjoint.
                        if self.mode == SiblingMode::Overlap && !seen_end.insert(e) {
                            continue;
                        }
                        opts.push(Some((Interval { start: s, end: e }, w)));
                    }
                }
                opts
            })
            .collect()
    }

    fn combine<'o>(
        &mut self,
        node: usize,
        options: &'o [Vec<ChildOption>],
        picked: &mut Vec<&'o ChildOption>,
        visit: &mut dyn FnMut(&mut Self, &[&'o ChildOption]),
    ) {
        if picked.len() == options.len() {
            visit(self, picked);
            return;
        }
        for opt in &options[picked.len()] {
            if self.mode == SiblingMode::Serial {
                if let Some((iv, _)) = opt {
                    let clash = picked.iter().any(|p| matches!(p, Some((other, _)) if !iv.disjoint(other)));
                    if clash {
                        continue;
                    }
                }
            }
            picked.push(opt);
            self.combine(node, options, picked, visit);
            picked.pop();
        }
    }

    fn pulses(&self, node: usize, start: usize, picked: &[&ChildOption]) -> Vec<u64> {
        let mut masks = vec![0u64; self.n - start];
        for (ci, opt) in picked.iter().enumerate() {
            if let (Some((iv, _)), Some(bit)) = (opt, self.child_bits[node][ci]) {
                masks[iv.end - start] |= 1 << bit;
            }
        }
        masks
    }

    fn witness(
        &self,
        node: usize,
        picked: &[&ChildOption],
        end: usize,
    ) -> Vec<(usize, Interval)> {
        let mut w = Vec::new();
        for (ci, opt) in picked.iter().enumerate() {
            if let Some((iv, sub)) = opt {
                if iv.end <= end {
                    w.push((self.tree.children[node][ci], *iv));
                    w.extend(sub.iter().cloned());
                }
            }
        }
        w
    }
}

fn prepare<'a>(tree: &'a SpecTree, trace: &Trace, mode: SiblingMode) -> Result<Ctx<'a>, HierError> {
    let compiled: Vec<CompiledFormula> = tree
        .formulas
        .iter()
        .map(CompiledFormula::new)
        .collect::<Result<_, _>>()?;
    let child_bits = (0..tree.len())
        .map(|i| {
            tree.children[i]
                .iter()
                .map(|&c| compiled[i].prop_index(&tree.names[c]))
                .collect()
        })
        .collect();
    let leaf_masks = (0..tree.len())
        .map(|i| if tree.is_leaf[i] { compiled[i].masks(trace) } else { Vec::new() })
        .collect();
    Ok(Ctx {
        tree,
        compiled,
        child_bits,
        leaf_masks,
        n: trace.len(),
        mode,
        memo: HashMap::new(),
    })
}

/// Exhaustive hierarchical satisfaction check; returns a witness when the
/// trace satisfies the specification.
pub fn satisfies(
    spec: &HierSpec,
    trace: &Trace,
    mode: SiblingMode,
    cap: usize,
) -> Result<Option<IntervalAssignment>, HierError> {
    if trace.len() > cap {
        return Err(HierError::Capacity { len: trace.len(), cap });
    }
    let tree = SpecTree::new(spec)?;
    let mut ctx = prepare(&tree, trace, mode)?;
    let n = trace.len();
    let whole = |w: Vec<(usize, Interval)>| {
        let mut a = IntervalAssignment::default();
        if n > 0 {
            a.intervals.insert(tree.names[0].clone(), Interval { start: 0, end: n - 1 });
        }
        for (i, iv) in w {
            a.intervals.insert(tree.names[i].clone(), iv);
        }
        a
    };
    if tree.is_leaf[0] {
        let ok = ctx.compiled[0].eval_masks(&ctx.leaf_masks[0]);
        return Ok(ok.then(|| whole(Vec::new())));
    }
    let options = ctx.child_options(0, 0);
    let mut result = None;
    ctx.combine(0, &options, &mut Vec::new(), &mut |ctx: &mut Ctx, picked: &[&ChildOption]| {
        if result.is_some() {
            return;
        }
        let pulses = if n == 0 { Vec::new() } else { ctx.pulses(0, 0, picked) };
        if ctx.compiled[0].eval_masks(&pulses) {
            result = Some(ctx.witness(0, picked, n.saturating_sub(1)));
        }
    });
    Ok(result.map(whole))
}

/// Check a candidate assignment against the interval conditions directly.
///
/// Independent of the search in [`satisfies`]; used to re-check witnesses and
/// by brute-force tests that enumerate assignments.
pub fn check_assignment(spec: &HierSpec, trace: &Trace, a: &IntervalAssignment, mode: SiblingMode) -> bool {
    let Ok(tree) = SpecTree::new(spec) else { return false };
    let n = trace.len();
    let get = |i: usize| a.intervals.get(&tree.names[i]).copied();
    if a.intervals.keys().any(|k| !tree.names.contains(k)) {
        return false;
    }
    match get(0) {
        Some(iv) if n > 0 && iv == (Interval { start: 0, end: n - 1 }) => {}
        None if n == 0 => {}
        _ => return false,
    }
    for i in 0..tree.len() {
        let Some(iv) = get(i) else { continue };
        if iv.start > iv.end || iv.end >= n {
            return false;
        }
        if let Some(p) = tree.parent[i] {
            match get(p) {
                Some(piv) if piv.start <= iv.start && iv.end <= piv.end => {}
                _ => return false,
            }
        }
        if mode == SiblingMode::Serial {
            let sibs = &tree.children[i];
            for (x, &c1) in sibs.iter().enumerate() {
                for &c2 in &sibs[x + 1..] {
                    if let (Some(a1), Some(a2)) = (get(c1), get(c2)) {
                        if !a1.disjoint(&a2) {
                            return false;
                        }
                    }
                }
            }
        }
    }
    let Ok(compiled) = tree
        .formulas
        .iter()
        .map(CompiledFormula::new)
        .collect::<Result<Vec<_>, _>>()
    else {
        return false;
    };
    // Segment masks of node `i` over `[s, e]`.
    let segment = |i: usize, s: usize, e: usize| -> Vec<u64> {
        if tree.is_leaf[i] {
            trace.steps[s..=e].iter().map(|v| compiled[i].mask_of(v)).collect()
        } else {
            let mut m = vec![0u64; e + 1 - s];
            for &c in &tree.children[i] {
                if let (Some(civ), Some(bit)) = (get(c), compiled[i].prop_index(&tree.names[c])) {
                    m[civ.end - s] |= 1 << bit;
                }
            }
            m
        }
    };
    if n == 0 {
        return compiled[0].eval_masks(&[]);
    }
    for i in 0..tree.len() {
        let Some(iv) = get(i) else { continue };
        let seg = segment(i, iv.start, iv.end);
        if !compiled[i].eval_masks(&seg) {
            return false;
        }
        let minimal = i == 0 || iv.end == iv.start || !compiled[i].eval_masks(&seg[..seg.len() - 1]);
        if !minimal {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hier::tests::dishwasher;
    use crate::ltl::{evaluate, parse};

    fn tr(steps: &[&[&str]]) -> Trace {
        Trace::from_names(steps)
    }

    #[test]
    fn lower_rack_then_upper_rack() {
        let s = dishwasher();
        let t = tr(&[&["plates_l"], &["mugs_l"], &["utensils_l"], &["saucers_u"], &["cups_u"]]);
        let w = satisfies(&s, &t, SiblingMode::Overlap, DEFAULT_ORACLE_CAP).unwrap().unwrap();
        assert_eq!(w.intervals["phi_2_1"].end, 2);
        assert_eq!(w.intervals["phi_2_2"].end, 4);
        assert!(check_assignment(&s, &t, &w, SiblingMode::Overlap));
        let w = satisfies(&s, &t, SiblingMode::Serial, DEFAULT_ORACLE_CAP).unwrap().unwrap();
        assert!(check_assignment(&s, &t, &w, SiblingMode::Serial));
    }

    #[test]
    fn upper_rack_first_is_rejected() {
        let s = dishwasher();
        let t = tr(&[&["cups_u"], &["saucers_u"], &["plates_l"], &["mugs_l"], &["utensils_l"]]);
        assert!(satisfies(&s, &t, SiblingMode::Overlap, DEFAULT_ORACLE_CAP).unwrap().is_none());
        let t = tr(&[&["saucers_u"], &["cups_u"], &["plates_l"], &["mugs_l"], &["utensils_l"]]);
        assert!(satisfies(&s, &t, SiblingMode::Overlap, DEFAULT_ORACLE_CAP).unwrap().is_none());
    }

    #[test]
    fn single_level_reduces_to_evaluate() {
        let f = parse("F(a & F b) | X c").unwrap();
        let s = HierSpec::from_formulas(vec![vec![f.clone()]]);
        for t in [tr(&[]), tr(&[&["a"], &["b"]]), tr(&[&["b"], &["c"]]), tr(&[&["b"], &["a"]])] {
            let got = satisfies(&s, &t, SiblingMode::Overlap, 12).unwrap().is_some();
            assert_eq!(got, evaluate(&f, &t).unwrap());
        }
    }

    #[test]
    fn capacity_and_invalid_spec() {
        let s = dishwasher();
        let t = Trace::new(vec![Default::default(); 13]);
        assert!(matches!(
            satisfies(&s, &t, SiblingMode::Overlap, 12),
            Err(HierError::Capacity { len: 13, cap: 12 })
        ));
        let bad = HierSpec::from_formulas(vec![vec![parse("F phi_2_1").unwrap()]]);
        assert!(matches!(satisfies(&bad, &tr(&[]), SiblingMode::Overlap, 12), Err(HierError::Invalid(_))));
    }

    #[test]
    fn serial_mode_forbids_overlap() {
        // Both children need the shared step 1; overlap allows it, serial does not.
        let f = |s: &str| parse(s).unwrap();
        let s = HierSpec::from_formulas(vec![vec![f("F phi_2_1 & F phi_2_2")], vec![f("F(a & F b)"), f("F(c & F d)")]]);
        let t = tr(&[&["a", "c"], &["b", "d"]]);
        assert!(satisfies(&s, &t, SiblingMode::Overlap, 12).unwrap().is_some());
        assert!(satisfies(&s, &t, SiblingMode::Serial, 12).unwrap().is_none());
        let t = tr(&[&["a"], &["b"], &["c"], &["d"]]);
        assert!(satisfies(&s, &t, SiblingMode::Serial, 12).unwrap().is_some());
    }

    #[test]
    fn tampered_witness_is_rejected() {
        let s = dishwasher();
        let t = tr(&[&["plates_l"], &["mugs_l"], &["utensils_l"], &["saucers_u"], &["cups_u"]]);
        let mut w = satisfies(&s, &t, SiblingMode::Overlap, 12).unwrap().unwrap();
        w.intervals.get_mut("phi_2_2").unwrap().end = 3;
        assert!(!check_assignment(&s, &t, &w, SiblingMode::Overlap));
    }
}
