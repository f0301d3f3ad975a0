//! Automaton-based execution of a specification hierarchy, one symbol per
//! step.
//!
//! Every node runs its own DFA. Leaves read atomic propositions; a non-leaf
//! reads the composite proposition of a child exactly at the step the child
//! first accepts. In overlap mode every node starts with its parent. In
//! serial mode a child runs only while none of its siblings does, and which
//! idle child to start is a nondeterministic choice, so [`Monitor::step`]
//! returns every successor.

use std::collections::{BTreeMap, HashSet};

use super::{HierError, HierSpec, SiblingMode, SpecTree};
use crate::automata::{compile, Dfa};
use crate::ltl::{simplify, Formula, Trace, Valuation};

const IDLE: u8 = 0;
const ACTIVE: u8 = 1;
const DONE: u8 = 2;

/// Per-node DFA state and status (idle, active, done).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MonitorState {
    q: Vec<u32>,
    status: Vec<u8>,
}

impl MonitorState {
    pub fn is_done(&self, node: usize) -> bool {
        self.status[node] == DONE
    }
}

#[derive(Debug, Clone)]
pub struct Monitor {
    tree: SpecTree,
    dfas: Vec<Dfa>,
    mode: SiblingMode,
    atoms: Vec<String>,
    /// Per leaf: (global atom bit, leaf DFA bit).
    leaf_bits: Vec<Vec<(u32, u32)>>,
    /// Bit of each node's composite prop in its parent's DFA.
    parent_bit: Vec<u64>,
    /// Must complete for the root to complete.
    required: Vec<bool>,
    /// Per node and DFA state: acceptance reachable on empty symbols alone.
    idle_accepts: Vec<Vec<bool>>,
}

fn substitute_false(f: &Formula, name: &str) -> Formula {
    match f {
        Formula::Prop(p) if p == name => Formula::False,
        Formula::True | Formula::False | Formula::Prop(_) => f.clone(),
        Formula::Not(a) => substitute_false(a, name).not(),
        Formula::And(a, b) => substitute_false(a, name).and(substitute_false(b, name)),
        Formula::Or(a, b) => substitute_false(a, name).or(substitute_false(b, name)),
        Formula::Next(a) => substitute_false(a, name).next(),
        Formula::Until(a, b) => substitute_false(a, name).until(substitute_false(b, name)),
        Formula::Eventually(a) => substitute_false(a, name).eventually(),
    }
}

impl Monitor {
    pub fn new(spec: &HierSpec, mode: SiblingMode) -> Result<Monitor, HierError> {
        let tree = SpecTree::new(spec)?;
        let n = tree.len();
        let dfas: Vec<Dfa> = tree
            .formulas
            .iter()
            .map(|f| compile(f).map_err(|e| HierError::Format(e.to_string())))
            .collect::<Result<_, _>>()?;
        let atoms: Vec<String> = spec.atomic_props().into_iter().collect();
        if atoms.len() > 64 {
            return Err(HierError::Format(format!("{} atomic propositions, at most 64 supported", atoms.len())));
        }
        let leaf_bits = (0..n)
            .map(|i| {
                if !tree.is_leaf[i] {
                    return Vec::new();
                }
                atoms
                    .iter()
                    .enumerate()
                    .filter_map(|(g, a)| dfas[i].prop_bit(a).map(|b| (g as u32, b as u32)))
                    .collect()
            })
            .collect();
        let parent_bit = (0..n)
            .map(|i| match tree.parent[i] {
                Some(p) => dfas[p].prop_bit(&tree.names[i]).map_or(0, |b| 1u64 << b),
                None => 0,
            })
            .collect();
        let mut required = vec![false; n];
        required[0] = true;
        for i in 1..n {
            let p = tree.parent[i].expect("non-root has a parent");
            required[i] = required[p] && simplify(&substitute_false(&tree.formulas[p], &tree.names[i])) == Formula::False;
        }
        let idle_accepts = dfas
            .iter()
            .map(|d| {
                (0..d.num_states())
                    .map(|s| {
                        let mut seen = HashSet::new();
                        let mut cur = s;
                        while seen.insert(cur) {
                            if d.is_accepting(cur) {
                                return true;
                            }
                            cur = d.step(cur, 0);
                        }
                        false
                    })
                    .collect()
            })
            .collect();
        Ok(Monitor { tree, dfas, mode, atoms, leaf_bits, parent_bit, required, idle_accepts })
    }

    pub fn mode(&self) -> SiblingMode {
        self.mode
    }

    /// Atomic propositions in symbol-bit order.
    pub fn atoms(&self) -> &[String] {
        &self.atoms
    }

    pub fn atom_bit(&self, name: &str) -> Option<usize> {
        self.atoms.binary_search_by(|a| a.as_str().cmp(name)).ok()
    }

    pub fn symbol_of(&self, v: &Valuation) -> u64 {
        v.iter().filter_map(|p| self.atom_bit(p)).fold(0, |m, b| m | 1 << b)
    }

    pub fn num_nodes(&self) -> usize {
        self.tree.len()
    }

    pub fn node_name(&self, i: usize) -> &str {
        &self.tree.names[i]
    }

    pub fn is_leaf(&self, i: usize) -> bool {
        self.tree.is_leaf[i]
    }

    pub fn dfa(&self, i: usize) -> &Dfa {
        &self.dfas[i]
    }

    /// Global atom mask read by leaf `i`.
    pub fn leaf_atoms(&self, i: usize) -> u64 {
        self.leaf_bits[i].iter().fold(0, |m, &(g, _)| m | 1 << g)
    }

    pub fn initial(&self) -> MonitorState {
        let n = self.tree.len();
        let mut status = vec![if self.mode == SiblingMode::Overlap { ACTIVE } else { IDLE }; n];
        status[0] = ACTIVE;
        MonitorState { q: self.dfas.iter().map(|d| d.initial() as u32).collect(), status }
    }

    pub fn accepted(&self, s: &MonitorState) -> bool {
        s.status[0] == DONE
    }

    /// Lower bound on the steps still needed, or `None` when the root can no
    /// longer complete.
    pub fn remaining(&self, s: &MonitorState) -> Option<u32> {
        let mut h = 0;
        for i in 0..self.tree.len() {
            if !self.required[i] || s.status[i] == DONE {
                continue;
            }
            let q = s.q[i] as usize;
            let d = self.dfas[i].distance_to_accept(q)?;
            if !self.tree.is_leaf[i]
                && self.tree.children[i].iter().all(|&c| s.status[c] == DONE)
                && !self.idle_accepts[i][q]
            {
                return None;
            }
            h = h.max(d);
        }
        Some(h)
    }

    pub fn is_dead(&self, s: &MonitorState) -> bool {
        !self.accepted(s) && self.remaining(s).is_none()
    }

    /// Successors after reading the atom mask `symbol`.
    pub fn step(&self, s: &MonitorState, symbol: u64) -> Vec<MonitorState> {
        if self.accepted(s) {
            return vec![s.clone()];
        }
        match self.mode {
            SiblingMode::Overlap => vec![self.read(s.clone(), symbol)],
            SiblingMode::Serial => {
                let mut configs = vec![s.clone()];
                for p in 0..self.tree.len() {
                    if self.tree.is_leaf[p] {
                        continue;
                    }
                    let kids = &self.tree.children[p];
                    let mut next = Vec::with_capacity(configs.len());
                    for c in configs {
                        if c.status[p] != ACTIVE || kids.iter().any(|&k| c.status[k] == ACTIVE) {
                            next.push(c);
                            continue;
                        }
                        for &k in kids {
                            if c.status[k] == IDLE {
                                let mut d = c.clone();
                                d.status[k] = ACTIVE;
                                next.push(d);
                            }
                        }
                        next.push(c);
                    }
                    configs = next;
                }
                let mut seen = HashSet::new();
                configs
                    .into_iter()
                    .map(|c| self.read(c, symbol))
                    .filter(|c| seen.insert(c.clone()))
                    .collect()
            }
        }
    }

    fn read(&self, mut c: MonitorState, symbol: u64) -> MonitorState {
        let n = self.tree.len();
        let mut pulses = vec![0u64; n];
        for i in (0..n).rev() {
            if c.status[i] != ACTIVE {
                continue;
            }
            let sym = if self.tree.is_leaf[i] {
                self.leaf_bits[i]
                    .iter()
                    .fold(0, |m, &(g, b)| if symbol >> g & 1 == 1 { m | 1 << b } else { m })
            } else {
                pulses[i]
            };
            let q = self.dfas[i].step(c.q[i] as usize, sym);
            c.q[i] = q as u32;
            if self.dfas[i].is_accepting(q) {
                c.status[i] = DONE;
                if let Some(p) = self.tree.parent[i] {
                    pulses[p] |= self.parent_bit[i];
                }
            }
        }
        c
    }

    /// Completion step of every node in the first accepting run, if any.
    pub fn run(&self, t: &Trace) -> Option<BTreeMap<String, usize>> {
        let n = self.tree.len();
        let mut frontier: Vec<(MonitorState, Vec<Option<usize>>)> = vec![(self.initial(), vec![None; n])];
        for (step, v) in t.steps.iter().enumerate() {
            if let Some((_, done)) = frontier.iter().find(|(s, _)| self.accepted(s)) {
                return Some(self.named(done));
            }
            let sym = self.symbol_of(v);
            let mut seen = HashSet::new();
            let mut next = Vec::new();
            for (s, done) in &frontier {
                for succ in self.step(s, sym) {
                    if self.is_dead(&succ) || !seen.insert(succ.clone()) {
                        continue;
                    }
                    let mut d = done.clone();
                    for i in 0..n {
                        if succ.status[i] == DONE && d[i].is_none() {
                            d[i] = Some(step);
                        }
                    }
                    next.push((succ, d));
                }
            }
            frontier = next;
        }
        frontier
            .iter()
            .find(|(s, _)| self.accepted(s))
            .map(|(_, done)| self.named(done))
    }

    fn named(&self, done: &[Option<usize>]) -> BTreeMap<String, usize> {
        done.iter()
            .enumerate()
            .filter_map(|(i, d)| d.map(|d| (self.tree.names[i].clone(), d)))
            .collect()
    }

    pub fn accepts(&self, t: &Trace) -> bool {
        self.run(t).is_some()
    }
}
