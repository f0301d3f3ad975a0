//! Deterministic finite automata for co-safe formulas, built as the closure
//! of the formula under progression.
//!
//! States carry their residual formula. Edges are guarded by cubes
//! (conjunctions of literals) over the automaton alphabet, so a state whose
//! residual mentions two propositions has at most four edges regardless of
//! how large the alphabet is.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt::Write as _;

use serde::Serialize;

use crate::ltl::{is_sc_ltl, progress, simplify, Formula, LtlError, Trace, Valuation};

pub const DEFAULT_STATE_CAP: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AutomataError {
    #[error(transparent)]
    Ltl(#[from] LtlError),
    #[error("automaton exceeds the state cap of {cap}")]
    Capacity { cap: usize },
}

pub type StateId = usize;

/// Conjunction of literals: bits in `care` are constrained to the matching
/// bits of `value`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Cube {
    pub care: u64,
    pub value: u64,
}

impl Cube {
    pub const TOP: Cube = Cube { care: 0, value: 0 };

    pub fn matches(&self, symbol: u64) -> bool {
        symbol & self.care == self.value
    }

    /// A symbol satisfying the cube (unconstrained bits false).
    pub fn witness(&self) -> u64 {
        self.value
    }

    fn render(&self, alphabet: &[String]) -> String {
        if self.care == 0 {
            return "T".into();
        }
        let lits: Vec<String> = (0..alphabet.len())
            .filter(|i| self.care >> i & 1 == 1)
            .map(|i| {
                if self.value >> i & 1 == 1 {
                    alphabet[i].clone()
                } else {
                    format!("!{}", alphabet[i])
                }
            })
            .collect();
        lits.join(" & ")
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Edge {
    pub guard: Cube,
    pub target: StateId,
}

#[derive(Debug, Clone)]
struct State {
    label: Formula,
    accepting: bool,
    edges: Vec<Edge>,
}

#[derive(Debug, Clone)]
pub struct Dfa {
    alphabet: Vec<String>,
    index: BTreeMap<String, usize>,
    states: Vec<State>,
    distance: Vec<Option<u32>>,
}

impl Dfa {
    pub fn initial(&self) -> StateId {
        0
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn label(&self, s: StateId) -> &Formula {
        &self.states[s].label
    }

    pub fn is_accepting(&self, s: StateId) -> bool {
        self.states[s].accepting
    }

    /// The state labeled `false`, if reachable.
    pub fn dead_state(&self) -> Option<StateId> {
        self.states.iter().position(|s| s.label == Formula::False)
    }

    pub fn edges(&self, s: StateId) -> &[Edge] {
        &self.states[s].edges
    }

    /// Bit position of a proposition in symbol masks.
    pub fn prop_bit(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn symbol_of(&self, v: &Valuation) -> u64 {
        v.iter()
            .filter_map(|p| self.index.get(p))
            .fold(0, |m, &i| m | (1 << i))
    }

    pub fn step(&self, s: StateId, symbol: u64) -> StateId {
        self.states[s]
            .edges
            .iter()
            .find(|e| e.guard.matches(symbol))
            .map(|e| e.target)
            .expect("edge guards cover every symbol")
    }

    pub fn run(&self, t: &Trace) -> StateId {
        t.steps
            .iter()
            .fold(self.initial(), |s, v| self.step(s, self.symbol_of(v)))
    }

    /// Names outside the alphabet are ignored.
    pub fn accepts(&self, t: &Trace) -> bool {
        self.is_accepting(self.run(t))
    }

    /// Fewest symbols leading from `s` to an accepting state; `None` when no
    /// accepting state is reachable.
    pub fn distance_to_accept(&self, s: StateId) -> Option<u32> {
        self.distance[s]
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph dfa {\n  rankdir=LR;\n  __start [shape=point];\n");
        for (i, st) in self.states.iter().enumerate() {
            let shape = if st.accepting { "doublecircle" } else { "circle" };
            let label = st.label.to_string().replace('"', "\\\"");
            let _ = writeln!(out, "  s{i} [shape={shape}, label=\"{label}\"];");
        }
        let _ = writeln!(out, "  __start -> s0;");
        for (i, st) in self.states.iter().enumerate() {
            for e in &st.edges {
                let g = e.guard.render(&self.alphabet);
                let _ = writeln!(out, "  s{i} -> s{} [label=\"{g}\"];", e.target);
            }
        }
        out.push_str("}\n");
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct EdgeOut {
            from: StateId,
            to: StateId,
            guard: String,
        }
        #[derive(Serialize)]
        struct StateOut {
            id: StateId,
            label: String,
            accepting: bool,
            distance_to_accept: Option<u32>,
        }
        let states: Vec<StateOut> = self
            .states
            .iter()
            .enumerate()
            .map(|(i, s)| StateOut {
                id: i,
                label: s.label.to_string(),
                accepting: s.accepting,
                distance_to_accept: self.distance[i],
            })
            .collect();
        let edges: Vec<EdgeOut> = self
            .states
            .iter()
            .enumerate()
            .flat_map(|(i, s)| {
                s.edges.iter().map(move |e| EdgeOut {
                    from: i,
                    to: e.target,
                    guard: e.guard.render(&self.alphabet),
                })
            })
            .collect();
        serde_json::json!({
            "alphabet": self.alphabet,
            "initial": 0,
            "states": states,
            "edges": edges,
        })
    }
}

/// Propositions read at the current step (not only under `X`).
fn now_props(f: &Formula, out: &mut Vec<String>) {
    match f {
        Formula::True | Formula::False | Formula::Next(_) => {}
        Formula::Prop(p) => {
            if !out.contains(p) {
                out.push(p.clone());
            }
        }
        Formula::Not(a) | Formula::Eventually(a) => now_props(a, out),
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Until(a, b) => {
            now_props(a, out);
            now_props(b, out);
        }
    }
}

/// Merge cubes that differ in exactly one cared-for literal until none do.
fn merge_cubes(mut cubes: Vec<Cube>) -> Vec<Cube> {
    loop {
        let mut merged = false;
        'outer: for i in 0..cubes.len() {
            for j in (i + 1)..cubes.len() {
                let (a, b) = (cubes[i], cubes[j]);
                let diff = a.value ^ b.value;
                if a.care == b.care && diff.count_ones() == 1 {
                    let c = Cube {
                        care: a.care & !diff,
                        value: a.value & !diff,
                    };
                    cubes.swap_remove(j);
                    cubes[i] = c;
                    merged = true;
                    break 'outer;
                }
            }
        }
        if !merged {
            cubes.sort_by_key(|c| (c.care.count_ones(), c.care, c.value));
            cubes.dedup();
            return cubes;
        }
    }
}

pub fn compile(f: &Formula) -> Result<Dfa, AutomataError> {
    compile_with_cap(f, DEFAULT_STATE_CAP)
}

pub fn compile_with_cap(f: &Formula, cap: usize) -> Result<Dfa, AutomataError> {
    if !is_sc_ltl(f) {
        return Err(LtlError::NotCoSafe(f.to_string()).into());
    }
    let alphabet = f.props();
    if alphabet.len() > 64 {
        return Err(LtlError::TooManyProps(alphabet.len()).into());
    }
    let index: BTreeMap<String, usize> = alphabet.iter().enumerate().map(|(i, p)| (p.clone(), i)).collect();

    let root = simplify(f);
    let mut ids: HashMap<Formula, StateId> = HashMap::new();
    let mut labels: Vec<Formula> = Vec::new();
    let mut edges: Vec<Vec<Edge>> = Vec::new();
    let mut queue = VecDeque::new();
    ids.insert(root.clone(), 0);
    labels.push(root);
    queue.push_back(0);

    while let Some(s) = queue.pop_front() {
        let label = labels[s].clone();
        let mut relevant = Vec::new();
        now_props(&label, &mut relevant);
        let bits: Vec<usize> = relevant.iter().map(|p| index[p]).collect();
        let care = bits.iter().fold(0u64, |m, &b| m | 1 << b);

        // Group minterms over the relevant propositions by successor.
        let mut by_target: BTreeMap<StateId, Vec<Cube>> = BTreeMap::new();
        for code in 0..(1u64 << bits.len()) {
            let mut value = 0u64;
            let mut v = Valuation::new();
            for (k, &b) in bits.iter().enumerate() {
                if code >> k & 1 == 1 {
                    value |= 1 << b;
                    v.insert(alphabet[b].clone());
                }
            }
            let next = progress(&label, &v);
            let target = match ids.get(&next) {
                Some(&t) => t,
                None => {
                    if labels.len() >= cap {
                        return Err(AutomataError::Capacity { cap });
                    }
                    let t = labels.len();
                    ids.insert(next.clone(), t);
                    labels.push(next);
                    queue.push_back(t);
                    t
                }
            };
            by_target.entry(target).or_default().push(Cube { care, value });
        }
        let mut out = Vec::new();
        for (target, cubes) in by_target {
            out.extend(merge_cubes(cubes).into_iter().map(|guard| Edge { guard, target }));
        }
        if edges.len() <= s {
            edges.resize_with(s + 1, Vec::new);
        }
        edges[s] = out;
    }

    let states: Vec<State> = labels
        .into_iter()
        .zip(edges)
        .map(|(label, edges)| {
            let accepting = label == Formula::True;
            State { label, accepting, edges }
        })
        .collect();
    let distance = distances(&states);
    Ok(Dfa {
        alphabet,
        index,
        states,
        distance,
    })
}

/// Backward BFS from the accepting states over the edge graph.
fn distances(states: &[State]) -> Vec<Option<u32>> {
    let mut preds: Vec<Vec<StateId>> = vec![Vec::new(); states.len()];
    for (i, s) in states.iter().enumerate() {
        for e in &s.edges {
            preds[e.target].push(i);
        }
    }
    let mut dist = vec![None; states.len()];
    let mut queue = VecDeque::new();
    for (i, s) in states.iter().enumerate() {
        if s.accepting {
            dist[i] = Some(0);
            queue.push_back(i);
        }
    }
    while let Some(s) = queue.pop_front() {
        let d = dist[s].unwrap();
        for &p in &preds[s] {
            if dist[p].is_none() {
                dist[p] = Some(d + 1);
                queue.push_back(p);
            }
        }
    }
    dist
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ltl::{evaluate, parse};

    fn dfa(s: &str) -> Dfa {
        compile(&parse(s).unwrap()).unwrap()
    }

    #[test]
    fn single_obligation_has_two_states() {
        let d = dfa("F a");
        assert_eq!(d.num_states(), 2);
        assert!(d.dead_state().is_none());
        assert!(d.accepts(&Trace::from_names(&[&[], &["a"]])));
        assert!(!d.accepts(&Trace::default()));
    }

    #[test]
    fn chain_has_three_states() {
        let d = dfa("F(a & F b)");
        assert_eq!(d.num_states(), 3);
        assert_eq!(d.label(0), &parse("F(a & F b)").unwrap());
    }

    #[test]
    fn distances() {
        let d = dfa("F(a & F b)");
        let acc = (0..d.num_states()).find(|&s| d.is_accepting(s)).unwrap();
        assert_eq!(d.distance_to_accept(acc), Some(0));
        // One symbol {a, b} suffices since F includes the present step.
        assert_eq!(d.distance_to_accept(d.initial()), Some(1));

        let u = dfa("!a U b");
        let dead = u.step(u.initial(), u.symbol_of(&["a".to_string()].into()));
        assert_eq!(u.label(dead), &Formula::False);
        assert_eq!(u.distance_to_accept(dead), None);
        assert_eq!(u.step(dead, 0b11), dead);
    }

    #[test]
    fn shortest_accepted_length_matches_distance() {
        // Oracle: smallest n such that some trace of length n over the
        // alphabet is accepted by `evaluate`.
        for src in ["F(a & F b)", "F a & F b", "X X a", "a U (b & X c)", "F(a & X F b)"] {
            let f = parse(src).unwrap();
            let d = compile(&f).unwrap();
            let k = d.alphabet().len();
            let shortest = (0..=4usize).find(|&n| {
                (0..(1u64 << (k * n))).any(|code| {
                    let steps: Vec<Valuation> = (0..n)
                        .map(|s| {
                            (0..k)
                                .filter(|b| code >> (s * k + b) & 1 == 1)
                                .map(|b| d.alphabet()[b].clone())
                                .collect()
                        })
                        .collect();
                    evaluate(&f, &Trace::new(steps)).unwrap()
                })
            });
            assert_eq!(d.distance_to_accept(d.initial()).map(|x| x as usize), shortest, "{src}");
        }
    }

    #[test]
    fn accepting_states_are_absorbing() {
        let d = dfa("F(a & F b) | c U X d");
        for s in 0..d.num_states() {
            if d.is_accepting(s) || Some(s) == d.dead_state() {
                for sym in 0..(1u64 << d.alphabet().len()) {
                    assert_eq!(d.step(s, sym), s);
                }
            }
        }
    }

    #[test]
    fn capacity_error() {
        let f = parse("F(a & F(b & F(c & F d)))").unwrap();
        assert_eq!(compile_with_cap(&f, 2).unwrap_err(), AutomataError::Capacity { cap: 2 });
    }

    #[test]
    fn dot_and_json_exports() {
        let d = dfa("F(a & F b)");
        let dot = d.to_dot();
        assert!(dot.starts_with("digraph dfa"));
        assert!(dot.contains("doublecircle"));
        let j = d.to_json();
        assert_eq!(j["states"].as_array().unwrap().len(), 3);
        assert_eq!(j["alphabet"], serde_json::json!(["a", "b"]));
    }
}
