//! Finite-trace satisfaction.
//!
//! A trace of length `n` has positions `0..n`; position `n` stands for the
//! empty suffix, where only `T` (and what it implies through `&`, `|`, `F`,
//! and the right side of `U`) holds. `X f` at position `i` holds iff `f`
//! holds at `i + 1`, so `X a` is false at the last step.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{is_sc_ltl, Formula, LtlError};

/// Set of proposition names true at one step. Absent names are false.
pub type Valuation = BTreeSet<String>;

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Trace {
    pub steps: Vec<Valuation>,
}

impl Trace {
    pub fn new(steps: Vec<Valuation>) -> Self {
        Trace { steps }
    }

    /// Build from slices of names, one slice per step.
    pub fn from_names<S: AsRef<str>>(steps: &[&[S]]) -> Self {
        Trace {
            steps: steps
                .iter()
                .map(|s| s.iter().map(|x| x.as_ref().to_string()).collect())
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn segment(&self, start: usize, end_inclusive: usize) -> Trace {
        Trace {
            steps: self.steps[start..=end_inclusive].to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Op {
    True,
    False,
    Prop(u32),
    NotProp(u32),
    And(usize, usize),
    Or(usize, usize),
    Next(usize),
    Until(usize, usize),
    Eventually(usize),
}

/// A formula flattened to post-order with propositions indexed, for
/// evaluating many traces against the same formula.
#[derive(Debug, Clone)]
pub struct CompiledFormula {
    ops: Vec<Op>,
    props: Vec<String>,
    index: BTreeMap<String, u32>,
}

impl CompiledFormula {
    pub fn new(f: &Formula) -> Result<Self, LtlError> {
        if !is_sc_ltl(f) {
            return Err(LtlError::NotCoSafe(f.to_string()));
        }
        let props = f.props();
        if props.len() > 64 {
            return Err(LtlError::TooManyProps(props.len()));
        }
        let index = props
            .iter()
            .enumerate()
            .map(|(i, p)| (p.clone(), i as u32))
            .collect();
        let mut c = CompiledFormula {
            ops: Vec::new(),
            props,
            index,
        };
        c.push(f);
        Ok(c)
    }

    fn push(&mut self, f: &Formula) -> usize {
        let op = match f {
            Formula::True => Op::True,
            Formula::False => Op::False,
            Formula::Prop(p) => Op::Prop(self.index[p]),
            Formula::Not(a) => match &**a {
                Formula::Prop(p) => Op::NotProp(self.index[p]),
                _ => unreachable!("checked by is_sc_ltl"),
            },
            Formula::And(a, b) => {
                let (x, y) = (self.push(a), self.push(b));
                Op::And(x, y)
            }
            Formula::Or(a, b) => {
                let (x, y) = (self.push(a), self.push(b));
                Op::Or(x, y)
            }
            Formula::Until(a, b) => {
                let (x, y) = (self.push(a), self.push(b));
                Op::Until(x, y)
            }
            Formula::Next(a) => Op::Next(self.push(a)),
            Formula::Eventually(a) => Op::Eventually(self.push(a)),
        };
        self.ops.push(op);
        self.ops.len() - 1
    }

    /// Propositions in index order; bit `i` of a step mask is `props()[i]`.
    pub fn props(&self) -> &[String] {
        &self.props
    }

    pub fn prop_index(&self, name: &str) -> Option<u32> {
        self.index.get(name).copied()
    }

    pub fn mask_of(&self, v: &Valuation) -> u64 {
        v.iter()
            .filter_map(|p| self.index.get(p))
            .fold(0, |m, &i| m | (1 << i))
    }

    pub fn masks(&self, t: &Trace) -> Vec<u64> {
        t.steps.iter().map(|v| self.mask_of(v)).collect()
    }

    /// Satisfaction of the whole trace given as per-step masks.
    pub fn eval_masks(&self, masks: &[u64]) -> bool {
        if masks.len() < 64 {
            let mut scratch = Vec::with_capacity(self.ops.len());
            self.positions_small(masks, &mut scratch) & 1 == 1
        } else {
            self.positions_large(masks)[0]
        }
    }

    /// Smallest `e >= start` such that `masks[start..=e]` satisfies the
    /// formula, if any.
    pub fn first_satisfied(&self, masks: &[u64], start: usize) -> Option<usize> {
        (start..masks.len()).find(|&e| self.eval_masks(&masks[start..=e]))
    }

    /// Bit `i` set iff the formula holds at position `i` (bit `n` = empty suffix).
    fn positions_small(&self, masks: &[u64], scratch: &mut Vec<u64>) -> u64 {
        let n = masks.len();
        let all = if n == 63 { u64::MAX } else { (1u64 << (n + 1)) - 1 };
        let steps = all >> 1; // positions 0..n, excluding the empty suffix
        scratch.clear();
        for op in &self.ops {
            let v = match *op {
                Op::True => all,
                Op::False => 0,
                Op::Prop(p) => bits_where(masks, |m| m >> p & 1 == 1),
                Op::NotProp(p) => bits_where(masks, |m| m >> p & 1 == 0),
                Op::And(a, b) => scratch[a] & scratch[b],
                Op::Or(a, b) => scratch[a] | scratch[b],
                Op::Next(a) => (scratch[a] >> 1) & steps,
                Op::Eventually(a) => suffix_until(all, scratch[a], n),
                Op::Until(a, b) => suffix_until(scratch[a], scratch[b], n),
            };
            scratch.push(v);
        }
        *scratch.last().unwrap()
    }

    fn positions_large(&self, masks: &[u64]) -> Vec<bool> {
        let n = masks.len();
        let mut vals: Vec<Vec<bool>> = Vec::with_capacity(self.ops.len());
        for op in &self.ops {
            let v: Vec<bool> = match *op {
                Op::True => vec![true; n + 1],
                Op::False => vec![false; n + 1],
                Op::Prop(p) => (0..=n).map(|i| i < n && masks[i] >> p & 1 == 1).collect(),
                Op::NotProp(p) => (0..=n).map(|i| i < n && masks[i] >> p & 1 == 0).collect(),
                Op::And(a, b) => (0..=n).map(|i| vals[a][i] && vals[b][i]).collect(),
                Op::Or(a, b) => (0..=n).map(|i| vals[a][i] || vals[b][i]).collect(),
                Op::Next(a) => (0..=n).map(|i| i < n && vals[a][i + 1]).collect(),
                Op::Eventually(a) | Op::Until(_, a) => {
                    let lhs = match *op {
                        Op::Until(l, _) => Some(l),
                        _ => None,
                    };
                    let mut v = vec![false; n + 1];
                    v[n] = vals[a][n];
                    for i in (0..n).rev() {
                        v[i] = vals[a][i] || (lhs.is_none_or(|l| vals[l][i]) && v[i + 1]);
                    }
                    v
                }
            };
            vals.push(v);
        }
        vals.pop().unwrap()
    }
}

fn bits_where(masks: &[u64], pred: impl Fn(u64) -> bool) -> u64 {
    masks
        .iter()
        .enumerate()
        .fold(0, |acc, (i, &m)| if pred(m) { acc | (1 << i) } else { acc })
}

/// Positions satisfying `lhs U rhs` given their position sets.
fn suffix_until(lhs: u64, rhs: u64, n: usize) -> u64 {
    let mut v = rhs & (1 << n);
    for i in (0..n).rev() {
        let holds = rhs >> i & 1 == 1 || (lhs >> i & 1 == 1 && v >> (i + 1) & 1 == 1);
        if holds {
            v |= 1 << i;
        }
    }
    v
}

/// Finite-trace satisfaction of a co-safe formula.
pub fn evaluate(f: &Formula, t: &Trace) -> Result<bool, LtlError> {
    let c = CompiledFormula::new(f)?;
    Ok(c.eval_masks(&c.masks(t)))
}
