use std::collections::BTreeSet;

use super::{Formula, Valuation};

/// Syntactic normalization: boolean structure is brought to a sorted,
/// absorbed disjunctive normal form over temporal and literal subformulas,
/// plus a few unit laws (`F T = T`, `f U T = T`, `T U f = F f`).
///
/// Two formulas equal after `simplify` are equivalent; the converse need not
/// hold.
pub fn simplify(f: &Formula) -> Formula {
    match f {
        Formula::True | Formula::False | Formula::Prop(_) => f.clone(),
        Formula::Not(a) => match simplify(a) {
            Formula::True => Formula::False,
            Formula::False => Formula::True,
            other => other.not(),
        },
        Formula::And(a, b) => normalize(&simplify(a).and(simplify(b))),
        Formula::Or(a, b) => normalize(&simplify(a).or(simplify(b))),
        Formula::Next(a) => match simplify(a) {
            Formula::False => Formula::False,
            s => s.next(),
        },
        Formula::Eventually(a) => match simplify(a) {
            Formula::True => Formula::True,
            Formula::False => Formula::False,
            s @ Formula::Eventually(_) => s,
            s => s.eventually(),
        },
        Formula::Until(a, b) => match (simplify(a), simplify(b)) {
            (_, Formula::True) => Formula::True,
            (_, Formula::False) => Formula::False,
            (Formula::False, s) => s,
            (Formula::True, s) => simplify(&s.eventually()),
            (l, r) => l.until(r),
        },
    }
}

type Clause = BTreeSet<Formula>;

/// Disjunctive normal form over non-boolean subformulas.
fn clauses(f: &Formula) -> Vec<Clause> {
    match f {
        Formula::True => vec![Clause::new()],
        Formula::False => Vec::new(),
        Formula::Or(a, b) => {
            let mut c = clauses(a);
            c.extend(clauses(b));
            c
        }
        Formula::And(a, b) => {
            let rhs = clauses(b);
            let mut out = Vec::new();
            for l in clauses(a) {
                for r in &rhs {
                    out.push(l.union(r).cloned().collect());
                }
            }
            out
        }
        other => vec![Clause::from([other.clone()])],
    }
}

/// Sorted, absorbed DNF; drops clauses with `p & !p`.
fn normalize(f: &Formula) -> Formula {
    let mut cs: Vec<Clause> = clauses(f)
        .into_iter()
        .filter(|c| !c.iter().any(|x| matches!(x, Formula::Prop(_)) && c.contains(&x.clone().not())))
        .collect();
    cs.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    cs.dedup();
    let mut kept: Vec<Clause> = Vec::new();
    for c in cs {
        if !kept.iter().any(|k| k.is_subset(&c)) {
            kept.push(c);
        }
    }
    kept.sort();
    kept.into_iter()
        .map(|c| c.into_iter().reduce(Formula::and).unwrap_or(Formula::True))
        .reduce(Formula::or)
        .unwrap_or(Formula::False)
}

/// Residual obligation after reading one step: for every trace `t`,
/// `v·t ⊨ f` iff `t ⊨ progress(f, v)`. The result is simplified.
pub fn progress(f: &Formula, v: &Valuation) -> Formula {
    simplify(&raw_progress(f, v))
}

fn raw_progress(f: &Formula, v: &Valuation) -> Formula {
    let lit = |b: bool| if b { Formula::True } else { Formula::False };
    match f {
        Formula::True => Formula::True,
        Formula::False => Formula::False,
        Formula::Prop(p) => lit(v.contains(p)),
        Formula::Not(a) => match &**a {
            Formula::Prop(p) => lit(!v.contains(p)),
            other => raw_progress(other, v).not(),
        },
        Formula::And(a, b) => raw_progress(a, v).and(raw_progress(b, v)),
        Formula::Or(a, b) => raw_progress(a, v).or(raw_progress(b, v)),
        Formula::Next(a) => (**a).clone(),
        Formula::Until(a, b) => raw_progress(b, v).or(raw_progress(a, v).and(f.clone())),
        Formula::Eventually(a) => raw_progress(a, v).or(f.clone()),
    }
}
