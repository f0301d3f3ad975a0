//! Co-safe LTL formulas over named propositions.
//!
//! The AST admits the base grammar (`T`, propositions, negation, conjunction,
//! next, until) plus the derived `|` and `F` operators. Negation is only
//! meaningful directly above a proposition; see [`is_sc_ltl`].

mod equiv;
mod eval;
mod parser;
mod progress;

use std::collections::BTreeSet;
use std::fmt;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{json, Value};

pub use equiv::{equivalent_upto, find_disagreement, for_each_sequence, symbols, TraceUniverse};
pub use eval::{evaluate, CompiledFormula, Trace, Valuation};
pub use parser::{canonical_prop, parse, ParseError};
pub use progress::{progress, simplify};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LtlError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("formula is not syntactically co-safe: {0}")]
    NotCoSafe(String),
    #[error("formula has {0} propositions, more than the supported 64")]
    TooManyProps(usize),
    #[error("malformed JSON formula: {0}")]
    Json(String),
}

/// Whether a proposition is grounded in a robot action or stands for a whole
/// lower-level formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PropKind {
    Atomic,
    Composite,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    True,
    /// Only produced by progression; never written by users.
    False,
    Prop(String),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Next(Box<Formula>),
    Until(Box<Formula>, Box<Formula>),
    Eventually(Box<Formula>),
}

impl Formula {
    pub fn prop(name: impl Into<String>) -> Self {
        Formula::Prop(name.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Self {
        Formula::Not(Box::new(self))
    }

    pub fn and(self, rhs: Formula) -> Self {
        Formula::And(Box::new(self), Box::new(rhs))
    }

    pub fn or(self, rhs: Formula) -> Self {
        Formula::Or(Box::new(self), Box::new(rhs))
    }

    pub fn next(self) -> Self {
        Formula::Next(Box::new(self))
    }

    pub fn until(self, rhs: Formula) -> Self {
        Formula::Until(Box::new(self), Box::new(rhs))
    }

    pub fn eventually(self) -> Self {
        Formula::Eventually(Box::new(self))
    }

    /// Left-nested conjunction; `None` for an empty iterator.
    pub fn conjunction<I: IntoIterator<Item = Formula>>(parts: I) -> Option<Formula> {
        parts.into_iter().reduce(Formula::and)
    }

    /// Proposition names in order of first occurrence (left to right).
    pub fn props(&self) -> Vec<String> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        self.visit_props(&mut |p| {
            if seen.insert(p.to_string()) {
                out.push(p.to_string());
            }
        });
        out
    }

    fn visit_props(&self, f: &mut impl FnMut(&str)) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Prop(p) => f(p),
            Formula::Not(a) | Formula::Next(a) | Formula::Eventually(a) => a.visit_props(f),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Until(a, b) => {
                a.visit_props(f);
                b.visit_props(f);
            }
        }
    }

    /// Rename propositions; names missing from `map` are kept.
    pub fn rename(&self, map: &dyn Fn(&str) -> Option<String>) -> Formula {
        let r = |f: &Formula| Box::new(f.rename(map));
        match self {
            Formula::True => Formula::True,
            Formula::False => Formula::False,
            Formula::Prop(p) => Formula::Prop(map(p).unwrap_or_else(|| p.clone())),
            Formula::Not(a) => Formula::Not(r(a)),
            Formula::Next(a) => Formula::Next(r(a)),
            Formula::Eventually(a) => Formula::Eventually(r(a)),
            Formula::And(a, b) => Formula::And(r(a), r(b)),
            Formula::Or(a, b) => Formula::Or(r(a), r(b)),
            Formula::Until(a, b) => Formula::Until(r(a), r(b)),
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Formula::True | Formula::False | Formula::Prop(_) => 1,
            Formula::Not(a) | Formula::Next(a) | Formula::Eventually(a) => 1 + a.size(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Until(a, b) => 1 + a.size() + b.size(),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Formula::Or(..) => 1,
            Formula::And(..) => 2,
            Formula::Until(..) => 3,
            Formula::Not(_) | Formula::Next(_) | Formula::Eventually(_) => 4,
            Formula::True | Formula::False | Formula::Prop(_) => 5,
        }
    }

    pub fn to_json(&self) -> Value {
        let args = |xs: &[&Formula]| Value::Array(xs.iter().map(|x| x.to_json()).collect());
        match self {
            Formula::True => json!({"op": "T"}),
            Formula::False => json!({"op": "false"}),
            Formula::Prop(p) => json!({"op": "prop", "name": p}),
            Formula::Not(a) => json!({"op": "!", "args": args(&[a])}),
            Formula::Next(a) => json!({"op": "X", "args": args(&[a])}),
            Formula::Eventually(a) => json!({"op": "F", "args": args(&[a])}),
            Formula::And(a, b) => json!({"op": "&", "args": args(&[a, b])}),
            Formula::Or(a, b) => json!({"op": "|", "args": args(&[a, b])}),
            Formula::Until(a, b) => json!({"op": "U", "args": args(&[a, b])}),
        }
    }

    pub fn from_json(v: &Value) -> Result<Formula, LtlError> {
        let bad = |m: &str| LtlError::Json(m.to_string());
        let op = v
            .get("op")
            .and_then(Value::as_str)
            .ok_or_else(|| bad("missing \"op\""))?;
        let args = || -> Result<Vec<Formula>, LtlError> {
            v.get("args")
                .and_then(Value::as_array)
                .ok_or_else(|| bad("missing \"args\""))?
                .iter()
                .map(Formula::from_json)
                .collect()
        };
        let arity = |n: usize| -> Result<Vec<Formula>, LtlError> {
            let a = args()?;
            if a.len() != n {
                return Err(LtlError::Json(format!("operator {op} takes {n} argument(s), got {}", a.len())));
            }
            Ok(a)
        };
        Ok(match op {
            "T" => Formula::True,
            "false" => Formula::False,
            "prop" => {
                let name = v
                    .get("name")
                    .and_then(Value::as_str)
                    .ok_or_else(|| bad("prop without \"name\""))?;
                if name.is_empty() {
                    return Err(bad("empty proposition name"));
                }
                Formula::Prop(name.to_lowercase())
            }
            "!" | "X" | "F" => {
                let a = arity(1)?.pop().unwrap();
                match op {
                    "!" => a.not(),
                    "X" => a.next(),
                    _ => a.eventually(),
                }
            }
            "&" | "|" | "U" => {
                let mut a = arity(2)?;
                let b = a.pop().unwrap();
                let a = a.pop().unwrap();
                match op {
                    "&" => a.and(b),
                    "|" => a.or(b),
                    _ => a.until(b),
                }
            }
            other => return Err(LtlError::Json(format!("unknown operator {other:?}"))),
        })
    }
}

/// True iff negation appears only directly above propositions.
///
/// The AST has no always/release operators, so this is the whole co-safety
/// check. `False` is accepted since progression produces it.
pub fn is_sc_ltl(f: &Formula) -> bool {
    match f {
        Formula::True | Formula::False | Formula::Prop(_) => true,
        Formula::Not(a) => matches!(**a, Formula::Prop(_)),
        Formula::Next(a) | Formula::Eventually(a) => is_sc_ltl(a),
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Until(a, b) => is_sc_ltl(a) && is_sc_ltl(b),
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn child(out: &mut fmt::Formatter<'_>, c: &Formula, min: u8) -> fmt::Result {
            if c.precedence() < min {
                write!(out, "({c})")
            } else {
                write!(out, "{c}")
            }
        }
        fn unary(out: &mut fmt::Formatter<'_>, op: &str, c: &Formula) -> fmt::Result {
            if c.precedence() < 4 {
                write!(out, "{op}({c})")
            } else if op == "!" {
                write!(out, "!{c}")
            } else {
                write!(out, "{op} {c}")
            }
        }
        match self {
            Formula::True => write!(f, "T"),
            Formula::False => write!(f, "false"),
            Formula::Prop(p) => write!(f, "{p}"),
            Formula::Not(a) => unary(f, "!", a),
            Formula::Next(a) => unary(f, "X", a),
            Formula::Eventually(a) => unary(f, "F", a),
            // `&` and `|` are left-associative, `U` right-associative.
            Formula::And(a, b) => {
                child(f, a, 2)?;
                write!(f, " & ")?;
                child(f, b, 3)
            }
            Formula::Or(a, b) => {
                child(f, a, 1)?;
                write!(f, " | ")?;
                child(f, b, 2)
            }
            Formula::Until(a, b) => {
                child(f, a, 4)?;
                write!(f, " U ")?;
                child(f, b, 3)
            }
        }
    }
}

impl std::str::FromStr for Formula {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

/// Text form in JSON files (`"F(a & F b)"`).
impl Serialize for Formula {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// Accepts either the text form or the `{"op": ..., "args": [...]}` AST form.
impl<'de> Deserialize<'de> for Formula {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = Value::deserialize(d)?;
        match &v {
            Value::String(s) => parse(s).map_err(D::Error::custom),
            Value::Object(_) => Formula::from_json(&v).map_err(D::Error::custom),
            _ => Err(D::Error::custom("formula must be a string or an AST object")),
        }
    }
}
