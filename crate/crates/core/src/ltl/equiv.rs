//! Bounded trace-set comparison of two formulas.

use serde::{Deserialize, Serialize};

use super::{CompiledFormula, Formula, LtlError, Trace, Valuation};

/// Which per-step valuations to enumerate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceUniverse {
    /// Every subset of the propositions at every step.
    All,
    /// At most one proposition per step.
    Pulse,
    /// Pulse traces in which each proposition holds at most once, as
    /// composite propositions do.
    Once,
}

const MAX_ALL_PROPS: usize = 16;

/// Per-step symbols of `universe` over `props`, as valuations.
pub fn symbols(props: &[String], universe: TraceUniverse) -> Result<Vec<Valuation>, LtlError> {
    Ok(match universe {
        TraceUniverse::Pulse | TraceUniverse::Once => std::iter::once(Valuation::new())
            .chain(props.iter().map(|p| std::iter::once(p.clone()).collect()))
            .collect(),
        TraceUniverse::All => {
            if props.len() > MAX_ALL_PROPS {
                return Err(LtlError::TooManyProps(props.len()));
            }
            (0..1u32 << props.len())
                .map(|code| {
                    props
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| code >> i & 1 == 1)
                        .map(|(_, p)| p.clone())
                        .collect()
                })
                .collect()
        }
    })
}

/// Calls `visit` with every symbol sequence of length `0..=max_len`
/// (indices into the symbol table), shortest first. Stops when `visit`
/// returns `false`.
pub fn for_each_sequence(n_symbols: usize, max_len: usize, mut visit: impl FnMut(&[usize]) -> bool) {
    let mut seq = Vec::with_capacity(max_len);
    for len in 0..=max_len {
        seq.clear();
        seq.resize(len, 0);
        loop {
            if !visit(&seq) {
                return;
            }
            let mut k = 0;
            while k < len {
                seq[k] += 1;
                if seq[k] < n_symbols {
                    break;
                }
                seq[k] = 0;
                k += 1;
            }
            if k == len {
                break;
            }
        }
        if n_symbols == 0 {
            break;
        }
    }
}

/// First trace (shortest first) of length at most `max_len`, over the union
/// of both formulas' propositions, that one formula accepts and the other
/// rejects.
pub fn find_disagreement(
    f: &Formula,
    g: &Formula,
    max_len: usize,
    universe: TraceUniverse,
) -> Result<Option<Trace>, LtlError> {
    let cf = CompiledFormula::new(f)?;
    let cg = CompiledFormula::new(g)?;
    let mut props = f.props();
    for p in g.props() {
        if !props.contains(&p) {
            props.push(p);
        }
    }
    let table = symbols(&props, universe)?;
    let fm: Vec<u64> = table.iter().map(|v| cf.mask_of(v)).collect();
    let gm: Vec<u64> = table.iter().map(|v| cg.mask_of(v)).collect();
    let mut found = None;
    let (mut a, mut b) = (Vec::new(), Vec::new());
    let once = universe == TraceUniverse::Once;
    for_each_sequence(table.len(), max_len, |seq| {
        if once && seq.iter().enumerate().any(|(i, &s)| s != 0 && seq[..i].contains(&s)) {
            return true;
        }
        a.clear();
        b.clear();
        a.extend(seq.iter().map(|&s| fm[s]));
        b.extend(seq.iter().map(|&s| gm[s]));
        if cf.eval_masks(&a) != cg.eval_masks(&b) {
            found = Some(Trace::new(seq.iter().map(|&s| table[s].clone()).collect()));
            return false;
        }
        true
    });
    Ok(found)
}

pub fn equivalent_upto(f: &Formula, g: &Formula, max_len: usize, universe: TraceUniverse) -> Result<bool, LtlError> {
    Ok(find_disagreement(f, g, max_len, universe)?.is_none())
}
