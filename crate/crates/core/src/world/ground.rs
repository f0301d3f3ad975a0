use std::collections::BTreeMap;

use super::{Scenario, WorldError};
use crate::hier::HierSpec;
use crate::htt::ApiCall;
use crate::ltl::canonical_prop;

/// Atomic propositions of a specification mapped back to API calls.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grounded {
    pub calls: BTreeMap<String, ApiCall>,
}

fn segmentations<'a>(rest: &str, ids: &'a [(String, String)]) -> Vec<Vec<&'a str>> {
    if rest.is_empty() {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for (canon, id) in ids {
        if let Some(tail) = rest.strip_prefix(canon.as_str()) {
            let tail = match tail.strip_prefix('_') {
                Some(t) if !t.is_empty() => t,
                None if tail.is_empty() => tail,
                _ => continue,
            };
            for mut s in segmentations(tail, ids) {
                s.insert(0, id.as_str());
                out.push(s);
            }
        }
    }
    out
}

/// Parses `move_plate_lower_rack` into `Move(plate, lower_rack)` using the
/// scenario's skills and entity ids. Ambiguous names are an error.
pub fn ground_prop(sc: &Scenario, prop: &str) -> Result<ApiCall, WorldError> {
    let ungrounded = |reason: String| WorldError::Ungrounded { prop: prop.to_string(), reason };
    let ids: Vec<(String, String)> = sc
        .objects
        .iter()
        .map(|o| o.id.clone())
        .chain(sc.locations.iter().map(|l| l.id.clone()))
        .map(|id| (canonical_prop(&id, &[] as &[&str]), id))
        .collect();
    let mut found = Vec::new();
    for (prefix, verb) in sc.skills.prefixes() {
        let Some(rest) = prop.strip_prefix(prefix.as_str()).and_then(|r| r.strip_prefix('_')) else { continue };
        for args in segmentations(rest, &ids) {
            found.push(ApiCall::new(verb.clone(), args));
        }
    }
    let call = match found.len() {
        0 => return Err(ungrounded("no skill and entity ids spell it".into())),
        1 => found.pop().unwrap(),
        _ => {
            let alts: Vec<String> = found.iter().map(|c| c.to_string()).collect();
            return Err(ungrounded(format!("ambiguous: {}", alts.join(" or "))));
        }
    };
    let is_obj = |a: &str| sc.object_index(a).is_some();
    let is_loc = |a: &str| sc.location(a).is_some();
    let ok = match call.verb.as_str() {
        "Pickup" => call.args.len() == 1 && is_obj(&call.args[0]),
        "Move" | "Place" => call.args.len() == 2 && is_obj(&call.args[0]) && is_loc(&call.args[1]),
        _ => !call.args.is_empty(),
    };
    if !ok {
        return Err(ungrounded(format!("`{call}` has the wrong argument kinds")));
    }
    Ok(call)
}

pub fn ground_spec(sc: &Scenario, spec: &HierSpec) -> Result<Grounded, WorldError> {
    let mut calls = BTreeMap::new();
    for p in spec.atomic_props() {
        let c = ground_prop(sc, &p)?;
        calls.insert(p, c);
    }
    Ok(Grounded { calls })
}
