use crate::htt::{generate_ltl, ApiCall, HttError, TaskNode};
use crate::ltl::Formula;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PatternError {
    #[error("unparseable sentence: {0}")]
    Unparseable(String),
    #[error("contradictory ordering: {0}")]
    Contradictory(String),
}

/// `task_1_2` -> `Task_1.2`
pub fn display_id(id: &str) -> String {
    match id.strip_prefix("task_") {
        Some(rest) => format!("Task_{}", rest.replace('_', ".")),
        None => id.to_string(),
    }
}

/// `Task_1.2` (or `task_1_2`) -> `task_1_2`
pub fn id_from_display(s: &str) -> String {
    let s = s.trim();
    match s.strip_prefix("Task_").or_else(|| s.strip_prefix("task_")) {
        Some(rest) => format!("task_{}", rest.trim_end_matches('.').replace('.', "_")),
        None => s.to_string(),
    }
}

/// Sentence asking for a non-leaf node's formula, in the translator's grammar.
pub fn node_sentence(node: &TaskNode) -> String {
    let mut clauses: Vec<String> = node
        .children
        .iter()
        .map(|c| format!("eventually {} is executed", display_id(c)))
        .collect();
    clauses.extend(
        node.relations
            .iter()
            .map(|(a, b)| format!("always {} must precede {}", display_id(a), display_id(b))),
    );
    capitalize(&clauses.join(" and ")) + "."
}

/// `Pickup(plate) then Move(plate, lower_rack)`
pub fn leaf_sentence(actions: &[ApiCall]) -> String {
    match actions {
        [one] => format!("Eventually {one} is executed."),
        _ => actions.iter().map(ApiCall::to_string).collect::<Vec<_>>().join(" then "),
    }
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Entity(String),
    Word(String),
}

fn tokenize(s: &str) -> Result<Vec<Tok>, PatternError> {
    let bytes = s.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i].is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let rest = &s[i..];
        let task = rest.strip_prefix("Task_").or_else(|| rest.strip_prefix("task_"));
        if let Some(tail) = task.filter(|t| t.starts_with(|c: char| c.is_ascii_digit())) {
            let len = tail
                .find(|c: char| !(c.is_ascii_digit() || c == '.' || c == '_'))
                .unwrap_or(tail.len());
            let body = tail[..len].trim_end_matches(['.', '_']);
            out.push(Tok::Entity(format!("task_{}", body.replace('.', "_"))));
            i += 5 + len;
            continue;
        }
        let word_len = rest
            .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
            .unwrap_or(rest.len());
        if word_len > 0 && rest[word_len..].starts_with('(') {
            let close = rest
                .find(')')
                .ok_or_else(|| PatternError::Unparseable(format!("unclosed call in `{s}`")))?;
            let call = ApiCall::parse(&rest[..=close])
                .filter(|c| !c.args.is_empty())
                .ok_or_else(|| PatternError::Unparseable(format!("bad call `{}`", &rest[..=close])))?;
            out.push(Tok::Entity(call.prop()));
            i += close + 1;
            continue;
        }
        let len = rest.find(char::is_whitespace).unwrap_or(rest.len()).max(1);
        let w: String = rest[..len]
            .chars()
            .filter(|c| c.is_alphanumeric())
            .collect::<String>()
            .to_lowercase();
        if !w.is_empty() {
            out.push(Tok::Word(w));
        }
        i += len;
    }
    Ok(out)
}

const MENTION: [&str; 7] = ["eventually", "executed", "completed", "done", "performed", "finished", "achieved"];
const FORWARD: [&str; 6] = ["precede", "precedes", "before", "then", "followed", "prior"];
const BACKWARD: [&str; 4] = ["after", "follow", "follows", "once"];
const FILLER: [&str; 5] = ["in", "any", "order", "always", "the"];

/// Translates structured English over task ids (`Task_1.2`) or API calls
/// (`Pickup(plate)`) into a formula.
///
/// Clauses are joined by "and". A clause either mentions one task that must
/// eventually happen or orders two or more ("precede", "before", "then",
/// "after"). Every mentioned task is required.
pub fn pattern_translate(sentence: &str) -> Result<Formula, PatternError> {
    let toks = tokenize(sentence)?;
    let clauses: Vec<&[Tok]> = toks
        .split(|t| *t == Tok::Word("and".into()))
        .filter(|c| !c.is_empty())
        .collect();
    if clauses.is_empty() {
        return Err(PatternError::Unparseable(sentence.to_string()));
    }
    let mut mentioned: Vec<String> = Vec::new();
    let mut pairs: Vec<(String, String)> = Vec::new();
    let mut all_then = clauses.len() == 1;
    for clause in &clauses {
        let ents: Vec<(usize, &String)> = clause
            .iter()
            .enumerate()
            .filter_map(|(i, t)| match t {
                Tok::Entity(e) => Some((i, e)),
                _ => None,
            })
            .collect();
        let words = |lo: usize, hi: usize| {
            clause[lo..hi].iter().filter_map(|t| match t {
                Tok::Word(w) => Some(w.as_str()),
                _ => None,
            })
        };
        for (_, e) in &ents {
            if !mentioned.contains(e) {
                mentioned.push((*e).clone());
            }
        }
        match ents.len() {
            0 => {
                if !words(0, clause.len()).all(|w| FILLER.contains(&w)) {
                    return Err(PatternError::Unparseable(sentence.to_string()));
                }
            }
            1 => {
                all_then = false;
                if !words(0, clause.len()).any(|w| MENTION.contains(&w)) {
                    return Err(PatternError::Unparseable(sentence.to_string()));
                }
            }
            _ => {
                for w in ents.windows(2) {
                    let (i, a) = w[0];
                    let (j, b) = w[1];
                    let between: Vec<&str> = words(i + 1, j).collect();
                    if between != ["then"] {
                        all_then = false;
                    }
                    if between.iter().any(|x| FORWARD.contains(x)) {
                        pairs.push((a.clone(), b.clone()));
                    } else if between.iter().any(|x| BACKWARD.contains(x)) {
                        pairs.push((b.clone(), a.clone()));
                    } else {
                        return Err(PatternError::Unparseable(sentence.to_string()));
                    }
                }
            }
        }
    }
    if all_then {
        // A bare chain may repeat an action, so nest it directly.
        let props: Vec<String> = clauses[0]
            .iter()
            .filter_map(|t| match t {
                Tok::Entity(e) => Some(e.clone()),
                _ => None,
            })
            .collect();
        let mut it = props.into_iter().rev();
        let mut acc = Formula::prop(it.next().expect("two entities")).eventually();
        for p in it {
            acc = Formula::prop(p).and(acc).eventually();
        }
        return Ok(acc);
    }
    if mentioned.is_empty() {
        return Err(PatternError::Unparseable(sentence.to_string()));
    }
    generate_ltl(&mentioned, &pairs).map_err(|e| match e {
        HttError::Cycle(c) => PatternError::Contradictory(c.join(" -> ")),
        other => PatternError::Unparseable(other.to_string()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ltl::{equivalent_upto, is_sc_ltl, parse, TraceUniverse};

    fn t(s: &str) -> Formula {
        pattern_translate(s).unwrap()
    }

    #[test]
    fn table_sentences() {
        assert_eq!(
            t("Always Task_1.1 must precede Task_1.2 and eventually Task_1.1 must be executed."),
            parse("F(task_1_1 & F task_1_2)").unwrap()
        );
        assert_eq!(
            t("Eventually Task_1.1.1 is executed and eventually Task_1.1.2 is executed and eventually Task_1.1.3 is executed."),
            parse("F task_1_1_1 & F task_1_1_2 & F task_1_1_3").unwrap()
        );
        assert_eq!(
            t("Always Task_1.2.1 precedes Task_1.2.2 and eventually Task_1.2.1 is executed and eventually Task_1.2.2 is executed."),
            parse("F(task_1_2_1 & F task_1_2_2)").unwrap()
        );
    }

    #[test]
    fn other_connectives() {
        let before = t("Task_2 must be completed before Task_1.");
        assert_eq!(before, parse("F(task_2 & F task_1)").unwrap());
        let after = t("Task_1 is executed after Task_2.");
        assert!(equivalent_upto(&after, &before, 4, TraceUniverse::All).unwrap());
        assert_eq!(
            t("Pickup(plate) then Move(plate, lower_rack)"),
            parse("F(pickup_plate & F move_plate_lower_rack)").unwrap()
        );
        assert_eq!(
            t("Pickup(a) then Place(a, b) then Pickup(a)"),
            parse("F(pickup_a & F(place_a_b & F pickup_a))").unwrap()
        );
        assert_eq!(t("Eventually ToggleOn(stove) is done"), parse("F toggle_on_stove").unwrap());
        assert!(is_sc_ltl(&t("Task_1.1 then Task_1.2 and eventually Task_1.3 is executed")));
    }

    #[test]
    fn rejects() {
        assert!(matches!(pattern_translate("Do the dishes"), Err(PatternError::Unparseable(_))));
        assert!(matches!(pattern_translate("Task_1.1 or Task_1.2"), Err(PatternError::Unparseable(_))));
        assert!(matches!(
            pattern_translate("Task_1 precedes Task_2 and Task_2 precedes Task_1"),
            Err(PatternError::Contradictory(_))
        ));
        assert!(pattern_translate("").is_err());
    }

    #[test]
    fn ids_and_sentences() {
        assert_eq!(display_id("task_1_2_1"), "Task_1.2.1");
        assert_eq!(id_from_display("Task_1.2.1"), "task_1_2_1");
        assert_eq!(id_from_display("task_1_2"), "task_1_2");
        let node = TaskNode {
            instruction: String::new(),
            children: vec!["task_1_1".into(), "task_1_2".into()],
            relations: vec![("task_1_1".into(), "task_1_2".into())],
            actions: vec![],
        };
        let s = node_sentence(&node);
        assert_eq!(
            s,
            "Eventually Task_1.1 is executed and eventually Task_1.2 is executed and always Task_1.1 must precede Task_1.2."
        );
        assert_eq!(t(&s), parse("F(task_1_1 & F task_1_2)").unwrap());
        let calls = [ApiCall::new("Pickup", ["cup"])];
        assert_eq!(t(&leaf_sentence(&calls)), parse("F pickup_cup").unwrap());
    }
}
