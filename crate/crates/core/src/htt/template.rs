use super::{ApiCall, HttError, SkillRegistry};
use crate::ltl::Formula;

/// Transitive reduction of the sibling order as successor lists over child
/// indices, sorted by index.
pub(crate) fn order_dag(children: &[String], relations: &[(String, String)]) -> Result<Vec<Vec<usize>>, HttError> {
    let n = children.len();
    let idx = |s: &str| children.iter().position(|c| c == s);
    let mut adj = vec![vec![false; n]; n];
    for (a, b) in relations {
        match (idx(a), idx(b)) {
            (Some(i), Some(j)) if i != j => adj[i][j] = true,
            (Some(i), Some(_)) => return Err(HttError::Cycle(vec![children[i].clone(), children[i].clone()])),
            _ => return Err(HttError::UnknownSibling(a.clone(), b.clone())),
        }
    }
    if let Some(cyc) = find_cycle(&adj) {
        return Err(HttError::Cycle(cyc.into_iter().map(|i| children[i].clone()).collect()));
    }
    let mut reach = adj.clone();
    for k in 0..n {
        for i in 0..n {
            if reach[i][k] {
                for j in 0..n {
                    if reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
    }
    let mut succ = vec![Vec::new(); n];
    for i in 0..n {
        for j in 0..n {
            if reach[i][j] && !(0..n).any(|k| k != i && k != j && reach[i][k] && reach[k][j]) {
                succ[i].push(j);
            }
        }
    }
    Ok(succ)
}

fn find_cycle(adj: &[Vec<bool>]) -> Option<Vec<usize>> {
    let n = adj.len();
    // 0 = unvisited, 1 = on stack, 2 = done
    let mut color = vec![0u8; n];
    let mut path = Vec::new();
    fn dfs(u: usize, adj: &[Vec<bool>], color: &mut [u8], path: &mut Vec<usize>) -> Option<Vec<usize>> {
        color[u] = 1;
        path.push(u);
        for v in 0..adj.len() {
            if !adj[u][v] {
                continue;
            }
            if color[v] == 1 {
                let at = path.iter().position(|&x| x == v).unwrap();
                let mut cyc = path[at..].to_vec();
                cyc.push(v);
                return Some(cyc);
            }
            if color[v] == 0 {
                if let Some(c) = dfs(v, adj, color, path) {
                    return Some(c);
                }
            }
        }
        path.pop();
        color[u] = 2;
        None
    }
    for s in 0..n {
        if color[s] == 0 {
            if let Some(c) = dfs(s, adj, &mut color, &mut path) {
                return Some(c);
            }
        }
    }
    None
}

/// Temporal template for a set of sibling tasks and their ordering.
///
/// The reduced order is read as a forest: each task nests its immediate
/// successors, `F(a & F b & F c)`, and unordered roots are conjoined. A task
/// with several immediate predecessors hangs under the first one in `children`
/// order; every other incoming edge `(p, x)` adds a conjunct `F(p & F x)`.
pub fn generate_ltl(children: &[String], relations: &[(String, String)]) -> Result<Formula, HttError> {
    let succ = order_dag(children, relations)?;
    let n = children.len();
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, s) in succ.iter().enumerate() {
        for &j in s {
            preds[j].push(i);
        }
    }
    let mut tree_kids: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut extra = Vec::new();
    for (j, ps) in preds.iter().enumerate() {
        if let Some((&first, rest)) = ps.split_first() {
            tree_kids[first].push(j);
            extra.extend(rest.iter().map(|&p| (p, j)));
        }
    }
    fn nest(i: usize, kids: &[Vec<usize>], names: &[String]) -> Formula {
        let head = Formula::prop(names[i].clone());
        Formula::conjunction(std::iter::once(head).chain(kids[i].iter().map(|&k| nest(k, kids, names))))
            .expect("non-empty")
            .eventually()
    }
    let mut parts: Vec<Formula> = (0..n).filter(|&i| preds[i].is_empty()).map(|i| nest(i, &tree_kids, children)).collect();
    parts.extend(extra.into_iter().map(|(p, j)| {
        Formula::prop(children[p].clone())
            .and(Formula::prop(children[j].clone()).eventually())
            .eventually()
    }));
    Ok(Formula::conjunction(parts).unwrap_or(Formula::True))
}

/// `F(a1 & F(a2 & ... F an))` over the completion props of `calls`.
pub fn action_formula(calls: &[ApiCall], skills: &SkillRegistry) -> Result<Formula, HttError> {
    for c in calls {
        if !skills.contains(&c.verb) {
            return Err(HttError::UnregisteredVerb(c.verb.clone()));
        }
        if c.args.is_empty() {
            return Err(HttError::EmptyArgs(c.to_string()));
        }
    }
    let mut it = calls.iter().rev();
    let last = it.next().ok_or(HttError::EmptyActions)?;
    let mut acc = Formula::prop(last.prop()).eventually();
    for c in it {
        acc = Formula::prop(c.prop()).and(acc).eventually();
    }
    Ok(acc)
}
