use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, HashMap};
use std::time::Instant;

use super::{Ctx, Objective, PlanError, PlanOptions, PlanResult, SearchStats};
use crate::hier::{HierSpec, MonitorState};
use crate::nl::implied_order;
use crate::world::{Action, JointState};

/// Leaf pairs `(a, b)` where every satisfying order finishes `a` first,
/// lifted from sibling orderings at any level.
fn leaf_precedence(spec: &HierSpec) -> BTreeSet<(String, String)> {
    // leaves under each node, by name
    let mut under: HashMap<String, Vec<String>> = HashMap::new();
    for level in spec.levels().iter().rev() {
        for e in level {
            let kids = spec.children(&e.name);
            let leaves = if kids.is_empty() {
                vec![e.name.clone()]
            } else {
                kids.iter().flat_map(|k| under.get(k).cloned().unwrap_or_default()).collect()
            };
            under.insert(e.name.clone(), leaves);
        }
    }
    let mut out = BTreeSet::new();
    for e in spec.levels().iter().flatten() {
        let kids = spec.children(&e.name);
        if kids.len() < 2 {
            continue;
        }
        for (a, b) in implied_order(&e.formula, &kids).unwrap_or_default() {
            for x in &under[&a] {
                for y in &under[&b] {
                    out.insert((x.clone(), y.clone()));
                }
            }
        }
    }
    out
}

type Found = (Vec<Vec<Action>>, JointState, MonitorState, u32);

/// Cheapest run where only robot `r` acts, ending once `leaf` completes.
fn single(ctx: &Ctx, world: &JointState, mon: &MonitorState, r: usize, leaf: usize, objective: Objective, cap: usize, stats: &mut SearchStats) -> Option<Found> {
    let mut movers = vec![false; world.robots.len()];
    movers[r] = true;
    let mut arena: Vec<(usize, Vec<Action>, JointState, MonitorState)> = vec![(usize::MAX, Vec::new(), world.clone(), mon.clone())];
    let mut best: HashMap<(JointState, MonitorState), (u32, u32)> = HashMap::new();
    best.insert((world.clone(), mon.clone()), (0, 0));
    let mut open = BinaryHeap::new();
    open.push(Reverse((0u32, 0u32, 0usize)));
    let mut expanded = 0;
    while let Some(Reverse((g, g2, id))) = open.pop() {
        let (_, _, w, m) = &arena[id];
        if best[&(w.clone(), m.clone())] < (g, g2) {
            continue;
        }
        if m.is_done(leaf) {
            let (w, m) = (w.clone(), m.clone());
            let mut steps = Vec::new();
            let mut cur = id;
            while cur != 0 {
                steps.push(arena[cur].1.clone());
                cur = arena[cur].0;
            }
            steps.reverse();
            return Some((steps, w, m, g));
        }
        expanded += 1;
        stats.expanded += 1;
        if expanded > cap {
            return None;
        }
        let (w, m) = (w.clone(), m.clone());
        for (joint, next, sym) in ctx.joint_actions(&w, &movers) {
            let moves = joint.iter().filter(|a| a.is_move()).count() as u32;
            let (ng, ng2) = match objective {
                Objective::TravelCost => (g + moves, g2 + 1),
                Objective::Makespan => (g + 1, 0),
            };
            for nm in ctx.monitor.step(&m, sym) {
                if ctx.monitor.is_dead(&nm) {
                    continue;
                }
                let k = (next.clone(), nm.clone());
                if best.get(&k).is_some_and(|&b| b <= (ng, ng2)) {
                    continue;
                }
                best.insert(k, (ng, ng2));
                stats.generated += 1;
                arena.push((id, joint.clone(), next.clone(), nm));
                open.push(Reverse((ng, ng2, arena.len() - 1)));
            }
        }
    }
    None
}

/// Baseline: completes one leaf at a time, each by the single robot that can
/// do it most cheaply, respecting the order the specification implies.
pub fn greedy_plan(sc: &crate::world::Scenario, spec: &HierSpec, opts: &PlanOptions) -> Result<PlanResult, PlanError> {
    let started = Instant::now();
    let ctx = Ctx::new(sc, spec, opts.mode)?;
    let prec = leaf_precedence(spec);
    let leaves: Vec<usize> = (0..ctx.monitor.num_nodes()).filter(|&i| ctx.monitor.is_leaf(i)).collect();
    let mut world = sc.initial_state();
    world.step = 0;
    let mut mon = ctx.monitor.initial();
    let mut steps: Vec<Vec<Action>> = Vec::new();
    let mut stats = SearchStats::default();
    while !ctx.monitor.accepted(&mon) {
        let ready: Vec<usize> = leaves
            .iter()
            .copied()
            .filter(|&l| !mon.is_done(l))
            .filter(|&l| {
                let name = ctx.monitor.node_name(l);
                leaves.iter().all(|&o| mon.is_done(o) || !prec.contains(&(ctx.monitor.node_name(o).to_string(), name.to_string())))
            })
            .collect();
        let mut pick: Option<(u32, Found)> = None;
        for &l in &ready {
            for r in 0..sc.robots.len() {
                if let Some(f) = single(&ctx, &world, &mon, r, l, opts.objective, opts.budget.node_cap, &mut stats) {
                    if pick.as_ref().is_none_or(|(c, _)| f.3 < *c) {
                        pick = Some((f.3, f));
                    }
                }
            }
        }
        let Some((_, (s, w, m, _))) = pick else {
            return Err(PlanError::Infeasible { expanded: stats.expanded });
        };
        steps.extend(s);
        world = w;
        mon = m;
    }
    stats.runtime_ms = started.elapsed().as_millis() as u64;
    ctx.finish(spec, opts.objective, steps, stats, opts.mode)
}
