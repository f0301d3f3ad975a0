//! Joint task allocation and planning: best-first search over the product of
//! the world state and the specification monitor.

mod greedy;

use std::cmp::Reverse;
use std::collections::hash_map::{DefaultHasher, Entry};
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::hier::{HierError, HierSpec, Monitor, MonitorState, SiblingMode};
use crate::htt::ApiCall;
use crate::world::{
    check_success, ground_spec, metrics, step, Action, CheckMethod, Dir, JointState, ObjPos, PlanTrace, Scenario,
    WorldError,
};

pub use greedy::greedy_plan;

pub const DEFAULT_TIMEOUT_S: u64 = 300;
pub const DEFAULT_NODE_CAP: usize = 5_000_000;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// Total distance moved, manipulation free.
    #[default]
    TravelCost,
    /// Steps until the specification is met.
    Makespan,
}

impl FromStr for Objective {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "travel_cost" | "travel-cost" | "cost" => Ok(Objective::TravelCost),
            "makespan" | "time" => Ok(Objective::Makespan),
            other => Err(format!("unknown objective {other:?} (expected travel_cost|makespan)")),
        }
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Objective::TravelCost => "travel_cost",
            Objective::Makespan => "makespan",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    pub timeout: Duration,
    pub node_cap: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { timeout: Duration::from_secs(DEFAULT_TIMEOUT_S), node_cap: DEFAULT_NODE_CAP }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanOptions {
    pub objective: Objective,
    pub mode: SiblingMode,
    pub budget: Budget,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchStats {
    pub expanded: usize,
    pub generated: usize,
    pub runtime_ms: u64,
    /// Largest f-value popped; never above the optimum for makespan.
    pub max_f_popped: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanResult {
    pub objective: Objective,
    pub plan: PlanTrace,
    pub travel_cost_m: f64,
    pub completion_time: u32,
    pub moves: u32,
    /// Leaf specification name -> robots that executed one of its actions.
    pub allocation: BTreeMap<String, BTreeSet<String>>,
    pub stats: SearchStats,
}

impl PlanResult {
    /// Value of the optimized objective: moves for travel cost, steps for makespan.
    pub fn objective_value(&self) -> u32 {
        match self.objective {
            Objective::TravelCost => self.moves,
            Objective::Makespan => self.completion_time,
        }
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan result serializes")
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PlanError {
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Spec(#[from] HierError),
    #[error("no plan satisfies the specification ({expanded} states explored)")]
    Infeasible { expanded: usize },
    #[error("search budget exhausted after {expanded} expansions{}", if .incumbent.is_some() { " (incumbent available)" } else { "" })]
    Timeout { expanded: usize, incumbent: Option<Box<PlanResult>> },
    #[error("internal: produced plan fails verification")]
    Unverified,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct Key {
    world: JointState,
    mon: MonitorState,
}

struct Node {
    parent: usize,
    joint: Vec<Action>,
}

/// Shared per-search context: the monitor, candidate manipulation calls and
/// helpers for robot action generation.
pub(crate) struct Ctx<'a> {
    pub sc: &'a Scenario,
    pub monitor: Monitor,
    pub calls: Vec<ApiCall>,
}

impl<'a> Ctx<'a> {
    pub fn new(sc: &'a Scenario, spec: &HierSpec, mode: SiblingMode) -> Result<Self, PlanError> {
        sc.validate()?;
        let grounded = ground_spec(sc, spec)?;
        let monitor = Monitor::new(spec, mode)?;
        // Spec actions plus every pickup and put-down, which change the
        // world even when the specification never mentions them.
        let mut calls: BTreeSet<ApiCall> = grounded.calls.values().cloned().collect();
        for o in &sc.objects {
            if sc.skills.contains("Pickup") {
                calls.insert(ApiCall::new("Pickup", [o.id.as_str()]));
            }
            if sc.skills.contains("Place") {
                for l in &sc.locations {
                    calls.insert(ApiCall::new("Place", [o.id.as_str(), l.id.as_str()]));
                }
            }
        }
        Ok(Ctx { sc, monitor, calls: calls.into_iter().collect() })
    }

    /// Actions robot `r` could take in `s`, before joint conflict checks.
    pub fn robot_actions(&self, s: &JointState, r: usize) -> Vec<Action> {
        let me = s.robots[r];
        let mut out = vec![Action::Wait];
        for d in Dir::ALL {
            if self.sc.is_free(me.cell.offset(d)) {
                out.push(Action::Step(d));
            }
        }
        for c in &self.calls {
            let obj = self.sc.object_index(&c.args[0]);
            let ok = match c.verb.as_str() {
                "Pickup" => me.holding.is_none() && obj.is_some_and(|o| s.objects[o] == ObjPos::At(me.cell)),
                "Move" | "Place" => {
                    obj.is_some_and(|o| me.holding == Some(o as u16))
                        && self.sc.location(&c.args[1]).is_some_and(|l| l.cells.contains(&me.cell))
                }
                _ => match obj {
                    Some(o) => s.objects[o] == ObjPos::At(me.cell) || me.holding == Some(o as u16),
                    None => self.sc.location(&c.args[0]).is_some_and(|l| l.cells.contains(&me.cell)),
                },
            };
            if ok {
                out.push(Action::Api(c.clone()));
            }
        }
        out
    }

    /// Executable joint actions where only robots in `movers` may act.
    pub fn joint_actions(&self, s: &JointState, movers: &[bool]) -> Vec<(Vec<Action>, JointState, u64)> {
        let per: Vec<Vec<Action>> = (0..s.robots.len())
            .map(|r| if movers[r] { self.robot_actions(s, r) } else { vec![Action::Wait] })
            .collect();
        let mut out = Vec::new();
        let mut idx = vec![0usize; per.len()];
        loop {
            let joint: Vec<Action> = idx.iter().zip(&per).map(|(&i, p)| p[i].clone()).collect();
            if let Ok((mut next, props)) = step(self.sc, s, &joint) {
                next.step = 0;
                out.push((joint, next, self.monitor.symbol_of(&props)));
            }
            let mut k = 0;
            while k < idx.len() {
                idx[k] += 1;
                if idx[k] < per[k].len() {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
            if k == idx.len() {
                return out;
            }
        }
    }

    pub fn finish(&self, spec: &HierSpec, objective: Objective, steps: Vec<Vec<Action>>, stats: SearchStats, mode: SiblingMode) -> Result<PlanResult, PlanError> {
        let plan = PlanTrace::from_steps(self.sc, steps)?;
        if !check_success(self.sc, &plan, spec, mode, CheckMethod::Monitor)? {
            return Err(PlanError::Unverified);
        }
        let m = metrics(&plan, self.sc);
        let mut allocation: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for i in 0..self.monitor.num_nodes() {
            if self.monitor.is_leaf(i) {
                allocation.insert(self.monitor.node_name(i).to_string(), BTreeSet::new());
            }
        }
        for ta in plan.timed() {
            let Some(p) = ta.action.prop() else { continue };
            let Some(bit) = self.monitor.atom_bit(&p) else { continue };
            for i in 0..self.monitor.num_nodes() {
                if self.monitor.is_leaf(i) && self.monitor.leaf_atoms(i) >> bit & 1 == 1 {
                    allocation.get_mut(self.monitor.node_name(i)).unwrap().insert(ta.robot.clone());
                }
            }
        }
        Ok(PlanResult {
            objective,
            plan,
            travel_cost_m: m.travel_cost_m,
            completion_time: m.completion_time,
            moves: m.moves,
            allocation,
            stats,
        })
    }
}

fn state_hash(k: &Key) -> u64 {
    let mut h = DefaultHasher::new();
    k.hash(&mut h);
    h.finish()
}

/// Optimal plan for `objective`. Travel cost uses uniform-cost search with
/// steps as a tie-breaker; makespan uses A* with the monitor's remaining-step
/// bound. Ties break on f, then g, then a fixed state hash, then insertion
/// order, so identical inputs give identical plans.
pub fn plan(sc: &Scenario, spec: &HierSpec, opts: &PlanOptions) -> Result<PlanResult, PlanError> {
    let started = Instant::now();
    let ctx = Ctx::new(sc, spec, opts.mode)?;
    let movers = vec![true; sc.robots.len()];
    let mut start = sc.initial_state();
    start.step = 0;
    let mon0 = ctx.monitor.initial();
    let mut stats = SearchStats::default();
    if ctx.monitor.is_dead(&mon0) {
        return Err(PlanError::Infeasible { expanded: 0 });
    }
    let h = |m: &MonitorState| match opts.objective {
        Objective::TravelCost => Some(0),
        Objective::Makespan => ctx.monitor.remaining(m),
    };

    let mut nodes: Vec<Node> = vec![Node { parent: usize::MAX, joint: Vec::new() }];
    let mut keys: Vec<Key> = vec![Key { world: start, mon: mon0 }];
    // (primary, secondary) cost; makespan has no secondary.
    let mut best: HashMap<Key, (u32, u32)> = HashMap::new();
    best.insert(keys[0].clone(), (0, 0));
    // (f, g, g2, hash, id)
    let mut open = BinaryHeap::new();
    let f0 = h(&keys[0].mon).unwrap_or(0);
    open.push(Reverse((f0, 0u32, 0u32, state_hash(&keys[0]), 0usize)));

    while let Some(Reverse((f, g, g2, _, id))) = open.pop() {
        let key = keys[id].clone();
        if best.get(&key).is_some_and(|&b| b < (g, g2)) {
            continue;
        }
        stats.max_f_popped = stats.max_f_popped.max(f);
        if ctx.monitor.accepted(&key.mon) {
            let mut steps = Vec::new();
            let mut cur = id;
            while cur != 0 {
                steps.push(nodes[cur].joint.clone());
                cur = nodes[cur].parent;
            }
            steps.reverse();
            stats.runtime_ms = started.elapsed().as_millis() as u64;
            return ctx.finish(spec, opts.objective, steps, stats, opts.mode);
        }
        stats.expanded += 1;
        if stats.expanded % 256 == 0 && started.elapsed() > opts.budget.timeout || stats.expanded > opts.budget.node_cap {
            let incumbent = greedy_plan(sc, spec, &PlanOptions { budget: Budget::default(), ..*opts }).ok().map(Box::new);
            return Err(PlanError::Timeout { expanded: stats.expanded, incumbent });
        }
        for (joint, world, sym) in ctx.joint_actions(&key.world, &movers) {
            let moves = joint.iter().filter(|a| a.is_move()).count() as u32;
            let (ng, ng2) = match opts.objective {
                Objective::TravelCost => (g + moves, g2 + 1),
                Objective::Makespan => (g + 1, 0),
            };
            for mon in ctx.monitor.step(&key.mon, sym) {
                let Some(hv) = h(&mon) else { continue };
                if !ctx.monitor.accepted(&mon) && ctx.monitor.is_dead(&mon) {
                    continue;
                }
                let k = Key { world: world.clone(), mon };
                match best.entry(k.clone()) {
                    Entry::Occupied(mut e) => {
                        if *e.get() <= (ng, ng2) {
                            continue;
                        }
                        e.insert((ng, ng2));
                    }
                    Entry::Vacant(e) => {
                        e.insert((ng, ng2));
                    }
                }
                stats.generated += 1;
                let hash = state_hash(&k);
                nodes.push(Node { parent: id, joint: joint.clone() });
                keys.push(k);
                open.push(Reverse((ng + hv, ng, ng2, hash, nodes.len() - 1)));
            }
        }
    }
    Err(PlanError::Infeasible { expanded: stats.expanded })
}
