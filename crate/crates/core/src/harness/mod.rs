//! Derivative-task generation, seeded scenario placement and batch
//! evaluation with per-category metric tables.

mod library;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::htt::{SkillRegistry, TaskNode, TaskTree};
use crate::nl::{run_pipeline, PipelineOptions, TreeProvider};
use crate::planner::{plan, PlanError, PlanOptions};
use crate::world::{check_success, CheckMethod, Scenario};

pub use library::{base_library, desk_suite, dishwasher_scenario, dishwasher_tree, DeskCase};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HarnessError {
    #[error("need {need} object-disjoint base tasks, the library has at most {have}")]
    InsufficientBases { need: usize, have: usize },
    #[error("base task `{0}` must be a root with leaf children")]
    BadBase(String),
    #[error("scenario needs {need} cells but the grid has {have} free")]
    Crowded { need: usize, have: usize },
    #[error(transparent)]
    World(#[from] crate::world::WorldError),
}

fn rename(id: &str, slot: usize) -> String {
    // task_1[_rest] -> task_1_<slot>[_rest]
    format!("task_1_{slot}{}", &id["task_1".len()..])
}

/// Puts `bases` under a fresh root as children `task_1_1..`, with `relations`
/// given as pairs of base indices.
pub fn combine(bases: &[&TaskTree], relations: &[(usize, usize)]) -> TaskTree {
    let mut nodes = BTreeMap::new();
    let mut children = Vec::new();
    let mut objects = Vec::new();
    let mut instr = Vec::new();
    for (i, b) in bases.iter().enumerate() {
        let slot = i + 1;
        for (id, n) in &b.nodes {
            let node = TaskNode {
                instruction: n.instruction.clone(),
                children: n.children.iter().map(|c| rename(c, slot)).collect(),
                relations: n.relations.iter().map(|(a, c)| (rename(a, slot), rename(c, slot))).collect(),
                actions: n.actions.clone(),
            };
            nodes.insert(rename(id, slot), node);
        }
        children.push(rename(&b.root, slot));
        objects.extend(b.objects());
        instr.push(b.nodes[&b.root].instruction.clone());
    }
    let mut root = TaskNode::new(instr.join("; "));
    root.relations = relations.iter().map(|&(a, b)| (children[a].clone(), children[b].clone())).collect();
    root.children = children;
    nodes.insert("task_1".into(), root);
    let mut t = TaskTree::new("task_1", nodes);
    t.objects = objects;
    t
}

fn disjoint(a: &TaskTree, b: &TaskTree) -> bool {
    let sa: BTreeSet<String> = a.objects().into_iter().collect();
    b.objects().iter().all(|o| !sa.contains(o))
}

fn largest_disjoint(bases: &[TaskTree]) -> usize {
    fn go(bases: &[TaskTree], chosen: &mut Vec<usize>, from: usize) -> usize {
        let mut best = chosen.len();
        for i in from..bases.len() {
            if chosen.iter().all(|&c| disjoint(&bases[c], &bases[i])) {
                chosen.push(i);
                best = best.max(go(bases, chosen, i + 1));
                chosen.pop();
            }
        }
        best
    }
    go(bases, &mut Vec::new(), 0)
}

/// `count` derivative trees of `n_base` object-disjoint bases each, under
/// seeded random acyclic relations among the base roots.
pub fn gen_derivative(bases: &[TaskTree], n_base: usize, count: usize, seed: u64) -> Result<Vec<TaskTree>, HarnessError> {
    for b in bases {
        let ok = b.nodes.get(&b.root).is_some_and(|r| !r.children.is_empty()) && b.root == "task_1";
        if !ok {
            return Err(HarnessError::BadBase(b.root.clone()));
        }
    }
    let have = largest_disjoint(bases);
    if n_base == 0 || have < n_base {
        return Err(HarnessError::InsufficientBases { need: n_base, have });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let mut order: Vec<usize> = (0..bases.len()).collect();
        order.shuffle(&mut rng);
        let mut picked: Vec<usize> = Vec::new();
        for i in order {
            if picked.iter().all(|&p| disjoint(&bases[p], &bases[i])) {
                picked.push(i);
                if picked.len() == n_base {
                    break;
                }
            }
        }
        if picked.len() < n_base {
            continue;
        }
        // Relations only point forward in a random ranking, so they stay acyclic.
        let mut rank: Vec<usize> = (0..n_base).collect();
        rank.shuffle(&mut rng);
        let mut rels = Vec::new();
        for i in 0..n_base {
            for j in i + 1..n_base {
                if rng.gen_bool(0.5) {
                    rels.push((rank[i], rank[j]));
                }
            }
        }
        let chosen: Vec<&TaskTree> = picked.iter().map(|&i| &bases[i]).collect();
        out.push(combine(&chosen, &rels));
    }
    Ok(out)
}

/// Splits the entities a tree mentions into objects (picked, moved or
/// placed) and fixed locations.
pub fn entities(tree: &TaskTree) -> (Vec<String>, Vec<String>) {
    let mut objects = BTreeSet::new();
    let mut all = BTreeSet::new();
    for id in tree.leaves() {
        for a in &tree.nodes[&id].actions {
            all.extend(a.args.iter().cloned());
            if matches!(a.verb.as_str(), "Pickup" | "Move" | "Place") {
                objects.insert(a.args[0].clone());
            }
        }
    }
    let locations = all.difference(&objects).cloned().collect();
    (objects.into_iter().collect(), locations)
}

/// Seeded placement of a tree's objects and locations, then `robots` robots,
/// each uniformly over distinct free cells. Entity placement depends only on
/// the seed, so scenarios differing in robot count share their layout.
pub fn scenario_for(tree: &TaskTree, robots: usize, width: i32, height: i32, seed: u64) -> Result<Scenario, HarnessError> {
    let (objects, locations) = entities(tree);
    let mut sc = Scenario::new(width, height);
    let mut cells = sc.free_cells();
    let need = objects.len() + locations.len();
    if cells.len() < need + robots {
        return Err(HarnessError::Crowded { need: need + robots, have: cells.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    cells.shuffle(&mut rng);
    let (ent, rest) = cells.split_at(need);
    for (o, c) in objects.iter().zip(ent) {
        sc = sc.with_object(o, (c.x, c.y));
    }
    for (l, c) in locations.iter().zip(&ent[objects.len()..]) {
        sc = sc.with_location(l, &[(c.x, c.y)]);
    }
    let mut rest = rest.to_vec();
    let mut rrng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0000_0000_0000);
    rest.shuffle(&mut rrng);
    for (i, c) in rest.iter().take(robots).enumerate() {
        sc = sc.with_robot(&format!("r{}", i + 1), (c.x, c.y));
    }
    sc.validate()?;
    Ok(sc)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub robots: Vec<usize>,
    pub width: i32,
    pub height: i32,
    pub plan: PlanOptions,
    pub seed: u64,
    /// Worker threads; 0 picks the machine's parallelism.
    pub threads: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig { robots: vec![1, 2, 4], width: 8, height: 8, plan: PlanOptions::default(), seed: 0, threads: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseLog {
    pub case: String,
    pub n_base: usize,
    pub robots: usize,
    pub converted: bool,
    pub planned: bool,
    pub success: bool,
    pub travel_cost_m: Option<f64>,
    pub completion_time: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub n_base: usize,
    pub robots: usize,
    pub cases: usize,
    pub conversion_rate: f64,
    pub planning_rate: f64,
    pub success_rate: f64,
    pub travel_cost_mean: Option<f64>,
    pub travel_cost_std: Option<f64>,
    pub completion_time_mean: Option<f64>,
    pub completion_time_std: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub format_version: u32,
    pub rows: Vec<EvalRow>,
    pub cases: Vec<CaseLog>,
}

/// Mean and population standard deviation.
pub fn mean_std(xs: &[f64]) -> Option<(f64, f64)> {
    if xs.is_empty() {
        return None;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    Some((mean, var.sqrt()))
}

impl EvalReport {
    /// Aggregates case logs into rows. Cost and time statistics use only
    /// successful cases.
    pub fn from_cases(mut cases: Vec<CaseLog>) -> EvalReport {
        cases.sort_by(|a, b| (a.n_base, a.robots, &a.case).cmp(&(b.n_base, b.robots, &b.case)));
        let mut groups: BTreeMap<(usize, usize), Vec<&CaseLog>> = BTreeMap::new();
        for c in &cases {
            groups.entry((c.n_base, c.robots)).or_default().push(c);
        }
        let rows = groups
            .into_iter()
            .map(|((n_base, robots), cs)| {
                let n = cs.len() as f64;
                let rate = |f: fn(&CaseLog) -> bool| 100.0 * cs.iter().filter(|c| f(c)).count() as f64 / n;
                let ok: Vec<&&CaseLog> = cs.iter().filter(|c| c.success).collect();
                let cost = mean_std(&ok.iter().filter_map(|c| c.travel_cost_m).collect::<Vec<_>>());
                let time = mean_std(&ok.iter().filter_map(|c| c.completion_time.map(f64::from)).collect::<Vec<_>>());
                EvalRow {
                    n_base,
                    robots,
                    cases: cs.len(),
                    conversion_rate: rate(|c| c.converted),
                    planning_rate: rate(|c| c.planned),
                    success_rate: rate(|c| c.success),
                    travel_cost_mean: cost.map(|m| m.0),
                    travel_cost_std: cost.map(|m| m.1),
                    completion_time_mean: time.map(|m| m.0),
                    completion_time_std: time.map(|m| m.1),
                }
            })
            .collect();
        EvalReport { format_version: FORMAT_VERSION, rows, cases }
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_table(&self) -> String {
        let pm = |m: Option<f64>, s: Option<f64>| match (m, s) {
            (Some(m), Some(s)) => format!("{m:.2} ± {s:.2}"),
            _ => "-".to_string(),
        };
        let header = ["tasks", "robots", "cases", "success %", "conv %", "plan %", "travel cost (m)", "completion time"];
        let body: Vec<[String; 8]> = self
            .rows
            .iter()
            .map(|r| {
                [
                    r.n_base.to_string(),
                    r.robots.to_string(),
                    r.cases.to_string(),
                    format!("{:.1}", r.success_rate),
                    format!("{:.1}", r.conversion_rate),
                    format!("{:.1}", r.planning_rate),
                    pm(r.travel_cost_mean, r.travel_cost_std),
                    pm(r.completion_time_mean, r.completion_time_std),
                ]
            })
            .collect();
        let mut width = header.map(|h| h.chars().count());
        for row in &body {
            for (w, c) in width.iter_mut().zip(row) {
                *w = (*w).max(c.chars().count());
            }
        }
        let mut out = String::new();
        let line = |out: &mut String, cells: &[String]| {
            let parts: Vec<String> = cells.iter().zip(&width).map(|(c, &w)| format!("{c:>w$}")).collect();
            let _ = writeln!(out, "{}", parts.join("  ").trim_end());
        };
        line(&mut out, &header.map(String::from));
        let _ = writeln!(out, "{}", "-".repeat(width.iter().sum::<usize>() + 2 * (width.len() - 1)));
        for row in &body {
            line(&mut out, row);
        }
        out
    }
}

/// Converts a tree through the recorded-provider pipeline, plans it and
/// verifies the plan.
pub fn run_case(id: &str, tree: &TaskTree, sc: &Scenario, opts: &PlanOptions) -> CaseLog {
    let skills = SkillRegistry::default();
    let n_base = tree.children(&tree.root).len();
    let mut log = CaseLog {
        case: id.to_string(),
        n_base,
        robots: sc.robots.len(),
        converted: false,
        planned: false,
        success: false,
        travel_cost_m: None,
        completion_time: None,
        error: None,
    };
    let provider = TreeProvider::new(tree.clone(), skills.clone());
    let instruction = &tree.nodes[&tree.root].instruction;
    let spec = match run_pipeline(instruction, &provider, &PipelineOptions { skills, ..Default::default() }) {
        Ok(out) => out.spec,
        Err(e) => {
            log.error = Some(e.to_string());
            return log;
        }
    };
    log.converted = true;
    let result = match plan(sc, &spec, opts) {
        Ok(r) => r,
        Err(e) => {
            log.error = Some(match &e {
                PlanError::Timeout { .. } => format!("planning: {e}"),
                _ => e.to_string(),
            });
            return log;
        }
    };
    match check_success(sc, &result.plan, &spec, opts.mode, CheckMethod::Auto) {
        Ok(true) => {
            log.planned = true;
            log.success = true;
            log.travel_cost_m = Some(result.travel_cost_m);
            log.completion_time = Some(result.completion_time);
        }
        Ok(false) => log.error = Some("plan does not satisfy the specification".into()),
        Err(e) => log.error = Some(e.to_string()),
    }
    log
}

/// Runs every case at every robot count. Object and location placement is
/// shared across robot counts; robots start uniformly at random.
pub fn evaluate(cases: &[(String, TaskTree)], cfg: &EvalConfig) -> EvalReport {
    let jobs: Vec<(usize, usize)> = (0..cases.len()).flat_map(|i| cfg.robots.iter().map(move |&r| (i, r))).collect();
    let threads = match cfg.threads {
        0 => std::thread::available_parallelism().map_or(1, |n| n.get()),
        n => n,
    }
    .min(jobs.len().max(1));
    let run = |&(i, r): &(usize, usize)| {
        let (id, tree) = &cases[i];
        let seed = cfg.seed.wrapping_mul(1_000_003).wrapping_add(i as u64);
        match scenario_for(tree, r, cfg.width, cfg.height, seed) {
            Ok(sc) => run_case(id, tree, &sc, &cfg.plan),
            Err(e) => CaseLog {
                case: id.clone(),
                n_base: tree.children(&tree.root).len(),
                robots: r,
                converted: false,
                planned: false,
                success: false,
                travel_cost_m: None,
                completion_time: None,
                error: Some(e.to_string()),
            },
        }
    };
    let logs: Vec<CaseLog> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..threads)
            .map(|t| {
                let jobs = &jobs;
                let run = &run;
                s.spawn(move || jobs.iter().skip(t).step_by(threads).map(run).collect::<Vec<_>>())
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("worker panicked")).collect()
    });
    EvalReport::from_cases(logs)
}
