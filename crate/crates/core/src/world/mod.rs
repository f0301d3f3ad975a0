//! Grid worlds: robots, objects and named regions, synchronous execution of
//! joint actions, plan replay and metrics.

mod ground;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::hier::{satisfies, HierError, HierSpec, Monitor, SiblingMode, DEFAULT_ORACLE_CAP};
use crate::htt::{ApiCall, SkillRegistry};
use crate::ltl::{Trace, Valuation};

pub use ground::{ground_prop, ground_spec, Grounded};

pub const FORMAT_VERSION: u32 = 1;
pub const DEFAULT_CELL_SIZE: f64 = 0.25;
pub const MAX_GRID_SIDE: i32 = 30;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WorldError {
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("robot {robot} cannot {action}: {reason}")]
    Precondition { robot: String, action: String, reason: String },
    #[error("robots {a} and {b} both end in cell {cell}")]
    VertexConflict { a: String, b: String, cell: Cell },
    #[error("robots {a} and {b} swap cells")]
    EdgeConflict { a: String, b: String },
    #[error("robots {a} and {b} both handle {object}")]
    Contested { a: String, b: String, object: String },
    #[error("expected {expected} actions per step, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("proposition `{prop}` is not grounded: {reason}")]
    Ungrounded { prop: String, reason: String },
    #[error("recorded trace differs from replay at step {step}")]
    TraceMismatch { step: usize },
    #[error(transparent)]
    Spec(#[from] HierError),
    #[error("malformed file: {0}")]
    Format(String),
}

/// Grid cell `(x, y)`; serialized as `[x, y]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[i32; 2]", into = "[i32; 2]")]
pub struct Cell {
    pub x: i32,
    pub y: i32,
}

impl Cell {
    pub const fn new(x: i32, y: i32) -> Self {
        Cell { x, y }
    }

    pub fn offset(self, d: Dir) -> Cell {
        let (dx, dy) = d.delta();
        Cell::new(self.x + dx, self.y + dy)
    }

    pub fn manhattan(self, o: Cell) -> u32 {
        self.x.abs_diff(o.x) + self.y.abs_diff(o.y)
    }
}

impl From<[i32; 2]> for Cell {
    fn from(a: [i32; 2]) -> Self {
        Cell::new(a[0], a[1])
    }
}

impl From<Cell> for [i32; 2] {
    fn from(c: Cell) -> Self {
        [c.x, c.y]
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Compass step; north is `y - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Dir {
    N,
    E,
    S,
    W,
}

impl Dir {
    pub const ALL: [Dir; 4] = [Dir::N, Dir::E, Dir::S, Dir::W];

    pub fn delta(self) -> (i32, i32) {
        match self {
            Dir::N => (0, -1),
            Dir::E => (1, 0),
            Dir::S => (0, 1),
            Dir::W => (-1, 0),
        }
    }
}

/// One robot's action for one step. Text form: `N`, `E`, `S`, `W`, `Wait`,
/// or an API call such as `Pickup(apple)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Action {
    Step(Dir),
    Wait,
    Api(ApiCall),
}

impl Action {
    pub fn is_wait(&self) -> bool {
        matches!(self, Action::Wait)
    }

    pub fn is_move(&self) -> bool {
        matches!(self, Action::Step(_))
    }

    /// Proposition made true at the step this action completes.
    pub fn prop(&self) -> Option<String> {
        match self {
            Action::Api(c) => Some(c.prop()),
            _ => None,
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Step(d) => write!(f, "{d:?}"),
            Action::Wait => f.write_str("Wait"),
            Action::Api(c) => write!(f, "{c}"),
        }
    }
}

impl FromStr for Action {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s.trim() {
            "N" => Action::Step(Dir::N),
            "E" => Action::Step(Dir::E),
            "S" => Action::Step(Dir::S),
            "W" => Action::Step(Dir::W),
            "Wait" => Action::Wait,
            other => Action::Api(ApiCall::parse(other).ok_or_else(|| format!("unknown action `{other}`"))?),
        })
    }
}

impl Serialize for Action {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Action {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entity {
    pub id: String,
    pub cell: Cell,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Location {
    pub id: String,
    pub cells: Vec<Cell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    #[serde(default = "format_version")]
    pub format_version: u32,
    pub width: i32,
    pub height: i32,
    #[serde(default = "cell_size")]
    pub cell_size: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub blocked: Vec<Cell>,
    pub robots: Vec<Entity>,
    pub objects: Vec<Entity>,
    pub locations: Vec<Location>,
    #[serde(default)]
    pub skills: SkillRegistry,
}

fn format_version() -> u32 {
    FORMAT_VERSION
}

fn cell_size() -> f64 {
    DEFAULT_CELL_SIZE
}

impl Scenario {
    pub fn new(width: i32, height: i32) -> Self {
        Scenario {
            format_version: FORMAT_VERSION,
            width,
            height,
            cell_size: DEFAULT_CELL_SIZE,
            blocked: Vec::new(),
            robots: Vec::new(),
            objects: Vec::new(),
            locations: Vec::new(),
            skills: SkillRegistry::default(),
        }
    }

    pub fn with_robot(mut self, id: &str, cell: (i32, i32)) -> Self {
        self.robots.push(Entity { id: id.into(), cell: Cell::new(cell.0, cell.1) });
        self
    }

    pub fn with_object(mut self, id: &str, cell: (i32, i32)) -> Self {
        self.objects.push(Entity { id: id.into(), cell: Cell::new(cell.0, cell.1) });
        self
    }

    pub fn with_location(mut self, id: &str, cells: &[(i32, i32)]) -> Self {
        self.locations.push(Location { id: id.into(), cells: cells.iter().map(|&(x, y)| Cell::new(x, y)).collect() });
        self
    }

    pub fn from_json_str(s: &str) -> Result<Self, WorldError> {
        let sc: Scenario = serde_json::from_str(s).map_err(|e| WorldError::Format(e.to_string()))?;
        if sc.format_version != FORMAT_VERSION {
            return Err(WorldError::Format(format!("unsupported format_version {}", sc.format_version)));
        }
        sc.validate()?;
        Ok(sc)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn in_bounds(&self, c: Cell) -> bool {
        c.x >= 0 && c.y >= 0 && c.x < self.width && c.y < self.height
    }

    pub fn is_free(&self, c: Cell) -> bool {
        self.in_bounds(c) && !self.blocked.contains(&c)
    }

    pub fn free_cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for y in 0..self.height {
            for x in 0..self.width {
                let c = Cell::new(x, y);
                if !self.blocked.contains(&c) {
                    out.push(c);
                }
            }
        }
        out
    }

    pub fn object_index(&self, id: &str) -> Option<usize> {
        self.objects.iter().position(|o| o.id == id)
    }

    pub fn location(&self, id: &str) -> Option<&Location> {
        self.locations.iter().find(|l| l.id == id)
    }

    pub fn validate(&self) -> Result<(), WorldError> {
        let bad = |m: String| Err(WorldError::Invalid(m));
        if self.width < 1 || self.height < 1 || self.width > MAX_GRID_SIDE || self.height > MAX_GRID_SIDE {
            return bad(format!("grid {}x{} outside 1..={MAX_GRID_SIDE}", self.width, self.height));
        }
        if !(self.cell_size > 0.0 && self.cell_size.is_finite()) {
            return bad(format!("cell_size {} must be positive", self.cell_size));
        }
        if self.robots.is_empty() {
            return bad("no robots".into());
        }
        let mut ids = BTreeSet::new();
        for e in self.robots.iter().chain(&self.objects) {
            if !ids.insert(e.id.as_str()) {
                return bad(format!("duplicate id `{}`", e.id));
            }
            if !self.is_free(e.cell) {
                return bad(format!("`{}` at {} is blocked or out of bounds", e.id, e.cell));
            }
        }
        for l in &self.locations {
            if !ids.insert(l.id.as_str()) {
                return bad(format!("duplicate id `{}`", l.id));
            }
            if l.cells.is_empty() {
                return bad(format!("location `{}` has no cells", l.id));
            }
            if let Some(c) = l.cells.iter().find(|c| !self.is_free(**c)) {
                return bad(format!("location `{}` cell {c} is blocked or out of bounds", l.id));
            }
        }
        let starts: BTreeSet<Cell> = self.robots.iter().map(|r| r.cell).collect();
        if starts.len() != self.robots.len() {
            return bad("two robots share a start cell".into());
        }
        Ok(())
    }

    pub fn initial_state(&self) -> JointState {
        JointState {
            step: 0,
            robots: self.robots.iter().map(|r| RobotState { cell: r.cell, holding: None }).collect(),
            objects: self.objects.iter().map(|o| ObjPos::At(o.cell)).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RobotState {
    pub cell: Cell,
    /// Index into the scenario's objects.
    pub holding: Option<u16>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjPos {
    At(Cell),
    /// Carried by the robot with this index.
    Held(u16),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct JointState {
    pub step: u32,
    pub robots: Vec<RobotState>,
    pub objects: Vec<ObjPos>,
}

/// Applies one synchronous joint action. Returns the next state and the
/// propositions completed during the step.
pub fn step(sc: &Scenario, s: &JointState, actions: &[Action]) -> Result<(JointState, Valuation), WorldError> {
    if actions.len() != s.robots.len() {
        return Err(WorldError::Arity { expected: s.robots.len(), got: actions.len() });
    }
    let rid = |i: usize| sc.robots[i].id.clone();
    let fail = |i: usize, a: &Action, reason: String| WorldError::Precondition { robot: rid(i), action: a.to_string(), reason };
    let mut next = s.clone();
    next.step += 1;
    let mut props = Valuation::new();
    let mut handled: BTreeMap<usize, usize> = BTreeMap::new();
    for (i, a) in actions.iter().enumerate() {
        let me = s.robots[i];
        match a {
            Action::Wait => {}
            Action::Step(d) => {
                let to = me.cell.offset(*d);
                if !sc.is_free(to) {
                    return Err(fail(i, a, format!("{to} is blocked or out of bounds")));
                }
                next.robots[i].cell = to;
            }
            Action::Api(call) => {
                if !sc.skills.contains(&call.verb) {
                    return Err(fail(i, a, "verb not in the skill registry".into()));
                }
                let first = call.args.first().ok_or_else(|| fail(i, a, "no arguments".into()))?;
                let obj = sc.object_index(first);
                if let Some(o) = obj {
                    if let Some(j) = handled.insert(o, i) {
                        return Err(WorldError::Contested { a: rid(j), b: rid(i), object: first.clone() });
                    }
                }
                let in_region = |loc: &str| sc.location(loc).map(|l| l.cells.contains(&me.cell));
                match call.verb.as_str() {
                    "Pickup" => {
                        let o = obj.ok_or_else(|| fail(i, a, format!("`{first}` is not an object")))?;
                        if me.holding.is_some() {
                            return Err(fail(i, a, "hand is not empty".into()));
                        }
                        if s.objects[o] != ObjPos::At(me.cell) {
                            return Err(fail(i, a, format!("`{first}` is not at {}", me.cell)));
                        }
                        next.robots[i].holding = Some(o as u16);
                        next.objects[o] = ObjPos::Held(i as u16);
                    }
                    "Place" | "Move" => {
                        let o = obj.ok_or_else(|| fail(i, a, format!("`{first}` is not an object")))?;
                        let loc = call.args.get(1).ok_or_else(|| fail(i, a, "missing location".into()))?;
                        if me.holding != Some(o as u16) {
                            return Err(fail(i, a, format!("not holding `{first}`")));
                        }
                        match in_region(loc) {
                            None => return Err(fail(i, a, format!("`{loc}` is not a location"))),
                            Some(false) => return Err(fail(i, a, format!("{} is outside `{loc}`", me.cell))),
                            Some(true) => {}
                        }
                        next.robots[i].holding = None;
                        next.objects[o] = ObjPos::At(me.cell);
                    }
                    _ => {
                        for arg in &call.args {
                            let near = match sc.object_index(arg) {
                                Some(o) => s.objects[o] == ObjPos::At(me.cell) || me.holding == Some(o as u16),
                                None => in_region(arg).ok_or_else(|| fail(i, a, format!("unknown entity `{arg}`")))?,
                            };
                            if !near && arg == first {
                                return Err(fail(i, a, format!("not at `{arg}`")));
                            }
                        }
                    }
                }
                props.insert(call.prop());
            }
        }
    }
    for i in 0..actions.len() {
        for j in i + 1..actions.len() {
            let (a, b) = (&next.robots[i], &next.robots[j]);
            if a.cell == b.cell {
                return Err(WorldError::VertexConflict { a: rid(i), b: rid(j), cell: a.cell });
            }
            if a.cell == s.robots[j].cell && b.cell == s.robots[i].cell {
                return Err(WorldError::EdgeConflict { a: rid(i), b: rid(j) });
            }
        }
    }
    Ok((next, props))
}

/// Joint actions per step, with the proposition trace they induce.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanTrace {
    #[serde(default = "format_version")]
    pub format_version: u32,
    pub robots: Vec<String>,
    /// `steps[t][r]`: action of robot `r` during step `t + 1`.
    pub steps: Vec<Vec<Action>>,
    pub trace: Trace,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimedAction {
    pub step: usize,
    pub robot: String,
    pub action: Action,
}

impl PlanTrace {
    /// Replays `steps` from the scenario's initial state to fill in the trace.
    pub fn from_steps(sc: &Scenario, steps: Vec<Vec<Action>>) -> Result<PlanTrace, WorldError> {
        let mut p = PlanTrace {
            format_version: FORMAT_VERSION,
            robots: sc.robots.iter().map(|r| r.id.clone()).collect(),
            steps,
            trace: Trace::default(),
        };
        p.trace = simulate(sc, &p)?.1;
        Ok(p)
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Non-wait actions with 1-based step numbers.
    pub fn timed(&self) -> Vec<TimedAction> {
        let mut out = Vec::new();
        for (t, joint) in self.steps.iter().enumerate() {
            for (r, a) in joint.iter().enumerate() {
                if !a.is_wait() {
                    out.push(TimedAction { step: t + 1, robot: self.robots[r].clone(), action: a.clone() });
                }
            }
        }
        out
    }

    pub fn from_json_str(s: &str) -> Result<Self, WorldError> {
        serde_json::from_str(s).map_err(|e| WorldError::Format(e.to_string()))
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan serializes")
    }

    /// Plans run back to back; the second starts where the first ends.
    pub fn concat(&self, other: &PlanTrace) -> PlanTrace {
        let mut p = self.clone();
        p.steps.extend(other.steps.iter().cloned());
        p.trace.steps.extend(other.trace.steps.iter().cloned());
        p
    }
}

/// Replays a plan; returns the final state and the trace it produces.
pub fn simulate(sc: &Scenario, p: &PlanTrace) -> Result<(JointState, Trace), WorldError> {
    simulate_from(sc, &sc.initial_state(), p)
}

pub fn simulate_from(sc: &Scenario, start: &JointState, p: &PlanTrace) -> Result<(JointState, Trace), WorldError> {
    let ids: Vec<&str> = sc.robots.iter().map(|r| r.id.as_str()).collect();
    if p.robots.iter().map(String::as_str).ne(ids.iter().copied()) {
        return Err(WorldError::Format(format!("plan robots {:?} do not match scenario robots {ids:?}", p.robots)));
    }
    let mut s = start.clone();
    let mut trace = Vec::with_capacity(p.steps.len());
    for joint in &p.steps {
        let (n, props) = step(sc, &s, joint)?;
        s = n;
        trace.push(props);
    }
    Ok((s, Trace::new(trace)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub travel_cost_m: f64,
    pub completion_time: u32,
    pub moves: u32,
}

/// Travel cost counts move steps only; completion time is the last step
/// with a non-wait action.
pub fn metrics(p: &PlanTrace, sc: &Scenario) -> Metrics {
    let moves = p.steps.iter().flatten().filter(|a| a.is_move()).count() as u32;
    let completion_time = p
        .steps
        .iter()
        .rposition(|joint| joint.iter().any(|a| !a.is_wait()))
        .map_or(0, |t| t as u32 + 1);
    Metrics { travel_cost_m: moves as f64 * sc.cell_size, completion_time, moves }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckMethod {
    /// Oracle when the trace fits under its cap, monitor otherwise.
    #[default]
    Auto,
    Oracle,
    Monitor,
}

impl FromStr for CheckMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "auto" => Ok(CheckMethod::Auto),
            "oracle" => Ok(CheckMethod::Oracle),
            "monitor" => Ok(CheckMethod::Monitor),
            other => Err(format!("unknown check method {other:?} (expected auto|oracle|monitor)")),
        }
    }
}

/// Replays the plan (which must reproduce its recorded trace) and checks the
/// trace against the specification.
pub fn check_success(
    sc: &Scenario,
    p: &PlanTrace,
    spec: &HierSpec,
    mode: SiblingMode,
    method: CheckMethod,
) -> Result<bool, WorldError> {
    let (_, trace) = simulate(sc, p)?;
    if let Some(step) = (0..trace.len().max(p.trace.len())).find(|&i| trace.steps.get(i) != p.trace.steps.get(i)) {
        return Err(WorldError::TraceMismatch { step });
    }
    let use_oracle = match method {
        CheckMethod::Oracle => true,
        CheckMethod::Monitor => false,
        CheckMethod::Auto => trace.len() <= DEFAULT_ORACLE_CAP,
    };
    if use_oracle {
        Ok(satisfies(spec, &trace, mode, DEFAULT_ORACLE_CAP)?.is_some())
    } else {
        Ok(Monitor::new(spec, mode)?.accepts(&trace))
    }
}
