use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{gen_derivative, scenario_for};
use crate::htt::{ApiCall, TaskNode, TaskTree};
use crate::world::Scenario;

fn leaf(instruction: &str, calls: &[ApiCall]) -> TaskNode {
    TaskNode { actions: calls.to_vec(), ..TaskNode::new(instruction) }
}

fn carry(obj: &str, to: &str) -> Vec<ApiCall> {
    vec![ApiCall::new("Pickup", [obj]), ApiCall::new("Move", [obj, to])]
}

fn base(instruction: &str, leaves: Vec<(&str, Vec<ApiCall>)>, relations: &[(usize, usize)], objects: &[&str]) -> TaskTree {
    let mut nodes = BTreeMap::new();
    let ids: Vec<String> = (1..=leaves.len()).map(|i| format!("task_1_{i}")).collect();
    for (id, (text, calls)) in ids.iter().zip(&leaves) {
        nodes.insert(id.clone(), leaf(text, calls));
    }
    let root = TaskNode {
        instruction: instruction.into(),
        children: ids.clone(),
        relations: relations.iter().map(|&(a, b)| (ids[a].clone(), ids[b].clone())).collect(),
        actions: vec![],
    };
    nodes.insert("task_1".into(), root);
    let mut t = TaskTree::new("task_1", nodes);
    t.objects = objects.iter().map(|s| s.to_string()).collect();
    t
}

/// Desk-scale base tasks, two levels each, with declared object sets.
pub fn base_library() -> Vec<TaskTree> {
    vec![
        base("Put the apple on the blue plate", vec![("Put the apple on the blue plate", carry("apple", "blue_plate"))], &[], &["apple"]),
        base(
            "Put the pen and the pencil in the cup holder",
            vec![("Put the pen in the cup holder", carry("pen", "cup_holder")), ("Put the pencil in the cup holder", carry("pencil", "cup_holder"))],
            &[],
            &["pen", "pencil"],
        ),
        base(
            "Shelve the book, then the notebook",
            vec![("Put the book on the shelf", carry("book", "shelf")), ("Put the notebook on the shelf", carry("notebook", "shelf"))],
            &[(0, 1)],
            &["book", "notebook"],
        ),
        base("Throw the paper in the bin", vec![("Throw the paper in the bin", carry("paper", "bin"))], &[], &["paper"]),
        base("Put the mug on the coaster", vec![("Put the mug on the coaster", carry("mug", "coaster"))], &[], &["mug"]),
        base(
            "Open the drawer and put the stapler inside",
            vec![
                ("Open the drawer", vec![ApiCall::new("Open", ["drawer"])]),
                ("Put the stapler in the drawer", carry("stapler", "drawer")),
            ],
            &[(0, 1)],
            &["stapler"],
        ),
        base("Turn on the lamp", vec![("Turn on the lamp", vec![ApiCall::new("ToggleOn", ["lamp"])])], &[], &[]),
        base("Put the phone on the charger", vec![("Put the phone on the charger", carry("phone", "charger"))], &[], &["phone"]),
        base("Put the glue in the box", vec![("Put the glue in the box", carry("glue", "box"))], &[], &["glue"]),
        base("Put the keys in the tray", vec![("Put the keys in the tray", carry("keys", "tray"))], &[], &["keys"]),
    ]
}

fn dish(instruction: &str, obj: &str, rack: &str) -> TaskNode {
    leaf(instruction, &carry(obj, rack))
}

/// Three-level dishwasher task: lower rack (plates, mugs, utensils in any
/// order) before upper rack (saucers before cups).
pub fn dishwasher_tree() -> TaskTree {
    let mut nodes = BTreeMap::new();
    nodes.insert(
        "task_1".into(),
        TaskNode {
            instruction: "Put the dishes in the dishwasher".into(),
            children: vec!["task_1_1".into(), "task_1_2".into()],
            relations: vec![("task_1_1".into(), "task_1_2".into())],
            actions: vec![],
        },
    );
    nodes.insert(
        "task_1_1".into(),
        TaskNode {
            instruction: "Load the lower rack".into(),
            children: vec!["task_1_1_1".into(), "task_1_1_2".into(), "task_1_1_3".into()],
            ..Default::default()
        },
    );
    nodes.insert(
        "task_1_2".into(),
        TaskNode {
            instruction: "Load the upper rack".into(),
            children: vec!["task_1_2_1".into(), "task_1_2_2".into()],
            relations: vec![("task_1_2_1".into(), "task_1_2_2".into())],
            actions: vec![],
        },
    );
    nodes.insert("task_1_1_1".into(), dish("Put plates in the lower rack", "plate", "lower_rack"));
    nodes.insert("task_1_1_2".into(), dish("Put mugs in the lower rack", "mug", "lower_rack"));
    nodes.insert("task_1_1_3".into(), dish("Put utensils in the lower rack", "utensil", "lower_rack"));
    nodes.insert("task_1_2_1".into(), dish("Put saucers in the upper rack", "saucer", "upper_rack"));
    nodes.insert("task_1_2_2".into(), dish("Put cups in the upper rack", "cup", "upper_rack"));
    TaskTree::new("task_1", nodes)
}

/// Small kitchen for the dishwasher task with two robots.
pub fn dishwasher_scenario() -> Scenario {
    Scenario::new(5, 4)
        .with_robot("r1", (0, 0))
        .with_robot("r2", (4, 0))
        .with_object("plate", (1, 1))
        .with_object("mug", (3, 1))
        .with_object("utensil", (2, 0))
        .with_object("saucer", (1, 3))
        .with_object("cup", (3, 3))
        .with_location("lower_rack", &[(2, 2)])
        .with_location("upper_rack", &[(2, 3)])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeskCase {
    pub id: String,
    pub tree: TaskTree,
    pub scenario: Scenario,
}

/// The 20 bundled desk scenarios: ten single-base and ten two-base
/// derivative tasks on 6×6 grids, alternating one and two robots.
pub fn desk_suite() -> Vec<DeskCase> {
    let lib = base_library();
    let mut out = Vec::new();
    for n_base in 1..=2 {
        let trees = gen_derivative(&lib, n_base, 10, 2024 + n_base as u64).expect("library has enough bases");
        for (i, tree) in trees.into_iter().enumerate() {
            let robots = 1 + i % 2;
            let seed = (n_base * 100 + i) as u64;
            let scenario = scenario_for(&tree, robots, 6, 6, seed).expect("6x6 fits a desk task");
            out.push(DeskCase { id: format!("desk_{n_base}_{:02}", i + 1), tree, scenario });
        }
    }
    out
}
