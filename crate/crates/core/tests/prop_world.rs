mod common;

use common::{build_tree, tree_shape};
use hltl::harness::scenario_for;
use hltl::hier::SiblingMode;
use hltl::htt::SkillRegistry;
use hltl::planner::{greedy_plan, plan, Objective, PlanOptions};
use hltl::world::{check_success, metrics, simulate, simulate_from, step, Action, CheckMethod, Dir, PlanTrace, Scenario};
use proptest::prelude::*;

fn world() -> Scenario {
    Scenario::new(4, 4).with_robot("r1", (0, 0)).with_robot("r2", (3, 3)).with_object("box", (1, 1)).with_location("shelf", &[(2, 2)])
}

fn action(code: u8) -> Action {
    match code % 8 {
        0 => Action::Wait,
        1 => Action::Step(Dir::N),
        2 => Action::Step(Dir::E),
        3 => Action::Step(Dir::S),
        4 => Action::Step(Dir::W),
        5 => Action::Api(hltl::htt::ApiCall::new("Pickup", ["box"])),
        6 => Action::Api(hltl::htt::ApiCall::new("Place", ["box", "shelf"])),
        _ => Action::Api(hltl::htt::ApiCall::new("Open", ["shelf"])),
    }
}

/// Keeps only the joint actions that execute, so the result is a valid plan.
fn walk(sc: &Scenario, codes: &[(u8, u8)]) -> Vec<Vec<Action>> {
    let mut s = sc.initial_state();
    let mut steps = Vec::new();
    for &(a, b) in codes {
        let joint = vec![action(a), action(b)];
        if let Ok((n, _)) = step(sc, &s, &joint) {
            s = n;
            steps.push(joint);
        }
    }
    steps
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn replay_reproduces_state(codes in prop::collection::vec((any::<u8>(), any::<u8>()), 0..30)) {
        let sc = world();
        let p = PlanTrace::from_steps(&sc, walk(&sc, &codes)).unwrap();
        let (a, ta) = simulate(&sc, &p).unwrap();
        let (b, tb) = simulate(&sc, &p).unwrap();
        prop_assert_eq!(a.step as usize, p.len());
        prop_assert_eq!(a, b);
        prop_assert_eq!(&ta, &tb);
        prop_assert_eq!(ta, p.trace);
    }

    #[test]
    fn metrics_add_up(c1 in prop::collection::vec((any::<u8>(), any::<u8>()), 0..20), c2 in prop::collection::vec((any::<u8>(), any::<u8>()), 0..20)) {
        let sc = world();
        let p1 = PlanTrace::from_steps(&sc, walk(&sc, &c1)).unwrap();
        let (mid, _) = simulate(&sc, &p1).unwrap();
        // second plan continues from where the first ended
        let mut s = mid.clone();
        let mut steps2 = Vec::new();
        for &(a, b) in &c2 {
            let joint = vec![action(a), action(b)];
            if let Ok((n, _)) = step(&sc, &s, &joint) {
                s = n;
                steps2.push(joint);
            }
        }
        let mut p2 = PlanTrace { steps: steps2, ..p1.clone() };
        p2.trace = simulate_from(&sc, &mid, &p2).unwrap().1;
        let both = p1.concat(&p2);
        let (m1, m2, m) = (metrics(&p1, &sc), metrics(&p2, &sc), metrics(&both, &sc));
        prop_assert!((m.travel_cost_m - (m1.travel_cost_m + m2.travel_cost_m)).abs() < 1e-9);
        prop_assert!(m.completion_time >= m1.completion_time);
        prop_assert!(m.completion_time >= m2.completion_time);
        prop_assert_eq!(simulate(&sc, &both).unwrap().1, both.trace);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn plans_are_sound_and_repeatable(shape in tree_shape(2, 2), robots in 1usize..=2, side in 3i32..=5, seed in any::<u64>(), serial in any::<bool>()) {
        let t = build_tree(&shape);
        let sc = scenario_for(&t, robots, side, side, seed).unwrap();
        let spec = t.construct(&SkillRegistry::default()).unwrap();
        let mode = if serial { SiblingMode::Serial } else { SiblingMode::Overlap };
        for objective in [Objective::TravelCost, Objective::Makespan] {
            let opts = PlanOptions { objective, mode, ..Default::default() };
            let r = plan(&sc, &spec, &opts).unwrap();
            prop_assert!(check_success(&sc, &r.plan, &spec, mode, CheckMethod::Monitor).unwrap());
            if r.plan.len() <= 12 {
                prop_assert!(check_success(&sc, &r.plan, &spec, mode, CheckMethod::Oracle).unwrap());
            }
            let m = metrics(&r.plan, &sc);
            prop_assert_eq!(m.completion_time, r.completion_time);
            prop_assert!((m.travel_cost_m - r.travel_cost_m).abs() < 1e-9);
            if objective == Objective::Makespan {
                prop_assert!(r.stats.max_f_popped <= r.completion_time);
            }
            let again = plan(&sc, &spec, &opts).unwrap();
            prop_assert_eq!(&again.plan, &r.plan);
            let g = greedy_plan(&sc, &spec, &opts).unwrap();
            prop_assert!(g.objective_value() >= r.objective_value());
        }
    }
}
