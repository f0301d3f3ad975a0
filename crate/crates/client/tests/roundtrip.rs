use hltl::api::*;
use hltl::harness::{dishwasher_tree, EvalConfig};
use hltl::htt::SkillRegistry;
use hltl::ltl::Trace;
use hltl_client::{Client, ClientError};
use hltl_server::Background;

#[test]
fn typed_calls() {
    let srv = Background::start().unwrap();
    let c = Client::new(srv.url()).unwrap();
    assert_eq!(c.health().unwrap().api_version, API_VERSION);

    let r = c.ltl_eval(&EvalRequest { formula: "F(a & F b)".into(), trace: Trace::from_names(&[&["a"], &["b"]]) }).unwrap();
    assert!(r.satisfied);

    let spec = c.htt_construct(&TreeRequest { tree: dishwasher_tree(), skills: SkillRegistry::default() }).unwrap();
    assert_eq!(spec.spec.counts(), vec![1, 2, 5]);
    let v = c.spec_validate(&spec).unwrap();
    assert!(v.valid);

    let out = c
        .pipeline_run(&PipelineRequest { instruction: None, provider: ProviderSpec::Tree { tree: dishwasher_tree() }, skills: SkillRegistry::default() })
        .unwrap();
    assert_eq!(out.spec, spec.spec);

    let t = c.pipeline_translate(&TranslateRequest { sentence: "Task_1.1 must be completed before Task_1.2.".into() }).unwrap();
    assert_eq!(t.formula, "F(task_1_1 & F task_1_2)");
}

#[test]
fn errors_are_typed() {
    let srv = Background::start().unwrap();
    let c = Client::new(srv.url()).unwrap();
    match c.ltl_parse(&FormulaRequest { formula: "a U".into() }) {
        Err(ClientError::Api { status: 422, error }) => assert_eq!(error.kind, "ltl"),
        other => panic!("{other:?}"),
    }
    let e = c.pipeline_run(&PipelineRequest { instruction: None, provider: ProviderSpec::Pattern, skills: SkillRegistry::default() }).unwrap_err();
    assert!(e.is_bad_request());

    let dead = Client::new("http://127.0.0.1:9").unwrap();
    assert!(matches!(dead.health(), Err(ClientError::Transport { .. })));
}

#[test]
fn small_evaluation() {
    let srv = Background::start().unwrap();
    let c = Client::new(srv.url()).unwrap();
    let tasks = c.gen_tasks(&GenTasksRequest { n_base: 1, count: 2, seed: 3, bases: None }).unwrap();
    let cases = tasks.tasks.into_iter().enumerate().map(|(i, tree)| EvalCase { id: format!("c{i}"), tree }).collect();
    let cfg = EvalConfig { robots: vec![1], width: 5, height: 5, ..EvalConfig::default() };
    let report = c.evaluate(&EvaluateRequest { cases, config: cfg }).unwrap();
    assert_eq!(report.cases.len(), 2);
    assert_eq!(report.rows.len(), 1);
    assert!(report.cases.iter().all(|l| l.success));
}
