use hltl_server::Background;
use reqwest::blocking::Client;
use reqwest::StatusCode;
use serde_json::{json, Value};

fn post(c: &Client, base: &str, path: &str, body: &Value) -> (StatusCode, Value) {
    let r = c.post(format!("{base}{path}")).json(body).send().unwrap();
    let status = r.status();
    (status, r.json().unwrap())
}

#[test]
fn health_and_status_codes() {
    let srv = Background::start().unwrap();
    let base = srv.url();
    let c = Client::new();

    let h: Value = c.get(format!("{base}/v1/health")).send().unwrap().json().unwrap();
    assert_eq!(h["status"], "ok");

    let (s, v) = post(&c, &base, "/v1/ltl/parse", &json!({"formula": "F(a & F b)"}));
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["props"], json!(["a", "b"]));

    let (s, v) = post(&c, &base, "/v1/ltl/parse", &json!({"formula": "F (a &"}));
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["kind"], "ltl");

    let (s, v) = post(&c, &base, "/v1/ltl/eval", &json!({"formula": "F a"}));
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(v["kind"], "bad-request");

    let r = c.post(format!("{base}/v1/spec/validate")).body("not json").send().unwrap();
    assert_eq!(r.status(), StatusCode::BAD_REQUEST);
}

#[test]
fn spec_and_planning_routes() {
    let srv = Background::start().unwrap();
    let base = srv.url();
    let c = Client::new();
    let spec = json!({"levels": [[{"formula": "F(phi_2_1 & F phi_2_2)"}], [{"formula": "F pickup_apple"}, {"formula": "F move_apple_bowl"}]]});

    let (s, v) = post(&c, &base, "/v1/spec/validate", &json!({"spec": spec}));
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["valid"], true);

    let (s, v) = post(&c, &base, "/v1/spec/satisfies", &json!({"spec": spec, "trace": [["pickup_apple"], ["move_apple_bowl"]]}));
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["satisfied"], true);
    assert_eq!(v["method"], "oracle");

    let scenario = json!({
        "width": 4, "height": 1,
        "robots": [{"id": "r1", "cell": [0, 0]}],
        "objects": [{"id": "apple", "cell": [1, 0]}],
        "locations": [{"id": "bowl", "cells": [[3, 0]]}]
    });
    let (s, v) = post(&c, &base, "/v1/plan", &json!({"scenario": scenario, "spec": spec, "objective": "makespan"}));
    assert_eq!(s, StatusCode::OK, "{v}");
    assert_eq!(v["completion_time"], 5);

    let (s, v) = post(&c, &base, "/v1/simulate", &json!({"scenario": scenario, "plan": v["plan"], "spec": spec}));
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["success"], true);

    let far = json!({"levels": [[{"formula": "F move_apple_sink"}]]});
    let (s, v) = post(&c, &base, "/v1/plan", &json!({"scenario": scenario, "spec": far}));
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["kind"], "world");
}

#[test]
fn generation_is_deterministic() {
    let srv = Background::start().unwrap();
    let base = srv.url();
    let c = Client::new();
    let body = json!({"n_base": 2, "count": 3, "seed": 7});
    let (_, a) = post(&c, &base, "/v1/gen-tasks", &body);
    let (_, b) = post(&c, &base, "/v1/gen-tasks", &body);
    assert_eq!(a, b);
    assert_eq!(a["tasks"].as_array().unwrap().len(), 3);
    let (s, _) = post(&c, &base, "/v1/gen-tasks", &json!({"n_base": 11, "count": 1, "seed": 7}));
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
}
