use std::collections::BTreeMap;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use pitchmdp::analysis::{heatmap, PreparedModel};
use pitchmdp::export::round_json;
use pitchmdp::grid::{default_masks, GridSpec, MaskParams};
use pitchmdp::synthetic::{league_model, toy_chain_model};
use pitchmdp::{Analysis, WhatIfRequest};
use pitchmdp_server::{router, ModelStore, Snapshot, API_VERSION, TEAM_NAMES_FILE};
use serde_json::{json, Value};
use tower::ServiceExt;

fn store() -> Arc<ModelStore> {
    let grid = GridSpec::default();
    let models = vec![
        toy_chain_model(),
        league_model(grid, "12", 3),
        league_model(grid, "7", 2),
    ];
    let names = BTreeMap::from([("7".to_string(), "Seven".to_string())]);
    let masks = default_masks(&grid, &MaskParams::default());
    Arc::new(ModelStore::new(Snapshot::new(models, &names, masks).unwrap()))
}

async fn call(store: &Arc<ModelStore>, req: Request<Body>) -> (StatusCode, Value) {
    let resp = router(store.clone(), None).oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap())
}

fn get(uri: &str) -> Request<Body> {
    Request::get(uri).body(Body::empty()).unwrap()
}

fn post(uri: &str, body: Value) -> Request<Body> {
    Request::post(uri)
        .header("content-type", "application/json")
        .body(Body::from(body.to_string()))
        .unwrap()
}

#[tokio::test]
async fn health_and_teams() {
    let s = store();
    let (status, body) = call(&s, get("/health")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["api_version"], API_VERSION);
    assert_eq!(body["data"]["teams"], 3);

    let (status, body) = call(&s, get("/teams")).await;
    assert_eq!(status, StatusCode::OK);
    let ids: Vec<&str> = body["data"]
        .as_array()
        .unwrap()
        .iter()
        .map(|t| t["team_id"].as_str().unwrap())
        .collect();
    assert_eq!(ids, ["12", "7", "toy"]);
    assert_eq!(body["data"][1]["name"], "Seven");
    assert_eq!(body["data"][1]["grid"]["columns"], 22);
}

#[tokio::test]
async fn heatmap_matches_library() {
    let s = store();
    let snap = s.snapshot();
    let (status, body) = call(&s, get("/teams/7/heatmap?analysis=shoot_vs_move&k=2")).await;
    assert_eq!(status, StatusCode::OK);
    let expected = heatmap(
        &snap.teams["7"].prepared.model,
        Analysis::ShootVsMove { k: 2 },
        &snap.masks,
    )
    .unwrap();
    assert_eq!(body["data"], round_json(serde_json::to_value(&expected).unwrap()));

    for name in ["flank_first", "better_shot", "direct_shot", "shoot_vs_move_k1"] {
        let (status, _) = call(&s, get(&format!("/teams/12/heatmap?analysis={name}"))).await;
        assert_eq!(status, StatusCode::OK, "{name}");
    }
}

#[tokio::test]
async fn toy_heatmap_values() {
    let s = store();
    let (_, body) = call(&s, get("/teams/toy/heatmap?analysis=shoot_vs_move_k1")).await;
    let cell = &body["data"]["cells"][0];
    assert_eq!(cell["probability"], 0.225);
    assert_eq!(cell["delta"], 0.125);
}

#[tokio::test]
async fn whatif_matches_prepared_model() {
    let s = store();
    let req = WhatIfRequest {
        zones: vec![pitchmdp::ZoneId(0)],
        x: 0.1,
        quality_adjust: false,
    };
    let (status, body) = call(&s, post("/teams/toy/whatif", serde_json::to_value(&req).unwrap())).await;
    assert_eq!(status, StatusCode::OK);
    let expected = PreparedModel::new(toy_chain_model()).unwrap().whatif(&req).unwrap();
    assert_eq!(body["data"], round_json(serde_json::to_value(&expected).unwrap()));
    // Shooting at 0.1 from a zone worth 0.11/0.76 loses goals.
    assert!(body["data"]["delta_goals"].as_f64().unwrap() < 0.0);
}

#[tokio::test]
async fn errors_are_enveloped() {
    let s = store();
    let cases = [
        (get("/teams/nope/heatmap"), StatusCode::NOT_FOUND),
        (get("/teams/7/heatmap?analysis=xg"), StatusCode::BAD_REQUEST),
        (
            get("/teams/7/heatmap?analysis=shoot_vs_move&k=0"),
            StatusCode::BAD_REQUEST,
        ),
        (
            post("/teams/nope/whatif", json!({"zones": [1], "x": 0.1})),
            StatusCode::NOT_FOUND,
        ),
        (
            post("/teams/7/whatif", json!({"zones": [1], "x": -1.0})),
            StatusCode::BAD_REQUEST,
        ),
        (
            post("/teams/7/whatif", json!({"zones": [1], "x": 10.5})),
            StatusCode::BAD_REQUEST,
        ),
        (
            post("/teams/7/whatif", json!({"zones": [375], "x": 0.1})),
            StatusCode::BAD_REQUEST,
        ),
        (
            post("/teams/7/whatif", json!({"zones": "all"})),
            StatusCode::BAD_REQUEST,
        ),
        (get("/nowhere"), StatusCode::NOT_FOUND),
    ];
    for (req, want) in cases {
        let uri = req.uri().to_string();
        let (status, body) = call(&s, req).await;
        assert_eq!(status, want, "{uri}: {body}");
        assert_eq!(body["api_version"], API_VERSION);
        assert_eq!(body["error"]["status"], want.as_u16());
    }
}

#[tokio::test]
async fn loads_model_directory_and_swaps() {
    let dir = tempfile::tempdir().unwrap();
    let m = toy_chain_model();
    std::fs::write(dir.path().join("toy.json"), m.to_json().unwrap()).unwrap();
    std::fs::write(dir.path().join(TEAM_NAMES_FILE), r#"{"toy": "Toy FC"}"#).unwrap();
    let s = Arc::new(ModelStore::load_dir(dir.path(), Vec::new()).unwrap());
    let (_, body) = call(&s, get("/teams")).await;
    assert_eq!(body["data"][0]["name"], "Toy FC");
    assert_eq!(body["data"][0]["goals"], m.goal_count);

    s.replace(Snapshot::default());
    let (_, body) = call(&s, get("/health")).await;
    assert_eq!(body["data"]["teams"], 0);
}
