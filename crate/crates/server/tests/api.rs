//! Routes exercised in-process through the router.

use std::time::Duration;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use flybench_core::geometry::{Bounds, ObstacleMap};
use flybench_core::mapgen::MapSpec;
use flybench_server::{router, ApiError, CampaignState, CampaignStatus, ErrorKind, MetricsReply, ReportReply};

async fn call(app: &Router, method: &str, path: &str, body: Option<Value>) -> (StatusCode, Vec<u8>) {
    let req = Request::builder().method(method).uri(path).header("content-type", "application/json");
    let req = req.body(body.map_or(Body::empty(), |b| Body::from(b.to_string()))).unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    (status, resp.into_body().collect().await.unwrap().to_bytes().to_vec())
}

async fn json_call(app: &Router, method: &str, path: &str, body: Option<Value>) -> (StatusCode, Value) {
    let (status, bytes) = call(app, method, path, body).await;
    (status, serde_json::from_slice(&bytes).unwrap_or_else(|_| panic!("{path}: {}", String::from_utf8_lossy(&bytes))))
}

fn error(v: Value) -> ApiError {
    serde_json::from_value(v).unwrap()
}

#[tokio::test]
async fn health_and_protocol() {
    let app = router();
    let (status, v) = json_call(&app, "GET", "/health", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["status"], "ok");
    assert_eq!(v["protocol_version"], 1);
    let (status, doc) = call(&app, "GET", "/protocol", None).await;
    assert_eq!(status, StatusCode::OK);
    assert!(String::from_utf8(doc).unwrap().starts_with("# Agent wire protocol, version 1"));
}

#[tokio::test]
async fn map_generation_is_seeded_and_validated() {
    let app = router();
    let spec = MapSpec::indoor(Bounds::centered(40.0, 40.0), 4.0, 7, 0.6);
    let (status, a) = json_call(&app, "POST", "/maps/generate", Some(serde_json::to_value(&spec).unwrap())).await;
    assert_eq!(status, StatusCode::OK);
    let (_, b) = json_call(&app, "POST", "/maps/generate", Some(serde_json::to_value(&spec).unwrap())).await;
    assert_eq!(a, b);
    let map: ObstacleMap = serde_json::from_value(a).unwrap();
    assert!(!map.cylinders.is_empty());

    let (status, v) = json_call(&app, "POST", "/maps/metrics", Some(json!({"map": map, "r_poisson": 4.0}))).await;
    assert_eq!(status, StatusCode::OK);
    let trav = v["trav"].as_f64().unwrap();
    assert!(trav > 0.0 && trav <= v["trav_max"].as_f64().unwrap());

    let bad = MapSpec { r_poisson: -1.0, ..spec };
    let (status, v) = json_call(&app, "POST", "/maps/generate", Some(serde_json::to_value(&bad).unwrap())).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(error(v).kind, ErrorKind::Invalid);
}

#[tokio::test]
async fn path_and_trial_on_an_empty_map() {
    let app = router();
    let map = ObstacleMap::empty(Bounds::centered(40.0, 40.0));
    let (status, v) = json_call(&app, "POST", "/path", Some(json!({"map": map, "start": [-10.0, -3.0], "goal": [12.0, 5.0]}))).await;
    assert_eq!(status, StatusCode::OK);
    let expected = (22.0f64.powi(2) + 8.0f64.powi(2)).sqrt();
    assert!((v["d_min"].as_f64().unwrap() - expected).abs() < 1e-9);

    let (status, v) = json_call(&app, "POST", "/path", Some(json!({"map": map, "start": [-10.0, 0.0], "goal": [99.0, 0.0]}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(error(v).message.contains("outside"));

    let constraints = json!({"d_lo": 10.0, "d_hi": 20.0, "max_time": 30.0, "altitude": 1.5, "d_drone": 0.6});
    let (status, v) = json_call(&app, "POST", "/trials/generate", Some(json!({"map": map, "seed": 3, "constraints": constraints}))).await;
    assert_eq!(status, StatusCode::OK);
    let d = (0..3).map(|i| v["goal"][i].as_f64().unwrap() - v["start"][i].as_f64().unwrap()).map(|x| x * x).sum::<f64>().sqrt();
    assert!((10.0..=20.0).contains(&d));
}

#[tokio::test]
async fn contrast_factor_clamps_unless_told_not_to() {
    let app = router();
    let a = json!({"sr": 0.5, "d_min": 20.0, "trials": 10});
    let b = json!({"sr": 0.25, "d_min": 20.0, "trials": 10});
    let (status, v) = json_call(&app, "POST", "/metrics/contrast", Some(json!({"a": a, "b": b}))).await;
    assert_eq!(status, StatusCode::OK);
    assert!((v["cf"].as_f64().unwrap() - 0.5).abs() < 1e-12);

    let perfect = json!({"sr": 1.0, "d_min": 20.0, "trials": 10});
    let (status, _) = json_call(&app, "POST", "/metrics/contrast", Some(json!({"a": perfect, "b": b}))).await;
    assert_eq!(status, StatusCode::OK);
    let (status, v) = json_call(&app, "POST", "/metrics/contrast", Some(json!({"a": perfect, "b": b, "clamp": false}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(error(v).kind, ErrorKind::Invalid);
}

const SMALL: &str = r#"
name = "api"
master_seed = 5
maps = 2
trials_per_map = 2
workers = 1

[map]
width = 50
height = 50

[camera]
width = 32
height = 24

[trial]
d_lo = 12
d_hi = 20
max_time = 30

[[algorithms]]
name = "straight-line"
builtin = "straight-line"
"#;

#[tokio::test]
async fn campaign_lifecycle() {
    let app = router();
    let dir = tempfile::tempdir().unwrap();

    let (status, v) = json_call(&app, "POST", "/campaigns", Some(json!({"config": "maps = \"two\""}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(error(v).kind, ErrorKind::Config);

    let (status, v) = json_call(&app, "POST", "/campaigns", Some(json!({"config": SMALL, "output_dir": dir.path()}))).await;
    assert_eq!(status, StatusCode::ACCEPTED);
    let started: CampaignStatus = serde_json::from_value(v).unwrap();
    assert_eq!(started.output_dir, dir.path());

    let done = loop {
        let (status, v) = json_call(&app, "GET", &format!("/campaigns/{}", started.id), None).await;
        assert_eq!(status, StatusCode::OK);
        let s: CampaignStatus = serde_json::from_value(v).unwrap();
        if s.state != CampaignState::Running {
            break s;
        }
        tokio::time::sleep(Duration::from_millis(20)).await;
    };
    assert_eq!(done.state, CampaignState::Succeeded, "{:?}", done.error);
    assert_eq!((done.done, done.total, done.skipped), (4, 4, 0));
    let summary = done.summary.unwrap();
    assert_eq!(summary.algorithms[0].trials, 4);

    // Same directory, different campaign: refused before anything runs.
    let other = SMALL.replace("master_seed = 5", "master_seed = 6");
    let (status, v) = json_call(&app, "POST", "/campaigns", Some(json!({"config": other, "output_dir": dir.path()}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(error(v).kind, ErrorKind::Config);

    let (status, v) = json_call(&app, "POST", "/results/metrics", Some(json!({"dir": dir.path()}))).await;
    assert_eq!(status, StatusCode::OK);
    let m: MetricsReply = serde_json::from_value(v).unwrap();
    assert_eq!(m.checked, 4);
    assert!(m.mismatches.is_empty());
    assert_eq!(m.summary, summary);

    let (status, v) = json_call(&app, "POST", "/results/report", Some(json!({"dir": dir.path()}))).await;
    assert_eq!(status, StatusCode::OK);
    let r: ReportReply = serde_json::from_value(v).unwrap();
    assert!(r.files.iter().all(|f| f.is_file()));
    assert!(r.files.iter().any(|f| f.ends_with("sr_by_bin.svg")));

    let (status, v) = json_call(&app, "GET", "/campaigns/999", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(error(v).kind, ErrorKind::NotFound);

    let missing = dir.path().join("nope");
    let (status, v) = json_call(&app, "POST", "/results/metrics", Some(json!({"dir": missing}))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(error(v).kind, ErrorKind::Results);
}
