mod common;

use std::path::Path;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use http_body_util::BodyExt;
use proptest::prelude::*;
use serde_json::{json, Value};
use speechedit::pipeline::PipelineConfig;
use speechedit_server::http::router;
use speechedit_server::SessionStore;
use tower::ServiceExt;

struct Reply {
    status: StatusCode,
    body: Vec<u8>,
}

impl Reply {
    fn json(&self) -> Value {
        serde_json::from_slice(&self.body).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&self.body)))
    }
}

fn open(root: &Path) -> (Arc<SessionStore>, Router) {
    let store = Arc::new(SessionStore::open(root, PipelineConfig::default()).unwrap());
    let app = router(store.clone());
    (store, app)
}

async fn call(app: &Router, method: Method, uri: &str, body: Option<String>) -> Reply {
    let request = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map_or_else(Body::empty, Body::from))
        .unwrap();
    let response = app.clone().oneshot(request).await.unwrap();
    let status = response.status();
    let body = response.into_body().collect().await.unwrap().to_bytes().to_vec();
    Reply { status, body }
}

fn upload_body(files: &[(&str, Vec<u8>, String)]) -> String {
    let recordings: Vec<Value> = files
        .iter()
        .map(|(id, wav, align)| {
            json!({ "id": id, "wav_base64": BASE64.encode(wav), "alignment": serde_json::from_str::<Value>(align).unwrap() })
        })
        .collect();
    json!({ "recordings": recordings }).to_string()
}

async fn create(app: &Router) -> String {
    let reply = call(app, Method::POST, "/sessions", Some(upload_body(&common::files()))).await;
    assert_eq!(reply.status, StatusCode::CREATED, "{}", String::from_utf8_lossy(&reply.body));
    reply.json()["id"].as_str().unwrap().to_string()
}

async fn edit(app: &Router, id: &str) -> Value {
    let reply = call(app, Method::POST, &format!("/sessions/{id}/edits"), Some(common::REPLACE_SCRIPT.into())).await;
    assert_eq!(reply.status, StatusCode::OK, "{}", String::from_utf8_lossy(&reply.body));
    reply.json()
}

#[tokio::test]
async fn created_session_serves_parsed_words() {
    let dir = tempfile::tempdir().unwrap();
    let (_, app) = open(dir.path());
    let id = create(&app).await;
    let reply = call(&app, Method::GET, &format!("/sessions/{id}/transcript"), None).await;
    assert_eq!(reply.status, StatusCode::OK);
    let words: Vec<String> = reply.json()["recordings"]["a"]["words"]
        .as_array()
        .unwrap()
        .iter()
        .map(|w| w["text"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(words.join(" "), common::DEST_TEXT);
    assert!(reply.json()["edited"].is_null());
}

#[tokio::test]
async fn invalid_uploads_get_per_file_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let (_, app) = open(dir.path());

    let mut files = common::files();
    let mut long: Value = serde_json::from_str(&files[1].2).unwrap();
    long["audio_duration"] = json!(long["audio_duration"].as_f64().unwrap() + 1.0);
    files[1].2 = long.to_string();
    let reply = call(&app, Method::POST, "/sessions", Some(upload_body(&files))).await;
    assert_eq!(reply.status, StatusCode::UNPROCESSABLE_ENTITY);
    let diagnostics = reply.json()["diagnostics"].as_array().unwrap().clone();
    assert_eq!(diagnostics.len(), 1);
    assert_eq!(diagnostics[0]["file"], "b.json");

    let reply = call(&app, Method::POST, "/sessions", Some(json!({ "recordings": [] }).to_string())).await;
    assert_eq!(reply.status, StatusCode::UNPROCESSABLE_ENTITY);

    let mut files = common::files();
    files[0].1 = b"not a wav".to_vec();
    let reply = call(&app, Method::POST, "/sessions", Some(upload_body(&files))).await;
    assert_eq!(reply.status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(reply.json()["diagnostics"][0]["file"], "a.wav");

    let reply = call(&app, Method::POST, "/sessions", Some("{".into())).await;
    assert_eq!(reply.status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0, "rejected sessions leave nothing on disk");
}

#[tokio::test]
async fn unknown_session_is_not_found() {
    let dir = tempfile::tempdir().unwrap();
    let (_, app) = open(dir.path());
    for (method, path) in [
        (Method::GET, "transcript"),
        (Method::POST, "edits"),
        (Method::POST, "candidates"),
        (Method::POST, "candidates/0/select"),
        (Method::POST, "overrides"),
        (Method::GET, "render"),
        (Method::GET, "prosody"),
    ] {
        let body = (method == Method::POST).then(|| "{}".to_string());
        let reply = call(&app, method, &format!("/sessions/deadbeef/{path}"), body).await;
        assert_eq!(reply.status, StatusCode::NOT_FOUND, "{path}");
    }
}

#[tokio::test]
async fn edit_then_render_and_prosody() {
    let dir = tempfile::tempdir().unwrap();
    let (_, app) = open(dir.path());
    let id = create(&app).await;
    let reply = call(&app, Method::GET, &format!("/sessions/{id}/render"), None).await;
    assert_eq!(reply.status, StatusCode::UNPROCESSABLE_ENTITY, "nothing rendered yet");

    let result = edit(&app, &id).await;
    assert_eq!(result["source"], json!({ "kind": "candidate", "k": 0 }));
    let render = call(&app, Method::GET, &format!("/sessions/{id}/render"), None).await;
    assert_eq!(render.status, StatusCode::OK);
    assert_eq!(&render.body[..4], b"RIFF");

    let prosody = call(&app, Method::GET, &format!("/sessions/{id}/prosody"), None).await.json();
    let frames = prosody["f0"].as_array().unwrap().len();
    assert!(frames > 100);
    assert_eq!(prosody["voiced"].as_array().unwrap().len(), frames);
    assert_eq!(prosody["targets"], result["targets"]);
    assert!(prosody["correction"].is_array());

    let source = call(&app, Method::GET, &format!("/sessions/{id}/prosody?recording=b"), None).await.json();
    assert_eq!(source["recording"], "b");

    let bad = call(&app, Method::POST, &format!("/sessions/{id}/edits"), Some(r#"{"ops":[{"op":"cut","target":[5,2]}]}"#.into())).await;
    assert_eq!(bad.status, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test]
async fn single_candidate_is_the_stored_result() {
    let dir = tempfile::tempdir().unwrap();
    let (_, app) = open(dir.path());
    let id = create(&app).await;
    let result = edit(&app, &id).await;
    let stored = call(&app, Method::GET, &format!("/sessions/{id}/render"), None).await.body;
    let reply = call(&app, Method::POST, &format!("/sessions/{id}/candidates?n=1"), None).await;
    assert_eq!(reply.status, StatusCode::OK);
    let list = reply.json()["candidates"].as_array().unwrap().clone();
    assert_eq!(list.len(), 1);
    assert_eq!(list[0]["targets"], result["targets"]);
    assert_eq!(BASE64.decode(list[0]["preview_wav_base64"].as_str().unwrap()).unwrap(), stored);
}

#[tokio::test]
async fn candidates_select_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let (_, app) = open(dir.path());
    let id = create(&app).await;
    edit(&app, &id).await;
    let reply = call(&app, Method::POST, &format!("/sessions/{id}/candidates?seed=5"), None).await;
    let list = reply.json()["candidates"].as_array().unwrap().clone();
    assert_eq!(list.len(), 4, "default candidate count");
    assert_ne!(list[1]["targets"], list[2]["targets"]);

    let mut renders = Vec::new();
    for _ in 0..2 {
        let selected = call(&app, Method::POST, &format!("/sessions/{id}/candidates/2/select"), None).await;
        assert_eq!(selected.status, StatusCode::OK);
        assert_eq!(selected.json()["targets"], list[2]["targets"]);
        renders.push(call(&app, Method::GET, &format!("/sessions/{id}/render"), None).await.body);
    }
    assert_eq!(renders[0], renders[1]);
    assert_eq!(renders[0], BASE64.decode(list[2]["preview_wav_base64"].as_str().unwrap()).unwrap());

    let out_of_range = call(&app, Method::POST, &format!("/sessions/{id}/candidates/4/select"), None).await;
    assert_eq!(out_of_range.status, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test]
async fn overrides_carry_pins_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let (_, app) = open(dir.path());
    let id = create(&app).await;
    let before = call(&app, Method::POST, &format!("/sessions/{id}/overrides"), Some("{}".into())).await;
    assert_eq!(before.status, StatusCode::UNPROCESSABLE_ENTITY, "no edit yet");

    edit(&app, &id).await;
    let pins = json!({ "pinned_durations": { "1": 0.123 } }).to_string();
    let reply = call(&app, Method::POST, &format!("/sessions/{id}/overrides"), Some(pins)).await;
    assert_eq!(reply.status, StatusCode::OK, "{}", String::from_utf8_lossy(&reply.body));
    assert_eq!(reply.json()["targets"]["durations"][1].as_f64(), Some(0.123));

    let bad = json!({ "pinned_durations": { "999": 0.1 } }).to_string();
    let reply = call(&app, Method::POST, &format!("/sessions/{id}/overrides"), Some(bad)).await;
    assert_eq!(reply.status, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test]
async fn busy_session_conflicts_without_blocking_others() {
    let dir = tempfile::tempdir().unwrap();
    let (store, app) = open(dir.path());
    let a = create(&app).await;
    let b = create(&app).await;
    let held = store.acquire(&a).unwrap();
    let reply = call(&app, Method::GET, &format!("/sessions/{a}/transcript"), None).await;
    assert_eq!(reply.status, StatusCode::CONFLICT);
    let other = call(&app, Method::GET, &format!("/sessions/{b}/transcript"), None).await;
    assert_eq!(other.status, StatusCode::OK);
    drop(held);
    let reply = call(&app, Method::GET, &format!("/sessions/{a}/transcript"), None).await;
    assert_eq!(reply.status, StatusCode::OK);
}

#[tokio::test]
async fn sessions_reload_after_restart() {
    let dir = tempfile::tempdir().unwrap();
    let (id, render, candidate, prosody) = {
        let (_, app) = open(dir.path());
        let id = create(&app).await;
        edit(&app, &id).await;
        call(&app, Method::POST, &format!("/sessions/{id}/candidates?n=3&seed=9"), None).await;
        call(&app, Method::POST, &format!("/sessions/{id}/candidates/1/select"), None).await;
        let render = call(&app, Method::GET, &format!("/sessions/{id}/render"), None).await.body;
        let prosody = call(&app, Method::GET, &format!("/sessions/{id}/prosody"), None).await.body;
        call(&app, Method::POST, &format!("/sessions/{id}/candidates/2/select"), None).await;
        let candidate = call(&app, Method::GET, &format!("/sessions/{id}/render"), None).await.body;
        call(&app, Method::POST, &format!("/sessions/{id}/candidates/1/select"), None).await;
        (id, render, candidate, prosody)
    };
    let (_, app) = open(dir.path());
    assert_eq!(call(&app, Method::GET, &format!("/sessions/{id}/render"), None).await.body, render);
    assert_eq!(call(&app, Method::GET, &format!("/sessions/{id}/prosody"), None).await.body, prosody);
    let reselected = call(&app, Method::POST, &format!("/sessions/{id}/candidates/2/select"), None).await;
    assert_eq!(reselected.status, StatusCode::OK);
    assert_eq!(call(&app, Method::GET, &format!("/sessions/{id}/render"), None).await.body, candidate);
}

#[tokio::test]
async fn identical_sessions_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let (_, app) = open(dir.path());
    let mut outputs = Vec::new();
    for _ in 0..2 {
        let id = create(&app).await;
        edit(&app, &id).await;
        let candidates = call(&app, Method::POST, &format!("/sessions/{id}/candidates?n=2&seed=3"), None).await.body;
        let render = call(&app, Method::GET, &format!("/sessions/{id}/render"), None).await.body;
        outputs.push((candidates, render));
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[derive(Clone, Debug)]
enum Op {
    Edit,
    Candidates(usize),
    Select(usize),
    Pin(f64),
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        Just(Op::Edit),
        (1usize..3).prop_map(Op::Candidates),
        (0usize..3).prop_map(Op::Select),
        (0.05f64..0.2).prop_map(Op::Pin),
    ]
}

async fn apply(app: &Router, id: &str, op: &Op) {
    let (method, path, body) = match op {
        Op::Edit => (Method::POST, "edits".to_string(), Some(common::REPLACE_SCRIPT.to_string())),
        Op::Candidates(n) => (Method::POST, format!("candidates?n={n}"), None),
        Op::Select(k) => (Method::POST, format!("candidates/{k}/select"), None),
        Op::Pin(d) => (Method::POST, "overrides".into(), Some(json!({ "pinned_durations": { "0": d } }).to_string())),
    };
    let reply = call(app, method, &format!("/sessions/{id}/{path}"), body).await;
    assert!(
        reply.status == StatusCode::OK || reply.status == StatusCode::UNPROCESSABLE_ENTITY,
        "{op:?}: {}",
        reply.status
    );
}

/// Everything a client can read from a session.
async fn observe(app: &Router, id: &str) -> Vec<(StatusCode, Vec<u8>)> {
    let mut out = Vec::new();
    for path in ["transcript", "render", "prosody"] {
        let r = call(app, Method::GET, &format!("/sessions/{id}/{path}"), None).await;
        out.push((r.status, r.body));
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 6, ..ProptestConfig::default() })]

    #[test]
    fn sessions_are_isolated(ops in prop::collection::vec((any::<bool>(), op()), 1..5)) {
        let runtime = tokio::runtime::Runtime::new().unwrap();
        runtime.block_on(async {
            let dir = tempfile::tempdir().unwrap();
            let (_, app) = open(dir.path());
            let ids = [create(&app).await, create(&app).await];
            let mut seen = [observe(&app, &ids[0]).await, observe(&app, &ids[1]).await];
            for (on_first, op) in &ops {
                let (target, other) = if *on_first { (0, 1) } else { (1, 0) };
                apply(&app, &ids[target], op).await;
                assert_eq!(observe(&app, &ids[other]).await, seen[other], "{op:?} on one session changed the other");
                seen[target] = observe(&app, &ids[target]).await;
            }
        });
    }
}
