use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::sync::mpsc;
use std::sync::Arc;
use std::thread;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use conbrowse_core::ingest::{load_sources, FieldMap, SourceConfig, SourceMode};
use conbrowse_core::snapshot::{latest_id, LATEST};
use conbrowse_service::{router, serve, AppState, ServiceConfig, ServiceError};
use http_body_util::BodyExt;
use serde_json::Value;
use tower::ServiceExt;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn config(dir: &Path, sources: Option<Vec<SourceConfig>>) -> ServiceConfig {
    let mut c = ServiceConfig::new(dir, 0);
    c.sources = sources;
    c
}

async fn call(state: &Arc<AppState>, method: Method, uri: &str) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri).body(Body::empty()).unwrap();
    let resp = router(state.clone()).oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap())
}

fn assert_error(body: &Value, code: &str) {
    assert_eq!(body["error"], code, "{body}");
    assert!(body["detail"].as_str().is_some_and(|d| !d.is_empty()), "{body}");
}

#[tokio::test]
async fn empty_directory_serves_empty_state() {
    let dir = tempfile::tempdir().unwrap();
    let state = AppState::load(config(dir.path(), None)).unwrap();

    let (status, tree) = call(&state, Method::GET, "/v1/tree").await;
    assert_eq!(status, StatusCode::OK);
    assert!(tree["snapshot_id"].is_null() && tree["root"].is_null());
    assert_eq!(tree["nodes"], serde_json::json!([]));

    let (status, health) = call(&state, Method::GET, "/v1/health").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(health, serde_json::json!({"status": "ok", "snapshot_id": null}));

    let (status, body) = call(&state, Method::GET, "/v1/nodes/n0/articles").await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_error(&body, "not_found");

    let (status, body) = call(&state, Method::POST, "/v1/refresh").await;
    assert_eq!(status, StatusCode::SERVICE_UNAVAILABLE);
    assert_error(&body, "not_configured");

    let (status, body) = call(&state, Method::GET, "/v2/tree").await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_error(&body, "not_found");
}

#[tokio::test]
async fn refresh_builds_persists_and_swaps() {
    let dir = tempfile::tempdir().unwrap();
    let sources = load_sources(&fixture("sources.json")).unwrap();
    let state = AppState::load(config(dir.path(), Some(sources))).unwrap();

    let (status, refreshed) = call(&state, Method::POST, "/v1/refresh").await;
    assert_eq!(status, StatusCode::OK, "{refreshed}");
    let id = refreshed["snapshot_id"].as_str().unwrap().to_string();
    assert_eq!(refreshed["stats"]["article_count"], 30);
    assert_eq!(latest_id(dir.path()).unwrap().as_deref(), Some(id.as_str()));

    let (_, tree) = call(&state, Method::GET, "/v1/tree").await;
    assert_eq!(tree["snapshot_id"], id.as_str());
    assert_eq!(tree["arity"], 3);
    let nodes = tree["nodes"].as_array().unwrap();
    assert!(!nodes.is_empty());
    assert_eq!(tree["root"], nodes[0]["id"]);

    let snapshot = state.snapshot().unwrap();
    for node in nodes {
        let nid = node["id"].as_str().unwrap();
        let (status, list) = call(&state, Method::GET, &format!("/v1/nodes/{nid}/articles")).await;
        assert_eq!(status, StatusCode::OK);
        let list = list.as_array().unwrap();
        assert_eq!(list.len() as u64, node["count"].as_u64().unwrap());
        for (entry, aid) in list.iter().zip(node["articles"].as_array().unwrap()) {
            let article = snapshot.article(aid.as_str().unwrap()).unwrap();
            assert_eq!(entry["title"], article.title.as_str());
            assert_eq!(entry["url"], article.url.as_str());
            assert_eq!(entry["source"], article.source.as_str());
            assert_eq!(entry["description"], article.description.as_str());
            assert_eq!(entry.as_object().unwrap().len(), 4);
        }
    }

    // Read endpoints are pure functions of the snapshot.
    let (_, again) = call(&state, Method::GET, "/v1/tree").await;
    assert_eq!(again, tree);

    let (status, body) = call(&state, Method::GET, "/v1/nodes/n999/articles").await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_error(&body, "not_found");

    // A restarted service picks the persisted snapshot back up.
    let reloaded = AppState::load(config(dir.path(), None)).unwrap();
    let (_, health) = call(&reloaded, Method::GET, "/v1/health").await;
    assert_eq!(health["snapshot_id"], id.as_str());
}

#[tokio::test]
async fn failed_refresh_keeps_serving_previous_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    let good = load_sources(&fixture("sources.json")).unwrap();
    let state = AppState::load(config(dir.path(), Some(good))).unwrap();
    let (_, first) = call(&state, Method::POST, "/v1/refresh").await;

    let mut broken = load_sources(&fixture("sources.json")).unwrap();
    for s in &mut broken {
        s.endpoint = dir.path().join("absent.json").to_string_lossy().into_owned();
    }
    let state = AppState::load(config(dir.path(), Some(broken))).unwrap();
    let (status, body) = call(&state, Method::POST, "/v1/refresh").await;
    assert_eq!(status, StatusCode::BAD_GATEWAY);
    assert_error(&body, "refresh_failed");
    let (_, health) = call(&state, Method::GET, "/v1/health").await;
    assert_eq!(health["snapshot_id"], first["snapshot_id"]);
    assert!(dir.path().join(LATEST).exists());
}

/// Live source whose server holds the response until released.
fn held_source() -> (SourceConfig, mpsc::Receiver<()>, mpsc::Sender<()>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let (arrived_tx, arrived_rx) = mpsc::channel();
    let (release_tx, release_rx) = mpsc::channel::<()>();
    thread::spawn(move || {
        let (mut stream, _) = listener.accept().unwrap();
        let mut reader = BufReader::new(stream.try_clone().unwrap());
        let mut line = String::new();
        while reader.read_line(&mut line).unwrap() > 0 && line != "\r\n" {
            line.clear();
        }
        arrived_tx.send(()).unwrap();
        let _ = release_rx.recv();
        let body = r#"[{"headline":"Bush speaks","body":"","link":"https://example.com/held"}]"#;
        let _ = write!(
            stream,
            "HTTP/1.1 200 OK\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
            body.len()
        );
    });
    std::env::set_var("CB_TEST_HELD_KEY", "k");
    let source = SourceConfig {
        name: "HELD".into(),
        endpoint: format!("http://{addr}/"),
        field_map: FieldMap {
            items: String::new(),
            title: "headline".into(),
            description: "body".into(),
            url: "link".into(),
        },
        credential_ref: Some("CB_TEST_HELD_KEY".into()),
        mode: SourceMode::Live,
        timeout_secs: Some(10),
    };
    (source, arrived_rx, release_tx)
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn concurrent_refresh_is_busy() {
    let dir = tempfile::tempdir().unwrap();
    let (source, arrived, release) = held_source();
    let state = AppState::load(config(dir.path(), Some(vec![source]))).unwrap();

    let first = tokio::spawn({
        let state = state.clone();
        async move { call(&state, Method::POST, "/v1/refresh").await }
    });
    tokio::task::spawn_blocking(move || arrived.recv().unwrap()).await.unwrap();

    let (status, body) = call(&state, Method::POST, "/v1/refresh").await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_error(&body, "busy");
    // Readers are unaffected while the build runs.
    let (status, _) = call(&state, Method::GET, "/v1/tree").await;
    assert_eq!(status, StatusCode::OK);

    release.send(()).unwrap();
    let (status, body) = first.await.unwrap();
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!(body["stats"]["article_count"], 1);
}

fn get(addr: std::net::SocketAddr, path: &str) -> String {
    let mut stream = TcpStream::connect(addr).unwrap();
    write!(stream, "GET {path} HTTP/1.1\r\nhost: localhost\r\nconnection: close\r\n\r\n").unwrap();
    let mut out = String::new();
    stream.read_to_string(&mut out).unwrap();
    out
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn serve_binds_and_reports_bind_failure() {
    let dir = tempfile::tempdir().unwrap();
    let handle = serve(config(dir.path(), None)).await.unwrap();
    let addr = handle.local_addr();
    let response = tokio::task::spawn_blocking(move || get(addr, "/v1/health")).await.unwrap();
    assert!(response.starts_with("HTTP/1.1 200"), "{response}");
    assert!(response.ends_with(r#"{"status":"ok","snapshot_id":null}"#), "{response}");

    let mut taken = ServiceConfig::new(dir.path(), addr.port());
    taken.addr = addr;
    match serve(taken).await {
        Err(ServiceError::Bind { addr: a, .. }) => assert_eq!(a, addr),
        Err(e) => panic!("unexpected error {e}"),
        Ok(_) => panic!("second bind on {addr} succeeded"),
    }
    handle.shutdown().await.unwrap();
}
