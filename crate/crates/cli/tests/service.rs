mod common;

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::process::{Command, Stdio};
use std::sync::{Arc, OnceLock};

use axum::body::Body;
use axum::http::{header, Method, Request, StatusCode};
use cim_cli::service::{router, AppState};
use cim_core::fixtures::olympic;
use cim_core::query::{parse_cql, QueryOptions};
use cim_core::{Warehouse, WarehouseOptions};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

fn ready_state() -> Arc<AppState> {
    static W: OnceLock<Arc<AppState>> = OnceLock::new();
    W.get_or_init(|| {
        let state = AppState::new();
        state.set_ready(Warehouse::olympic(olympic::DEFAULT_SEED, 2_000));
        state
    })
    .clone()
}

async fn send(state: Arc<AppState>, request: Request<Body>) -> (StatusCode, Value) {
    let response = router(state).oneshot(request).await.unwrap();
    let status = response.status();
    let bytes = response.into_body().collect().await.unwrap().to_bytes();
    let body = if bytes.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&bytes).unwrap()
    };
    (status, body)
}

fn get(uri: &str) -> Request<Body> {
    Request::get(uri).body(Body::empty()).unwrap()
}

fn post(uri: &str, content_type: &str, body: impl Into<Body>) -> Request<Body> {
    Request::post(uri)
        .header(header::CONTENT_TYPE, content_type)
        .body(body.into())
        .unwrap()
}

fn example_json() -> String {
    serde_json::to_string(&parse_cql(olympic::EXAMPLE_QUERY).unwrap()).unwrap()
}

#[tokio::test]
async fn endpoints_wait_for_readiness() {
    let state = AppState::new();
    let (status, body) = send(state.clone(), get("/health")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, json!({ "apiVersion": 1, "status": "loading", "ready": false }));
    for uri in ["/model", "/views", "/levels/Weekend/members"] {
        let (status, body) = send(state.clone(), get(uri)).await;
        assert_eq!(status, StatusCode::SERVICE_UNAVAILABLE, "{uri}");
        assert_eq!(body["code"], "not_ready");
    }
    let (status, _) = send(state.clone(), post("/query", "application/json", example_json())).await;
    assert_eq!(status, StatusCode::SERVICE_UNAVAILABLE);

    state.set_ready(Warehouse::olympic(1, 10));
    let (_, body) = send(state, get("/health")).await;
    assert_eq!(body["ready"], true);
}

#[tokio::test]
async fn model_is_the_graph_document() {
    let (status, body) = send(ready_state(), get("/model")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["apiVersion"], 1);
    let edges = body["edges"].as_array().unwrap();
    assert!(
        edges
            .iter()
            .any(|e| e["source"] == "level:City" && e["target"] == "level:Country"),
        "no City->Country edge"
    );

    let head = Request::builder()
        .method(Method::HEAD)
        .uri("/model")
        .body(Body::empty())
        .unwrap();
    let (status, body) = send(ready_state(), head).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, Value::Null);
}

#[tokio::test]
async fn views_carry_the_weekend_condition() {
    let (status, body) = send(ready_state(), get("/views")).await;
    assert_eq!(status, StatusCode::OK);
    let views = body["views"].as_array().unwrap();
    assert_eq!(views.len(), 29);
    let weekend = views.iter().find(|v| v["name"] == "level:Weekend").unwrap();
    let text = weekend.to_string();
    assert!(text.contains("\"Sat\"") && text.contains("\"Sun\""), "{text}");
}

#[tokio::test]
async fn views_report_compile_errors() {
    let mut mdl = olympic::mdl();
    mdl.fragments.clear();
    let data = olympic::generate_data(1, 10);
    let w = Warehouse::from_dataset(olympic::cdl(), olympic::sdl(), mdl, &data, WarehouseOptions::default()).unwrap();
    let state = AppState::new();
    state.set_ready(w);
    let (status, body) = send(state.clone(), get("/views")).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["code"], "compile_errors");
    assert!(!body["details"]["diagnostics"].as_array().unwrap().is_empty());

    let (status, body) = send(state, get("/levels/Weekend/members")).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["code"], "unmapped");
}

#[tokio::test]
async fn unknown_paths_and_levels_are_not_found() {
    let (status, body) = send(ready_state(), get("/nowhere")).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["code"], "not_found");
    let (status, body) = send(ready_state(), get("/levels/Wekend/members")).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["details"]["candidates"][0], "Weekend");
}

#[tokio::test]
async fn weekend_members_are_saturdays_and_sundays() {
    let (status, body) = send(ready_state(), get("/levels/Weekend/members")).await;
    assert_eq!(status, StatusCode::OK);
    let columns = body["columns"].as_array().unwrap();
    let dow = columns.iter().position(|c| c == "DayOfWeek").unwrap();
    let rows = body["rows"].as_array().unwrap();
    let w = Warehouse::olympic(olympic::DEFAULT_SEED, 0);
    let days = w.store.table("Day").unwrap();
    let i = days.column_index("DayOfWeek").unwrap();
    let weekend_days = days
        .rows
        .iter()
        .filter(|r| r[i].to_text() == "Sat" || r[i].to_text() == "Sun")
        .count();
    assert_eq!(rows.len(), weekend_days);
    assert!(rows.iter().all(|r| r[dow] == "Sat" || r[dow] == "Sun"));
}

#[tokio::test]
async fn query_matches_the_oracle() {
    let state = ready_state();
    let (status, body) = send(state.clone(), post("/query", "application/json", example_json())).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    let w = Warehouse::olympic(olympic::DEFAULT_SEED, 2_000);
    let expected = w
        .oracle()
        .execute(&parse_cql(olympic::EXAMPLE_QUERY).unwrap(), QueryOptions::default())
        .unwrap();
    let mut expected_body = expected.to_json();
    expected_body["apiVersion"] = json!(1);
    assert_eq!(body, expected_body);

    let (status, text_body) = send(state, post("/query", "text/plain", olympic::EXAMPLE_QUERY)).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(text_body, body);
}

#[tokio::test]
async fn query_options_come_from_the_query_string() {
    let q = json!({ "factRelationship": "Attends", "aggregation": { "function": "count" },
                    "rollups": { "Event": "Sport" } });
    let (status, body) = send(
        ready_state(),
        post("/query?keepUnmentioned=true", "application/json", q.to_string()),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!(body["columns"].as_array().unwrap().len(), 6);
    let (status, _) = send(
        ready_state(),
        post("/query?keepUnmentioned=maybe", "application/json", q.to_string()),
    )
    .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn query_errors_map_to_statuses() {
    let cases = [
        (
            "application/json",
            String::new(),
            StatusCode::BAD_REQUEST,
            "bad_request",
        ),
        (
            "application/json",
            "{\"factRelationship\":".to_owned(),
            StatusCode::BAD_REQUEST,
            "malformed_query",
        ),
        (
            "text/plain",
            "AGGREGATE FROM".to_owned(),
            StatusCode::BAD_REQUEST,
            "malformed_query",
        ),
        (
            "text/plain",
            "AGGREGATE sum(Tickets) FROM Attends".to_owned(),
            StatusCode::UNPROCESSABLE_ENTITY,
            "unresolved_name",
        ),
        (
            "text/plain",
            "AGGREGATE sum(TicketPrice) FROM Attends ROLLUP Date TO Sport".to_owned(),
            StatusCode::UNPROCESSABLE_ENTITY,
            "invalid_query",
        ),
    ];
    for (content_type, body, status, code) in cases {
        let (s, b) = send(ready_state(), post("/query", content_type, body.clone())).await;
        assert_eq!((s, b["code"].as_str().unwrap()), (status, code), "{body}: {b}");
        assert_eq!(b["apiVersion"], 1);
    }
    let (_, b) = send(
        ready_state(),
        post("/query", "text/plain", "AGGREGATE sum(Tickets) FROM Attends"),
    )
    .await;
    assert_eq!(b["details"]["kind"], "measure");
}

#[test]
fn a_busy_port_is_an_environment_failure() {
    let taken = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let port = taken.local_addr().unwrap().port().to_string();
    let ws = common::fixture_dir();
    let o = common::in_workspace(&ws, ["serve", "--port", &port]);
    assert_eq!(o.code, 2);
    assert!(o.stderr.contains("cannot bind"), "{}", o.stderr);
}

fn http_get(addr: &str, path: &str) -> (u16, String) {
    let mut stream = TcpStream::connect(addr).unwrap();
    write!(
        stream,
        "GET {path} HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\n\r\n"
    )
    .unwrap();
    let mut response = String::new();
    stream.read_to_string(&mut response).unwrap();
    let status = response[9..12].parse().unwrap();
    let body = response
        .split_once("\r\n\r\n")
        .map(|(_, b)| b.to_owned())
        .unwrap_or_default();
    (status, body)
}

#[test]
fn the_binary_serves_the_fixture() {
    let mut child = Command::new(env!("CARGO_BIN_EXE_cim"))
        .args([
            "--workspace",
            common::fixture_dir().to_str().unwrap(),
            "serve",
            "--port",
            "0",
        ])
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap())
        .read_line(&mut line)
        .unwrap();
    let addr = line.trim().strip_prefix("listening on http://").unwrap().to_owned();
    let (status, _) = http_get(&addr, "/health");
    assert_eq!(status, 200);
    let mut ready = false;
    for _ in 0..200 {
        if http_get(&addr, "/health").1.contains("\"ready\":true") {
            ready = true;
            break;
        }
        std::thread::sleep(std::time::Duration::from_millis(50));
    }
    assert!(ready);
    let (status, body) = http_get(&addr, "/levels/Year/members");
    assert_eq!(status, 200, "{body}");
    child.kill().unwrap();
    child.wait().unwrap();
}
