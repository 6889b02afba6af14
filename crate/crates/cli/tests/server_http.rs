//! HTTP session service behavior over a real socket.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{SocketAddr, TcpStream};
use std::time::Duration;

use colorbatch::server::SimServer;
use serde_json::{json, Value};

/// Minimal HTTP/1.1 client: reads the status line and headers, then
/// exactly Content-Length body bytes.
fn raw_request(addr: SocketAddr, request: &str) -> (u16, String) {
    let mut stream = TcpStream::connect(addr).expect("connect");
    stream
        .set_read_timeout(Some(Duration::from_secs(10)))
        .unwrap();
    stream.write_all(request.as_bytes()).expect("send");
    let mut reader = BufReader::new(stream);
    let mut status_line = String::new();
    reader.read_line(&mut status_line).expect("status line");
    let status: u16 = status_line
        .split_whitespace()
        .nth(1)
        .expect("status code")
        .parse()
        .expect("numeric status");
    let mut content_length = 0usize;
    loop {
        let mut line = String::new();
        reader.read_line(&mut line).expect("header line");
        let line = line.trim_end();
        if line.is_empty() {
            break;
        }
        if let Some(v) = line
            .to_ascii_lowercase()
            .strip_prefix("content-length:")
            .map(str::trim)
        {
            content_length = v.parse().expect("content length");
        }
    }
    let mut body = vec![0u8; content_length];
    reader.read_exact(&mut body).expect("body");
    (status, String::from_utf8(body).expect("utf8 body"))
}

fn request(addr: SocketAddr, method: &str, path: &str, body: Option<&Value>) -> (u16, Value) {
    let payload = body.map(|b| b.to_string()).unwrap_or_default();
    let req = format!(
        "{method} {path} HTTP/1.1\r\nHost: localhost\r\nContent-Type: application/json\r\n\
         Content-Length: {}\r\nConnection: close\r\n\r\n{payload}",
        payload.len()
    );
    let (status, body_text) = raw_request(addr, &req);
    let value = if body_text.trim().is_empty() {
        Value::Null
    } else {
        serde_json::from_str(&body_text).expect("json body")
    };
    (status, value)
}

fn start() -> SimServer {
    SimServer::start("127.0.0.1:0", 2).expect("start server")
}

#[test]
fn create_session_returns_observation_and_masks() {
    let server = start();
    let addr = server.local_addr();
    let (status, body) = request(
        addr,
        "POST",
        "/sessions",
        Some(&json!({"scenario": [2, 2, 3]})),
    );
    assert_eq!(status, 201, "{body}");
    assert_eq!(body["observation"].as_array().unwrap().len(), 27);
    assert_eq!(body["structural_mask"].as_array().unwrap().len(), 25);
    assert_eq!(body["heuristic_mask"].as_array().unwrap().len(), 25);
    assert_eq!(body["scenario_len"], 3);
}

#[test]
fn invalid_config_is_400_and_bad_scenario_422() {
    let server = start();
    let addr = server.local_addr();
    let (status, _) = request(
        addr,
        "POST",
        "/sessions",
        Some(&json!({"plant": {"num_buffers": 5, "buffer_depth": 5, "num_colors": 0, "discount": 0.99},
                      "scenario": [1]})),
    );
    assert_eq!(status, 400);
    let (status, _) = request(addr, "POST", "/sessions", Some(&json!({"scenario": [9]})));
    assert_eq!(status, 422);
    let (status, _) = request(addr, "POST", "/sessions", Some(&json!({})));
    assert_eq!(status, 400);
}

#[test]
fn distribution_seed_is_deterministic() {
    let server = start();
    let addr = server.local_addr();
    let body = json!({"distribution": [0.5, 0.5], "len": 40, "seed": 99});
    let (_, a) = request(addr, "POST", "/sessions", Some(&body));
    let (_, b) = request(addr, "POST", "/sessions", Some(&body));
    assert_eq!(a["observation"], b["observation"]);
    let (_, snap_a) = request(
        addr,
        "GET",
        &format!("/sessions/{}", a["session_id"].as_str().unwrap()),
        None,
    );
    let (_, snap_b) = request(
        addr,
        "GET",
        &format!("/sessions/{}", b["session_id"].as_str().unwrap()),
        None,
    );
    assert_eq!(snap_a["pending"], snap_b["pending"]);
}

#[test]
fn step_applies_action_and_rejects_invalid_atomically() {
    let server = start();
    let addr = server.local_addr();
    let (_, created) = request(
        addr,
        "POST",
        "/sessions",
        Some(&json!({"scenario": [3, 1]})),
    );
    let id = created["session_id"].as_str().unwrap().to_string();

    // hold into lane 0 (action (0, 1) = flat 1): no emission
    let (status, step) = request(
        addr,
        "POST",
        &format!("/sessions/{id}/step"),
        Some(&json!({"action": 1})),
    );
    assert_eq!(status, 200, "{step}");
    assert_eq!(step["emitted_color"], Value::Null);
    assert_eq!(step["inserted"], true);
    assert_eq!(step["done"], false);

    let (_, before) = request(addr, "GET", &format!("/sessions/{id}"), None);
    // out-of-range action → 409 with mask echo, state unchanged
    let (status, err) = request(
        addr,
        "POST",
        &format!("/sessions/{id}/step"),
        Some(&json!({"action": 999})),
    );
    assert_eq!(status, 409);
    assert!(err["structural_mask"].is_array());
    let (_, after) = request(addr, "GET", &format!("/sessions/{id}"), None);
    assert_eq!(before, after, "failed step must not change state");
}

#[test]
fn finished_session_is_read_only() {
    let server = start();
    let addr = server.local_addr();
    let (_, created) = request(addr, "POST", "/sessions", Some(&json!({"scenario": [3]})));
    let id = created["session_id"].as_str().unwrap().to_string();
    let (status, step) = request(
        addr,
        "POST",
        &format!("/sessions/{id}/step"),
        Some(&json!({"action": 0})),
    );
    assert_eq!(status, 200);
    assert_eq!(step["done"], true);
    assert_eq!(step["emitted_color"], 3);
    assert_eq!(step["structural_mask"].as_array().unwrap().len(), 0);

    let (status, _) = request(
        addr,
        "POST",
        &format!("/sessions/{id}/step"),
        Some(&json!({"action": 0})),
    );
    assert_eq!(status, 410);
    // snapshot still works
    let (status, snap) = request(addr, "GET", &format!("/sessions/{id}"), None);
    assert_eq!(status, 200);
    assert_eq!(snap["done"], true);
}

#[test]
fn snapshot_counts_match_emitted_history() {
    let server = start();
    let addr = server.local_addr();
    let (_, created) = request(
        addr,
        "POST",
        "/sessions",
        Some(&json!({"scenario": [1, 2, 2, 3]})),
    );
    let id = created["session_id"].as_str().unwrap().to_string();
    // four pass-throughs through lane 0 (flat 0)
    for _ in 0..4 {
        let (status, _) = request(
            addr,
            "POST",
            &format!("/sessions/{id}/step"),
            Some(&json!({"action": 0})),
        );
        assert_eq!(status, 200);
    }
    let (_, snap) = request(addr, "GET", &format!("/sessions/{id}"), None);
    assert_eq!(snap["emitted"], json!([1, 2, 2, 3]));
    assert_eq!(snap["color_changes"], 2);
    assert_eq!(snap["dup"], 0);
    assert!(snap["buffers"].as_array().unwrap().iter().all(|b| b.as_array().unwrap().is_empty()));
}

#[test]
fn delete_purges_session() {
    let server = start();
    let addr = server.local_addr();
    let (_, created) = request(addr, "POST", "/sessions", Some(&json!({"scenario": [1]})));
    let id = created["session_id"].as_str().unwrap().to_string();
    assert_eq!(server.session_count(), 1);
    let (status, _) = request(addr, "DELETE", &format!("/sessions/{id}"), None);
    assert_eq!(status, 204);
    assert_eq!(server.session_count(), 0);
    let (status, _) = request(addr, "GET", &format!("/sessions/{id}"), None);
    assert_eq!(status, 404);
}

#[test]
fn content_type_is_enforced() {
    let server = start();
    let addr = server.local_addr();
    let payload = json!({"scenario": [1]}).to_string();
    let req = format!(
        "POST /sessions HTTP/1.1\r\nHost: localhost\r\nContent-Length: {}\r\n\
         Connection: close\r\n\r\n{payload}",
        payload.len()
    );
    let (status, _) = raw_request(addr, &req);
    assert_eq!(status, 415);
}

#[test]
fn concurrent_sessions_are_independent() {
    let server = start();
    let addr = server.local_addr();
    let handles: Vec<_> = (0..4)
        .map(|i| {
            std::thread::spawn(move || {
                let (_, created) = request(
                    addr,
                    "POST",
                    "/sessions",
                    Some(&json!({"distribution": [0.5, 0.5], "len": 10, "seed": i})),
                );
                let id = created["session_id"].as_str().unwrap().to_string();
                loop {
                    let (status, step) = request(
                        addr,
                        "POST",
                        &format!("/sessions/{id}/step"),
                        Some(&json!({"action": 0})),
                    );
                    assert_eq!(status, 200);
                    if step["done"] == true {
                        break step["color_changes"].as_u64().unwrap();
                    }
                }
            })
        })
        .collect();
    for h in handles {
        h.join().unwrap();
    }
}
