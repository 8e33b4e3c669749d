//! HTTP backend behavior against a scripted in-process server: wire shape,
//! auth, retry/backoff classification, cache replay, and logprob slicing.
//! The injected test clock makes backoff and rate-limit sleeps virtual, so
//! these tests run in milliseconds of wall time.

use std::collections::VecDeque;
use std::io::{Read, Write};
use std::net::TcpListener;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use instrux_core::backend::{
    CompletionBackend, CompletionRequest, HttpBackend, ScoreBackend, ScoreRequest, TestClock,
};
use instrux_core::error::BackendError;
use serde_json::{json, Value};

struct StubServer {
    endpoint: String,
    hits: Arc<AtomicUsize>,
    requests: Arc<Mutex<Vec<String>>>,
}

impl StubServer {
    /// Serve the scripted (status, body) responses in order; anything past
    /// the script gets a 599 so an over-chatty client fails loudly.
    fn start(script: Vec<(u16, String)>) -> StubServer {
        let listener = TcpListener::bind("127.0.0.1:0").expect("bind stub server");
        let endpoint = format!("http://{}/v1/completions", listener.local_addr().unwrap());
        let hits = Arc::new(AtomicUsize::new(0));
        let requests = Arc::new(Mutex::new(Vec::new()));
        let script = Mutex::new(VecDeque::from(script));
        let thread_hits = Arc::clone(&hits);
        let thread_requests = Arc::clone(&requests);

        std::thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(mut stream) = stream else { continue };
                let raw = read_http_request(&mut stream);
                thread_hits.fetch_add(1, Ordering::SeqCst);
                thread_requests.lock().unwrap().push(raw);
                let (status, body) =
                    script.lock().unwrap().pop_front().unwrap_or((599, "{}".to_string()));
                let response = format!(
                    "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                    body.len()
                );
                let _ = stream.write_all(response.as_bytes());
            }
        });
        StubServer { endpoint, hits, requests }
    }

    fn hits(&self) -> usize {
        self.hits.load(Ordering::SeqCst)
    }

    fn request_body(&self, index: usize) -> Value {
        let raw = self.requests.lock().unwrap()[index].clone();
        let body = raw.split("\r\n\r\n").nth(1).expect("request has a body").to_string();
        serde_json::from_str(&body).expect("request body is JSON")
    }

    fn request_headers(&self, index: usize) -> String {
        self.requests.lock().unwrap()[index]
            .split("\r\n\r\n")
            .next()
            .unwrap()
            .to_ascii_lowercase()
    }
}

fn read_http_request(stream: &mut std::net::TcpStream) -> String {
    let mut buffer = Vec::new();
    let mut chunk = [0u8; 1024];
    // read headers
    while !buffer.windows(4).any(|w| w == b"\r\n\r\n") {
        let n = stream.read(&mut chunk).unwrap_or(0);
        if n == 0 {
            break;
        }
        buffer.extend_from_slice(&chunk[..n]);
    }
    let text = String::from_utf8_lossy(&buffer).to_string();
    let content_length: usize = text
        .lines()
        .find_map(|line| {
            let lower = line.to_ascii_lowercase();
            lower.strip_prefix("content-length:").map(|v| v.trim().parse().unwrap_or(0))
        })
        .unwrap_or(0);
    let header_end = text.find("\r\n\r\n").map(|p| p + 4).unwrap_or(buffer.len());
    let mut body_bytes = buffer.len() - header_end;
    while body_bytes < content_length {
        let n = stream.read(&mut chunk).unwrap_or(0);
        if n == 0 {
            break;
        }
        buffer.extend_from_slice(&chunk[..n]);
        body_bytes += n;
    }
    String::from_utf8_lossy(&buffer).to_string()
}

fn backend(server: &StubServer) -> instrux_core::backend::HttpBackendBuilder {
    HttpBackend::builder(&server.endpoint, "test-model")
        .clock(Arc::new(TestClock::new()))
        .requests_per_second(1000)
}

fn completion_request(id: &str) -> CompletionRequest {
    CompletionRequest {
        request_id: id.into(),
        prompt: "convert this".into(),
        n: 1,
        max_tokens: 64,
        temperature: 1.0,
        stop: vec!["\nExample ".into()],
        seed: Some(7),
    }
}

fn ok_completion(text: &str) -> (u16, String) {
    (200, json!({"choices": [{"index": 0, "text": text}]}).to_string())
}

#[test]
fn complete_sends_the_expected_wire_shape() {
    let server = StubServer::start(vec![ok_completion("Definition: A converted task.")]);
    let backend = backend(&server).api_key("sk-test").build().unwrap();

    let texts = backend.complete(&completion_request("r1")).unwrap();
    assert_eq!(texts, vec!["Definition: A converted task.".to_string()]);
    assert_eq!(server.hits(), 1);
    assert_eq!(backend.network_requests(), 1);

    let body = server.request_body(0);
    assert_eq!(body["model"], "test-model");
    assert_eq!(body["prompt"], "convert this");
    assert_eq!(body["n"], 1);
    assert_eq!(body["max_tokens"], 64);
    assert_eq!(body["stop"], json!(["\nExample "]));
    assert_eq!(body["seed"], 7);
    assert!(server.request_headers(0).contains("authorization: bearer sk-test"));
}

#[test]
fn retryable_statuses_are_retried_until_success() {
    let server = StubServer::start(vec![
        (429, r#"{"error": "slow down"}"#.to_string()),
        (500, r#"{"error": "flaky"}"#.to_string()),
        ok_completion("recovered"),
    ]);
    let backend = backend(&server).max_attempts(3).build().unwrap();

    let texts = backend.complete(&completion_request("r1")).unwrap();
    assert_eq!(texts, vec!["recovered".to_string()]);
    assert_eq!(server.hits(), 3);
    assert_eq!(backend.network_requests(), 3, "every attempt counts as a network request");
}

#[test]
fn retries_exhaust_into_a_transport_error() {
    let server = StubServer::start(vec![
        (503, "{}".to_string()),
        (503, "{}".to_string()),
        (503, "{}".to_string()),
        (503, "{}".to_string()),
    ]);
    let backend = backend(&server).max_attempts(3).build().unwrap();

    let err = backend.complete(&completion_request("r9")).unwrap_err();
    match err {
        BackendError::Transport { request_id, attempts, .. } => {
            assert_eq!(request_id, "r9");
            assert_eq!(attempts, 3);
        }
        other => panic!("expected transport error, got {other:?}"),
    }
    assert_eq!(server.hits(), 3, "max_attempts includes the first try");
}

#[test]
fn non_retryable_status_fails_immediately_with_the_body() {
    let server = StubServer::start(vec![(404, r#"{"error": "no such model"}"#.to_string())]);
    let backend = backend(&server).build().unwrap();

    let err = backend.complete(&completion_request("r2")).unwrap_err();
    match err {
        BackendError::Protocol { message, body_excerpt, .. } => {
            assert!(message.contains("404"), "{message}");
            assert!(body_excerpt.contains("no such model"), "{body_excerpt}");
        }
        other => panic!("expected protocol error, got {other:?}"),
    }
    assert_eq!(server.hits(), 1, "client errors are not retried");
}

#[test]
fn garbage_json_and_choice_miscounts_are_protocol_errors() {
    let server = StubServer::start(vec![
        (200, "not json at all".to_string()),
        (200, json!({"choices": [{"index": 0, "text": "only one"}]}).to_string()),
    ]);
    let backend = backend(&server).build().unwrap();

    let err = backend.complete(&completion_request("r1")).unwrap_err();
    assert!(matches!(err, BackendError::Protocol { .. }), "{err:?}");

    let mut two = completion_request("r2");
    two.n = 2;
    let err = backend.complete(&two).unwrap_err();
    match err {
        BackendError::Protocol { message, .. } => {
            assert!(message.contains("expected 2 choices"), "{message}");
        }
        other => panic!("expected protocol error, got {other:?}"),
    }
}

#[test]
fn cache_replays_identical_requests_without_network() {
    let dir = tempfile::tempdir().unwrap();
    let server = StubServer::start(vec![ok_completion("cached answer")]);
    let backend = backend(&server).cache_dir(dir.path()).build().unwrap();

    let first = backend.complete(&completion_request("r1")).unwrap();
    let second = backend.complete(&completion_request("r1-different-tag")).unwrap();
    assert_eq!(first, second);
    assert_eq!(server.hits(), 1, "second call is a cache hit");
    assert_eq!(backend.network_requests(), 1);

    // a fresh backend over the same cache directory needs no network at all
    let warm = StubServer::start(vec![]);
    let replay = HttpBackend::builder(&server.endpoint, "test-model")
        .clock(Arc::new(TestClock::new()))
        .requests_per_second(1000)
        .cache_dir(dir.path())
        .build()
        .unwrap();
    let third = replay.complete(&completion_request("r1")).unwrap();
    assert_eq!(third, first);
    assert_eq!(replay.network_requests(), 0);
    assert_eq!(warm.hits(), 0);
}

#[test]
fn different_bodies_do_not_share_cache_entries() {
    let dir = tempfile::tempdir().unwrap();
    let server = StubServer::start(vec![ok_completion("answer a"), ok_completion("answer b")]);
    let backend = backend(&server).cache_dir(dir.path()).build().unwrap();

    let a = backend.complete(&completion_request("r1")).unwrap();
    let mut other = completion_request("r1");
    other.seed = Some(8);
    let b = backend.complete(&other).unwrap();
    assert_ne!(a, b);
    assert_eq!(server.hits(), 2);
}

#[test]
fn score_slices_continuation_tokens_by_text_offset() {
    // prefix "ab cd" (5 bytes), continuation " ef"
    let logprobs = json!({
        "tokens": ["ab", " cd", " ef"],
        "token_logprobs": [null, -0.1, -0.7],
        "text_offset": [0, 2, 5],
    });
    let server = StubServer::start(vec![(
        200,
        json!({"choices": [{"index": 0, "text": "ab cd ef", "logprobs": logprobs}]}).to_string(),
    )]);
    let backend = backend(&server).supports_logprobs(true).build().unwrap();

    let response = backend
        .score(&ScoreRequest {
            request_id: "s1".into(),
            prefix: "ab cd".into(),
            continuation: " ef".into(),
        })
        .unwrap();
    assert_eq!(response.token_logprobs, vec![-0.7]);
    assert_eq!(response.token_count, 1);
    assert!(response.exact_alignment);

    // the scoring request's wire shape: echoed concatenation, no sampling
    let body = server.request_body(0);
    assert_eq!(body["prompt"], "ab cd ef");
    assert_eq!(body["echo"], true);
    assert_eq!(body["logprobs"], 0);
    assert_eq!(body["max_tokens"], 0);
    assert_eq!(body["temperature"], 0.0);
}

#[test]
fn score_flags_tokenizations_that_straddle_the_boundary() {
    let logprobs = json!({
        "tokens": ["ab", " cde", "f"],
        "token_logprobs": [null, -0.2, -0.3],
        "text_offset": [0, 2, 6],
    });
    let server = StubServer::start(vec![(
        200,
        json!({"choices": [{"index": 0, "text": "ab cdef", "logprobs": logprobs}]}).to_string(),
    )]);
    let backend = backend(&server).supports_logprobs(true).build().unwrap();

    let response = backend
        .score(&ScoreRequest {
            request_id: "s2".into(),
            prefix: "ab cd".into(),
            continuation: "ef".into(),
        })
        .unwrap();
    assert!(!response.exact_alignment, "token straddles the prefix boundary");
    assert_eq!(response.token_logprobs, vec![-0.3]);
}

#[test]
fn score_rejects_null_logprobs_and_short_token_streams() {
    let bad_null = json!({
        "tokens": ["ab", " ef"],
        "token_logprobs": [null, null],
        "text_offset": [0, 2],
    });
    let short = json!({
        "tokens": ["ab"],
        "token_logprobs": [null],
        "text_offset": [0],
    });
    let server = StubServer::start(vec![
        (200, json!({"choices": [{"index": 0, "logprobs": bad_null}]}).to_string()),
        (200, json!({"choices": [{"index": 0, "logprobs": short}]}).to_string()),
    ]);
    let backend = backend(&server).supports_logprobs(true).build().unwrap();

    let err = backend
        .score(&ScoreRequest { request_id: "s3".into(), prefix: "ab".into(), continuation: " ef".into() })
        .unwrap_err();
    assert!(err.to_string().contains("null logprob"), "{err}");

    let err = backend
        .score(&ScoreRequest { request_id: "s4".into(), prefix: "ab".into(), continuation: " ef".into() })
        .unwrap_err();
    assert!(err.to_string().contains("do not cover"), "{err}");
}

#[test]
fn scoring_without_logprob_support_is_a_capability_error() {
    let server = StubServer::start(vec![]);
    let backend = backend(&server).build().unwrap();
    let err = backend
        .score(&ScoreRequest { request_id: "s5".into(), prefix: "p".into(), continuation: " c".into() })
        .unwrap_err();
    assert!(matches!(err, BackendError::Capability(_)), "{err:?}");
    assert_eq!(server.hits(), 0);
}
