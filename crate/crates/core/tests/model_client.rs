//! Chat client against a loopback stub server, and the response cache.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::thread;

use codegraph_core::model::{
    cached_complete, complete, fingerprint, CacheMode, ChatClient, CompletionBackend, ModelConfig, ModelError,
    Origin, ResponseCache,
};
use codegraph_core::prompting::{build_prompt, Method};
use codegraph_core::{make_task_instance, EncodingKind, Graph, TaskKind};

const KEY_VAR: &str = "CODEGRAPH_STUB_KEY";
const KEY: &str = "sk-test-0123456789abcdef";

/// Serves the scripted `(status, body)` replies in order, one per connection,
/// and records each raw request.
fn stub(replies: Vec<(u16, String)>) -> (String, Arc<Mutex<Vec<String>>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
    let seen = Arc::new(Mutex::new(Vec::new()));
    let log = Arc::clone(&seen);
    thread::spawn(move || {
        for (status, body) in replies {
            let (mut stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut head = String::new();
            let mut length = 0;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    length = v.trim().parse().unwrap();
                }
                head.push_str(&line);
                if line == "\r\n" || line.is_empty() {
                    break;
                }
            }
            let mut payload = vec![0; length];
            reader.read_exact(&mut payload).unwrap();
            log.lock().unwrap().push(head + &String::from_utf8_lossy(&payload));
            let reply = format!(
                "HTTP/1.1 {status} Stub\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            );
            stream.write_all(reply.as_bytes()).unwrap();
        }
    });
    (url, seen)
}

fn ok_body(text: &str) -> String {
    serde_json::json!({"choices": [{"message": {"role": "assistant", "content": text}}]}).to_string()
}

fn config(url: &str) -> ModelConfig {
    std::env::set_var(KEY_VAR, KEY);
    let mut c = ModelConfig::new("stub-model", url, KEY_VAR, 0.7);
    c.initial_backoff_ms = 1;
    c
}

fn client() -> ChatClient {
    ChatClient::new(std::time::Duration::from_secs(5))
}

#[test]
fn echo_ok_and_wire_format() {
    let (url, seen) = stub(vec![(200, ok_body("OK"))]);
    let r = complete("hello", &config(&url), &client()).unwrap();
    assert_eq!(r.text, "OK");
    assert_eq!(r.origin, Origin::Live);
    assert_eq!(r.request_fingerprint, fingerprint("stub-model", "hello", 0.7, 1024));
    let request = seen.lock().unwrap()[0].clone();
    assert!(request.starts_with("POST /v1/chat/completions"));
    let body: serde_json::Value = serde_json::from_str(request.split("\r\n\r\n").nth(1).unwrap()).unwrap();
    assert_eq!(body["messages"][0]["role"], "user");
    assert_eq!(body["messages"][0]["content"], "hello");
    assert_eq!(body["model"], "stub-model");
}

#[test]
fn auth_failure_is_distinct_and_not_retried() {
    let (url, seen) = stub(vec![(401, "{}".into())]);
    let err = complete("hi", &config(&url), &client()).unwrap_err();
    assert!(matches!(err, ModelError::Auth(401)));
    assert_eq!(seen.lock().unwrap().len(), 1);
    assert!(!err.to_string().contains(KEY));
}

#[test]
fn rate_limit_retries_then_gives_up() {
    let replies = vec![(429, "{}".to_string()); 3];
    let (url, seen) = stub(replies);
    let err = complete("hi", &config(&url), &client()).unwrap_err();
    assert!(matches!(err, ModelError::RateLimited { attempts: 3 }), "{err}");
    assert_eq!(seen.lock().unwrap().len(), 3);
}

#[test]
fn transient_failure_then_success() {
    let (url, _) = stub(vec![(503, "busy".into()), (200, ok_body("fine"))]);
    assert_eq!(complete("hi", &config(&url), &client()).unwrap().text, "fine");
}

#[test]
fn malformed_payload() {
    let (url, _) = stub(vec![(200, "{\"choices\": []}".into())]);
    assert!(matches!(complete("hi", &config(&url), &client()), Err(ModelError::Malformed(_))));
}

#[test]
fn unreachable_endpoint_is_a_transport_error() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let url = format!("http://127.0.0.1:{port}/v1/chat/completions");
    let err = complete("hi", &config(&url), &client()).unwrap_err();
    assert!(matches!(err, ModelError::Transport { attempts: 3, .. }), "{err}");
    assert!(!format!("{err:?}").contains(KEY));
}

#[test]
fn missing_key() {
    let mut c = config("http://127.0.0.1:9/");
    c.api_key_env = "CODEGRAPH_DEFINITELY_UNSET".into();
    assert!(matches!(complete("hi", &c, &client()), Err(ModelError::MissingApiKey(_))));
}

struct Fixed(&'static str);

impl CompletionBackend for Fixed {
    fn complete_once(&self, _: &str, _: &ModelConfig) -> Result<String, ModelError> {
        Ok(self.0.to_string())
    }
}

fn bundle() -> codegraph_core::PromptBundle {
    let g = Graph::new("g", 5, [(0, 1), (1, 2)]).unwrap();
    let inst = make_task_instance(&g, TaskKind::EdgeCount, 1).unwrap();
    build_prompt(Method::ZeroShot, &g, &inst, &[], EncodingKind::Adjacency).unwrap()
}

#[test]
fn record_then_replay_is_identical() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cache.jsonl");
    let c = config("http://127.0.0.1:9/");
    let b = bundle();
    let cache = ResponseCache::open(&path).unwrap();
    let live = cached_complete(&b, &c, &Fixed("The answer is 2."), &cache, CacheMode::Record).unwrap();
    assert_eq!(live.origin, Origin::Live);

    let reopened = ResponseCache::open(&path).unwrap();
    let replayed = cached_complete(&b, &c, &Fixed("unused"), &reopened, CacheMode::Replay).unwrap();
    assert_eq!(replayed.text, live.text);
    assert_eq!(replayed.origin, Origin::Cache);
    assert_eq!(replayed.request_fingerprint, live.request_fingerprint);

    let line = std::fs::read_to_string(&path).unwrap();
    let entry: serde_json::Value = serde_json::from_str(line.trim()).unwrap();
    for field in ["fingerprint", "model", "text", "timestamp"] {
        assert!(entry.get(field).is_some(), "{field}");
    }
    assert!(!line.contains(KEY));
}

#[test]
fn replay_miss_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let cache = ResponseCache::open(dir.path().join("empty.jsonl")).unwrap();
    let err = cached_complete(&bundle(), &config("x"), &Fixed("live"), &cache, CacheMode::Replay).unwrap_err();
    assert!(matches!(err, ModelError::CacheMiss(_)));
}

#[test]
fn passthrough_ignores_the_cache() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.jsonl");
    let cache = ResponseCache::open(&path).unwrap();
    let r = cached_complete(&bundle(), &config("x"), &Fixed("live"), &cache, CacheMode::Passthrough).unwrap();
    assert_eq!(r.origin, Origin::Live);
    assert!(!path.exists());
}

#[test]
fn concurrent_appends_stay_line_delimited() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.jsonl");
    let cache = Arc::new(ResponseCache::open(&path).unwrap());
    let handles: Vec<_> = (0..8)
        .map(|t| {
            let cache = Arc::clone(&cache);
            thread::spawn(move || {
                for i in 0..25 {
                    cache.put(&format!("fp-{t}-{i}"), "m", &"x".repeat(500)).unwrap();
                }
            })
        })
        .collect();
    for h in handles {
        h.join().unwrap();
    }
    assert_eq!(ResponseCache::open(&path).unwrap().len(), 200);
}

#[test]
fn api_key_only_travels_in_the_authorization_header() {
    let (url, seen) = stub(vec![(200, ok_body("OK")), (401, "{}".into())]);
    let c = config(&url);
    complete("hello", &c, &client()).unwrap();
    let err = complete("hello", &c, &client()).unwrap_err();
    for text in [format!("{err}"), format!("{err:?}"), format!("{c:?}"), serde_json::to_string(&c).unwrap()] {
        assert!(!text.contains(KEY), "key leaked into {text}");
    }
    let request = seen.lock().unwrap()[0].clone();
    let (head, body) = request.split_once("\r\n\r\n").unwrap();
    assert!(!body.contains(KEY));
    let auth: Vec<&str> = head.lines().filter(|l| l.contains(KEY)).collect();
    assert_eq!(auth.len(), 1);
    assert!(auth[0].to_ascii_lowercase().starts_with("authorization: bearer "));
}
