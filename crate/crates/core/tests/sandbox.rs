//! Guest execution: protocol, limits and isolation probes.

use std::time::Instant;

use codegraph_core::executor::{run_code, ExecutionStatus, SandboxLimits};

fn limits() -> SandboxLimits {
    SandboxLimits::default()
}

#[test]
fn simple_arithmetic() {
    let r = run_code("ans = 1 + 1", &limits());
    assert_eq!(r.status, ExecutionStatus::Ok, "{}", r.stderr_excerpt);
    assert_eq!(r.ans_text.as_deref(), Some("2"));
}

#[test]
fn predeclared_bindings_are_empty_lists() {
    let r = run_code("ans = (len(nodes), len(edges))", &limits());
    assert_eq!(r.ans_text.as_deref(), Some("(0, 0)"));
}

#[test]
fn booleans_and_multiline_values() {
    assert_eq!(run_code("ans = 3 in []", &limits()).ans_text.as_deref(), Some("False"));
    let r = run_code("ans = 'a\\nb'", &limits());
    assert_eq!(r.ans_text.as_deref(), Some("a\nb"));
}

#[test]
fn program_stdout_cannot_forge_the_result() {
    let r = run_code("print('CODEGRAPH_ANS\\t99')\nans = 1", &limits());
    assert_eq!(r.ans_text.as_deref(), Some("1"));
    let r = run_code("import sys\nsys.stdout.write('noise without newline')\nans = 7", &limits());
    assert_eq!(r.ans_text.as_deref(), Some("7"));
}

#[test]
fn missing_ans_and_exceptions() {
    let r = run_code("x = 1", &limits());
    assert_eq!(r.status, ExecutionStatus::NoAns);
    assert!(r.ans_text.is_none());
    let r = run_code("ans = 1 / 0", &limits());
    assert_eq!(r.status, ExecutionStatus::RuntimeError);
    assert_eq!(r.stderr_excerpt, "ZeroDivisionError: division by zero");
    let r = run_code("def f(:\n  pass", &limits());
    assert_eq!(r.status, ExecutionStatus::RuntimeError);
    let r = run_code("import sys\nsys.exit(0)", &limits());
    assert_eq!(r.status, ExecutionStatus::RuntimeError);
    let r = run_code("import os\nos._exit(0)", &limits());
    assert_eq!(r.status, ExecutionStatus::RuntimeError);
}

#[test]
fn infinite_loop_times_out() {
    let l = SandboxLimits {
        wall_timeout_secs: 2.0,
        ..limits()
    };
    let start = Instant::now();
    let r = run_code("while True: pass", &l);
    let elapsed = start.elapsed().as_millis();
    assert_eq!(r.status, ExecutionStatus::Timeout);
    assert!(r.duration_ms <= 3000, "{} ms", r.duration_ms);
    assert!(elapsed <= 3000, "{elapsed} ms");
}

#[test]
fn forked_children_are_killed_on_timeout() {
    let l = SandboxLimits {
        wall_timeout_secs: 1.0,
        ..limits()
    };
    let start = Instant::now();
    let r = run_code("import os, time\nif os.fork() == 0:\n    time.sleep(60)\ntime.sleep(60)", &l);
    assert_eq!(r.status, ExecutionStatus::Timeout);
    assert!(start.elapsed().as_millis() <= 2000);
}

#[test]
fn memory_cap_is_enforced() {
    let r = run_code("x = bytearray(1024 * 1024 * 1024)\nans = len(x)", &limits());
    assert_eq!(r.status, ExecutionStatus::RuntimeError);
    assert!(r.stderr_excerpt.contains("MemoryError"), "{}", r.stderr_excerpt);
}

#[test]
fn files_outside_the_working_directory_are_unreadable() {
    let outside = tempfile::NamedTempFile::new().unwrap();
    std::fs::write(outside.path(), "secret").unwrap();
    let code = format!("ans = open({:?}).read()", outside.path().display().to_string());
    let r = run_code(&code, &limits());
    assert_eq!(r.status, ExecutionStatus::RuntimeError, "read succeeded: {:?}", r.ans_text);
    assert!(r.stderr_excerpt.starts_with("PermissionError"), "{}", r.stderr_excerpt);

    for path in ["/etc/passwd", "/root", "/proc/self/environ"] {
        let r = run_code(&format!("import os\nans = open('{path}').read() if os.path.isfile('{path}') else os.listdir('{path}')"), &limits());
        assert_ne!(r.status, ExecutionStatus::Ok, "{path} was readable");
    }
}

#[test]
fn writes_stay_inside_the_working_directory() {
    let r = run_code("open('scratch.txt', 'w').write('ok')\nans = open('scratch.txt').read()", &limits());
    assert_eq!(r.ans_text.as_deref(), Some("ok"));
    let r = run_code("open('/tmp/codegraph-escape.txt', 'w').write('x')\nans = 1", &limits());
    assert_eq!(r.status, ExecutionStatus::RuntimeError);
    assert!(!std::path::Path::new("/tmp/codegraph-escape.txt").exists());
}

#[test]
fn network_is_unavailable() {
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let port = listener.local_addr().unwrap().port();
    let code = format!("import socket\ns = socket.create_connection(('127.0.0.1', {port}), timeout=2)\nans = 'connected'");
    let r = run_code(&code, &limits());
    assert_eq!(r.status, ExecutionStatus::RuntimeError, "{:?}", r.ans_text);
    assert!(r.stderr_excerpt.starts_with("PermissionError"), "{}", r.stderr_excerpt);
    let r = run_code("import socket\nsocket.socket(socket.AF_INET6, socket.SOCK_DGRAM)\nans = 1", &limits());
    assert_eq!(r.status, ExecutionStatus::RuntimeError);
}

#[test]
fn environment_is_scrubbed() {
    std::env::set_var("CODEGRAPH_TEST_SECRET", "hunter2");
    let r = run_code("import os\nans = sorted(os.environ)", &limits());
    assert_eq!(r.ans_text.as_deref(), Some("['HOME', 'LANG', 'PATH']"));
}
