use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};

use kgau_core::llm::{
    sample_candidates, Backend, LiveBackend, LiveConfig, MockBackend, ModelProfile, ReplayStore, SampleError, SamplingConfig,
};
use kgau_core::promptkit::{build_prompt, PromptMode};
use kgau_core::routine::Routine;
use serde_json::Value;

fn bundle(r: Routine) -> kgau_core::promptkit::PromptBundle {
    build_prompt(r, PromptMode::NameToCcode, None).unwrap()
}

fn cfg(n: usize) -> SamplingConfig {
    SamplingConfig { n_samples: n, ..Default::default() }
}

#[test]
fn mock_serves_corpus_in_order() {
    let corpus = vec!["/* a */".to_string(), "/* b */".to_string(), "/* c */".to_string()];
    let m = MockBackend::uniform(corpus.clone());
    let got = sample_candidates(&m, &bundle(Routine::Dgemm), &ModelProfile::gpt_4_1(), &cfg(3)).unwrap();
    assert_eq!(got.iter().map(|c| c.source.clone()).collect::<Vec<_>>(), corpus);
    assert_eq!(got.iter().map(|c| c.sample_index).collect::<Vec<_>>(), vec![0, 1, 2]);
    let again = sample_candidates(&m, &bundle(Routine::Dgemm), &ModelProfile::gpt_4_1(), &cfg(3)).unwrap();
    assert_eq!(got, again);
}

#[test]
fn mock_loads_per_routine_dirs() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::create_dir(dir.path().join("daxpy")).unwrap();
    std::fs::write(dir.path().join("daxpy/b.c"), "B").unwrap();
    std::fs::write(dir.path().join("daxpy/a.c"), "A").unwrap();
    std::fs::write(dir.path().join("daxpy/notes.txt"), "x").unwrap();
    let m = MockBackend::load(dir.path()).unwrap();
    assert_eq!(m.entries(Routine::Daxpy), ["A".to_string(), "B".to_string()]);
    let err = sample_candidates(&m, &bundle(Routine::Dgemm), &ModelProfile::gpt_4_1(), &cfg(1)).unwrap_err();
    assert!(matches!(err, SampleError::Terminal(ref m) if m.contains("dgemm")), "{err}");
}

#[test]
fn replay_serves_stored_candidates_and_reports_misses() {
    let dir = tempfile::tempdir().unwrap();
    let store = ReplayStore::new(dir.path());
    let mock = MockBackend::uniform((0..10).map(|i| format!("/* {i} */")).collect());
    let b = bundle(Routine::Dgemm);
    let p = ModelProfile::o4_mini();
    let orig = sample_candidates(&mock, &b, &p, &cfg(10)).unwrap();
    for c in &orig {
        store.save(c).unwrap();
    }
    let replay = ReplayStore::load(dir.path()).unwrap();
    let served = sample_candidates(&replay, &b, &p, &cfg(10)).unwrap();
    assert_eq!(served, orig);

    std::fs::remove_file(dir.path().join("o4-mini/NameToCcode/dgemm/7.c")).unwrap();
    match sample_candidates(&replay, &b, &p, &cfg(10)) {
        Err(e @ SampleError::ReplayMiss(_)) => assert!(e.to_string().contains("dgemm/NameToCcode/o4-mini/7"), "{e}"),
        other => panic!("{other:?}"),
    }
}

/// Minimal HTTP server answering scripted (status, body) pairs and
/// recording request bodies and headers.
struct FakeServer {
    url: String,
    seen: Arc<Mutex<Vec<(String, Value)>>>,
}

fn fake_server(script: Vec<(u16, String)>) -> FakeServer {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
    let seen = Arc::new(Mutex::new(Vec::new()));
    let log = seen.clone();
    std::thread::spawn(move || {
        for (status, body) in script {
            let Ok((stream, _)) = listener.accept() else { return };
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut headers = String::new();
            let mut len = 0usize;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if line == "\r\n" || line.is_empty() {
                    break;
                }
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap();
                }
                headers.push_str(&line);
            }
            let mut buf = vec![0u8; len];
            reader.read_exact(&mut buf).unwrap();
            log.lock().unwrap().push((headers, serde_json::from_slice(&buf).unwrap()));
            let mut s = stream;
            write!(
                s,
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            )
            .unwrap();
        }
    });
    FakeServer { url, seen }
}

fn ok_body(text: &str) -> String {
    serde_json::json!({
        "choices": [{ "message": { "role": "assistant", "content": text } }],
        "usage": { "prompt_tokens": 250000, "completion_tokens": 125000,
                   "completion_tokens_details": { "reasoning_tokens": 100000 } }
    })
    .to_string()
}

fn live(url: &str, retries: u32) -> LiveBackend {
    let cfg = LiveConfig { endpoint: url.to_string(), max_retries: retries, backoff_ms: 1, max_backoff_ms: 5, timeout_secs: 10, ..Default::default() };
    LiveBackend::with_key(cfg, "sk-test".into())
}

#[test]
fn live_sends_one_request_per_sample_with_sampling_params() {
    let srv = fake_server(vec![(200, ok_body("A")), (200, ok_body("B"))]);
    let b = bundle(Routine::Daxpy);
    let c = SamplingConfig { n_samples: 2, max_in_flight: 1, ..Default::default() };
    let got = sample_candidates(&live(&srv.url, 0), &b, &ModelProfile::gpt_4_1(), &c).unwrap();
    assert_eq!(got[0].source, "A");
    assert_eq!(got[1].source, "B");
    assert_eq!(got[0].tokens_in, 250000);
    assert_eq!(got[0].reasoning_tokens, Some(100000));
    assert_eq!(got[0].cost_usd, 0.5 + 1.0);
    let seen = srv.seen.lock().unwrap();
    assert_eq!(seen.len(), 2);
    let (headers, body) = &seen[0];
    assert!(headers.to_ascii_lowercase().contains("authorization: bearer sk-test"));
    assert_eq!(body["model"], "gpt-4.1");
    assert_eq!(body["n"], 1);
    assert_eq!(body["temperature"], 1.0);
    assert_eq!(body["top_p"], 1.0);
    assert_eq!(body["messages"][0]["content"], b.text.as_str());
}

#[test]
fn live_reasoning_model_omits_sampling_params() {
    let srv = fake_server(vec![(200, ok_body("A"))]);
    let got = sample_candidates(&live(&srv.url, 0), &bundle(Routine::Daxpy), &ModelProfile::o4_mini(), &cfg(1)).unwrap();
    assert_eq!(got[0].cost_usd, 250000.0 * 1.10 / 1e6 + 125000.0 * 4.40 / 1e6);
    let seen = srv.seen.lock().unwrap();
    let body = seen[0].1.as_object().unwrap();
    assert!(!body.contains_key("temperature") && !body.contains_key("top_p"));
}

#[test]
fn live_retries_transient_failures() {
    let srv = fake_server(vec![(500, "{}".into()), (429, r#"{"error":{"message":"slow down"}}"#.into()), (200, ok_body("C"))]);
    let got = sample_candidates(&live(&srv.url, 3), &bundle(Routine::Daxpy), &ModelProfile::gpt_4_1(), &cfg(1)).unwrap();
    assert_eq!(got[0].source, "C");
    assert_eq!(srv.seen.lock().unwrap().len(), 3);
}

#[test]
fn live_gives_up_into_a_failed_candidate() {
    let srv = fake_server(vec![(503, "{}".into()), (503, "{}".into())]);
    let got = sample_candidates(&live(&srv.url, 1), &bundle(Routine::Daxpy), &ModelProfile::gpt_4_1(), &cfg(1)).unwrap();
    assert_eq!(got[0].source, "");
    assert!(got[0].failure.as_deref().unwrap().contains("503"));
}

#[test]
fn live_auth_and_quota_failures_are_terminal() {
    let srv = fake_server(vec![(401, r#"{"error":{"message":"Incorrect API key provided"}}"#.into())]);
    let err = sample_candidates(&live(&srv.url, 3), &bundle(Routine::Daxpy), &ModelProfile::gpt_4_1(), &cfg(1)).unwrap_err();
    assert_eq!(err, SampleError::Terminal("HTTP 401: Incorrect API key provided".into()));

    let srv = fake_server(vec![(429, r#"{"error":{"message":"quota","type":"insufficient_quota"}}"#.into())]);
    let err = sample_candidates(&live(&srv.url, 3), &bundle(Routine::Daxpy), &ModelProfile::gpt_4_1(), &cfg(1)).unwrap_err();
    assert!(matches!(err, SampleError::Terminal(_)));
    assert_eq!(srv.seen.lock().unwrap().len(), 1);
}

#[test]
fn missing_api_key_is_terminal() {
    let cfg = LiveConfig { api_key_env: "KGAU_TEST_SURELY_UNSET_KEY".into(), ..Default::default() };
    let err = LiveBackend::from_env(cfg).err().unwrap();
    assert!(err.to_string().contains("KGAU_TEST_SURELY_UNSET_KEY"));
    let _: &dyn Backend = &MockBackend::default();
}
