//! The remote scorer client against an in-process stub service.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde_json::{json, Value};

use kpa_core::scoring::{
    Capability, RawOutput, RemoteBackend, Request, RetryPolicy, ScoreError, Scorer, ScorerBackend,
};

#[derive(Default)]
struct Behavior {
    max_batch: usize,
    capabilities: Vec<&'static str>,
    /// Answer this many scoring posts with the given status before behaving.
    fail_first: AtomicUsize,
    fail_status: u16,
    unnormalized: bool,
    out_of_range: bool,
    drop_last: bool,
}

struct Stub {
    url: String,
    /// (path, request body) of every scoring post, in arrival order.
    log: Arc<Mutex<Vec<(String, Value)>>>,
}

fn text_score(t: &str) -> f64 {
    (t.bytes().map(u64::from).sum::<u64>() % 101) as f64 / 100.0
}

fn pair_score(s: &str, k: &str) -> f64 {
    (text_score(s) * 0.7 + text_score(k) * 0.3 * 0.99).min(1.0)
}

fn distribution(t: &str) -> [f64; 3] {
    let pos = (t.len() % 8) as f64 / 10.0;
    let neg = (t.len() % 3) as f64 / 10.0;
    [pos, neg, 1.0 - pos - neg]
}

fn stub(behavior: Behavior) -> Stub {
    let server = tiny_http::Server::http("127.0.0.1:0").unwrap();
    let url = format!("http://{}", server.server_addr().to_ip().unwrap());
    let log = Arc::new(Mutex::new(Vec::new()));
    let seen = Arc::clone(&log);
    std::thread::spawn(move || {
        for mut req in server.incoming_requests() {
            let path = req.url().to_string();
            let mut body = String::new();
            req.as_reader().read_to_string(&mut body).unwrap();
            let (status, reply) = respond(&behavior, &path, &body, &seen);
            let header = tiny_http::Header::from_bytes("Content-Type", "application/json").unwrap();
            let _ = req.respond(
                tiny_http::Response::from_string(reply.to_string())
                    .with_status_code(status)
                    .with_header(header),
            );
        }
    });
    Stub { url, log }
}

fn respond(b: &Behavior, path: &str, body: &str, log: &Mutex<Vec<(String, Value)>>) -> (u16, Value) {
    if path == "/info" {
        return (
            200,
            json!({"backend_id": "stub-v1", "capabilities": b.capabilities, "max_batch": b.max_batch}),
        );
    }
    let body: Value = serde_json::from_str(body).unwrap();
    log.lock().unwrap().push((path.to_string(), body.clone()));
    if b.fail_first.load(Ordering::SeqCst) > 0 {
        b.fail_first.fetch_sub(1, Ordering::SeqCst);
        return (b.fail_status, json!({"error": "stub failure"}));
    }
    let texts = || {
        body["texts"]
            .as_array()
            .unwrap()
            .iter()
            .map(|t| t.as_str().unwrap().to_string())
    };
    let mut out: Vec<Value> = match path {
        "/score/match" => body["pairs"]
            .as_array()
            .unwrap()
            .iter()
            .map(|p| json!(pair_score(p["sentence"].as_str().unwrap(), p["kp"].as_str().unwrap())))
            .collect(),
        "/score/quality" | "/score/kp_quality" => texts()
            .map(|t| json!(if b.out_of_range { 1.5 } else { text_score(&t) }))
            .collect(),
        "/score/sentiment" => texts()
            .map(|t| {
                let [pos, neg, neut] = distribution(&t);
                let neut = if b.unnormalized { neut + 0.2 } else { neut };
                json!({"pos": pos, "neg": neg, "neut": neut})
            })
            .collect(),
        _ => return (404, json!({"error": "no route"})),
    };
    if b.drop_last {
        out.pop();
    }
    let key = if path == "/score/sentiment" {
        "distributions"
    } else {
        "scores"
    };
    (200, json!({ key: out }))
}

fn all_capabilities(max_batch: usize) -> Behavior {
    Behavior {
        max_batch,
        capabilities: vec!["match", "quality", "sentiment", "kp_quality"],
        fail_status: 503,
        ..Behavior::default()
    }
}

fn quick_retry(attempts: u32) -> RetryPolicy {
    RetryPolicy {
        attempts,
        initial_backoff: Duration::from_millis(1),
        timeout: Duration::from_secs(5),
    }
}

fn connect(stub: &Stub) -> RemoteBackend {
    RemoteBackend::connect(&stub.url, quick_retry(3)).unwrap()
}

fn posts(stub: &Stub) -> Vec<(String, Value)> {
    stub.log.lock().unwrap().clone()
}

fn pairs(n: usize) -> Vec<(String, String)> {
    (0..n)
        .map(|i| (format!("sentence number {i} here"), format!("key point {}", i % 7)))
        .collect()
}

#[test]
fn info_is_read_on_connect() {
    let s = stub(Behavior {
        capabilities: vec!["match"],
        ..all_capabilities(4)
    });
    let backend = connect(&s);
    assert_eq!(backend.backend_id(), "stub-v1");
    assert_eq!(backend.max_batch(), Some(4));
    assert_eq!(
        backend.capabilities().into_iter().collect::<Vec<_>>(),
        [Capability::Match]
    );
    assert!(posts(&s).is_empty());
}

#[test]
fn zero_max_batch_is_refused() {
    let s = stub(all_capabilities(0));
    assert!(RemoteBackend::connect(&s.url, quick_retry(1)).is_err());
}

#[test]
fn batch_outputs_follow_request_order_and_equal_single_calls() {
    let s = stub(all_capabilities(5));
    let batch = Scorer::new(Arc::new(connect(&s)));
    let single = Scorer::new(Arc::new(connect(&s)));
    let data = pairs(23);
    let refs: Vec<(&str, &str)> = data.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
    let scores = batch.match_scores(&refs).unwrap();
    assert_eq!(scores.len(), refs.len());
    for ((sentence, kp), got) in refs.iter().zip(&scores) {
        assert_eq!(got.value(), pair_score(sentence, kp));
        assert_eq!(*got, single.match_score(sentence, kp).unwrap());
    }

    let texts: Vec<String> = (0..11).map(|i| format!("text {}", "x".repeat(i + 1))).collect();
    let t: Vec<&str> = texts.iter().map(String::as_str).collect();
    let q = batch.text_scores(Capability::Quality, &t).unwrap();
    let d = batch.sentiment_batch(&t).unwrap();
    for (i, text) in t.iter().enumerate() {
        assert_eq!(q[i].value(), text_score(text));
        assert_eq!(q[i], single.quality_score(text).unwrap());
        assert_eq!([d[i].pos, d[i].neg, d[i].neut], distribution(text));
        assert_eq!(d[i], single.sentiment_probs(text).unwrap());
    }
}

#[test]
fn wire_bodies_have_the_documented_shape() {
    let s = stub(all_capabilities(8));
    let scorer = Scorer::new(Arc::new(connect(&s)));
    scorer.match_score("the soup was cold", "cold food").unwrap();
    scorer.kp_quality_score("cold food").unwrap();
    scorer.sentiment_probs("the soup   was cold").unwrap();
    let log = posts(&s);
    assert_eq!(
        log[0],
        (
            "/score/match".into(),
            json!({"pairs": [{"sentence": "the soup was cold", "kp": "cold food"}]})
        )
    );
    assert_eq!(log[1], ("/score/kp_quality".into(), json!({"texts": ["cold food"]})));
    // whitespace is normalized before it goes on the wire
    assert_eq!(
        log[2],
        ("/score/sentiment".into(), json!({"texts": ["the soup was cold"]}))
    );
}

#[test]
fn batches_above_max_batch_are_split() {
    let s = stub(all_capabilities(5));
    let backend = connect(&s);
    let requests: Vec<Request> = (0..12).map(|i| Request::Text(format!("text {i}"))).collect();
    let out = backend.score_batch(Capability::Quality, &requests).unwrap();
    assert_eq!(out.len(), 12);
    for (r, o) in requests.iter().zip(&out) {
        let Request::Text(t) = r else { unreachable!() };
        assert_eq!(*o, RawOutput::Score(text_score(t)));
    }
    let sizes: Vec<usize> = posts(&s)
        .iter()
        .map(|(_, b)| b["texts"].as_array().unwrap().len())
        .collect();
    assert_eq!(sizes, [5, 5, 2]);

    // through the scorer, every post stays within the limit too
    let s = stub(all_capabilities(3));
    let scorer = Scorer::new(Arc::new(connect(&s)));
    let data = pairs(17);
    let refs: Vec<(&str, &str)> = data.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
    scorer.match_scores(&refs).unwrap();
    let sizes: Vec<usize> = posts(&s)
        .iter()
        .map(|(_, b)| b["pairs"].as_array().unwrap().len())
        .collect();
    assert!(sizes.iter().all(|&n| n <= 3));
    assert_eq!(sizes.iter().sum::<usize>(), 17);
}

#[test]
fn transient_failures_are_retried() {
    let s = stub(Behavior {
        fail_first: AtomicUsize::new(2),
        ..all_capabilities(8)
    });
    let scorer = Scorer::new(Arc::new(connect(&s)));
    assert_eq!(
        scorer.quality_score("fine text").unwrap().value(),
        text_score("fine text")
    );
    assert_eq!(posts(&s).len(), 3);
}

#[test]
fn retries_give_up_after_the_configured_attempts() {
    let s = stub(Behavior {
        fail_first: AtomicUsize::new(10),
        ..all_capabilities(8)
    });
    let scorer = Scorer::new(Arc::new(connect(&s)));
    let err = scorer.quality_score("fine text").unwrap_err();
    assert!(err.is_retriable(), "{err}");
    assert!(err.to_string().contains("gave up after 3 attempts"), "{err}");
    assert_eq!(posts(&s).len(), 3);
}

#[test]
fn client_errors_fail_without_retry() {
    let s = stub(Behavior {
        fail_first: AtomicUsize::new(10),
        fail_status: 422,
        ..all_capabilities(8)
    });
    let scorer = Scorer::new(Arc::new(connect(&s)));
    let err = scorer.match_score("a sentence", "a key point").unwrap_err();
    match &err {
        ScoreError::Backend {
            retriable,
            positions,
            message,
            ..
        } => {
            assert!(!retriable);
            assert_eq!(positions, &[0]);
            assert!(message.contains("422"), "{message}");
        }
        other => panic!("unexpected {other:?}"),
    }
    assert_eq!(posts(&s).len(), 1);
}

#[test]
fn unnormalized_distributions_are_rejected() {
    let s = stub(Behavior {
        unnormalized: true,
        ..all_capabilities(8)
    });
    let scorer = Scorer::new(Arc::new(connect(&s)));
    let err = scorer.sentiment_batch(&["first one", "second one"]).unwrap_err();
    assert!(matches!(err, ScoreError::Normalization { position: 0, .. }), "{err:?}");
}

#[test]
fn out_of_range_scores_are_rejected() {
    let s = stub(Behavior {
        out_of_range: true,
        ..all_capabilities(8)
    });
    let scorer = Scorer::new(Arc::new(connect(&s)));
    let err = scorer.quality_score("anything").unwrap_err();
    assert!(
        matches!(err, ScoreError::OutOfRange { value, .. } if value == 1.5),
        "{err:?}"
    );
}

#[test]
fn short_responses_fail_the_batch() {
    let s = stub(Behavior {
        drop_last: true,
        ..all_capabilities(8)
    });
    let scorer = Scorer::new(Arc::new(connect(&s)));
    assert!(scorer
        .text_scores(Capability::Quality, &["one text", "two text"])
        .is_err());
}

#[test]
fn local_rejections_never_reach_the_service() {
    let s = stub(Behavior {
        capabilities: vec!["match"],
        ..all_capabilities(8)
    });
    let scorer = Scorer::new(Arc::new(connect(&s)));
    assert!(matches!(
        scorer.quality_score("text"),
        Err(ScoreError::Unsupported { .. })
    ));
    assert!(matches!(
        scorer.match_scores(&[("fine", "kp"), ("   ", "kp")]),
        Err(ScoreError::EmptyText { position: 1 })
    ));
    assert!(posts(&s).is_empty());
}
