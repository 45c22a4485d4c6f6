use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use kgr_core::http::{Endpoint, RetryPolicy};
use kgr_core::prompt::{generate_answer, GenerationRequest, Generator};
use kgr_core::relevance::embed_texts;
use kgr_core::testing::{MockResponse, MockServer};
use kgr_core::{EmbeddingProvider, KgError};
use serde_json::json;

fn quick() -> RetryPolicy {
    RetryPolicy {
        attempts: 3,
        base_delay: Duration::from_millis(5),
    }
}

#[test]
fn echo_returns_prompt() {
    let server = MockServer::echo();
    let ans = generate_answer(
        &Endpoint::new(server.url()),
        &quick(),
        &GenerationRequest::new("hello there"),
    )
    .unwrap();
    assert_eq!(ans.text, "hello there");
    assert_eq!(ans.model_id, "echo");
    assert_eq!(ans.retry_count, 0);
}

#[test]
fn request_carries_sampling_parameters_and_token() {
    let server = MockServer::start(|req| {
        let body = req.json();
        let auth = req.header("authorization").unwrap_or_default().to_string();
        MockResponse::json(
            json!({ "text": format!("{} {} {}", body["temperature"], body["top_p"], auth) }),
        )
    });
    let mut ep = Endpoint::new(server.url());
    ep.token = Some("s3cret".into());
    let ans = generate_answer(&ep, &quick(), &GenerationRequest::new("q")).unwrap();
    assert_eq!(ans.text, "0.7 1.0 Bearer s3cret");
}

#[test]
fn two_failures_then_success() {
    let server = MockServer::start(|req| {
        if req.index < 2 {
            MockResponse::status(500)
        } else {
            MockResponse::json(json!({ "text": "ok" }))
        }
    });
    let ans = generate_answer(
        &Endpoint::new(server.url()),
        &quick(),
        &GenerationRequest::new("q"),
    )
    .unwrap();
    assert_eq!(ans.retry_count, 2);
    assert_eq!(server.hits(), 3);
}

#[test]
fn timeouts_exhaust_attempts() {
    let server = MockServer::start(|_| {
        MockResponse::json(json!({ "text": "late" })).delayed(Duration::from_millis(400))
    });
    let ep = Endpoint::new(server.url()).with_timeout(Duration::from_millis(100));
    match generate_answer(&ep, &quick(), &GenerationRequest::new("q")) {
        Err(KgError::Generation { attempts, .. }) => assert_eq!(attempts, 3),
        other => panic!("expected generation error, got {other:?}"),
    }
}

#[test]
fn empty_completion_is_an_error() {
    let server = MockServer::start(|_| MockResponse::json(json!({ "text": "  " })));
    let err = generate_answer(
        &Endpoint::new(server.url()),
        &quick(),
        &GenerationRequest::new("q"),
    )
    .unwrap_err();
    assert!(matches!(err, KgError::EmptyAnswer));
}

#[test]
fn client_errors_are_not_retried() {
    let server = MockServer::start(|_| MockResponse::status(400));
    let err = generate_answer(
        &Endpoint::new(server.url()),
        &quick(),
        &GenerationRequest::new("q"),
    )
    .unwrap_err();
    assert!(matches!(err, KgError::Generation { attempts: 1, .. }));
}

#[test]
fn batch_respects_in_flight_limit() {
    let live = Arc::new(AtomicUsize::new(0));
    let peak = Arc::new(AtomicUsize::new(0));
    let (l, p) = (live.clone(), peak.clone());
    let server = MockServer::start(move |req| {
        let now = l.fetch_add(1, Ordering::SeqCst) + 1;
        p.fetch_max(now, Ordering::SeqCst);
        std::thread::sleep(Duration::from_millis(30));
        l.fetch_sub(1, Ordering::SeqCst);
        MockResponse::json(json!({ "text": req.json()["prompt"] }))
    });
    let gen = Generator::new(Endpoint::new(server.url()), quick()).unwrap();
    let reqs: Vec<GenerationRequest> = (0..12)
        .map(|i| GenerationRequest::new(format!("p{i}")))
        .collect();
    let out = gen.generate_batch(&reqs, 4);
    for (i, a) in out.iter().enumerate() {
        assert_eq!(a.as_ref().unwrap().text, format!("p{i}"));
    }
    assert!(peak.load(Ordering::SeqCst) <= 4);
}

#[test]
fn embedding_service_batches() {
    let server = MockServer::start(|req| {
        let n = req.json()["texts"].as_array().unwrap().len();
        assert!(n <= 128);
        MockResponse::json(json!({ "vectors": vec![vec![1.0, 0.0]; n] }))
    });
    let texts: Vec<String> = (0..300).map(|i| format!("t{i}")).collect();
    let v = embed_texts(
        &EmbeddingProvider::service(Endpoint::new(server.url())),
        &texts,
    )
    .unwrap();
    assert_eq!(v.len(), 300);
    assert_eq!(server.hits(), 3);
}
