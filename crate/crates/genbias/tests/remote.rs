mod common;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use common::*;
use genbias::remote::{RemoteBackend, RemoteOptions};
use genbias_core::metrics::compute_sbm;
use genbias_core::pairgen::{generate_lsg, lsg_pair};
use genbias_core::{corpus, BackendError, GenderLexicon, MaskPrediction, ScorerBackend, SentenceRecord};
use serde_json::{json, Value};

fn fast() -> RemoteOptions {
    RemoteOptions {
        timeout: Duration::from_secs(5),
        max_retries: 3,
        max_in_flight: 8,
        backoff: Duration::from_millis(5),
    }
}

fn lexicon() -> GenderLexicon {
    genbias_core::lexicon::parse_lexicon(EN_LEXICON).unwrap().lexicon
}

#[test]
fn remote_and_table_give_identical_sbm() {
    let fx = sbm_fixture();
    let server = StubServer::start(table_handler(fx.table.clone()));
    let remote = RemoteBackend::connect(&server.url(), fast()).unwrap();
    assert_eq!(remote.info(), fx.table.info());

    let lex = lexicon();
    let records = corpus::records_from_lines(fx.corpus.lines().enumerate(), "en", &lex);
    let partition = corpus::partition_gendered(records, &lex);
    let (pairs, _) = generate_lsg(&partition, &lex).unwrap();
    let via_table = compute_sbm(&pairs, &fx.table).unwrap();
    let via_remote = compute_sbm(&pairs, &remote).unwrap();
    assert_eq!(via_table, via_remote);
    assert_eq!(via_table.value, 0.75);

    for (m, _, _, _) in &fx.pairs {
        assert_eq!(remote.embed(m).unwrap(), fx.table.embed(m).unwrap());
    }
}

#[test]
fn fill_mask_round_trips() {
    let lex = lexicon();
    let r = SentenceRecord::annotate(0, "en", "The waitress came over.", &lex);
    let mut table = genbias_core::TableBackend::new();
    let preds = vec![
        MaskPrediction { token: "waiter".into(), prob: 0.4 },
        MaskPrediction { token: "waitress".into(), prob: 0.3 },
    ];
    table.insert_fill_mask(&r.text, 1, preds.clone()).unwrap();
    let server = StubServer::start(table_handler(table));
    let remote = RemoteBackend::connect(&server.url(), fast()).unwrap();
    assert_eq!(remote.fill_mask(&r.text, 1, 10).unwrap(), preds);
    assert_eq!(remote.fill_mask(&r.text, 1, 1).unwrap(), preds[..1]);
    assert!(lsg_pair(&r, &lex).is_ok());
}

#[test]
fn client_errors_are_typed_and_not_retried() {
    let server = StubServer::start(table_handler(genbias_core::TableBackend::new()));
    let remote = RemoteBackend::connect(&server.url(), fast()).unwrap();
    let before = server.request_count();
    match remote.token_scores("unknown sentence") {
        Err(BackendError::Server { status, message, request }) => {
            assert_eq!(status, 400);
            assert!(message.contains("unknown sentence"), "{message}");
            assert!(request.contains("/v1/token_scores"));
        }
        other => panic!("expected a server error, got {other:?}"),
    }
    assert_eq!(server.request_count() - before, 1);
}

#[test]
fn server_errors_are_retried_with_backoff() {
    let calls = Arc::new(AtomicUsize::new(0));
    let c = calls.clone();
    let server = StubServer::start(Arc::new(move |_m: &str, path: &str, _b: &Value| {
        if path == "/v1/info" {
            return (200, json!({"model_id": "stub", "max_tokens": 64, "embedding_dim": 2}).to_string());
        }
        if c.fetch_add(1, Ordering::SeqCst) < 2 {
            (503, json!({"error": "warming up"}).to_string())
        } else {
            (200, json!({"vector": [0.6, 0.8]}).to_string())
        }
    }));
    let remote = RemoteBackend::connect(&server.url(), fast()).unwrap();
    assert_eq!(remote.embed("x").unwrap(), vec![0.6, 0.8]);
    assert_eq!(calls.load(Ordering::SeqCst), 3);

    let no_retry = RemoteBackend::connect(&server.url(), RemoteOptions { max_retries: 0, ..fast() }).unwrap();
    calls.store(0, Ordering::SeqCst);
    match no_retry.embed("x") {
        Err(BackendError::Server { status: 503, message, .. }) => assert_eq!(message, "warming up"),
        other => panic!("expected 503, got {other:?}"),
    }
}

#[test]
fn malformed_and_contract_violations() {
    let server = StubServer::start(Arc::new(|_m: &str, path: &str, _b: &Value| match path {
        "/v1/info" => (200, json!({"model_id": "stub", "max_tokens": 64, "embedding_dim": 3}).to_string()),
        "/v1/embed" => (200, json!({"vector": [1.0, 2.0]}).to_string()),
        "/v1/fill_mask" => (200, json!({"predictions": [{"token": "he", "prob": 0.1}, {"token": "she", "prob": 0.9}]}).to_string()),
        _ => (200, "not json".to_string()),
    }));
    let remote = RemoteBackend::connect(&server.url(), fast()).unwrap();
    assert!(matches!(remote.token_scores("a b"), Err(BackendError::MalformedResponse { .. })));
    assert!(matches!(remote.embed("a"), Err(BackendError::Contract { kind: "embed", .. })));
    assert!(matches!(remote.fill_mask("a", 0, 5), Err(BackendError::Contract { kind: "fill_mask", .. })));
}

#[test]
fn unreachable_endpoint_is_a_connection_error() {
    let url = dead_address();
    match RemoteBackend::connect(&url, RemoteOptions { max_retries: 1, ..fast() }) {
        Err(BackendError::Connection { endpoint, request, .. }) => {
            assert_eq!(endpoint, url);
            assert_eq!(request, "GET /v1/info");
        }
        other => panic!("expected a connection error, got {other:?}"),
    }
}

#[test]
fn slow_responses_time_out() {
    let server = StubServer::start(Arc::new(|_m: &str, path: &str, _b: &Value| {
        if path != "/v1/info" {
            thread::sleep(Duration::from_millis(1500));
        }
        (200, json!({"model_id": "slow", "max_tokens": 64, "embedding_dim": 2, "vector": [1.0, 0.0]}).to_string())
    }));
    let opts = RemoteOptions {
        timeout: Duration::from_millis(300),
        max_retries: 0,
        ..fast()
    };
    let remote = RemoteBackend::connect(&server.url(), opts).unwrap();
    assert!(matches!(remote.embed("x"), Err(BackendError::Timeout { .. })));
}

#[test]
fn in_flight_requests_are_bounded() {
    let server = StubServer::start(Arc::new(|_m: &str, path: &str, _b: &Value| {
        if path != "/v1/info" {
            thread::sleep(Duration::from_millis(40));
        }
        (200, json!({"model_id": "stub", "max_tokens": 64, "embedding_dim": 2, "vector": [1.0, 0.0]}).to_string())
    }));
    let remote = Arc::new(RemoteBackend::connect(&server.url(), RemoteOptions { max_in_flight: 2, ..fast() }).unwrap());
    let handles: Vec<_> = (0..10)
        .map(|i| {
            let r = remote.clone();
            thread::spawn(move || r.embed(&format!("s{i}")).unwrap())
        })
        .collect();
    for h in handles {
        h.join().unwrap();
    }
    assert!(server.max_concurrent.load(Ordering::SeqCst) <= 2);
    assert_eq!(server.request_count(), 11);
}
