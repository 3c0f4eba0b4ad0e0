use std::sync::Arc;

use kbqa_cli::service::{router, serve, AppState, AskResponse, Health, StatsPaths};
use kbqa_core::chunk::{chunk_text, write_chunks, Chunk};
use kbqa_core::generation::QaPipeline;
use kbqa_core::provider::{MockEmbedder, MockGenerator, MockReranker};
use kbqa_core::retrieval::{build_index, KnowledgeBase, VectorIndex};
use kbqa_testkit::planted;
use serde_json::{json, Value};

struct Api {
    base: String,
    chunks: Vec<Chunk>,
    _dir: tempfile::TempDir,
    stop: Option<tokio::sync::oneshot::Sender<()>>,
}

impl Drop for Api {
    fn drop(&mut self) {
        if let Some(s) = self.stop.take() {
            let _ = s.send(());
        }
    }
}

async fn start(dev: bool, empty: bool) -> Api {
    let chunks: Vec<Chunk> = if empty {
        vec![]
    } else {
        planted::documents()
            .iter()
            .flat_map(|d| {
                let mut c = chunk_text(&d.doc_id, &d.text, 1000).unwrap();
                c.iter_mut().for_each(|c| c.source_path = format!("html/{}.txt", d.doc_id));
                c
            })
            .collect()
    };
    let embedder = Arc::new(MockEmbedder::new(512, 0));
    let index = if empty {
        VectorIndex::new(512, "mock", 0).unwrap()
    } else {
        build_index(&chunks, embedder.as_ref(), 16, 0).await.unwrap()
    };
    let kb = KnowledgeBase::new(index, chunks.clone()).unwrap();
    let pipeline = QaPipeline::new(Arc::new(kb), embedder, Some(Arc::new(MockReranker::new())), Arc::new(MockGenerator::new()));

    let dir = tempfile::tempdir().unwrap();
    let chunk_path = dir.path().join("chunks.jsonl");
    write_chunks(&chunk_path, &chunks).unwrap();
    let state = Arc::new(AppState {
        pipeline,
        stats_paths: StatsPaths {
            clean: Some(kbqa_testkit::site::fixtures_dir().join("corpus")),
            chunks: Some(chunk_path),
            qa: Some(dir.path().join("missing-qa.jsonl")),
        },
    });
    let app = router(state, dev.then_some("http://localhost:5173")).unwrap();
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let base = format!("http://{}", listener.local_addr().unwrap());
    let (tx, rx) = tokio::sync::oneshot::channel();
    tokio::spawn(serve(listener, app, async {
        let _ = rx.await;
    }));
    Api {
        base,
        chunks,
        _dir: dir,
        stop: Some(tx),
    }
}

async fn post(api: &Api, body: Value) -> (u16, Value) {
    let r = reqwest::Client::new()
        .post(format!("{}/api/ask", api.base))
        .json(&body)
        .send()
        .await
        .unwrap();
    (r.status().as_u16(), r.json().await.unwrap())
}

#[tokio::test]
async fn ask_happy_path() {
    let api = start(false, false).await;
    let (status, body) = post(&api, json!({"question": "When do classes for the Fall 2024 semester begin?"})).await;
    assert_eq!(status, 200, "{body}");
    let resp: AskResponse = serde_json::from_value(body).unwrap();
    assert!(resp.answer.contains("August 26"));
    assert!(resp.used_rag && !resp.rerank_degraded);
    assert!(!resp.contexts.is_empty() && resp.contexts.len() <= 5);
    let scores: Vec<f64> = resp.contexts.iter().map(|c| c.rerank_score.unwrap()).collect();
    assert!(scores.windows(2).all(|w| w[0] >= w[1]));
    for c in &resp.contexts {
        let stored = api.chunks.iter().find(|s| s.chunk_id == c.chunk_id).unwrap();
        assert_eq!(stored.text, c.text);
        assert_eq!(stored.source_path, c.source_path);
    }
}

#[tokio::test]
async fn ask_respects_top_k_and_is_deterministic() {
    let api = start(false, false).await;
    let q = json!({"question": "Who founded the Robotics Institute in 1979?", "top_k": 2, "fetch_k": 4});
    let (_, a) = post(&api, q.clone()).await;
    let (_, b) = post(&api, q).await;
    let (mut a, mut b): (AskResponse, AskResponse) = (serde_json::from_value(a).unwrap(), serde_json::from_value(b).unwrap());
    assert_eq!(a.contexts.len(), 2);
    a.timings = b.timings.clone();
    b.timings = a.timings.clone();
    assert_eq!(a, b);
}

#[tokio::test]
async fn baseline_uses_no_context() {
    let api = start(false, false).await;
    let (status, body) = post(&api, json!({"question": "When do classes begin?", "rag": false})).await;
    assert_eq!(status, 200);
    assert_eq!(body["used_rag"], false);
    assert_eq!(body["contexts"].as_array().unwrap().len(), 0);
    assert_eq!(body["answer"], "I don't know.");
}

#[tokio::test]
async fn invalid_requests_get_400() {
    let api = start(false, false).await;
    for bad in [
        json!({"question": ""}),
        json!({"question": "   "}),
        json!({"question": "q", "top_k": 0}),
        json!({"question": "q", "top_k": 11, "fetch_k": 10}),
        json!({"question": "q", "top_k": 5, "fetch_k": 101}),
        json!({"question": 3}),
        json!({"q": "x"}),
    ] {
        let (status, body) = post(&api, bad.clone()).await;
        assert_eq!(status, 400, "{bad}");
        assert_eq!(body["error"], "validation");
        assert!(!body["detail"].as_str().unwrap().is_empty());
    }
    let (status, _) = post(&api, json!({"question": "q", "top_k": 100, "fetch_k": 100})).await;
    assert_eq!(status, 200);
}

#[tokio::test]
async fn empty_index_is_service_unavailable() {
    let api = start(false, true).await;
    let (status, body) = post(&api, json!({"question": "anything"})).await;
    assert_eq!(status, 503);
    assert_eq!(body["detail"], "index empty");
}

#[tokio::test]
async fn health_and_stats() {
    let api = start(false, false).await;
    let h: Health = reqwest::get(format!("{}/api/health", api.base)).await.unwrap().json().await.unwrap();
    assert_eq!(h.status, "ok");
    assert_eq!(h.index_chunks, 50);
    assert!(h.providers.rerank.is_some());

    let s: Value = reqwest::get(format!("{}/api/stats", api.base)).await.unwrap().json().await.unwrap();
    assert_eq!(s["html"], 20);
    assert_eq!(s["pdf"], 2);
    assert_eq!(s["paper"], 3);
    assert_eq!(s["chunks"], 50);
    assert!(s["qa"].is_null());
}

#[tokio::test]
async fn cors_only_in_dev_mode() {
    let preflight = |base: String| async move {
        reqwest::Client::new()
            .request(reqwest::Method::OPTIONS, format!("{base}/api/ask"))
            .header("Origin", "http://localhost:5173")
            .header("Access-Control-Request-Method", "POST")
            .send()
            .await
            .unwrap()
    };
    let dev = start(true, false).await;
    let r = preflight(dev.base.clone()).await;
    assert_eq!(r.headers()["access-control-allow-origin"], "http://localhost:5173");

    let prod = start(false, false).await;
    let r = preflight(prod.base.clone()).await;
    assert!(r.headers().get("access-control-allow-origin").is_none());
}
