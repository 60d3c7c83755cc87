#![allow(dead_code)]

use std::collections::BTreeSet;

use reqwest::{Client, Method};
use serde_json::{json, Value};
use tokio::net::TcpListener;

use maplot_server::{router, AppState, Config};

/// A server bound to an ephemeral port for the lifetime of the test runtime.
pub struct TestServer {
    pub base: String,
    pub client: Client,
}

pub struct Reply {
    pub status: u16,
    pub body: Vec<u8>,
    pub content_type: String,
}

impl Reply {
    pub fn json(&self) -> Value {
        serde_json::from_slice(&self.body)
            .unwrap_or_else(|e| panic!("non-JSON body ({e}): {}", String::from_utf8_lossy(&self.body)))
    }

    pub fn text(&self) -> String {
        String::from_utf8(self.body.clone()).expect("utf-8 body")
    }

    /// Error code of an error reply.
    pub fn code(&self) -> String {
        self.json()["code"].as_str().unwrap_or_default().to_owned()
    }
}

pub async fn spawn(config: Config) -> TestServer {
    let listener = TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let app = router(AppState::new(config));
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    TestServer {
        base: format!("http://{addr}"),
        client: Client::new(),
    }
}

impl TestServer {
    pub async fn send(&self, method: Method, path: &str, body: Option<Vec<u8>>, content_type: &str) -> Reply {
        let mut req = self.client.request(method, format!("{}{path}", self.base));
        if let Some(b) = body {
            req = req.header("content-type", content_type).body(b);
        }
        let resp = req.send().await.expect("request failed");
        let status = resp.status().as_u16();
        let content_type = resp
            .headers()
            .get("content-type")
            .and_then(|v| v.to_str().ok())
            .unwrap_or_default()
            .to_owned();
        let body = resp.bytes().await.expect("body").to_vec();
        Reply {
            status,
            body,
            content_type,
        }
    }

    pub async fn get(&self, path: &str) -> Reply {
        self.send(Method::GET, path, None, "").await
    }

    pub async fn post_json(&self, path: &str, body: &Value) -> Reply {
        self.send(Method::POST, path, Some(serde_json::to_vec(body).unwrap()), "application/json").await
    }

    pub async fn put_json(&self, path: &str, body: &Value) -> Reply {
        self.send(Method::PUT, path, Some(serde_json::to_vec(body).unwrap()), "application/json").await
    }

    pub async fn upload(&self, csv: &str) -> Reply {
        self.send(Method::POST, "/api/datasets", Some(csv.as_bytes().to_vec()), "text/csv").await
    }

    /// Uploads `csv` and opens a session on it, returning the session id.
    pub async fn session_for(&self, csv: &str, alpha: f64) -> (String, String) {
        let up = self.upload(csv).await;
        assert_eq!(up.status, 201, "{}", up.text());
        let dataset_id = up.json()["dataset_id"].as_str().unwrap().to_owned();
        let created = self
            .post_json("/api/sessions", &serde_json::json!({ "dataset_id": dataset_id, "alpha": alpha }))
            .await;
        assert_eq!(created.status, 201, "{}", created.text());
        let id = created.json()["session"]["id"].as_str().unwrap().to_owned();
        (dataset_id, id)
    }
}

pub const SMALL_CSV: &str = "\
name,m,a,pvalue
BRCA1,2.5,8.0,0.001
BRCA2,-1.8,7.5,0.02
TP53,0.3,10.0,0.4
EGFR,-3.1,6.0,1e-12
MYC,1.1,9.0,NA
GAPDH,0.0,12.0,0.03
";

pub fn error_fixture_config() -> Config {
    Config {
        max_rows: 8,
        max_upload_bytes: 2 << 20,
        ..Config::default()
    }
}

/// Drives a server built from [`error_fixture_config`] into every error
/// code it declares, checking the status and body shape of each, and
/// returns the codes observed.
pub async fn reach_every_error_code(s: &TestServer) -> BTreeSet<String> {
    let (dataset_id, sid) = s.session_for(SMALL_CSV, 0.05).await;
    let base = format!("/api/sessions/{sid}");
    let bundle: Value = s.get(&format!("{base}/export/session")).await.json();
    let import = |b: Value| {
        let bytes = serde_json::to_vec(&b).unwrap();
        async move {
            s.send(Method::POST, "/api/sessions/import?verify=true", Some(bytes), "application/json")
                .await
        }
    };

    let mut seen = BTreeSet::new();
    let mut check = |reply: Reply, code: &str, status: u16| {
        assert_eq!(reply.code(), code, "{}", reply.text());
        assert_eq!(reply.status, status, "{code}");
        assert!(reply.json()["message"].as_str().is_some_and(|m| !m.is_empty()));
        seen.insert(code.to_owned());
    };

    check(s.upload("gene,foo\nA,1\n").await, "SchemaError", 422);
    check(s.upload("name,m,a,pvalue\nA,1,2,0.1\nA,1,2,0.1\n").await, "DuplicateGeneName", 422);
    check(s.upload("name,m,a,pvalue\nA,1,2\n").await, "MalformedRow", 422);
    check(
        s.upload("name,intensity_r,intensity_g,pvalue\nA,0,2,0.1\n").await,
        "NonPositiveIntensity",
        422,
    );
    check(s.upload("name,m,a,pvalue\nA,1,2,1.5\n").await, "PValueOutOfRange", 422);
    let many: String = std::iter::once("name,m,a,pvalue\n".to_owned())
        .chain((0..9).map(|i| format!("g{i},1,2,0.1\n")))
        .collect();
    check(s.upload(&many).await, "TooManyRows", 413);
    check(s.put_json(&format!("{base}/alpha"), &json!({ "alpha": 1.5 })).await, "AlphaOutOfRange", 422);
    check(
        s.post_json(&format!("{base}/selections"), &json!({ "kind": "lasso", "vertices": [[0, 0], [1, 1]] }))
            .await,
        "DegeneratePolygon",
        422,
    );
    check(
        s.post_json(
            &format!("{base}/selections"),
            &json!({ "kind": "box", "a_min": 3, "a_max": 1, "m_min": 0, "m_max": 1 }),
        )
        .await,
        "InvalidBox",
        422,
    );
    check(s.post_json(&format!("{base}/combine"), &json!({ "op": "keep_all", "ids": [] })).await, "EmptyCombine", 422);
    check(
        s.post_json(&format!("{base}/selections"), &json!({ "kind": "search", "query": "x", "pick": "NOPE" }))
            .await,
        "UnknownGene",
        404,
    );
    check(
        s.post_json(
            &format!("{base}/filter"),
            &json!({ "spec": { "kind": "range", "m_min": 2, "m_max": 1, "a_min": 0, "a_max": 1, "mode": "inside" } }),
        )
        .await,
        "InvalidFilter",
        422,
    );
    check(
        s.post_json(&format!("{base}/track"), &json!({ "selection_id": "sel-99" })).await,
        "UnknownSelection",
        404,
    );
    check(
        s.put_json(&format!("{base}/notes"), &json!({ "notes": "n".repeat((1 << 20) + 1) })).await,
        "NotesTooLarge",
        413,
    );
    check(
        s.post_json("/api/sessions", &json!({ "dataset_id": "ds-0000000000000000" })).await,
        "UnknownDataset",
        404,
    );
    check(s.get("/api/sessions/s-missing").await, "UnknownSession", 404);

    let mut wrong_dataset = bundle.clone();
    wrong_dataset["session"]["event_log"][0]["action"]["dataset_id"] = json!("ds-ffffffffffffffff");
    check(import(wrong_dataset).await, "MixedDatasets", 422);
    let mut tampered = bundle.clone();
    tampered["session"]["alpha"] = json!(0.1);
    check(import(tampered).await, "InvalidEventLog", 422);
    let mut future = bundle.clone();
    future["version"] = json!(2);
    check(import(future).await, "UnsupportedVersion", 422);
    let mut corrupt = bundle.clone();
    corrupt["dataset"]["records"][0]["m"] = json!("high");
    let reply = import(corrupt).await;
    assert_eq!(reply.json()["detail"]["path"], "dataset.records[0].m");
    check(reply, "CorruptBundle", 422);
    check(
        s.get(&format!("{base}/export/svg?a_min=1&a_max=1&m_min=0&m_max=1")).await,
        "InvalidViewport",
        422,
    );
    check(
        s.send(Method::POST, "/api/sessions", Some(b"{not json".to_vec()), "application/json").await,
        "BadRequest",
        400,
    );
    check(
        s.send(Method::POST, "/api/datasets", Some(vec![b'x'; 3 << 20]), "text/csv").await,
        "PayloadTooLarge",
        413,
    );
    check(s.get("/api/nothing-here").await, "NotFound", 404);
    check(s.send(Method::DELETE, "/api/sessions", None, "").await, "MethodNotAllowed", 405);

    // Failed mutations leave the session untouched.
    let summary = s.get(&base).await.json();
    assert_eq!(summary["events"], 1);
    assert_eq!(summary["dataset_id"], dataset_id.as_str());
    seen
}
