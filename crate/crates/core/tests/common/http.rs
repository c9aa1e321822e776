//! In-process HTTP helpers for the service router.

use std::path::Path;
use std::sync::atomic::{AtomicI64, Ordering};
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::Value;
use tower::ServiceExt;

use tradesig::config::EngineConfig;
use tradesig::runtime::build_state;
use tradesig::service::{router, AppState};

/// Settable clock for handlers that compare against "now".
#[derive(Clone, Default)]
pub struct ManualClock(pub Arc<AtomicI64>);

impl ManualClock {
    pub fn set(&self, ms: i64) {
        self.0.store(ms, Ordering::SeqCst);
    }
}

pub fn state_with(journal: &Path, tickers: &[&str], clock: &ManualClock) -> AppState {
    let tickers: Vec<String> = tickers.iter().map(|t| format!("{t:?}")).collect();
    let overrides = vec![
        format!("server.journal={:?}", journal.display().to_string()),
        format!("server.initial_tickers=[{}]", tickers.join(",")),
    ];
    let config = EngineConfig::load(None, &overrides).unwrap();
    let c = clock.0.clone();
    build_state(&config, Arc::new(move || c.load(Ordering::SeqCst))).unwrap()
}

pub async fn call(
    app: &Router,
    method: Method,
    uri: &str,
    body: Option<Value>,
) -> (StatusCode, Value) {
    let builder = Request::builder().method(method).uri(uri);
    let request = match body {
        Some(v) => builder
            .header("content-type", "application/json")
            .body(Body::from(v.to_string()))
            .unwrap(),
        None => builder.body(Body::empty()).unwrap(),
    };
    let response = app.clone().oneshot(request).await.unwrap();
    let status = response.status();
    let bytes = response.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&bytes)
            .unwrap_or_else(|_| Value::String(String::from_utf8_lossy(&bytes).into()))
    };
    (status, value)
}

pub fn app(state: &AppState) -> Router {
    router(state.clone())
}
