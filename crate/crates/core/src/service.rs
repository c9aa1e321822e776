//! REST service over the live pipeline, plus the simulated-trade journal.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::extract::{Path as UrlPath, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use parking_lot::{Mutex, RwLock};
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;
use tokio::sync::watch;

use crate::backtest::Side;
use crate::market_data::{is_valid_ticker, update_tickers, MarketDataError, TickerSet};
use crate::pipeline::{Pipeline, SnapshotBoard, TickerStateSnapshot};
use crate::sentiment::{SentimentScore, SentimentStore, Staleness};

#[derive(Debug, Error)]
pub enum JournalError {
    #[error("journal io: {0}")]
    Io(#[from] std::io::Error),
    #[error("journal line {line} is corrupt: {reason}")]
    Corrupt { line: usize, reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulatedTrade {
    pub id: u64,
    pub ticker: String,
    pub side: Side,
    pub quantity: f64,
    pub price: f64,
    pub logged_at: i64,
    #[serde(default)]
    pub note: String,
}

#[derive(Debug, Clone, Deserialize)]
pub struct TradeRequest {
    pub ticker: String,
    pub side: Side,
    pub quantity: f64,
    pub price: f64,
    #[serde(default)]
    pub note: String,
}

impl TradeRequest {
    pub fn validate(&self) -> Result<(), String> {
        let ticker = self.ticker.trim().to_uppercase();
        if !is_valid_ticker(&ticker) {
            return Err(format!("invalid ticker {:?}", self.ticker));
        }
        if !(self.quantity.is_finite() && self.quantity > 0.0) {
            return Err(format!("quantity {} must be positive", self.quantity));
        }
        if !(self.price.is_finite() && self.price > 0.0) {
            return Err(format!("price {} must be positive", self.price));
        }
        Ok(())
    }
}

/// Append-only JSON-lines trade journal, replayed on open.
#[derive(Debug)]
pub struct TradeJournal {
    path: PathBuf,
    file: File,
    trades: Vec<SimulatedTrade>,
}

impl TradeJournal {
    pub fn open(path: impl AsRef<Path>) -> Result<Self, JournalError> {
        let path = path.as_ref().to_path_buf();
        let mut trades = Vec::new();
        if path.exists() {
            for (i, line) in BufReader::new(File::open(&path)?).lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let trade: SimulatedTrade =
                    serde_json::from_str(&line).map_err(|e| JournalError::Corrupt {
                        line: i + 1,
                        reason: e.to_string(),
                    })?;
                trades.push(trade);
            }
        }
        trades.sort_by_key(|t| t.id);
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok(TradeJournal { path, file, trades })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn next_id(&self) -> u64 {
        self.trades.last().map_or(1, |t| t.id + 1)
    }

    /// Durably appends a trade; returns it once it has reached disk.
    pub fn append(
        &mut self,
        request: TradeRequest,
        logged_at: i64,
    ) -> Result<SimulatedTrade, JournalError> {
        let trade = SimulatedTrade {
            id: self.next_id(),
            ticker: request.ticker.trim().to_uppercase(),
            side: request.side,
            quantity: request.quantity,
            price: request.price,
            logged_at,
            note: request.note,
        };
        let mut line = serde_json::to_string(&trade).expect("trade serializes");
        line.push('\n');
        self.file.write_all(line.as_bytes())?;
        self.file.sync_data()?;
        self.trades.push(trade.clone());
        Ok(trade)
    }

    pub fn trades(&self) -> &[SimulatedTrade] {
        &self.trades
    }
}

pub type Clock = Arc<dyn Fn() -> i64 + Send + Sync>;

pub fn system_clock() -> Clock {
    Arc::new(|| {
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_millis() as i64)
            .unwrap_or(0)
    })
}

/// Shared state behind the HTTP handlers.
#[derive(Clone)]
pub struct AppState {
    pub pipeline: Arc<Mutex<Pipeline>>,
    pub board: Arc<SnapshotBoard>,
    pub sentiment: Arc<RwLock<SentimentStore>>,
    pub journal: Arc<Mutex<TradeJournal>>,
    pub tickers_tx: Arc<watch::Sender<TickerSet>>,
    pub staleness: Staleness,
    pub poll_interval_secs: u64,
    pub clock: Clock,
}

impl AppState {
    /// Validates and installs a new ticker set, restarting subscriptions.
    pub fn submit_tickers(&self, symbols: &[String]) -> Result<TickerSet, MarketDataError> {
        let mut pipeline = self.pipeline.lock();
        let next = update_tickers(pipeline.tickers(), symbols)?;
        pipeline.set_tickers(next.clone());
        drop(pipeline);
        self.tickers_tx.send_replace(next.clone());
        Ok(next)
    }
}

#[derive(Debug, Serialize)]
pub struct StateResponse {
    #[serde(flatten)]
    pub snapshot: TickerStateSnapshot,
    pub sentiment_stale: bool,
    pub no_bar_yet: bool,
}

fn error_response(status: StatusCode, error: &str, detail: impl Into<String>) -> Response {
    (
        status,
        Json(json!({ "error": error, "detail": detail.into() })),
    )
        .into_response()
}

#[derive(Deserialize)]
struct TickersBody {
    symbols: Vec<String>,
}

async fn post_tickers(State(state): State<AppState>, Json(body): Json<TickersBody>) -> Response {
    match state.submit_tickers(&body.symbols) {
        Ok(set) => {
            Json(json!({ "tickers": set.to_vec(), "revision": set.revision() })).into_response()
        }
        Err(MarketDataError::InvalidTicker(rejected)) => (
            StatusCode::UNPROCESSABLE_ENTITY,
            Json(json!({
                "error": "InvalidTicker",
                "detail": format!("rejected: {}", rejected.join(", ")),
                "rejected": rejected,
            })),
        )
            .into_response(),
        Err(other) => error_response(StatusCode::BAD_REQUEST, "BadRequest", other.to_string()),
    }
}

async fn get_state(State(state): State<AppState>, UrlPath(ticker): UrlPath<String>) -> Response {
    let ticker = ticker.to_uppercase();
    let Some(snapshot) = state.board.get(&ticker) else {
        return error_response(
            StatusCode::NOT_FOUND,
            "UnknownTicker",
            format!("{ticker} is not an active ticker"),
        );
    };
    let now = (state.clock)();
    let sentiment_stale = match (&snapshot.sentiment, state.staleness) {
        (None, _) => true,
        (Some(_), Staleness::UntilSuperseded) => false,
        (Some(s), Staleness::Within(limit)) => now - s.as_of > limit,
    };
    let snapshot = (*snapshot).clone();
    Json(StateResponse {
        no_bar_yet: snapshot.latest_bar.is_none(),
        snapshot,
        sentiment_stale,
    })
    .into_response()
}

async fn get_trades(State(state): State<AppState>) -> Json<Vec<SimulatedTrade>> {
    Json(state.journal.lock().trades().to_vec())
}

async fn post_trade(State(state): State<AppState>, body: axum::body::Bytes) -> Response {
    let request: TradeRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => {
            return error_response(
                StatusCode::UNPROCESSABLE_ENTITY,
                "ValidationError",
                e.to_string(),
            )
        }
    };
    if let Err(detail) = request.validate() {
        return error_response(StatusCode::UNPROCESSABLE_ENTITY, "ValidationError", detail);
    }
    let now = (state.clock)();
    match state.journal.lock().append(request, now) {
        Ok(trade) => (StatusCode::CREATED, Json(trade)).into_response(),
        Err(e) => error_response(
            StatusCode::INTERNAL_SERVER_ERROR,
            "JournalError",
            e.to_string(),
        ),
    }
}

async fn health(State(state): State<AppState>) -> Json<serde_json::Value> {
    let pipeline = state.pipeline.lock();
    Json(json!({
        "status": "ok",
        "tickers": pipeline.tickers().to_vec(),
        "revision": pipeline.tickers().revision(),
        "dropped_untracked": pipeline.dropped_untracked(),
        "poll_interval_secs": state.poll_interval_secs,
    }))
}

async fn get_sentiment(
    State(state): State<AppState>,
    UrlPath(ticker): UrlPath<String>,
) -> Response {
    let ticker = ticker.to_uppercase();
    if state.board.get(&ticker).is_none() {
        return error_response(StatusCode::NOT_FOUND, "UnknownTicker", ticker);
    }
    let scores: Vec<SentimentScore> = state.sentiment.read().scores(&ticker).to_vec();
    Json(scores).into_response()
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/tickers", post(post_tickers))
        .route("/state/{ticker}", get(get_state))
        .route("/sentiment/{ticker}", get(get_sentiment))
        .route("/trades", get(get_trades).post(post_trade))
        .route("/health", get(health))
        .with_state(state)
}
