//! Wiring for `serve`: feed tasks, the sentiment worker, and the HTTP
//! listener, all sharing one [`AppState`].

use std::sync::Arc;
use std::thread;
use std::time::Duration;

use futures::{SinkExt, StreamExt};
use parking_lot::{Mutex, RwLock};
use tokio::sync::watch;
use tokio_tungstenite::tungstenite::Message;

use crate::config::{EngineConfig, FeedKind, ProviderKind};
use crate::market_data::{
    parse_trade_message, replay_ticks, subscribe_message, update_tickers, ReplaySpeed, TickerSet,
};
use crate::pipeline::{Pipeline, PipelineSettings, SnapshotBoard};
use crate::sentiment::{
    refresh_ticker, FixtureProvider, FixtureSummarizer, FixtureTextSource, HttpProvider,
    SentimentError, SentimentProvider, SentimentStore, Summarizer, TextSource,
};
use crate::service::{AppState, Clock, JournalError, TradeJournal};

#[derive(Debug, thiserror::Error)]
pub enum RuntimeError {
    #[error(transparent)]
    Journal(#[from] JournalError),
    #[error(transparent)]
    Sentiment(#[from] SentimentError),
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub fn pipeline_settings(config: &EngineConfig) -> PipelineSettings {
    PipelineSettings {
        window_capacity: config.engine.window_capacity,
        indicators: config.engine.indicators.clone(),
        fusion: config.engine.fusion.clone(),
        mode: config.engine.mode,
        ..PipelineSettings::default()
    }
}

/// Builds the shared state: pipeline, journal (replayed from disk), and the
/// initial ticker set from config.
pub fn build_state(config: &EngineConfig, clock: Clock) -> Result<AppState, RuntimeError> {
    config
        .engine
        .indicators
        .validate()
        .map_err(|e| RuntimeError::Config(e.to_string()))?;
    config
        .engine
        .fusion
        .validate()
        .map_err(|e| RuntimeError::Config(e.to_string()))?;
    let board = Arc::new(SnapshotBoard::new());
    let sentiment = Arc::new(RwLock::new(SentimentStore::new()));
    let mut pipeline = Pipeline::new(pipeline_settings(config), sentiment.clone(), board.clone());
    let initial = update_tickers(&TickerSet::new(), &config.server.initial_tickers)
        .map_err(|e| RuntimeError::Config(e.to_string()))?;
    pipeline.set_tickers(initial.clone());
    let (tx, _rx) = watch::channel(initial);
    Ok(AppState {
        pipeline: Arc::new(Mutex::new(pipeline)),
        board,
        sentiment,
        journal: Arc::new(Mutex::new(TradeJournal::open(&config.server.journal)?)),
        tickers_tx: Arc::new(tx),
        staleness: config.engine.fusion.staleness,
        poll_interval_secs: config.server.poll_interval_secs,
        clock,
    })
}

/// Streams trades from a Finnhub-style WebSocket. Each ticker-set change
/// drops the connection and resubscribes; failures retry after `retry`.
pub async fn run_websocket_feed(state: AppState, url: String, retry: Duration) {
    let mut rx = state.tickers_tx.subscribe();
    loop {
        let tickers = rx.borrow_and_update().clone();
        if tickers.is_empty() {
            if rx.changed().await.is_err() {
                return;
            }
            continue;
        }
        let restart = match tokio_tungstenite::connect_async(url.as_str()).await {
            Ok((mut ws, _)) => {
                let mut ok = true;
                for t in tickers.iter() {
                    if let Err(err) = ws.send(Message::Text(subscribe_message(t).into())).await {
                        tracing::warn!(%err, "subscribe failed");
                        ok = false;
                        break;
                    }
                }
                let mut restart = false;
                if ok {
                    loop {
                        tokio::select! {
                            changed = rx.changed() => {
                                if changed.is_err() {
                                    return;
                                }
                                restart = true;
                                let _ = ws.close(None).await;
                                break;
                            }
                            msg = ws.next() => match msg {
                                Some(Ok(Message::Text(text))) => match parse_trade_message(text.as_str()) {
                                    Ok(ticks) if !ticks.is_empty() => {
                                        let mut pipeline = state.pipeline.lock();
                                        for tick in &ticks {
                                            pipeline.on_tick(tick);
                                        }
                                    }
                                    Ok(_) => {}
                                    Err(err) => tracing::warn!(%err, "dropping malformed feed message"),
                                },
                                Some(Ok(Message::Close(_))) | None => break,
                                Some(Ok(_)) => {}
                                Some(Err(err)) => {
                                    tracing::warn!(%err, "feed connection error");
                                    break;
                                }
                            }
                        }
                    }
                }
                restart
            }
            Err(err) => {
                tracing::warn!(%err, "feed connect failed");
                false
            }
        };
        if !restart {
            tokio::select! {
                _ = tokio::time::sleep(retry) => {}
                changed = rx.changed() => if changed.is_err() { return },
            }
        }
    }
}

/// Closes minutes on wall-clock time so quiet tickers still publish bars.
pub async fn run_clock(state: AppState, every: Duration) {
    let mut interval = tokio::time::interval(every);
    loop {
        interval.tick().await;
        let now = (state.clock)();
        state.pipeline.lock().advance_clock(now);
    }
}

/// Replays a tick CSV into the pipeline on a blocking thread.
pub fn spawn_replay_feed(
    state: AppState,
    path: std::path::PathBuf,
    speed: ReplaySpeed,
) -> thread::JoinHandle<Result<u64, RuntimeError>> {
    thread::spawn(move || {
        let file = std::fs::File::open(&path)?;
        let mut count = 0;
        for tick in replay_ticks(std::io::BufReader::new(file), speed) {
            match tick {
                Ok(tick) => {
                    state.pipeline.lock().on_tick(&tick);
                    count += 1;
                }
                Err(err) => {
                    tracing::error!(%err, "replay stopped");
                    break;
                }
            }
        }
        state.pipeline.lock().flush();
        Ok(count)
    })
}

pub struct SentimentWorker {
    pub sources: Vec<Box<dyn TextSource>>,
    pub summarizer: Box<dyn Summarizer>,
    pub provider: Box<dyn SentimentProvider>,
    pub poll: Duration,
}

impl SentimentWorker {
    pub fn from_config(config: &EngineConfig) -> Result<Self, RuntimeError> {
        let mut sources: Vec<Box<dyn TextSource>> = Vec::new();
        for path in [
            &config.sentiment.news_fixture,
            &config.sentiment.reddit_fixture,
        ]
        .into_iter()
        .flatten()
        {
            let file = std::io::BufReader::new(std::fs::File::open(path)?);
            sources.push(Box::new(FixtureTextSource::from_jsonl(file)?));
        }
        let provider: Box<dyn SentimentProvider> = match config.sentiment.provider {
            ProviderKind::Fixture => Box::new(FixtureProvider),
            ProviderKind::Http => {
                let endpoint = std::env::var(&config.sentiment.endpoint_env).map_err(|_| {
                    RuntimeError::Config(format!("{} is not set", config.sentiment.endpoint_env))
                })?;
                Box::new(HttpProvider::new(
                    endpoint,
                    Duration::from_secs(config.sentiment.timeout_secs),
                )?)
            }
        };
        Ok(SentimentWorker {
            sources,
            summarizer: Box::new(FixtureSummarizer {
                cap: config.sentiment.summary_cap,
            }),
            provider,
            poll: Duration::from_secs(config.sentiment.poll_secs.max(1)),
        })
    }

    /// One pass over the active tickers. Returns how many scores were added.
    pub fn poll_once(&self, state: &AppState) -> Result<usize, SentimentError> {
        let tickers = state.pipeline.lock().tickers().to_vec();
        let mut added = 0;
        for ticker in tickers {
            let since = state
                .sentiment
                .read()
                .scores(&ticker)
                .last()
                .map_or(0, |s| s.as_of);
            if let Some(score) = refresh_ticker(
                &self.sources,
                self.summarizer.as_ref(),
                self.provider.as_ref(),
                &ticker,
                since,
            )? {
                state.pipeline.lock().on_sentiment(score);
                added += 1;
            }
        }
        Ok(added)
    }

    pub fn spawn(self, state: AppState) -> thread::JoinHandle<()> {
        thread::spawn(move || loop {
            let wait = match self.poll_once(&state) {
                Ok(_) => self.poll,
                Err(SentimentError::ProviderUnavailable {
                    reason,
                    retry_after,
                }) => {
                    tracing::warn!(%reason, "sentiment provider unavailable");
                    retry_after.unwrap_or(self.poll)
                }
                Err(err) => {
                    tracing::warn!(%err, "sentiment refresh failed");
                    self.poll
                }
            };
            thread::sleep(wait);
        })
    }
}

/// Runs the service until the process is interrupted.
pub async fn serve(config: EngineConfig, clock: Clock) -> Result<(), RuntimeError> {
    let state = build_state(&config, clock)?;
    SentimentWorker::from_config(&config)?.spawn(state.clone());
    match config.feed.kind {
        FeedKind::Websocket => {
            let key = std::env::var(&config.feed.api_key_env).unwrap_or_default();
            let url = if key.is_empty() {
                config.feed.url.clone()
            } else {
                format!("{}?token={}", config.feed.url, key)
            };
            tokio::spawn(run_websocket_feed(
                state.clone(),
                url,
                Duration::from_secs(config.feed.retry_secs.max(1)),
            ));
            tokio::spawn(run_clock(state.clone(), Duration::from_secs(1)));
        }
        FeedKind::Replay => {
            let path = config.feed.replay_path.clone().ok_or_else(|| {
                RuntimeError::Config("feed.replay_path is required for replay feeds".into())
            })?;
            let speed = config
                .feed
                .speed()
                .map_err(|e| RuntimeError::Config(e.to_string()))?;
            spawn_replay_feed(state.clone(), path, speed);
        }
        FeedKind::None => {}
    }
    let listener = tokio::net::TcpListener::bind(&config.server.bind).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, crate::service::router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
