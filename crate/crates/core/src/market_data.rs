//! Trade tick ingestion: the Finnhub-shaped wire contract, deterministic CSV
//! replay, and the validated set of tracked tickers.

use std::collections::BTreeSet;
use std::collections::HashMap;
use std::io::{Read, Write};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::OnceLock;
use std::time::Duration;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MarketDataError {
    #[error("malformed message at byte {offset}: {reason}")]
    MalformedMessage { offset: usize, reason: String },
    #[error("replay order violation at row {row}: {ticker} timestamp {timestamp} < {previous}")]
    ReplayOrderViolation {
        row: usize,
        ticker: String,
        timestamp: i64,
        previous: i64,
    },
    #[error("row {line}: {reason}")]
    RowParseError { line: usize, reason: String },
    #[error("invalid tickers: {}", .0.join(", "))]
    InvalidTicker(Vec<String>),
    #[error("invalid tick: {0}")]
    InvalidTick(String),
    #[error("io: {0}")]
    Io(String),
}

fn ticker_pattern() -> &'static Regex {
    static PATTERN: OnceLock<Regex> = OnceLock::new();
    PATTERN.get_or_init(|| Regex::new(r"^[A-Z.\-]{1,10}$").expect("static pattern"))
}

/// True if `symbol` is a well-formed (already uppercased) ticker.
pub fn is_valid_ticker(symbol: &str) -> bool {
    ticker_pattern().is_match(symbol)
}

/// One trade print.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tick {
    pub ticker: String,
    /// Milliseconds since the Unix epoch.
    pub timestamp: i64,
    pub price: f64,
    pub volume: f64,
}

impl Tick {
    /// Builds a tick, enforcing the tick invariants.
    pub fn new(
        ticker: impl Into<String>,
        timestamp: i64,
        price: f64,
        volume: f64,
    ) -> Result<Self, MarketDataError> {
        let tick = Tick {
            ticker: ticker.into(),
            timestamp,
            price,
            volume,
        };
        tick.validate().map_err(MarketDataError::InvalidTick)?;
        Ok(tick)
    }

    pub fn validate(&self) -> Result<(), String> {
        if !is_valid_ticker(&self.ticker) {
            return Err(format!(
                "ticker {:?} does not match [A-Z.-]{{1,10}}",
                self.ticker
            ));
        }
        if self.timestamp <= 0 {
            return Err(format!("timestamp {} must be positive", self.timestamp));
        }
        if !(self.price.is_finite() && self.price > 0.0) {
            return Err(format!("price {} must be positive", self.price));
        }
        if !(self.volume.is_finite() && self.volume >= 0.0) {
            return Err(format!("volume {} must be non-negative", self.volume));
        }
        Ok(())
    }
}

/// Ordered, deduplicated set of tracked symbols with an update revision.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TickerSet {
    tickers: BTreeSet<String>,
    revision: u64,
}

impl TickerSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn revision(&self) -> u64 {
        self.revision
    }

    pub fn contains(&self, ticker: &str) -> bool {
        self.tickers.contains(ticker)
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.tickers.iter().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.tickers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tickers.is_empty()
    }

    pub fn to_vec(&self) -> Vec<String> {
        self.tickers.iter().cloned().collect()
    }
}

/// Replaces the tracked set with `requested`, uppercased and deduplicated.
///
/// The request is rejected as a whole if any symbol is invalid; the error
/// lists every rejected symbol as it was submitted.
pub fn update_tickers<S: AsRef<str>>(
    current: &TickerSet,
    requested: &[S],
) -> Result<TickerSet, MarketDataError> {
    let mut rejected = Vec::new();
    let mut tickers = BTreeSet::new();
    for raw in requested {
        let raw = raw.as_ref();
        let symbol = raw.trim().to_uppercase();
        if is_valid_ticker(&symbol) {
            tickers.insert(symbol);
        } else {
            rejected.push(raw.to_string());
        }
    }
    if !rejected.is_empty() {
        return Err(MarketDataError::InvalidTicker(rejected));
    }
    Ok(TickerSet {
        tickers,
        revision: current.revision + 1,
    })
}

#[derive(Deserialize)]
struct WireMessage {
    #[serde(rename = "type")]
    kind: String,
    #[serde(default)]
    data: Option<Vec<WireTrade>>,
}

#[derive(Deserialize)]
struct WireTrade {
    s: String,
    p: f64,
    v: f64,
    t: i64,
}

/// Parses one feed message into ticks. Non-trade messages yield no ticks.
pub fn parse_trade_message(raw: &str) -> Result<Vec<Tick>, MarketDataError> {
    let message: WireMessage =
        serde_json::from_str(raw).map_err(|e| MarketDataError::MalformedMessage {
            offset: json_error_offset(raw, &e),
            reason: e.to_string(),
        })?;
    if message.kind != "trade" {
        return Ok(Vec::new());
    }
    let trades = message
        .data
        .ok_or_else(|| MarketDataError::MalformedMessage {
            offset: 0,
            reason: "trade message without data array".into(),
        })?;
    let mut ticks = Vec::with_capacity(trades.len());
    for (i, trade) in trades.into_iter().enumerate() {
        let tick = Tick {
            ticker: trade.s,
            timestamp: trade.t,
            price: trade.p,
            volume: trade.v,
        };
        if let Err(reason) = tick.validate() {
            return Err(MarketDataError::MalformedMessage {
                offset: trade_entry_offset(raw, i),
                reason: format!("data[{i}]: {reason}"),
            });
        }
        ticks.push(tick);
    }
    Ok(ticks)
}

fn json_error_offset(raw: &str, err: &serde_json::Error) -> usize {
    let line = err.line();
    if line == 0 {
        return 0;
    }
    let line_start: usize = raw.split_inclusive('\n').take(line - 1).map(str::len).sum();
    (line_start + err.column().saturating_sub(1)).min(raw.len())
}

// Byte offset of the `index`-th object inside the `data` array, best effort.
fn trade_entry_offset(raw: &str, index: usize) -> usize {
    let Some(data_at) = raw.find("\"data\"") else {
        return 0;
    };
    let mut depth = 0usize;
    let mut seen = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (pos, ch) in raw[data_at..].char_indices() {
        if in_string {
            match ch {
                _ if escaped => escaped = false,
                '\\' => escaped = true,
                '"' => in_string = false,
                _ => {}
            }
            continue;
        }
        match ch {
            '"' => in_string = true,
            '[' | '{' => {
                if ch == '{' && depth == 1 {
                    if seen == index {
                        return data_at + pos;
                    }
                    seen += 1;
                }
                depth += 1;
            }
            ']' | '}' => depth = depth.saturating_sub(1),
            _ => {}
        }
    }
    data_at
}

/// Subscription message sent per ticker on (re)connect.
pub fn subscribe_message(ticker: &str) -> String {
    serde_json::json!({ "type": "subscribe", "symbol": ticker }).to_string()
}

/// Drops ticks for symbols outside the active set, counting what it drops.
#[derive(Debug, Default)]
pub struct TickFilter {
    dropped: AtomicU64,
    accepted: AtomicU64,
}

impl TickFilter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn admit(&self, tickers: &TickerSet, tick: &Tick) -> bool {
        if tickers.contains(&tick.ticker) {
            self.accepted.fetch_add(1, Ordering::Relaxed);
            true
        } else {
            self.dropped.fetch_add(1, Ordering::Relaxed);
            false
        }
    }

    pub fn dropped(&self) -> u64 {
        self.dropped.load(Ordering::Relaxed)
    }

    pub fn accepted(&self) -> u64 {
        self.accepted.load(Ordering::Relaxed)
    }
}

/// Replay pacing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReplaySpeed {
    AsFastAsPossible,
    /// Wall-clock delay = timestamp gap / factor.
    Factor(f64),
}

impl std::str::FromStr for ReplaySpeed {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "max" | "asap" | "as-fast-as-possible" => Ok(ReplaySpeed::AsFastAsPossible),
            other => match other.parse::<f64>() {
                Ok(f) if f.is_finite() && f > 0.0 => Ok(ReplaySpeed::Factor(f)),
                _ => Err(format!("invalid replay speed {other:?}")),
            },
        }
    }
}

pub const REPLAY_HEADER: [&str; 4] = ["ticker", "timestamp_ms", "price", "volume"];

#[derive(Debug, Deserialize)]
struct ReplayRow {
    ticker: String,
    timestamp_ms: i64,
    price: f64,
    volume: f64,
}

/// Iterator over a replay CSV (`ticker,timestamp_ms,price,volume`).
///
/// Yields an error and then stops at the first bad row.
pub struct TickReplay<R: Read> {
    rows: csv::DeserializeRecordsIntoIter<R, ReplayRow>,
    speed: ReplaySpeed,
    last_seen: HashMap<String, i64>,
    last_emitted: Option<i64>,
    row: usize,
    failed: bool,
    sleeper: fn(Duration),
}

/// Replays ticks from a CSV reader, preserving row order.
pub fn replay_ticks<R: Read>(source: R, speed: ReplaySpeed) -> TickReplay<R> {
    let reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    TickReplay {
        rows: reader.into_deserialize(),
        speed,
        last_seen: HashMap::new(),
        last_emitted: None,
        row: 0,
        failed: false,
        sleeper: std::thread::sleep,
    }
}

impl<R: Read> TickReplay<R> {
    #[cfg(test)]
    fn with_sleeper(mut self, sleeper: fn(Duration)) -> Self {
        self.sleeper = sleeper;
        self
    }

    fn pace(&mut self, timestamp: i64) {
        if let ReplaySpeed::Factor(factor) = self.speed {
            if let Some(prev) = self.last_emitted {
                let gap = (timestamp - prev).max(0) as f64 / factor;
                if gap > 0.0 {
                    (self.sleeper)(Duration::from_secs_f64(gap / 1000.0));
                }
            }
        }
        self.last_emitted = Some(timestamp);
    }
}

impl<R: Read> Iterator for TickReplay<R> {
    type Item = Result<Tick, MarketDataError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        let record = self.rows.next()?;
        self.row += 1;
        // header occupies line 1
        let line = self.row + 1;
        let parsed = record
            .map_err(|e| MarketDataError::RowParseError {
                line,
                reason: e.to_string(),
            })
            .and_then(|row| {
                Tick::new(row.ticker, row.timestamp_ms, row.price, row.volume).map_err(|e| {
                    MarketDataError::RowParseError {
                        line,
                        reason: e.to_string(),
                    }
                })
            })
            .and_then(|tick| match self.last_seen.get(&tick.ticker) {
                Some(&previous) if tick.timestamp < previous => {
                    Err(MarketDataError::ReplayOrderViolation {
                        row: self.row,
                        ticker: tick.ticker.clone(),
                        timestamp: tick.timestamp,
                        previous,
                    })
                }
                _ => Ok(tick),
            });
        match parsed {
            Ok(tick) => {
                self.last_seen.insert(tick.ticker.clone(), tick.timestamp);
                self.pace(tick.timestamp);
                Some(Ok(tick))
            }
            Err(e) => {
                self.failed = true;
                Some(Err(e))
            }
        }
    }
}

/// Writes ticks in the replay CSV format.
pub fn write_replay_csv<W: Write>(writer: W, ticks: &[Tick]) -> Result<(), MarketDataError> {
    let io = |e: csv::Error| MarketDataError::Io(e.to_string());
    let mut out = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(writer);
    out.write_record(REPLAY_HEADER).map_err(io)?;
    for t in ticks {
        out.write_record([
            t.ticker.clone(),
            t.timestamp.to_string(),
            t.price.to_string(),
            t.volume.to_string(),
        ])
        .map_err(io)?;
    }
    out.flush().map_err(|e| MarketDataError::Io(e.to_string()))
}
