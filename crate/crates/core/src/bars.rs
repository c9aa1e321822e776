//! Minute bars: incremental per-minute VWAP accumulation, bounded rolling
//! windows, and the historical-bar CSV format.

use std::collections::VecDeque;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::market_data::Tick;

pub const MINUTE_MS: i64 = 60_000;
pub const DEFAULT_WINDOW_CAPACITY: usize = 500;

#[derive(Debug, Error, PartialEq)]
pub enum BarError {
    #[error("ticker mismatch: expected {expected}, got {actual}")]
    TickerMismatch { expected: String, actual: String },
    #[error("tick at {timestamp} is outside minute {minute_start}")]
    MinuteMismatch { minute_start: i64, timestamp: i64 },
    #[error("out-of-order bar: {minute_start} is not after {last}")]
    OutOfOrderBar { minute_start: i64, last: i64 },
    #[error("window capacity must be positive")]
    ZeroCapacity,
    #[error("row {line}: {reason}")]
    RowParseError { line: usize, reason: String },
    #[error("io: {0}")]
    Io(String),
}

/// Start of the minute containing `timestamp`.
pub fn minute_of(timestamp: i64) -> i64 {
    timestamp.div_euclid(MINUTE_MS) * MINUTE_MS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinuteBar {
    pub ticker: String,
    pub minute_start: i64,
    pub vwap: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
    pub total_volume: f64,
    pub trade_count: u64,
}

impl MinuteBar {
    pub fn check_invariants(&self) -> Result<(), String> {
        if self.minute_start.rem_euclid(MINUTE_MS) != 0 {
            return Err(format!(
                "minute_start {} not minute-aligned",
                self.minute_start
            ));
        }
        if self.total_volume.is_nan() || self.total_volume <= 0.0 {
            return Err("total_volume must be positive".into());
        }
        // vwap is a float quotient; allow it to sit one rounding step outside.
        let slack = 4.0 * f64::EPSILON * self.high.abs().max(1.0);
        if !(self.low - slack <= self.vwap && self.vwap <= self.high + slack) {
            return Err(format!(
                "vwap {} outside [{}, {}]",
                self.vwap, self.low, self.high
            ));
        }
        if !(self.low <= self.close && self.close <= self.high) {
            return Err(format!(
                "close {} outside [{}, {}]",
                self.close, self.low, self.high
            ));
        }
        Ok(())
    }
}

/// Running state for one ticker's currently open minute.
#[derive(Debug, Clone, PartialEq)]
pub struct OpenMinute {
    ticker: String,
    minute_start: i64,
    price_volume: f64,
    volume: f64,
    high: f64,
    low: f64,
    close: f64,
    trade_count: u64,
    ticks_seen: u64,
}

/// Outcome of closing a minute.
#[derive(Debug, Clone, PartialEq)]
pub enum MinuteClose {
    Bar(MinuteBar),
    NoTrades,
}

impl MinuteClose {
    pub fn into_bar(self) -> Option<MinuteBar> {
        match self {
            MinuteClose::Bar(b) => Some(b),
            MinuteClose::NoTrades => None,
        }
    }
}

impl OpenMinute {
    pub fn new(ticker: impl Into<String>, minute_start: i64) -> Self {
        OpenMinute {
            ticker: ticker.into(),
            minute_start: minute_of(minute_start),
            price_volume: 0.0,
            volume: 0.0,
            high: f64::NEG_INFINITY,
            low: f64::INFINITY,
            close: f64::NAN,
            trade_count: 0,
            ticks_seen: 0,
        }
    }

    pub fn ticker(&self) -> &str {
        &self.ticker
    }

    pub fn minute_start(&self) -> i64 {
        self.minute_start
    }

    pub fn is_empty(&self) -> bool {
        self.ticks_seen == 0
    }

    /// Folds one tick into the minute. Zero-volume prints move high, low and
    /// close but leave the VWAP sums alone.
    pub fn accumulate(&mut self, tick: &Tick) -> Result<(), BarError> {
        if tick.ticker != self.ticker {
            return Err(BarError::TickerMismatch {
                expected: self.ticker.clone(),
                actual: tick.ticker.clone(),
            });
        }
        if minute_of(tick.timestamp) != self.minute_start {
            return Err(BarError::MinuteMismatch {
                minute_start: self.minute_start,
                timestamp: tick.timestamp,
            });
        }
        if tick.volume > 0.0 {
            self.price_volume += tick.price * tick.volume;
            self.volume += tick.volume;
            self.trade_count += 1;
        }
        self.high = self.high.max(tick.price);
        self.low = self.low.min(tick.price);
        self.close = tick.price;
        self.ticks_seen += 1;
        Ok(())
    }

    pub fn close_minute(&self) -> MinuteClose {
        if self.volume <= 0.0 {
            return MinuteClose::NoTrades;
        }
        // clamp guards the last-ulp rounding of the quotient
        let vwap = (self.price_volume / self.volume).clamp(self.low, self.high);
        MinuteClose::Bar(MinuteBar {
            ticker: self.ticker.clone(),
            minute_start: self.minute_start,
            vwap,
            high: self.high,
            low: self.low,
            close: self.close,
            total_volume: self.volume,
            trade_count: self.trade_count,
        })
    }
}

/// Bounded, chronologically ordered bars for one ticker.
#[derive(Debug, Clone, PartialEq)]
pub struct BarWindow {
    ticker: String,
    capacity: usize,
    bars: VecDeque<MinuteBar>,
}

impl BarWindow {
    pub fn new(ticker: impl Into<String>, capacity: usize) -> Result<Self, BarError> {
        if capacity == 0 {
            return Err(BarError::ZeroCapacity);
        }
        Ok(BarWindow {
            ticker: ticker.into(),
            capacity,
            bars: VecDeque::with_capacity(capacity),
        })
    }

    pub fn ticker(&self) -> &str {
        &self.ticker
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.bars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bars.is_empty()
    }

    pub fn last(&self) -> Option<&MinuteBar> {
        self.bars.back()
    }

    /// Contiguous view of the bars, oldest first.
    pub fn as_slice(&mut self) -> &[MinuteBar] {
        self.bars.make_contiguous()
    }

    /// Immutable copy of the current bars.
    pub fn snapshot(&self) -> Vec<MinuteBar> {
        self.bars.iter().cloned().collect()
    }

    pub fn push_bar(&mut self, bar: MinuteBar) -> Result<(), BarError> {
        if bar.ticker != self.ticker {
            return Err(BarError::TickerMismatch {
                expected: self.ticker.clone(),
                actual: bar.ticker,
            });
        }
        if let Some(last) = self.bars.back() {
            if bar.minute_start <= last.minute_start {
                return Err(BarError::OutOfOrderBar {
                    minute_start: bar.minute_start,
                    last: last.minute_start,
                });
            }
        }
        if self.bars.len() == self.capacity {
            self.bars.pop_front();
        }
        self.bars.push_back(bar);
        Ok(())
    }
}

/// Per-ticker tick-to-bar builder: attributes ticks to minutes by
/// `floor(timestamp / 60 000)`, closes minutes when the clock passes them,
/// and drops late ticks for already-closed minutes.
#[derive(Debug, Clone)]
pub struct BarBuilder {
    ticker: String,
    open: Option<OpenMinute>,
    last_closed: Option<i64>,
    late_dropped: u64,
}

impl BarBuilder {
    pub fn new(ticker: impl Into<String>) -> Self {
        BarBuilder {
            ticker: ticker.into(),
            open: None,
            last_closed: None,
            late_dropped: 0,
        }
    }

    pub fn late_dropped(&self) -> u64 {
        self.late_dropped
    }

    pub fn open_minute(&self) -> Option<&OpenMinute> {
        self.open.as_ref()
    }

    /// Feeds a tick; returns a finished bar if the tick opened a new minute.
    pub fn push(&mut self, tick: &Tick) -> Result<Option<MinuteBar>, BarError> {
        let minute = minute_of(tick.timestamp);
        if matches!(self.last_closed, Some(closed) if minute <= closed) {
            self.late_dropped += 1;
            return Ok(None);
        }
        let mut finished = None;
        match &self.open {
            Some(open) if open.minute_start() == minute => {}
            Some(open) if minute < open.minute_start() => {
                self.late_dropped += 1;
                return Ok(None);
            }
            _ => {
                finished = self.close_open();
                self.open = Some(OpenMinute::new(self.ticker.clone(), minute));
            }
        }
        self.open
            .as_mut()
            .expect("open minute set above")
            .accumulate(tick)?;
        Ok(finished)
    }

    /// Closes the open minute if `now` is at or beyond its end.
    pub fn close_due(&mut self, now: i64) -> Option<MinuteBar> {
        match &self.open {
            Some(open) if now >= open.minute_start() + MINUTE_MS => self.close_open(),
            _ => None,
        }
    }

    /// Closes whatever minute is open regardless of the clock.
    pub fn flush(&mut self) -> Option<MinuteBar> {
        self.close_open()
    }

    fn close_open(&mut self) -> Option<MinuteBar> {
        let open = self.open.take()?;
        self.last_closed = Some(open.minute_start());
        open.close_minute().into_bar()
    }
}

pub const BAR_HEADER: [&str; 7] = [
    "ticker",
    "minute_start_ms",
    "vwap",
    "high",
    "low",
    "close",
    "volume",
];

#[derive(Debug, Deserialize)]
struct BarRow {
    ticker: String,
    minute_start_ms: i64,
    vwap: f64,
    high: f64,
    low: f64,
    close: f64,
    volume: f64,
}

/// Reads the historical-bar CSV. Trade counts are not part of the format and
/// load as 1.
pub fn read_bars_csv<R: Read>(source: R) -> Result<Vec<MinuteBar>, BarError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(source);
    let mut bars = Vec::new();
    for (i, row) in reader.deserialize::<BarRow>().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| BarError::RowParseError {
            line,
            reason: e.to_string(),
        })?;
        let bar = MinuteBar {
            ticker: row.ticker,
            minute_start: row.minute_start_ms,
            vwap: row.vwap,
            high: row.high,
            low: row.low,
            close: row.close,
            total_volume: row.volume,
            trade_count: 1,
        };
        bar.check_invariants()
            .map_err(|reason| BarError::RowParseError { line, reason })?;
        bars.push(bar);
    }
    Ok(bars)
}

pub fn write_bars_csv<W: Write>(writer: W, bars: &[MinuteBar]) -> Result<(), BarError> {
    let io = |e: csv::Error| BarError::Io(e.to_string());
    let mut out = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(writer);
    out.write_record(BAR_HEADER).map_err(io)?;
    for b in bars {
        out.write_record([
            b.ticker.clone(),
            b.minute_start.to_string(),
            b.vwap.to_string(),
            b.high.to_string(),
            b.low.to_string(),
            b.close.to_string(),
            b.total_volume.to_string(),
        ])
        .map_err(io)?;
    }
    out.flush().map_err(|e| BarError::Io(e.to_string()))
}
