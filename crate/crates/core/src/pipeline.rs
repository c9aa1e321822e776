//! The live signal pipeline: ticks in, closed bars and fused signals out.
//!
//! A [`Pipeline`] owns one bar builder and rolling window per tracked
//! ticker. Whenever a minute closes it computes every strategy's signal on
//! the updated window, fuses each with the latest sentiment, and publishes a
//! new snapshot for that ticker in a single swap so readers never see a bar
//! without its signals.

use std::collections::BTreeMap;
use std::io::Write;
use std::sync::Arc;

use parking_lot::RwLock;
use serde::Serialize;

use crate::bars::{BarBuilder, BarWindow, MinuteBar};
use crate::indicators::{latest_signal, IndicatorParams, StrategyKind};
use crate::market_data::{Tick, TickFilter, TickerSet};
use crate::sentiment::{SentimentLookup, SentimentScore, SentimentStore};
use crate::strategy::{fuse, CombinedSignal, FusionParams, Mode};

const SPARKLINE_LEN: usize = 60;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BarView {
    pub bar_time: i64,
    pub vwap: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
    pub volume: f64,
}

impl From<&MinuteBar> for BarView {
    fn from(b: &MinuteBar) -> Self {
        BarView {
            bar_time: b.minute_start,
            vwap: b.vwap,
            high: b.high,
            low: b.low,
            close: b.close,
            volume: b.total_volume,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Counters {
    pub ingested: u64,
    pub late_dropped: u64,
    pub bars: u64,
}

/// Everything the service reports about one ticker at one instant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TickerStateSnapshot {
    pub ticker: String,
    pub latest_bar: Option<BarView>,
    pub recent_vwap: Vec<f64>,
    pub signals: Vec<CombinedSignal>,
    pub sentiment: Option<SentimentScore>,
    pub counters: Counters,
}

impl TickerStateSnapshot {
    pub fn empty(ticker: &str) -> Self {
        TickerStateSnapshot {
            ticker: ticker.to_string(),
            latest_bar: None,
            recent_vwap: Vec::new(),
            signals: Vec::new(),
            sentiment: None,
            counters: Counters::default(),
        }
    }
}

/// Latest published snapshot per ticker. Writers swap whole snapshots.
#[derive(Debug, Default)]
pub struct SnapshotBoard {
    snapshots: RwLock<BTreeMap<String, Arc<TickerStateSnapshot>>>,
}

impl SnapshotBoard {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, ticker: &str) -> Option<Arc<TickerStateSnapshot>> {
        self.snapshots.read().get(ticker).cloned()
    }

    pub fn tickers(&self) -> Vec<String> {
        self.snapshots.read().keys().cloned().collect()
    }

    pub fn publish(&self, snapshot: TickerStateSnapshot) {
        self.snapshots
            .write()
            .insert(snapshot.ticker.clone(), Arc::new(snapshot));
    }

    pub fn remove(&self, ticker: &str) {
        self.snapshots.write().remove(ticker);
    }

    /// Replaces the sentiment of an existing snapshot, leaving bar and
    /// signals untouched.
    pub fn update_sentiment(&self, score: SentimentScore) {
        let mut map = self.snapshots.write();
        if let Some(current) = map.get(&score.ticker) {
            let mut next = (**current).clone();
            next.sentiment = Some(score);
            map.insert(next.ticker.clone(), Arc::new(next));
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineSettings {
    pub window_capacity: usize,
    pub indicators: IndicatorParams,
    pub fusion: FusionParams,
    pub mode: Mode,
    pub strategies: Vec<StrategyKind>,
}

impl Default for PipelineSettings {
    fn default() -> Self {
        PipelineSettings {
            window_capacity: crate::bars::DEFAULT_WINDOW_CAPACITY,
            indicators: IndicatorParams::default(),
            fusion: FusionParams::default(),
            mode: Mode::Sentiment,
            strategies: StrategyKind::ALL.to_vec(),
        }
    }
}

/// A closed bar together with the signals computed on it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BarEvent {
    pub bar: MinuteBar,
    pub signals: Vec<CombinedSignal>,
    pub sentiment: Option<SentimentScore>,
}

struct TickerLane {
    builder: BarBuilder,
    window: BarWindow,
    counters: Counters,
}

pub struct Pipeline {
    settings: PipelineSettings,
    tickers: TickerSet,
    filter: TickFilter,
    lanes: BTreeMap<String, TickerLane>,
    sentiment: Arc<RwLock<SentimentStore>>,
    board: Arc<SnapshotBoard>,
    clock: i64,
}

impl Pipeline {
    pub fn new(
        settings: PipelineSettings,
        sentiment: Arc<RwLock<SentimentStore>>,
        board: Arc<SnapshotBoard>,
    ) -> Self {
        Pipeline {
            settings,
            tickers: TickerSet::new(),
            filter: TickFilter::new(),
            lanes: BTreeMap::new(),
            sentiment,
            board,
            clock: 0,
        }
    }

    pub fn tickers(&self) -> &TickerSet {
        &self.tickers
    }

    pub fn dropped_untracked(&self) -> u64 {
        self.filter.dropped()
    }

    pub fn clock(&self) -> i64 {
        self.clock
    }

    /// Switches the tracked set. Removed tickers have their open minute
    /// drained into a final bar before they are forgotten.
    pub fn set_tickers(&mut self, tickers: TickerSet) -> Vec<BarEvent> {
        let mut events = Vec::new();
        let removed: Vec<String> = self
            .lanes
            .keys()
            .filter(|t| !tickers.contains(t))
            .cloned()
            .collect();
        for ticker in removed {
            if let Some(mut lane) = self.lanes.remove(&ticker) {
                if let Some(bar) = lane.builder.flush() {
                    if let Some(event) = self.finish_bar(&mut lane, bar, false) {
                        events.push(event);
                    }
                }
            }
            self.board.remove(&ticker);
        }
        for ticker in tickers.iter() {
            if !self.lanes.contains_key(ticker) {
                let window = BarWindow::new(ticker, self.settings.window_capacity.max(1))
                    .expect("capacity clamped positive");
                self.lanes.insert(
                    ticker.to_string(),
                    TickerLane {
                        builder: BarBuilder::new(ticker),
                        window,
                        counters: Counters::default(),
                    },
                );
                let mut empty = TickerStateSnapshot::empty(ticker);
                empty.sentiment = self.latest_score(ticker, i64::MAX);
                self.board.publish(empty);
            }
        }
        self.tickers = tickers;
        events
    }

    /// Feeds one tick, first closing any minutes the tick's timestamp has
    /// moved past.
    pub fn on_tick(&mut self, tick: &Tick) -> Vec<BarEvent> {
        let mut events = self.advance_clock(tick.timestamp);
        if !self.filter.admit(&self.tickers, tick) {
            return events;
        }
        let Some(mut lane) = self.lanes.remove(&tick.ticker) else {
            return events;
        };
        lane.counters.ingested += 1;
        let before = lane.builder.late_dropped();
        match lane.builder.push(tick) {
            Ok(Some(bar)) => {
                if let Some(e) = self.finish_bar(&mut lane, bar, true) {
                    events.push(e);
                }
            }
            Ok(None) => {}
            Err(err) => tracing::warn!(%err, "tick rejected by bar builder"),
        }
        lane.counters.late_dropped += lane.builder.late_dropped() - before;
        self.lanes.insert(tick.ticker.clone(), lane);
        events
    }

    /// Closes every open minute that ends at or before `now`.
    pub fn advance_clock(&mut self, now: i64) -> Vec<BarEvent> {
        if now <= self.clock {
            return Vec::new();
        }
        self.clock = now;
        let due: Vec<String> = self
            .lanes
            .iter()
            .filter(|(_, lane)| {
                lane.builder
                    .open_minute()
                    .is_some_and(|m| now >= m.minute_start() + crate::bars::MINUTE_MS)
            })
            .map(|(t, _)| t.clone())
            .collect();
        let mut events = Vec::new();
        for ticker in due {
            let mut lane = self.lanes.remove(&ticker).expect("listed above");
            if let Some(bar) = lane.builder.close_due(now) {
                if let Some(e) = self.finish_bar(&mut lane, bar, true) {
                    events.push(e);
                }
            }
            self.lanes.insert(ticker, lane);
        }
        events
    }

    /// Closes every open minute regardless of the clock (end of replay).
    pub fn flush(&mut self) -> Vec<BarEvent> {
        let tickers: Vec<String> = self.lanes.keys().cloned().collect();
        let mut events = Vec::new();
        for ticker in tickers {
            let mut lane = self.lanes.remove(&ticker).expect("key listed");
            if let Some(bar) = lane.builder.flush() {
                if let Some(e) = self.finish_bar(&mut lane, bar, true) {
                    events.push(e);
                }
            }
            self.lanes.insert(ticker, lane);
        }
        events
    }

    /// Re-publishes a ticker's snapshot with a new sentiment score.
    pub fn on_sentiment(&mut self, score: SentimentScore) {
        let ticker = score.ticker.clone();
        self.sentiment.write().insert(score.clone());
        if self.lanes.contains_key(&ticker) {
            self.board.update_sentiment(score);
        }
    }

    fn latest_score(&self, ticker: &str, as_of: i64) -> Option<SentimentScore> {
        self.sentiment
            .read()
            .latest(ticker, as_of, crate::sentiment::Staleness::UntilSuperseded)
            .score()
            .cloned()
    }

    fn finish_bar(
        &mut self,
        lane: &mut TickerLane,
        bar: MinuteBar,
        publish: bool,
    ) -> Option<BarEvent> {
        if let Err(err) = lane.window.push_bar(bar.clone()) {
            tracing::warn!(%err, "bar rejected by window");
            return None;
        }
        lane.counters.bars += 1;
        let bars = lane.window.as_slice();
        let store = self.sentiment.read();
        let lookup = store.latest(
            &bar.ticker,
            bar.minute_start,
            self.settings.fusion.staleness,
        );
        let signals: Vec<CombinedSignal> = self
            .settings
            .strategies
            .iter()
            .filter_map(|&s| latest_signal(s, bars, &self.settings.indicators))
            .map(|technical| {
                fuse(
                    &technical,
                    &lookup,
                    self.settings.mode,
                    &self.settings.fusion,
                )
            })
            .collect();
        let fresh = match lookup {
            SentimentLookup::Fresh(s) => Some(s.clone()),
            SentimentLookup::Stale => None,
        };
        // the snapshot shows the newest score even when it is too old to trade on
        let shown = store
            .latest(
                &bar.ticker,
                i64::MAX,
                crate::sentiment::Staleness::UntilSuperseded,
            )
            .score()
            .cloned();
        drop(store);
        let start = bars.len().saturating_sub(SPARKLINE_LEN);
        let snapshot = TickerStateSnapshot {
            ticker: bar.ticker.clone(),
            latest_bar: Some(BarView::from(&bar)),
            recent_vwap: bars[start..].iter().map(|b| b.vwap).collect(),
            signals: signals.clone(),
            sentiment: shown,
            counters: lane.counters.clone(),
        };
        if publish {
            self.board.publish(snapshot);
        }
        Some(BarEvent {
            bar,
            signals,
            sentiment: fresh,
        })
    }
}

pub const SIGNAL_LOG_HEADER: &str = "bar_time,ticker,vwap,strategy,direction,size_fraction,mode";

/// Writes one signal-log line per (bar, strategy).
pub fn write_signal_log<W: Write>(out: &mut W, event: &BarEvent) -> std::io::Result<()> {
    for s in &event.signals {
        writeln!(
            out,
            "{},{},{:.6},{},{},{:.2},{}",
            event.bar.minute_start,
            event.bar.ticker,
            event.bar.vwap,
            s.strategy,
            s.direction,
            s.size_fraction,
            s.mode
        )?;
    }
    Ok(())
}
