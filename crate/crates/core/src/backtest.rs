//! Position-based historical simulation over minute bars and sentiment
//! scores, with flip-triggered profit taking and terminal close-out, plus
//! the Sharpe / win-ratio metrics and the base-vs-sentiment comparison grid.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bars::MinuteBar;
use crate::indicators::{
    direction_series, Direction, IndicatorParams, StrategyKind, TechnicalSignal,
};
use crate::sentiment::{latest_in, SentimentScore, Staleness};
use crate::strategy::{fuse, FusionParams, Mode};

#[derive(Debug, Error, PartialEq)]
pub enum BacktestError {
    #[error("no bars to backtest")]
    EmptyBars,
    #[error("non-chronological input: {0}")]
    NonChronologicalInput(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("empty comparison grid")]
    EmptyGrid,
    #[error("io: {0}")]
    Io(String),
}

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("need at least 2 returns, have {0}")]
    InsufficientReturns(usize),
    #[error("returns have zero volatility")]
    ZeroVolatility,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Long,
    Short,
}

impl Side {
    fn from_direction(d: Direction) -> Option<Side> {
        match d {
            Direction::Long => Some(Side::Long),
            Direction::Short => Some(Side::Short),
            Direction::Hold => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Side::Long => "long",
            Side::Short => "short",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub ticker: String,
    pub side: Side,
    pub quantity: f64,
    pub entry_price: f64,
    pub entry_time: i64,
}

impl Position {
    pub fn pnl_at(&self, price: f64) -> f64 {
        match self.side {
            Side::Long => self.quantity * (price - self.entry_price),
            Side::Short => self.quantity * (self.entry_price - price),
        }
    }

    fn close(self, price: f64, time: i64) -> TradeRecord {
        let realized_pnl = self.pnl_at(price);
        TradeRecord {
            ticker: self.ticker,
            side: self.side,
            quantity: self.quantity,
            entry_price: self.entry_price,
            entry_time: self.entry_time,
            exit_price: price,
            exit_time: time,
            realized_pnl,
            winning: realized_pnl > 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeRecord {
    pub ticker: String,
    pub side: Side,
    pub quantity: f64,
    pub entry_price: f64,
    pub entry_time: i64,
    pub exit_price: f64,
    pub exit_time: i64,
    pub realized_pnl: f64,
    pub winning: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BacktestConfig {
    pub initial_cash: f64,
    pub mode: Mode,
    pub strategy: StrategyKind,
    pub indicators: IndicatorParams,
    pub fusion: FusionParams,
}

impl Default for BacktestConfig {
    fn default() -> Self {
        BacktestConfig {
            initial_cash: 10_000.0,
            mode: Mode::Base,
            strategy: StrategyKind::SmaCrossover,
            indicators: IndicatorParams::default(),
            // historical scores apply until the next one arrives
            fusion: FusionParams {
                staleness: Staleness::UntilSuperseded,
                ..FusionParams::default()
            },
        }
    }
}

impl BacktestConfig {
    pub fn validate(&self) -> Result<(), BacktestError> {
        if !(self.initial_cash.is_finite() && self.initial_cash > 0.0) {
            return Err(BacktestError::InvalidConfig(format!(
                "initial_cash {} must be positive",
                self.initial_cash
            )));
        }
        self.indicators
            .validate()
            .map_err(|e| BacktestError::InvalidConfig(e.to_string()))?;
        self.fusion
            .validate()
            .map_err(|e| BacktestError::InvalidConfig(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquityPoint {
    pub bar_time: i64,
    pub equity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestReport {
    pub ticker: String,
    pub config: BacktestConfig,
    pub trades: Vec<TradeRecord>,
    pub equity_curve: Vec<EquityPoint>,
    pub sharpe: Option<f64>,
    pub win_ratio: Option<f64>,
    pub trade_count: usize,
    pub final_equity: f64,
}

/// Mean excess return over the sample (ddof = 1) standard deviation.
pub fn sharpe_ratio(returns: &[f64], risk_free: f64) -> Result<f64, MetricError> {
    if returns.len() < 2 {
        return Err(MetricError::InsufficientReturns(returns.len()));
    }
    // identical returns can leave a rounding-noise std in floating point
    if returns.iter().all(|&r| r == returns[0]) {
        return Err(MetricError::ZeroVolatility);
    }
    let n = returns.len() as f64;
    let mean = returns.iter().sum::<f64>() / n;
    let variance = returns.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let std = variance.sqrt();
    if std == 0.0 || !std.is_finite() {
        return Err(MetricError::ZeroVolatility);
    }
    Ok((mean - risk_free) / std)
}

/// Winning trades over all trades; `None` when there are no trades.
pub fn win_ratio(trades: &[TradeRecord]) -> Option<f64> {
    if trades.is_empty() {
        return None;
    }
    let wins = trades.iter().filter(|t| t.winning).count();
    Some(wins as f64 / trades.len() as f64)
}

/// Simple per-period returns of an equity curve.
pub fn equity_returns(curve: &[EquityPoint]) -> Vec<f64> {
    curve
        .windows(2)
        .map(|w| w[1].equity / w[0].equity - 1.0)
        .collect()
}

fn check_inputs(bars: &[MinuteBar], sentiments: &[SentimentScore]) -> Result<(), BacktestError> {
    let first = bars.first().ok_or(BacktestError::EmptyBars)?;
    if let Some(other) = bars.iter().find(|b| b.ticker != first.ticker) {
        return Err(BacktestError::NonChronologicalInput(format!(
            "bars mix tickers {} and {}",
            first.ticker, other.ticker
        )));
    }
    if let Some(w) = bars
        .windows(2)
        .find(|w| w[1].minute_start <= w[0].minute_start)
    {
        return Err(BacktestError::NonChronologicalInput(format!(
            "bar {} follows {}",
            w[1].minute_start, w[0].minute_start
        )));
    }
    if let Some(w) = sentiments.windows(2).find(|w| w[1].as_of < w[0].as_of) {
        return Err(BacktestError::NonChronologicalInput(format!(
            "sentiment {} follows {}",
            w[1].as_of, w[0].as_of
        )));
    }
    Ok(())
}

/// Runs one strategy over one ticker's bars.
///
/// Execution is at bar VWAP with no costs; size is a fraction of initial
/// cash. Same-side signals do not add to a position, an opposite signal
/// closes and reverses it, and anything open at the end is closed at the
/// last bar.
pub fn run_backtest(
    bars: &[MinuteBar],
    sentiments: &[SentimentScore],
    config: &BacktestConfig,
) -> Result<BacktestReport, BacktestError> {
    config.validate()?;
    check_inputs(bars, sentiments)?;
    let ticker = bars[0].ticker.clone();
    let scores: Vec<SentimentScore> = sentiments
        .iter()
        .filter(|s| s.ticker == ticker)
        .cloned()
        .collect();
    let directions = direction_series(config.strategy, bars, &config.indicators);

    let mut position: Option<Position> = None;
    let mut trades = Vec::new();
    let mut realized = 0.0;
    let mut equity_curve = Vec::with_capacity(bars.len());

    for (bar, &direction) in bars.iter().zip(&directions) {
        let technical = TechnicalSignal {
            ticker: ticker.clone(),
            bar_time: bar.minute_start,
            direction,
            strategy: config.strategy,
        };
        let lookup = latest_in(&scores, bar.minute_start, config.fusion.staleness);
        let decision = fuse(&technical, &lookup, config.mode, &config.fusion);
        let price = bar.vwap;
        if let Some(side) = Side::from_direction(decision.direction) {
            let flip = match &position {
                Some(open) => open.side != side,
                None => true,
            };
            if flip {
                if let Some(open) = position.take() {
                    let trade = open.close(price, bar.minute_start);
                    realized += trade.realized_pnl;
                    trades.push(trade);
                }
                position = Some(Position {
                    ticker: ticker.clone(),
                    side,
                    quantity: decision.size_fraction * config.initial_cash / price,
                    entry_price: price,
                    entry_time: bar.minute_start,
                });
            }
        }
        let unrealized = position.as_ref().map_or(0.0, |p| p.pnl_at(price));
        equity_curve.push(EquityPoint {
            bar_time: bar.minute_start,
            equity: config.initial_cash + realized + unrealized,
        });
    }

    let last = bars.last().expect("non-empty checked");
    if let Some(open) = position.take() {
        let trade = open.close(last.vwap, last.minute_start);
        realized += trade.realized_pnl;
        trades.push(trade);
    }
    let final_equity = config.initial_cash + realized;
    if let Some(point) = equity_curve.last_mut() {
        point.equity = final_equity;
    }

    let sharpe = sharpe_ratio(&equity_returns(&equity_curve), 0.0).ok();
    Ok(BacktestReport {
        ticker,
        config: config.clone(),
        win_ratio: win_ratio(&trades),
        trade_count: trades.len(),
        trades,
        equity_curve,
        sharpe,
        final_equity,
    })
}

fn fmt_opt(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.digits$}"))
}

fn fmt_pct(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{:.1}%", x * 100.0))
}

impl BacktestReport {
    pub fn write_summary_csv<W: Write>(&self, writer: W) -> Result<(), BacktestError> {
        let io = |e: csv::Error| BacktestError::Io(e.to_string());
        let mut out = csv::Writer::from_writer(writer);
        out.write_record([
            "ticker",
            "strategy",
            "mode",
            "initial_cash",
            "final_equity",
            "trade_count",
            "win_ratio",
            "sharpe",
        ])
        .map_err(io)?;
        out.write_record([
            self.ticker.clone(),
            self.config.strategy.to_string(),
            self.config.mode.to_string(),
            format!("{:.2}", self.config.initial_cash),
            format!("{:.6}", self.final_equity),
            self.trade_count.to_string(),
            fmt_opt(self.win_ratio, 6),
            fmt_opt(self.sharpe, 6),
        ])
        .map_err(io)?;
        out.flush().map_err(|e| BacktestError::Io(e.to_string()))
    }

    pub fn write_trades_csv<W: Write>(&self, writer: W) -> Result<(), BacktestError> {
        let io = |e: csv::Error| BacktestError::Io(e.to_string());
        let mut out = csv::Writer::from_writer(writer);
        out.write_record([
            "ticker",
            "side",
            "quantity",
            "entry_price",
            "entry_time",
            "exit_price",
            "exit_time",
            "realized_pnl",
            "winning",
        ])
        .map_err(io)?;
        for t in &self.trades {
            out.write_record([
                t.ticker.clone(),
                t.side.as_str().to_string(),
                format!("{:.10}", t.quantity),
                format!("{:.6}", t.entry_price),
                t.entry_time.to_string(),
                format!("{:.6}", t.exit_price),
                t.exit_time.to_string(),
                format!("{:.6}", t.realized_pnl),
                t.winning.to_string(),
            ])
            .map_err(io)?;
        }
        out.flush().map_err(|e| BacktestError::Io(e.to_string()))
    }

    pub fn render_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "ticker        {}", self.ticker);
        let _ = writeln!(s, "strategy      {}", self.config.strategy);
        let _ = writeln!(s, "mode          {}", self.config.mode);
        let _ = writeln!(s, "initial cash  {:.2}", self.config.initial_cash);
        let _ = writeln!(s, "final equity  {:.2}", self.final_equity);
        let _ = writeln!(s, "trades        {}", self.trade_count);
        let _ = writeln!(s, "win ratio     {}", fmt_pct(self.win_ratio));
        let _ = writeln!(s, "sharpe        {}", fmt_opt(self.sharpe, 4));
        s
    }
}

/// One strategy configuration to be run in both modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub strategy: StrategyKind,
    pub initial_cash: f64,
    pub indicators: IndicatorParams,
    pub fusion: FusionParams,
}

impl GridCell {
    pub fn from_config(config: &BacktestConfig) -> Self {
        GridCell {
            strategy: config.strategy,
            initial_cash: config.initial_cash,
            indicators: config.indicators.clone(),
            fusion: config.fusion.clone(),
        }
    }

    fn config(&self, mode: Mode) -> BacktestConfig {
        BacktestConfig {
            initial_cash: self.initial_cash,
            mode,
            strategy: self.strategy,
            indicators: self.indicators.clone(),
            fusion: self.fusion.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeResult {
    pub sharpe: Option<f64>,
    pub win_ratio: Option<f64>,
    pub trade_count: usize,
}

impl From<&BacktestReport> for ModeResult {
    fn from(r: &BacktestReport) -> Self {
        ModeResult {
            sharpe: r.sharpe,
            win_ratio: r.win_ratio,
            trade_count: r.trade_count,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub ticker: String,
    pub strategy: StrategyKind,
    pub base: ModeResult,
    pub sentiment: ModeResult,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
}

/// Groups bars by ticker, preserving order within each ticker.
pub fn group_by_ticker(bars: &[MinuteBar]) -> BTreeMap<String, Vec<MinuteBar>> {
    let mut groups: BTreeMap<String, Vec<MinuteBar>> = BTreeMap::new();
    for bar in bars {
        groups
            .entry(bar.ticker.clone())
            .or_default()
            .push(bar.clone());
    }
    groups
}

/// Runs every (ticker, cell) in base and sentiment mode. Cells run in
/// parallel; rows come back in ticker-then-grid order.
pub fn compare_modes(
    bars: &[MinuteBar],
    sentiments: &[SentimentScore],
    grid: &[GridCell],
) -> Result<ComparisonTable, BacktestError> {
    if grid.is_empty() {
        return Err(BacktestError::EmptyGrid);
    }
    if bars.is_empty() {
        return Err(BacktestError::EmptyBars);
    }
    let groups = group_by_ticker(bars);
    let jobs: Vec<(&String, &Vec<MinuteBar>, &GridCell)> = groups
        .iter()
        .flat_map(|(ticker, bars)| grid.iter().map(move |cell| (ticker, bars, cell)))
        .collect();
    let rows = crate::par::map(&jobs, |&(ticker, bars, cell)| {
        let base = run_backtest(bars, sentiments, &cell.config(Mode::Base))?;
        let sentiment = run_backtest(bars, sentiments, &cell.config(Mode::Sentiment))?;
        Ok(ComparisonRow {
            ticker: ticker.clone(),
            strategy: cell.strategy,
            base: ModeResult::from(&base),
            sentiment: ModeResult::from(&sentiment),
        })
    });
    Ok(ComparisonTable {
        rows: rows.into_iter().collect::<Result<_, BacktestError>>()?,
    })
}

const TABLE_HEADER: [&str; 8] = [
    "Ticker",
    "Strategy",
    "Sharpe Base",
    "Sharpe Sentiment",
    "Win Base",
    "Win Sentiment",
    "Trades Base",
    "Trades Sentiment",
];

impl ComparisonTable {
    fn cells(&self, pct: bool) -> Vec<[String; 8]> {
        let win = |v| if pct { fmt_pct(v) } else { fmt_opt(v, 6) };
        let digits = if pct { 2 } else { 6 };
        self.rows
            .iter()
            .map(|r| {
                [
                    r.ticker.clone(),
                    r.strategy.to_string(),
                    fmt_opt(r.base.sharpe, digits),
                    fmt_opt(r.sentiment.sharpe, digits),
                    win(r.base.win_ratio),
                    win(r.sentiment.win_ratio),
                    r.base.trade_count.to_string(),
                    r.sentiment.trade_count.to_string(),
                ]
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), BacktestError> {
        let io = |e: csv::Error| BacktestError::Io(e.to_string());
        let mut out = csv::Writer::from_writer(writer);
        out.write_record([
            "ticker",
            "strategy",
            "base_sharpe",
            "sentiment_sharpe",
            "base_win_ratio",
            "sentiment_win_ratio",
            "base_trades",
            "sentiment_trades",
        ])
        .map_err(io)?;
        for row in self.cells(false) {
            out.write_record(&row).map_err(io)?;
        }
        out.flush().map_err(|e| BacktestError::Io(e.to_string()))
    }

    /// Aligned text table, one row per ticker and strategy.
    pub fn render_text(&self) -> String {
        let rows = self.cells(true);
        let mut widths: Vec<usize> = TABLE_HEADER.iter().map(|h| h.len()).collect();
        for row in &rows {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.len());
            }
        }
        let line = |cells: &[String]| {
            let mut s = String::new();
            for (i, (cell, w)) in cells.iter().zip(&widths).enumerate() {
                if i < 2 {
                    let _ = write!(s, "{cell:<w$}");
                } else {
                    let _ = write!(s, "{cell:>w$}");
                }
                if i + 1 < cells.len() {
                    s.push_str("  ");
                }
            }
            s.push('\n');
            s
        };
        let header: Vec<String> = TABLE_HEADER.iter().map(|h| h.to_string()).collect();
        let mut out = line(&header);
        let total: usize = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
        out.push_str(&"-".repeat(total));
        out.push('\n');
        for row in &rows {
            out.push_str(&line(row));
        }
        out
    }
}
