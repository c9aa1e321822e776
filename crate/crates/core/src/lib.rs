//! Minute-VWAP trading-signal engine.
//!
//! Trade ticks are aggregated into per-minute VWAP bars, turned into
//! technical signals (EMA crossover, RSI, stochastic oscillator), fused with
//! sentiment scores into sized long/short/hold decisions, and either served
//! live over REST or evaluated offline by the backtester.
//!
//! # Modules
//!
//! - `market_data`: tick wire format, CSV replay, ticker validation
//! - `bars`: minute VWAP bars and rolling windows
//! - `indicators`: EMA, RSI, stochastic and their crossover signals
//! - `sentiment`: scoring providers, text sources, score store, classifier metrics
//! - `strategy`: technical + sentiment fusion and position sizing
//! - `backtest`: position-based simulation, Sharpe and win ratio, mode comparison
//! - `pipeline`, `service`, `runtime`: the live engine and its HTTP surface
//! - `par`: rayon-backed helpers with a sequential fallback

pub mod backtest;
pub mod bars;
pub mod config;
pub mod indicators;
pub mod market_data;
pub mod par;
pub mod pipeline;
pub mod runtime;
pub mod sentiment;
pub mod service;
pub mod strategy;

pub use backtest::{
    compare_modes, run_backtest, sharpe_ratio, win_ratio, BacktestConfig, BacktestReport, GridCell,
};
pub use bars::{BarWindow, MinuteBar, OpenMinute};
pub use indicators::{Direction, IndicatorParams, StrategyKind, TechnicalSignal};
pub use market_data::{Tick, TickerSet};
pub use sentiment::{evaluate_classifier, Label, SentimentScore, SentimentStore};
pub use strategy::{fuse, CombinedSignal, FusionParams, Mode};
