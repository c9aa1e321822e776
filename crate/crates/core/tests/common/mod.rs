//! Shared test support: from-scratch oracles and fixture generators.
//!
//! The oracles here deliberately avoid the library's own helpers. They
//! recompute everything per index with plain loops.
#![allow(dead_code)]

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tradesig::backtest::{Side, TradeRecord};
use tradesig::bars::{MinuteBar, MINUTE_MS};
use tradesig::indicators::{Direction, IndicatorParams, StrategyKind};
use tradesig::market_data::Tick;
use tradesig::sentiment::{Label, SentimentScore};
use tradesig::strategy::Mode;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn bar(ticker: &str, minute: i64, vwap: f64, high: f64, low: f64, close: f64) -> MinuteBar {
    MinuteBar {
        ticker: ticker.into(),
        minute_start: minute * MINUTE_MS,
        vwap,
        high,
        low,
        close,
        total_volume: 100.0,
        trade_count: 1,
    }
}

/// Flat bars (high = low = close = vwap) from a price list, one per minute.
pub fn bars_from_prices(ticker: &str, prices: &[f64]) -> Vec<MinuteBar> {
    prices
        .iter()
        .enumerate()
        .map(|(i, &p)| bar(ticker, i as i64 + 1, p, p, p, p))
        .collect()
}

/// Random-walk bars with a consistent high/low/close envelope.
pub fn random_bars(rng: &mut ChaCha8Rng, ticker: &str, len: usize) -> Vec<MinuteBar> {
    let mut price: f64 = rng.gen_range(20.0..500.0);
    (0..len)
        .map(|i| {
            price = (price * (1.0 + rng.gen_range(-0.01..0.01))).max(1.0);
            let spread = price * rng.gen_range(0.0005..0.01);
            let low = price - spread * rng.gen_range(0.0..1.0);
            let high = price + spread * rng.gen_range(0.0..1.0);
            let close = rng.gen_range(low..=high);
            bar(ticker, i as i64 + 1, price, high, low, close)
        })
        .collect()
}

/// Scores spread over the bar span, alternating-ish labels.
pub fn random_sentiments(
    rng: &mut ChaCha8Rng,
    ticker: &str,
    bars: &[MinuteBar],
    count: usize,
) -> Vec<SentimentScore> {
    let (first, last) = (bars[0].minute_start, bars[bars.len() - 1].minute_start);
    let mut scores: Vec<SentimentScore> = (0..count)
        .map(|_| SentimentScore {
            ticker: ticker.into(),
            as_of: rng.gen_range(first - 5 * MINUTE_MS..=last),
            label: if rng.gen_bool(0.5) {
                Label::Positive
            } else {
                Label::Negative
            },
            confidence: rng.gen_range(0.5..1.0),
            summary: String::new(),
        })
        .collect();
    scores.sort_by_key(|s| s.as_of);
    scores
}

pub fn naive_ema(series: &[f64], window: usize) -> Vec<f64> {
    let alpha = 2.0 / (window as f64 + 1.0);
    (0..series.len())
        .map(|t| {
            // closed form: weighted sum of all observations back to the seed
            let mut value = series[0] * (1.0 - alpha).powi(t as i32);
            for (k, &x) in series.iter().enumerate().take(t + 1).skip(1) {
                value += alpha * (1.0 - alpha).powi((t - k) as i32) * x;
            }
            value
        })
        .collect()
}

/// RSI at series index `t` (needs `t >= period`).
pub fn naive_rsi_at(series: &[f64], period: usize, t: usize) -> f64 {
    let mut gain = 0.0;
    let mut loss = 0.0;
    for i in t + 1 - period..=t {
        let d = series[i] - series[i - 1];
        if d > 0.0 {
            gain += d;
        } else {
            loss -= d;
        }
    }
    let (g, l) = (gain / period as f64, loss / period as f64);
    if g == 0.0 && l == 0.0 {
        50.0
    } else if l == 0.0 {
        100.0
    } else {
        100.0 - 100.0 / (1.0 + g / l)
    }
}

/// %K at bar `t` (needs `t + 1 >= lookback`).
pub fn naive_k_at(bars: &[MinuteBar], lookback: usize, t: usize) -> f64 {
    let window = &bars[t + 1 - lookback..=t];
    let hh = window
        .iter()
        .map(|b| b.high)
        .fold(f64::NEG_INFINITY, f64::max);
    let ll = window.iter().map(|b| b.low).fold(f64::INFINITY, f64::min);
    if hh == ll {
        50.0
    } else {
        100.0 * (bars[t].close - ll) / (hh - ll)
    }
}

pub fn naive_d_at(bars: &[MinuteBar], lookback: usize, d_period: usize, t: usize) -> f64 {
    (t + 1 - d_period..=t)
        .map(|i| naive_k_at(bars, lookback, i))
        .sum::<f64>()
        / d_period as f64
}

/// Per-bar technical directions recomputed from the naive indicators.
#[allow(clippy::needless_range_loop)]
pub fn naive_directions(
    strategy: StrategyKind,
    bars: &[MinuteBar],
    p: &IndicatorParams,
) -> Vec<Direction> {
    let prices: Vec<f64> = bars.iter().map(|b| b.vwap).collect();
    let n = bars.len();
    let mut out = vec![Direction::Hold; n];
    match strategy {
        StrategyKind::SmaCrossover => {
            let fast = naive_ema(&prices, p.fast_window);
            let slow = naive_ema(&prices, p.slow_window);
            for t in (p.slow_window - 1).max(1)..n {
                if fast[t - 1] <= slow[t - 1] && fast[t] > slow[t] {
                    out[t] = Direction::Long;
                } else if slow[t - 1] <= fast[t - 1] && slow[t] > fast[t] {
                    out[t] = Direction::Short;
                }
            }
        }
        StrategyKind::Rsi => {
            for t in p.rsi_period + 1..n {
                let prev = naive_rsi_at(&prices, p.rsi_period, t - 1);
                let cur = naive_rsi_at(&prices, p.rsi_period, t);
                if prev <= p.rsi_oversold && cur > p.rsi_oversold {
                    out[t] = Direction::Long;
                } else if prev >= p.rsi_overbought && cur < p.rsi_overbought {
                    out[t] = Direction::Short;
                }
            }
        }
        StrategyKind::Stochastic => {
            let first = p.stoch_lookback + p.stoch_d_period - 2;
            for t in first + 1..n {
                let (pk, pd) = (
                    naive_k_at(bars, p.stoch_lookback, t - 1),
                    naive_d_at(bars, p.stoch_lookback, p.stoch_d_period, t - 1),
                );
                let (k, d) = (
                    naive_k_at(bars, p.stoch_lookback, t),
                    naive_d_at(bars, p.stoch_lookback, p.stoch_d_period, t),
                );
                if pk <= pd && k > d && k < p.stoch_oversold && d < p.stoch_oversold {
                    out[t] = Direction::Long;
                } else if pd <= pk && d > k && k > p.stoch_overbought && d > p.stoch_overbought {
                    out[t] = Direction::Short;
                }
            }
        }
    }
    out
}

/// Brute-force ledger walk over one ticker.
///
/// Sentiment lookup is a linear scan for the newest score at or before the
/// bar start; scores never expire. Returns the closed trades in order.
pub fn ledger_oracle(
    bars: &[MinuteBar],
    directions: &[Direction],
    sentiments: &[SentimentScore],
    mode: Mode,
    initial_cash: f64,
    high_conviction: f64,
) -> Vec<TradeRecord> {
    struct Open {
        side: Side,
        qty: f64,
        price: f64,
        time: i64,
    }
    let close = |o: &Open, price: f64, time: i64| {
        let pnl = match o.side {
            Side::Long => o.qty * (price - o.price),
            Side::Short => o.qty * (o.price - price),
        };
        TradeRecord {
            ticker: bars[0].ticker.clone(),
            side: o.side,
            quantity: o.qty,
            entry_price: o.price,
            entry_time: o.time,
            exit_price: price,
            exit_time: time,
            realized_pnl: pnl,
            winning: pnl > 0.0,
        }
    };
    let mut trades = Vec::new();
    let mut open: Option<Open> = None;
    for (bar, &dir) in bars.iter().zip(directions) {
        let side = match dir {
            Direction::Long => Side::Long,
            Direction::Short => Side::Short,
            Direction::Hold => continue,
        };
        let size = match mode {
            Mode::Base => 0.10,
            Mode::Sentiment => {
                let mut latest: Option<&SentimentScore> = None;
                for s in sentiments {
                    if s.ticker == bar.ticker && s.as_of <= bar.minute_start {
                        latest = Some(s);
                    }
                }
                let Some(s) = latest else { continue };
                let agrees = matches!(
                    (s.label, side),
                    (Label::Positive, Side::Long) | (Label::Negative, Side::Short)
                );
                if !agrees {
                    continue;
                }
                if s.confidence >= high_conviction {
                    0.15
                } else {
                    0.10
                }
            }
        };
        if open.as_ref().is_some_and(|o| o.side == side) {
            continue;
        }
        if let Some(o) = open.take() {
            trades.push(close(&o, bar.vwap, bar.minute_start));
        }
        open = Some(Open {
            side,
            qty: size * initial_cash / bar.vwap,
            price: bar.vwap,
            time: bar.minute_start,
        });
    }
    if let Some(o) = open {
        let last = &bars[bars.len() - 1];
        trades.push(close(&o, last.vwap, last.minute_start));
    }
    trades
}

/// Trending path with periodic sharp dips. The dips make the fast/slow
/// averages cross down and back up, which loses money when traded short.
pub fn whipsaw_trend_prices(len: usize) -> Vec<f64> {
    (0..len)
        .map(|t| {
            let trend = 100.0 + 0.08 * t as f64;
            let phase = t % 60;
            let dip = if (40..48).contains(&phase) {
                (phase - 39) as f64 * 0.6
            } else if (48..56).contains(&phase) {
                (56 - phase) as f64 * 0.6
            } else {
                0.0
            };
            trend - dip
        })
        .collect()
}

/// Positive scores every 15 minutes with high conviction, matching the trend.
pub fn trend_sentiments(ticker: &str, bars: &[MinuteBar]) -> Vec<SentimentScore> {
    bars.iter()
        .step_by(15)
        .enumerate()
        .map(|(i, b)| SentimentScore {
            ticker: ticker.into(),
            as_of: b.minute_start - MINUTE_MS,
            label: Label::Positive,
            confidence: if i % 4 == 3 { 0.7 } else { 0.9 },
            summary: String::new(),
        })
        .collect()
}

/// Deterministic multi-ticker tick stream for replay tests.
pub fn synthetic_ticks(seed: u64, tickers: &[&str], minutes: i64, per_minute: usize) -> Vec<Tick> {
    let mut rng = rng(seed);
    let mut prices: Vec<f64> = tickers.iter().map(|_| rng.gen_range(50.0..300.0)).collect();
    let base = 1_700_000_000_000i64 - 1_700_000_000_000i64 % MINUTE_MS;
    let mut ticks = Vec::new();
    for m in 0..minutes {
        let mut minute_ticks = Vec::new();
        for (i, t) in tickers.iter().enumerate() {
            for _ in 0..per_minute {
                prices[i] = (prices[i] * (1.0 + rng.gen_range(-0.002..0.002))).max(1.0);
                let price = (prices[i] * 100.0).round() / 100.0;
                let volume = if rng.gen_bool(0.05) {
                    0.0
                } else {
                    rng.gen_range(1..500) as f64
                };
                let ts = base + m * MINUTE_MS + rng.gen_range(0..MINUTE_MS);
                minute_ticks.push(Tick {
                    ticker: t.to_string(),
                    timestamp: ts,
                    price,
                    volume,
                });
            }
        }
        minute_ticks.sort_by(|a, b| {
            a.timestamp
                .cmp(&b.timestamp)
                .then_with(|| a.ticker.cmp(&b.ticker))
        });
        ticks.extend(minute_ticks);
    }
    ticks
}

pub mod http;

/// Largest absolute gap between the library indicators and the naive ones
/// on one window. Errors if lengths or alignment disagree.
pub fn indicator_gap(bars: &[MinuteBar], p: &IndicatorParams) -> Result<f64, String> {
    use tradesig::indicators::{ema, rsi, stochastic};
    let prices: Vec<f64> = bars.iter().map(|b| b.vwap).collect();
    let mut gap: f64 = 0.0;
    let mut track = |a: f64, b: f64, what: &str, i: usize| -> Result<(), String> {
        if !a.is_finite() || !b.is_finite() {
            return Err(format!("{what}[{i}] not finite: {a} vs {b}"));
        }
        gap = gap.max((a - b).abs());
        Ok(())
    };
    for w in [p.fast_window, p.slow_window] {
        let fast = ema(&prices, w).map_err(|e| e.to_string())?;
        for (i, (a, b)) in fast.iter().zip(naive_ema(&prices, w)).enumerate() {
            track(*a, b, "ema", i)?;
        }
    }
    let r = rsi(&prices, p.rsi_period).map_err(|e| e.to_string())?;
    if r.len() != prices.len() - p.rsi_period {
        return Err(format!("rsi length {}", r.len()));
    }
    for (j, &v) in r.iter().enumerate() {
        track(
            v,
            naive_rsi_at(&prices, p.rsi_period, j + p.rsi_period),
            "rsi",
            j,
        )?;
    }
    let st = stochastic(bars, p).map_err(|e| e.to_string())?;
    if st.first_index != p.stoch_lookback + p.stoch_d_period - 2
        || st.k.len() != bars.len() - st.first_index
    {
        return Err("stochastic alignment".into());
    }
    for j in 0..st.k.len() {
        let t = st.first_index + j;
        track(st.k[j], naive_k_at(bars, p.stoch_lookback, t), "k", j)?;
        track(
            st.d[j],
            naive_d_at(bars, p.stoch_lookback, p.stoch_d_period, t),
            "d",
            j,
        )?;
    }
    Ok(gap)
}

/// Small indicator windows so that short random series still trade.
pub fn short_params() -> IndicatorParams {
    IndicatorParams {
        fast_window: 3,
        slow_window: 8,
        rsi_period: 5,
        stoch_lookback: 5,
        stoch_d_period: 3,
        ..IndicatorParams::default()
    }
}
