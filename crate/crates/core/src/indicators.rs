//! Technical indicators over minute bars and the per-bar signals derived
//! from them. Everything here is pure.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bars::MinuteBar;

#[derive(Debug, Error, PartialEq)]
pub enum IndicatorError {
    #[error("empty series")]
    EmptySeries,
    #[error("insufficient data: need {needed} points, have {have}")]
    InsufficientData { needed: usize, have: usize },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Long,
    Short,
    Hold,
}

impl Direction {
    pub fn opposite(self) -> Direction {
        match self {
            Direction::Long => Direction::Short,
            Direction::Short => Direction::Long,
            Direction::Hold => Direction::Hold,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Long => "long",
            Direction::Short => "short",
            Direction::Hold => "hold",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    SmaCrossover,
    Rsi,
    Stochastic,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 3] = [
        StrategyKind::SmaCrossover,
        StrategyKind::Rsi,
        StrategyKind::Stochastic,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StrategyKind::SmaCrossover => "sma_crossover",
            StrategyKind::Rsi => "rsi",
            StrategyKind::Stochastic => "stochastic",
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StrategyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sma_crossover" | "sma" => Ok(StrategyKind::SmaCrossover),
            "rsi" => Ok(StrategyKind::Rsi),
            "stochastic" | "stoch" => Ok(StrategyKind::Stochastic),
            other => Err(format!("unknown strategy {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IndicatorParams {
    pub fast_window: usize,
    pub slow_window: usize,
    pub rsi_period: usize,
    pub rsi_oversold: f64,
    pub rsi_overbought: f64,
    pub stoch_lookback: usize,
    pub stoch_d_period: usize,
    pub stoch_oversold: f64,
    pub stoch_overbought: f64,
}

impl Default for IndicatorParams {
    fn default() -> Self {
        IndicatorParams {
            fast_window: 5,
            slow_window: 30,
            rsi_period: 15,
            rsi_oversold: 30.0,
            rsi_overbought: 70.0,
            stoch_lookback: 14,
            stoch_d_period: 3,
            stoch_oversold: 20.0,
            stoch_overbought: 80.0,
        }
    }
}

impl IndicatorParams {
    pub fn validate(&self) -> Result<(), IndicatorError> {
        let bad = |m: &str| Err(IndicatorError::InvalidParams(m.to_string()));
        if self.fast_window == 0 || self.fast_window >= self.slow_window {
            return bad("require 0 < fast_window < slow_window");
        }
        if self.rsi_period == 0 || self.stoch_lookback == 0 || self.stoch_d_period == 0 {
            return bad("periods must be positive");
        }
        let zone_ok = |lo: f64, hi: f64| 0.0 < lo && lo < hi && hi < 100.0;
        if !zone_ok(self.rsi_oversold, self.rsi_overbought) {
            return bad("require 0 < rsi_oversold < rsi_overbought < 100");
        }
        if !zone_ok(self.stoch_oversold, self.stoch_overbought) {
            return bad("require 0 < stoch_oversold < stoch_overbought < 100");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TechnicalSignal {
    pub ticker: String,
    pub bar_time: i64,
    pub direction: Direction,
    pub strategy: StrategyKind,
}

/// Exponential moving average with `alpha = 2 / (window + 1)`, seeded with
/// the first observation.
pub fn ema(series: &[f64], window: usize) -> Result<Vec<f64>, IndicatorError> {
    let (&first, rest) = series.split_first().ok_or(IndicatorError::EmptySeries)?;
    if window == 0 {
        return Err(IndicatorError::InvalidParams(
            "window must be positive".into(),
        ));
    }
    let alpha = 2.0 / (window as f64 + 1.0);
    let mut out = Vec::with_capacity(series.len());
    let mut prev = first;
    out.push(prev);
    for &x in rest {
        // incremental form keeps constant inputs exactly fixed
        prev += alpha * (x - prev);
        out.push(prev);
    }
    Ok(out)
}

/// RSI over simple means of the last `period` gains and losses.
///
/// Element `j` of the result is the RSI at series index `j + period`.
pub fn rsi(series: &[f64], period: usize) -> Result<Vec<f64>, IndicatorError> {
    if period == 0 {
        return Err(IndicatorError::InvalidParams(
            "period must be positive".into(),
        ));
    }
    if series.len() < period + 1 {
        return Err(IndicatorError::InsufficientData {
            needed: period + 1,
            have: series.len(),
        });
    }
    let deltas: Vec<f64> = series.windows(2).map(|w| w[1] - w[0]).collect();
    let mut window = GainLossWindow::default();
    let mut out = Vec::with_capacity(deltas.len() + 1 - period);
    for (i, &d) in deltas.iter().enumerate() {
        window.add(d);
        if i >= period {
            window.remove(deltas[i - period]);
        }
        if i + 1 >= period {
            out.push(window.rsi());
        }
    }
    Ok(out)
}

/// Rolling gain/loss sums. The counts give exact zero detection, which a
/// rolling float sum cannot after subtractions.
#[derive(Default)]
struct GainLossWindow {
    gain_sum: f64,
    loss_sum: f64,
    gains: usize,
    losses: usize,
}

impl GainLossWindow {
    fn add(&mut self, delta: f64) {
        if delta > 0.0 {
            self.gain_sum += delta;
            self.gains += 1;
        } else if delta < 0.0 {
            self.loss_sum -= delta;
            self.losses += 1;
        }
    }

    fn remove(&mut self, delta: f64) {
        if delta > 0.0 {
            self.gain_sum -= delta;
            self.gains -= 1;
        } else if delta < 0.0 {
            self.loss_sum += delta;
            self.losses -= 1;
        }
    }

    fn rsi(&self) -> f64 {
        let gain = if self.gains == 0 {
            0.0
        } else {
            self.gain_sum.max(0.0)
        };
        let loss = if self.losses == 0 {
            0.0
        } else {
            self.loss_sum.max(0.0)
        };
        rsi_from_sums(gain, loss)
    }
}

fn rsi_from_sums(gain: f64, loss: f64) -> f64 {
    match (gain > 0.0, loss > 0.0) {
        (false, false) => 50.0,
        (true, false) => 100.0,
        (false, true) => 0.0,
        // 100 - 100/(1+RS) with RS = gain/loss; the period divisor cancels
        (true, true) => (100.0 * gain / (gain + loss)).clamp(0.0, 100.0),
    }
}

/// %K and %D aligned to bars: element `j` belongs to bar `first_index + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Stochastic {
    pub first_index: usize,
    pub k: Vec<f64>,
    pub d: Vec<f64>,
}

pub fn stochastic(
    bars: &[MinuteBar],
    params: &IndicatorParams,
) -> Result<Stochastic, IndicatorError> {
    let lookback = params.stoch_lookback;
    let d_period = params.stoch_d_period;
    if lookback == 0 || d_period == 0 {
        return Err(IndicatorError::InvalidParams(
            "periods must be positive".into(),
        ));
    }
    let needed = lookback + d_period - 1;
    if bars.len() < needed {
        return Err(IndicatorError::InsufficientData {
            needed,
            have: bars.len(),
        });
    }
    // monotonic deques of indices for the trailing max high / min low
    let mut highs: VecDeque<usize> = VecDeque::new();
    let mut lows: VecDeque<usize> = VecDeque::new();
    let mut k_all = Vec::with_capacity(bars.len() + 1 - lookback);
    for (i, bar) in bars.iter().enumerate() {
        while highs.back().is_some_and(|&j| bars[j].high <= bar.high) {
            highs.pop_back();
        }
        highs.push_back(i);
        while lows.back().is_some_and(|&j| bars[j].low >= bar.low) {
            lows.pop_back();
        }
        lows.push_back(i);
        if i + 1 < lookback {
            continue;
        }
        let start = i + 1 - lookback;
        while highs.front().is_some_and(|&j| j < start) {
            highs.pop_front();
        }
        while lows.front().is_some_and(|&j| j < start) {
            lows.pop_front();
        }
        let hh = bars[highs[0]].high;
        let ll = bars[lows[0]].low;
        k_all.push(percent_k(bar.close, hh, ll));
    }
    let mut k = Vec::with_capacity(k_all.len() + 1 - d_period);
    let mut d = Vec::with_capacity(k_all.len() + 1 - d_period);
    for (j, window) in k_all.windows(d_period).enumerate() {
        k.push(k_all[j + d_period - 1]);
        d.push(window.iter().sum::<f64>() / d_period as f64);
    }
    Ok(Stochastic {
        first_index: needed - 1,
        k,
        d,
    })
}

fn percent_k(close: f64, highest: f64, lowest: f64) -> f64 {
    let range = highest - lowest;
    if range <= 0.0 {
        50.0
    } else {
        (100.0 * (close - lowest) / range).clamp(0.0, 100.0)
    }
}

fn vwaps(bars: &[MinuteBar]) -> Vec<f64> {
    bars.iter().map(|b| b.vwap).collect()
}

fn signal(bar: &MinuteBar, direction: Direction, strategy: StrategyKind) -> TechnicalSignal {
    TechnicalSignal {
        ticker: bar.ticker.clone(),
        bar_time: bar.minute_start,
        direction,
        strategy,
    }
}

/// Upward cross: previous at or below, current strictly above.
pub fn crosses_above(prev_a: f64, prev_b: f64, a: f64, b: f64) -> bool {
    prev_a <= prev_b && a > b
}

/// Fast/slow EMA crossover on bar VWAPs, one signal per bar from bar 1.
/// Bars before `slow_window` bars have accumulated are warm-up and hold.
pub fn sma_crossover_signals(
    bars: &[MinuteBar],
    params: &IndicatorParams,
) -> Result<Vec<TechnicalSignal>, IndicatorError> {
    if bars.len() < 2 {
        return Err(IndicatorError::InsufficientData {
            needed: 2,
            have: bars.len(),
        });
    }
    let prices = vwaps(bars);
    let fast = ema(&prices, params.fast_window)?;
    let slow = ema(&prices, params.slow_window)?;
    let warmup = params.slow_window.saturating_sub(1);
    Ok((1..bars.len())
        .map(|t| {
            let direction = if t < warmup {
                Direction::Hold
            } else if crosses_above(fast[t - 1], slow[t - 1], fast[t], slow[t]) {
                Direction::Long
            } else if crosses_above(slow[t - 1], fast[t - 1], slow[t], fast[t]) {
                Direction::Short
            } else {
                Direction::Hold
            };
            signal(&bars[t], direction, StrategyKind::SmaCrossover)
        })
        .collect())
}

/// Long when RSI rises through the oversold level, short when it falls
/// through the overbought level. First signal is at bar `rsi_period + 1`.
pub fn rsi_signals(
    bars: &[MinuteBar],
    params: &IndicatorParams,
) -> Result<Vec<TechnicalSignal>, IndicatorError> {
    let needed = params.rsi_period + 2;
    if bars.len() < needed {
        return Err(IndicatorError::InsufficientData {
            needed,
            have: bars.len(),
        });
    }
    let values = rsi(&vwaps(bars), params.rsi_period)?;
    Ok(values
        .windows(2)
        .enumerate()
        .map(|(j, w)| {
            let t = params.rsi_period + j + 1;
            let direction = rsi_cross(w[0], w[1], params);
            signal(&bars[t], direction, StrategyKind::Rsi)
        })
        .collect())
}

pub fn rsi_cross(prev: f64, current: f64, params: &IndicatorParams) -> Direction {
    if prev <= params.rsi_oversold && current > params.rsi_oversold {
        Direction::Long
    } else if prev >= params.rsi_overbought && current < params.rsi_overbought {
        Direction::Short
    } else {
        Direction::Hold
    }
}

/// %K/%D crosses confined to the oversold / overbought zones.
pub fn stochastic_signals(
    bars: &[MinuteBar],
    params: &IndicatorParams,
) -> Result<Vec<TechnicalSignal>, IndicatorError> {
    let needed = params.stoch_lookback + params.stoch_d_period;
    if bars.len() < needed {
        return Err(IndicatorError::InsufficientData {
            needed,
            have: bars.len(),
        });
    }
    let st = stochastic(bars, params)?;
    Ok((1..st.k.len())
        .map(|j| {
            let direction =
                stochastic_cross((st.k[j - 1], st.d[j - 1]), (st.k[j], st.d[j]), params);
            signal(
                &bars[st.first_index + j],
                direction,
                StrategyKind::Stochastic,
            )
        })
        .collect())
}

pub fn stochastic_cross(
    prev: (f64, f64),
    current: (f64, f64),
    params: &IndicatorParams,
) -> Direction {
    let (pk, pd) = prev;
    let (k, d) = current;
    if crosses_above(pk, pd, k, d) && k < params.stoch_oversold && d < params.stoch_oversold {
        Direction::Long
    } else if crosses_above(pd, pk, d, k)
        && k > params.stoch_overbought
        && d > params.stoch_overbought
    {
        Direction::Short
    } else {
        Direction::Hold
    }
}

pub fn signals_for(
    strategy: StrategyKind,
    bars: &[MinuteBar],
    params: &IndicatorParams,
) -> Result<Vec<TechnicalSignal>, IndicatorError> {
    match strategy {
        StrategyKind::SmaCrossover => sma_crossover_signals(bars, params),
        StrategyKind::Rsi => rsi_signals(bars, params),
        StrategyKind::Stochastic => stochastic_signals(bars, params),
    }
}

/// One direction per bar, `Hold` where the strategy has no signal yet.
pub fn direction_series(
    strategy: StrategyKind,
    bars: &[MinuteBar],
    params: &IndicatorParams,
) -> Vec<Direction> {
    let mut out = vec![Direction::Hold; bars.len()];
    if let Ok(signals) = signals_for(strategy, bars, params) {
        let offset = bars.len() - signals.len();
        for (slot, s) in out[offset..].iter_mut().zip(signals) {
            *slot = s.direction;
        }
    }
    out
}

/// Signal for the newest bar of `bars`, `Hold` during warm-up.
pub fn latest_signal(
    strategy: StrategyKind,
    bars: &[MinuteBar],
    params: &IndicatorParams,
) -> Option<TechnicalSignal> {
    let last = bars.last()?;
    let direction = direction_series(strategy, bars, params)
        .last()
        .copied()
        .unwrap_or(Direction::Hold);
    Some(signal(last, direction, strategy))
}

/// Indicator values for one window, as consumed by the batch evaluator.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorSnapshot {
    pub fast_ema: Vec<f64>,
    pub slow_ema: Vec<f64>,
    pub rsi: Vec<f64>,
    pub stochastic: Stochastic,
}

pub fn compute_all(
    bars: &[MinuteBar],
    params: &IndicatorParams,
) -> Result<IndicatorSnapshot, IndicatorError> {
    let prices = vwaps(bars);
    Ok(IndicatorSnapshot {
        fast_ema: ema(&prices, params.fast_window)?,
        slow_ema: ema(&prices, params.slow_window)?,
        rsi: rsi(&prices, params.rsi_period)?,
        stochastic: stochastic(bars, params)?,
    })
}

/// Evaluates every window, in parallel when the `parallel` feature is on.
pub fn compute_all_batch(
    windows: &[Vec<MinuteBar>],
    params: &IndicatorParams,
) -> Vec<Result<IndicatorSnapshot, IndicatorError>> {
    crate::par::map(windows, |w| compute_all(w, params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bars::MINUTE_MS;

    fn bars_from(prices: &[f64]) -> Vec<MinuteBar> {
        prices
            .iter()
            .enumerate()
            .map(|(i, &p)| MinuteBar {
                ticker: "AAPL".into(),
                minute_start: (i as i64 + 1) * MINUTE_MS,
                vwap: p,
                high: p,
                low: p,
                close: p,
                total_volume: 1.0,
                trade_count: 1,
            })
            .collect()
    }

    fn hlc(rows: &[(f64, f64, f64)]) -> Vec<MinuteBar> {
        rows.iter()
            .enumerate()
            .map(|(i, &(h, l, c))| MinuteBar {
                ticker: "AAPL".into(),
                minute_start: (i as i64 + 1) * MINUTE_MS,
                vwap: c,
                high: h,
                low: l,
                close: c,
                total_volume: 1.0,
                trade_count: 1,
            })
            .collect()
    }

    fn dirs(signals: &[TechnicalSignal]) -> Vec<Direction> {
        signals.iter().map(|s| s.direction).collect()
    }

    #[test]
    fn ema_constant_is_fixed_point() {
        let out = ema(&[3.7; 50], 13).unwrap();
        assert!(out.iter().all(|&x| x == 3.7));
    }

    #[test]
    fn ema_two_points_window_three() {
        assert_eq!(ema(&[1.0, 2.0], 3).unwrap(), vec![1.0, 1.5]);
    }

    #[test]
    fn ema_window_one_is_identity() {
        let s = [4.0, -1.0, 7.5, 2.25];
        assert_eq!(ema(&s, 1).unwrap(), s.to_vec());
    }

    #[test]
    fn ema_empty() {
        assert_eq!(ema(&[], 3), Err(IndicatorError::EmptySeries));
    }

    #[test]
    fn rsi_monotone_extremes() {
        let up: Vec<f64> = (0..40).map(|i| 100.0 + i as f64 * 0.5).collect();
        assert!(rsi(&up, 15).unwrap().iter().all(|&r| r == 100.0));
        let down: Vec<f64> = up.iter().rev().copied().collect();
        assert!(rsi(&down, 15).unwrap().iter().all(|&r| r == 0.0));
    }

    #[test]
    fn rsi_alternating_is_fifty() {
        let s: Vec<f64> = (0..41)
            .map(|i| if i % 2 == 0 { 10.0 } else { 11.0 })
            .collect();
        for r in rsi(&s, 14).unwrap() {
            assert!((r - 50.0).abs() < 1e-9, "{r}");
        }
    }

    #[test]
    fn rsi_flat_is_fifty_and_length() {
        let out = rsi(&[5.0; 20], 15).unwrap();
        assert_eq!(out.len(), 5);
        assert!(out.iter().all(|&r| r == 50.0));
        assert!(matches!(
            rsi(&[1.0; 15], 15),
            Err(IndicatorError::InsufficientData { .. })
        ));
    }

    #[test]
    fn rsi_thresholds() {
        let p = IndicatorParams::default();
        assert_eq!(rsi_cross(25.0, 35.0, &p), Direction::Long);
        assert_eq!(rsi_cross(75.0, 65.0, &p), Direction::Short);
        assert_eq!(rsi_cross(40.0, 60.0, &p), Direction::Hold);
        assert_eq!(rsi_cross(30.0, 30.5, &p), Direction::Long);
        assert_eq!(rsi_cross(30.5, 31.0, &p), Direction::Hold);
    }

    #[test]
    fn stochastic_extremes_and_d() {
        let params = IndicatorParams {
            stoch_lookback: 3,
            ..Default::default()
        };
        let bars = hlc(&[
            (10.0, 5.0, 6.0),
            (12.0, 6.0, 7.0),
            (11.0, 7.0, 11.0),
            (11.0, 5.0, 5.0),
            (9.0, 7.0, 8.0),
        ]);
        let st = stochastic(&bars, &params).unwrap();
        // raw %K at bars 2,3,4: (11-5)/(12-5), close at lowest low, (8-5)/(11-5)
        assert_eq!(st.first_index, 4);
        assert_eq!(st.k, vec![50.0]);
        assert!((st.d[0] - (600.0 / 7.0 + 0.0 + 50.0) / 3.0).abs() < 1e-12);
    }

    #[test]
    fn stochastic_d_is_mean_of_three_k() {
        // closes chosen so raw %K over a fixed 0..100 range are 10, 20, 30
        let params = IndicatorParams {
            stoch_lookback: 1,
            ..Default::default()
        };
        let bars = hlc(&[(100.0, 0.0, 10.0), (100.0, 0.0, 20.0), (100.0, 0.0, 30.0)]);
        let st = stochastic(&bars, &params).unwrap();
        assert_eq!(st.k, vec![30.0]);
        assert!((st.d[0] - 20.0).abs() < 1e-12);
    }

    #[test]
    fn stochastic_flat_window_is_fifty() {
        let st = stochastic(&bars_from(&[5.0; 20]), &IndicatorParams::default()).unwrap();
        assert!(st.k.iter().chain(&st.d).all(|&v| v == 50.0));
    }

    #[test]
    fn stochastic_zone_rules() {
        let p = IndicatorParams::default();
        assert_eq!(
            stochastic_cross((10.0, 15.0), (18.0, 14.0), &p),
            Direction::Long
        );
        assert_eq!(
            stochastic_cross((90.0, 85.0), (82.0, 86.0), &p),
            Direction::Short
        );
        assert_eq!(
            stochastic_cross((48.0, 50.0), (52.0, 50.0), &p),
            Direction::Hold
        );
        assert_eq!(
            stochastic_cross((52.0, 50.0), (48.0, 50.0), &p),
            Direction::Hold
        );
    }

    #[test]
    fn crossover_constant_all_hold() {
        let s =
            sma_crossover_signals(&bars_from(&[100.0; 80]), &IndicatorParams::default()).unwrap();
        assert!(dirs(&s).iter().all(|&d| d == Direction::Hold));
        assert_eq!(s.len(), 79);
    }

    #[test]
    fn crossover_single_long_after_flat_prefix() {
        let mut prices = vec![100.0; 40];
        prices.extend((1..=40).map(|i| 100.0 + i as f64));
        let s = sma_crossover_signals(&bars_from(&prices), &IndicatorParams::default()).unwrap();
        let longs: Vec<_> = s
            .iter()
            .filter(|x| x.direction == Direction::Long)
            .collect();
        assert_eq!(longs.len(), 1);
        assert_eq!(longs[0].bar_time, 41 * MINUTE_MS);
        assert!(s.iter().all(|x| x.direction != Direction::Short));
    }

    #[test]
    fn insufficient_data_errors() {
        let p = IndicatorParams::default();
        let one = bars_from(&[1.0]);
        assert!(sma_crossover_signals(&one, &p).is_err());
        assert!(rsi_signals(&bars_from(&[1.0; 16]), &p).is_err());
        assert!(rsi_signals(&bars_from(&[1.0; 17]), &p).is_ok());
        assert!(stochastic_signals(&bars_from(&[1.0; 16]), &p).is_err());
        assert_eq!(
            stochastic_signals(&bars_from(&[1.0; 17]), &p)
                .unwrap()
                .len(),
            1
        );
    }

    #[test]
    fn direction_series_aligns_to_bars() {
        let p = IndicatorParams::default();
        let bars = bars_from(&[1.0; 20]);
        for k in StrategyKind::ALL {
            assert_eq!(direction_series(k, &bars, &p).len(), 20);
        }
        assert_eq!(
            direction_series(StrategyKind::Rsi, &bars[..3], &p),
            vec![Direction::Hold; 3]
        );
    }

    #[test]
    fn params_validation() {
        assert!(IndicatorParams::default().validate().is_ok());
        let bad = IndicatorParams {
            fast_window: 30,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = IndicatorParams {
            rsi_oversold: 80.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn strategy_names_round_trip() {
        for k in StrategyKind::ALL {
            assert_eq!(k.as_str().parse::<StrategyKind>().unwrap(), k);
        }
    }
}
