//! Fusion of a technical signal with the prevailing sentiment into a sized
//! trading decision.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::indicators::{Direction, StrategyKind, TechnicalSignal};
use crate::sentiment::{Label, SentimentLookup, Staleness};

pub const BASE_SIZE: f64 = 0.10;
pub const HIGH_CONVICTION_SIZE: f64 = 0.15;

#[derive(Debug, Error, PartialEq)]
pub enum FusionError {
    #[error("high_conviction_threshold {0} must lie strictly between 0 and 1")]
    InvalidThreshold(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Base,
    Sentiment,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Base => "base",
            Mode::Sentiment => "sentiment",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "base" => Ok(Mode::Base),
            "sentiment" => Ok(Mode::Sentiment),
            other => Err(format!("unknown mode {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FusionParams {
    pub high_conviction_threshold: f64,
    pub staleness: Staleness,
}

impl Default for FusionParams {
    fn default() -> Self {
        FusionParams {
            high_conviction_threshold: 0.8,
            staleness: Staleness::minutes(60),
        }
    }
}

impl FusionParams {
    pub fn validate(&self) -> Result<(), FusionError> {
        let t = self.high_conviction_threshold;
        if t > 0.0 && t < 1.0 {
            Ok(())
        } else {
            Err(FusionError::InvalidThreshold(t))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombinedSignal {
    pub ticker: String,
    pub bar_time: i64,
    pub direction: Direction,
    /// Fraction of initial cash to commit.
    pub size_fraction: f64,
    pub strategy: StrategyKind,
    pub mode: Mode,
    pub rationale: String,
}

fn agrees(label: Label, direction: Direction) -> bool {
    matches!(
        (label, direction),
        (Label::Positive, Direction::Long) | (Label::Negative, Direction::Short)
    )
}

/// Base mode passes the technical direction through at 10%. Sentiment mode
/// needs a fresh score of matching polarity: 15% at or above the conviction
/// threshold, 10% below it; disagreement or staleness holds.
pub fn fuse(
    technical: &TechnicalSignal,
    sentiment: &SentimentLookup<'_>,
    mode: Mode,
    params: &FusionParams,
) -> CombinedSignal {
    let (direction, size_fraction, rationale) = match (mode, technical.direction) {
        (_, Direction::Hold) => (Direction::Hold, 0.0, "no technical trigger".to_string()),
        (Mode::Base, d) => (d, BASE_SIZE, format!("{} {d}", technical.strategy)),
        (Mode::Sentiment, d) => match sentiment {
            SentimentLookup::Stale => (Direction::Hold, 0.0, "sentiment stale".to_string()),
            SentimentLookup::Fresh(score) if !agrees(score.label, d) => (
                Direction::Hold,
                0.0,
                format!("{} sentiment vetoes {d}", score.label),
            ),
            SentimentLookup::Fresh(score) => {
                if score.confidence >= params.high_conviction_threshold {
                    (
                        d,
                        HIGH_CONVICTION_SIZE,
                        format!(
                            "{d} confirmed by {} sentiment {:.2}",
                            score.label, score.confidence
                        ),
                    )
                } else {
                    (
                        d,
                        BASE_SIZE,
                        format!(
                            "{d} with weak {} sentiment {:.2}",
                            score.label, score.confidence
                        ),
                    )
                }
            }
        },
    };
    CombinedSignal {
        ticker: technical.ticker.clone(),
        bar_time: technical.bar_time,
        direction,
        size_fraction,
        strategy: technical.strategy,
        mode,
        rationale,
    }
}
