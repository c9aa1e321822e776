//! Engine configuration file (TOML) with dotted-key command-line overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::indicators::IndicatorParams;
use crate::market_data::ReplaySpeed;
use crate::sentiment::Staleness;
use crate::strategy::{FusionParams, Mode};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("parsing config: {0}")]
    Parse(String),
    #[error("bad override {0:?}: expected key=value")]
    BadOverride(String),
    #[error("override {key}: {reason}")]
    OverridePath { key: String, reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServerConfig {
    pub bind: String,
    pub journal: PathBuf,
    pub initial_tickers: Vec<String>,
    /// Poll interval advertised to dashboard clients.
    pub poll_interval_secs: u64,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            bind: "127.0.0.1:8080".into(),
            journal: PathBuf::from("trades.jsonl"),
            initial_tickers: Vec::new(),
            poll_interval_secs: 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeedKind {
    Websocket,
    Replay,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeedConfig {
    pub kind: FeedKind,
    pub url: String,
    /// Name of the environment variable holding the feed API key.
    pub api_key_env: String,
    pub replay_path: Option<PathBuf>,
    /// "max" or a positive speed-up factor.
    pub replay_speed: String,
    pub retry_secs: u64,
}

impl Default for FeedConfig {
    fn default() -> Self {
        FeedConfig {
            kind: FeedKind::None,
            url: "wss://ws.finnhub.io".into(),
            api_key_env: "FINNHUB_API_KEY".into(),
            replay_path: None,
            replay_speed: "max".into(),
            retry_secs: 5,
        }
    }
}

impl FeedConfig {
    pub fn speed(&self) -> Result<ReplaySpeed, ConfigError> {
        self.replay_speed.parse().map_err(ConfigError::Parse)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    Fixture,
    Http,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SentimentConfig {
    pub provider: ProviderKind,
    /// Environment variable holding the provider endpoint URL.
    pub endpoint_env: String,
    pub timeout_secs: u64,
    pub poll_secs: u64,
    pub summary_cap: usize,
    pub news_fixture: Option<PathBuf>,
    pub reddit_fixture: Option<PathBuf>,
}

impl Default for SentimentConfig {
    fn default() -> Self {
        SentimentConfig {
            provider: ProviderKind::Fixture,
            endpoint_env: "SENTIMENT_ENDPOINT".into(),
            timeout_secs: 30,
            poll_secs: 60,
            summary_cap: 1000,
            news_fixture: None,
            reddit_fixture: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineSection {
    pub window_capacity: usize,
    pub mode: Mode,
    pub indicators: IndicatorParams,
    pub fusion: FusionParams,
}

impl Default for EngineSection {
    fn default() -> Self {
        EngineSection {
            window_capacity: crate::bars::DEFAULT_WINDOW_CAPACITY,
            mode: Mode::Sentiment,
            indicators: IndicatorParams::default(),
            fusion: FusionParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BacktestSection {
    pub initial_cash: f64,
    pub staleness: Staleness,
}

impl Default for BacktestSection {
    fn default() -> Self {
        BacktestSection {
            initial_cash: 10_000.0,
            staleness: Staleness::UntilSuperseded,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    pub server: ServerConfig,
    pub feed: FeedConfig,
    pub sentiment: SentimentConfig,
    pub engine: EngineSection,
    pub backtest: BacktestSection,
}

impl EngineConfig {
    /// Loads `path` (or defaults when `None`) and applies `key=value`
    /// overrides on top.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self, ConfigError> {
        let mut value = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|source| ConfigError::Read {
                    path: p.to_path_buf(),
                    source,
                })?;
                text.parse::<toml::Table>()
                    .map_err(|e| ConfigError::Parse(e.to_string()))?
            }
            None => toml::Table::try_from(EngineConfig::default())
                .map_err(|e| ConfigError::Parse(e.to_string()))?,
        };
        for raw in overrides {
            apply_override(&mut value, raw)?;
        }
        toml::Value::Table(value)
            .try_into()
            .map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))
    }
}

/// Sets a dotted key. The value is read as a TOML literal when it parses as
/// one, otherwise as a bare string.
pub fn apply_override(table: &mut toml::Table, raw: &str) -> Result<(), ConfigError> {
    let (key, literal) = raw
        .split_once('=')
        .ok_or_else(|| ConfigError::BadOverride(raw.to_string()))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(ConfigError::BadOverride(raw.to_string()));
    }
    let value = parse_literal(literal.trim());
    let mut parts: Vec<&str> = key.split('.').collect();
    let leaf = parts.pop().expect("split yields at least one part");
    let mut cursor = table;
    for part in parts {
        let entry = cursor
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cursor = entry
            .as_table_mut()
            .ok_or_else(|| ConfigError::OverridePath {
                key: key.to_string(),
                reason: format!("{part} is not a table"),
            })?;
    }
    cursor.insert(leaf.to_string(), value);
    Ok(())
}

fn parse_literal(text: &str) -> toml::Value {
    format!("v = {text}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(text.to_string()))
}
