//! Sentiment scoring contract, text sources, the per-ticker score store, and
//! the classifier evaluation harness.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::{BufRead, Read, Write};
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SentimentError {
    #[error("sentiment provider unavailable: {reason}")]
    ProviderUnavailable {
        reason: String,
        retry_after: Option<Duration>,
    },
    #[error("text is empty")]
    EmptyText,
    #[error("no text items to summarize")]
    NoItems,
    #[error("items span several tickers: {0:?}")]
    MixedTickers(Vec<String>),
    #[error("invalid provider response: {0}")]
    InvalidResponse(String),
    #[error("invalid text item: {0}")]
    InvalidItem(String),
    #[error("predictions ({predictions}) and truths ({truths}) differ in length")]
    LengthMismatch { predictions: usize, truths: usize },
    #[error("no labels to evaluate")]
    EmptyInput,
    #[error("line {line}: {reason}")]
    RowParseError { line: usize, reason: String },
    #[error("io: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Positive => "positive",
            Label::Negative => "negative",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "positive" | "pos" => Ok(Label::Positive),
            "negative" | "neg" => Ok(Label::Negative),
            other => Err(format!("unknown label {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TextSourceKind {
    News,
    Reddit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comment {
    pub posted_at: i64,
    pub body: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextItem {
    pub source: TextSourceKind,
    pub ticker: String,
    pub published_at: i64,
    pub title: String,
    #[serde(default)]
    pub body: String,
    #[serde(default)]
    pub comments: Vec<Comment>,
}

impl TextItem {
    pub fn validate(&self) -> Result<(), SentimentError> {
        let bad = |m: String| Err(SentimentError::InvalidItem(m));
        if self.published_at <= 0 {
            return bad(format!(
                "published_at {} must be positive",
                self.published_at
            ));
        }
        if self.title.trim().is_empty() {
            return bad("title is empty".into());
        }
        if self.source == TextSourceKind::News && !self.comments.is_empty() {
            return bad("news items carry no comments".into());
        }
        if self
            .comments
            .windows(2)
            .any(|w| w[1].posted_at < w[0].posted_at)
        {
            return bad("comments are not chronological".into());
        }
        Ok(())
    }
}

/// A provider's verdict on one text, before it is attached to a ticker.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProviderScore {
    pub label: Label,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentimentScore {
    pub ticker: String,
    pub as_of: i64,
    pub label: Label,
    pub confidence: f64,
    #[serde(default)]
    pub summary: String,
}

pub trait SentimentProvider: Send + Sync {
    fn score(&self, text: &str) -> Result<ProviderScore, SentimentError>;
}

pub trait Summarizer: Send + Sync {
    fn summarize(&self, items: &[TextItem]) -> Result<String, SentimentError>;
}

/// Source of news or social text for a ticker.
pub trait TextSource: Send + Sync {
    fn fetch(&self, ticker: &str, since: i64) -> Result<Vec<TextItem>, SentimentError>;
}

fn normalize_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Scores `text` through `provider`, rejecting blank input and out-of-range
/// confidences.
pub fn score_text(
    provider: &dyn SentimentProvider,
    text: &str,
) -> Result<ProviderScore, SentimentError> {
    let text = normalize_whitespace(text);
    if text.is_empty() {
        return Err(SentimentError::EmptyText);
    }
    let score = provider.score(&text)?;
    if !(0.0..=1.0).contains(&score.confidence) {
        return Err(SentimentError::InvalidResponse(format!(
            "confidence {} outside [0, 1]",
            score.confidence
        )));
    }
    Ok(score)
}

/// Two-class softmax over (positive, negative) logits; confidence is the
/// winning class probability.
pub fn confidence_from_logits(positive: f64, negative: f64) -> ProviderScore {
    let m = positive.max(negative);
    let p = (positive - m).exp();
    let n = (negative - m).exp();
    let p_pos = p / (p + n);
    if p_pos >= 0.5 {
        ProviderScore {
            label: Label::Positive,
            confidence: p_pos,
        }
    } else {
        ProviderScore {
            label: Label::Negative,
            confidence: 1.0 - p_pos,
        }
    }
}

const POSITIVE_WORDS: &[&str] = &[
    "beat",
    "beats",
    "boom",
    "bull",
    "bullish",
    "buy",
    "gain",
    "gains",
    "growth",
    "moon",
    "outperform",
    "profit",
    "profits",
    "rally",
    "record",
    "strong",
    "surge",
    "upgrade",
    "upside",
    "win",
];

const NEGATIVE_WORDS: &[&str] = &[
    "bankruptcy",
    "bear",
    "bearish",
    "crash",
    "cut",
    "decline",
    "default",
    "downgrade",
    "drop",
    "fraud",
    "lawsuit",
    "losses",
    "loss",
    "miss",
    "plunge",
    "recall",
    "sell",
    "slump",
    "weak",
    "layoffs",
];

/// Deterministic keyword scorer. Label follows the majority of lexicon hits
/// (ties positive at 0.5); confidence is the majority's share of hits.
#[derive(Debug, Clone, Default)]
pub struct FixtureProvider;

impl FixtureProvider {
    pub fn counts(text: &str) -> (usize, usize) {
        let mut pos = 0;
        let mut neg = 0;
        for word in text
            .split(|c: char| !c.is_alphanumeric())
            .filter(|w| !w.is_empty())
            .map(str::to_lowercase)
        {
            if POSITIVE_WORDS.contains(&word.as_str()) {
                pos += 1;
            } else if NEGATIVE_WORDS.contains(&word.as_str()) {
                neg += 1;
            }
        }
        (pos, neg)
    }
}

impl SentimentProvider for FixtureProvider {
    fn score(&self, text: &str) -> Result<ProviderScore, SentimentError> {
        let (pos, neg) = Self::counts(text);
        let total = (pos + neg) as f64;
        Ok(match pos.cmp(&neg) {
            std::cmp::Ordering::Equal => ProviderScore {
                label: Label::Positive,
                confidence: 0.5,
            },
            std::cmp::Ordering::Greater => ProviderScore {
                label: Label::Positive,
                confidence: pos as f64 / total,
            },
            std::cmp::Ordering::Less => ProviderScore {
                label: Label::Negative,
                confidence: neg as f64 / total,
            },
        })
    }
}

#[derive(Deserialize)]
struct HttpScoreResponse {
    label: Option<Label>,
    confidence: Option<f64>,
    logits: Option<[f64; 2]>,
}

/// Remote scorer: POSTs the text as `text/plain` and expects
/// `{"label": ..., "confidence": ...}` or `{"logits": [pos, neg]}`.
pub struct HttpProvider {
    endpoint: String,
    client: reqwest::blocking::Client,
}

impl HttpProvider {
    pub fn new(endpoint: impl Into<String>, timeout: Duration) -> Result<Self, SentimentError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| SentimentError::ProviderUnavailable {
                reason: e.to_string(),
                retry_after: None,
            })?;
        Ok(HttpProvider {
            endpoint: endpoint.into(),
            client,
        })
    }
}

impl SentimentProvider for HttpProvider {
    fn score(&self, text: &str) -> Result<ProviderScore, SentimentError> {
        let unavailable = |reason: String, retry_after| SentimentError::ProviderUnavailable {
            reason,
            retry_after,
        };
        let response = self
            .client
            .post(&self.endpoint)
            .header(reqwest::header::CONTENT_TYPE, "text/plain; charset=utf-8")
            .body(text.to_string())
            .send()
            .map_err(|e| unavailable(e.to_string(), None))?;
        let status = response.status();
        if status.is_server_error() || status.as_u16() == 429 {
            let retry_after = response
                .headers()
                .get(reqwest::header::RETRY_AFTER)
                .and_then(|v| v.to_str().ok())
                .and_then(|v| v.trim().parse::<u64>().ok())
                .map(Duration::from_secs);
            return Err(unavailable(format!("status {status}"), retry_after));
        }
        if !status.is_success() {
            return Err(SentimentError::InvalidResponse(format!("status {status}")));
        }
        let body: HttpScoreResponse = response
            .json()
            .map_err(|e| SentimentError::InvalidResponse(e.to_string()))?;
        match (body.label, body.confidence, body.logits) {
            (Some(label), Some(confidence), _) => Ok(ProviderScore { label, confidence }),
            (_, _, Some([pos, neg])) => Ok(confidence_from_logits(pos, neg)),
            _ => Err(SentimentError::InvalidResponse(
                "expected label+confidence or logits".into(),
            )),
        }
    }
}

/// Joins titles with single spaces and truncates to `cap` characters.
#[derive(Debug, Clone)]
pub struct FixtureSummarizer {
    pub cap: usize,
}

impl Default for FixtureSummarizer {
    fn default() -> Self {
        FixtureSummarizer { cap: 1000 }
    }
}

impl Summarizer for FixtureSummarizer {
    fn summarize(&self, items: &[TextItem]) -> Result<String, SentimentError> {
        let joined = items
            .iter()
            .map(|i| normalize_whitespace(&i.title))
            .collect::<Vec<_>>()
            .join(" ");
        Ok(joined.chars().take(self.cap).collect())
    }
}

pub fn summarize(
    summarizer: &dyn Summarizer,
    items: &[TextItem],
) -> Result<String, SentimentError> {
    if items.is_empty() {
        return Err(SentimentError::NoItems);
    }
    let tickers: BTreeSet<&str> = items.iter().map(|i| i.ticker.as_str()).collect();
    if tickers.len() > 1 {
        return Err(SentimentError::MixedTickers(
            tickers.into_iter().map(String::from).collect(),
        ));
    }
    summarizer.summarize(items)
}

/// Replays recorded items from a JSON-lines file.
#[derive(Debug, Clone, Default)]
pub struct FixtureTextSource {
    items: Vec<TextItem>,
}

impl FixtureTextSource {
    pub fn new(items: Vec<TextItem>) -> Result<Self, SentimentError> {
        for item in &items {
            item.validate()?;
        }
        Ok(FixtureTextSource { items })
    }

    pub fn from_jsonl<R: BufRead>(reader: R) -> Result<Self, SentimentError> {
        let mut items = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| SentimentError::Io(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let item: TextItem =
                serde_json::from_str(&line).map_err(|e| SentimentError::RowParseError {
                    line: i + 1,
                    reason: e.to_string(),
                })?;
            items.push(item);
        }
        Self::new(items)
    }
}

impl TextSource for FixtureTextSource {
    fn fetch(&self, ticker: &str, since: i64) -> Result<Vec<TextItem>, SentimentError> {
        Ok(self
            .items
            .iter()
            .filter(|i| i.ticker == ticker && i.published_at > since)
            .cloned()
            .collect())
    }
}

/// Fetches new text for `ticker`, summarizes it and scores the summary.
/// Returns `None` when no source has anything newer than `since`.
pub fn refresh_ticker(
    sources: &[Box<dyn TextSource>],
    summarizer: &dyn Summarizer,
    provider: &dyn SentimentProvider,
    ticker: &str,
    since: i64,
) -> Result<Option<SentimentScore>, SentimentError> {
    let mut items = Vec::new();
    for source in sources {
        items.extend(source.fetch(ticker, since)?);
    }
    if items.is_empty() {
        return Ok(None);
    }
    items.sort_by_key(|i| i.published_at);
    let as_of = items.last().map(|i| i.published_at).unwrap_or(since);
    let summary = summarize(summarizer, &items)?;
    let scored = score_text(provider, &summary)?;
    Ok(Some(SentimentScore {
        ticker: ticker.to_string(),
        as_of,
        label: scored.label,
        confidence: scored.confidence,
        summary,
    }))
}

/// How long a score stays actionable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Staleness {
    /// Usable while `as_of - score.as_of <= limit` milliseconds.
    Within(i64),
    UntilSuperseded,
}

impl Staleness {
    pub fn minutes(m: i64) -> Self {
        Staleness::Within(m * 60_000)
    }

    fn admits(self, age: i64) -> bool {
        match self {
            Staleness::Within(limit) => age <= limit,
            Staleness::UntilSuperseded => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SentimentLookup<'a> {
    Fresh(&'a SentimentScore),
    Stale,
}

impl<'a> SentimentLookup<'a> {
    pub fn score(&self) -> Option<&'a SentimentScore> {
        match self {
            SentimentLookup::Fresh(s) => Some(s),
            SentimentLookup::Stale => None,
        }
    }
}

/// Chronological scores per ticker.
#[derive(Debug, Clone, Default)]
pub struct SentimentStore {
    scores: HashMap<String, Vec<SentimentScore>>,
}

impl SentimentStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_scores(scores: impl IntoIterator<Item = SentimentScore>) -> Self {
        let mut store = Self::new();
        for s in scores {
            store.insert(s);
        }
        store
    }

    pub fn insert(&mut self, score: SentimentScore) {
        let list = self.scores.entry(score.ticker.clone()).or_default();
        let at = list.partition_point(|s| s.as_of <= score.as_of);
        list.insert(at, score);
    }

    pub fn scores(&self, ticker: &str) -> &[SentimentScore] {
        self.scores.get(ticker).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn latest(&self, ticker: &str, as_of: i64, staleness: Staleness) -> SentimentLookup<'_> {
        latest_in(self.scores(ticker), as_of, staleness)
    }

    pub fn retain_tickers(&mut self, keep: impl Fn(&str) -> bool) {
        self.scores.retain(|t, _| keep(t));
    }
}

/// Most recent score at or before `as_of` within the staleness limit.
pub fn latest_sentiment<'a>(
    store: &'a SentimentStore,
    ticker: &str,
    as_of: i64,
    staleness: Staleness,
) -> SentimentLookup<'a> {
    store.latest(ticker, as_of, staleness)
}

/// Lookup over one ticker's chronologically sorted scores.
pub fn latest_in(
    scores: &[SentimentScore],
    as_of: i64,
    staleness: Staleness,
) -> SentimentLookup<'_> {
    let idx = scores.partition_point(|s| s.as_of <= as_of);
    match idx.checked_sub(1).map(|i| &scores[i]) {
        Some(score) if staleness.admits(as_of - score.as_of) => SentimentLookup::Fresh(score),
        _ => SentimentLookup::Stale,
    }
}

pub const SENTIMENT_HEADER: [&str; 4] = ["ticker", "as_of_ms", "label", "confidence"];

#[derive(Deserialize)]
struct SentimentRow {
    ticker: String,
    as_of_ms: i64,
    label: String,
    confidence: f64,
}

/// Reads the sentiment CSV (`ticker,as_of_ms,label,confidence`).
pub fn read_sentiment_csv<R: Read>(source: R) -> Result<Vec<SentimentScore>, SentimentError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(source);
    let mut out = Vec::new();
    for (i, row) in reader.deserialize::<SentimentRow>().enumerate() {
        let line = i + 2;
        let err = |reason: String| SentimentError::RowParseError { line, reason };
        let row = row.map_err(|e| err(e.to_string()))?;
        let label = row.label.parse::<Label>().map_err(err)?;
        if !(0.0..=1.0).contains(&row.confidence) {
            return Err(err(format!("confidence {} outside [0, 1]", row.confidence)));
        }
        out.push(SentimentScore {
            ticker: row.ticker,
            as_of: row.as_of_ms,
            label,
            confidence: row.confidence,
            summary: String::new(),
        });
    }
    Ok(out)
}

pub fn write_sentiment_csv<W: Write>(
    writer: W,
    scores: &[SentimentScore],
) -> Result<(), SentimentError> {
    let io = |e: csv::Error| SentimentError::Io(e.to_string());
    let mut out = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(writer);
    out.write_record(SENTIMENT_HEADER).map_err(io)?;
    for s in scores {
        out.write_record([
            s.ticker.clone(),
            s.as_of.to_string(),
            s.label.to_string(),
            s.confidence.to_string(),
        ])
        .map_err(io)?;
    }
    out.flush().map_err(|e| SentimentError::Io(e.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Averaging {
    #[default]
    Macro,
    Weighted,
}

impl FromStr for Averaging {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "macro" => Ok(Averaging::Macro),
            "weighted" => Ok(Averaging::Weighted),
            other => Err(format!("unknown averaging {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassMetrics {
    pub label: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Number of truths carrying this label.
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub averaging: Averaging,
    pub per_class: Vec<ClassMetrics>,
}

impl ClassificationMetrics {
    /// Re-averages the per-class rows under another mode.
    pub fn with_averaging(&self, averaging: Averaging) -> ClassificationMetrics {
        let (precision, recall, f1) = average(&self.per_class, averaging);
        ClassificationMetrics {
            precision,
            recall,
            f1,
            averaging,
            ..self.clone()
        }
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

fn average(rows: &[ClassMetrics], averaging: Averaging) -> (f64, f64, f64) {
    let weights: Vec<f64> = match averaging {
        Averaging::Macro => vec![1.0; rows.len()],
        Averaging::Weighted => rows.iter().map(|r| r.support as f64).collect(),
    };
    let total: f64 = weights.iter().sum();
    if total == 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let mean = |f: fn(&ClassMetrics) -> f64| {
        rows.iter()
            .zip(&weights)
            .map(|(r, w)| f(r) * w)
            .sum::<f64>()
            / total
    };
    (mean(|r| r.precision), mean(|r| r.recall), mean(|r| r.f1))
}

/// Accuracy plus per-class precision/recall/F1 over the union of observed
/// labels, averaged as requested.
pub fn evaluate_classifier<S: AsRef<str>>(
    predictions: &[S],
    truths: &[S],
    averaging: Averaging,
) -> Result<ClassificationMetrics, SentimentError> {
    if predictions.len() != truths.len() {
        return Err(SentimentError::LengthMismatch {
            predictions: predictions.len(),
            truths: truths.len(),
        });
    }
    if truths.is_empty() {
        return Err(SentimentError::EmptyInput);
    }
    #[derive(Default)]
    struct Counts {
        tp: usize,
        predicted: usize,
        actual: usize,
    }
    let mut counts: BTreeMap<&str, Counts> = BTreeMap::new();
    let mut correct = 0;
    for (p, t) in predictions.iter().zip(truths) {
        let (p, t) = (p.as_ref(), t.as_ref());
        counts.entry(p).or_default().predicted += 1;
        counts.entry(t).or_default().actual += 1;
        if p == t {
            counts.get_mut(p).expect("inserted above").tp += 1;
            correct += 1;
        }
    }
    let per_class: Vec<ClassMetrics> = counts
        .into_iter()
        .map(|(label, c)| {
            let precision = ratio(c.tp, c.predicted);
            let recall = ratio(c.tp, c.actual);
            ClassMetrics {
                label: label.to_string(),
                precision,
                recall,
                f1: harmonic(precision, recall),
                support: c.actual,
            }
        })
        .collect();
    let (precision, recall, f1) = average(&per_class, averaging);
    Ok(ClassificationMetrics {
        accuracy: ratio(correct, truths.len()),
        precision,
        recall,
        f1,
        averaging,
        per_class,
    })
}

#[derive(Debug, Clone, Deserialize)]
pub struct BenchmarkRow {
    pub text: String,
    pub label: String,
}

/// Reads a labeled benchmark CSV (`text,label`).
pub fn read_benchmark_csv<R: Read>(source: R) -> Result<Vec<BenchmarkRow>, SentimentError> {
    let mut reader = csv::ReaderBuilder::new().from_reader(source);
    reader
        .deserialize::<BenchmarkRow>()
        .enumerate()
        .map(|(i, row)| {
            row.map(|mut r| {
                r.label = r.label.trim().to_ascii_lowercase();
                r
            })
            .map_err(|e| SentimentError::RowParseError {
                line: i + 2,
                reason: e.to_string(),
            })
        })
        .collect()
}

/// Reads a single-column label file (header `label`, or the first column).
pub fn read_label_csv<R: Read>(source: R) -> Result<Vec<String>, SentimentError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(source);
    let column = reader
        .headers()
        .map_err(|e| SentimentError::Io(e.to_string()))?
        .iter()
        .position(|h| h == "label")
        .unwrap_or(0);
    reader
        .records()
        .enumerate()
        .map(|(i, rec)| {
            let rec = rec.map_err(|e| SentimentError::RowParseError {
                line: i + 2,
                reason: e.to_string(),
            })?;
            rec.get(column)
                .map(|s| s.to_ascii_lowercase())
                .ok_or(SentimentError::RowParseError {
                    line: i + 2,
                    reason: "missing label column".into(),
                })
        })
        .collect()
}

/// Scores every benchmark text and evaluates against its label.
pub fn evaluate_provider(
    provider: &dyn SentimentProvider,
    rows: &[BenchmarkRow],
    averaging: Averaging,
) -> Result<ClassificationMetrics, SentimentError> {
    let predictions = crate::par::map(rows, |row| {
        score_text(provider, &row.text).map(|s| s.label.as_str().to_string())
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    let truths: Vec<String> = rows.iter().map(|r| r.label.clone()).collect();
    evaluate_classifier(&predictions, &truths, averaging)
}
