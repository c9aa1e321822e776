use std::collections::BTreeSet;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use tradesig::backtest::{compare_modes, run_backtest, BacktestConfig, GridCell};
use tradesig::bars::read_bars_csv;
use tradesig::config::EngineConfig;
use tradesig::indicators::StrategyKind;
use tradesig::market_data::{replay_ticks, update_tickers, ReplaySpeed, TickerSet};
use tradesig::pipeline::{write_signal_log, Pipeline, SnapshotBoard, SIGNAL_LOG_HEADER};
use tradesig::sentiment::{
    evaluate_classifier, evaluate_provider, read_benchmark_csv, read_label_csv, read_sentiment_csv,
    Averaging, ClassificationMetrics, FixtureProvider, SentimentScore, SentimentStore,
};
use tradesig::strategy::{FusionParams, Mode};

#[derive(Parser, Debug)]
#[command(
    name = "tradesig",
    version,
    about = "Minute-VWAP signal engine, backtester and REST service"
)]
struct Cli {
    /// Engine config file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set engine.indicators.fast_window=7`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the live pipeline and REST API.
    Serve,
    /// Replay a tick CSV through bars and signals, printing each closed bar's signals.
    Replay {
        #[arg(long)]
        ticks: PathBuf,
        /// Comma-separated tickers to track; defaults to every ticker in the file.
        #[arg(long, value_delimiter = ',')]
        tickers: Vec<String>,
        /// "max" or a speed-up factor.
        #[arg(long, default_value = "max")]
        speed: ReplaySpeed,
        /// Optional sentiment CSV fed into fusion.
        #[arg(long)]
        sentiment: Option<PathBuf>,
        /// Signal log destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Backtest one strategy in one mode.
    Backtest {
        #[arg(long)]
        bars: PathBuf,
        #[arg(long)]
        sentiment: Option<PathBuf>,
        #[arg(long, default_value = "base")]
        mode: Mode,
        #[arg(long, default_value = "sma_crossover")]
        strategy: StrategyKind,
        /// Only backtest this ticker when the bar file holds several.
        #[arg(long)]
        ticker: Option<String>,
        #[arg(long, default_value = "backtest_report.csv")]
        out: PathBuf,
        #[arg(long)]
        trades_out: Option<PathBuf>,
    },
    /// Base vs sentiment comparison across strategies and tickers.
    Compare {
        #[arg(long)]
        bars: PathBuf,
        #[arg(long)]
        sentiment: Option<PathBuf>,
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "sma_crossover,rsi,stochastic"
        )]
        strategies: Vec<StrategyKind>,
        #[arg(long, default_value = "comparison.csv")]
        out: PathBuf,
        #[arg(long)]
        table_out: Option<PathBuf>,
    },
    /// Classification metrics from label files or a labeled benchmark.
    EvalSentiment {
        #[arg(long, requires = "truth", conflicts_with = "benchmark")]
        pred: Option<PathBuf>,
        #[arg(long, requires = "pred")]
        truth: Option<PathBuf>,
        /// `text,label` CSV scored with the fixture provider.
        #[arg(long)]
        benchmark: Option<PathBuf>,
        #[arg(long, default_value = "macro")]
        averaging: Averaging,
    },
}

type CliResult = Result<(), Box<dyn std::error::Error>>;

fn open(path: &Path) -> Result<BufReader<File>, Box<dyn std::error::Error>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| format!("{}: {e}", path.display()).into())
}

fn create(path: &Path) -> Result<BufWriter<File>, Box<dyn std::error::Error>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| format!("{}: {e}", path.display()).into())
}

fn load_sentiments(path: Option<&Path>) -> Result<Vec<SentimentScore>, Box<dyn std::error::Error>> {
    let Some(path) = path else {
        return Ok(Vec::new());
    };
    let mut scores = read_sentiment_csv(open(path)?)?;
    scores.sort_by_key(|s| s.as_of);
    Ok(scores)
}

fn backtest_fusion(config: &EngineConfig) -> FusionParams {
    FusionParams {
        staleness: config.backtest.staleness,
        ..config.engine.fusion.clone()
    }
}

fn replay(
    config: &EngineConfig,
    ticks: &Path,
    tickers: Vec<String>,
    speed: ReplaySpeed,
    sentiment: Option<&Path>,
    out: Option<&Path>,
) -> CliResult {
    let tracked = if tickers.is_empty() {
        let mut seen = BTreeSet::new();
        for tick in replay_ticks(open(ticks)?, ReplaySpeed::AsFastAsPossible) {
            seen.insert(tick?.ticker);
        }
        seen.into_iter().collect()
    } else {
        tickers
    };
    let store = SentimentStore::from_scores(load_sentiments(sentiment)?);
    let mut pipeline = Pipeline::new(
        tradesig::runtime::pipeline_settings(config),
        std::sync::Arc::new(parking_lot::RwLock::new(store)),
        std::sync::Arc::new(SnapshotBoard::new()),
    );
    pipeline.set_tickers(update_tickers(&TickerSet::new(), &tracked)?);

    let mut sink: Box<dyn Write> = match out {
        Some(path) => Box::new(create(path)?),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    writeln!(sink, "{SIGNAL_LOG_HEADER}")?;
    for tick in replay_ticks(open(ticks)?, speed) {
        for event in pipeline.on_tick(&tick?) {
            write_signal_log(&mut sink, &event)?;
        }
    }
    for event in pipeline.flush() {
        write_signal_log(&mut sink, &event)?;
    }
    sink.flush()?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn backtest(
    config: &EngineConfig,
    bars: &Path,
    sentiment: Option<&Path>,
    mode: Mode,
    strategy: StrategyKind,
    ticker: Option<String>,
    out: &Path,
    trades_out: Option<&Path>,
) -> CliResult {
    let mut bars = read_bars_csv(open(bars)?)?;
    if let Some(t) = ticker {
        let t = t.to_uppercase();
        bars.retain(|b| b.ticker == t);
    }
    let sentiments = load_sentiments(sentiment)?;
    let cfg = BacktestConfig {
        initial_cash: config.backtest.initial_cash,
        mode,
        strategy,
        indicators: config.engine.indicators.clone(),
        fusion: backtest_fusion(config),
    };
    let report = run_backtest(&bars, &sentiments, &cfg)?;
    report.write_summary_csv(create(out)?)?;
    if let Some(path) = trades_out {
        report.write_trades_csv(create(path)?)?;
    }
    print!("{}", report.render_text());
    Ok(())
}

fn compare(
    config: &EngineConfig,
    bars: &Path,
    sentiment: Option<&Path>,
    strategies: &[StrategyKind],
    out: &Path,
    table_out: Option<&Path>,
) -> CliResult {
    let bars = read_bars_csv(open(bars)?)?;
    let sentiments = load_sentiments(sentiment)?;
    let grid: Vec<GridCell> = strategies
        .iter()
        .map(|&strategy| GridCell {
            strategy,
            initial_cash: config.backtest.initial_cash,
            indicators: config.engine.indicators.clone(),
            fusion: backtest_fusion(config),
        })
        .collect();
    let table = compare_modes(&bars, &sentiments, &grid)?;
    table.write_csv(create(out)?)?;
    let text = table.render_text();
    if let Some(path) = table_out {
        let mut f = create(path)?;
        f.write_all(text.as_bytes())?;
        f.flush()?;
    }
    print!("{text}");
    Ok(())
}

fn print_metrics(m: &ClassificationMetrics) {
    let averaging = match m.averaging {
        Averaging::Macro => "macro",
        Averaging::Weighted => "weighted",
    };
    println!("accuracy   {:.4}", m.accuracy);
    println!("precision  {:.4}", m.precision);
    println!("recall     {:.4}", m.recall);
    println!("f1         {:.4}", m.f1);
    println!("averaging  {averaging}");
    println!();
    println!(
        "{:<12} {:>9} {:>9} {:>9} {:>8}",
        "label", "precision", "recall", "f1", "support"
    );
    for row in &m.per_class {
        println!(
            "{:<12} {:>9.4} {:>9.4} {:>9.4} {:>8}",
            row.label, row.precision, row.recall, row.f1, row.support
        );
    }
}

fn eval_sentiment(
    pred: Option<&Path>,
    truth: Option<&Path>,
    benchmark: Option<&Path>,
    averaging: Averaging,
) -> CliResult {
    let metrics = match (pred, truth, benchmark) {
        (Some(p), Some(t), None) => {
            let predictions = read_label_csv(open(p)?)?;
            let truths = read_label_csv(open(t)?)?;
            evaluate_classifier(&predictions, &truths, averaging)?
        }
        (None, None, Some(b)) => {
            evaluate_provider(&FixtureProvider, &read_benchmark_csv(open(b)?)?, averaging)?
        }
        _ => return Err("pass either --pred and --truth, or --benchmark".into()),
    };
    print_metrics(&metrics);
    Ok(())
}

fn run(cli: Cli) -> CliResult {
    let config = EngineConfig::load(cli.config.as_deref(), &cli.overrides)?;
    match cli.command {
        Command::Serve => {
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(tradesig::runtime::serve(
                config,
                tradesig::service::system_clock(),
            ))?;
            Ok(())
        }
        Command::Replay {
            ticks,
            tickers,
            speed,
            sentiment,
            out,
        } => replay(
            &config,
            &ticks,
            tickers,
            speed,
            sentiment.as_deref(),
            out.as_deref(),
        ),
        Command::Backtest {
            bars,
            sentiment,
            mode,
            strategy,
            ticker,
            out,
            trades_out,
        } => backtest(
            &config,
            &bars,
            sentiment.as_deref(),
            mode,
            strategy,
            ticker,
            &out,
            trades_out.as_deref(),
        ),
        Command::Compare {
            bars,
            sentiment,
            strategies,
            out,
            table_out,
        } => compare(
            &config,
            &bars,
            sentiment.as_deref(),
            &strategies,
            &out,
            table_out.as_deref(),
        ),
        Command::EvalSentiment {
            pred,
            truth,
            benchmark,
            averaging,
        } => eval_sentiment(
            pred.as_deref(),
            truth.as_deref(),
            benchmark.as_deref(),
            averaging,
        ),
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .with_writer(io::stderr)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
