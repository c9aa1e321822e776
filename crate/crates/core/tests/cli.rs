mod common;

use std::fs;
use std::process::{Command, Output};

use common::fixture;

fn tradesig(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tradesig"))
        .args(args)
        .env("RUST_LOG", "off")
        .output()
        .unwrap()
}

fn path(p: &std::path::Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn replay_reproduces_golden_log() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("signals.csv");
    let ticks = fixture("ticks.csv");
    let sent = fixture("replay_sentiment.csv");
    let o = tradesig(&[
        "replay",
        "--ticks",
        path(&ticks),
        "--sentiment",
        path(&sent),
        "--out",
        path(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        fs::read(&out).unwrap(),
        fs::read(fixture("replay_signals.csv")).unwrap()
    );

    // stdout path, explicit tickers in a different order
    let o = tradesig(&[
        "replay",
        "--ticks",
        path(&ticks),
        "--sentiment",
        path(&sent),
        "--tickers",
        "MSFT,brk.b,AAPL",
    ]);
    assert!(o.status.success());
    assert_eq!(o.stdout, fs::read(fixture("replay_signals.csv")).unwrap());
}

#[test]
fn finite_speed_gives_same_log() {
    let dir = tempfile::tempdir().unwrap();
    let ticks = dir.path().join("ticks.csv");
    let all = fs::read_to_string(fixture("ticks.csv")).unwrap();
    // about four minutes of ticks; at 10000x they replay in ~25 ms
    let head: String = all.lines().take(700).map(|l| format!("{l}\n")).collect();
    fs::write(&ticks, head).unwrap();
    let fast = tradesig(&["replay", "--ticks", path(&ticks)]);
    let paced = tradesig(&["replay", "--ticks", path(&ticks), "--speed", "10000"]);
    assert!(fast.status.success() && paced.status.success());
    assert_eq!(fast.stdout, paced.stdout);
    assert!(String::from_utf8_lossy(&fast.stdout).lines().count() > 3);
}

#[test]
fn replay_tracks_only_requested_tickers() {
    let o = tradesig(&[
        "replay",
        "--ticks",
        path(&fixture("ticks.csv")),
        "--tickers",
        "AAPL",
    ]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text
        .lines()
        .skip(1)
        .all(|l| l.split(',').nth(1) == Some("AAPL")));
    assert_eq!(text.lines().count(), 1 + 90 * 3);
}

#[test]
fn backtest_writes_report_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.csv");
    let trades = dir.path().join("trades.csv");
    let o = tradesig(&[
        "backtest",
        "--bars",
        path(&fixture("trend_bars.csv")),
        "--sentiment",
        path(&fixture("trend_sentiment.csv")),
        "--mode",
        "sentiment",
        "--out",
        path(&report),
        "--trades-out",
        path(&trades),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("mode          sentiment"), "{text}");
    let summary = fs::read_to_string(&report).unwrap();
    assert!(summary.starts_with(
        "ticker,strategy,mode,initial_cash,final_equity,trade_count,win_ratio,sharpe"
    ));
    assert_eq!(fs::read_to_string(&trades).unwrap().lines().count(), 2);
}

#[test]
fn compare_is_deterministic_and_honours_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, extra: &[&str]| {
        let out = dir.path().join(name);
        let (bars, sent) = (fixture("trend_bars.csv"), fixture("trend_sentiment.csv"));
        let mut args = vec![
            "compare",
            "--bars",
            path(&bars),
            "--sentiment",
            path(&sent),
            "--out",
            path(&out),
        ];
        args.extend_from_slice(extra);
        let o = tradesig(&args);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        (
            fs::read_to_string(out).unwrap(),
            String::from_utf8(o.stdout).unwrap(),
        )
    };
    let (a, table) = run("a.csv", &[]);
    let (b, _) = run("b.csv", &[]);
    assert_eq!(a, b);
    assert_eq!(a.lines().count(), 4);
    assert!(table.contains("Sharpe Sentiment"));
    let (c, _) = run(
        "c.csv",
        &["--set", "backtest.initial_cash=5000", "--strategies", "rsi"],
    );
    assert_eq!(c.lines().count(), 2);
    assert!(c.lines().nth(1).unwrap().starts_with("TRND,rsi,"));
}

#[test]
fn eval_sentiment_reports_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let pred = dir.path().join("pred.csv");
    let truth = dir.path().join("truth.csv");
    fs::write(&pred, "label\npositive\nnegative\npositive\n").unwrap();
    fs::write(&truth, "label\npositive\nnegative\nnegative\n").unwrap();
    let o = tradesig(&[
        "eval-sentiment",
        "--pred",
        path(&pred),
        "--truth",
        path(&truth),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("accuracy   0.6667"), "{text}");
    assert!(text.contains("f1         0.6667"), "{text}");

    let bench = dir.path().join("bench.csv");
    fs::write(&bench, "text,label\nrecord profits and strong growth,positive\nfraud lawsuit and layoffs,negative\n").unwrap();
    let o = tradesig(&[
        "eval-sentiment",
        "--benchmark",
        path(&bench),
        "--averaging",
        "weighted",
    ]);
    assert!(o.status.success());
    assert!(String::from_utf8(o.stdout)
        .unwrap()
        .contains("accuracy   1.0000"));
}

#[test]
fn exit_codes() {
    // usage errors
    assert_eq!(tradesig(&[]).status.code(), Some(2));
    assert_eq!(tradesig(&["backtest"]).status.code(), Some(2));
    assert_eq!(
        tradesig(&["replay", "--ticks", "x", "--speed", "-3"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        tradesig(&["backtest", "--bars", "x", "--mode", "yolo"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(tradesig(&["--help"]).status.code(), Some(0));

    // domain errors
    let dir = tempfile::tempdir().unwrap();
    let missing = tradesig(&["backtest", "--bars", path(&dir.path().join("nope.csv"))]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("nope.csv"));

    let pred = dir.path().join("p.csv");
    let truth = dir.path().join("t.csv");
    fs::write(&pred, "label\npositive\n").unwrap();
    fs::write(&truth, "label\npositive\nnegative\n").unwrap();
    let o = tradesig(&[
        "eval-sentiment",
        "--pred",
        path(&pred),
        "--truth",
        path(&truth),
    ]);
    assert_eq!(o.status.code(), Some(1));

    let unordered = dir.path().join("ticks.csv");
    fs::write(
        &unordered,
        "ticker,timestamp_ms,price,volume\nAAPL,2000,1,1\nAAPL,1000,1,1\n",
    )
    .unwrap();
    assert_eq!(
        tradesig(&["replay", "--ticks", path(&unordered)])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        tradesig(&[
            "compare",
            "--bars",
            path(&fixture("trend_bars.csv")),
            "--set",
            "nokey"
        ])
        .status
        .code(),
        Some(1)
    );
}
