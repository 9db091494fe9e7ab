use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};

use sentihedge::classify::{self, Direction, LabeledWeek};
use sentihedge::dataset::{self, Bundle, FeatureFrame, CARRIED_COLUMNS, MARKET_COLUMNS, SENTIMENT_COLUMNS};
use sentihedge::forecast::{self, ArimaOrder, ModelSpec, Predictors};
use sentihedge::hedge::{self, BacktestConfig, HedgeMode, VolSource};
use sentihedge::market;
use sentihedge::sentiment;
use sentihedge::stats;
use sentihedge::sweep;
use sentihedge::synth::{self, Generator};
use sentihedge::timeseries::{AlignPolicy, WindowSpec};

#[derive(Parser)]
#[command(name = "sentihedge", version, about = "Tweet-sentiment market analytics and hedging backtests")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate tweets and market bars and write a dataset bundle
    #[command(args_override_self = true)]
    Ingest(IngestArgs),
    /// Write the feature frame of a bundle at one window
    #[command(args_override_self = true)]
    Features(FeaturesArgs),
    /// Correlate market features with sentiment features
    #[command(args_override_self = true)]
    Correlate(FeaturesArgs),
    /// Granger tests of every sentiment feature against every market feature
    #[command(args_override_self = true)]
    Granger(GrangerArgs),
    /// Expert model selection and one-step forecast evaluation
    #[command(args_override_self = true)]
    Forecast(ForecastArgs),
    /// Train and test the weekly direction classifier
    #[command(args_override_self = true)]
    Classify(ClassifyArgs),
    /// Married-put hedging backtest driven by weekly predictions
    #[command(args_override_self = true)]
    Backtest(BacktestArgs),
    /// R² of returns on tweet features across window widths
    #[command(name = "sweep-windows", args_override_self = true)]
    SweepWindows(SweepArgs),
    /// Generate a synthetic tweet + market corpus
    #[command(args_override_self = true)]
    Synth(SynthArgs),
}

#[derive(Args)]
struct Common {
    /// TOML file of `flag = value` defaults; command-line flags win
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct IngestArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    tweets: PathBuf,
    #[arg(long)]
    market: PathBuf,
    /// next-trading-day or drop
    #[arg(long, default_value = "next-trading-day")]
    align: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FeaturesArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    bundle: PathBuf,
    #[arg(long, default_value = "daily")]
    window: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GrangerArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    bundle: PathBuf,
    #[arg(long, default_value = "daily")]
    window: String,
    #[arg(long, default_value_t = 3)]
    max_lag: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ForecastArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    bundle: PathBuf,
    #[arg(long, default_value = "daily")]
    window: String,
    /// Feature column to forecast
    #[arg(long, default_value = "close")]
    target: String,
    /// Predictor columns (must be known one step ahead, e.g. carried features)
    #[arg(long, value_delimiter = ',', default_values_t = CARRIED_COLUMNS.map(String::from))]
    predictors: Vec<String>,
    /// Fixed ARIMA order `p,d,q`; expert selection when absent
    #[arg(long)]
    order: Option<String>,
    #[arg(long, default_value_t = 0.75)]
    train_frac: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ClassifyArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    bundle: PathBuf,
    #[arg(long, default_value = "weekly")]
    window: String,
    /// Last target-week date in the training split; defaults to ~76% of weeks
    #[arg(long)]
    train_through: Option<NaiveDate>,
    /// SVM regularization
    #[arg(long = "C", alias = "c", default_value_t = 1.0)]
    c: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BacktestArgs {
    #[command(flatten)]
    common: Common,
    /// Daily OHLCV CSV of the hedged index
    #[arg(long)]
    index_csv: PathBuf,
    /// CSV with `decision_date`/`date` and `predicted`/`prediction` columns
    #[arg(long, conflicts_with = "from_classifier")]
    predictions_csv: Option<PathBuf>,
    /// Output directory of `classify`
    #[arg(long)]
    from_classifier: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    shares: u64,
    #[arg(long, default_value_t = 500)]
    block: u64,
    #[arg(long, default_value_t = 0.0)]
    rate: f64,
    #[arg(long, default_value_t = 8)]
    expiry_weeks: u32,
    /// Constant annualized volatility; annualized GK volatility when absent
    #[arg(long)]
    vol: Option<f64>,
    /// Fraction of model value lost when selling puts
    #[arg(long, default_value_t = 0.0)]
    haircut: f64,
    #[arg(long, default_value = "partial")]
    initial_mode: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    bundle: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = WindowSpec::NAMED.map(|w| w.to_string()))]
    windows: Vec<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    #[command(flatten)]
    common: Common,
    /// ar1, lagged-cause, separable-weeks, crash-path or monthly-signal
    #[arg(long)]
    generator: String,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Number of trading days
    #[arg(long, default_value_t = 500)]
    size: usize,
    #[arg(long)]
    out: PathBuf,
}

/// Turn the `--config` file into flags placed right after the subcommand,
/// so explicit flags (which come later) override them.
fn expand_config(args: Vec<OsString>) -> anyhow::Result<Vec<OsString>> {
    let mut path = None;
    for (i, a) in args.iter().enumerate() {
        let s = a.to_string_lossy();
        if s == "--config" {
            path = args.get(i + 1).map(PathBuf::from);
        } else if let Some(p) = s.strip_prefix("--config=") {
            path = Some(PathBuf::from(p));
        }
    }
    let Some(path) = path else { return Ok(args) };
    let text = std::fs::read_to_string(&path).with_context(|| format!("reading config {}", path.display()))?;
    let table: toml::Table = text.parse().with_context(|| format!("parsing config {}", path.display()))?;
    let mut flags = Vec::new();
    for (key, value) in table {
        let flag = format!("--{}", key.replace('_', "-"));
        let rendered = match value {
            toml::Value::String(s) => s,
            toml::Value::Integer(i) => i.to_string(),
            toml::Value::Float(f) => f.to_string(),
            toml::Value::Boolean(true) => {
                flags.push(OsString::from(flag));
                continue;
            }
            toml::Value::Boolean(false) => continue,
            toml::Value::Datetime(d) => d.to_string(),
            toml::Value::Array(items) => items
                .iter()
                .map(|v| match v {
                    toml::Value::String(s) => s.clone(),
                    other => other.to_string(),
                })
                .collect::<Vec<_>>()
                .join(","),
            toml::Value::Table(_) => bail!("config key '{key}' must be a scalar or list"),
        };
        flags.push(OsString::from(flag));
        flags.push(OsString::from(rendered));
    }
    if args.len() < 2 {
        return Ok(args);
    }
    let mut out = args[..2].to_vec();
    out.extend(flags);
    out.extend(args[2..].iter().cloned());
    Ok(out)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let result = expand_config(std::env::args_os().collect()).and_then(|args| {
        let cli = Cli::try_parse_from(args).map_err(|e| {
            if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) {
                e.exit();
            }
            anyhow::Error::new(e)
        })?;
        run(cli.command)
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let kind = if let Some(err) = e.downcast_ref::<sentihedge::Error>() {
                err.kind()
            } else if e.downcast_ref::<clap::Error>().is_some() {
                "usage"
            } else {
                "io"
            };
            let record = serde_json::json!({ "error": kind, "message": format!("{e:#}") });
            eprintln!("{record}");
            ExitCode::FAILURE
        }
    }
}

fn run(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Ingest(a) => ingest(a),
        Command::Features(a) => features(a),
        Command::Correlate(a) => correlate(a),
        Command::Granger(a) => granger(a),
        Command::Forecast(a) => forecast_cmd(a),
        Command::Classify(a) => classify_cmd(a),
        Command::Backtest(a) => backtest(a),
        Command::SweepWindows(a) => sweep_cmd(a),
        Command::Synth(a) => synth_cmd(a),
    }
}

/// Shortest round-trip representation, scientific for very small or large values.
fn num(x: f64) -> String {
    format!("{x:?}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn csv_writer(path: &Path) -> anyhow::Result<csv::Writer<std::io::BufWriter<std::fs::File>>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    Ok(csv::Writer::from_writer(dataset::create(path)?))
}

fn load_bundle(dir: &Path) -> anyhow::Result<Bundle> {
    Ok(dataset::read_bundle(dir)?)
}

fn synth_cmd(a: SynthArgs) -> anyhow::Result<()> {
    let generator: Generator = a.generator.parse()?;
    let data = synth::generate(generator, a.seed, a.size)?;
    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    sentiment::write_tweets(dataset::create(&a.out.join("tweets.csv"))?, &data.tweets)?;
    market::write_bars(dataset::create(&a.out.join("market.csv"))?, &data.bars)?;
    println!("{}: {} tweets, {} bars -> {}", generator, data.tweets.len(), data.bars.len(), a.out.display());
    Ok(())
}

fn ingest(a: IngestArgs) -> anyhow::Result<()> {
    let policy: AlignPolicy = a.align.parse()?;
    let tweets = sentiment::read_tweets(dataset::open(&a.tweets)?)?;
    let bars = market::read_bars(dataset::open(&a.market)?)?;
    let bundle = dataset::ingest(&tweets, bars, policy)?;
    dataset::write_bundle(&a.out, &bundle)?;
    println!("bundle: {} market rows -> {}", bundle.bars.len(), a.out.display());
    Ok(())
}

fn features(a: FeaturesArgs) -> anyhow::Result<()> {
    let window: WindowSpec = a.window.parse()?;
    let bundle = load_bundle(&a.bundle)?;
    let frame = dataset::feature_frame(&bundle, window)?;
    if let Some(parent) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    frame.write_csv(dataset::create(&a.out)?)?;
    println!("{} {} rows -> {}", window, frame.len(), a.out.display());
    Ok(())
}

fn sentiment_series(frame: &FeatureFrame) -> anyhow::Result<Vec<sentihedge::timeseries::Series>> {
    SENTIMENT_COLUMNS
        .iter()
        .chain(CARRIED_COLUMNS.iter())
        .map(|c| Ok(frame.series(c)?))
        .collect()
}

fn correlate(a: FeaturesArgs) -> anyhow::Result<()> {
    let window: WindowSpec = a.window.parse()?;
    let frame = dataset::feature_frame(&load_bundle(&a.bundle)?, window)?;
    let rows: Vec<_> = MARKET_COLUMNS.iter().map(|c| frame.series(c)).collect::<Result<_, _>>()?;
    let m = stats::correlation_matrix(&rows, &sentiment_series(&frame)?)?;
    let mut w = csv_writer(&a.out)?;
    w.write_record(["market_feature", "sentiment_feature", "r", "n"])?;
    for (i, row) in m.rows.iter().enumerate() {
        for (j, col) in m.cols.iter().enumerate() {
            w.write_record([row.clone(), col.clone(), opt(m.r[i][j]), m.n[i][j].to_string()])?;
        }
    }
    w.flush()?;
    println!("{}x{} correlations -> {}", m.rows.len(), m.cols.len(), a.out.display());
    Ok(())
}

fn granger(a: GrangerArgs) -> anyhow::Result<()> {
    let window: WindowSpec = a.window.parse()?;
    let frame = dataset::feature_frame(&load_bundle(&a.bundle)?, window)?;
    let mut w = csv_writer(&a.out)?;
    w.write_record(["cause", "target", "lag", "f_stat", "p_value", "n", "significance", "note"])?;
    for target in MARKET_COLUMNS {
        let y = frame.series(target)?;
        for cause in SENTIMENT_COLUMNS {
            let x = frame.series(cause)?;
            for lag in stats::granger(&y, &x, a.max_lag)? {
                let row = match lag.result {
                    Ok(r) => [
                        cause.to_string(),
                        target.to_string(),
                        lag.lag.to_string(),
                        num(r.f_stat),
                        num(r.p_value),
                        r.n.to_string(),
                        stats::significance_stars(r.p_value).to_string(),
                        String::new(),
                    ],
                    Err(e) => [
                        cause.to_string(),
                        target.to_string(),
                        lag.lag.to_string(),
                        String::new(),
                        String::new(),
                        String::new(),
                        String::new(),
                        e.to_string(),
                    ],
                };
                w.write_record(&row)?;
            }
        }
    }
    w.flush()?;
    println!("granger table -> {}", a.out.display());
    Ok(())
}

/// Longest suffix of rows where the target and every predictor are present.
fn dense_block(frame: &FeatureFrame, target: &str, predictors: &[String]) -> anyhow::Result<(usize, Vec<f64>, Vec<Vec<f64>>)> {
    let y = frame.column(target)?;
    let xs: Vec<&[Option<f64>]> = predictors.iter().map(|p| frame.column(p)).collect::<Result<_, _>>()?;
    let complete = |i: usize| y[i].is_some() && xs.iter().all(|x| x[i].is_some());
    let start = (0..frame.len()).rev().take_while(|&i| complete(i)).last().unwrap_or(frame.len());
    if let Some(gap) = (0..start).find(|&i| complete(i)) {
        log::warn!("rows {gap}..{start} precede a missing value and are excluded");
    }
    let yv = y[start..].iter().map(|v| v.unwrap()).collect();
    let xv = xs.iter().map(|x| x[start..].iter().map(|v| v.unwrap()).collect()).collect();
    Ok((start, yv, xv))
}

fn forecast_cmd(a: ForecastArgs) -> anyhow::Result<()> {
    let window: WindowSpec = a.window.parse()?;
    let spec = match &a.order {
        Some(o) => ModelSpec::Fixed(o.parse::<ArimaOrder>()?),
        None => ModelSpec::Expert(forecast::default_orders()),
    };
    let frame = dataset::feature_frame(&load_bundle(&a.bundle)?, window)?;
    let predictors: Vec<String> = a.predictors.iter().filter(|p| !p.is_empty()).cloned().collect();
    let (start, y, xs) = dense_block(&frame, &a.target, &predictors)?;
    let x = (!predictors.is_empty()).then_some(Predictors {
        columns: &xs,
        names: &predictors,
    });
    let ev = forecast::evaluate(&spec, &y, x, a.train_frac)?;

    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let mut report = csv_writer(&a.out.join("report.csv"))?;
    report.write_record([
        "variant",
        "model",
        "predictors",
        "r_squared",
        "mape",
        "max_ape",
        "direction",
        "ljung_box_q",
        "ljung_box_dof",
        "ljung_box_p",
    ])?;
    let mut steps = csv_writer(&a.out.join("forecasts.csv"))?;
    steps.write_record(["variant", "date", "observed", "forecast", "lcl", "ucl"])?;
    let mut fitted = csv_writer(&a.out.join("fitted.csv"))?;
    fitted.write_record(["variant", "date", "observed", "fitted"])?;
    let variants = [("with_predictors", ev.with_predictors.as_ref()), ("without_predictors", Some(&ev.without_predictors))];
    for (name, r) in variants {
        let Some(r) = r else { continue };
        report.write_record([
            name.to_string(),
            r.model.clone(),
            r.predictors.join(";"),
            num(r.r_squared),
            num(r.mape),
            num(r.max_ape),
            num(r.direction),
            opt(r.ljung_box.map(|l| l.q)),
            r.ljung_box.map(|l| l.dof.to_string()).unwrap_or_default(),
            opt(r.ljung_box.map(|l| l.p_value)),
        ])?;
        for s in &r.steps {
            let date = frame.dates[start + s.index].to_string();
            steps.write_record([name.to_string(), date, num(s.observed), num(s.point), num(s.lcl), num(s.ucl)])?;
        }
        for (i, f) in r.fitted.iter().enumerate() {
            let t = r.fit_start + i;
            fitted.write_record([name.to_string(), frame.dates[start + t].to_string(), num(y[t]), num(*f)])?;
        }
    }
    report.flush()?;
    steps.flush()?;
    fitted.flush()?;
    let w = &ev.without_predictors;
    println!("without predictors: {} MAPE {:.4} direction {:.2}%", w.model, w.mape, w.direction);
    if let Some(r) = &ev.with_predictors {
        println!("with predictors: {} [{}] MAPE {:.4} direction {:.2}%", r.model, r.predictors.join(","), r.mape, r.direction);
    }
    Ok(())
}

fn classify_cmd(a: ClassifyArgs) -> anyhow::Result<()> {
    let window: WindowSpec = a.window.parse()?;
    let frame = dataset::feature_frame(&load_bundle(&a.bundle)?, window)?;
    let weeks = dataset::labeled_weeks(&frame)?;
    if weeks.len() < 2 {
        return Err(sentihedge::Error::InsufficientData {
            needed: 2,
            available: weeks.len(),
        }
        .into());
    }
    let through = a
        .train_through
        .unwrap_or_else(|| weeks[((weeks.len() as f64 * 0.76).round() as usize).clamp(1, weeks.len() - 1) - 1].date);
    let (train, test): (Vec<LabeledWeek>, Vec<LabeledWeek>) = weeks.into_iter().partition(|w| w.date <= through);
    let model = classify::train_svm(&train, a.c)?;
    let report = classify::confusion_and_roc(&model, &test)?;

    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let mut w = csv_writer(&a.out.join("confusion.csv"))?;
    w.write_record(["actual", "predicted_up", "predicted_down"])?;
    let cm = report.confusion;
    w.write_record(["up".to_string(), num(cm.up_as_up), num(cm.up_as_down)])?;
    w.write_record(["down".to_string(), num(cm.down_as_up), num(cm.down_as_down)])?;
    w.flush()?;

    let mut w = csv_writer(&a.out.join("roc.csv"))?;
    w.write_record(["fpr", "tpr"])?;
    for (x, y) in &report.roc.points {
        w.write_record([num(*x), num(*y)])?;
    }
    w.flush()?;

    let position = |d: NaiveDate| frame.dates.iter().position(|x| *x == d).expect("week date from frame");
    let mut w = csv_writer(&a.out.join("predictions.csv"))?;
    w.write_record(["decision_date", "target_date", "actual", "predicted", "margin"])?;
    for (row, (date, pred, margin)) in test.iter().zip(&report.predictions) {
        let decision = frame.dates[position(*date) - 1];
        w.write_record([decision.to_string(), date.to_string(), row.label.to_string(), pred.to_string(), num(*margin)])?;
    }
    w.flush()?;

    let mut w = csv_writer(&a.out.join("summary.csv"))?;
    w.write_record(["metric", "value"])?;
    let rows: [(&str, String); 8] = [
        ("train_through", through.to_string()),
        ("train_weeks", train.len().to_string()),
        ("test_weeks", test.len().to_string()),
        ("C", num(model.c)),
        ("support_vectors", model.support_vectors.to_string()),
        ("objective", num(model.objective)),
        ("accuracy", num(report.accuracy)),
        ("auc", num(report.roc.auc)),
    ];
    for (k, v) in rows {
        w.write_record([k.to_string(), v])?;
    }
    w.flush()?;
    println!(
        "trained on {} weeks, tested on {}: accuracy {:.2}%, AUC {:.4}",
        train.len(),
        test.len(),
        report.accuracy,
        report.roc.auc
    );
    Ok(())
}

fn read_predictions(path: &Path) -> anyhow::Result<BTreeMap<NaiveDate, Direction>> {
    let mut rdr = csv::Reader::from_reader(dataset::open(path)?);
    let header = rdr.headers()?.clone();
    let find = |names: &[&str]| header.iter().position(|h| names.contains(&h));
    let (Some(di), Some(pi)) = (find(&["decision_date", "date"]), find(&["predicted", "prediction"])) else {
        bail!("{}: needs a decision_date (or date) column and a predicted (or prediction) column", path.display());
    };
    let mut out = BTreeMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let date: NaiveDate = rec[di]
            .trim()
            .parse()
            .with_context(|| format!("{} line {line}: bad date", path.display()))?;
        let dir: Direction = rec[pi].parse().with_context(|| format!("{} line {line}", path.display()))?;
        if out.insert(date, dir).is_some() {
            bail!("{} line {line}: duplicate prediction for {date}", path.display());
        }
    }
    Ok(out)
}

fn backtest(a: BacktestArgs) -> anyhow::Result<()> {
    let pred_path = match (&a.predictions_csv, &a.from_classifier) {
        (Some(p), _) => p.clone(),
        (None, Some(dir)) => dir.join("predictions.csv"),
        (None, None) => bail!("one of --predictions-csv or --from-classifier is required"),
    };
    let initial_mode: HedgeMode = a.initial_mode.parse()?;
    let bars = market::read_bars(dataset::open(&a.index_csv)?)?;
    let predictions = read_predictions(&pred_path)?;

    // weekly closes and volatility of the index; sentiment counts are unused
    let daily = bars
        .iter()
        .map(|b| sentiment::DailySentiment {
            date: b.date,
            m_pos: 0,
            m_neg: 0,
        })
        .collect();
    let frame = dataset::feature_frame(&Bundle { bars, daily }, WindowSpec::Weekly)?;
    let (Some(first), Some(last)) = (predictions.keys().next(), predictions.keys().last()) else {
        bail!("{}: no predictions", pred_path.display());
    };
    let lo = frame.dates.iter().position(|d| d == first);
    let hi = frame.dates.iter().position(|d| d == last);
    let (Some(lo), Some(hi)) = (lo, hi) else {
        return Err(sentihedge::Error::InvalidInput(format!(
            "prediction dates {first}..{last} are not weekly window ends of the index"
        ))
        .into());
    };
    let dates = frame.dates[lo..=hi].to_vec();
    if dates.len() != predictions.len() || dates.iter().any(|d| !predictions.contains_key(d)) {
        return Err(sentihedge::Error::LengthMismatch {
            expected: dates.len(),
            actual: predictions.len(),
        }
        .into());
    }
    let preds: Vec<Direction> = dates.iter().map(|d| predictions[d]).collect();
    let closes = frame.column("close")?;
    let levels: Vec<f64> = closes[lo..=hi].iter().map(|v| v.expect("window close")).collect();
    let vol = match a.vol {
        Some(v) => VolSource::Constant(v),
        None => VolSource::Series(
            frame.column("volatility")?[lo..=hi]
                .iter()
                .map(|v| v.unwrap_or(0.0) * 252f64.sqrt())
                .collect(),
        ),
    };
    let cfg = BacktestConfig {
        shares: a.shares,
        block: a.block,
        vol,
        rate: a.rate,
        expiry_weeks: a.expiry_weeks,
        initial_mode,
        haircut: a.haircut,
    };
    let ledger = hedge::run_backtest(&dates, &levels, &preds, &cfg)?;

    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let mut w = csv_writer(&a.out.join("ledger.csv"))?;
    w.write_record([
        "date",
        "prediction",
        "hedge_mode",
        "index_level",
        "equity",
        "share_pnl",
        "option_change",
        "cash_flow",
        "premiums_paid",
        "cumulative_pnl",
        "transition",
        "rolled",
    ])?;
    for r in &ledger.rows {
        w.write_record([
            r.date.to_string(),
            r.prediction.map(|p| p.to_string()).unwrap_or_default(),
            r.mode.to_string(),
            num(r.spot),
            num(r.equity),
            num(r.share_pnl),
            num(r.option_change),
            num(r.cash_flow),
            num(r.premiums_paid),
            num(r.cumulative_pnl),
            r.transition.map(|t| t.to_string()).unwrap_or_default(),
            r.rolled.to_string(),
        ])?;
    }
    w.flush()?;

    // expiry payoff per share for the opening position
    let s0 = levels[0];
    let t = 7.0 * a.expiry_weeks as f64 / hedge::YEAR_DAYS;
    let sigma0 = match &cfg.vol {
        VolSource::Constant(v) => *v,
        VolSource::Series(v) => v[0],
    };
    let premium = hedge::put_value(s0, s0, t, sigma0, a.rate)?;
    let mut w = csv_writer(&a.out.join("pnl.csv"))?;
    w.write_record(["spot", "shares_only", "partial_hedge", "full_hedge"])?;
    for i in 0..=40 {
        let s = s0 * (0.5 + i as f64 / 40.0);
        let shares = s - s0;
        let put = (s0 - s).max(0.0) - premium;
        w.write_record([num(s), num(shares), num(shares + 0.5 * put), num(shares + put)])?;
    }
    w.flush()?;

    let mut out = std::io::stdout().lock();
    writeln!(
        out,
        "{} weeks: equity {:.2} -> {:.2}, premiums paid {:.2}",
        ledger.rows.len(),
        ledger.initial_equity,
        ledger.final_equity,
        ledger.total_premiums
    )?;
    Ok(())
}

fn sweep_cmd(a: SweepArgs) -> anyhow::Result<()> {
    let windows: Vec<WindowSpec> = a.windows.iter().map(|w| w.parse()).collect::<Result<_, _>>()?;
    let bundle = load_bundle(&a.bundle)?;
    let rows = sweep::sweep_windows(&bundle, &windows)?;
    let mut w = csv_writer(&a.out)?;
    w.write_record(["window", "width", "r_squared", "n", "dropped", "note"])?;
    for r in &rows {
        w.write_record([
            r.window.to_string(),
            r.window.width().to_string(),
            opt(r.r_squared),
            r.n.to_string(),
            r.dropped.join(";"),
            r.note.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    match sweep::best_window(&rows) {
        Some(best) => println!("best window: {best}"),
        None => println!("no window could be fitted"),
    }
    Ok(())
}
