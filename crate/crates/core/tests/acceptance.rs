//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fail.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use chrono::{Days, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use sentihedge::classify::{self, Direction, LabeledWeek};
use sentihedge::dataset;
use sentihedge::forecast::{self, ArimaOrder, ModelKind, ModelSpec, Predictors};
use sentihedge::hedge::{self, BacktestConfig, HedgeMode, VolSource};
use sentihedge::market::{self, OhlcvBar};
use sentihedge::sentiment;
use sentihedge::stats::{self, chi2_cdf, f_cdf};
use sentihedge::sweep;
use sentihedge::synth::{self, Generator};
use sentihedge::timeseries::{AlignPolicy, DateIndex, Series, WindowSpec};

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn normals(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

fn series(name: &str, v: &[f64]) -> Series {
    let start = NaiveDate::from_ymd_opt(2011, 1, 3).unwrap();
    let idx = DateIndex::trading_days((0..v.len()).map(|i| start + Days::new(i as u64)).collect()).unwrap();
    Series::from_values(name, std::sync::Arc::new(idx), v).unwrap()
}

fn bundle_for(generator: Generator, seed: u64, size: usize) -> dataset::Bundle {
    let data = synth::generate(generator, seed, size).unwrap();
    dataset::ingest(&data.tweets, data.bars, AlignPolicy::NextTradingDay).unwrap()
}

fn c1_feature_formulas() -> Outcome {
    let t0 = Instant::now();
    let mut failures = Vec::new();
    let b = sentiment::bullishness(9.0, 4.0);
    if (b - std::f64::consts::LN_2).abs() > 1e-12 {
        failures.push(format!("B(9,4)={b}"));
    }
    for (p, n) in [(5.0, 0.0), (0.0, 7.0), (1.0, 0.0)] {
        if sentiment::agreement(p, n) != Some(1.0) {
            failures.push(format!("A({p},{n})={:?}", sentiment::agreement(p, n)));
        }
    }
    if sentiment::agreement(3.0, 3.0) != Some(0.0) || sentiment::agreement(0.0, 0.0).is_some() {
        failures.push("agreement on split/silent days".into());
    }

    let d0 = NaiveDate::from_ymd_opt(2011, 1, 3).unwrap();
    let flat = |i: u64, c: f64| OhlcvBar {
        date: d0 + Days::new(i),
        open: c,
        high: c,
        low: c,
        close: c,
        volume: 1,
    };
    let r = market::returns(&[flat(0, 100.0), flat(1, 105.0)]).unwrap()[1].unwrap();
    if (r - 100.0 * (1.05f64).ln()).abs() > 1e-12 {
        failures.push(format!("return 100->105 = {r}"));
    }
    if market::returns(&[flat(0, 100.0), flat(1, 100.0)]).unwrap()[1] != Some(0.0) {
        failures.push("flat return".into());
    }
    let e_bar = OhlcvBar {
        high: 10.0 * std::f64::consts::E,
        ..flat(0, 10.0)
    };
    let v = market::gk_volatility(&[e_bar], 1, true).unwrap()[0].unwrap();
    if (v - 0.5f64.sqrt()).abs() > 1e-12 || market::gk_volatility(&[flat(0, 50.0)], 1, true).unwrap()[0] != Some(0.0) {
        failures.push(format!("GK examples ({v})"));
    }

    // scale invariance over 1000 random bars
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let bars: Vec<OhlcvBar> = (0..1000)
        .map(|i| {
            let o = rng.random_range(10.0..1000.0);
            let high = o * (1.0 + rng.random_range(0.0..0.05));
            let low = o * (1.0 - rng.random_range(0.0..0.05));
            OhlcvBar {
                date: d0 + Days::new(i),
                open: o,
                high,
                low,
                close: rng.random_range(low..=high),
                volume: rng.random_range(0..1_000_000),
            }
        })
        .collect();
    let base = market::gk_volatility(&bars, 5, true).unwrap();
    let mut worst: f64 = 0.0;
    for k in [0.01, 3.7, 250.0, 1e4] {
        let scaled: Vec<OhlcvBar> = bars.iter().map(|b| b.scaled(k)).collect();
        for (a, b) in base.iter().zip(market::gk_volatility(&scaled, 5, true).unwrap()) {
            if let (Some(a), Some(b)) = (a, b) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    if worst > 1e-12 {
        failures.push(format!("GK scale drift {worst:e}"));
    }
    let elapsed = t0.elapsed();
    if elapsed >= Duration::from_secs(1) {
        failures.push(format!("runtime {elapsed:?}"));
    }
    check(
        failures.is_empty(),
        if failures.is_empty() {
            format!("B(9,4)=ln2, one-sided A=1, GK scale drift {worst:.1e} over 1000 bars, {elapsed:.2?}")
        } else {
            failures.join("; ")
        },
    )
}

fn c2_granger() -> Outcome {
    let t0 = Instant::now();
    let mut power = 0;
    for seed in 0..100 {
        let b = bundle_for(Generator::LaggedCause, seed, 200);
        let frame = dataset::feature_frame(&b, WindowSpec::Daily).unwrap();
        let res = stats::granger(&frame.series("return").unwrap(), &frame.series("bullishness").unwrap(), 1).unwrap();
        if res[0].result.as_ref().is_ok_and(|r| r.p_value < 0.01) {
            power += 1;
        }
    }
    let mut rejections = 0;
    for seed in 0..1000 {
        let mut rng = ChaCha8Rng::seed_from_u64(10_000 + seed);
        let y = series("y", &normals(&mut rng, 200));
        let x = series("x", &normals(&mut rng, 200));
        if stats::granger(&y, &x, 1).unwrap()[0].result.as_ref().unwrap().p_value < 0.05 {
            rejections += 1;
        }
    }
    let size = rejections as f64 / 1000.0;
    let elapsed = t0.elapsed();
    check(
        power >= 95 && (size - 0.05).abs() <= 0.02 && elapsed < Duration::from_secs(30),
        format!("power {power}/100 at p<0.01, size {:.1}% at 5%, {elapsed:.2?}", size * 100.0),
    )
}

/// Γ(k/2) for positive integer k by the half-integer recursion.
fn gamma_half(k: u32) -> f64 {
    let (mut g, mut z) = if k % 2 == 0 { (1.0, 1.0) } else { (std::f64::consts::PI.sqrt(), 0.5) };
    while z < k as f64 / 2.0 {
        g *= z;
        z += 1.0;
    }
    g
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        acc += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}

fn c3_distributions() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut points = 0;
    // t = u² removes the endpoint singularity
    for k in [1u32, 2, 3, 5, 10] {
        let norm = 2f64.powf(k as f64 / 2.0) * gamma_half(k);
        for x in [0.05f64, 0.7, 2.0, 6.5, 18.0] {
            let oracle = simpson(|u| 2.0 * u.powi(k as i32 - 1) * (-u * u / 2.0).exp() / norm, 0.0, x.sqrt(), 20_000);
            worst = worst.max((chi2_cdf(x, k as f64).unwrap() - oracle).abs());
            points += 1;
        }
    }
    for (d1, d2) in [(1u32, 1u32), (1, 10), (2, 7), (3, 30), (6, 4)] {
        let (a, b) = (d1 as f64, d2 as f64);
        let beta = gamma_half(d1) * gamma_half(d2) / gamma_half(d1 + d2);
        let c = (a / b).powf(a / 2.0) / beta;
        for x in [0.1f64, 0.5, 1.0, 2.5, 8.0] {
            let pdf = |u: f64| 2.0 * c * u.powi(d1 as i32 - 1) * (1.0 + a * u * u / b).powf(-(a + b) / 2.0);
            let oracle = simpson(pdf, 0.0, x.sqrt(), 20_000);
            worst = worst.max((f_cdf(x, a, b).unwrap() - oracle).abs());
            points += 1;
        }
    }
    check(worst <= 1e-8, format!("{points} grid points, max |cdf - integral| = {worst:.2e}"))
}

fn ar1_series(seed: u64, n: usize, phi: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u = 0.0;
    (0..n)
        .map(|_| {
            u = phi * u + rng.sample::<f64, _>(StandardNormal);
            u
        })
        .collect()
}

fn c4_arima() -> Outcome {
    let t0 = Instant::now();
    let (mut recovered, mut selected) = (0, 0);
    let orders = forecast::default_orders();
    for seed in 0..100 {
        let y = ar1_series(seed, 500, 0.7);
        let m = forecast::fit_arima(&y, ArimaOrder::new(1, 0, 0).unwrap(), None).unwrap();
        if let ModelKind::Arima(a) = &m.kind {
            if (a.ar[0] - 0.7).abs() <= 0.1 {
                recovered += 1;
            }
        }
        if let Some(o) = forecast::expert_select(&y, &orders, None).unwrap().order() {
            if o.p >= 1 && o.q == 0 {
                selected += 1;
            }
        }
    }
    let elapsed = t0.elapsed();
    check(
        recovered >= 90 && selected >= 80 && elapsed < Duration::from_secs(60),
        format!("phi within 0.1 in {recovered}/100, expert p>=1,q=0 in {selected}/100, {elapsed:.2?}"),
    )
}

fn c5_predictor_value() -> Outcome {
    let mut wins = 0;
    let spec = ModelSpec::Expert(forecast::default_orders());
    let names = vec!["carried_bullishness".to_string(), "carried_agreement".to_string()];
    for seed in 0..100 {
        let mut rng = ChaCha8Rng::seed_from_u64(500 + seed);
        let n = 200;
        let bull = normals(&mut rng, n + 1);
        let agree: Vec<f64> = (0..n + 1).map(|_| rng.random_range(0.0..1.0)).collect();
        // predictors are the previous period's features
        let carried_bull = bull[..n].to_vec();
        let carried_agree = agree[..n].to_vec();
        let mut u = 0.0;
        let y: Vec<f64> = (0..n)
            .map(|t| {
                u = 0.5 * u + 0.5 * rng.sample::<f64, _>(StandardNormal);
                100.0 + 2.0 * carried_bull[t] + u
            })
            .collect();
        let cols = vec![carried_bull, carried_agree];
        let ev = forecast::evaluate(&spec, &y, Some(Predictors { columns: &cols, names: &names }), 0.75).unwrap();
        let with = ev.with_predictors.unwrap();
        let without = ev.without_predictors;
        if with.mape < without.mape && with.direction > without.direction {
            wins += 1;
        }
    }
    check(wins >= 90, format!("lower MAPE and higher direction accuracy with predictors in {wins}/100"))
}

fn c6_ljung_box() -> Outcome {
    let mut rejections = 0;
    for seed in 0..1000 {
        let mut rng = ChaCha8Rng::seed_from_u64(20_000 + seed);
        if stats::ljung_box(&normals(&mut rng, 500), 18, 0).unwrap().p_value < 0.05 {
            rejections += 1;
        }
    }
    let mut power = 0;
    for seed in 0..100 {
        if stats::ljung_box(&ar1_series(30_000 + seed, 200, 0.8), 18, 0).unwrap().p_value < 0.01 {
            power += 1;
        }
    }
    let size = rejections as f64 / 1000.0;
    check(
        (size - 0.05).abs() <= 0.02 && power >= 95,
        format!("white-noise size {:.1}%, AR(0.8) rejected at p<0.01 in {power}/100", size * 100.0),
    )
}

fn mann_whitney(margins: &[f64], labels: &[Direction]) -> f64 {
    let pos: Vec<f64> = margins.iter().zip(labels).filter(|(_, l)| **l == Direction::Up).map(|(m, _)| *m).collect();
    let neg: Vec<f64> = margins.iter().zip(labels).filter(|(_, l)| **l == Direction::Down).map(|(m, _)| *m).collect();
    let mut u = 0.0;
    for p in &pos {
        for n in &neg {
            u += if p > n {
                1.0
            } else if p == n {
                0.5
            } else {
                0.0
            };
        }
    }
    u / (pos.len() * neg.len()) as f64
}

fn c7_svm() -> Outcome {
    let mut failures = Vec::new();
    let mut fixtures: Vec<(String, Vec<LabeledWeek>, f64)> = Vec::new();

    let d0 = NaiveDate::from_ymd_opt(2010, 11, 19).unwrap();
    let toy: Vec<LabeledWeek> = [
        ([1.0, 2.0], Direction::Up),
        ([2.0, 3.0], Direction::Up),
        ([2.5, 1.5], Direction::Up),
        ([-1.0, -2.0], Direction::Down),
        ([-2.0, -0.5], Direction::Down),
        ([-1.5, -3.0], Direction::Down),
    ]
    .iter()
    .enumerate()
    .map(|(i, (f, l))| LabeledWeek {
        date: d0 + Days::new(7 * i as u64),
        features: f.to_vec(),
        label: *l,
    })
    .collect();
    fixtures.push(("toy".into(), toy, 1.0));
    let b = bundle_for(Generator::SeparableWeeks, 7, 300);
    let weeks = dataset::labeled_weeks(&dataset::feature_frame(&b, WindowSpec::Weekly).unwrap()).unwrap();
    fixtures.push(("separable-weeks".into(), weeks, 1.0));

    for (name, data, c) in &fixtures {
        let m = classify::train_svm(data, *c).unwrap();
        let rep = classify::confusion_and_roc(&m, data).unwrap();
        if rep.accuracy != 100.0 || rep.roc.auc != 1.0 {
            failures.push(format!("{name}: accuracy {} AUC {}", rep.accuracy, rep.roc.auc));
        }
    }

    // noisy fixtures only for the solver monotonicity check
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for c in [0.01, 1.0, 100.0] {
        let data: Vec<LabeledWeek> = (0..60)
            .map(|i| {
                let f = normals(&mut rng, 5);
                let label = Direction::from_return(f[0] - f[2] + rng.sample::<f64, _>(StandardNormal));
                LabeledWeek {
                    date: d0 + Days::new(7 * i),
                    features: f,
                    label,
                }
            })
            .collect();
        fixtures.push((format!("noisy C={c}"), data, c));
    }
    let mut monotone = 0;
    for (name, data, c) in &fixtures {
        let m = classify::train_svm(data, *c).unwrap();
        if m.dual_trace.windows(2).all(|w| w[1] >= w[0]) {
            monotone += 1;
        } else {
            failures.push(format!("{name}: dual objective decreased"));
        }
    }

    let mut worst: f64 = 0.0;
    for case in 0..200 {
        let mut rng = ChaCha8Rng::seed_from_u64(40_000 + case);
        let n = rng.random_range(10..80);
        let mut labels: Vec<Direction> = (0..n).map(|_| if rng.random::<bool>() { Direction::Up } else { Direction::Down }).collect();
        labels[0] = Direction::Up;
        labels[1] = Direction::Down;
        let margins: Vec<f64> = if case % 2 == 0 {
            normals(&mut rng, n)
        } else {
            (0..n).map(|_| rng.random_range(-3i32..=3) as f64).collect()
        };
        let auc = classify::roc_curve(&margins, &labels).unwrap().auc;
        worst = worst.max((auc - mann_whitney(&margins, &labels)).abs());
    }
    if worst > 1e-9 {
        failures.push(format!("AUC vs Mann-Whitney {worst:e}"));
    }
    check(
        failures.is_empty(),
        if failures.is_empty() {
            format!(
                "separable sets 100%/AUC=1, AUC-MW max diff {worst:.1e} on 200 cases, dual monotone on {monotone}/{} fixtures",
                fixtures.len()
            )
        } else {
            failures.join("; ")
        },
    )
}

fn weekly_index(b: &dataset::Bundle) -> (Vec<NaiveDate>, Vec<f64>, Vec<f64>) {
    let f = dataset::feature_frame(b, WindowSpec::Weekly).unwrap();
    let closes = f.column("close").unwrap().iter().map(|v| v.unwrap()).collect();
    let vol = f.column("volatility").unwrap().iter().map(|v| v.unwrap() * 252f64.sqrt()).collect();
    (f.dates.clone(), closes, vol)
}

fn c8_hedging() -> Outcome {
    let mut failures = Vec::new();
    let b = bundle_for(Generator::CrashPath, 3, 200);
    let (dates, levels, vol) = weekly_index(&b);
    let peak = levels.iter().cloned().fold(0.0, f64::max);
    let trough = levels.iter().cloned().fold(f64::INFINITY, f64::min);
    let cfg = BacktestConfig {
        initial_mode: HedgeMode::Full,
        vol: VolSource::Series(vol),
        rate: 0.0,
        ..Default::default()
    };
    let preds = vec![Direction::Down; dates.len()];
    let ledger = hedge::run_backtest(&dates, &levels, &preds, &cfg).unwrap();
    let loss = ledger.initial_equity - ledger.final_equity;
    let crash_ok = loss <= ledger.total_premiums + 1e-6;
    if !crash_ok {
        failures.push(format!("crash loss {loss:.2} > premiums {:.2}", ledger.total_premiums));
    }

    let mut worst: f64 = 0.0;
    let mut rows = 0;
    for seed in 0..100 {
        let mut rng = ChaCha8Rng::seed_from_u64(50_000 + seed);
        let n = rng.random_range(10..60);
        let d0 = NaiveDate::from_ymd_opt(2011, 1, 7).unwrap();
        let dates: Vec<NaiveDate> = (0..n).map(|i| d0 + Days::new(7 * i as u64)).collect();
        let mut s = rng.random_range(50.0..15_000.0);
        let levels: Vec<f64> = (0..n)
            .map(|_| {
                s *= (0.04 * rng.sample::<f64, _>(StandardNormal)).exp();
                s
            })
            .collect();
        let preds: Vec<Direction> = (0..n).map(|_| if rng.random::<bool>() { Direction::Up } else { Direction::Down }).collect();
        let cfg = BacktestConfig {
            vol: VolSource::Series((0..n).map(|_| rng.random_range(0.05..0.6)).collect()),
            rate: rng.random_range(0.0..0.08),
            expiry_weeks: rng.random_range(1..12),
            haircut: if seed % 3 == 0 { 0.02 } else { 0.0 },
            initial_mode: if seed % 2 == 0 { HedgeMode::Partial } else { HedgeMode::Full },
            ..Default::default()
        };
        let l = hedge::run_backtest(&dates, &levels, &preds, &cfg).unwrap();
        for w in l.rows.windows(2) {
            let d = w[1].equity - w[0].equity;
            worst = worst.max((d - (w[1].share_pnl + w[1].option_change + w[1].cash_flow)).abs());
            rows += 1;
        }
    }
    if worst > 1e-9 {
        failures.push(format!("accounting identity off by {worst:e}"));
    }
    check(
        failures.is_empty(),
        format!(
            "crash {:.0}% -> loss {loss:.2} <= premiums {:.2}; identity max error {worst:.1e} over {rows} rows{}",
            100.0 * (1.0 - trough / peak),
            ledger.total_premiums,
            if failures.is_empty() { String::new() } else { format!(" [{}]", failures.join("; ")) }
        ),
    )
}

fn run_pipeline(bin: &str, root: &Path) -> Result<(), String> {
    let p = |s: &str| root.join(s).to_string_lossy().into_owned();
    let steps: Vec<Vec<String>> = vec![
        vec!["synth", "--generator", "separable-weeks", "--seed", "11", "--size", "300", "--out", &p("raw")],
        vec!["ingest", "--tweets", &p("raw/tweets.csv"), "--market", &p("raw/market.csv"), "--out", &p("bundle")],
        vec!["features", "--bundle", &p("bundle"), "--window", "weekly", "--out", &p("features.csv")],
        vec!["granger", "--bundle", &p("bundle"), "--window", "weekly", "--out", &p("granger.csv")],
        vec!["forecast", "--bundle", &p("bundle"), "--window", "weekly", "--out", &p("forecast")],
        vec!["classify", "--bundle", &p("bundle"), "--out", &p("classify")],
        vec!["backtest", "--index-csv", &p("bundle/market.csv"), "--from-classifier", &p("classify"), "--out", &p("backtest")],
    ]
    .into_iter()
    .map(|v| v.into_iter().map(String::from).collect())
    .collect();
    for args in steps {
        let out = Command::new(bin).args(&args).output().map_err(|e| e.to_string())?;
        if !out.status.success() {
            return Err(format!("{} failed: {}", args[0], String::from_utf8_lossy(&out.stderr)));
        }
    }
    Ok(())
}

fn files(root: &Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in std::fs::read_dir(&dir).unwrap() {
            let path = e.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.push(path.strip_prefix(root).unwrap().to_path_buf());
            }
        }
    }
    out.sort();
    out
}

fn c9_determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_sentihedge");
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [&a, &b] {
        if let Err(e) = run_pipeline(bin, dir.path()) {
            return check(false, e);
        }
    }
    let (fa, fb) = (files(a.path()), files(b.path()));
    if fa != fb {
        return check(false, format!("file sets differ: {fa:?} vs {fb:?}"));
    }
    let differing: Vec<String> = fa
        .iter()
        .filter(|f| std::fs::read(a.path().join(f)).unwrap() != std::fs::read(b.path().join(f)).unwrap())
        .map(|f| f.display().to_string())
        .collect();
    check(
        differing.is_empty() && fa.len() >= 15,
        if differing.is_empty() {
            format!("{} output files byte-identical across two runs", fa.len())
        } else {
            format!("differing files: {}", differing.join(", "))
        },
    )
}

fn c10_window_sweep() -> Outcome {
    let mut hits = 0;
    for seed in 0..100 {
        let b = bundle_for(Generator::MonthlySignal, seed, 2100);
        let rows = sweep::sweep_windows(&b, &WindowSpec::NAMED).unwrap();
        if sweep::best_window(&rows) == Some(WindowSpec::Monthly) {
            hits += 1;
        }
    }
    check(hits >= 80, format!("argmax R² at the monthly window in {hits}/100 seeds"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("feature formulas", c1_feature_formulas),
        ("Granger power and size", c2_granger),
        ("F / chi-square CDFs vs integration", c3_distributions),
        ("ARIMA recovery and selection", c4_arima),
        ("predictor value in forecasts", c5_predictor_value),
        ("Ljung-Box size and power", c6_ljung_box),
        ("SVM accuracy, AUC, solver", c7_svm),
        ("hedging floor and accounting", c8_hedging),
        ("end-to-end determinism", c9_determinism),
        ("window sweep shape", c10_window_sweep),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let outcome = run();
        let tag = if outcome.pass { "PASS" } else { "FAIL" };
        if !outcome.pass {
            failed += 1;
        }
        println!("[{tag}] {:>2}. {name}: {} ({:.1?})", i + 1, outcome.detail, t0.elapsed());
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
