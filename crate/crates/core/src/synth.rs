//! Seeded synthetic corpora: a business-day OHLCV path plus a tweet stream
//! (weekends included, ~10% unlabeled) with a designed relation between the two.

use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, Days, NaiveDate, Weekday};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson, StandardNormal};

use crate::error::{Error, Result};
use crate::market::OhlcvBar;
use crate::sentiment::{self, Polarity, TweetRecord};

pub const MIN_SIZE: usize = 30;
pub const START: (i32, u32, u32) = (2010, 11, 15);
pub const START_LEVEL: f64 = 11_000.0;
/// Trading days per month block of the monthly-signal generator.
pub const MONTH: usize = 21;
pub const WEEK: usize = 5;

const POSITIVE_WORDS: &[&str] = &[
    "bullish", "rally", "gains", "surge", "strong", "beat", "buying", "soaring", "upbeat", "record", "optimistic", "breakout",
];
const NEGATIVE_WORDS: &[&str] = &[
    "bearish", "selloff", "losses", "plunge", "weak", "miss", "selling", "sinking", "gloomy", "fear", "pessimistic", "slump",
];
const NEUTRAL_WORDS: &[&str] = &[
    "dow", "market", "stocks", "index", "traders", "today", "session", "shares", "wall", "street", "futures", "earnings",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Generator {
    /// AR(1) returns; tweets unrelated to the market.
    Ar1,
    /// Returns driven by the previous trading day's bullishness.
    LaggedCause,
    /// Weekly up/down regimes announced by the previous week's tweets.
    SeparableWeeks,
    /// Steady market, a 30% crash preceded by bearish tweets, then a flat tail.
    CrashPath,
    /// Returns in each 21-day block driven by the previous block's sentiment.
    MonthlySignal,
}

impl Generator {
    pub const ALL: [Generator; 5] = [
        Generator::Ar1,
        Generator::LaggedCause,
        Generator::SeparableWeeks,
        Generator::CrashPath,
        Generator::MonthlySignal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Generator::Ar1 => "ar1",
            Generator::LaggedCause => "lagged-cause",
            Generator::SeparableWeeks => "separable-weeks",
            Generator::CrashPath => "crash-path",
            Generator::MonthlySignal => "monthly-signal",
        }
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Generator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Generator::ALL.into_iter().find(|g| g.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Generator::ALL.iter().map(|g| g.name()).collect();
            Error::InvalidInput(format!("unknown generator '{s}' (choices: {})", names.join(", ")))
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthData {
    pub tweets: Vec<TweetRecord>,
    pub bars: Vec<OhlcvBar>,
}

/// `n` consecutive Monday-to-Friday dates from the fixed start.
pub fn business_days(n: usize) -> Vec<NaiveDate> {
    let (y, m, d) = START;
    let mut day = NaiveDate::from_ymd_opt(y, m, d).expect("valid start");
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        if !matches!(day.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(day);
        }
        day = day + Days::new(1);
    }
    out
}

/// Tweet intensity per trading day: expected positive and negative counts.
struct Intensity {
    pos: Vec<f64>,
    neg: Vec<f64>,
}

impl Intensity {
    fn from_score(score: &[f64], base: f64, gain: f64) -> Self {
        Self {
            pos: score.iter().map(|s| base * (gain * s).exp()).collect(),
            neg: score.iter().map(|s| base * (-gain * s).exp()).collect(),
        }
    }
}

/// Weekend days tweet at a fraction of the weekday rate.
const WEEKEND_RATE: f64 = 0.3;

/// Emit tweets for every calendar day from the first to the last trading
/// day. Weekend tweets use the intensity of the trading day they roll onto.
/// Returns the tweets and the realised (pos, neg) counts per trading day.
fn tweet_stream(rng: &mut ChaCha8Rng, days: &[NaiveDate], rate: &Intensity) -> (Vec<TweetRecord>, Vec<(u64, u64)>) {
    let mut tweets = Vec::new();
    let mut counts = vec![(0u64, 0u64); days.len()];
    let mut day = days[0];
    let mut t = 0;
    while day <= days[days.len() - 1] {
        while days[t] < day {
            t += 1;
        }
        let scale = if days[t] == day { 1.0 } else { WEEKEND_RATE };
        for (polarity, lambda) in [(Polarity::Positive, rate.pos[t]), (Polarity::Negative, rate.neg[t])] {
            let k = poisson(rng, lambda * scale);
            for _ in 0..k {
                let text = tweet_text(rng, polarity);
                let label = (rng.random::<f64>() >= 0.1).then_some(polarity);
                tweets.push(TweetRecord {
                    id: format!("s{}", tweets.len() + 1),
                    date: day,
                    text,
                    label,
                });
            }
            match polarity {
                Polarity::Positive => counts[t].0 += k,
                Polarity::Negative => counts[t].1 += k,
            }
        }
        day = day + Days::new(1);
    }
    (tweets, counts)
}

fn poisson(rng: &mut ChaCha8Rng, lambda: f64) -> u64 {
    if lambda <= 0.0 {
        return 0;
    }
    Poisson::new(lambda).expect("positive rate").sample(rng) as u64
}

fn tweet_text(rng: &mut ChaCha8Rng, polarity: Polarity) -> String {
    let words = match polarity {
        Polarity::Positive => POSITIVE_WORDS,
        Polarity::Negative => NEGATIVE_WORDS,
    };
    let mut parts = vec!["$DJIA"];
    for i in 0..5 {
        let pool = if i % 2 == 0 { words } else { NEUTRAL_WORDS };
        parts.push(pool[rng.random_range(0..pool.len())]);
    }
    parts.join(" ")
}

/// Bars whose close-to-close percent log returns are exactly `returns[1..]`.
fn bars_from_returns(rng: &mut ChaCha8Rng, days: &[NaiveDate], returns: &[f64]) -> Vec<OhlcvBar> {
    let gap = Normal::<f64>::new(0.0, 0.002).expect("valid");
    let wick = Normal::<f64>::new(0.0, 0.004).expect("valid");
    let mut close = START_LEVEL;
    let mut out = Vec::with_capacity(days.len());
    for (i, &date) in days.iter().enumerate() {
        let prev = close;
        if i > 0 {
            close = prev * (returns[i] / 100.0).exp();
        }
        let open = prev * gap.sample(rng).exp();
        let high = open.max(close) * wick.sample(rng).abs().exp();
        let low = open.min(close) * (-wick.sample(rng).abs()).exp();
        let volume = (1.0e8 * (0.2 * rng.sample::<f64, _>(StandardNormal)).exp()).round() as u64;
        out.push(OhlcvBar {
            date,
            open,
            high,
            low,
            close,
            volume,
        });
    }
    out
}

fn normals(rng: &mut ChaCha8Rng, n: usize, sd: f64) -> Vec<f64> {
    (0..n).map(|_| sd * rng.sample::<f64, _>(StandardNormal)).collect()
}

pub fn generate(generator: Generator, seed: u64, size: usize) -> Result<SynthData> {
    if size < MIN_SIZE {
        return Err(Error::Precondition(format!("synthetic size must be >= {MIN_SIZE}, got {size}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let days = business_days(size);
    let (tweets, returns) = match generator {
        Generator::Ar1 => {
            let rate = Intensity::from_score(&normals(&mut rng, size, 0.5), 10.0, 0.5);
            let (tweets, _) = tweet_stream(&mut rng, &days, &rate);
            let eps = normals(&mut rng, size, 1.0);
            let mut r = vec![0.0; size];
            for t in 1..size {
                r[t] = 0.5 * r[t - 1] + eps[t];
            }
            (tweets, r)
        }
        Generator::LaggedCause => {
            let rate = Intensity::from_score(&normals(&mut rng, size, 1.0), 10.0, 0.7);
            let (tweets, counts) = tweet_stream(&mut rng, &days, &rate);
            let eps = normals(&mut rng, size, 0.5);
            let r = (0..size)
                .map(|t| match t {
                    0 => 0.0,
                    _ => 0.8 * sentiment::bullishness(counts[t - 1].0 as f64, counts[t - 1].1 as f64) + eps[t],
                })
                .collect();
            (tweets, r)
        }
        Generator::SeparableWeeks => {
            let weeks = size.div_ceil(WEEK) + 1;
            let regime: Vec<f64> = (0..weeks).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
            // tweets in week w announce the regime of week w + 1
            let score: Vec<f64> = (0..size).map(|t| regime[t / WEEK + 1]).collect();
            let rate = Intensity::from_score(&score, 7.0, 0.55);
            let (tweets, _) = tweet_stream(&mut rng, &days, &rate);
            let eps = normals(&mut rng, size, 0.2);
            let r = (0..size).map(|t| 0.6 * regime[t / WEEK] + eps[t]).collect();
            (tweets, r)
        }
        Generator::CrashPath => {
            let crash_start = size * 2 / 5;
            let crash_len = (size / 5).max(5);
            let crash_step = 100.0 * 0.7f64.ln() / crash_len as f64;
            let eps = normals(&mut rng, size, 0.3);
            let r: Vec<f64> = (0..size)
                .map(|t| match t {
                    0 => 0.0,
                    t if t >= crash_start && t < crash_start + crash_len => crash_step,
                    t if t < crash_start => 0.05 + eps[t],
                    _ => eps[t],
                })
                .collect();
            let score: Vec<f64> = (0..size)
                .map(|t| {
                    let ahead = (t + WEEK).min(size - 1);
                    if r[ahead] < -0.5 || (t + WEEK >= crash_start && t < crash_start + crash_len) {
                        -1.0
                    } else {
                        0.3
                    }
                })
                .collect();
            let rate = Intensity::from_score(&score, 8.0, 0.6);
            let (tweets, _) = tweet_stream(&mut rng, &days, &rate);
            (tweets, r)
        }
        Generator::MonthlySignal => {
            let months = size.div_ceil(MONTH) + 1;
            let s = normals(&mut rng, months, 1.0);
            // block k tweets reflect s[k + 1]; block k returns follow s[k]
            let score: Vec<f64> = (0..size).map(|t| s[t / MONTH + 1]).collect();
            let rate = Intensity::from_score(&score, 8.0, 0.6);
            let (tweets, _) = tweet_stream(&mut rng, &days, &rate);
            let eps = normals(&mut rng, size, 0.3);
            let r = (0..size).map(|t| 6.0 * s[t / MONTH] / MONTH as f64 + eps[t]).collect();
            (tweets, r)
        }
    };
    let bars = bars_from_returns(&mut rng, &days, &returns);
    Ok(SynthData { tweets, bars })
}
