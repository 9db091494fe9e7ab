//! Validated dataset bundles and per-window feature frames.
//!
//! A bundle is the market bars plus per-trading-day tweet counts, stored as
//! `market.csv` and `daily_counts.csv`. Feature frames are derived from a
//! bundle at a chosen window and written with 6 significant digits.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use chrono::NaiveDate;

use crate::classify::{Direction, LabeledWeek};
use crate::error::{Error, Result};
use crate::market::{self, OhlcvBar};
use crate::sentiment::{self, DailySentiment, TweetRecord};
use crate::timeseries::{aggregate, align, AlignPolicy, DateIndex, Reducer, Series, WindowSpec};

pub const MARKET_FILE: &str = "market.csv";
pub const COUNTS_FILE: &str = "daily_counts.csv";

/// Laplace smoothing used when unlabeled tweets must be classified.
pub const NB_ALPHA: f64 = 1.0;

pub const MARKET_COLUMNS: [&str; 3] = ["return", "log_volume", "volatility"];
pub const SENTIMENT_COLUMNS: [&str; 5] = ["positive", "negative", "bullishness", "agreement", "message_volume"];
pub const CARRIED_COLUMNS: [&str; 5] = [
    "carried_positive",
    "carried_negative",
    "carried_bullishness",
    "carried_agreement",
    "carried_message_volume",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Bundle {
    pub bars: Vec<OhlcvBar>,
    /// One entry per bar, same dates.
    pub daily: Vec<DailySentiment>,
}

impl Bundle {
    pub fn dates(&self) -> Vec<NaiveDate> {
        self.bars.iter().map(|b| b.date).collect()
    }

    fn validate(&self) -> Result<()> {
        if self.bars.is_empty() {
            return Err(Error::InsufficientData { needed: 1, available: 0 });
        }
        for b in &self.bars {
            b.validate()?;
        }
        if let Some(w) = self.bars.windows(2).find(|w| w[1].date <= w[0].date) {
            return Err(Error::UnorderedIndex(w[1].date));
        }
        if self.daily.len() != self.bars.len() {
            return Err(Error::LengthMismatch {
                expected: self.bars.len(),
                actual: self.daily.len(),
            });
        }
        if let Some((d, _)) = self.daily.iter().zip(&self.bars).find(|(d, b)| d.date != b.date) {
            return Err(Error::InvalidInput(format!("daily counts date {} is not a market date", d.date)));
        }
        Ok(())
    }
}

/// Align tweets onto the market calendar and count polarities per trading day.
///
/// Unlabeled tweets are classified by Naive Bayes trained on the labeled ones.
pub fn ingest(tweets: &[TweetRecord], bars: Vec<OhlcvBar>, policy: AlignPolicy) -> Result<Bundle> {
    if bars.is_empty() {
        return Err(Error::InsufficientData { needed: 1, available: 0 });
    }
    for b in &bars {
        b.validate()?;
    }
    let trading = DateIndex::trading_days(bars.iter().map(|b| b.date).collect())?;
    let mut tweet_dates: Vec<NaiveDate> = tweets.iter().map(|t| t.date).collect();
    tweet_dates.sort();
    tweet_dates.dedup();
    let alignment = align(&DateIndex::calendar_days(tweet_dates)?, &trading, policy);

    let model = if tweets.iter().any(|t| t.label.is_none()) {
        let labeled: Vec<TweetRecord> = tweets.iter().filter(|t| t.label.is_some()).cloned().collect();
        if labeled.is_empty() {
            let id = tweets.iter().find(|t| t.label.is_none()).map(|t| t.id.clone()).unwrap_or_default();
            return Err(Error::UnlabeledTweet { id });
        }
        Some(sentiment::train_nb(&labeled, NB_ALPHA)?)
    } else {
        None
    };
    let counts = sentiment::daily_counts(tweets, model.as_ref(), &alignment)?;
    let daily = sentiment::fill_silent_days(&counts, &trading.trading_dates());
    let bundle = Bundle { bars, daily };
    bundle.validate()?;
    Ok(bundle)
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::InvalidInput(format!("{}: {e}", path.display()))
}

pub fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| io_err(path, e))
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| io_err(path, e))
}

pub fn write_counts<W: Write>(writer: W, daily: &[DailySentiment]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let err = |e: csv::Error| Error::InvalidInput(e.to_string());
    wtr.write_record(["date", "positive", "negative"]).map_err(err)?;
    for d in daily {
        wtr.write_record([d.date.to_string(), d.m_pos.to_string(), d.m_neg.to_string()])
            .map_err(err)?;
    }
    wtr.flush().map_err(|e| Error::InvalidInput(e.to_string()))
}

pub fn read_counts<R: Read>(reader: R) -> Result<Vec<DailySentiment>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::InvalidInput(format!("counts CSV line {line}: {e}")))?;
        let field = |j: usize| rec.get(j).map(str::trim).unwrap_or("");
        let bad = |what: &str| Error::InvalidInput(format!("counts CSV line {line}: bad {what}"));
        out.push(DailySentiment {
            date: field(0).parse().map_err(|_| bad("date"))?,
            m_pos: field(1).parse().map_err(|_| bad("positive count"))?,
            m_neg: field(2).parse().map_err(|_| bad("negative count"))?,
        });
    }
    Ok(out)
}

pub fn write_bundle(dir: &Path, bundle: &Bundle) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let p = dir.join(MARKET_FILE);
    market::write_bars(create(&p)?, &bundle.bars)?;
    let p = dir.join(COUNTS_FILE);
    write_counts(create(&p)?, &bundle.daily)
}

pub fn read_bundle(dir: &Path) -> Result<Bundle> {
    let bars = market::read_bars(open(&dir.join(MARKET_FILE))?)?;
    let daily = read_counts(open(&dir.join(COUNTS_FILE))?)?;
    let bundle = Bundle { bars, daily };
    bundle.validate()?;
    Ok(bundle)
}

/// Six significant digits; fixed notation for moderate exponents, otherwise
/// scientific. Trailing zeros are trimmed.
pub fn format_sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.5e}");
    let (mant, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..15).contains(&exp) {
        let rounded: f64 = sci.parse().expect("round-trips");
        let decimals = (5 - exp).max(0) as usize;
        let s = format!("{rounded:.decimals$}");
        trim_zeros(&s).to_string()
    } else {
        format!("{}e{exp}", trim_zeros(mant))
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Per-window market and sentiment features, one row per complete window.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureFrame {
    pub window: WindowSpec,
    /// Last trading date of each window.
    pub dates: Vec<NaiveDate>,
    pub names: Vec<String>,
    pub columns: Vec<Vec<Option<f64>>>,
}

impl FeatureFrame {
    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn column(&self, name: &str) -> Result<&[Option<f64>]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.columns[i].as_slice())
            .ok_or_else(|| Error::InvalidInput(format!("unknown feature column '{name}' (have {})", self.names.join(", "))))
    }

    pub fn series(&self, name: &str) -> Result<Series> {
        let index = Arc::new(DateIndex::trading_days(self.dates.clone())?);
        Series::new(name, index, self.column(name)?.to_vec())
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let err = |e: csv::Error| Error::InvalidInput(e.to_string());
        let mut header = vec!["date".to_string()];
        header.extend(self.names.iter().cloned());
        wtr.write_record(&header).map_err(err)?;
        for (i, d) in self.dates.iter().enumerate() {
            let mut row = vec![d.to_string()];
            row.extend(self.columns.iter().map(|c| c[i].map(format_sig6).unwrap_or_default()));
            wtr.write_record(&row).map_err(err)?;
        }
        wtr.flush().map_err(|e| Error::InvalidInput(e.to_string()))
    }

    pub fn read_csv<R: Read>(reader: R, window: WindowSpec) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let header = rdr.headers().map_err(|e| Error::InvalidInput(e.to_string()))?.clone();
        if header.get(0) != Some("date") {
            return Err(Error::InvalidInput("feature CSV must start with a 'date' column".into()));
        }
        let names: Vec<String> = header.iter().skip(1).map(String::from).collect();
        let mut dates = Vec::new();
        let mut columns = vec![Vec::new(); names.len()];
        for (i, rec) in rdr.records().enumerate() {
            let line = i + 2;
            let rec = rec.map_err(|e| Error::InvalidInput(format!("feature CSV line {line}: {e}")))?;
            dates.push(
                rec[0]
                    .parse()
                    .map_err(|_| Error::InvalidInput(format!("feature CSV line {line}: bad date")))?,
            );
            for (j, col) in columns.iter_mut().enumerate() {
                let cell = rec.get(j + 1).unwrap_or("");
                col.push(if cell.is_empty() {
                    None
                } else {
                    Some(cell.parse().map_err(|_| {
                        Error::InvalidInput(format!("feature CSV line {line}: bad number '{cell}'"))
                    })?)
                });
            }
        }
        Ok(Self {
            window,
            dates,
            names,
            columns,
        })
    }
}

/// Build the feature frame at `window` from complete, start-anchored windows.
///
/// Columns: close, return (percent log, window end over previous window
/// end), mean log volume, GK volatility over the window's bars, the five
/// sentiment features of the summed counts, and their carried copies.
pub fn feature_frame(bundle: &Bundle, window: WindowSpec) -> Result<FeatureFrame> {
    bundle.validate()?;
    let width = window.width();
    if bundle.bars.len() < width {
        return Err(Error::InsufficientData {
            needed: width,
            available: bundle.bars.len(),
        });
    }
    let index = Arc::new(DateIndex::trading_days(bundle.dates())?);
    let daily = |name: &str, v: Vec<f64>| Series::from_values(name, Arc::clone(&index), &v);
    let closes = aggregate(&daily("close", bundle.bars.iter().map(|b| b.close).collect())?, window, Reducer::Last)?;
    let lv = aggregate(&daily("log_volume", market::log_volume(&bundle.bars))?, window, Reducer::Mean)?;
    let gk = aggregate(&daily("gk", bundle.bars.iter().map(market::gk_term).collect())?, window, Reducer::Mean)?;
    let pos = aggregate(&daily("pos", bundle.daily.iter().map(|d| d.m_pos as f64).collect())?, window, Reducer::Sum)?;
    let neg = aggregate(&daily("neg", bundle.daily.iter().map(|d| d.m_neg as f64).collect())?, window, Reducer::Sum)?;

    let dates = closes.index().dates().to_vec();
    let n = dates.len();
    let close: Vec<Option<f64>> = closes.values().to_vec();
    let ret: Vec<Option<f64>> = (0..n)
        .map(|i| match (i.checked_sub(1).and_then(|j| close[j]), close[i]) {
            (Some(a), Some(b)) => Some(100.0 * (b.ln() - a.ln())),
            _ => None,
        })
        .collect();
    let vol: Vec<Option<f64>> = gk.values().iter().map(|v| v.map(|v| v.max(0.0).sqrt())).collect();
    let sums: Vec<DailySentiment> = (0..n)
        .map(|i| DailySentiment {
            date: dates[i],
            m_pos: pos.values()[i].unwrap_or(0.0).round() as u64,
            m_neg: neg.values()[i].unwrap_or(0.0).round() as u64,
        })
        .collect();
    let feats = sentiment::features(&sums)?;

    let mut names = vec!["close".to_string()];
    names.extend(MARKET_COLUMNS.iter().map(|s| s.to_string()));
    names.extend(SENTIMENT_COLUMNS.iter().map(|s| s.to_string()));
    names.extend(CARRIED_COLUMNS.iter().map(|s| s.to_string()));
    let columns = vec![
        close,
        ret,
        lv.values().to_vec(),
        vol,
        feats.iter().map(|f| Some(f.positive)).collect(),
        feats.iter().map(|f| Some(f.negative)).collect(),
        feats.iter().map(|f| Some(f.bullishness)).collect(),
        feats.iter().map(|f| f.agreement).collect(),
        feats.iter().map(|f| Some(f.message_volume)).collect(),
        feats.iter().map(|f| f.carried_positive).collect(),
        feats.iter().map(|f| f.carried_negative).collect(),
        feats.iter().map(|f| f.carried_bullishness).collect(),
        feats.iter().map(|f| f.carried_agreement).collect(),
        feats.iter().map(|f| f.carried_message_volume).collect(),
    ];
    Ok(FeatureFrame {
        window,
        dates,
        names,
        columns,
    })
}

/// One classifier row per window whose return and carried features are all
/// present: the previous window's sentiment predicts this window's direction.
pub fn labeled_weeks(frame: &FeatureFrame) -> Result<Vec<LabeledWeek>> {
    let ret = frame.column("return")?;
    let carried: Vec<&[Option<f64>]> = CARRIED_COLUMNS.iter().map(|c| frame.column(c)).collect::<Result<_>>()?;
    let mut out = Vec::new();
    let mut skipped = 0;
    for t in 0..frame.len() {
        let Some(r) = ret[t] else { continue };
        let features: Option<Vec<f64>> = carried.iter().map(|c| c[t]).collect();
        match features {
            Some(features) => out.push(LabeledWeek {
                date: frame.dates[t],
                features,
                label: Direction::from_return(r),
            }),
            None => skipped += 1,
        }
    }
    if skipped > 0 {
        log::warn!("{skipped} window(s) skipped: previous window had no tweets");
    }
    Ok(out)
}
