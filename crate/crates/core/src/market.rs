//! Market features from daily OHLCV bars.

use std::io::{Read, Write};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OhlcvBar {
    pub date: NaiveDate,
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
    pub volume: u64,
}

impl OhlcvBar {
    pub fn validate(&self) -> Result<()> {
        let prices = [self.open, self.high, self.low, self.close];
        if prices.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(Error::OhlcViolation {
                date: self.date,
                reason: "prices must be finite and strictly positive".into(),
            });
        }
        if self.low > self.open.min(self.close) {
            return Err(Error::OhlcViolation {
                date: self.date,
                reason: format!("low {} above min(open, close)", self.low),
            });
        }
        if self.high < self.open.max(self.close) {
            return Err(Error::OhlcViolation {
                date: self.date,
                reason: format!("high {} below max(open, close)", self.high),
            });
        }
        Ok(())
    }

    /// Multiply every price by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            open: self.open * factor,
            high: self.high * factor,
            low: self.low * factor,
            close: self.close * factor,
            ..*self
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct BarRow {
    date: String,
    open: f64,
    high: f64,
    low: f64,
    close: f64,
    volume: u64,
}

/// Read a `date,open,high,low,close,volume` CSV and validate every bar.
pub fn read_bars<R: Read>(reader: R) -> Result<Vec<OhlcvBar>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let mut bars: Vec<OhlcvBar> = Vec::new();
    for (i, rec) in rdr.deserialize::<BarRow>().enumerate() {
        let line = i + 2;
        let row = rec.map_err(|e| Error::InvalidInput(format!("market CSV line {line}: {e}")))?;
        let date = NaiveDate::parse_from_str(&row.date, "%Y-%m-%d")
            .map_err(|e| Error::InvalidInput(format!("market CSV line {line}: bad date '{}': {e}", row.date)))?;
        let bar = OhlcvBar {
            date,
            open: row.open,
            high: row.high,
            low: row.low,
            close: row.close,
            volume: row.volume,
        };
        bar.validate()?;
        if let Some(prev) = bars.last() {
            if bar.date <= prev.date {
                return Err(Error::InvalidInput(format!(
                    "market CSV line {line}: date {} not after {}",
                    bar.date, prev.date
                )));
            }
        }
        bars.push(bar);
    }
    Ok(bars)
}

/// Write bars with shortest round-trip decimal formatting.
pub fn write_bars<W: Write>(writer: W, bars: &[OhlcvBar]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    for b in bars {
        wtr.serialize(BarRow {
            date: b.date.format("%Y-%m-%d").to_string(),
            open: b.open,
            high: b.high,
            low: b.low,
            close: b.close,
            volume: b.volume,
        })
        .map_err(|e| Error::InvalidInput(e.to_string()))?;
    }
    wtr.flush().map_err(|e| Error::InvalidInput(e.to_string()))?;
    Ok(())
}

/// Percent log returns, `None` on the first bar.
pub fn returns(bars: &[OhlcvBar]) -> Result<Vec<Option<f64>>> {
    if bars.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            available: bars.len(),
        });
    }
    if let Some(b) = bars.iter().find(|b| !(b.close > 0.0)) {
        return Err(Error::NonPositivePrice(b.date));
    }
    let mut out = Vec::with_capacity(bars.len());
    out.push(None);
    for w in bars.windows(2) {
        if w[1].date <= w[0].date {
            return Err(Error::UnorderedIndex(w[1].date));
        }
        out.push(Some((w[1].close.ln() - w[0].close.ln()) * 100.0));
    }
    Ok(out)
}

/// Garman-Klass per-bar variance term.
pub fn gk_term(bar: &OhlcvBar) -> f64 {
    let hl = (bar.high / bar.low).ln();
    let co = (bar.close / bar.open).ln();
    0.5 * hl * hl - (2.0 * std::f64::consts::LN_2 - 1.0) * co * co
}

/// Garman-Klass volatility over trailing windows of `n` bars.
///
/// With `floor_terms` each per-bar term is clamped at 0 before averaging;
/// without it a negative window average yields `None`.
pub fn gk_volatility(bars: &[OhlcvBar], n: usize, floor_terms: bool) -> Result<Vec<Option<f64>>> {
    if n == 0 {
        return Err(Error::Precondition("volatility window must be >= 1".into()));
    }
    for b in bars {
        b.validate()?;
    }
    let terms: Vec<f64> = bars
        .iter()
        .map(|b| {
            let t = gk_term(b);
            if floor_terms {
                t.max(0.0)
            } else {
                t
            }
        })
        .collect();
    Ok((0..bars.len())
        .map(|t| {
            if t + 1 < n {
                return None;
            }
            let mean = terms[t + 1 - n..=t].iter().sum::<f64>() / n as f64;
            (mean >= 0.0).then(|| mean.sqrt())
        })
        .collect())
}

pub fn log_volume(bars: &[OhlcvBar]) -> Vec<f64> {
    bars.iter().map(|b| (1.0 + b.volume as f64).ln()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketFeatures {
    pub date: NaiveDate,
    pub ret: Option<f64>,
    pub log_volume: f64,
    pub volatility: Option<f64>,
}

/// Daily market features with floored GK volatility over `vol_window` bars.
pub fn market_features(bars: &[OhlcvBar], vol_window: usize) -> Result<Vec<MarketFeatures>> {
    let r = returns(bars)?;
    let v = gk_volatility(bars, vol_window, true)?;
    let lv = log_volume(bars);
    Ok(bars
        .iter()
        .enumerate()
        .map(|(i, b)| MarketFeatures {
            date: b.date,
            ret: r[i],
            log_volume: lv[i],
            volatility: v[i],
        })
        .collect())
}
