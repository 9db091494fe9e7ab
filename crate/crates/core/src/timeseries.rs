//! Date-indexed series, calendar alignment and window aggregation.
//!
//! Everything downstream works on trading days at daily precision. Tweet
//! calendar days are folded onto trading days with [`align`]; coarser views
//! are produced by [`aggregate`] over fixed, non-overlapping windows anchored
//! at the first observation.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use chrono::NaiveDate;

use crate::error::{Error, Result};

/// Ordered calendar dates with a trading-day flag per date.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DateIndex {
    dates: Vec<NaiveDate>,
    trading: Vec<bool>,
}

impl DateIndex {
    pub fn new(dates: Vec<NaiveDate>, trading: Vec<bool>) -> Result<Self> {
        if dates.len() != trading.len() {
            return Err(Error::LengthMismatch {
                expected: dates.len(),
                actual: trading.len(),
            });
        }
        if let Some(w) = dates.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::UnorderedIndex(w[1]));
        }
        Ok(Self { dates, trading })
    }

    /// An index where every date is a trading day.
    pub fn trading_days(dates: Vec<NaiveDate>) -> Result<Self> {
        let n = dates.len();
        Self::new(dates, vec![true; n])
    }

    /// Calendar days, none flagged as trading.
    pub fn calendar_days(dates: Vec<NaiveDate>) -> Result<Self> {
        let n = dates.len();
        Self::new(dates, vec![false; n])
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn is_trading(&self, i: usize) -> bool {
        self.trading[i]
    }

    pub fn position(&self, date: NaiveDate) -> Option<usize> {
        self.dates.binary_search(&date).ok()
    }

    /// Dates flagged as trading days, in order.
    pub fn trading_dates(&self) -> Vec<NaiveDate> {
        self.dates
            .iter()
            .zip(&self.trading)
            .filter(|(_, &t)| t)
            .map(|(d, _)| *d)
            .collect()
    }
}

/// A named series of optional values over a shared [`DateIndex`].
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    name: String,
    index: Arc<DateIndex>,
    values: Vec<Option<f64>>,
}

impl Series {
    pub fn new(name: impl Into<String>, index: Arc<DateIndex>, values: Vec<Option<f64>>) -> Result<Self> {
        if values.len() != index.len() {
            return Err(Error::LengthMismatch {
                expected: index.len(),
                actual: values.len(),
            });
        }
        Ok(Self {
            name: name.into(),
            index,
            values,
        })
    }

    /// Build a complete series (no missing values).
    pub fn from_values(name: impl Into<String>, index: Arc<DateIndex>, values: &[f64]) -> Result<Self> {
        Self::new(name, index, values.iter().copied().map(Some).collect())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn index(&self) -> &Arc<DateIndex> {
        &self.index
    }

    pub fn values(&self) -> &[Option<f64>] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<f64> {
        self.values.get(i).copied().flatten()
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn count_present(&self) -> usize {
        self.values.iter().filter(|v| v.is_some()).count()
    }

    /// Values with missing entries removed.
    pub fn present(&self) -> Vec<f64> {
        self.values.iter().flatten().copied().collect()
    }

    /// Apply `f` to every present value.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Series {
        Series {
            name: self.name.clone(),
            index: Arc::clone(&self.index),
            values: self.values.iter().map(|v| v.map(&f)).collect(),
        }
    }
}

/// Window width in trading days.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum WindowSpec {
    Daily,
    Weekly,
    Biweekly,
    Triweekly,
    Monthly,
    FiveWeekly,
    SixWeekly,
    Days(usize),
}

impl WindowSpec {
    pub const NAMED: [WindowSpec; 7] = [
        WindowSpec::Daily,
        WindowSpec::Weekly,
        WindowSpec::Biweekly,
        WindowSpec::Triweekly,
        WindowSpec::Monthly,
        WindowSpec::FiveWeekly,
        WindowSpec::SixWeekly,
    ];

    pub fn width(self) -> usize {
        match self {
            WindowSpec::Daily => 1,
            WindowSpec::Weekly => 5,
            WindowSpec::Biweekly => 10,
            WindowSpec::Triweekly => 15,
            WindowSpec::Monthly => 21,
            WindowSpec::FiveWeekly => 25,
            WindowSpec::SixWeekly => 30,
            WindowSpec::Days(n) => n,
        }
    }
}

impl fmt::Display for WindowSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WindowSpec::Daily => f.write_str("daily"),
            WindowSpec::Weekly => f.write_str("weekly"),
            WindowSpec::Biweekly => f.write_str("biweekly"),
            WindowSpec::Triweekly => f.write_str("triweekly"),
            WindowSpec::Monthly => f.write_str("monthly"),
            WindowSpec::FiveWeekly => f.write_str("fiveweekly"),
            WindowSpec::SixWeekly => f.write_str("sixweekly"),
            WindowSpec::Days(n) => write!(f, "{n}"),
        }
    }
}

impl FromStr for WindowSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let named = match s.trim().to_ascii_lowercase().as_str() {
            "daily" => Some(WindowSpec::Daily),
            "weekly" => Some(WindowSpec::Weekly),
            "biweekly" => Some(WindowSpec::Biweekly),
            "triweekly" => Some(WindowSpec::Triweekly),
            "monthly" => Some(WindowSpec::Monthly),
            "fiveweekly" => Some(WindowSpec::FiveWeekly),
            "sixweekly" => Some(WindowSpec::SixWeekly),
            _ => None,
        };
        if let Some(w) = named {
            return Ok(w);
        }
        match s.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(WindowSpec::Days(n)),
            _ => Err(Error::InvalidInput(format!(
                "unknown window '{s}' (expected a positive day count or one of daily, weekly, biweekly, triweekly, monthly, fiveweekly, sixweekly)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AlignPolicy {
    /// Roll non-trading dates forward to the next trading day.
    #[default]
    NextTradingDay,
    Drop,
}

impl FromStr for AlignPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "next-trading-day" => Ok(AlignPolicy::NextTradingDay),
            "drop" => Ok(AlignPolicy::Drop),
            other => Err(Error::InvalidInput(format!(
                "unknown alignment policy '{other}' (expected next-trading-day or drop)"
            ))),
        }
    }
}

/// Result of [`align`]: tweet date to trading date, plus how many dates fell off the calendar.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Alignment {
    pub mapping: BTreeMap<NaiveDate, NaiveDate>,
    /// Non-trading dates discarded, either by policy or because no later trading day exists.
    pub dropped: usize,
}

impl Alignment {
    pub fn target(&self, date: NaiveDate) -> Option<NaiveDate> {
        self.mapping.get(&date).copied()
    }
}

/// Map tweet calendar days onto trading days.
pub fn align(tweet_days: &DateIndex, trading_days: &DateIndex, policy: AlignPolicy) -> Alignment {
    let calendar = trading_days.trading_dates();
    let mut out = Alignment::default();
    for &date in tweet_days.dates() {
        // first trading date >= date
        let pos = calendar.partition_point(|d| *d < date);
        match calendar.get(pos) {
            Some(&t) if t == date => {
                out.mapping.insert(date, t);
            }
            Some(&t) if policy == AlignPolicy::NextTradingDay => {
                out.mapping.insert(date, t);
            }
            _ => out.dropped += 1,
        }
    }
    if out.dropped > 0 {
        log::warn!("alignment dropped {} non-trading tweet date(s)", out.dropped);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reducer {
    Mean,
    Sum,
    Last,
}

/// Reduce complete non-overlapping windows anchored at the start of the series.
///
/// The output index holds the last date of each window. A trailing partial
/// window is dropped.
pub fn aggregate(series: &Series, window: WindowSpec, reducer: Reducer) -> Result<Series> {
    let width = window.width();
    if width == 0 {
        return Err(Error::Precondition("window width must be >= 1".into()));
    }
    let n_windows = series.len() / width;
    let src = series.index();
    let mut dates = Vec::with_capacity(n_windows);
    let mut trading = Vec::with_capacity(n_windows);
    let mut values = Vec::with_capacity(n_windows);
    for chunk in 0..n_windows {
        let lo = chunk * width;
        let hi = lo + width;
        dates.push(src.dates()[hi - 1]);
        trading.push(src.is_trading(hi - 1));
        let present: Vec<f64> = series.values()[lo..hi].iter().flatten().copied().collect();
        let v = match reducer {
            Reducer::Mean if present.is_empty() => None,
            Reducer::Mean => Some(present.iter().sum::<f64>() / present.len() as f64),
            Reducer::Sum if present.is_empty() => None,
            Reducer::Sum => Some(present.iter().sum()),
            Reducer::Last => series.values()[hi - 1],
        };
        values.push(v);
    }
    let index = Arc::new(DateIndex::new(dates, trading)?);
    Series::new(series.name().to_string(), index, values)
}

/// Shift values forward by `k` positions; the first `k` become missing.
pub fn lag(series: &Series, k: usize) -> Result<Series> {
    if k == 0 {
        return Err(Error::Precondition("lag must be >= 1".into()));
    }
    let n = series.len();
    let values = (0..n)
        .map(|t| if t >= k { series.values()[t - k] } else { None })
        .collect();
    Series::new(series.name().to_string(), Arc::clone(series.index()), values)
}
