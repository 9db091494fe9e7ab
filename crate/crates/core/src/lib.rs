//! Tweet-sentiment market analytics.
//!
//! The crate covers the whole chain from labeled (or classifiable) tweets and
//! daily OHLCV bars to a weekly hedging backtest:
//!
//! - [`timeseries`]: date-indexed series, calendar alignment, window aggregation, lags
//! - [`sentiment`]: Naive Bayes polarity and the daily tweet-board features
//! - [`market`]: returns, log volume, Garman-Klass volatility
//! - [`stats`]: correlation, OLS, Granger causality, Ljung-Box, F/chi-square CDFs
//! - [`forecast`]: ARIMA / exponential smoothing candidates, expert selection, evaluation
//! - [`classify`]: linear SVM weekly direction classifier with ROC/AUC
//! - [`hedge`]: married-put portfolio backtest
//! - [`dataset`], [`synth`], [`sweep`]: file ingestion, synthetic corpora, window sweeps

pub mod classify;
pub mod dataset;
pub mod error;
pub mod forecast;
pub mod hedge;
pub mod market;
pub mod sentiment;
pub mod stats;
pub mod sweep;
pub mod synth;
pub mod timeseries;

pub use error::{Error, Result};
