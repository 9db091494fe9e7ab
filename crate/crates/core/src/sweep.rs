//! Explanatory power of tweet features for returns across window widths.

use crate::dataset::{feature_frame, Bundle, CARRIED_COLUMNS, SENTIMENT_COLUMNS};
use crate::error::{Error, Result};
use crate::stats::{least_squares, ols_dense};
use crate::timeseries::WindowSpec;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub window: WindowSpec,
    /// `None` when the window was skipped.
    pub r_squared: Option<f64>,
    pub n: usize,
    /// Regressors dropped as constant or collinear.
    pub dropped: Vec<String>,
    pub note: Option<String>,
}

/// Greedily keep columns that add rank to the intercept-led design.
fn independent_columns(y: &[f64], cols: Vec<(String, Vec<f64>)>) -> (Vec<String>, Vec<Vec<f64>>, Vec<String>) {
    let mut names = vec!["const".to_string()];
    let mut kept = vec![vec![1.0; y.len()]];
    let mut dropped = Vec::new();
    for (name, col) in cols {
        names.push(name);
        kept.push(col);
        if least_squares(y, &kept, &names).is_err() {
            dropped.push(names.pop().unwrap());
            kept.pop();
        }
    }
    (names, kept, dropped)
}

/// OLS of window returns on the five sentiment features and their carried
/// copies, for each window. Windows the data cannot fill twice, or with too
/// few complete rows, are reported with a note instead of an R².
pub fn sweep_windows(bundle: &Bundle, windows: &[WindowSpec]) -> Result<Vec<SweepRow>> {
    if windows.is_empty() {
        return Err(Error::Precondition("no windows to sweep".into()));
    }
    let mut out = Vec::with_capacity(windows.len());
    for &window in windows {
        let skip = |note: String| SweepRow {
            window,
            r_squared: None,
            n: 0,
            dropped: Vec::new(),
            note: Some(note),
        };
        if bundle.bars.len() < 2 * window.width() {
            log::warn!("window {window} skipped: dataset spans fewer than two windows");
            out.push(skip(format!("dataset spans fewer than two {window} windows")));
            continue;
        }
        let frame = feature_frame(bundle, window)?;
        let ret = frame.column("return")?;
        let names: Vec<&str> = SENTIMENT_COLUMNS.iter().chain(CARRIED_COLUMNS.iter()).copied().collect();
        let cols: Vec<&[Option<f64>]> = names.iter().map(|n| frame.column(n)).collect::<Result<_>>()?;
        let rows: Vec<usize> = (0..frame.len())
            .filter(|&i| ret[i].is_some() && cols.iter().all(|c| c[i].is_some()))
            .collect();
        let y: Vec<f64> = rows.iter().map(|&i| ret[i].unwrap()).collect();
        let dense: Vec<(String, Vec<f64>)> = names
            .iter()
            .zip(&cols)
            .map(|(n, c)| (n.to_string(), rows.iter().map(|&i| c[i].unwrap()).collect()))
            .collect();
        let (kept_names, kept, dropped) = independent_columns(&y, dense);
        match ols_dense(&y, &kept, &kept_names, true) {
            Ok(fit) => out.push(SweepRow {
                window,
                r_squared: Some(fit.r_squared),
                n: fit.n,
                dropped,
                note: None,
            }),
            Err(Error::InsufficientData { needed, available }) => {
                log::warn!("window {window} skipped: {available} complete rows, need {needed}");
                out.push(SweepRow {
                    n: available,
                    ..skip(format!("{available} complete rows, need {needed}"))
                });
            }
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Window with the highest R² among those that were fitted.
pub fn best_window(rows: &[SweepRow]) -> Option<WindowSpec> {
    rows.iter()
        .filter_map(|r| r.r_squared.map(|v| (r.window, v)))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(w, _)| w)
}
