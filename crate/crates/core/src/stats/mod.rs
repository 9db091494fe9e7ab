//! Correlation, regression, Granger causality and residual diagnostics.

pub mod dist;
pub mod ols;

pub use dist::{chi2_cdf, chi2_sf, f_cdf, f_sf, normal_cdf};
pub use ols::{least_squares, ols, ols_dense, LeastSquares, OlsFit};

use crate::error::{Error, Result};
use crate::timeseries::Series;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pearson {
    pub r: f64,
    /// Pairwise-complete observations used.
    pub n: usize,
}

/// Pearson r over pairwise-complete observations.
pub fn pearson(x: &Series, y: &Series) -> Result<Pearson> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            expected: x.len(),
            actual: y.len(),
        });
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = x
        .values()
        .iter()
        .zip(y.values())
        .filter_map(|(a, b)| Some(((*a)?, (*b)?)))
        .unzip();
    Ok(Pearson {
        r: pearson_slices(&xs, &ys)?,
        n: xs.len(),
    })
}

pub fn pearson_slices(xs: &[f64], ys: &[f64]) -> Result<f64> {
    let n = xs.len();
    if n < 3 {
        return Err(Error::InsufficientData { needed: 3, available: n });
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (a, b) in xs.iter().zip(ys) {
        let (dx, dy) = (a - mx, b - my);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::ZeroVariance(if sxx == 0.0 { "first series" } else { "second series" }.into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Pearson r for every (row, column) pair. Cells with fewer than three
/// complete pairs or a constant side are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub rows: Vec<String>,
    pub cols: Vec<String>,
    pub r: Vec<Vec<Option<f64>>>,
    pub n: Vec<Vec<usize>>,
}

pub fn correlation_matrix(rows: &[Series], cols: &[Series]) -> Result<CorrelationMatrix> {
    let mut r = Vec::with_capacity(rows.len());
    let mut n = Vec::with_capacity(rows.len());
    for row in rows {
        let mut rr = Vec::with_capacity(cols.len());
        let mut nn = Vec::with_capacity(cols.len());
        for col in cols {
            let complete = row
                .values()
                .iter()
                .zip(col.values())
                .filter(|(a, b)| a.is_some() && b.is_some())
                .count();
            nn.push(complete);
            rr.push(match pearson(row, col) {
                Ok(p) => Some(p.r),
                Err(Error::InsufficientData { .. } | Error::ZeroVariance(_)) => None,
                Err(e) => return Err(e),
            });
        }
        r.push(rr);
        n.push(nn);
    }
    Ok(CorrelationMatrix {
        rows: rows.iter().map(|s| s.name().to_string()).collect(),
        cols: cols.iter().map(|s| s.name().to_string()).collect(),
        r,
        n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrangerResult {
    pub lag: usize,
    pub rss_restricted: f64,
    pub rss_unrestricted: f64,
    pub f_stat: f64,
    pub p_value: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrangerLag {
    pub lag: usize,
    pub result: Result<GrangerResult>,
}

/// Bivariate Granger test of `cause` -> `target` for lags `1..=max_lag`.
///
/// At each lag the restricted (own lags) and unrestricted (own plus cause
/// lags) regressions use the same complete-case rows.
pub fn granger(target: &Series, cause: &Series, max_lag: usize) -> Result<Vec<GrangerLag>> {
    if target.len() != cause.len() {
        return Err(Error::LengthMismatch {
            expected: target.len(),
            actual: cause.len(),
        });
    }
    if max_lag == 0 {
        return Err(Error::Precondition("max lag must be >= 1".into()));
    }
    Ok((1..=max_lag)
        .map(|lag| GrangerLag {
            lag,
            result: granger_at(target, cause, lag),
        })
        .collect())
}

fn granger_at(target: &Series, cause: &Series, lag: usize) -> Result<GrangerResult> {
    let rows: Vec<usize> = (lag..target.len())
        .filter(|&t| target.get(t).is_some() && (1..=lag).all(|i| target.get(t - i).is_some() && cause.get(t - i).is_some()))
        .collect();
    let t_rows = rows.len();
    let needed = 2 * lag + 3;
    if t_rows < needed {
        return Err(Error::InsufficientData {
            needed,
            available: t_rows,
        });
    }
    let y: Vec<f64> = rows.iter().map(|&t| target.get(t).unwrap()).collect();
    let mut cols = vec![vec![1.0; t_rows]];
    let mut names = vec!["intercept".to_string()];
    for i in 1..=lag {
        cols.push(rows.iter().map(|&t| target.get(t - i).unwrap()).collect());
        names.push(format!("{}_lag{i}", target.name()));
    }
    let restricted = least_squares(&y, &cols, &names)?;
    for i in 1..=lag {
        cols.push(rows.iter().map(|&t| cause.get(t - i).unwrap()).collect());
        names.push(format!("{}_lag{i}", cause.name()));
    }
    let unrestricted = least_squares(&y, &cols, &names).map_err(|e| match e {
        Error::RankDeficient { columns } => Error::ZeroVariance(format!("cause regressors {columns:?} carry no variation beyond the target's own lags")),
        other => other,
    })?;
    let df_den = (t_rows - 2 * lag - 1) as f64;
    let gain = (restricted.rss - unrestricted.rss).max(0.0);
    let f_stat = if unrestricted.rss > 0.0 {
        (gain / lag as f64) / (unrestricted.rss / df_den)
    } else if gain > 0.0 {
        f64::INFINITY
    } else {
        return Err(Error::ZeroVariance("target is fitted exactly by its own lags".into()));
    };
    Ok(GrangerResult {
        lag,
        rss_restricted: restricted.rss,
        rss_unrestricted: unrestricted.rss,
        f_stat,
        p_value: f_sf(f_stat, lag as f64, df_den)?,
        n: t_rows,
    })
}

/// `**` below 0.05, `*` below 0.10. Display only.
pub fn significance_stars(p: f64) -> &'static str {
    if p < 0.05 {
        "**"
    } else if p < 0.10 {
        "*"
    } else {
        ""
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LjungBox {
    pub q: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Ljung-Box portmanteau statistic over lags `1..=lags`, with
/// `lags - fitted_params` degrees of freedom.
pub fn ljung_box(residuals: &[f64], lags: usize, fitted_params: usize) -> Result<LjungBox> {
    if lags == 0 {
        return Err(Error::Precondition("Ljung-Box needs at least one lag".into()));
    }
    let n = residuals.len();
    if n <= lags + 1 {
        return Err(Error::InsufficientData {
            needed: lags + 2,
            available: n,
        });
    }
    if lags <= fitted_params {
        return Err(Error::OverParameterized {
            lags,
            params: fitted_params,
        });
    }
    let mean = residuals.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = residuals.iter().map(|e| e - mean).collect();
    let denom: f64 = centered.iter().map(|e| e * e).sum();
    if denom == 0.0 {
        return Err(Error::ZeroVariance("residuals are constant; autocorrelations undefined".into()));
    }
    let nf = n as f64;
    let mut q = 0.0;
    for k in 1..=lags {
        let rho = centered[k..].iter().zip(&centered).map(|(a, b)| a * b).sum::<f64>() / denom;
        q += rho * rho / (nf - k as f64);
    }
    q *= nf * (nf + 2.0);
    let dof = lags - fitted_params;
    Ok(LjungBox {
        q,
        dof,
        p_value: chi2_sf(q, dof as f64)?,
    })
}
