//! Ordinary least squares via Householder QR.

use crate::error::{Error, Result};
use crate::timeseries::Series;

/// Relative column-norm threshold below which a column counts as collinear.
const RANK_TOL: f64 = 1e-10;

/// Solution of a dense least-squares problem.
#[derive(Debug, Clone, PartialEq)]
pub struct LeastSquares {
    pub coefficients: Vec<f64>,
    pub residuals: Vec<f64>,
    pub rss: f64,
    /// Diagonal of (X'X)^-1, for standard errors.
    pub xtx_inv_diag: Vec<f64>,
}

/// Least squares on column-major data. `names` label the columns in errors.
pub fn least_squares(y: &[f64], columns: &[Vec<f64>], names: &[String]) -> Result<LeastSquares> {
    let n = y.len();
    let k = columns.len();
    if let Some(c) = columns.iter().find(|c| c.len() != n) {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: c.len(),
        });
    }
    if n < k {
        return Err(Error::InsufficientData { needed: k, available: n });
    }
    let mut a: Vec<Vec<f64>> = columns.to_vec();
    let mut qty = y.to_vec();
    let norms: Vec<f64> = columns.iter().map(|c| norm(c)).collect();
    let mut collinear = Vec::new();

    for j in 0..k {
        let tail = norm(&a[j][j..]);
        if norms[j] == 0.0 || tail <= RANK_TOL * norms[j] {
            collinear.push(names.get(j).cloned().unwrap_or_else(|| format!("#{j}")));
            continue;
        }
        // Householder vector v = x + sign(x0)|x| e0
        let alpha = if a[j][j] >= 0.0 { -tail } else { tail };
        let mut v: Vec<f64> = a[j][j..].to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        for col in a.iter_mut().skip(j) {
            reflect(&mut col[j..], &v, vnorm2);
        }
        reflect(&mut qty[j..], &v, vnorm2);
    }
    if !collinear.is_empty() {
        return Err(Error::RankDeficient { columns: collinear });
    }

    // back substitution R b = Q'y
    let mut beta = vec![0.0; k];
    for i in (0..k).rev() {
        let mut s = qty[i];
        for j in i + 1..k {
            s -= a[j][i] * beta[j];
        }
        beta[i] = s / a[i][i];
    }

    // R^-1 by back substitution on the identity; diag((R'R)^-1) = row norms of R^-1
    let mut rinv = vec![vec![0.0; k]; k];
    for col in 0..k {
        for i in (0..=col).rev() {
            let mut s = if i == col { 1.0 } else { 0.0 };
            for j in i + 1..=col {
                s -= a[j][i] * rinv[j][col];
            }
            rinv[i][col] = s / a[i][i];
        }
    }
    let xtx_inv_diag = rinv.iter().map(|row| row.iter().map(|x| x * x).sum()).collect();

    let residuals: Vec<f64> = (0..n)
        .map(|t| y[t] - columns.iter().zip(&beta).map(|(c, b)| c[t] * b).sum::<f64>())
        .collect();
    let rss = residuals.iter().map(|e| e * e).sum();
    Ok(LeastSquares {
        coefficients: beta,
        residuals,
        rss,
        xtx_inv_diag,
    })
}

fn norm(v: &[f64]) -> f64 {
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    scale * v.iter().map(|x| (x / scale).powi(2)).sum::<f64>().sqrt()
}

fn reflect(x: &mut [f64], v: &[f64], vnorm2: f64) {
    let dot: f64 = x.iter().zip(v).map(|(a, b)| a * b).sum();
    let f = 2.0 * dot / vnorm2;
    for (xi, vi) in x.iter_mut().zip(v) {
        *xi -= f * vi;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit {
    /// Regressor names in coefficient order; `"intercept"` first when present.
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub residuals: Vec<f64>,
    pub r_squared: f64,
    pub adj_r_squared: f64,
    pub residual_variance: f64,
    pub rss: f64,
    pub tss: f64,
    /// Complete-case rows used.
    pub n: usize,
}

impl OlsFit {
    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.coefficients[i])
    }

    pub fn t_stat(&self, i: usize) -> f64 {
        self.coefficients[i] / self.std_errors[i]
    }
}

/// Regress `y` on `xs` over complete-case rows.
pub fn ols(y: &Series, xs: &[Series], intercept: bool) -> Result<OlsFit> {
    for x in xs {
        if x.len() != y.len() {
            return Err(Error::LengthMismatch {
                expected: y.len(),
                actual: x.len(),
            });
        }
    }
    let rows: Vec<usize> = (0..y.len())
        .filter(|&t| y.get(t).is_some() && xs.iter().all(|x| x.get(t).is_some()))
        .collect();
    let yv: Vec<f64> = rows.iter().map(|&t| y.get(t).unwrap()).collect();
    let mut names = Vec::new();
    let mut cols = Vec::new();
    if intercept {
        names.push("intercept".to_string());
        cols.push(vec![1.0; rows.len()]);
    }
    for x in xs {
        names.push(x.name().to_string());
        cols.push(rows.iter().map(|&t| x.get(t).unwrap()).collect());
    }
    ols_dense(&yv, &cols, &names, intercept)
}

/// OLS on already-aligned dense columns. If `intercept` is set, the caller
/// must have included the constant column.
pub fn ols_dense(y: &[f64], columns: &[Vec<f64>], names: &[String], intercept: bool) -> Result<OlsFit> {
    let n = y.len();
    let k = columns.len();
    let needed = k + 2;
    if n < needed {
        return Err(Error::InsufficientData { needed, available: n });
    }
    let ls = least_squares(y, columns, names)?;
    let tss = if intercept {
        let mean = y.iter().sum::<f64>() / n as f64;
        y.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
    } else {
        y.iter().map(|v| v * v).sum::<f64>()
    };
    let r_squared = if tss > 0.0 { (1.0 - ls.rss / tss).clamp(0.0, 1.0) } else { 0.0 };
    let dof = (n - k) as f64;
    let residual_variance = ls.rss / dof;
    let adj_r_squared = if intercept {
        1.0 - (1.0 - r_squared) * (n as f64 - 1.0) / dof
    } else {
        1.0 - (1.0 - r_squared) * n as f64 / dof
    };
    let std_errors = ls.xtx_inv_diag.iter().map(|d| (d * residual_variance).sqrt()).collect();
    Ok(OlsFit {
        names: names.to_vec(),
        coefficients: ls.coefficients,
        std_errors,
        residuals: ls.residuals,
        r_squared,
        adj_r_squared,
        residual_variance,
        rss: ls.rss,
        tss,
        n,
    })
}
