//! Simple and Holt (additive trend) exponential smoothing.
//!
//! Initial states come from the series itself: level = y_0, and for Holt
//! trend = y_1 - y_0. Smoothing weights minimise the one-step squared error.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothingParams {
    pub alpha: f64,
    /// Trend weight; `None` for simple smoothing.
    pub beta: Option<f64>,
}

impl SmoothingParams {
    /// First index with a one-step prediction.
    pub fn first_prediction(&self) -> usize {
        if self.beta.is_some() {
            2
        } else {
            1
        }
    }

    /// Smoothing weights plus initial states.
    pub fn n_params(&self) -> usize {
        if self.beta.is_some() {
            4
        } else {
            2
        }
    }
}

/// One-step predictions. Entry `t` predicts `y[t]` from `y[..t]`; the entry
/// at `y.len()` is the out-of-sample forecast. Entries before
/// [`SmoothingParams::first_prediction`] are `None`.
pub fn predict_path(params: &SmoothingParams, y: &[f64]) -> Vec<Option<f64>> {
    let n = y.len();
    let mut out = vec![None; n + 1];
    let start = params.first_prediction();
    if n < start {
        return out;
    }
    let mut level = y[start - 1];
    let mut trend = if start == 2 { y[1] - y[0] } else { 0.0 };
    for t in start..=n {
        let pred = level + trend;
        out[t] = Some(pred);
        if t == n {
            break;
        }
        let err = y[t] - pred;
        level = pred + params.alpha * err;
        if let Some(beta) = params.beta {
            trend += params.alpha * beta * err;
        }
    }
    out
}

fn sse(params: &SmoothingParams, y: &[f64]) -> f64 {
    predict_path(params, y)[..y.len()]
        .iter()
        .zip(y)
        .filter_map(|(p, v)| p.map(|p| (v - p).powi(2)))
        .sum()
}

fn golden(lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..60 {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    (a + b) / 2.0
}

const W_MIN: f64 = 1e-4;
const W_MAX: f64 = 1.0 - 1e-4;

pub fn fit_simple(y: &[f64]) -> Result<SmoothingParams> {
    if y.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            available: y.len(),
        });
    }
    let eval = |alpha: f64| sse(&SmoothingParams { alpha, beta: None }, y);
    let best = (1..100)
        .map(|i| i as f64 / 100.0)
        .min_by(|a, b| eval(*a).total_cmp(&eval(*b)))
        .unwrap();
    let alpha = golden((best - 0.01).max(W_MIN), (best + 0.01).min(W_MAX), eval);
    let alpha = if eval(alpha) <= eval(best) { alpha } else { best };
    Ok(SmoothingParams { alpha, beta: None })
}

pub fn fit_holt(y: &[f64]) -> Result<SmoothingParams> {
    if y.len() < 4 {
        return Err(Error::InsufficientData {
            needed: 4,
            available: y.len(),
        });
    }
    let eval = |alpha: f64, beta: f64| sse(&SmoothingParams { alpha, beta: Some(beta) }, y);
    let grid: Vec<f64> = (1..20).map(|i| i as f64 / 20.0).collect();
    let (mut alpha, mut beta) = (grid[0], grid[0]);
    let mut best = f64::INFINITY;
    for &a in &grid {
        for &b in &grid {
            let v = eval(a, b);
            if v < best {
                best = v;
                alpha = a;
                beta = b;
            }
        }
    }
    for round in 0..3 {
        let half = 0.05 / (round as f64 + 1.0);
        let a = golden((alpha - half).max(W_MIN), (alpha + half).min(W_MAX), |a| eval(a, beta));
        if eval(a, beta) <= best {
            alpha = a;
            best = eval(alpha, beta);
        }
        let b = golden((beta - half).max(W_MIN), (beta + half).min(W_MAX), |b| eval(alpha, b));
        if eval(alpha, b) <= best {
            beta = b;
            best = eval(alpha, beta);
        }
    }
    Ok(SmoothingParams { alpha, beta: Some(beta) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simple_smoothing_recursion() {
        let p = SmoothingParams { alpha: 0.5, beta: None };
        let path = predict_path(&p, &[2.0, 4.0, 0.0]);
        assert_eq!(path, vec![None, Some(2.0), Some(3.0), Some(1.5)]);
    }

    #[test]
    fn holt_follows_linear_trend() {
        let y: Vec<f64> = (0..20).map(|i| 5.0 + 2.0 * i as f64).collect();
        let p = fit_holt(&y).unwrap();
        let path = predict_path(&p, &y);
        assert!((path[20].unwrap() - 45.0).abs() < 1e-9);
    }

    #[test]
    fn simple_fit_on_random_walk_prefers_large_alpha() {
        let mut y = vec![0.0];
        let mut s = 1u64;
        for _ in 0..200 {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let step = ((s >> 33) as f64 / (1u64 << 31) as f64) - 0.5;
            y.push(y.last().unwrap() + step);
        }
        assert!(fit_simple(&y).unwrap().alpha > 0.8);
    }
}
