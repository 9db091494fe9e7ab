//! Expert model selection over ARIMA and exponential smoothing candidates,
//! with optional tweet-feature regressors, and one-step-ahead evaluation.

pub mod arima;
pub mod smoothing;

pub use arima::{ArimaOrder, ArimaParams, SeasonalOrder};
pub use smoothing::SmoothingParams;

use crate::error::{Error, Result};
use crate::stats::{ljung_box, pearson_slices, LjungBox};

/// Candidates whose training R² is within this distance of the best are
/// treated as tied and ranked by structural parameter count, then BIC.
pub const SELECTION_TIE: f64 = 0.01;

/// Half-width multiplier of the 95% normal bounds.
pub const Z_95: f64 = 1.96;

pub const LJUNG_BOX_LAGS: usize = 18;

/// Predictor columns aligned with the target, with names.
#[derive(Debug, Clone, Copy)]
pub struct Predictors<'a> {
    pub columns: &'a [Vec<f64>],
    pub names: &'a [String],
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelKind {
    Arima(ArimaParams),
    Smoothing(SmoothingParams),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitStats {
    /// Squared Pearson r between fitted and observed.
    pub r_squared: f64,
    /// 1 - SSE/SST; 1 by convention when SST is zero.
    pub determination: f64,
    /// `None` when an observed value is zero.
    pub mape: Option<f64>,
    pub max_ape: Option<f64>,
    pub bic: f64,
    pub n_params: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForecastModel {
    pub kind: ModelKind,
    /// Positions (into the predictor set supplied at fit time) of the
    /// regressors the model uses, matching the exogenous coefficients.
    pub exog_indices: Vec<usize>,
    pub exog_names: Vec<String>,
    /// Innovation variance.
    pub sigma2: f64,
    /// First training index with a fitted value.
    pub fit_start: usize,
    pub fitted: Vec<f64>,
    pub residuals: Vec<f64>,
    pub stats: FitStats,
    pub warnings: Vec<String>,
}

impl ForecastModel {
    pub fn label(&self) -> String {
        match &self.kind {
            ModelKind::Arima(a) => a.order.to_string(),
            ModelKind::Smoothing(s) if s.beta.is_some() => "Holt".to_string(),
            ModelKind::Smoothing(_) => "SimpleES".to_string(),
        }
    }

    /// ARMA-equivalent parameter count used for Ljung-Box degrees of freedom.
    pub fn arma_params(&self) -> usize {
        match &self.kind {
            ModelKind::Arima(a) => a.order.p + a.order.q,
            ModelKind::Smoothing(s) if s.beta.is_some() => 2,
            ModelKind::Smoothing(_) => 1,
        }
    }

    pub fn order(&self) -> Option<ArimaOrder> {
        match &self.kind {
            ModelKind::Arima(a) => Some(a.order),
            ModelKind::Smoothing(_) => None,
        }
    }

    pub fn sigma(&self) -> f64 {
        self.sigma2.sqrt()
    }

    /// Parameter count excluding regressor coefficients.
    pub fn structure_params(&self) -> usize {
        self.stats.n_params - self.exog_indices.len()
    }
}

fn fit_stats(observed: &[f64], fitted: &[f64], n_params: usize) -> FitStats {
    let n = observed.len();
    let sse: f64 = observed.iter().zip(fitted).map(|(o, f)| (o - f).powi(2)).sum();
    let mean = observed.iter().sum::<f64>() / n.max(1) as f64;
    let sst: f64 = observed.iter().map(|o| (o - mean).powi(2)).sum();
    let determination = if sst > 0.0 { 1.0 - sse / sst } else { 1.0 };
    let r_squared = match pearson_slices(fitted, observed) {
        Ok(r) => r * r,
        Err(_) if sse == 0.0 => 1.0,
        Err(_) => 0.0,
    };
    let (mape, max_ape) = percent_errors(observed, fitted).map_or((None, None), |(m, x)| (Some(m), Some(x)));
    let nf = n.max(1) as f64;
    let bic = nf * (sse / nf).max(1e-300).ln() + n_params as f64 * nf.ln();
    FitStats {
        r_squared,
        determination,
        mape,
        max_ape,
        bic,
        n_params,
    }
}

/// Mean and max absolute percentage error; `None` if any observation is 0.
pub fn percent_errors(observed: &[f64], predicted: &[f64]) -> Option<(f64, f64)> {
    if observed.is_empty() || observed.iter().any(|o| *o == 0.0) {
        return None;
    }
    let apes: Vec<f64> = observed
        .iter()
        .zip(predicted)
        .map(|(o, p)| ((o - p) / o).abs() * 100.0)
        .collect();
    let mape = apes.iter().sum::<f64>() / apes.len() as f64;
    let max = apes.iter().fold(0.0f64, |m, a| m.max(*a));
    Some((mape, max))
}

fn select_columns(x: Option<Predictors<'_>>, indices: &[usize], len: usize) -> Result<Vec<Vec<f64>>> {
    let Some(x) = x else {
        return if indices.is_empty() {
            Ok(Vec::new())
        } else {
            Err(Error::MissingExogenous(0))
        };
    };
    indices
        .iter()
        .map(|&i| {
            let col = x.columns.get(i).ok_or(Error::MissingExogenous(0))?;
            if col.len() < len {
                return Err(Error::MissingExogenous(col.len()));
            }
            if let Some(pos) = col[..len].iter().position(|v| !v.is_finite()) {
                return Err(Error::MissingExogenous(pos));
            }
            Ok(col[..len].to_vec())
        })
        .collect()
}

/// Fit an ARIMA order with the given predictor subset by conditional sum of squares.
pub fn fit_arima(y: &[f64], order: ArimaOrder, x: Option<Predictors<'_>>) -> Result<ForecastModel> {
    let all: Vec<usize> = x.map(|x| (0..x.columns.len()).collect()).unwrap_or_default();
    fit_arima_subset(y, order, x, &all)
}

fn fit_arima_subset(y: &[f64], order: ArimaOrder, x: Option<Predictors<'_>>, indices: &[usize]) -> Result<ForecastModel> {
    if let Some(pos) = y.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("target has a non-finite value at {pos}")));
    }
    let cols = select_columns(x, indices, y.len())?;
    let d = order.d;
    if y.len() <= d {
        return Err(Error::InsufficientData {
            needed: d + 1,
            available: y.len(),
        });
    }
    let w = arima::difference(y, d);
    let z: Vec<Vec<f64>> = cols.iter().map(|c| arima::difference(c, d)).collect();
    let params = arima::fit_css(order, &w, &z)?;
    let e: Vec<f64> = arima::css_residuals(&params.packed(), order.p, order.q, &w, &z)
        .into_iter()
        .flatten()
        .collect();
    let fit_start = d + order.p;
    let observed = &y[fit_start..];
    let fitted: Vec<f64> = observed.iter().zip(&e).map(|(o, r)| o - r).collect();
    let k = params.n_params();
    let dof = e.len().saturating_sub(k).max(1) as f64;
    let sigma2 = params.objective / dof;
    let mut warnings = Vec::new();
    if order.seasonal.is_some() {
        warnings.push(format!("{order}: seasonal terms are not estimated and were ignored"));
    }
    if !params.is_stationary() {
        warnings.push(format!("{order}: AR polynomial has a root on or inside the unit circle"));
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    let stats = fit_stats(observed, &fitted, k);
    Ok(ForecastModel {
        kind: ModelKind::Arima(params),
        exog_indices: indices.to_vec(),
        exog_names: indices
            .iter()
            .map(|&i| x.and_then(|x| x.names.get(i).cloned()).unwrap_or_else(|| format!("x{i}")))
            .collect(),
        sigma2,
        fit_start,
        fitted,
        residuals: e,
        stats,
        warnings,
    })
}

pub fn fit_smoothing(y: &[f64], trend: bool) -> Result<ForecastModel> {
    let params = if trend { smoothing::fit_holt(y)? } else { smoothing::fit_simple(y)? };
    let path = smoothing::predict_path(&params, y);
    let fit_start = params.first_prediction();
    let observed = &y[fit_start..];
    let fitted: Vec<f64> = path[fit_start..y.len()].iter().map(|p| p.unwrap()).collect();
    let residuals: Vec<f64> = observed.iter().zip(&fitted).map(|(o, f)| o - f).collect();
    let k = params.n_params();
    let sse: f64 = residuals.iter().map(|e| e * e).sum();
    let sigma2 = sse / residuals.len().saturating_sub(k).max(1) as f64;
    let stats = fit_stats(observed, &fitted, k);
    Ok(ForecastModel {
        kind: ModelKind::Smoothing(params),
        exog_indices: Vec::new(),
        exog_names: Vec::new(),
        sigma2,
        fit_start,
        fitted,
        residuals,
        stats,
        warnings: Vec::new(),
    })
}

/// One-step predictions along `y` with frozen parameters.
///
/// Entry `t` predicts `y[t]` from `y[..t]` (and predictors through `t`);
/// entry `y.len()` is the out-of-sample forecast and needs predictor values
/// one step past the end of `y`.
pub fn predict_path(model: &ForecastModel, y: &[f64], x: Option<Predictors<'_>>) -> Result<Vec<Option<f64>>> {
    let n = y.len();
    match &model.kind {
        ModelKind::Smoothing(s) => Ok(smoothing::predict_path(s, y)),
        ModelKind::Arima(a) => {
            let (p, d, q) = (a.order.p, a.order.d, a.order.q);
            let mut out = vec![None; n + 1];
            if n <= d {
                return Ok(out);
            }
            let cols = select_columns(x, &model.exog_indices, n)?;
            let w = arima::difference(y, d);
            let z: Vec<Vec<f64>> = cols.iter().map(|c| arima::difference(c, d)).collect();
            let packed = a.packed();
            for (i, e) in arima::css_residuals(&packed, p, q, &w, &z).into_iter().enumerate() {
                if let Some(e) = e {
                    out[i + d] = Some(y[i + d] - e);
                }
            }
            let future = select_columns(x, &model.exog_indices, n + 1);
            if let Ok(future) = future {
                let z_next: Vec<f64> = future.iter().map(|c| arima::difference(&c[n - d..], d)[0]).collect();
                let u_next = arima::css_next_u(&packed, p, q, &w, &z);
                let w_next = a.mu + a.exog.iter().zip(&z_next).map(|(b, v)| b * v).sum::<f64>() + u_next;
                out[n] = Some(arima::integrate_step(w_next, y, d));
            }
            Ok(out)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OneStep {
    pub point: f64,
    pub ucl: f64,
    pub lcl: f64,
}

/// Forecast the value following `history`. Predictor columns must extend
/// one step beyond the history.
pub fn forecast_one_step(model: &ForecastModel, history: &[f64], x: Option<Predictors<'_>>) -> Result<OneStep> {
    let needed = match &model.kind {
        ModelKind::Arima(a) => a.order.p.max(a.order.q) + a.order.d,
        ModelKind::Smoothing(s) => s.first_prediction(),
    }
    .max(1);
    if history.len() < needed {
        return Err(Error::InsufficientData {
            needed,
            available: history.len(),
        });
    }
    if !model.exog_indices.is_empty() {
        select_columns(x, &model.exog_indices, history.len() + 1).map_err(|_| Error::MissingExogenous(history.len()))?;
    }
    let path = predict_path(model, history, x)?;
    let point = path[history.len()].ok_or(Error::MissingExogenous(history.len()))?;
    let half = Z_95 * model.sigma();
    Ok(OneStep {
        point,
        ucl: point + half,
        lcl: point - half,
    })
}

/// Every (p, d, q) with p, d, q in {0, 1, 2}, including the white-noise model.
pub fn default_orders() -> Vec<ArimaOrder> {
    let mut out = Vec::new();
    for p in 0..=2 {
        for d in 0..=2 {
            for q in 0..=2 {
                out.push(if p + d + q == 0 {
                    ArimaOrder::white_noise()
                } else {
                    ArimaOrder::new(p, d, q).expect("grid orders are valid")
                });
            }
        }
    }
    out
}

/// Fit every candidate and pick the best by training R² (1 - SSE/SST).
///
/// Candidates within [`SELECTION_TIE`] of the best are ranked by structural
/// parameter count (regressors excluded), then BIC. When predictors are supplied, the chosen ARIMA model is
/// refitted without any regressor whose |t| < 1 until all survivors pass.
pub fn expert_select(y: &[f64], orders: &[ArimaOrder], x: Option<Predictors<'_>>) -> Result<ForecastModel> {
    let mut fits = Vec::new();
    let mut failures = Vec::new();
    for &order in orders {
        match fit_arima(y, order, x) {
            Ok(m) => fits.push(m),
            Err(e) => failures.push(format!("{order}: {e}")),
        }
    }
    for (trend, name) in [(false, "SimpleES"), (true, "Holt")] {
        match fit_smoothing(y, trend) {
            Ok(m) => fits.push(m),
            Err(e) => failures.push(format!("{name}: {e}")),
        }
    }
    let Some(best) = fits.iter().map(|m| m.stats.determination).reduce(f64::max) else {
        return Err(Error::AllCandidatesFailed(failures));
    };
    let chosen = fits
        .into_iter()
        .filter(|m| m.stats.determination >= best - SELECTION_TIE)
        .min_by(|a, b| {
            a.structure_params()
                .cmp(&b.structure_params())
                .then(a.stats.bic.total_cmp(&b.stats.bic))
        })
        .expect("the best candidate is always within the tie band");
    prune_predictors(y, chosen, x)
}

fn prune_predictors(y: &[f64], mut model: ForecastModel, x: Option<Predictors<'_>>) -> Result<ForecastModel> {
    loop {
        let ModelKind::Arima(params) = &model.kind else {
            return Ok(model);
        };
        if model.exog_indices.is_empty() {
            return Ok(model);
        }
        let keep: Vec<usize> = model
            .exog_indices
            .iter()
            .zip(params.exog.iter().zip(&params.exog_std_errors))
            .filter(|(_, (b, se))| (*b / *se).abs() >= 1.0)
            .map(|(i, _)| *i)
            .collect();
        if keep.len() == model.exog_indices.len() {
            return Ok(model);
        }
        match fit_arima_subset(y, params.order, x, &keep) {
            Ok(refit) => model = refit,
            Err(e) => {
                log::warn!("refit after predictor pruning failed ({e}); keeping the unpruned model");
                return Ok(model);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    Expert(Vec<ArimaOrder>),
    Fixed(ArimaOrder),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForecastStep {
    pub index: usize,
    pub observed: f64,
    pub point: f64,
    pub ucl: f64,
    pub lcl: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub model: String,
    pub predictors: Vec<String>,
    /// Training fit R² (squared Pearson r of fitted vs observed).
    pub r_squared: f64,
    pub mape: f64,
    pub max_ape: f64,
    /// Percent of test steps whose predicted move has the realised sign.
    pub direction: f64,
    pub ljung_box: Option<LjungBox>,
    pub train_len: usize,
    pub fit_start: usize,
    pub fitted: Vec<f64>,
    pub steps: Vec<ForecastStep>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub with_predictors: Option<EvaluationReport>,
    pub without_predictors: EvaluationReport,
}

/// Train on the leading `train_frac` of `y`, then forecast each test point
/// one step ahead with frozen parameters. Both variants share the split.
pub fn evaluate(spec: &ModelSpec, y: &[f64], x: Option<Predictors<'_>>, train_frac: f64) -> Result<Evaluation> {
    if !(train_frac > 0.0 && train_frac < 1.0) {
        return Err(Error::Precondition(format!("train fraction must be in (0, 1), got {train_frac}")));
    }
    let train_len = (y.len() as f64 * train_frac).floor() as usize;
    let test_len = y.len().saturating_sub(train_len);
    if test_len < 10 {
        return Err(Error::Precondition(format!("split leaves {test_len} test points; need at least 10")));
    }
    if train_len < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            available: train_len,
        });
    }
    if let Some(t) = (train_len..y.len()).find(|&t| y[t] == 0.0) {
        return Err(Error::ZeroTarget(t));
    }
    let without = evaluate_variant(spec, y, None, train_len)?;
    let with = match x {
        Some(x) if !x.columns.is_empty() => Some(evaluate_variant(spec, y, Some(x), train_len)?),
        _ => None,
    };
    Ok(Evaluation {
        with_predictors: with,
        without_predictors: without,
    })
}

fn evaluate_variant(spec: &ModelSpec, y: &[f64], x: Option<Predictors<'_>>, train_len: usize) -> Result<EvaluationReport> {
    let train = &y[..train_len];
    let train_x: Option<Vec<Vec<f64>>> = x.map(|x| x.columns.iter().map(|c| c[..train_len.min(c.len())].to_vec()).collect());
    let train_pred = match (&train_x, x) {
        (Some(cols), Some(x)) => Some(Predictors { columns: cols, names: x.names }),
        _ => None,
    };
    let model = match spec {
        ModelSpec::Expert(orders) => expert_select(train, orders, train_pred)?,
        ModelSpec::Fixed(order) => {
            let m = fit_arima(train, *order, train_pred)?;
            prune_predictors(train, m, train_pred)?
        }
    };
    let path = predict_path(&model, y, x)?;
    let half = Z_95 * model.sigma();
    let mut steps = Vec::with_capacity(y.len() - train_len);
    for t in train_len..y.len() {
        let point = path[t].ok_or(Error::MissingExogenous(t))?;
        steps.push(ForecastStep {
            index: t,
            observed: y[t],
            point,
            ucl: point + half,
            lcl: point - half,
        });
    }
    let observed: Vec<f64> = steps.iter().map(|s| s.observed).collect();
    let points: Vec<f64> = steps.iter().map(|s| s.point).collect();
    let (mape, max_ape) = percent_errors(&observed, &points).ok_or(Error::ZeroTarget(train_len))?;
    let hits = steps
        .iter()
        .filter(|s| (s.point - y[s.index - 1]) * (s.observed - y[s.index - 1]) > 0.0)
        .count();
    let direction = 100.0 * hits as f64 / steps.len() as f64;
    Ok(EvaluationReport {
        model: model.label(),
        predictors: model.exog_names.clone(),
        r_squared: model.stats.r_squared,
        mape,
        max_ape,
        direction,
        ljung_box: ljung_box(&model.residuals, LJUNG_BOX_LAGS, model.arma_params()).ok(),
        train_len,
        fit_start: model.fit_start,
        fitted: model.fitted.clone(),
        steps,
    })
}

/// Direction accuracy in percent; a zero product counts as a miss.
pub fn direction_accuracy(previous: &[f64], predicted: &[f64], observed: &[f64]) -> f64 {
    let n = previous.len();
    if n == 0 {
        return 0.0;
    }
    let hits = (0..n)
        .filter(|&i| (predicted[i] - previous[i]) * (observed[i] - previous[i]) > 0.0)
        .count();
    100.0 * hits as f64 / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn ar1(seed: u64, n: usize, phi: f64, mean: f64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut y = Vec::with_capacity(n);
        let mut u = 0.0;
        for _ in 0..n {
            u = phi * u + rng.sample::<f64, _>(StandardNormal);
            y.push(mean + u);
        }
        y
    }

    #[test]
    fn ar1_recovery() {
        let y = ar1(11, 500, 0.7, 0.0);
        let m = fit_arima(&y, ArimaOrder::new(1, 0, 0).unwrap(), None).unwrap();
        let ModelKind::Arima(a) = &m.kind else { panic!() };
        assert!((a.ar[0] - 0.7).abs() < 0.1, "{}", a.ar[0]);
        assert!(a.objective <= a.initial_objective);
    }

    #[test]
    fn fitted_plus_residual_reconstructs() {
        let y: Vec<f64> = ar1(5, 200, 0.5, 50.0).iter().scan(0.0, |s, v| {
            *s += v - 50.0;
            Some(100.0 + *s)
        }).collect();
        for order in ["1,1,1", "2,0,0", "0,2,1"] {
            let m = fit_arima(&y, order.parse().unwrap(), None).unwrap();
            for (i, (f, e)) in m.fitted.iter().zip(&m.residuals).enumerate() {
                assert!((f + e - y[m.fit_start + i]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn random_walk_forecast_is_last_value_plus_drift() {
        let y = [10.0, 11.0, 12.5, 12.0, 14.0, 15.0, 15.5, 17.0, 18.0, 18.5, 20.0, 21.0, 21.5];
        let m = fit_arima(&y, ArimaOrder::new(0, 1, 0).unwrap(), None).unwrap();
        let ModelKind::Arima(a) = &m.kind else { panic!() };
        let w = arima::difference(&y, 1);
        let drift = w.iter().sum::<f64>() / w.len() as f64;
        assert!((a.mu - drift).abs() < 1e-9);
        let f = forecast_one_step(&m, &y, None).unwrap();
        assert!((f.point - (21.5 + drift)).abs() < 1e-9);
        assert!(((f.ucl - f.point) - (f.point - f.lcl)).abs() < 1e-12);
    }

    #[test]
    fn closed_form_one_step() {
        let y = ar1(3, 120, 0.6, 5.0);
        let m = fit_arima(&y, ArimaOrder::new(1, 0, 0).unwrap(), None).unwrap();
        let ModelKind::Arima(a) = &m.kind else { panic!() };
        let f = forecast_one_step(&m, &y, None).unwrap();
        assert!((f.point - (a.mu + a.ar[0] * (y[119] - a.mu))).abs() < 1e-12);

        let wn = fit_arima(&y, ArimaOrder::white_noise(), None).unwrap();
        let ModelKind::Arima(b) = &wn.kind else { panic!() };
        assert!((forecast_one_step(&wn, &y, None).unwrap().point - b.mu).abs() < 1e-12);
    }

    #[test]
    fn exogenous_slope_matches_ols() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x: Vec<f64> = (0..60).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let y: Vec<f64> = x.iter().map(|v| 4.0 + 2.5 * v).collect();
        let names = vec!["bull".to_string()];
        let cols = vec![x.clone()];
        let m = fit_arima(&y, ArimaOrder::white_noise(), Some(Predictors { columns: &cols, names: &names })).unwrap();
        let ModelKind::Arima(a) = &m.kind else { panic!() };
        let ols = crate::stats::ols_dense(&y, &[vec![1.0; 60], x], &["c".into(), "x".into()], true).unwrap();
        assert!((a.exog[0] - ols.coefficients[1]).abs() < 1e-6);
        assert!(m.residuals.iter().all(|e| e.abs() < 1e-6));
    }

    #[test]
    fn missing_future_predictor() {
        let x: Vec<f64> = (0..40).map(|i| (i as f64 * 0.37).sin()).collect();
        let y: Vec<f64> = x.iter().enumerate().map(|(i, v)| 10.0 + v + 0.01 * (i % 3) as f64).collect();
        let names = vec!["x".to_string()];
        let cols = vec![x];
        let pred = Some(Predictors { columns: &cols, names: &names });
        let m = fit_arima(&y, ArimaOrder::white_noise(), pred).unwrap();
        assert!(matches!(forecast_one_step(&m, &y, pred), Err(Error::MissingExogenous(_))));
        assert!(forecast_one_step(&m, &y[..39], pred).is_ok());
    }

    #[test]
    fn one_step_path_matches_repeated_forecasts() {
        let y = ar1(21, 80, 0.4, 20.0);
        let m = fit_arima(&y[..60], ArimaOrder::new(1, 0, 1).unwrap(), None).unwrap();
        let path = predict_path(&m, &y, None).unwrap();
        for t in 60..80 {
            let f = forecast_one_step(&m, &y[..t], None).unwrap();
            assert!((f.point - path[t].unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn constant_series_selects_simple_smoothing() {
        let y = vec![7.0; 40];
        let m = expert_select(&y, &default_orders(), None).unwrap();
        assert_eq!(m.label(), "SimpleES");
        assert_eq!(m.stats.determination, 1.0);
    }

    #[test]
    fn all_candidates_failing() {
        let err = expert_select(&[1.0, 2.0], &default_orders(), None).unwrap_err();
        assert!(matches!(err, Error::AllCandidatesFailed(v) if v.len() == 29));
    }

    #[test]
    fn predictor_pruning() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let x: Vec<f64> = (0..150).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let junk: Vec<f64> = (0..150).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let y: Vec<f64> = x.iter().map(|v| 30.0 + 2.0 * v + 0.3 * rng.sample::<f64, _>(StandardNormal)).collect();
        let names = vec!["x".to_string()];
        let cols = vec![x];
        let m = expert_select(&y, &default_orders(), Some(Predictors { columns: &cols, names: &names })).unwrap();
        assert_eq!(m.exog_names, vec!["x"]);

        let cols = vec![junk];
        let names = vec!["junk".to_string()];
        let ar = ar1(4, 150, 0.6, 30.0);
        let m = fit_arima(&ar, ArimaOrder::new(1, 0, 0).unwrap(), Some(Predictors { columns: &cols, names: &names })).unwrap();
        let pruned = prune_predictors(&ar, m.clone(), Some(Predictors { columns: &cols, names: &names })).unwrap();
        let ModelKind::Arima(a) = &m.kind else { panic!() };
        if (a.exog[0] / a.exog_std_errors[0]).abs() < 1.0 {
            assert!(pruned.exog_names.is_empty());
        } else {
            assert_eq!(pruned.exog_names, vec!["junk"]);
        }
    }

    #[test]
    fn perfect_and_constant_forecast_metrics() {
        let obs = [10.0, 11.0, 12.0, 13.0];
        assert_eq!(percent_errors(&obs, &obs), Some((0.0, 0.0)));
        assert_eq!(direction_accuracy(&[9.0, 10.0, 11.0, 12.0], &obs, &obs), 100.0);
        // a constant forecast equal to the last value never predicts a move
        assert_eq!(direction_accuracy(&[9.0, 10.0, 11.0, 12.0], &[9.0, 10.0, 11.0, 12.0], &obs), 0.0);
        assert_eq!(percent_errors(&[0.0, 1.0], &[1.0, 1.0]), None);
    }

    #[test]
    fn evaluate_guards() {
        let y = ar1(1, 30, 0.5, 10.0);
        assert!(matches!(
            evaluate(&ModelSpec::Expert(default_orders()), &y, None, 0.75),
            Err(Error::Precondition(_))
        ));
        let mut z = ar1(1, 100, 0.5, 10.0);
        z[90] = 0.0;
        assert_eq!(evaluate(&ModelSpec::Expert(default_orders()), &z, None, 0.75), Err(Error::ZeroTarget(90)));
    }

    #[test]
    fn evaluate_reports_are_consistent() {
        let y = ar1(8, 160, 0.6, 100.0);
        let ev = evaluate(&ModelSpec::Expert(default_orders()), &y, None, 0.75).unwrap();
        let r = &ev.without_predictors;
        assert!(r.max_ape >= r.mape && r.mape >= 0.0);
        assert!((0.0..=100.0).contains(&r.direction));
        assert_eq!(r.steps.len(), 40);
        assert_eq!(r.train_len, 120);
        assert!(ev.with_predictors.is_none());
    }

    #[test]
    fn trend_with_vanishing_noise_has_vanishing_mape() {
        let mut prev = f64::INFINITY;
        for noise in [1.0, 0.1, 0.01] {
            let mut rng = ChaCha8Rng::seed_from_u64(2);
            let y: Vec<f64> = (0..100).map(|t| 50.0 + 0.5 * t as f64 + noise * rng.sample::<f64, _>(StandardNormal)).collect();
            let ev = evaluate(&ModelSpec::Fixed(ArimaOrder::new(0, 1, 0).unwrap()), &y, None, 0.75).unwrap();
            let mape = ev.without_predictors.mape;
            assert!(mape < prev);
            prev = mape;
        }
        assert!(prev < 0.05);
    }

    #[test]
    fn seasonal_order_is_stored_with_warning() {
        let y = ar1(2, 80, 0.5, 3.0);
        let order = ArimaOrder::new(1, 0, 0).unwrap().with_seasonal(SeasonalOrder { p: 1, d: 0, q: 0, period: 4 });
        let m = fit_arima(&y, order, None).unwrap();
        assert_eq!(m.order().unwrap().seasonal.unwrap().period, 4);
        assert!(m.warnings.iter().any(|w| w.contains("seasonal")));
    }
}
