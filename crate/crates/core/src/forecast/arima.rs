//! ARIMA with exogenous regressors, estimated by conditional sum of squares.
//!
//! The model is a regression with ARMA errors on the differenced scale:
//!
//! ```text
//! w_t = Δ^d y_t,  z_t = Δ^d x_t
//! u_t = w_t - μ - β'z_t
//! u_t = φ_1 u_{t-1} + ... + φ_p u_{t-p} + e_t + θ_1 e_{t-1} + ... + θ_q e_{t-q}
//! ```
//!
//! Errors before the first `p` differenced observations are taken as zero.

use crate::error::{Error, Result};
use crate::stats::least_squares;

const MAX_ITER: usize = 500;
const REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SeasonalOrder {
    pub p: usize,
    pub d: usize,
    pub q: usize,
    pub period: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ArimaOrder {
    pub p: usize,
    pub d: usize,
    pub q: usize,
    /// Stored for reporting; estimation ignores it.
    pub seasonal: Option<SeasonalOrder>,
}

impl ArimaOrder {
    pub fn new(p: usize, d: usize, q: usize) -> Result<Self> {
        if p > 5 || q > 5 || d > 2 {
            return Err(Error::InvalidInput(format!("order ({p},{d},{q}) outside p,q <= 5, d <= 2")));
        }
        if p + q == 0 && d == 0 {
            return Err(Error::InvalidInput("order (0,0,0) is the white-noise model; use ArimaOrder::white_noise".into()));
        }
        Ok(Self { p, d, q, seasonal: None })
    }

    /// The null model: constant mean plus exogenous terms.
    pub fn white_noise() -> Self {
        Self {
            p: 0,
            d: 0,
            q: 0,
            seasonal: None,
        }
    }

    pub fn with_seasonal(mut self, seasonal: SeasonalOrder) -> Self {
        self.seasonal = Some(seasonal);
        self
    }

    pub fn is_white_noise(&self) -> bool {
        self.p == 0 && self.d == 0 && self.q == 0
    }
}

impl std::fmt::Display for ArimaOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ARIMA({},{},{})", self.p, self.d, self.q)?;
        if let Some(s) = self.seasonal {
            write!(f, "({},{},{})[{}]", s.p, s.d, s.q, s.period)?;
        }
        Ok(())
    }
}

impl std::str::FromStr for ArimaOrder {
    type Err = Error;

    /// Parses `p,d,q` or `(p,d,q)`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().trim_matches(|c| c == '(' || c == ')').split(',').collect();
        let nums: Vec<usize> = parts
            .iter()
            .map(|p| p.trim().parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::InvalidInput(format!("bad ARIMA order '{s}'")))?;
        match nums.as_slice() {
            [0, 0, 0] => Ok(ArimaOrder::white_noise()),
            [p, d, q] => ArimaOrder::new(*p, *d, *q),
            _ => Err(Error::InvalidInput(format!("bad ARIMA order '{s}' (expected p,d,q)"))),
        }
    }
}

/// Estimated ARIMA coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct ArimaParams {
    pub order: ArimaOrder,
    /// Mean of the differenced series (drift when d >= 1).
    pub mu: f64,
    pub ar: Vec<f64>,
    pub ma: Vec<f64>,
    pub exog: Vec<f64>,
    pub exog_std_errors: Vec<f64>,
    /// CSS objective at the initial point and at the solution.
    pub initial_objective: f64,
    pub objective: f64,
    pub iterations: usize,
}

impl ArimaParams {
    pub(crate) fn packed(&self) -> Vec<f64> {
        let mut v = vec![self.mu];
        v.extend(&self.ar);
        v.extend(&self.ma);
        v.extend(&self.exog);
        v
    }

    pub fn n_params(&self) -> usize {
        1 + self.ar.len() + self.ma.len() + self.exog.len()
    }

    /// True when all roots of the AR polynomial lie outside the unit circle.
    pub fn is_stationary(&self) -> bool {
        ar_is_stationary(&self.ar, 1e-6)
    }
}

/// Step-down (Schur-Cohn) check: every reflection coefficient must be
/// inside the unit interval, with `tol` slack.
pub fn ar_is_stationary(ar: &[f64], tol: f64) -> bool {
    let mut a = ar.to_vec();
    while let Some(&k) = a.last() {
        if k.abs() >= 1.0 - tol {
            return false;
        }
        let m = a.len();
        let denom = 1.0 - k * k;
        let next: Vec<f64> = (0..m - 1).map(|j| (a[j] + k * a[m - 2 - j]) / denom).collect();
        a = next;
    }
    true
}

/// Apply `d` first differences.
pub fn difference(v: &[f64], d: usize) -> Vec<f64> {
    let mut out = v.to_vec();
    for _ in 0..d {
        out = out.windows(2).map(|w| w[1] - w[0]).collect();
    }
    out
}

/// Undo `d` differences for one step: y_{t} from w_t and the preceding levels.
pub fn integrate_step(w: f64, previous_levels: &[f64], d: usize) -> f64 {
    let n = previous_levels.len();
    match d {
        0 => w,
        1 => w + previous_levels[n - 1],
        2 => w + 2.0 * previous_levels[n - 1] - previous_levels[n - 2],
        _ => unreachable!("d <= 2 is enforced by ArimaOrder"),
    }
}

/// Conditional residuals for the differenced target `w` and differenced
/// regressors `z` (one vector per regressor). Entry `i` is the residual at
/// differenced position `i`; positions before `p` are `None`.
pub(crate) fn css_residuals(params: &[f64], p: usize, q: usize, w: &[f64], z: &[Vec<f64>]) -> Vec<Option<f64>> {
    let mu = params[0];
    let ar = &params[1..1 + p];
    let ma = &params[1 + p..1 + p + q];
    let beta = &params[1 + p + q..];
    let n = w.len();
    let u: Vec<f64> = (0..n)
        .map(|i| w[i] - mu - beta.iter().zip(z).map(|(b, col)| b * col[i]).sum::<f64>())
        .collect();
    let mut e = vec![0.0; n];
    let mut out = vec![None; n];
    for i in p..n {
        let mut pred = 0.0;
        for (j, phi) in ar.iter().enumerate() {
            pred += phi * u[i - 1 - j];
        }
        for (j, theta) in ma.iter().enumerate() {
            if i > j {
                pred += theta * e[i - 1 - j];
            }
        }
        e[i] = u[i] - pred;
        out[i] = Some(e[i]);
    }
    out
}

/// One-step prediction of u at position `n` (just past the end) from the
/// filtered history.
pub(crate) fn css_next_u(params: &[f64], p: usize, q: usize, w: &[f64], z: &[Vec<f64>]) -> f64 {
    let mu = params[0];
    let ar = &params[1..1 + p];
    let ma = &params[1 + p..1 + p + q];
    let beta = &params[1 + p + q..];
    let n = w.len();
    let e = css_residuals(params, p, q, w, z);
    let u = |i: usize| w[i] - mu - beta.iter().zip(z).map(|(b, col)| b * col[i]).sum::<f64>();
    let mut pred = 0.0;
    for (j, phi) in ar.iter().enumerate() {
        if n > j {
            pred += phi * u(n - 1 - j);
        }
    }
    for (j, theta) in ma.iter().enumerate() {
        if n > j {
            pred += theta * e[n - 1 - j].unwrap_or(0.0);
        }
    }
    pred
}

fn objective(params: &[f64], p: usize, q: usize, w: &[f64], z: &[Vec<f64>]) -> (f64, Vec<f64>) {
    let e: Vec<f64> = css_residuals(params, p, q, w, z).into_iter().flatten().collect();
    let sse = e.iter().map(|v| v * v).sum::<f64>();
    (if sse.is_finite() { sse } else { f64::INFINITY }, e)
}

/// Fit by Levenberg-Marquardt on the CSS objective, starting from zero
/// coefficients and μ at the sample mean of `w`.
pub fn fit_css(order: ArimaOrder, w: &[f64], z: &[Vec<f64>]) -> Result<ArimaParams> {
    let (p, q) = (order.p, order.q);
    let k = 1 + p + q + z.len();
    let needed = 10 + p + q + z.len();
    if w.len() < needed {
        return Err(Error::InsufficientData {
            needed,
            available: w.len(),
        });
    }
    let mean = w.iter().sum::<f64>() / w.len() as f64;
    if w.iter().all(|v| *v == w[0]) {
        return Err(Error::DegenerateVariance("differenced target is constant".into()));
    }
    let mut theta = vec![0.0; k];
    theta[0] = mean;
    let (mut obj, mut resid) = objective(&theta, p, q, w, z);
    let initial_objective = obj;
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    let names: Vec<String> = (0..k).map(|i| format!("param{i}")).collect();

    while iterations < MAX_ITER {
        iterations += 1;
        if obj == 0.0 {
            converged = true;
            break;
        }
        let jac = jacobian(&theta, &resid, p, q, w, z);
        // Normal equations J'J δ = -J'e with Marquardt damping.
        let mut jtj = vec![vec![0.0; k]; k];
        let mut jte = vec![0.0; k];
        for a in 0..k {
            for b in a..k {
                let s: f64 = jac[a].iter().zip(&jac[b]).map(|(x, y)| x * y).sum();
                jtj[a][b] = s;
                jtj[b][a] = s;
            }
            jte[a] = jac[a].iter().zip(&resid).map(|(x, y)| x * y).sum();
        }
        let grad_inf = jte.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        if grad_inf <= 1e-12 * (1.0 + obj) {
            converged = true;
            break;
        }
        let mut improved = false;
        while lambda < 1e16 {
            let mut a = jtj.clone();
            for (i, row) in a.iter_mut().enumerate() {
                row[i] += lambda * (jtj[i][i].max(1e-12));
            }
            let Some(step) = solve_spd(&a, &jte) else {
                lambda *= 10.0;
                continue;
            };
            let cand: Vec<f64> = theta.iter().zip(&step).map(|(t, s)| t - s).collect();
            let (cand_obj, cand_resid) = objective(&cand, p, q, w, z);
            if cand_obj < obj {
                let rel = (obj - cand_obj) / obj.max(f64::MIN_POSITIVE);
                let step_small = step.iter().zip(&theta).all(|(s, t)| s.abs() <= 1e-10 * (1.0 + t.abs()));
                theta = cand;
                obj = cand_obj;
                resid = cand_resid;
                lambda = (lambda / 10.0).max(1e-12);
                improved = true;
                if rel < REL_TOL || step_small {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            // no descent direction left at any damping: a stationary point
            converged = true;
        }
        if converged {
            break;
        }
    }
    if !converged {
        return Err(Error::NonConvergence {
            iterations,
            best_objective: obj,
        });
    }

    let n_e = resid.len();
    let dof = n_e.saturating_sub(k).max(1) as f64;
    let sigma2 = obj / dof;
    let jac = jacobian(&theta, &resid, p, q, w, z);
    let exog_std_errors = match least_squares(&resid, &jac, &names) {
        Ok(ls) => ls.xtx_inv_diag[1 + p + q..].iter().map(|d| (d * sigma2).sqrt()).collect(),
        Err(_) => vec![f64::INFINITY; z.len()],
    };
    Ok(ArimaParams {
        order,
        mu: theta[0],
        ar: theta[1..1 + p].to_vec(),
        ma: theta[1 + p..1 + p + q].to_vec(),
        exog: theta[1 + p + q..].to_vec(),
        exog_std_errors,
        initial_objective,
        objective: obj,
        iterations,
    })
}

/// Forward-difference Jacobian of the residual vector, one column per parameter.
fn jacobian(theta: &[f64], resid: &[f64], p: usize, q: usize, w: &[f64], z: &[Vec<f64>]) -> Vec<Vec<f64>> {
    (0..theta.len())
        .map(|j| {
            let h = 1e-7 * (1.0 + theta[j].abs());
            let mut bumped = theta.to_vec();
            bumped[j] += h;
            let (_, e) = objective(&bumped, p, q, w, z);
            e.iter().zip(resid).map(|(a, b)| (a - b) / h).collect()
        })
        .collect()
}

/// Cholesky solve; `None` if the matrix is not positive definite.
fn solve_spd(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = a[i][j] - (0..j).map(|k| l[i][k] * l[j][k]).sum::<f64>();
            if i == j {
                if !(s > 0.0) {
                    return None;
                }
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        y[i] = (b[i] - (0..i).map(|k| l[i][k] * y[k]).sum::<f64>()) / l[i][i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        x[i] = (y[i] - (i + 1..n).map(|k| l[k][i] * x[k]).sum::<f64>()) / l[i][i];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}
