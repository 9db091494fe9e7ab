//! Weekly market-direction classifier: a linear soft-margin SVM on
//! standardized prior-week sentiment features, plus confusion matrix and ROC.
//!
//! The solver is dual coordinate ascent on the hinge-loss dual with the bias
//! folded in as a constant feature, so the bias is regularized with the weights.

use std::fmt;

use chrono::NaiveDate;

use crate::error::{Error, Result};

pub const DUAL_TOL: f64 = 1e-6;
pub const MAX_SWEEPS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Up,
    Down,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Up => 1.0,
            Direction::Down => -1.0,
        }
    }

    /// 1 for up, 0 for down.
    pub fn as_int(self) -> u8 {
        match self {
            Direction::Up => 1,
            Direction::Down => 0,
        }
    }

    /// A zero return is labeled up.
    pub fn from_return(r: f64) -> Self {
        if r >= 0.0 {
            Direction::Up
        } else {
            Direction::Down
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Direction::Up => Direction::Down,
            Direction::Down => Direction::Up,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Up => "up",
            Direction::Down => "down",
        })
    }
}

impl std::str::FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "up" | "1" => Ok(Direction::Up),
            "down" | "0" => Ok(Direction::Down),
            other => Err(Error::InvalidInput(format!("unknown direction '{other}' (expected up/down or 1/0)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledWeek {
    pub date: NaiveDate,
    pub features: Vec<f64>,
    pub label: Direction,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    /// Weights on standardized features.
    pub w: Vec<f64>,
    pub b: f64,
    pub c: f64,
    pub mean: Vec<f64>,
    /// Population standard deviation; constant features get scale 1.
    pub scale: Vec<f64>,
    pub support_vectors: usize,
    /// Primal objective ½‖(w, b)‖² + C Σ hinge at the solution.
    pub objective: f64,
    /// Dual objective after each sweep.
    pub dual_trace: Vec<f64>,
}

impl SvmModel {
    pub fn standardize(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.mean).zip(&self.scale).map(|((v, m), s)| (v - m) / s).collect()
    }

    pub fn decision(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.w.len() {
            return Err(Error::LengthMismatch {
                expected: self.w.len(),
                actual: x.len(),
            });
        }
        let z = self.standardize(x);
        Ok(z.iter().zip(&self.w).map(|(a, b)| a * b).sum::<f64>() + self.b)
    }
}

fn check_rows(data: &[LabeledWeek]) -> Result<usize> {
    let dim = data.first().map_or(0, |r| r.features.len());
    for (i, row) in data.iter().enumerate() {
        if row.features.len() != dim {
            return Err(Error::LengthMismatch {
                expected: dim,
                actual: row.features.len(),
            });
        }
        if row.features.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteFeature(i));
        }
    }
    Ok(dim)
}

pub fn train_svm(data: &[LabeledWeek], c: f64) -> Result<SvmModel> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Precondition(format!("C must be positive, got {c}")));
    }
    let dim = check_rows(data)?;
    let ups = data.iter().filter(|r| r.label == Direction::Up).count();
    let downs = data.len() - ups;
    if ups == 0 || downs == 0 {
        let only = if ups == 0 { "down" } else { "up" };
        return Err(Error::SingleClass(format!("training set is all {only}")));
    }
    if ups < 2 || downs < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            available: ups.min(downs),
        });
    }

    let n = data.len() as f64;
    let mean: Vec<f64> = (0..dim).map(|j| data.iter().map(|r| r.features[j]).sum::<f64>() / n).collect();
    let scale: Vec<f64> = (0..dim)
        .map(|j| {
            let var = data.iter().map(|r| (r.features[j] - mean[j]).powi(2)).sum::<f64>() / n;
            if var > 0.0 {
                var.sqrt()
            } else {
                1.0
            }
        })
        .collect();

    // augmented standardized rows: [z, 1]
    let x: Vec<Vec<f64>> = data
        .iter()
        .map(|r| {
            let mut z: Vec<f64> = r.features.iter().zip(&mean).zip(&scale).map(|((v, m), s)| (v - m) / s).collect();
            z.push(1.0);
            z
        })
        .collect();
    let y: Vec<f64> = data.iter().map(|r| r.label.sign()).collect();
    let qii: Vec<f64> = x.iter().map(|xi| xi.iter().map(|v| v * v).sum()).collect();

    let mut alpha = vec![0.0; data.len()];
    let mut w = vec![0.0; dim + 1];
    let dual = |alpha: &[f64], w: &[f64]| alpha.iter().sum::<f64>() - 0.5 * w.iter().map(|v| v * v).sum::<f64>();
    let mut trace = vec![0.0];
    for _ in 0..MAX_SWEEPS {
        for i in 0..data.len() {
            let g = y[i] * dot(&w, &x[i]) - 1.0;
            let new = (alpha[i] - g / qii[i]).clamp(0.0, c);
            let delta = new - alpha[i];
            if delta != 0.0 {
                alpha[i] = new;
                for (wj, xj) in w.iter_mut().zip(&x[i]) {
                    *wj += delta * y[i] * xj;
                }
            }
        }
        let d = dual(&alpha, &w);
        let prev = *trace.last().unwrap();
        trace.push(d);
        if (d - prev).abs() < DUAL_TOL {
            break;
        }
    }
    if trace.len() > MAX_SWEEPS {
        log::warn!("SVM solver hit the {MAX_SWEEPS}-sweep cap");
    }

    let hinge: f64 = x.iter().zip(&y).map(|(xi, yi)| (1.0 - yi * dot(&w, xi)).max(0.0)).sum();
    let objective = 0.5 * w.iter().map(|v| v * v).sum::<f64>() + c * hinge;
    let b = w.pop().unwrap();
    Ok(SvmModel {
        w,
        b,
        c,
        mean,
        scale,
        support_vectors: alpha.iter().filter(|a| **a > 0.0).count(),
        objective,
        dual_trace: trace,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Label and decision value; a zero margin maps to up.
pub fn predict(model: &SvmModel, features: &[f64]) -> Result<(Direction, f64)> {
    let m = model.decision(features)?;
    Ok((Direction::from_return(m), m))
}

/// Percentages of the total test count; "positive" is up.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfusionMatrix {
    pub up_as_up: f64,
    pub up_as_down: f64,
    pub down_as_up: f64,
    pub down_as_down: f64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> f64 {
        self.up_as_up + self.up_as_down + self.down_as_up + self.down_as_down
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    /// (false positive rate, true positive rate), from (0,0) to (1,1).
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationReport {
    pub confusion: ConfusionMatrix,
    pub accuracy: f64,
    pub roc: RocCurve,
    pub predictions: Vec<(NaiveDate, Direction, f64)>,
}

/// ROC by sweeping the threshold down through the distinct margins; AUC by
/// the trapezoid rule (tied margins contribute a diagonal segment).
pub fn roc_curve(margins: &[f64], labels: &[Direction]) -> Result<RocCurve> {
    if margins.len() != labels.len() {
        return Err(Error::LengthMismatch {
            expected: labels.len(),
            actual: margins.len(),
        });
    }
    if let Some(i) = margins.iter().position(|m| !m.is_finite()) {
        return Err(Error::NonFiniteFeature(i));
    }
    let pos = labels.iter().filter(|l| **l == Direction::Up).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClass("ROC needs both classes in the test set".into()));
    }
    let mut order: Vec<usize> = (0..margins.len()).collect();
    order.sort_by(|&a, &b| margins[b].total_cmp(&margins[a]));
    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut auc = 0.0;
    let mut i = 0;
    while i < order.len() {
        let m = margins[order[i]];
        while i < order.len() && margins[order[i]] == m {
            match labels[order[i]] {
                Direction::Up => tp += 1,
                Direction::Down => fp += 1,
            }
            i += 1;
        }
        let (x0, y0) = *points.last().unwrap();
        let pt = (fp as f64 / neg as f64, tp as f64 / pos as f64);
        auc += (pt.0 - x0) * (pt.1 + y0) / 2.0;
        points.push(pt);
    }
    Ok(RocCurve { points, auc })
}

/// Confusion matrix (percent), accuracy (percent), and ROC from margins.
pub fn report_from_margins(margins: &[f64], labels: &[Direction]) -> Result<(ConfusionMatrix, f64, RocCurve)> {
    let roc = roc_curve(margins, labels)?;
    let n = labels.len() as f64;
    let mut counts = [[0usize; 2]; 2];
    for (m, l) in margins.iter().zip(labels) {
        let pred = Direction::from_return(*m);
        counts[(*l == Direction::Down) as usize][(pred == Direction::Down) as usize] += 1;
    }
    let pct = |c: usize| 100.0 * c as f64 / n;
    let confusion = ConfusionMatrix {
        up_as_up: pct(counts[0][0]),
        up_as_down: pct(counts[0][1]),
        down_as_up: pct(counts[1][0]),
        down_as_down: pct(counts[1][1]),
    };
    let accuracy = pct(counts[0][0] + counts[1][1]);
    Ok((confusion, accuracy, roc))
}

pub fn confusion_and_roc(model: &SvmModel, test: &[LabeledWeek]) -> Result<ClassificationReport> {
    if test.is_empty() {
        return Err(Error::InsufficientData { needed: 1, available: 0 });
    }
    let mut predictions = Vec::with_capacity(test.len());
    for row in test {
        let (label, margin) = predict(model, &row.features)?;
        predictions.push((row.date, label, margin));
    }
    let margins: Vec<f64> = predictions.iter().map(|p| p.2).collect();
    let labels: Vec<Direction> = test.iter().map(|r| r.label).collect();
    let (confusion, accuracy, roc) = report_from_margins(&margins, &labels)?;
    Ok(ClassificationReport {
        confusion,
        accuracy,
        roc,
        predictions,
    })
}
