//! Auto-regressive one-step prediction fitted by ordinary least squares,
//! with the order picked by the small-sample corrected Akaike criterion.

use crate::geometry::Vec3;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_MAX_ORDER: usize = 4;
pub const DEFAULT_WINDOW: usize = 20;
/// Singular values below this fraction of the largest count as zero.
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PredictorError {
    #[error("series too short: need at least {needed} samples, got {got}")]
    SeriesTooShort { needed: usize, got: usize },
    #[error("history too short: need at least {needed} samples, got {got}")]
    HistoryTooShort { needed: usize, got: usize },
    #[error("design matrix is singular for order {0}")]
    SingularDesign(usize),
    #[error("order must be at least 1")]
    InvalidOrder,
    #[error("series contains non-finite values")]
    NonFinite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArModel {
    pub order: usize,
    /// `coefficients[i]` multiplies the value `i + 1` steps back.
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub residual_variance: f64,
}

impl ArModel {
    pub fn predict_next(&self, history: &[f64]) -> Result<f64, PredictorError> {
        predict_next(self, history)
    }
}

struct OlsFit {
    model: ArModel,
    rss: f64,
    n: usize,
    k: usize,
}

/// Minimum sample count accepted by [`fit_ar`].
pub fn min_series_len(max_order: usize) -> usize {
    2 * max_order + 2
}

/// Fits orders `1..=max_order` on a common sample and keeps the one with the
/// lowest corrected AIC. Ties keep the lower order.
pub fn fit_ar(series: &[f64], max_order: usize) -> Result<ArModel, PredictorError> {
    if max_order == 0 {
        return Err(PredictorError::InvalidOrder);
    }
    let needed = min_series_len(max_order);
    if series.len() < needed {
        return Err(PredictorError::SeriesTooShort { needed, got: series.len() });
    }
    if series.iter().any(|x| !x.is_finite()) {
        return Err(PredictorError::NonFinite);
    }
    if series.iter().all(|x| *x == series[0]) {
        return Ok(constant_model(series[0]));
    }

    let mut best: Option<(f64, OlsFit)> = None;
    for order in 1..=max_order {
        let fit = match ols(series, order, max_order, true) {
            Ok(f) => f,
            Err(_) => match ols(series, order, max_order, false) {
                Ok(f) => f,
                Err(_) => continue,
            },
        };
        let score = aicc(fit.rss, fit.n, fit.k);
        if best.as_ref().is_none_or(|(s, _)| score < *s) {
            best = Some((score, fit));
        }
    }
    match best {
        Some((_, fit)) => Ok(fit.model),
        None => {
            // every lag design is singular; fall back to the sample mean
            let tail = &series[max_order..];
            let mean = tail.iter().sum::<f64>() / tail.len() as f64;
            let rss: f64 = tail.iter().map(|x| (x - mean).powi(2)).sum();
            let mut m = constant_model(mean);
            m.residual_variance = rss / (tail.len() - 1) as f64;
            Ok(m)
        }
    }
}

/// Fits a single order with an intercept on the sample starting at `order`.
/// Falls back to a fit without intercept when the intercept column makes the
/// design singular.
pub fn fit_ar_order(series: &[f64], order: usize) -> Result<ArModel, PredictorError> {
    if order == 0 {
        return Err(PredictorError::InvalidOrder);
    }
    let needed = order + order + 1;
    if series.len() < needed {
        return Err(PredictorError::SeriesTooShort { needed, got: series.len() });
    }
    ols(series, order, order, true)
        .or_else(|_| ols(series, order, order, false))
        .map(|f| f.model)
}

fn constant_model(value: f64) -> ArModel {
    ArModel { order: 1, coefficients: vec![0.0], intercept: value, residual_variance: 0.0 }
}

fn aicc(rss: f64, n: usize, k: usize) -> f64 {
    let n_f = n as f64;
    let denom = n as f64 - k as f64 - 1.0;
    if denom <= 0.0 {
        return f64::INFINITY;
    }
    let sigma2 = (rss / n_f).max(f64::MIN_POSITIVE);
    n_f * sigma2.ln() + 2.0 * k as f64 + 2.0 * (k * (k + 1)) as f64 / denom
}

/// Rows `t = start..len`, columns `[1?, x[t-1], ..., x[t-order]]`.
fn design(series: &[f64], order: usize, start: usize, intercept: bool) -> (DMatrix<f64>, DVector<f64>) {
    let n = series.len() - start;
    let off = usize::from(intercept);
    let x = DMatrix::from_fn(n, order + off, |r, c| {
        if intercept && c == 0 {
            1.0
        } else {
            series[start + r - (c + 1 - off)]
        }
    });
    let y = DVector::from_fn(n, |r, _| series[start + r]);
    (x, y)
}

fn ols(series: &[f64], order: usize, start: usize, intercept: bool) -> Result<OlsFit, PredictorError> {
    let (x, y) = design(series, order, start, intercept);
    let beta = lstsq(&x, &y).ok_or(PredictorError::SingularDesign(order))?;
    let resid = &y - &x * &beta;
    let rss = resid.norm_squared();
    let (n, k) = (x.nrows(), x.ncols());
    let off = usize::from(intercept);
    let model = ArModel {
        order,
        coefficients: beta.iter().skip(off).copied().collect(),
        intercept: if intercept { beta[0] } else { 0.0 },
        residual_variance: if n > k { rss / (n - k) as f64 } else { 0.0 },
    };
    Ok(OlsFit { model, rss, n, k })
}

/// Full-rank least squares through the SVD; `None` when rank deficient.
fn lstsq(x: &DMatrix<f64>, y: &DVector<f64>) -> Option<DVector<f64>> {
    let svd = x.clone().svd(true, true);
    let smax = svd.singular_values.max();
    if smax <= 0.0 || svd.singular_values.iter().any(|s| *s <= RANK_TOL * smax) {
        return None;
    }
    svd.solve(y, 0.0).ok()
}

/// `intercept + sum_i a_i * history[len - i]`.
pub fn predict_next(model: &ArModel, history: &[f64]) -> Result<f64, PredictorError> {
    if history.len() < model.order {
        return Err(PredictorError::HistoryTooShort { needed: model.order, got: history.len() });
    }
    let n = history.len();
    Ok(model.intercept
        + model.coefficients.iter().enumerate().map(|(i, a)| a * history[n - 1 - i]).sum::<f64>())
}

fn fit_and_predict(series: &[f64], max_order: usize) -> Result<f64, PredictorError> {
    let m = fit_ar(series, max_order)?;
    predict_next(&m, series)
}

/// Fits and predicts each Cartesian component independently.
pub fn predict_velocity3(history: &[Vec3], max_order: usize) -> Result<Vec3, PredictorError> {
    let mut out = Vec3::zeros();
    for axis in 0..3 {
        let series: Vec<f64> = history.iter().map(|v| v[axis]).collect();
        out[axis] = fit_and_predict(&series, max_order)?;
    }
    Ok(out)
}

/// Sliding-window predictor used by the planners.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArPredictor {
    pub max_order: usize,
    pub window: usize,
}

impl Default for ArPredictor {
    fn default() -> Self {
        Self { max_order: DEFAULT_MAX_ORDER, window: DEFAULT_WINDOW }
    }
}

impl ArPredictor {
    fn tail<'a, T>(&self, history: &'a [T]) -> &'a [T] {
        &history[history.len().saturating_sub(self.window.max(min_series_len(self.max_order)))..]
    }

    /// One-step prediction over the last `window` samples. Histories too short
    /// to fit repeat the last observation; an empty history predicts zero.
    pub fn predict_scalar(&self, history: &[f64]) -> f64 {
        let tail = self.tail(history);
        match fit_and_predict(tail, self.max_order) {
            Ok(v) => v,
            Err(_) => tail.last().copied().unwrap_or(0.0),
        }
    }

    pub fn predict_vec3(&self, history: &[Vec3]) -> Vec3 {
        let tail = self.tail(history);
        match predict_velocity3(tail, self.max_order) {
            Ok(v) => v,
            Err(_) => tail.last().copied().unwrap_or_else(Vec3::zeros),
        }
    }
}
