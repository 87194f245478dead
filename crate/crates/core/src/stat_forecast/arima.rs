//! ARIMA(p, d, q) estimation by conditional sum of squares, grid order
//! selection by AIC, and multi-step forecasting.

use chrono::NaiveDate;
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::simplex::{minimize, SimplexOptions};
use crate::error::{Error, Result};
use crate::forecast::{next_weekdays, ForecastSeries};
use crate::ingest::Component;
use crate::stats;

pub const MAX_P: usize = 5;
pub const MAX_Q: usize = 2;

/// Whether the model is fitted on prices or on their natural logarithm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum PriceScale {
    #[default]
    Level,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Order {
    pub p: usize,
    pub d: usize,
    pub q: usize,
}

impl std::fmt::Display for Order {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{},{})", self.p, self.d, self.q)
    }
}

/// A fitted ARIMA model. The ARMA part acts on the `d`-times differenced
/// series `w` through `z_t = w_t - intercept`:
/// `z_t = sum phi_i z_{t-i} + e_t + sum theta_j e_{t-j}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArimaModel {
    pub order: Order,
    pub scale: PriceScale,
    pub ar: Vec<f64>,
    pub ma: Vec<f64>,
    /// Mean of the differenced series.
    pub intercept: f64,
    pub sigma2: f64,
    /// `N ln(SSE / N) + 2 (p + q + 1)` over the `N` conditioned residuals.
    pub aic: f64,
    pub css: f64,
    pub n_residuals: usize,
    pub stationary: bool,
    pub invertible: bool,
    pub evaluations: usize,
}

/// Applies the difference operator `d` times.
pub fn difference(series: &[f64], d: usize) -> Result<Vec<f64>> {
    if series.len() <= d {
        return Err(Error::Size {
            what: "observations to difference",
            needed: d + 1,
            got: series.len(),
        });
    }
    let mut out = series.to_vec();
    for _ in 0..d {
        out = out.windows(2).map(|w| w[1] - w[0]).collect();
    }
    Ok(out)
}

/// One-step residuals of the ARMA recursion for `z = w - intercept`,
/// with residuals and pre-sample values before `start` taken as zero.
pub(crate) fn css_residuals(w: &[f64], intercept: f64, ar: &[f64], ma: &[f64], start: usize) -> Vec<f64> {
    let mut e = vec![0.0; w.len()];
    for t in start..w.len() {
        let mut pred = 0.0;
        for (i, phi) in ar.iter().enumerate() {
            pred += phi * (w[t - i - 1] - intercept);
        }
        for (j, theta) in ma.iter().enumerate() {
            if t > j {
                pred += theta * e[t - j - 1];
            }
        }
        e[t] = w[t] - intercept - pred;
    }
    e
}

/// CSS objective for the packed parameter vector `[intercept, ar.., ma..]`.
pub fn css_objective(w: &[f64], params: &[f64], p: usize, q: usize, start: usize, with_intercept: bool) -> f64 {
    let (intercept, rest) = if with_intercept { (params[0], &params[1..]) } else { (0.0, params) };
    let e = css_residuals(w, intercept, &rest[..p], &rest[p..p + q], start);
    e[start..].iter().map(|v| v * v).sum()
}

/// True when all roots of `1 - sum c_i z^i` lie outside the unit circle,
/// i.e. the companion matrix of `c` has spectral radius below one.
fn roots_outside_unit_circle(coefs: &[f64]) -> bool {
    match coefs.len() {
        0 => true,
        1 => coefs[0].abs() < 1.0,
        n => {
            let companion = DMatrix::from_fn(n, n, |r, c| if r == 0 { coefs[c] } else if r == c + 1 { 1.0 } else { 0.0 });
            companion.complex_eigenvalues().iter().all(|ev| ev.norm() < 1.0)
        }
    }
}

#[derive(Debug, Clone)]
pub struct FitOptions {
    pub with_intercept: bool,
    /// First residual index entering the objective; defaults to `p`. A grid
    /// search sets this to the largest `p` so that all models share a sample.
    pub condition_on: Option<usize>,
    pub simplex: SimplexOptions,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            with_intercept: true,
            condition_on: None,
            simplex: SimplexOptions::default(),
        }
    }
}

/// Fits ARMA(p, q) by CSS to an already differenced series `w`.
/// Coefficients start at zero (intercept at the sample mean) and are refined
/// by a Nelder-Mead simplex.
pub fn fit_arma_css(w: &[f64], p: usize, q: usize, opts: &FitOptions) -> Result<ArimaModel> {
    let k = p + q + 1;
    if w.len() < 10 * k {
        return Err(Error::Size {
            what: "observations for ARMA fit",
            needed: 10 * k,
            got: w.len(),
        });
    }
    let start = opts.condition_on.unwrap_or(p).max(p);
    let n = w.len() - start;
    let mean = stats::mean(w);
    let spread = stats::std_dev(w, 0).max(1e-8);
    let mut x0 = Vec::with_capacity(k);
    let mut steps = Vec::with_capacity(k);
    if opts.with_intercept {
        x0.push(mean);
        steps.push(0.1 * spread);
    }
    x0.extend(std::iter::repeat_n(0.0, p + q));
    steps.extend(std::iter::repeat_n(0.1, p + q));

    let objective = |params: &[f64]| css_objective(w, params, p, q, start, opts.with_intercept);
    let result = minimize(objective, &x0, &steps, &opts.simplex);
    if !result.converged {
        return Err(Error::Convergence {
            evaluations: result.evaluations,
            best_objective: result.f,
            best_params: result.x,
        });
    }
    let params = result.x;
    let (intercept, rest) = if opts.with_intercept { (params[0], &params[1..]) } else { (0.0, &params[..]) };
    let ar = rest[..p].to_vec();
    let ma = rest[p..].to_vec();
    let sse = result.f;
    if !(sse > 0.0) {
        return Err(Error::Numerical(format!("degenerate CSS objective {sse}")));
    }
    let aic = n as f64 * (sse / n as f64).ln() + 2.0 * k as f64;
    let neg_ma: Vec<f64> = ma.iter().map(|t| -t).collect();
    Ok(ArimaModel {
        order: Order { p, d: 0, q },
        scale: PriceScale::Level,
        stationary: roots_outside_unit_circle(&ar),
        invertible: roots_outside_unit_circle(&neg_ma),
        ar,
        ma,
        intercept,
        sigma2: sse / n as f64,
        aic,
        css: sse,
        n_residuals: n,
        evaluations: result.evaluations,
    })
}

fn transform(series: &[f64], scale: PriceScale) -> Result<Vec<f64>> {
    match scale {
        PriceScale::Level => Ok(series.to_vec()),
        PriceScale::Log => {
            if series.iter().any(|&v| !(v > 0.0)) {
                return Err(Error::Domain("log scale needs positive prices".into()));
            }
            Ok(series.iter().map(|v| v.ln()).collect())
        }
    }
}

/// Fits ARIMA(p, d, q) to a price series.
pub fn fit_arima(series: &[f64], order: Order, scale: PriceScale, opts: &FitOptions) -> Result<ArimaModel> {
    let w = difference(&transform(series, scale)?, order.d)?;
    let mut model = fit_arma_css(&w, order.p, order.q, opts)?;
    model.order.d = order.d;
    model.scale = scale;
    Ok(model)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AicCell {
    pub order: Order,
    pub aic: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutoArima {
    pub best: ArimaModel,
    pub table: Vec<AicCell>,
}

impl AutoArima {
    pub fn table_csv(&self) -> String {
        let mut out = String::from("p,d,q,aic,error\n");
        for cell in &self.table {
            let aic = cell.aic.map(|a| a.to_string()).unwrap_or_default();
            let err = cell.error.as_deref().unwrap_or("").replace(',', ";");
            out.push_str(&format!("{},{},{},{aic},{err}\n", cell.order.p, cell.order.d, cell.order.q));
        }
        out
    }
}

/// Exhaustive AIC search over `p in p_range`, `q in q_range` at fixed `d`.
/// All candidates are conditioned on the same residual sample.
pub fn auto_arima(
    series: &[f64],
    p_range: std::ops::RangeInclusive<usize>,
    q_range: std::ops::RangeInclusive<usize>,
    d: usize,
    scale: PriceScale,
) -> Result<AutoArima> {
    let orders: Vec<Order> = p_range
        .clone()
        .flat_map(|p| q_range.clone().map(move |q| Order { p, d, q }))
        .collect();
    if orders.is_empty() {
        return Err(Error::Argument("empty ARIMA order grid".into()));
    }
    let opts = FitOptions {
        condition_on: Some(*p_range.end()),
        ..FitOptions::default()
    };
    let fits: Vec<Result<ArimaModel>> = orders.par_iter().map(|&o| fit_arima(series, o, scale, &opts)).collect();

    let mut table = Vec::with_capacity(orders.len());
    let mut best: Option<ArimaModel> = None;
    for (order, fit) in orders.iter().zip(fits) {
        match fit {
            Ok(model) => {
                table.push(AicCell {
                    order: *order,
                    aic: Some(model.aic),
                    error: None,
                });
                if best.as_ref().is_none_or(|b| model.aic < b.aic) {
                    best = Some(model);
                }
            }
            Err(e) => table.push(AicCell {
                order: *order,
                aic: None,
                error: Some(e.to_string()),
            }),
        }
    }
    match best {
        Some(best) => Ok(AutoArima { best, table }),
        None => Err(Error::AllFailed(
            table.iter().filter_map(|c| c.error.as_ref().map(|e| format!("{}: {e}", c.order))).collect::<Vec<_>>().join("; "),
        )),
    }
}

/// Point forecasts of the next `horizon` prices after `history`.
pub fn arima_forecast_values(model: &ArimaModel, history: &[f64], horizon: usize) -> Result<Vec<f64>> {
    if horizon == 0 {
        return Err(Error::Argument("forecast horizon must be at least 1".into()));
    }
    let d = model.order.d;
    let levels = transform(history, model.scale)?;
    let w = difference(&levels, d)?;
    if w.len() < model.order.p {
        return Err(Error::Size {
            what: "history for ARIMA forecast",
            needed: model.order.p + d,
            got: history.len(),
        });
    }
    let mut e = css_residuals(&w, model.intercept, &model.ar, &model.ma, model.order.p);
    let mut z: Vec<f64> = w.iter().map(|v| v - model.intercept).collect();
    let mut diffs = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let t = z.len();
        let mut next = 0.0;
        for (i, phi) in model.ar.iter().enumerate() {
            next += phi * z[t - i - 1];
        }
        for (j, theta) in model.ma.iter().enumerate() {
            if t > j {
                next += theta * e[t - j - 1];
            }
        }
        z.push(next);
        e.push(0.0);
        diffs.push(next + model.intercept);
    }

    // Undo differencing: keep the last value of every intermediate order.
    let mut tails = Vec::with_capacity(d);
    let mut cur = levels;
    for _ in 0..d {
        tails.push(*cur.last().unwrap());
        cur = cur.windows(2).map(|p| p[1] - p[0]).collect();
    }
    let mut path = diffs;
    for tail in tails.into_iter().rev() {
        let mut acc = tail;
        for v in path.iter_mut() {
            acc += *v;
            *v = acc;
        }
    }
    Ok(match model.scale {
        PriceScale::Level => path,
        PriceScale::Log => path.into_iter().map(f64::exp).collect(),
    })
}

/// Forecast dated on the weekdays after `last_date`.
pub fn arima_forecast(model: &ArimaModel, history: &[f64], last_date: NaiveDate, horizon: usize) -> Result<ForecastSeries> {
    let values = arima_forecast_values(model, history, horizon)?;
    ForecastSeries::single(
        format!("ARIMA{}", model.order),
        next_weekdays(last_date, horizon),
        Component::Close,
        values,
    )
}
