use serde::{Deserialize, Serialize};

use super::grid::{grid_search, GridReport, HyperGrid};
use super::mlp::{mlp_forward, MlpModel};
use super::train::{make_windows, train, TrainConfig};
use crate::error::{Error, Result};
use crate::forecast::{next_weekdays, ForecastSeries};
use crate::ingest::{Component, MinMaxScaler, PriceSeries};

pub const DEFAULT_HORIZON: usize = 30;

/// Outcome of [`fit_component`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FittedComponent {
    pub model: MlpModel,
    pub grid: GridReport,
    pub loss_history: Vec<f64>,
}

/// Fits the scaler on `train` prices, grid-searches hyper-parameters and
/// retrains the winning configuration on every training pair.
pub fn fit_component(train_series: &PriceSeries, component: Component, lags: usize, grid: &HyperGrid, base: &TrainConfig) -> Result<FittedComponent> {
    let raw = train_series.component(component);
    let scaler = MinMaxScaler::fit(&raw)?;
    let pairs = make_windows(&scaler.transform(&raw), lags)?;
    let template = MlpModel::new(lags, base.dropout, scaler, component, base.seed)?;
    let report = grid_search(&template, &pairs, grid, base)?;
    let (model, loss_history) = train(template, &pairs, report.best())?;
    Ok(FittedComponent {
        model,
        grid: report,
        loss_history,
    })
}

fn model_id(models: &[&MlpModel], mode: &str) -> String {
    let lags = models.first().map_or(0, |m| m.lags);
    format!("MLP(t={lags},{mode})")
}

/// One-step-ahead predictions of the last `horizon` bars of `actual`, each
/// from the `t` true values before it.
pub fn forecast_validation(model: &MlpModel, actual: &PriceSeries, horizon: usize) -> Result<ForecastSeries> {
    let values = actual.component(model.component);
    crate::error::ensure_len("bars for one-step validation", horizon + model.lags, values.len())?;
    let start = values.len() - horizon;
    let preds = (start..values.len())
        .map(|i| model.predict_price(&values[i - model.lags..i]))
        .collect::<Result<Vec<_>>>()?;
    let dates = actual.dates()[start..].to_vec();
    ForecastSeries::single(model_id(&[model], "one-step"), dates, model.component, preds)
}

/// Autoregressive path of length `horizon`: each step sees the last `lags`
/// values of `seed` followed by the predictions so far.
pub fn recursive_path(seed: &[f64], lags: usize, horizon: usize, mut step: impl FnMut(&[f64]) -> Result<f64>) -> Result<Vec<f64>> {
    crate::error::ensure_len("seed values for recursion", lags, seed.len())?;
    let mut buffer = seed[seed.len() - lags..].to_vec();
    for _ in 0..horizon {
        let next = step(&buffer[buffer.len() - lags..])?;
        buffer.push(next);
    }
    Ok(buffer.split_off(lags))
}

/// Four-component recursive forecast following the last bar of `seed`.
/// Each component is fed only its own predictions.
pub fn forecast_recursive(models: &[MlpModel], seed: &PriceSeries, horizon: usize) -> Result<ForecastSeries> {
    let pick = |c: Component| {
        models
            .iter()
            .find(|m| m.component == c)
            .ok_or_else(|| Error::Config(format!("no model for the {c} component")))
    };
    let chosen = Component::ALL.iter().map(|&c| pick(c)).collect::<Result<Vec<_>>>()?;
    let lags = chosen[0].lags;
    if chosen.iter().any(|m| m.lags != lags) {
        return Err(Error::Config("component models disagree on the number of lags".into()));
    }
    let last = seed.last_date().ok_or(Error::Size {
        what: "seed bars",
        needed: lags,
        got: 0,
    })?;
    let mut paths = Vec::with_capacity(4);
    for m in &chosen {
        let scaled = m.scaler.transform(&seed.component(m.component));
        let path = recursive_path(&scaled, lags, horizon, |w| mlp_forward(m, w, false, 0))?;
        paths.push(m.scaler.inverse(&path));
    }
    let values = (0..horizon).map(|d| paths.iter().map(|p| p[d]).collect()).collect();
    ForecastSeries::new(model_id(&chosen, "recursive"), next_weekdays(last, horizon), Component::ALL.to_vec(), values)
}
