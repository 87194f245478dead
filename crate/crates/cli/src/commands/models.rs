use std::collections::BTreeMap;

use anyhow::{bail, Context, Result};
use forwardtest::dnn_forecast::{
    decode_model, encode_model, fit_component, forecast_recursive, forecast_validation, HyperGrid, MlpModel, Optimizer, TrainConfig,
    DEFAULT_DROPOUT, DEFAULT_HORIZON, DEFAULT_LAGS,
};
use forwardtest::forecast::ForecastSeries;
use forwardtest::ingest::{split_train_test, Component, PriceSeries};
use forwardtest::metrics::{forecast_errors, ForecastErrors};
use forwardtest::stat_forecast::{acf_pacf, adf_test, arima_forecast, auto_arima, difference, PriceScale, MAX_P, MAX_Q};
use serde_json::json;

use super::{csv_rows, history_until, load_series, parse_component};
use crate::config::Config;
use crate::manifest::Run;
use crate::svg::{line_chart, Line};
use crate::{AdfArgs, ArimaArgs, ForecastArgs, ForecastMode, TrainDnnArgs};

const DEFAULT_ACF_LAGS: usize = 20;
const PLOT_HISTORY: usize = 60;

pub fn adf(run: &mut Run, config: &Config, a: &AdfArgs) -> Result<()> {
    let max_lag = a.max_lag.or(config.adf.max_lag);
    let acf_lags = a.acf_lags.or(config.adf.acf_lags).unwrap_or(DEFAULT_ACF_LAGS);
    let component = parse_component(&a.component)?;
    run.set_parameters(&json!({
        "series": a.series, "component": component.name(), "train_end": a.train_end, "max_lag": max_lag, "acf_lags": acf_lags,
    }))?;
    let mut s = load_series(run, &a.series)?;
    if let Some(end) = a.train_end {
        s = history_until(&s, end)?;
    }
    let values = s.component(component);
    let level = adf_test(&values, max_lag)?;
    let diffed = difference(&values, 1)?;
    let first_difference = adf_test(&diffed, max_lag)?;
    let (acf, pacf) = acf_pacf(&values, acf_lags.min(values.len() - 1))?;
    let (dacf, dpacf) = acf_pacf(&diffed, acf_lags.min(diffed.len() - 1))?;
    run.write(
        "acf.csv",
        csv_rows(
            "lag,acf,pacf,diff_acf,diff_pacf",
            (0..acf.len().min(dacf.len())).map(|k| format!("{k},{},{},{},{}", acf[k], pacf[k], dacf[k], dpacf[k])),
        ),
    )?;
    run.write_json(
        "adf.json",
        &json!({
            "ticker": s.ticker,
            "component": component.name(),
            "bars": values.len(),
            "level": level,
            "first_difference": first_difference,
            "level_rejects_unit_root_5pct": level.statistic < level.critical_values[1],
            "first_difference_rejects_unit_root_5pct": first_difference.statistic < first_difference.critical_values[1],
        }),
    )
}

fn split_or_all(s: &PriceSeries, end: Option<chrono::NaiveDate>) -> Result<(PriceSeries, PriceSeries)> {
    match end {
        Some(end) => Ok(split_train_test(s, end)?),
        None => Ok((s.clone(), s.slice(s.len()..s.len()))),
    }
}

/// Errors against the first `predicted.len()` actual values, when at least two exist.
fn errors_against(actual: &[f64], predicted: &[f64]) -> Result<Option<ForecastErrors>> {
    let n = actual.len().min(predicted.len());
    if n < 2 {
        return Ok(None);
    }
    Ok(Some(forecast_errors(&actual[..n], &predicted[..n])?))
}

fn overlay(title: &str, history: &[f64], actual: &[f64], forecasts: &[(String, Vec<f64>)]) -> String {
    let h = &history[history.len().saturating_sub(PLOT_HISTORY)..];
    let at = |offset: usize, v: &[f64]| -> Vec<(f64, f64)> { v.iter().enumerate().map(|(i, &y)| ((offset + i) as f64, y)).collect() };
    let mut lines = vec![Line {
        name: "history".into(),
        points: at(0, h),
    }];
    if !actual.is_empty() {
        lines.push(Line {
            name: "actual".into(),
            points: at(h.len(), actual),
        });
    }
    for (name, f) in forecasts {
        lines.push(Line {
            name: name.clone(),
            points: at(h.len(), f),
        });
    }
    line_chart(title, "bar", "price", &lines)
}

pub fn arima(run: &mut Run, config: &Config, a: &ArimaArgs) -> Result<()> {
    let c = &config.arima;
    let horizon = a.horizon.or(c.horizon).unwrap_or(DEFAULT_HORIZON);
    let p_max = a.p_max.or(c.p_max).unwrap_or(MAX_P);
    let q_max = a.q_max.or(c.q_max).unwrap_or(MAX_Q);
    let d = a.d.or(c.d).unwrap_or(1);
    let log = a.log || c.log.unwrap_or(false);
    let component = parse_component(&a.component)?;
    run.set_parameters(&json!({
        "series": a.series, "component": component.name(), "train_end": a.train_end, "horizon": horizon,
        "p_max": p_max, "q_max": q_max, "d": d, "log": log,
    }))?;
    let s = load_series(run, &a.series)?;
    let (train, test) = split_or_all(&s, a.train_end)?;
    let values = train.component(component);
    let scale = if log { PriceScale::Log } else { PriceScale::Level };
    let auto = auto_arima(&values, 0..=p_max, 0..=q_max, d, scale)?;
    let last = train.last_date().context("empty training split")?;
    let fc = arima_forecast(&auto.best, &values, last, horizon)?;
    let predicted = fc.component(component).unwrap_or_default();
    let actual = test.component(component);
    let errors = errors_against(&actual, &predicted)?;
    run.write("aic_table.csv", auto.table_csv())?;
    run.write("arima_forecast.csv", fc.to_csv())?;
    run.write_json(
        "arima.json",
        &json!({
            "ticker": s.ticker,
            "component": component.name(),
            "train_bars": values.len(),
            "order": auto.best.order.to_string(),
            "model": auto.best,
            "horizon": horizon,
            "compared_bars": actual.len().min(predicted.len()),
            "forecast_errors": errors,
        }),
    )?;
    let n = actual.len().min(horizon);
    run.write(
        "arima.svg",
        &overlay(&format!("ARIMA{} forecast", auto.best.order), &values, &actual[..n], &[("ARIMA".into(), predicted)]),
    )
}

fn parse_optimizer(s: &str) -> Result<Optimizer> {
    match s.to_ascii_lowercase().as_str() {
        "adam" => Ok(Optimizer::Adam),
        "sgd" => Ok(Optimizer::Sgd),
        other => bail!("unknown optimizer '{other}' (expected adam or sgd)"),
    }
}

fn model_file(c: Component) -> String {
    format!("{}.ftmlp", c.name())
}

pub fn train_dnn(run: &mut Run, config: &Config, a: &TrainDnnArgs) -> Result<()> {
    let c = &config.dnn;
    let lags = a.lags.or(c.lags).unwrap_or(DEFAULT_LAGS);
    let names = a.components.clone().or_else(|| c.components.clone());
    let components = match names {
        Some(list) => list.iter().map(|n| parse_component(n)).collect::<Result<Vec<_>>>()?,
        None => Component::ALL.to_vec(),
    };
    let defaults = HyperGrid::default();
    let grid = HyperGrid {
        epochs: c.epochs.clone().unwrap_or(defaults.epochs),
        batch_sizes: c.batch_sizes.clone().unwrap_or(defaults.batch_sizes),
        learning_rates: c.learning_rates.clone().unwrap_or(defaults.learning_rates),
        optimizers: match &c.optimizers {
            Some(list) => list.iter().map(|o| parse_optimizer(o)).collect::<Result<_>>()?,
            None => defaults.optimizers,
        },
    };
    let base = TrainConfig {
        seed: run.seed,
        dropout: c.dropout.unwrap_or(DEFAULT_DROPOUT),
        ..TrainConfig::default()
    };
    run.set_parameters(&json!({
        "series": a.series, "train_end": a.train_end, "lags": lags,
        "components": components.iter().map(|c| c.name()).collect::<Vec<_>>(), "grid": grid, "base": base,
    }))?;
    let s = load_series(run, &a.series)?;
    let train = match a.train_end {
        Some(end) => history_until(&s, end)?,
        None => s.clone(),
    };
    let mut summary = BTreeMap::new();
    for &component in &components {
        let fitted = fit_component(&train, component, lags, &grid, &base)
            .with_context(|| format!("training the {component} network"))?;
        run.write(&format!("models/{}", model_file(component)), encode_model(&fitted.model)?)?;
        let rows = fitted.grid.cells.iter().map(|cell| {
            let cfg = &cell.config;
            format!(
                "{},{},{},{:?},{},{}",
                cfg.epochs,
                cfg.batch_size,
                cfg.learning_rate,
                cfg.optimizer,
                super::opt(cell.validation_mae),
                cell.error.as_deref().unwrap_or("").replace(',', ";")
            )
        });
        run.write(
            &format!("grid_{}.csv", component.name()),
            csv_rows("epochs,batch_size,learning_rate,optimizer,validation_mae,error", rows),
        )?;
        run.write(
            &format!("loss_{}.csv", component.name()),
            csv_rows("epoch,loss", fitted.loss_history.iter().enumerate().map(|(i, l)| format!("{},{l}", i + 1))),
        )?;
        let best = &fitted.grid.cells[fitted.grid.best_index];
        summary.insert(
            component.name(),
            json!({
                "best": best.config,
                "validation_mae_scaled": best.validation_mae,
                "fit_pairs": fitted.grid.fit_pairs,
                "validation_pairs": fitted.grid.validation_pairs,
                "final_loss": fitted.loss_history.last(),
                "parameters": fitted.model.param_count(),
                "scaler": fitted.model.scaler,
            }),
        );
    }
    run.write_json(
        "train_dnn.json",
        &json!({ "ticker": s.ticker, "train_bars": train.len(), "lags": lags, "components": summary }),
    )
}

fn load_models(run: &mut Run, a: &ForecastArgs) -> Result<Vec<MlpModel>> {
    let mut models = Vec::new();
    for c in Component::ALL {
        let path = a.models.join(model_file(c));
        if crate::manifest::resolve_input(&path).is_ok() {
            let bytes = run.read_input(&path)?;
            models.push(decode_model(&bytes).with_context(|| format!("loading {}", path.display()))?);
        }
    }
    if models.is_empty() {
        bail!("no *.ftmlp models found in {}", a.models.display());
    }
    Ok(models)
}

pub fn forecast(run: &mut Run, config: &Config, a: &ForecastArgs) -> Result<()> {
    let horizon = a.horizon.or(config.dnn.horizon).unwrap_or(DEFAULT_HORIZON);
    run.set_parameters(&json!({
        "series": a.series, "models": a.models, "train_end": a.train_end, "horizon": horizon, "mode": a.mode,
    }))?;
    let s = load_series(run, &a.series)?;
    let models = load_models(run, a)?;
    let (seen, future) = split_or_all(&s, a.train_end)?;
    let mut errors = BTreeMap::new();
    match a.mode {
        ForecastMode::Recursive => {
            let fc = forecast_recursive(&models, &seen, horizon)?;
            for c in Component::ALL {
                let predicted = fc.component(c).unwrap_or_default();
                errors.insert(c.name(), errors_against(&future.component(c), &predicted)?);
            }
            run.write("forecast.csv", fc.to_csv())?;
            let close = fc.component(Component::Close).unwrap_or_default();
            let n = future.len().min(horizon);
            run.write(
                "forecast.svg",
                &overlay(
                    "Recursive network forecast (close)",
                    &seen.closes(),
                    &future.closes()[..n],
                    &[(fc.model_id.clone(), close)],
                ),
            )?;
            run.write_json(
                "forecast.json",
                &json!({
                    "ticker": s.ticker,
                    "model_id": fc.model_id,
                    "mode": a.mode,
                    "seed_last_date": seen.last_date(),
                    "horizon": horizon,
                    "incoherent_bars": fc.coherence_violations(),
                    "forecast_errors": errors,
                }),
            )
        }
        ForecastMode::OneStep => {
            if a.train_end.is_none() {
                bail!("one-step forecasts need --train-end");
            }
            if future.len() < horizon {
                bail!("only {} bars after the training split, {horizon} needed", future.len());
            }
            let actual = s.slice(0..seen.len() + horizon);
            let mut series: Vec<ForecastSeries> = Vec::new();
            for m in &models {
                let fc = forecast_validation(m, &actual, horizon)?;
                let predicted = fc.component(m.component).unwrap_or_default();
                errors.insert(m.component.name(), errors_against(&future.component(m.component), &predicted)?);
                series.push(fc);
            }
            let components: Vec<Component> = models.iter().map(|m| m.component).collect();
            let values = (0..horizon).map(|d| series.iter().map(|f| f.values[d][0]).collect()).collect();
            let merged = ForecastSeries::new(series[0].model_id.clone(), series[0].dates.clone(), components, values)?;
            run.write("forecast_one_step.csv", merged.to_csv())?;
            if let Some(close) = merged.component(Component::Close) {
                run.write(
                    "forecast_one_step.svg",
                    &overlay("One-step network forecast (close)", &seen.closes(), &future.closes()[..horizon], &[(merged.model_id.clone(), close)]),
                )?;
            }
            run.write_json(
                "forecast.json",
                &json!({
                    "ticker": s.ticker,
                    "model_id": merged.model_id,
                    "mode": a.mode,
                    "horizon": horizon,
                    "forecast_errors": errors,
                }),
            )
        }
    }
}
