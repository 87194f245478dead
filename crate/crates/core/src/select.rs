//! Strategy selection on the known past or on a forecast future.

use std::cmp::Ordering;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::backtest::{run_backtest, BacktestReport, DEFAULT_BUDGET};
use crate::error::{ensure_len, Error, Result};
use crate::forecast::ForecastSeries;
use crate::indicators::{signals_for, IndicatorSpec, SignalSeries};
use crate::ingest::PriceSeries;
use crate::metrics::{risk_metrics, RiskMetrics};
use crate::returns_vol::TRADING_DAYS_PER_YEAR;

pub const DEFAULT_WINDOW: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Mode {
    Backtest,
    Forwardtest,
}

impl Mode {
    pub fn code(self) -> &'static str {
        match self {
            Mode::Backtest => "BACKTEST",
            Mode::Forwardtest => "FORWARDTEST",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationParams {
    pub budget: f64,
    pub fee_rate: f64,
    pub periods_per_year: f64,
}

impl Default for SimulationParams {
    fn default() -> Self {
        Self {
            budget: DEFAULT_BUDGET,
            fee_rate: 0.0,
            periods_per_year: TRADING_DAYS_PER_YEAR,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateResult {
    pub spec: IndicatorSpec,
    pub label: String,
    pub report: BacktestReport,
    pub metrics: RiskMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub mode: Mode,
    pub window_start: NaiveDate,
    pub window_end: NaiveDate,
    pub window_len: usize,
    /// Best first.
    pub ranked: Vec<CandidateResult>,
    pub chosen: IndicatorSpec,
    pub tie_break: String,
}

impl SelectionResult {
    pub fn best(&self) -> &CandidateResult {
        &self.ranked[0]
    }

    /// Metrics of every candidate in rank order.
    pub fn ranking_csv(&self) -> String {
        let mut out = String::from(RiskMetrics::CSV_HEADER);
        out.push('\n');
        for c in &self.ranked {
            out.push_str(&c.metrics.csv_row(&c.report.ticker, &c.label, self.mode.code()));
            out.push('\n');
        }
        out
    }
}

/// Runs one strategy over `series`, trading only on bars from `start` on.
/// Indicators see the full series so the bars before `start` serve as warm-up.
pub fn evaluate_candidate(spec: &IndicatorSpec, series: &PriceSeries, start: usize, sim: &SimulationParams) -> Result<CandidateResult> {
    let (_, signals) = signals_for(spec, series)?;
    let window = series.slice(start..series.len());
    let actions = SignalSeries {
        actions: signals.actions[start..].to_vec(),
    };
    let report = run_backtest(&window, &actions, sim.budget, sim.fee_rate)?;
    let metrics = risk_metrics(&report, sim.periods_per_year)?;
    let report = BacktestReport {
        metrics: Some(metrics.clone()),
        ..report
    };
    Ok(CandidateResult {
        label: spec.label(),
        spec: spec.clone(),
        report,
        metrics,
    })
}

fn by_rank(a: &CandidateResult, b: &CandidateResult) -> Ordering {
    let sharpe = |c: &CandidateResult| c.metrics.sharpe.unwrap_or(f64::NEG_INFINITY);
    b.metrics
        .total_return
        .total_cmp(&a.metrics.total_return)
        .then_with(|| sharpe(b).total_cmp(&sharpe(a)))
        .then_with(|| a.metrics.trades.cmp(&b.metrics.trades))
}

fn tie_break_note(ranked: &[CandidateResult]) -> String {
    let top = &ranked[0].metrics;
    let tied: Vec<&CandidateResult> = ranked.iter().filter(|c| c.metrics.total_return == top.total_return).collect();
    if tied.len() == 1 {
        return "unique maximum total return".into();
    }
    let same_sharpe = tied.iter().filter(|c| c.metrics.sharpe == top.sharpe).count();
    if same_sharpe == 1 {
        return format!("{} candidates tied on total return; higher Sharpe ratio chosen", tied.len());
    }
    let same_trades = tied.iter().filter(|c| c.metrics.sharpe == top.sharpe && c.metrics.trades == top.trades).count();
    if same_trades == 1 {
        format!("{} candidates tied on total return and Sharpe ratio; fewer trades chosen", tied.len())
    } else {
        format!("{same_trades} candidates fully tied; first in candidate order chosen")
    }
}

/// Evaluates every candidate on bars `start..` of `series` and ranks them by
/// total return, then Sharpe ratio, then fewer trades, then candidate order.
pub fn select_strategy(
    candidates: &[IndicatorSpec],
    series: &PriceSeries,
    start: usize,
    mode: Mode,
    sim: &SimulationParams,
) -> Result<SelectionResult> {
    if candidates.is_empty() {
        return Err(Error::Argument("no candidate strategies".into()));
    }
    let max_warm_up = candidates.iter().map(IndicatorSpec::warm_up).max().unwrap_or(0);
    ensure_len("warm-up bars before the evaluation window", max_warm_up, start)?;
    ensure_len("evaluation window", 2, series.len().saturating_sub(start))?;
    let evaluated: Vec<CandidateResult> = candidates
        .par_iter()
        .map(|spec| evaluate_candidate(spec, series, start, sim))
        .collect::<Result<_>>()?;
    let mut ranked = evaluated;
    ranked.sort_by(by_rank);
    let bars = series.bars();
    Ok(SelectionResult {
        mode,
        window_start: bars[start].date,
        window_end: bars[bars.len() - 1].date,
        window_len: bars.len() - start,
        chosen: ranked[0].spec.clone(),
        tie_break: tie_break_note(&ranked),
        ranked,
    })
}

/// The real history before the window followed by the forecast bars, and the
/// index at which the forecast starts. Only history dated before the forecast
/// is read.
pub fn forward_series(history: &PriceSeries, forecast: &ForecastSeries) -> Result<(PriceSeries, usize)> {
    let start = forecast
        .start_date()
        .ok_or_else(|| Error::Argument("empty forecast".into()))?;
    let cut = history.bars().partition_point(|b| b.date < start);
    let past = history.slice(0..cut);
    let future = forecast.to_price_series(&history.ticker)?;
    Ok((past.concat(&future)?, cut))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeComparison {
    pub backtest: SelectionResult,
    pub forwardtest: SelectionResult,
    /// Each mode's chosen strategy traded on the real future.
    pub backtest_on_future: CandidateResult,
    pub forwardtest_on_future: CandidateResult,
    pub runs: usize,
}

impl ModeComparison {
    /// Side-by-side real-future metrics, one row per mode.
    pub fn comparison_csv(&self) -> String {
        let mut out = String::from(RiskMetrics::CSV_HEADER);
        out.push('\n');
        for (mode, c) in [(Mode::Backtest, &self.backtest_on_future), (Mode::Forwardtest, &self.forwardtest_on_future)] {
            out.push_str(&c.metrics.csv_row(&c.report.ticker, &c.label, mode.code()));
            out.push('\n');
        }
        out
    }
}

/// Selects on the last `forecast.horizon()` bars of `history` (backtest mode)
/// and on the forecast (forwardtest mode), then trades both choices on
/// `real_future`. `history` must end before the forecast and the real future
/// begin.
pub fn compare_modes(
    candidates: &[IndicatorSpec],
    history: &PriceSeries,
    forecast: &ForecastSeries,
    real_future: &PriceSeries,
    sim: &SimulationParams,
) -> Result<ModeComparison> {
    let last = history
        .last_date()
        .ok_or_else(|| Error::Argument("empty history".into()))?;
    for (what, first) in [("forecast", forecast.start_date()), ("real future", real_future.first_date())] {
        match first {
            Some(d) if d > last => {}
            Some(d) => {
                return Err(Error::Argument(format!("{what} starts on {d}, not after the history end {last}")));
            }
            None => return Err(Error::Argument(format!("empty {what}"))),
        }
    }
    let window = forecast.horizon();
    ensure_len("history", window, history.len())?;
    let backtest = select_strategy(candidates, history, history.len() - window, Mode::Backtest, sim)?;
    let (fwd, start) = forward_series(history, forecast)?;
    let forwardtest = select_strategy(candidates, &fwd, start, Mode::Forwardtest, sim)?;

    let real = history.concat(real_future)?;
    let backtest_on_future = evaluate_candidate(&backtest.chosen, &real, history.len(), sim)?;
    let forwardtest_on_future = evaluate_candidate(&forwardtest.chosen, &real, history.len(), sim)?;
    Ok(ModeComparison {
        runs: backtest.ranked.len() + forwardtest.ranked.len() + 2,
        backtest,
        forwardtest,
        backtest_on_future,
        forwardtest_on_future,
    })
}

