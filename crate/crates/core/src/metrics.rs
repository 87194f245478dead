//! Forecast-error and profit/risk metrics.

use serde::{Deserialize, Serialize};

use crate::backtest::{BacktestReport, TradeRecord};
use crate::error::{ensure_len, Error, Result};
use crate::returns_vol::TRADING_DAYS_PER_YEAR;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForecastErrors {
    pub mse: f64,
    pub rmse: f64,
    pub mae: f64,
    /// Mean absolute error relative to the actual value, as a fraction.
    pub mape: f64,
    /// `1 - Var(y - yhat) / Var(y)`; `None` when the actuals are constant.
    pub evs: Option<f64>,
}

fn biased_variance(v: &[f64]) -> f64 {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64
}

pub fn forecast_errors(actual: &[f64], predicted: &[f64]) -> Result<ForecastErrors> {
    if actual.len() != predicted.len() {
        return Err(Error::Shape {
            expected: actual.len(),
            got: predicted.len(),
        });
    }
    ensure_len("forecast error sample", 2, actual.len())?;
    if let Some(i) = actual.iter().position(|&y| y == 0.0) {
        return Err(Error::Domain(format!("MAPE undefined: actual value {i} is zero")));
    }
    let n = actual.len() as f64;
    let resid: Vec<f64> = actual.iter().zip(predicted).map(|(y, p)| y - p).collect();
    let mse = resid.iter().map(|r| r * r).sum::<f64>() / n;
    let mae = resid.iter().map(|r| r.abs()).sum::<f64>() / n;
    let mape = resid.iter().zip(actual).map(|(r, y)| (r / y).abs()).sum::<f64>() / n;
    let var_y = biased_variance(actual);
    let evs = (var_y > 0.0).then(|| 1.0 - biased_variance(&resid) / var_y);
    Ok(ForecastErrors {
        mse,
        rmse: mse.sqrt(),
        mae,
        mape,
        evs,
    })
}

/// Profit and risk summary of a backtest. Undefined ratios are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskMetrics {
    /// Final minus initial equity, in currency.
    pub total_return: f64,
    /// `(win_rate avg_win - loss_rate avg_loss) / avg_loss` over trade return
    /// fractions.
    pub expectancy: Option<f64>,
    pub sharpe: Option<f64>,
    pub sortino: Option<f64>,
    pub calmar: Option<f64>,
    pub max_drawdown: f64,
    pub trades: usize,
    pub periods_per_year: f64,
}

impl RiskMetrics {
    pub const CSV_HEADER: &'static str =
        "ticker,strategy,mode,total_return,expectancy,sharpe,sortino,calmar,max_drawdown,trades";

    /// One CSV row keyed by `(ticker, strategy, mode)`; undefined values are empty.
    pub fn csv_row(&self, ticker: &str, strategy: &str, mode: &str) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        format!(
            "{ticker},{},{mode},{},{},{},{},{},{},{}",
            csv_field(strategy),
            self.total_return,
            opt(self.expectancy),
            opt(self.sharpe),
            opt(self.sortino),
            opt(self.calmar),
            self.max_drawdown,
            self.trades
        )
    }
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Simple per-period returns of an equity curve.
pub fn period_returns(equity: &[f64]) -> Vec<f64> {
    equity.windows(2).map(|w| if w[0] > 0.0 { w[1] / w[0] - 1.0 } else { 0.0 }).collect()
}

/// Largest relative decline from a running peak.
pub fn max_drawdown(equity: &[f64]) -> f64 {
    let mut peak = f64::NEG_INFINITY;
    let mut mdd: f64 = 0.0;
    for &e in equity {
        peak = peak.max(e);
        if peak > 0.0 {
            mdd = mdd.max((peak - e) / peak);
        }
    }
    mdd
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample standard deviation.
fn std_dev(v: &[f64]) -> f64 {
    let m = mean(v);
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

/// Root mean square of the negative returns.
fn downside_deviation(v: &[f64]) -> Option<f64> {
    let neg: Vec<f64> = v.iter().copied().filter(|&r| r < 0.0).collect();
    (!neg.is_empty()).then(|| (neg.iter().map(|r| r * r).sum::<f64>() / neg.len() as f64).sqrt())
}

pub fn expectancy(trades: &[TradeRecord]) -> Option<f64> {
    if trades.is_empty() {
        return None;
    }
    let wins: Vec<f64> = trades.iter().map(|t| t.return_fraction).filter(|&r| r > 0.0).collect();
    let losses: Vec<f64> = trades.iter().map(|t| -t.return_fraction).filter(|&r| r > 0.0).collect();
    if losses.is_empty() {
        return None;
    }
    let n = trades.len() as f64;
    let avg_win = if wins.is_empty() { 0.0 } else { mean(&wins) };
    let avg_loss = mean(&losses);
    Some((wins.len() as f64 / n * avg_win - losses.len() as f64 / n * avg_loss) / avg_loss)
}

pub fn risk_metrics(report: &BacktestReport, periods_per_year: f64) -> Result<RiskMetrics> {
    ensure_len("equity curve", 2, report.equity.len())?;
    if !(periods_per_year > 0.0) {
        return Err(Error::Argument(format!("periods per year must be positive, got {periods_per_year}")));
    }
    let r = period_returns(&report.equity);
    let ann = periods_per_year.sqrt();
    let m = mean(&r);
    let sd = if r.len() >= 2 { std_dev(&r) } else { 0.0 };
    let mdd = max_drawdown(&report.equity);
    Ok(RiskMetrics {
        total_return: report.final_equity() - report.budget,
        expectancy: expectancy(&report.trades),
        sharpe: (sd > 0.0).then(|| m / sd * ann),
        sortino: downside_deviation(&r).map(|dd| m / dd * ann),
        calmar: (mdd > 0.0).then(|| m * periods_per_year / mdd),
        max_drawdown: mdd,
        trades: report.trades.len(),
        periods_per_year,
    })
}

/// Computes the risk metrics with daily annualization and stores them in the report.
pub fn attach_metrics(mut report: BacktestReport) -> Result<BacktestReport> {
    report.metrics = Some(risk_metrics(&report, TRADING_DAYS_PER_YEAR)?);
    Ok(report)
}
