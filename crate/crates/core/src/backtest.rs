//! Long-only, full-budget, compounded simulation of a signal stream.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::indicators::{Action, SignalSeries};
use crate::ingest::PriceSeries;
use crate::metrics::RiskMetrics;

pub const DEFAULT_BUDGET: f64 = 100.0;

/// When an order generated on bar `t` is filled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FillRule {
    /// At the open of bar `t + 1`.
    #[default]
    NextOpen,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeRecord {
    pub entry_date: NaiveDate,
    pub entry_price: f64,
    pub exit_date: NaiveDate,
    pub exit_price: f64,
    pub quantity: f64,
    /// Buy and sell fees together.
    pub fee: f64,
    pub profit: f64,
    /// Profit over the equity committed at entry.
    pub return_fraction: f64,
    /// True when the position was closed by the end of the series.
    pub forced_exit: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestReport {
    pub ticker: String,
    pub dates: Vec<NaiveDate>,
    pub trades: Vec<TradeRecord>,
    /// Portfolio value at each close.
    pub equity: Vec<f64>,
    pub budget: f64,
    pub fee_rate: f64,
    pub fill_rule: FillRule,
    pub metrics: Option<RiskMetrics>,
}

impl BacktestReport {
    pub fn final_equity(&self) -> f64 {
        self.equity.last().copied().unwrap_or(self.budget)
    }

    /// `entry_date,entry_px,exit_date,exit_px,qty,fee,pnl`
    pub fn blotter_csv(&self) -> String {
        let mut out = String::from("entry_date,entry_px,exit_date,exit_px,qty,fee,pnl\n");
        for t in &self.trades {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                t.entry_date, t.entry_price, t.exit_date, t.exit_price, t.quantity, t.fee, t.profit
            ));
        }
        out
    }

    pub fn equity_csv(&self) -> String {
        let mut out = String::from("date,equity\n");
        for (d, e) in self.dates.iter().zip(&self.equity) {
            out.push_str(&format!("{d},{e}\n"));
        }
        out
    }
}

struct Open {
    bar: usize,
    price: f64,
    quantity: f64,
    committed: f64,
    buy_fee: f64,
}

/// Simulates `signals` over `series` starting from `budget` in cash.
///
/// A signal on bar `t` fills at the open of bar `t + 1`. Entries use the whole
/// equity: `quantity = E / (p (1 + k))`, so that notional plus fee equals `E`.
/// Sales pay `k` on their notional. An open position is closed at the last
/// close. Entries that would fill on the last bar, and fills at non-positive
/// prices, are skipped.
pub fn run_backtest(series: &PriceSeries, signals: &SignalSeries, budget: f64, fee_rate: f64) -> Result<BacktestReport> {
    if signals.len() != series.len() {
        return Err(Error::Shape {
            expected: series.len(),
            got: signals.len(),
        });
    }
    if !(budget > 0.0) || !budget.is_finite() {
        return Err(Error::Argument(format!("budget must be positive, got {budget}")));
    }
    if !(0.0..1.0).contains(&fee_rate) {
        return Err(Error::Argument(format!("fee rate must lie in [0, 1), got {fee_rate}")));
    }
    let bars = series.bars();
    let n = bars.len();
    let mut cash = budget;
    let mut position: Option<Open> = None;
    let mut pending: Option<Action> = None;
    let mut trades = Vec::new();
    let mut equity = Vec::with_capacity(n);

    let close_position = |pos: Open, bar: usize, price: f64, forced: bool, trades: &mut Vec<TradeRecord>| -> f64 {
        let gross = pos.quantity * price;
        let sell_fee = gross * fee_rate;
        let proceeds = gross - sell_fee;
        let profit = proceeds - pos.committed;
        trades.push(TradeRecord {
            entry_date: bars[pos.bar].date,
            entry_price: pos.price,
            exit_date: bars[bar].date,
            exit_price: price,
            quantity: pos.quantity,
            fee: pos.buy_fee + sell_fee,
            profit,
            return_fraction: profit / pos.committed,
            forced_exit: forced,
        });
        proceeds
    };

    for (t, bar) in bars.iter().enumerate() {
        match pending.take() {
            Some(Action::Enter) if position.is_none() && t + 1 < n && bar.open > 0.0 => {
                let quantity = cash / (bar.open * (1.0 + fee_rate));
                position = Some(Open {
                    bar: t,
                    price: bar.open,
                    quantity,
                    committed: cash,
                    buy_fee: quantity * bar.open * fee_rate,
                });
                cash = 0.0;
            }
            Some(Action::Exit) if bar.open > 0.0 => {
                if let Some(pos) = position.take() {
                    cash = close_position(pos, t, bar.open, false, &mut trades);
                }
            }
            _ => {}
        }
        if t + 1 == n {
            if let Some(pos) = position.take() {
                cash = close_position(pos, t, bar.close, true, &mut trades);
            }
        }
        let mark = match &position {
            Some(pos) => pos.quantity * bar.close.max(0.0),
            None => cash,
        };
        equity.push(mark);

        pending = match signals.actions[t] {
            Action::Enter if position.is_none() => Some(Action::Enter),
            Action::Exit if position.is_some() => Some(Action::Exit),
            _ => None,
        };
    }

    Ok(BacktestReport {
        ticker: series.ticker.clone(),
        dates: series.dates(),
        trades,
        equity,
        budget,
        fee_rate,
        fill_rule: FillRule::NextOpen,
        metrics: None,
    })
}
