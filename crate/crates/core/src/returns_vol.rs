//! Returns arithmetic and historical-volatility estimators.
//!
//! Every estimator works on natural-log price ratios over a rolling window of
//! `N` bars and is annualized by `sqrt(252)`:
//!
//! | kind   | per-window value                                                        | bars used |
//! |--------|--------------------------------------------------------------------------|-----------|
//! | STDDEV | population std of the `N` close-to-close log returns                     | `N + 1`   |
//! | PK     | `sqrt(sum(ln(h/l)^2) / (4 N ln 2))`                                       | `N`       |
//! | GK     | `sqrt(mean(0.5 ln(h/l)^2 - (2 ln 2 - 1) ln(c/o)^2))`                     | `N`       |
//! | RS     | `sqrt(mean(ln(h/c) ln(h/o) + ln(l/c) ln(l/o)))`                           | `N`       |
//! | YZ     | `sqrt(s_overnight^2 + k s_open_close^2 + (1 - k) RS^2)`                  | `N + 1`   |
//!
//! with `k = 0.34 / (1.34 + (N + 1) / (N - 1))` and sample (`N - 1`)
//! variances for the overnight and open-to-close terms.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_len, Error, Result};
use crate::ingest::PriceSeries;
use crate::stats;

pub const TRADING_DAYS_PER_YEAR: f64 = 252.0;

/// Element `i` is `ln(c[i+1] / c[i])`.
pub fn log_returns(closes: &[f64]) -> Result<Vec<f64>> {
    ensure_len("prices for log returns", 2, closes.len())?;
    if let Some(bad) = closes.iter().find(|&&c| !(c > 0.0)) {
        return Err(Error::Domain(format!("log return of non-positive price {bad}")));
    }
    Ok(closes.windows(2).map(|w| (w[1] / w[0]).ln()).collect())
}

/// One round trip. The fee is charged on the sell notional: `fee = sell * k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TradeLeg {
    pub buy_price: f64,
    pub sell_price: f64,
    pub fee_rate: f64,
}

impl TradeLeg {
    pub fn new(buy_price: f64, sell_price: f64, fee_rate: f64) -> Result<Self> {
        if !(buy_price > 0.0) {
            return Err(Error::Domain(format!("buy price must be positive, got {buy_price}")));
        }
        if !(fee_rate >= 0.0) {
            return Err(Error::Domain(format!("fee rate must be non-negative, got {fee_rate}")));
        }
        Ok(Self {
            buy_price,
            sell_price,
            fee_rate,
        })
    }

    /// Gross growth factor `1 + (sell - buy - fee) / buy`.
    pub fn factor(&self) -> f64 {
        let fee = self.sell_price * self.fee_rate;
        1.0 + (self.sell_price - self.buy_price - fee) / self.buy_price
    }
}

/// Compounded return over a list of trades: `(CR, ln CR)`.
pub fn cumulative_return(trades: &[TradeLeg]) -> Result<(f64, f64)> {
    if trades.is_empty() {
        return Err(Error::Argument("cumulative return of an empty trade list".into()));
    }
    let mut cr = 1.0;
    let mut ln_cr = 0.0;
    for (i, trade) in trades.iter().enumerate() {
        let factor = trade.factor();
        if !(factor > 0.0) {
            return Err(Error::Domain(format!("trade {i} loses more than 100% (factor {factor})")));
        }
        cr *= factor;
        ln_cr += factor.ln();
    }
    Ok((cr, ln_cr))
}

/// `R_t = (Z[t+dt] - Z[t]) / Z[t]` for every `t` with `t + dt` in range.
pub fn total_returns(closes: &[f64], dt: usize) -> Result<Vec<f64>> {
    if dt == 0 {
        return Err(Error::Argument("return horizon must be at least one period".into()));
    }
    ensure_len("prices for total returns", dt + 1, closes.len())?;
    if closes.iter().any(|&c| c == 0.0) {
        return Err(Error::Domain("total return over a zero price".into()));
    }
    Ok((0..closes.len() - dt).map(|t| (closes[t + dt] - closes[t]) / closes[t]).collect())
}

/// z-score of a return vector, `(R - mean R) / std R` with population std.
pub fn standardize_returns(total: &[f64]) -> Result<Vec<f64>> {
    ensure_len("returns to standardize", 2, total.len())?;
    let sd = stats::std_dev(total, 0);
    if !(sd > 0.0) {
        return Err(Error::Degenerate("standardized returns of a zero-variance return series".into()));
    }
    let m = stats::mean(total);
    Ok(total.iter().map(|r| (r - m) / sd).collect())
}

/// Total returns over `dt` periods together with their standardized form.
pub fn total_and_standardized_returns(closes: &[f64], dt: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let total = total_returns(closes, dt)?;
    let standardized = standardize_returns(&total)?;
    Ok((total, standardized))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VolatilityKind {
    #[serde(rename = "STDDEV")]
    StdDev,
    #[serde(rename = "PK")]
    Parkinson,
    #[serde(rename = "GK")]
    GarmanKlass,
    #[serde(rename = "RS")]
    RogersSatchell,
    #[serde(rename = "YZ")]
    YangZhang,
}

impl VolatilityKind {
    pub const ALL: [VolatilityKind; 5] = [
        VolatilityKind::StdDev,
        VolatilityKind::Parkinson,
        VolatilityKind::GarmanKlass,
        VolatilityKind::RogersSatchell,
        VolatilityKind::YangZhang,
    ];

    pub fn code(self) -> &'static str {
        match self {
            VolatilityKind::StdDev => "STDDEV",
            VolatilityKind::Parkinson => "PK",
            VolatilityKind::GarmanKlass => "GK",
            VolatilityKind::RogersSatchell => "RS",
            VolatilityKind::YangZhang => "YZ",
        }
    }

    /// Whether a window also needs the close preceding its first bar.
    pub fn needs_previous_close(self) -> bool {
        matches!(self, VolatilityKind::StdDev | VolatilityKind::YangZhang)
    }

    /// Number of rolling values produced for a series of `len` bars.
    pub fn output_len(self, len: usize, window: usize) -> usize {
        let span = window + usize::from(self.needs_previous_close());
        (len + 1).saturating_sub(span)
    }
}

impl std::str::FromStr for VolatilityKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        VolatilityKind::ALL
            .into_iter()
            .find(|k| k.code().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Argument(format!("unknown volatility estimator '{s}'")))
    }
}

/// Descriptive statistics of a rolling volatility vector. `std` is the sample
/// standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolatilitySummary {
    pub kind: VolatilityKind,
    pub window: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub std: f64,
}

/// A rolling estimate, one value per window, dated at the window's last bar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RollingVolatility {
    pub dates: Vec<NaiveDate>,
    pub values: Vec<f64>,
    pub summary: VolatilitySummary,
}

/// Weight of the open-to-close variance in the Yang-Zhang estimator.
pub fn yang_zhang_k(window: usize) -> f64 {
    let n = window as f64;
    0.34 / (1.34 + (n + 1.0) / (n - 1.0))
}

struct LogTerms {
    high_low: Vec<f64>,
    close_open: Vec<f64>,
    rs: Vec<f64>,
}

fn log_terms(series: &PriceSeries) -> Result<LogTerms> {
    let bars = series.bars();
    if let Some(bad) = bars.iter().find(|b| !(b.low > 0.0 && b.open > 0.0 && b.close > 0.0 && b.high > 0.0)) {
        return Err(Error::Domain(format!("non-positive price on {}", bad.date)));
    }
    Ok(LogTerms {
        high_low: bars.iter().map(|b| (b.high / b.low).ln()).collect(),
        close_open: bars.iter().map(|b| (b.close / b.open).ln()).collect(),
        rs: bars
            .iter()
            .map(|b| (b.high / b.close).ln() * (b.high / b.open).ln() + (b.low / b.close).ln() * (b.low / b.open).ln())
            .collect(),
    })
}

fn rs_variance(rs_terms: &[f64]) -> f64 {
    stats::mean(rs_terms)
}

/// Rolling historical volatility of `kind` over windows of `window` bars.
pub fn volatility(series: &PriceSeries, kind: VolatilityKind, window: usize) -> Result<RollingVolatility> {
    if window < 2 {
        return Err(Error::Argument(format!("volatility window must be at least 2, got {window}")));
    }
    ensure_len("bars for the volatility window", window + 1, series.len())?;
    let terms = log_terms(series)?;
    let bars = series.bars();
    let annualize = TRADING_DAYS_PER_YEAR.sqrt();
    let n = window as f64;
    let lag = usize::from(kind.needs_previous_close());

    let count = kind.output_len(series.len(), window);
    let mut dates = Vec::with_capacity(count);
    let mut values = Vec::with_capacity(count);
    for end in (window - 1 + lag)..series.len() {
        let start = end + 1 - window;
        let range = start..end + 1;
        let variance = match kind {
            VolatilityKind::StdDev => {
                let rets: Vec<f64> = range.clone().map(|i| (bars[i].close / bars[i - 1].close).ln()).collect();
                stats::variance(&rets, 0)
            }
            VolatilityKind::Parkinson => {
                terms.high_low[range].iter().map(|x| x * x).sum::<f64>() / (4.0 * n * std::f64::consts::LN_2)
            }
            VolatilityKind::GarmanKlass => {
                let c = 2.0 * std::f64::consts::LN_2 - 1.0;
                range
                    .map(|i| 0.5 * terms.high_low[i].powi(2) - c * terms.close_open[i].powi(2))
                    .sum::<f64>()
                    / n
            }
            VolatilityKind::RogersSatchell => rs_variance(&terms.rs[range]),
            VolatilityKind::YangZhang => {
                let overnight: Vec<f64> = range.clone().map(|i| (bars[i].open / bars[i - 1].close).ln()).collect();
                let k = yang_zhang_k(window);
                stats::variance(&overnight, 1)
                    + k * stats::variance(&terms.close_open[range.clone()], 1)
                    + (1.0 - k) * rs_variance(&terms.rs[range])
            }
        };
        dates.push(bars[end].date);
        values.push(variance.max(0.0).sqrt() * annualize);
    }
    debug_assert_eq!(values.len(), count);

    let summary = VolatilitySummary {
        kind,
        window,
        min: stats::min(&values),
        max: stats::max(&values),
        mean: stats::mean(&values),
        std: if values.len() > 1 { stats::std_dev(&values, 1) } else { 0.0 },
    };
    Ok(RollingVolatility { dates, values, summary })
}

/// Min/max/mean/sample-std of one-day percentage returns (the "PR" row of a
/// volatility table).
pub fn percentage_return_summary(closes: &[f64]) -> Result<(f64, f64, f64, f64)> {
    let total = total_returns(closes, 1)?;
    Ok((stats::min(&total), stats::max(&total), stats::mean(&total), stats::std_dev(&total, 1)))
}
