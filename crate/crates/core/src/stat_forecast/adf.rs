//! Augmented Dickey-Fuller unit-root test with a constant term and AIC lag
//! selection.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Critical values at 1%, 5% and 10% for the constant-only regression.
pub const CRITICAL_VALUES: [f64; 3] = [-3.432, -2.863, -2.567];

// MacKinnon (1994) approximate p-value surface, constant-only, one series.
const TAU_MAX: f64 = 2.74;
const TAU_MIN: f64 = -18.83;
const TAU_STAR: f64 = -1.61;
const SMALL_P: [f64; 3] = [2.1659, 1.4412, 0.038269];
const LARGE_P: [f64; 4] = [1.7339, 0.93202, -0.12745, -0.010368];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdfResult {
    pub statistic: f64,
    pub p_value: f64,
    pub lags: usize,
    pub observations: usize,
    /// 1%, 5%, 10%.
    pub critical_values: [f64; 3],
    pub aic: f64,
}

impl AdfResult {
    /// True when the unit-root null is rejected at the 5% level.
    pub fn is_stationary_at_5pct(&self) -> bool {
        self.statistic < self.critical_values[1]
    }
}

/// Approximate p-value of an ADF statistic.
pub fn adf_p_value(statistic: f64) -> f64 {
    if statistic > TAU_MAX {
        return 1.0;
    }
    if statistic < TAU_MIN {
        return 0.0;
    }
    let poly = |coef: &[f64]| coef.iter().rev().fold(0.0, |acc, c| acc * statistic + c);
    let z = if statistic <= TAU_STAR { poly(&SMALL_P) } else { poly(&LARGE_P) };
    Normal::standard().cdf(z)
}

/// Default maximum lag, `ceil(12 (n / 100)^(1/4))`, capped by sample size.
pub fn default_max_lag(n: usize) -> usize {
    let lag = (12.0 * (n as f64 / 100.0).powf(0.25)).ceil() as usize;
    lag.min((n / 2).saturating_sub(2))
}

pub(crate) struct OlsFit {
    pub beta: DVector<f64>,
    pub ssr: f64,
    pub nobs: usize,
    /// `(X'X)^-1`.
    pub xtx_inv: DMatrix<f64>,
}

impl OlsFit {
    /// Gaussian log-likelihood based AIC, `-2 llf + 2 k`.
    pub fn aic(&self) -> f64 {
        let n = self.nobs as f64;
        let llf = -n / 2.0 * ((2.0 * std::f64::consts::PI).ln() + (self.ssr / n).ln() + 1.0);
        -2.0 * llf + 2.0 * self.beta.len() as f64
    }

    pub fn std_error(&self, j: usize) -> f64 {
        let dof = (self.nobs - self.beta.len()) as f64;
        (self.ssr / dof * self.xtx_inv[(j, j)]).sqrt()
    }
}

pub(crate) fn ols(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<OlsFit> {
    let xt = x.transpose();
    let xtx = &xt * x;
    let chol = xtx
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numerical("singular regression matrix".into()))?;
    let beta = chol.solve(&(&xt * y));
    let resid = y - x * &beta;
    Ok(OlsFit {
        ssr: resid.dot(&resid),
        nobs: y.len(),
        xtx_inv: chol.inverse(),
        beta,
    })
}

/// `dy_t = a + b y_{t-1} + sum_i g_i dy_{t-i}` over `t` in `first..dy.len()`.
fn adf_regression(y: &[f64], dy: &[f64], lags: usize, first: usize) -> Result<OlsFit> {
    let rows = dy.len() - first;
    let cols = 2 + lags;
    let x = DMatrix::from_fn(rows, cols, |r, c| {
        let t = first + r;
        match c {
            0 => 1.0,
            1 => y[t],
            _ => dy[t - (c - 1)],
        }
    });
    let target = DVector::from_iterator(rows, dy[first..].iter().copied());
    ols(&x, &target)
}

/// ADF test choosing the lag in `0..=max_lag` that minimizes AIC on a common
/// sample, then re-estimating with that lag on all usable observations.
pub fn adf_test(series: &[f64], max_lag: Option<usize>) -> Result<AdfResult> {
    let max_lag = max_lag.unwrap_or_else(|| default_max_lag(series.len()));
    if series.len() <= max_lag + 10 {
        return Err(Error::Size {
            what: "observations for the ADF regression",
            needed: max_lag + 11,
            got: series.len(),
        });
    }
    let dy: Vec<f64> = series.windows(2).map(|w| w[1] - w[0]).collect();
    // Element t of dy pairs with the level y[t].
    let mut best: Option<(usize, f64)> = None;
    for lags in 0..=max_lag {
        let aic = adf_regression(series, &dy, lags, max_lag)?.aic();
        if best.is_none_or(|(_, b)| aic < b) {
            best = Some((lags, aic));
        }
    }
    let (lags, _) = best.expect("at least lag 0");
    let fit = adf_regression(series, &dy, lags, lags)?;
    let statistic = fit.beta[1] / fit.std_error(1);
    if !statistic.is_finite() {
        return Err(Error::Numerical("non-finite ADF statistic".into()));
    }
    Ok(AdfResult {
        statistic,
        p_value: adf_p_value(statistic),
        lags,
        observations: fit.nobs,
        critical_values: CRITICAL_VALUES,
        aic: fit.aic(),
    })
}
