//! Statistical baseline: unit-root testing, ARIMA selection and forecasting,
//! and autocorrelation diagnostics.

mod acf;
mod adf;
mod arima;
pub mod simplex;

pub use acf::acf_pacf;
pub use adf::{adf_p_value, adf_test, default_max_lag, AdfResult, CRITICAL_VALUES};
pub use arima::{
    arima_forecast, arima_forecast_values, auto_arima, css_objective, difference, fit_arima, fit_arma_css, AicCell, ArimaModel,
    AutoArima, FitOptions, Order, PriceScale, MAX_P, MAX_Q,
};
