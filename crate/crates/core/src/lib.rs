//! Analysis, forecasting and strategy selection for daily OHLC price series.
//!
//! The pipeline ingests OHLC bars ([`ingest`]), describes them with returns
//! and volatility estimators ([`returns_vol`], [`cluster`], [`synchrony`]),
//! forecasts them with ARIMA ([`stat_forecast`]) or small feed-forward
//! networks ([`dnn_forecast`]), and picks a technical-indicator strategy
//! ([`indicators`], [`backtest`], [`metrics`], [`select`]) either on the
//! known past or on a forecast future.

pub mod backtest;
pub mod cluster;
pub mod dnn_forecast;
pub mod error;
pub mod forecast;
pub mod indicators;
pub mod ingest;
pub mod metrics;
pub mod returns_vol;
pub mod select;
pub mod stat_forecast;
mod stats;
pub mod synchrony;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
