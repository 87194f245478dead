//! Technical indicators and the entry/exit rules built on them.

mod signals;
mod spec;
pub mod ta;

pub use signals::{generate_signals, signals_for, Action, SignalSeries};
pub use spec::{compute_indicator, default_catalog, IndicatorKind, IndicatorSpec, IndicatorValues, StrategyKind};
