//! Optional TOML configuration. Every key is optional; command-line flags win.

use std::path::Path;

use anyhow::{Context, Result};
use serde::Deserialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub seed: Option<u64>,
    #[serde(default)]
    pub volatility: VolatilitySection,
    #[serde(default)]
    pub cluster: ClusterSection,
    #[serde(default)]
    pub synchrony: SynchronySection,
    #[serde(default)]
    pub adf: AdfSection,
    #[serde(default)]
    pub arima: ArimaSection,
    #[serde(default)]
    pub dnn: DnnSection,
    #[serde(default)]
    pub select: SelectSection,
    #[serde(default)]
    pub backtest: BacktestSection,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VolatilitySection {
    pub window: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterSection {
    pub window: Option<usize>,
    pub k_min: Option<usize>,
    pub k_max: Option<usize>,
    pub restarts: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynchronySection {
    pub window: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdfSection {
    pub max_lag: Option<usize>,
    pub acf_lags: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArimaSection {
    pub horizon: Option<usize>,
    pub p_max: Option<usize>,
    pub q_max: Option<usize>,
    pub d: Option<usize>,
    pub log: Option<bool>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DnnSection {
    pub lags: Option<usize>,
    pub horizon: Option<usize>,
    pub dropout: Option<f64>,
    pub epochs: Option<Vec<usize>>,
    pub batch_sizes: Option<Vec<usize>>,
    pub learning_rates: Option<Vec<f64>>,
    pub optimizers: Option<Vec<String>>,
    pub components: Option<Vec<String>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectSection {
    pub strategies: Option<Vec<String>>,
    pub window: Option<usize>,
    pub fee: Option<f64>,
    pub budget: Option<f64>,
    pub periods_per_year: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BacktestSection {
    pub fee: Option<f64>,
    pub budget: Option<f64>,
    pub periods_per_year: Option<f64>,
}

/// The parsed config and the SHA-256 of its bytes (of the empty string when
/// no file is given).
pub fn load(path: Option<&Path>) -> Result<(Config, String)> {
    let Some(path) = path else {
        return Ok((Config::default(), hex::encode(Sha256::digest(b""))));
    };
    let bytes = std::fs::read(path).with_context(|| format!("reading config {}", path.display()))?;
    let text = std::str::from_utf8(&bytes).with_context(|| format!("config {} is not UTF-8", path.display()))?;
    let config: Config = toml::from_str(text).with_context(|| format!("parsing config {}", path.display()))?;
    Ok((config, hex::encode(Sha256::digest(&bytes))))
}
