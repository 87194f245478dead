use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::mlp::{mlp_forward, MlpModel, Optimizer};
use super::train::{train, Pair, TrainConfig};
use crate::error::{Error, Result};

/// Hyper-parameter values to cross.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperGrid {
    pub epochs: Vec<usize>,
    pub batch_sizes: Vec<usize>,
    pub learning_rates: Vec<f64>,
    pub optimizers: Vec<Optimizer>,
}

impl Default for HyperGrid {
    fn default() -> Self {
        Self {
            epochs: vec![50, 100, 200],
            batch_sizes: vec![5],
            learning_rates: vec![1e-2, 1e-3, 1e-4],
            optimizers: vec![Optimizer::Adam, Optimizer::Sgd],
        }
    }
}

impl HyperGrid {
    /// Every combination, applied on top of `base`.
    pub fn configs(&self, base: &TrainConfig) -> Vec<TrainConfig> {
        let mut out = Vec::new();
        for &epochs in &self.epochs {
            for &batch_size in &self.batch_sizes {
                for &learning_rate in &self.learning_rates {
                    for &optimizer in &self.optimizers {
                        out.push(TrainConfig {
                            epochs,
                            batch_size,
                            learning_rate,
                            optimizer,
                            ..base.clone()
                        });
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub config: TrainConfig,
    /// Mean absolute error on the validation pairs, in scaled units.
    pub validation_mae: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    pub cells: Vec<GridCell>,
    pub best_index: usize,
    pub fit_pairs: usize,
    pub validation_pairs: usize,
}

impl GridReport {
    pub fn best(&self) -> &TrainConfig {
        &self.cells[self.best_index].config
    }
}

/// Eval-mode mean absolute error of `model` over `pairs`.
pub fn evaluate_mae(model: &MlpModel, pairs: &[Pair]) -> Result<f64> {
    let mut total = 0.0;
    for (x, y) in pairs {
        total += (mlp_forward(model, x, false, 0)? - y).abs();
    }
    Ok(total / pairs.len() as f64)
}

/// Trains `template` once per grid cell on the first 80% of `pairs` and
/// scores it on the last 20%. Every cell starts from the same initial
/// weights and uses `base.seed`.
pub fn grid_search(template: &MlpModel, pairs: &[Pair], grid: &HyperGrid, base: &TrainConfig) -> Result<GridReport> {
    let configs = grid.configs(base);
    if configs.is_empty() {
        return Err(Error::Argument("empty hyper-parameter grid".into()));
    }
    crate::error::ensure_len("pairs for a fit/validation split", 2, pairs.len())?;
    let n_val = ((pairs.len() as f64 * 0.2).round() as usize).clamp(1, pairs.len() - 1);
    let (fit, val) = pairs.split_at(pairs.len() - n_val);

    let cells: Vec<GridCell> = configs
        .into_par_iter()
        .map(|config| {
            let scored = train(template.clone(), fit, &config).and_then(|(m, _)| evaluate_mae(&m, val));
            match scored {
                Ok(mae) if mae.is_finite() => GridCell {
                    config,
                    validation_mae: Some(mae),
                    error: None,
                },
                Ok(mae) => GridCell {
                    config,
                    validation_mae: None,
                    error: Some(format!("non-finite validation error {mae}")),
                },
                Err(e) => GridCell {
                    config,
                    validation_mae: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();

    let best_index = cells
        .iter()
        .enumerate()
        .filter_map(|(i, c)| c.validation_mae.map(|m| (i, m)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, _)| i)
        .ok_or_else(|| Error::AllFailed(format!("all {} grid cells failed to train", cells.len())))?;
    Ok(GridReport {
        cells,
        best_index,
        fit_pairs: fit.len(),
        validation_pairs: val.len(),
    })
}
