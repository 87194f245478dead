use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::mlp::{loss_and_gradient, MlpModel, Optimizer, TrainingMeta, DEFAULT_DROPOUT};
use crate::error::{Error, Result};

/// A supervised example: `t` scaled lags and the scaled next value.
pub type Pair = (Vec<f64>, f64);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub optimizer: Optimizer,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub dropout: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            batch_size: 5,
            learning_rate: 1e-3,
            optimizer: Optimizer::Adam,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            dropout: DEFAULT_DROPOUT,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Argument("batch size must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Argument(format!("learning rate {} must be positive", self.learning_rate)));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Argument(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) || self.epsilon <= 0.0 {
            return Err(Error::Argument("invalid Adam parameters".into()));
        }
        Ok(())
    }
}

/// Supervised pairs from a sliding window of `t` values.
pub fn make_windows(values: &[f64], t: usize) -> Result<Vec<Pair>> {
    if t == 0 {
        return Err(Error::Argument("window width must be at least 1".into()));
    }
    crate::error::ensure_len("values for windowing", t + 1, values.len())?;
    Ok(values.windows(t + 1).map(|w| (w[..t].to_vec(), w[t])).collect())
}

/// Mini-batch training on mean absolute error. The model's dropout rate is
/// replaced by `config.dropout`. Returns the trained model and the mean
/// training loss of every epoch.
pub fn train(mut model: MlpModel, pairs: &[Pair], config: &TrainConfig) -> Result<(MlpModel, Vec<f64>)> {
    config.validate()?;
    if pairs.is_empty() {
        return Err(Error::Size {
            what: "training pairs",
            needed: 1,
            got: 0,
        });
    }
    model.dropout = config.dropout;
    model.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut params = model.params();
    let mut m = vec![0.0; params.len()];
    let mut v = vec![0.0; params.len()];
    let mut step = 0i32;
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);
    let mut batch: Vec<Pair> = Vec::with_capacity(config.batch_size);

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(config.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| pairs[i].clone()));
            let (loss, grad) = loss_and_gradient(&model, &batch, Some(&mut rng))?;
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::Divergence { epoch, loss });
            }
            epoch_loss += loss * chunk.len() as f64;
            step += 1;
            match config.optimizer {
                Optimizer::Sgd => {
                    for (p, g) in params.iter_mut().zip(&grad) {
                        *p -= config.learning_rate * g;
                    }
                }
                Optimizer::Adam => {
                    let c1 = 1.0 - config.beta1.powi(step);
                    let c2 = 1.0 - config.beta2.powi(step);
                    for i in 0..params.len() {
                        m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * grad[i];
                        v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * grad[i] * grad[i];
                        params[i] -= config.learning_rate * (m[i] / c1) / ((v[i] / c2).sqrt() + config.epsilon);
                    }
                }
            }
            if params.iter().any(|p| !p.is_finite()) {
                return Err(Error::Divergence { epoch, loss: f64::NAN });
            }
            model.set_params(&params)?;
        }
        let mean = epoch_loss / pairs.len() as f64;
        if !mean.is_finite() {
            return Err(Error::Divergence { epoch, loss: mean });
        }
        history.push(mean);
    }
    model.meta = Some(TrainingMeta {
        epochs: config.epochs,
        batch_size: config.batch_size,
        learning_rate: config.learning_rate,
        optimizer: config.optimizer,
        seed: config.seed,
        final_loss: history.last().copied().unwrap_or(f64::NAN),
    });
    Ok((model, history))
}
