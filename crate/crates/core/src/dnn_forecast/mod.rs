//! Feed-forward network forecasters, one network per OHLC component.

mod grid;
mod mlp;
mod persist;
mod predict;
mod train;

pub use grid::{evaluate_mae, grid_search, GridCell, GridReport, HyperGrid};
pub use mlp::{
    geometry, loss_and_gradient, mlp_forward, Layer, MlpModel, Optimizer, TrainingMeta, DEFAULT_DROPOUT, DEFAULT_LAGS, HIDDEN1_FACTOR,
    HIDDEN2_FACTOR,
};
pub use persist::{decode_model, encode_model, load_model, save_model, FORMAT_VERSION, MAGIC, PREAMBLE_LEN};
pub use predict::{fit_component, forecast_recursive, forecast_validation, recursive_path, FittedComponent, DEFAULT_HORIZON};
pub use train::{make_windows, train, Pair, TrainConfig};
