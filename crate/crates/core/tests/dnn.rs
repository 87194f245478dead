use forwardtest::dnn_forecast::*;
use forwardtest::ingest::{Component, MinMaxScaler, OhlcBar, PriceSeries};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn unit_scaler() -> MinMaxScaler {
    MinMaxScaler::new(0.0, 1.0).unwrap()
}

fn l1(model: &MlpModel, pairs: &[Pair]) -> f64 {
    loss_and_gradient(model, pairs, None).unwrap().0
}

#[test]
fn backprop_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut model = MlpModel::new(5, 0.0, unit_scaler(), Component::Close, 7).unwrap();
    // Nonzero biases so no ReLU sits exactly at its kink.
    let mut params = model.params();
    for p in params.iter_mut() {
        *p += rng.gen_range(-0.05..0.05);
    }
    model.set_params(&params).unwrap();
    let pairs: Vec<Pair> = (0..8)
        .map(|_| ((0..5).map(|_| rng.gen::<f64>()).collect(), rng.gen_range(-3.0..3.0)))
        .collect();
    let (_, grad) = loss_and_gradient(&model, &pairs, None).unwrap();

    let mut offset = 0;
    for layer in &model.layers.clone() {
        let n = layer.param_count();
        for _ in 0..5 {
            let j = offset + rng.gen_range(0..n);
            let h = 1e-6;
            let mut plus = model.clone();
            let mut minus = model.clone();
            let mut p = params.clone();
            p[j] += h;
            plus.set_params(&p).unwrap();
            p[j] -= 2.0 * h;
            minus.set_params(&p).unwrap();
            let numeric = (l1(&plus, &pairs) - l1(&minus, &pairs)) / (2.0 * h);
            let denom = numeric.abs().max(grad[j].abs()).max(1e-8);
            assert!(
                (numeric - grad[j]).abs() / denom < 1e-4 || (numeric - grad[j]).abs() < 1e-10,
                "param {j}: analytic {} numeric {numeric}",
                grad[j]
            );
        }
        offset += n;
    }
}

#[test]
fn dropout_average_approaches_eval_output() {
    // Nonnegative weights and inputs keep every ReLU in its linear regime,
    // so the expectation over masks equals the eval-mode output exactly.
    let mut model = MlpModel::new(5, 0.2, unit_scaler(), Component::Close, 3).unwrap();
    let params: Vec<f64> = model.params().iter().map(|p| p.abs() + 0.01).collect();
    model.set_params(&params).unwrap();
    let x = [0.2, 0.4, 0.6, 0.8, 1.0];
    let eval = mlp_forward(&model, &x, false, 0).unwrap();
    let n = 20_000;
    let mean = (0..n).map(|s| mlp_forward(&model, &x, true, s).unwrap()).sum::<f64>() / n as f64;
    assert!((mean - eval).abs() / eval.abs() < 0.02, "mean {mean} eval {eval}");
    // and train mode really is stochastic
    assert_ne!(mlp_forward(&model, &x, true, 1).unwrap(), mlp_forward(&model, &x, true, 2).unwrap());
}

#[test]
fn training_loss_trends_down_after_warm_up() {
    let values: Vec<f64> = (0..200).map(|i| 0.5 + 0.3 * (i as f64 / 15.0).sin()).collect();
    let pairs = make_windows(&values, 5).unwrap();
    let model = MlpModel::new(5, 0.0, unit_scaler(), Component::Close, 1).unwrap();
    let cfg = TrainConfig {
        epochs: 80,
        learning_rate: 1e-4,
        dropout: 0.0,
        seed: 2,
        ..TrainConfig::default()
    };
    let (_, hist) = train(model, &pairs, &cfg).unwrap();
    let blocks: Vec<f64> = hist[10..].chunks(10).map(|c| c.iter().sum::<f64>() / c.len() as f64).collect();
    for w in blocks.windows(2) {
        assert!(w[1] <= w[0], "{blocks:?}");
    }
}

fn bars_from(values: &[f64]) -> PriceSeries {
    let d0 = chrono::NaiveDate::from_ymd_opt(2015, 1, 1).unwrap();
    let bars = values
        .iter()
        .enumerate()
        .map(|(i, &c)| OhlcBar::new(d0 + chrono::Days::new(i as u64), c, c + 1.0, c - 1.0, c, 100).unwrap())
        .collect();
    PriceSeries::new("SYN", bars).unwrap()
}

fn small_grid() -> HyperGrid {
    HyperGrid {
        epochs: vec![40],
        batch_sizes: vec![5],
        learning_rates: vec![1e-3],
        optimizers: vec![Optimizer::Adam],
    }
}

#[test]
fn affine_price_map_commutes_with_forecast() {
    let prices: Vec<f64> = (0..150).map(|i| 40.0 + 5.0 * (i as f64 / 11.0).sin() + 0.05 * i as f64).collect();
    let (a, b) = (2.5, 13.0);
    let mapped: Vec<f64> = prices.iter().map(|p| a * p + b).collect();
    let base = TrainConfig {
        seed: 5,
        ..TrainConfig::default()
    };
    let s1 = bars_from(&prices);
    let s2 = bars_from(&mapped);
    let f1 = fit_component(&s1.slice(0..120), Component::Close, 5, &small_grid(), &base).unwrap();
    let f2 = fit_component(&s2.slice(0..120), Component::Close, 5, &small_grid(), &base).unwrap();
    let p1 = forecast_validation(&f1.model, &s1, 30).unwrap();
    let p2 = forecast_validation(&f2.model, &s2, 30).unwrap();
    for (x, y) in p1.values.iter().zip(&p2.values) {
        assert!((a * x[0] + b - y[0]).abs() < 1e-6 * y[0].abs(), "{} vs {}", a * x[0] + b, y[0]);
    }
}

#[test]
fn ramp_is_continued_one_step_ahead() {
    let prices: Vec<f64> = (0..430).map(|i| 100.0 + 0.25 * i as f64).collect();
    let series = bars_from(&prices);
    let grid = HyperGrid {
        epochs: vec![200],
        batch_sizes: vec![5],
        learning_rates: vec![1e-3],
        optimizers: vec![Optimizer::Adam],
    };
    let base = TrainConfig {
        dropout: 0.0,
        seed: 8,
        ..TrainConfig::default()
    };
    let fit = fit_component(&series.slice(0..400), Component::Close, 5, &grid, &base).unwrap();
    assert!(*fit.loss_history.last().unwrap() < 0.01);
    let pred = forecast_validation(&fit.model, &series, 30).unwrap();
    for (row, truth) in pred.values.iter().zip(&prices[400..]) {
        assert!((row[0] - truth).abs() / truth < 0.01, "{} vs {truth}", row[0]);
    }
}

#[test]
fn horizon_one_validation_is_forward_on_last_lags() {
    let prices: Vec<f64> = (0..40).map(|i| 20.0 + (i as f64).sqrt()).collect();
    let series = bars_from(&prices);
    let scaler = MinMaxScaler::fit(&prices).unwrap();
    let model = MlpModel::new(5, 0.2, scaler, Component::Close, 9).unwrap();
    let f = forecast_validation(&model, &series, 1).unwrap();
    let x = scaler.transform(&prices[34..39]);
    let expected = scaler.inverse_one(mlp_forward(&model, &x, false, 0).unwrap());
    assert_eq!(f.values[0][0], expected);
    assert_eq!(f.dates[0], series.last_date().unwrap());
}

#[test]
fn window_inputs_index_the_source() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let v: Vec<f64> = (0..57).map(|_| rng.gen()).collect();
    for t in [1, 3, 5, 9] {
        let pairs = make_windows(&v, t).unwrap();
        assert_eq!(pairs.len(), v.len() - t);
        for (i, (x, y)) in pairs.iter().enumerate() {
            for (j, xj) in x.iter().enumerate() {
                assert_eq!(*xj, v[i + j]);
            }
            assert_eq!(*y, v[i + t]);
        }
    }
}
