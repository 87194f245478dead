use chrono::NaiveDate;
use forwardtest::forecast::{next_weekdays, ForecastSeries};
use forwardtest::indicators::{default_catalog, IndicatorKind, IndicatorSpec};
use forwardtest::ingest::{Component, OhlcBar, PriceSeries};
use forwardtest::select::*;
use forwardtest::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn d0() -> NaiveDate {
    NaiveDate::from_ymd_opt(2021, 1, 4).unwrap()
}

fn from_closes(closes: &[f64], start: NaiveDate) -> PriceSeries {
    let dates = std::iter::once(start).chain(next_weekdays(start, closes.len() - 1)).collect::<Vec<_>>();
    let mut prev = closes[0];
    let bars = closes
        .iter()
        .zip(dates)
        .map(|(&c, d)| {
            let o = prev;
            prev = c;
            OhlcBar::new(d, o, o.max(c) * 1.004, o.min(c) * 0.996, c, 100).unwrap()
        })
        .collect();
    PriceSeries::new("S", bars).unwrap()
}

fn random_walk(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = 40.0;
    (0..n)
        .map(|_| {
            p *= 1.0 + rng.gen_range(-0.025..0.025);
            p
        })
        .collect()
}

fn as_forecast(series: &PriceSeries) -> ForecastSeries {
    let values = series.bars().iter().map(|b| vec![b.open, b.high, b.low, b.close]).collect();
    ForecastSeries::new("test", series.dates(), Component::ALL.to_vec(), values).unwrap()
}

#[test]
fn single_candidate_is_chosen() {
    let s = from_closes(&random_walk(80, 1), d0());
    let spec = IndicatorSpec::single(IndicatorKind::Macd);
    let r = select_strategy(std::slice::from_ref(&spec), &s, 50, Mode::Backtest, &SimulationParams::default()).unwrap();
    assert_eq!(r.chosen, spec);
    assert_eq!(r.ranked.len(), 1);
    assert_eq!(r.window_len, 30);
}

#[test]
fn profitable_candidate_beats_idle_one() {
    let closes: Vec<f64> = (0..80).map(|i| 20.0 + 0.5 * i as f64).collect();
    let s = from_closes(&closes, d0());
    let idle = IndicatorSpec::single(IndicatorKind::Rsi);
    let trend = IndicatorSpec::single(IndicatorKind::Adx);
    let r = select_strategy(&[idle.clone(), trend.clone()], &s, 50, Mode::Backtest, &SimulationParams::default()).unwrap();
    assert_eq!(r.chosen, trend);
    let loser = r.ranked.iter().find(|c| c.spec == idle).unwrap();
    assert_eq!(loser.metrics.trades, 0);
    // ADX is above its threshold with +DI on top: enter on the first window
    // bar, fill at the next open, forced out at the final close
    let bars = s.bars();
    let expected = 100.0 * (bars[79].close / bars[51].open - 1.0);
    assert!((r.best().metrics.total_return - expected).abs() < 1e-9);
    assert_eq!(r.tie_break, "unique maximum total return");
}

#[test]
fn ranking_is_a_sorted_permutation() {
    let catalog = default_catalog();
    for seed in 0..5 {
        let s = from_closes(&random_walk(140, seed), d0());
        let r = select_strategy(&catalog, &s, 110, Mode::Backtest, &SimulationParams::default()).unwrap();
        let mut got: Vec<String> = r.ranked.iter().map(|c| c.label.clone()).collect();
        let mut want: Vec<String> = catalog.iter().map(IndicatorSpec::label).collect();
        got.sort();
        want.sort();
        assert_eq!(got, want);
        let best = r.ranked.iter().map(|c| c.metrics.total_return).fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(r.best().metrics.total_return, best);
        assert_eq!(r.chosen, r.best().spec);
        assert!(r.ranked.windows(2).all(|w| w[0].metrics.total_return >= w[1].metrics.total_return));
    }
}

#[test]
fn selection_errors() {
    let s = from_closes(&random_walk(60, 2), d0());
    let p = SimulationParams::default();
    assert!(matches!(select_strategy(&[], &s, 40, Mode::Backtest, &p), Err(Error::Argument(_))));
    let adx = IndicatorSpec::single(IndicatorKind::Adx);
    assert!(matches!(select_strategy(&[adx], &s, 10, Mode::Backtest, &p), Err(Error::Size { .. })));
}

fn scenario(seed: u64) -> (PriceSeries, PriceSeries, PriceSeries) {
    let path = random_walk(150, seed);
    let all = from_closes(&path, d0());
    let history = all.slice(0..120);
    let future = all.slice(120..150);
    let guess = from_closes(&random_walk(30, seed + 100), future.first_date().unwrap());
    (history, future, guess)
}

#[test]
fn comparison_bookkeeping() {
    let catalog = default_catalog();
    let (history, future, guess) = scenario(3);
    let c = compare_modes(&catalog, &history, &as_forecast(&guess), &future, &SimulationParams::default()).unwrap();
    assert_eq!(c.runs, 2 * catalog.len() + 2);
    assert_eq!(c.backtest.mode, Mode::Backtest);
    assert_eq!(c.forwardtest.window_start, future.first_date().unwrap());
    assert_eq!(c.backtest.window_end, history.last_date().unwrap());
    assert_eq!(c.backtest_on_future.spec, c.backtest.chosen);
    assert_eq!(c.forwardtest_on_future.spec, c.forwardtest.chosen);
    assert_eq!(c.comparison_csv().lines().count(), 3);
}

#[test]
fn agreeing_modes_give_identical_future_metrics() {
    let spec = IndicatorSpec::single(IndicatorKind::Ema);
    let (history, future, guess) = scenario(4);
    let c = compare_modes(&[spec], &history, &as_forecast(&guess), &future, &SimulationParams::default()).unwrap();
    assert_eq!(c.backtest_on_future.metrics, c.forwardtest_on_future.metrics);
}

#[test]
fn forwardtest_never_reads_the_real_future() {
    let catalog = default_catalog();
    let p = SimulationParams::default();
    let (history, future, guess) = scenario(5);
    let forecast = as_forecast(&guess);
    let a = compare_modes(&catalog, &history, &forecast, &future, &p).unwrap();
    let other_future = from_closes(&random_walk(30, 999), future.first_date().unwrap());
    let b = compare_modes(&catalog, &history, &forecast, &other_future, &p).unwrap();
    assert_eq!(a.forwardtest, b.forwardtest);
    assert_eq!(a.backtest, b.backtest);

    // history that runs past the forecast start is cut at the forecast start
    let extended = history.concat(&future).unwrap();
    let (fwd, start) = forward_series(&extended, &forecast).unwrap();
    assert_eq!(start, history.len());
    let (fwd2, _) = forward_series(&history, &forecast).unwrap();
    assert_eq!(fwd.bars(), fwd2.bars());
    assert_eq!(fwd.slice(start..fwd.len()).closes(), guess.closes());
    assert_eq!(fwd.slice(start..fwd.len()).opens(), guess.opens());
}

#[test]
fn overlapping_dates_are_rejected() {
    let (history, future, _) = scenario(6);
    let stale = as_forecast(&history.slice(90..120));
    let r = compare_modes(&default_catalog(), &history, &stale, &future, &SimulationParams::default());
    assert!(matches!(r, Err(Error::Argument(_))));
}

#[test]
fn selection_is_deterministic() {
    let s = from_closes(&random_walk(140, 8), d0());
    let p = SimulationParams::default();
    let a = select_strategy(&default_catalog(), &s, 110, Mode::Forwardtest, &p).unwrap();
    let b = select_strategy(&default_catalog(), &s, 110, Mode::Forwardtest, &p).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}
