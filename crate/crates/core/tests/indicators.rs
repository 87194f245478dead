use chrono::NaiveDate;
use forwardtest::indicators::*;
use forwardtest::ingest::{OhlcBar, PriceSeries};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-9;

fn random_series(n: usize, seed: u64) -> PriceSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d0 = NaiveDate::from_ymd_opt(2020, 3, 2).unwrap();
    let mut close: f64 = 50.0;
    let bars = (0..n)
        .map(|i| {
            let open: f64 = close * (1.0 + rng.gen_range(-0.02..0.02));
            close = open * (1.0 + rng.gen_range(-0.03..0.03));
            let high = open.max(close) * (1.0 + rng.gen_range(0.0..0.02));
            let low = open.min(close) * (1.0 - rng.gen_range(0.0..0.02));
            OhlcBar::new(d0 + chrono::Days::new(i as u64), open, high, low, close, 1000).unwrap()
        })
        .collect();
    PriceSeries::new("R", bars).unwrap()
}

fn map_prices(series: &PriceSeries, f: impl Fn(f64) -> f64) -> PriceSeries {
    let bars = series
        .bars()
        .iter()
        .map(|b| OhlcBar::new(b.date, f(b.open), f(b.high), f(b.low), f(b.close), b.volume).unwrap())
        .collect();
    PriceSeries::new("M", bars).unwrap()
}

/// Exponential smoothing written as an explicit weighted sum: the seed is
/// the mean of `x[start..start+n]` and each later value is
/// `(1-a)^m seed + sum_j a (1-a)^j x[t-j]`.
fn smooth_closed(x: &[f64], start: usize, n: usize, alpha: f64) -> Vec<Option<f64>> {
    let seed_at = start + n - 1;
    let seed = x[start..=seed_at].iter().sum::<f64>() / n as f64;
    (0..x.len())
        .map(|t| {
            if t < seed_at {
                return None;
            }
            let m = t - seed_at;
            let mut v = (1.0 - alpha).powi(m as i32) * seed;
            for j in 0..m {
                v += alpha * (1.0 - alpha).powi(j as i32) * x[t - j];
            }
            Some(v)
        })
        .collect()
}

fn ema_closed(x: &[f64], n: usize) -> Vec<Option<f64>> {
    smooth_closed(x, 0, n, 2.0 / (n as f64 + 1.0))
}

/// EMA of a series defined from `first` on.
fn ema_closed_opt(x: &[Option<f64>], n: usize) -> Vec<Option<f64>> {
    let first = x.iter().position(Option::is_some).unwrap();
    let dense: Vec<f64> = x.iter().map(|v| v.unwrap_or(0.0)).collect();
    smooth_closed(&dense, first, n, 2.0 / (n as f64 + 1.0))
}

fn wilder_closed(x: &[f64], start: usize, n: usize) -> Vec<Option<f64>> {
    smooth_closed(x, start, n, 1.0 / n as f64)
}

fn assert_lines(name: &str, got: &[Option<f64>], want: &[Option<f64>]) {
    assert_eq!(got.len(), want.len(), "{name}: length");
    for (t, (g, w)) in got.iter().zip(want).enumerate() {
        match (g, w) {
            (None, None) => {}
            (Some(g), Some(w)) => assert!((g - w).abs() <= TOL * (1.0 + w.abs()), "{name}[{t}]: {g} vs {w}"),
            _ => panic!("{name}[{t}]: definedness differs ({g:?} vs {w:?})"),
        }
    }
}

fn values(spec: &IndicatorSpec, s: &PriceSeries) -> IndicatorValues {
    compute_indicator(spec, s).unwrap()
}

fn brute_rsi(c: &[f64], n: usize) -> Vec<Option<f64>> {
    let gains: Vec<f64> = (0..c.len()).map(|t| if t == 0 { 0.0 } else { (c[t] - c[t - 1]).max(0.0) }).collect();
    let losses: Vec<f64> = (0..c.len()).map(|t| if t == 0 { 0.0 } else { (c[t - 1] - c[t]).max(0.0) }).collect();
    let g = wilder_closed(&gains, 1, n);
    let l = wilder_closed(&losses, 1, n);
    g.iter()
        .zip(&l)
        .map(|(g, l)| match (g, l) {
            (Some(g), Some(l)) => Some(if *l == 0.0 { 100.0 } else { 100.0 - 100.0 / (1.0 + g / l) }),
            _ => None,
        })
        .collect()
}

fn brute_tr(h: &[f64], l: &[f64], c: &[f64]) -> Vec<f64> {
    (0..c.len())
        .map(|t| {
            if t == 0 {
                h[0] - l[0]
            } else {
                [h[t] - l[t], (h[t] - c[t - 1]).abs(), (l[t] - c[t - 1]).abs()].into_iter().fold(f64::MIN, f64::max)
            }
        })
        .collect()
}

#[test]
fn moving_averages_match_definitions() {
    let s = random_series(50, 1);
    let c = s.closes();
    let sma: Vec<Option<f64>> = (0..50).map(|t| (t >= 19).then(|| c[t - 19..=t].iter().sum::<f64>() / 20.0)).collect();
    assert_lines("sma", values(&IndicatorSpec::single(IndicatorKind::Sma), &s).get("sma").unwrap(), &sma);
    assert_lines("ema", values(&IndicatorSpec::single(IndicatorKind::Ema), &s).get("ema").unwrap(), &ema_closed(&c, 20));

    let e1 = ema_closed(&c, 9);
    let e2 = ema_closed_opt(&e1, 9);
    let e3 = ema_closed_opt(&e2, 9);
    let tema: Vec<Option<f64>> = (0..50).map(|t| Some(3.0 * e1[t]? - 3.0 * e2[t]? + e3[t]?)).collect();
    let v = values(&IndicatorSpec::single(IndicatorKind::Tema), &s);
    assert_lines("tema_close", v.get("tema_close").unwrap(), &tema);
    let eo = ema_closed(&s.opens(), 9);
    assert!(v.get("tema_open").unwrap()[24].is_some() && eo[24].is_some());
}

#[test]
fn macd_and_po_match_definitions() {
    let s = random_series(50, 2);
    let c = s.closes();
    let (f, sl) = (ema_closed(&c, 12), ema_closed(&c, 26));
    let macd: Vec<Option<f64>> = (0..50).map(|t| Some(f[t]? - sl[t]?)).collect();
    let sig = ema_closed_opt(&macd, 9);
    let v = values(&IndicatorSpec::single(IndicatorKind::Macd), &s);
    assert_lines("macd", v.get("macd").unwrap(), &macd);
    assert_lines("signal", v.get("signal").unwrap(), &sig);
    let hist: Vec<Option<f64>> = (0..50).map(|t| Some(macd[t]? - sig[t]?)).collect();
    assert_lines("hist", v.get("hist").unwrap(), &hist);

    let po: Vec<Option<f64>> = (0..50).map(|t| Some(100.0 * (f[t]? - sl[t]?) / sl[t]?)).collect();
    assert_lines("po", values(&IndicatorSpec::single(IndicatorKind::Po), &s).get("po").unwrap(), &po);
}

#[test]
fn bands_and_ranges_match_definitions() {
    let s = random_series(50, 3);
    let (h, l, c) = (s.highs(), s.lows(), s.closes());
    let v = values(&IndicatorSpec::single(IndicatorKind::Bb), &s);
    for t in 19..50 {
        let w = &c[t - 19..=t];
        let m = w.iter().sum::<f64>() / 20.0;
        let sd = (w.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / 20.0).sqrt();
        assert!((v.get("upper").unwrap()[t].unwrap() - (m + 2.0 * sd)).abs() < TOL * m);
        assert!((v.get("lower").unwrap()[t].unwrap() - (m - 2.0 * sd)).abs() < TOL * m);
    }

    let hh = |t: usize| h[t - 13..=t].iter().copied().fold(f64::MIN, f64::max);
    let ll = |t: usize| l[t - 13..=t].iter().copied().fold(f64::MAX, f64::min);
    let k: Vec<Option<f64>> = (0..50).map(|t| (t >= 13).then(|| 100.0 * (c[t] - ll(t)) / (hh(t) - ll(t)))).collect();
    let d: Vec<Option<f64>> = (0..50).map(|t| if t >= 15 { Some((k[t]? + k[t - 1]? + k[t - 2]?) / 3.0) } else { None }).collect();
    let v = values(&IndicatorSpec::single(IndicatorKind::Stoch), &s);
    assert_lines("k", v.get("k").unwrap(), &k);
    assert_lines("d", v.get("d").unwrap(), &d);

    let wr: Vec<Option<f64>> = (0..50).map(|t| (t >= 13).then(|| -100.0 * (hh(t) - c[t]) / (hh(t) - ll(t)))).collect();
    assert_lines("willr", values(&IndicatorSpec::single(IndicatorKind::Willr), &s).get("willr").unwrap(), &wr);

    let mom: Vec<Option<f64>> = (0..50).map(|t| (t >= 10).then(|| c[t] - c[t - 10])).collect();
    assert_lines("mom", values(&IndicatorSpec::single(IndicatorKind::Mom), &s).get("mom").unwrap(), &mom);
}

#[test]
fn wilder_indicators_match_definitions() {
    let s = random_series(50, 4);
    let (h, l, c) = (s.highs(), s.lows(), s.closes());
    assert_lines("rsi", values(&IndicatorSpec::single(IndicatorKind::Rsi), &s).get("rsi").unwrap(), &brute_rsi(&c, 5));
    let tr = brute_tr(&h, &l, &c);
    assert_lines("atr", values(&IndicatorSpec::single(IndicatorKind::Atr), &s).get("atr").unwrap(), &wilder_closed(&tr, 1, 14));

    let n = 14;
    let mut pdm = vec![0.0; 50];
    let mut mdm = vec![0.0; 50];
    for t in 1..50 {
        let up = h[t] - h[t - 1];
        let down = l[t - 1] - l[t];
        pdm[t] = if up > down && up > 0.0 { up } else { 0.0 };
        mdm[t] = if down > up && down > 0.0 { down } else { 0.0 };
    }
    let (str_, sp, sm) = (wilder_closed(&tr, 1, n), wilder_closed(&pdm, 1, n), wilder_closed(&mdm, 1, n));
    let pdi: Vec<Option<f64>> = (0..50).map(|t| Some(100.0 * sp[t]? / str_[t]?)).collect();
    let mdi: Vec<Option<f64>> = (0..50).map(|t| Some(100.0 * sm[t]? / str_[t]?)).collect();
    let dx: Vec<f64> = (0..50)
        .map(|t| match (pdi[t], mdi[t]) {
            (Some(p), Some(m)) => 100.0 * (p - m).abs() / (p + m),
            _ => 0.0,
        })
        .collect();
    let adx = wilder_closed(&dx, n, n);
    let v = values(&IndicatorSpec::single(IndicatorKind::Adx), &s);
    assert_lines("plus_di", v.get("plus_di").unwrap(), &pdi);
    assert_lines("minus_di", v.get("minus_di").unwrap(), &mdi);
    assert_lines("adx", v.get("adx").unwrap(), &adx);
    assert_eq!(v.get("adx").unwrap().iter().position(Option::is_some), Some(2 * n - 1));
}

#[test]
fn combos_reuse_member_lines() {
    let s = random_series(50, 5);
    let c = s.closes();
    let v = values(&IndicatorSpec::new(StrategyKind::PoRsi), &s);
    assert_lines("rsi", v.get("rsi").unwrap(), &brute_rsi(&c, 14));
    let v = values(&IndicatorSpec::new(StrategyKind::StMoMacd), &s);
    for name in ["k", "d", "mom", "macd", "signal"] {
        assert!(v.get(name).is_some(), "{name}");
    }
}

#[test]
fn uptrend_has_positive_direction() {
    let d0 = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
    let bars = (0..60)
        .map(|i| {
            let c = 10.0 + i as f64;
            OhlcBar::new(d0 + chrono::Days::new(i), c - 0.3, c + 0.5, c - 0.5, c, 1).unwrap()
        })
        .collect();
    let s = PriceSeries::new("U", bars).unwrap();
    let v = values(&IndicatorSpec::single(IndicatorKind::Adx), &s);
    let (p, m) = (v.get("plus_di").unwrap(), v.get("minus_di").unwrap());
    let defined: Vec<usize> = (0..60).filter(|&t| p[t].is_some()).collect();
    assert!(!defined.is_empty());
    assert!(defined.iter().all(|&t| p[t].unwrap() > m[t].unwrap()));
}

#[test]
fn short_series_is_size_error() {
    let s = random_series(20, 6);
    assert!(matches!(
        compute_indicator(&IndicatorSpec::single(IndicatorKind::Adx), &s),
        Err(forwardtest::Error::Size { .. })
    ));
}

#[test]
fn no_signals_during_warm_up() {
    let s = random_series(120, 7);
    for spec in default_catalog() {
        let (_, sig) = signals_for(&spec, &s).unwrap();
        assert_eq!(sig.len(), s.len());
        let warm = spec.warm_up();
        assert!(sig.actions[..warm].iter().all(|&a| a == Action::Hold), "{}", spec.label());
    }
}

fn close_enough(a: &[Option<f64>], b: &[Option<f64>], f: impl Fn(f64) -> f64) -> bool {
    a.iter().zip(b).all(|(x, y)| match (x, y) {
        (None, None) => true,
        (Some(x), Some(y)) => (f(*x) - y).abs() <= 1e-9 * (1.0 + y.abs()),
        _ => false,
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn shift_invariance(seed in 0u64..10_000, shift in -20.0f64..200.0) {
        let s = random_series(80, seed);
        let moved = map_prices(&s, |p| p + shift);
        for kind in [IndicatorKind::Rsi, IndicatorKind::Stoch, IndicatorKind::Willr] {
            let spec = IndicatorSpec::single(kind);
            let (a, b) = (values(&spec, &s), values(&spec, &moved));
            for ((name, x), (_, y)) in a.lines.iter().zip(&b.lines) {
                prop_assert!(close_enough(x, y, |v| v), "{kind:?} {name}");
            }
        }
        for kind in [IndicatorKind::Sma, IndicatorKind::Ema, IndicatorKind::Tema, IndicatorKind::Bb] {
            let spec = IndicatorSpec::single(kind);
            let (a, b) = (values(&spec, &s), values(&spec, &moved));
            for ((name, x), (_, y)) in a.lines.iter().zip(&b.lines) {
                prop_assert!(close_enough(x, y, |v| v + shift), "{kind:?} {name}");
            }
        }
    }

    #[test]
    fn scale_equivariance(seed in 0u64..10_000, a in 0.05f64..40.0) {
        let s = random_series(80, seed);
        let scaled = map_prices(&s, |p| a * p);
        for kind in [IndicatorKind::Sma, IndicatorKind::Ema, IndicatorKind::Tema, IndicatorKind::Atr, IndicatorKind::Mom] {
            let spec = IndicatorSpec::single(kind);
            let (x, y) = (values(&spec, &s), values(&spec, &scaled));
            for ((name, u), (_, v)) in x.lines.iter().zip(&y.lines) {
                prop_assert!(close_enough(u, v, |w| a * w), "{kind:?} {name}");
            }
        }
        for kind in [IndicatorKind::Rsi, IndicatorKind::Stoch, IndicatorKind::Willr, IndicatorKind::Adx, IndicatorKind::Po] {
            let spec = IndicatorSpec::single(kind);
            let (x, y) = (values(&spec, &s), values(&spec, &scaled));
            for ((name, u), (_, v)) in x.lines.iter().zip(&y.lines) {
                prop_assert!(close_enough(u, v, |w| w), "{kind:?} {name}");
            }
        }
    }
}
