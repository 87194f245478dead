//! Indicator arithmetic on plain vectors. Outputs are aligned with the input;
//! `None` marks warm-up positions.

/// Simple moving average of the last `n` values.
pub fn sma(values: &[f64], n: usize) -> Vec<Option<f64>> {
    let mut out = vec![None; values.len()];
    if n == 0 || values.len() < n {
        return out;
    }
    let mut sum: f64 = values[..n].iter().sum();
    out[n - 1] = Some(sum / n as f64);
    for t in n..values.len() {
        sum += values[t] - values[t - n];
        out[t] = Some(sum / n as f64);
    }
    out
}

/// Exponential moving average with `alpha = 2 / (n + 1)`, seeded with the SMA
/// of the first `n` defined values. Undefined inputs must form a prefix.
pub fn ema(values: &[Option<f64>], n: usize) -> Vec<Option<f64>> {
    let mut out = vec![None; values.len()];
    let Some(first) = values.iter().position(Option::is_some) else {
        return out;
    };
    if n == 0 || values.len() < first + n {
        return out;
    }
    let alpha = 2.0 / (n as f64 + 1.0);
    let seed_at = first + n - 1;
    let mut prev = values[first..=seed_at].iter().map(|v| v.expect("defined after warm-up")).sum::<f64>() / n as f64;
    out[seed_at] = Some(prev);
    for t in seed_at + 1..values.len() {
        let x = values[t].expect("defined after warm-up");
        prev = alpha * x + (1.0 - alpha) * prev;
        out[t] = Some(prev);
    }
    out
}

pub fn ema_of(values: &[f64], n: usize) -> Vec<Option<f64>> {
    let wrapped: Vec<Option<f64>> = values.iter().copied().map(Some).collect();
    ema(&wrapped, n)
}

/// `3 EMA - 3 EMA(EMA) + EMA(EMA(EMA))`.
pub fn tema(values: &[f64], n: usize) -> Vec<Option<f64>> {
    let e1 = ema_of(values, n);
    let e2 = ema(&e1, n);
    let e3 = ema(&e2, n);
    (0..values.len())
        .map(|t| match (e1[t], e2[t], e3[t]) {
            (Some(a), Some(b), Some(c)) => Some(3.0 * a - 3.0 * b + c),
            _ => None,
        })
        .collect()
}

/// Population standard deviation over a trailing window of `n`.
pub fn rolling_std(values: &[f64], n: usize) -> Vec<Option<f64>> {
    let means = sma(values, n);
    means
        .iter()
        .enumerate()
        .map(|(t, m)| m.map(|m| (values[t + 1 - n..=t].iter().map(|v| (v - m).powi(2)).sum::<f64>() / n as f64).sqrt()))
        .collect()
}

pub fn rolling_max(values: &[f64], n: usize) -> Vec<Option<f64>> {
    rolling(values, n, f64::max, f64::NEG_INFINITY)
}

pub fn rolling_min(values: &[f64], n: usize) -> Vec<Option<f64>> {
    rolling(values, n, f64::min, f64::INFINITY)
}

fn rolling(values: &[f64], n: usize, f: fn(f64, f64) -> f64, init: f64) -> Vec<Option<f64>> {
    (0..values.len())
        .map(|t| (n > 0 && t + 1 >= n).then(|| values[t + 1 - n..=t].iter().copied().fold(init, f)))
        .collect()
}

/// Wilder's running mean: the plain mean of `x[start..start+n]`, then
/// `(prev (n - 1) + x) / n`.
pub fn wilder(values: &[f64], n: usize, start: usize) -> Vec<Option<f64>> {
    let mut out = vec![None; values.len()];
    if n == 0 || values.len() < start + n {
        return out;
    }
    let seed_at = start + n - 1;
    let mut prev = values[start..=seed_at].iter().sum::<f64>() / n as f64;
    out[seed_at] = Some(prev);
    for t in seed_at + 1..values.len() {
        prev = (prev * (n as f64 - 1.0) + values[t]) / n as f64;
        out[t] = Some(prev);
    }
    out
}

/// True range; element 0 is `high - low`.
pub fn true_range(high: &[f64], low: &[f64], close: &[f64]) -> Vec<f64> {
    (0..close.len())
        .map(|t| {
            let hl = high[t] - low[t];
            if t == 0 {
                hl
            } else {
                hl.max((high[t] - close[t - 1]).abs()).max((low[t] - close[t - 1]).abs())
            }
        })
        .collect()
}

/// Wilder RSI; first defined at index `n`. A window without losses is 100,
/// one without any movement is 50.
pub fn rsi(close: &[f64], n: usize) -> Vec<Option<f64>> {
    let mut gains = vec![0.0; close.len()];
    let mut losses = vec![0.0; close.len()];
    for t in 1..close.len() {
        let d = close[t] - close[t - 1];
        gains[t] = d.max(0.0);
        losses[t] = (-d).max(0.0);
    }
    let g = wilder(&gains, n, 1);
    let l = wilder(&losses, n, 1);
    g.iter()
        .zip(&l)
        .map(|(g, l)| match (g, l) {
            (Some(g), Some(l)) => Some(rsi_value(*g, *l)),
            _ => None,
        })
        .collect()
}

pub(crate) fn rsi_value(gain: f64, loss: f64) -> f64 {
    if loss == 0.0 {
        if gain == 0.0 {
            50.0
        } else {
            100.0
        }
    } else {
        100.0 - 100.0 / (1.0 + gain / loss)
    }
}

/// Wilder ATR over true ranges from index 1; first defined at index `n`.
pub fn atr(high: &[f64], low: &[f64], close: &[f64], n: usize) -> Vec<Option<f64>> {
    wilder(&true_range(high, low, close), n, 1)
}

/// `(adx, +DI, -DI)`. DI lines are defined from index `n`, ADX from `2n - 1`.
#[allow(clippy::type_complexity)]
pub fn adx(high: &[f64], low: &[f64], close: &[f64], n: usize) -> (Vec<Option<f64>>, Vec<Option<f64>>, Vec<Option<f64>>) {
    let len = close.len();
    let mut plus_dm = vec![0.0; len];
    let mut minus_dm = vec![0.0; len];
    for t in 1..len {
        let up = high[t] - high[t - 1];
        let down = low[t - 1] - low[t];
        if up > down && up > 0.0 {
            plus_dm[t] = up;
        }
        if down > up && down > 0.0 {
            minus_dm[t] = down;
        }
    }
    let tr = wilder(&true_range(high, low, close), n, 1);
    let pdm = wilder(&plus_dm, n, 1);
    let mdm = wilder(&minus_dm, n, 1);
    let mut plus_di = vec![None; len];
    let mut minus_di = vec![None; len];
    let mut dx = vec![0.0; len];
    for t in 0..len {
        if let (Some(tr), Some(p), Some(m)) = (tr[t], pdm[t], mdm[t]) {
            let (pdi, mdi) = if tr > 0.0 { (100.0 * p / tr, 100.0 * m / tr) } else { (0.0, 0.0) };
            plus_di[t] = Some(pdi);
            minus_di[t] = Some(mdi);
            dx[t] = if pdi + mdi > 0.0 { 100.0 * (pdi - mdi).abs() / (pdi + mdi) } else { 0.0 };
        }
    }
    let adx = wilder(&dx, n, n);
    (adx, plus_di, minus_di)
}

/// `100 (C - LL) / (HH - LL)` over `n` bars; undefined on a flat window.
pub fn stochastic_k(high: &[f64], low: &[f64], close: &[f64], n: usize) -> Vec<Option<f64>> {
    let hh = rolling_max(high, n);
    let ll = rolling_min(low, n);
    (0..close.len())
        .map(|t| match (hh[t], ll[t]) {
            (Some(h), Some(l)) if h > l => Some(100.0 * (close[t] - l) / (h - l)),
            _ => None,
        })
        .collect()
}

/// `-100 (HH - C) / (HH - LL)` over `n` bars; undefined on a flat window.
pub fn williams_r(high: &[f64], low: &[f64], close: &[f64], n: usize) -> Vec<Option<f64>> {
    let hh = rolling_max(high, n);
    let ll = rolling_min(low, n);
    (0..close.len())
        .map(|t| match (hh[t], ll[t]) {
            (Some(h), Some(l)) if h > l => Some(-100.0 * (h - close[t]) / (h - l)),
            _ => None,
        })
        .collect()
}

/// SMA over a series whose undefined positions may appear anywhere; a window
/// containing an undefined value is undefined.
pub fn sma_opt(values: &[Option<f64>], n: usize) -> Vec<Option<f64>> {
    (0..values.len())
        .map(|t| {
            if n == 0 || t + 1 < n {
                return None;
            }
            let window = &values[t + 1 - n..=t];
            window.iter().all(Option::is_some).then(|| window.iter().map(|v| v.unwrap()).sum::<f64>() / n as f64)
        })
        .collect()
}

pub fn momentum(close: &[f64], n: usize) -> Vec<Option<f64>> {
    (0..close.len()).map(|t| (t >= n).then(|| close[t] - close[t - n])).collect()
}

pub fn combine(a: &[Option<f64>], b: &[Option<f64>], f: impl Fn(f64, f64) -> f64) -> Vec<Option<f64>> {
    a.iter()
        .zip(b)
        .map(|(x, y)| match (x, y) {
            (Some(x), Some(y)) => Some(f(*x, *y)),
            _ => None,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sma_example() {
        assert_eq!(sma(&[1.0, 2.0, 3.0, 4.0, 5.0], 3), vec![None, None, Some(2.0), Some(3.0), Some(4.0)]);
    }

    #[test]
    fn tema_fixed_point() {
        let v = vec![7.25; 40];
        let t = tema(&v, 9);
        assert_eq!(t.iter().position(Option::is_some), Some(24));
        assert!(t[24..].iter().all(|x| (x.unwrap() - 7.25).abs() < 1e-12));
    }

    #[test]
    fn rsi_of_rising_series() {
        let v: Vec<f64> = (0..20).map(|i| 10.0 + i as f64).collect();
        let r = rsi(&v, 5);
        assert!(r[..5].iter().all(Option::is_none));
        assert!(r[5..].iter().all(|x| *x == Some(100.0)));
    }

    #[test]
    fn ema_seed_is_sma() {
        let e = ema_of(&[2.0, 4.0, 6.0, 8.0], 3);
        assert_eq!(e[2], Some(4.0));
        assert_eq!(e[3], Some(0.5 * 8.0 + 0.5 * 4.0));
    }
}
