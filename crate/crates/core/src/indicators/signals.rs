use serde::{Deserialize, Serialize};

use super::spec::{compute_indicator, IndicatorKind, IndicatorSpec, IndicatorValues, StrategyKind};
use crate::error::{Error, Result};
use crate::ingest::PriceSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Action {
    Enter,
    Exit,
    Hold,
}

/// One action per bar of a price series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalSeries {
    pub actions: Vec<Action>,
}

impl SignalSeries {
    pub fn hold(len: usize) -> Self {
        Self {
            actions: vec![Action::Hold; len],
        }
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn count(&self, action: Action) -> usize {
        self.actions.iter().filter(|&&a| a == action).count()
    }
}

type Line<'a> = &'a [Option<f64>];

fn line<'a>(values: &'a IndicatorValues, name: &str) -> Result<Line<'a>> {
    values
        .get(name)
        .ok_or_else(|| Error::Config(format!("indicator values have no '{name}' line")))
}

fn at(l: Line<'_>, t: usize) -> Option<f64> {
    l.get(t).copied().flatten()
}

fn of(l: Line<'_>) -> impl Fn(usize) -> Option<f64> + '_ {
    move |t| at(l, t)
}

/// `a` moves from at-or-below `b` to strictly above it between `t-1` and `t`.
fn crosses_up(a: impl Fn(usize) -> Option<f64>, b: impl Fn(usize) -> Option<f64>, t: usize) -> Option<bool> {
    if t == 0 {
        return None;
    }
    Some(a(t - 1)? <= b(t - 1)? && a(t)? > b(t)?)
}

fn crosses_down(a: impl Fn(usize) -> Option<f64>, b: impl Fn(usize) -> Option<f64>, t: usize) -> Option<bool> {
    if t == 0 {
        return None;
    }
    Some(a(t - 1)? >= b(t - 1)? && a(t)? < b(t)?)
}

/// Per-bar actions for `spec`. Single indicators fire on crossings (the TEMA
/// and ADX rules excepted, which are level conditions); combinations fire
/// while all member conditions hold. Undefined inputs, and bars where entry
/// and exit would both fire, yield `Hold`.
pub fn generate_signals(spec: &IndicatorSpec, series: &PriceSeries, values: &IndicatorValues) -> Result<SignalSeries> {
    use IndicatorKind::*;
    let n = series.len();
    for (name, v) in &values.lines {
        if v.len() != n {
            return Err(Error::Config(format!("line '{name}' has {} values for {n} bars", v.len())));
        }
    }
    let (o, h, l, c) = (series.opens(), series.highs(), series.lows(), series.closes());
    let close = |t: usize| c.get(t).copied();
    let constant = |v: f64| move |_: usize| Some(v);

    type Rule<'a> = Box<dyn Fn(usize) -> (Option<bool>, Option<bool>) + 'a>;
    let rule: Rule = match spec.kind {
        StrategyKind::Single(Sma) | StrategyKind::Single(Ema) => {
            let ma = line(values, if spec.kind == StrategyKind::Single(Sma) { "sma" } else { "ema" })?;
            Box::new(move |t| (crosses_up(close, of(ma), t), crosses_down(close, of(ma), t)))
        }
        StrategyKind::Single(Macd) => {
            let (m, s) = (line(values, "macd")?, line(values, "signal")?);
            Box::new(move |t| (crosses_up(of(m), of(s), t), crosses_down(of(m), of(s), t)))
        }
        StrategyKind::Single(Bb) => {
            let (up, lo) = (line(values, "upper")?, line(values, "lower")?);
            Box::new(move |t| (crosses_down(close, of(lo), t), crosses_up(close, of(up), t)))
        }
        StrategyKind::Single(Stoch) | StrategyKind::Single(Willr) | StrategyKind::Single(Rsi) => {
            let name = match spec.kind {
                StrategyKind::Single(Stoch) => "k",
                StrategyKind::Single(Willr) => "willr",
                _ => "rsi",
            };
            let x = line(values, name)?;
            let (ob, os) = (spec.get("overbought"), spec.get("oversold"));
            Box::new(move |t| (crosses_up(of(x), constant(os), t), crosses_down(of(x), constant(ob), t)))
        }
        StrategyKind::Single(Mom) | StrategyKind::Single(Po) => {
            let x = line(values, if spec.kind == StrategyKind::Single(Mom) { "mom" } else { "po" })?;
            Box::new(move |t| (crosses_up(of(x), constant(0.0), t), crosses_down(of(x), constant(0.0), t)))
        }
        StrategyKind::Single(Atr) => {
            let atr = line(values, "atr")?;
            let m = spec.get("multiplier");
            Box::new(move |t| {
                if t == 0 {
                    return (None, None);
                }
                let band = at(atr, t - 1).map(|a| m * a);
                let step = c[t] - c[t - 1];
                (band.map(|b| step > b), band.map(|b| -step > b))
            })
        }
        StrategyKind::Single(Tema) => {
            let (to, th, tl, tc) = (
                line(values, "tema_open")?,
                line(values, "tema_high")?,
                line(values, "tema_low")?,
                line(values, "tema_close")?,
            );
            let (o, h, l, c) = (&o, &h, &l, &c);
            Box::new(move |t| {
                let (Some(eo), Some(eh), Some(el), Some(ec)) = (at(to, t), at(th, t), at(tl, t), at(tc, t)) else {
                    return (None, None);
                };
                let enter = (l[t] < el || h[t] < eh) && (c[t] < ec || o[t] < eo);
                let exit = (l[t] > el || h[t] > eh) && (c[t] > ec || o[t] > eo);
                (Some(enter), Some(exit))
            })
        }
        StrategyKind::Single(Adx) => {
            let (adx, pdi, mdi) = (line(values, "adx")?, line(values, "plus_di")?, line(values, "minus_di")?);
            let thr = spec.get("threshold");
            Box::new(move |t| {
                let (Some(a), Some(p), Some(m)) = (at(adx, t), at(pdi, t), at(mdi, t)) else {
                    return (None, None);
                };
                (Some(p > m && a > thr), Some(m > p && a > thr))
            })
        }
        StrategyKind::StMoMacd => {
            let (k, d, mom, macd, sig) = (
                line(values, "k")?,
                line(values, "d")?,
                line(values, "mom")?,
                line(values, "macd")?,
                line(values, "signal")?,
            );
            Box::new(move |t| {
                let (Some(k), Some(d), Some(mo), Some(m), Some(s)) = (at(k, t), at(d, t), at(mom, t), at(macd, t), at(sig, t)) else {
                    return (None, None);
                };
                (Some(k > d && mo > 0.0 && m > s), Some(k < d && mo < 0.0 && m < s))
            })
        }
        StrategyKind::PoWillr | StrategyKind::PoRsi => {
            let po = line(values, "po")?;
            let other = line(values, if spec.kind == StrategyKind::PoWillr { "willr" } else { "rsi" })?;
            let level = spec.get("level");
            Box::new(move |t| {
                let (Some(p), Some(x)) = (at(po, t), at(other, t)) else {
                    return (None, None);
                };
                (Some(p > 0.0 && x > level), Some(p < 0.0 && x < level))
            })
        }
    };

    let actions = (0..n)
        .map(|t| match rule(t) {
            (Some(true), Some(false)) | (Some(true), None) => Action::Enter,
            (Some(false), Some(true)) | (None, Some(true)) => Action::Exit,
            _ => Action::Hold,
        })
        .collect();
    Ok(SignalSeries { actions })
}

/// Computes the indicator and its signals in one step.
pub fn signals_for(spec: &IndicatorSpec, series: &PriceSeries) -> Result<(IndicatorValues, SignalSeries)> {
    let values = compute_indicator(spec, series)?;
    let signals = generate_signals(spec, series, &values)?;
    Ok((values, signals))
}
