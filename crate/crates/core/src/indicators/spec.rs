use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ta;
use crate::error::{Error, Result};
use crate::ingest::{Component, PriceSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum IndicatorKind {
    #[serde(rename = "SMA")]
    Sma,
    #[serde(rename = "EMA")]
    Ema,
    #[serde(rename = "MACD")]
    Macd,
    #[serde(rename = "BB")]
    Bb,
    #[serde(rename = "STOCH")]
    Stoch,
    #[serde(rename = "WILLR")]
    Willr,
    #[serde(rename = "MOM")]
    Mom,
    #[serde(rename = "RSI")]
    Rsi,
    #[serde(rename = "ATR")]
    Atr,
    #[serde(rename = "PO")]
    Po,
    #[serde(rename = "TEMA")]
    Tema,
    #[serde(rename = "ADX")]
    Adx,
}

impl IndicatorKind {
    pub const ALL: [IndicatorKind; 12] = [
        IndicatorKind::Sma,
        IndicatorKind::Ema,
        IndicatorKind::Macd,
        IndicatorKind::Bb,
        IndicatorKind::Stoch,
        IndicatorKind::Willr,
        IndicatorKind::Mom,
        IndicatorKind::Rsi,
        IndicatorKind::Atr,
        IndicatorKind::Po,
        IndicatorKind::Tema,
        IndicatorKind::Adx,
    ];

    pub fn code(self) -> &'static str {
        match self {
            IndicatorKind::Sma => "SMA",
            IndicatorKind::Ema => "EMA",
            IndicatorKind::Macd => "MACD",
            IndicatorKind::Bb => "BB",
            IndicatorKind::Stoch => "STOCH",
            IndicatorKind::Willr => "WILLR",
            IndicatorKind::Mom => "MOM",
            IndicatorKind::Rsi => "RSI",
            IndicatorKind::Atr => "ATR",
            IndicatorKind::Po => "PO",
            IndicatorKind::Tema => "TEMA",
            IndicatorKind::Adx => "ADX",
        }
    }
}

/// A single indicator or one of the fixed combinations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StrategyKind {
    Single(IndicatorKind),
    #[serde(rename = "ST+MO+MACD")]
    StMoMacd,
    #[serde(rename = "PO+WILLR")]
    PoWillr,
    #[serde(rename = "PO+RSI")]
    PoRsi,
}

impl StrategyKind {
    pub fn code(self) -> &'static str {
        match self {
            StrategyKind::Single(k) => k.code(),
            StrategyKind::StMoMacd => "ST+MO+MACD",
            StrategyKind::PoWillr => "PO+WILLR",
            StrategyKind::PoRsi => "PO+RSI",
        }
    }

    /// Parameter names and defaults, in display order.
    pub fn defaults(self) -> &'static [(&'static str, f64)] {
        use IndicatorKind::*;
        match self {
            StrategyKind::Single(Sma) | StrategyKind::Single(Ema) => &[("period", 20.0)],
            StrategyKind::Single(Macd) => &[("fast", 12.0), ("slow", 26.0), ("signal", 9.0)],
            StrategyKind::Single(Bb) => &[("period", 20.0), ("width", 2.0)],
            StrategyKind::Single(Stoch) => &[("period", 14.0), ("smooth", 3.0), ("overbought", 80.0), ("oversold", 20.0)],
            StrategyKind::Single(Willr) => &[("period", 14.0), ("overbought", -20.0), ("oversold", -80.0)],
            StrategyKind::Single(Mom) => &[("period", 10.0)],
            StrategyKind::Single(Rsi) => &[("period", 5.0), ("overbought", 70.0), ("oversold", 30.0)],
            StrategyKind::Single(Atr) => &[("period", 14.0), ("multiplier", 1.0)],
            StrategyKind::Single(Po) => &[("fast", 12.0), ("slow", 26.0)],
            StrategyKind::Single(Tema) => &[("period", 9.0)],
            StrategyKind::Single(Adx) => &[("period", 14.0), ("threshold", 25.0)],
            StrategyKind::StMoMacd => &[
                ("period", 14.0),
                ("smooth", 3.0),
                ("momentum", 10.0),
                ("fast", 12.0),
                ("slow", 26.0),
                ("signal", 9.0),
            ],
            StrategyKind::PoWillr => &[("fast", 12.0), ("slow", 26.0), ("period", 14.0), ("level", -50.0)],
            StrategyKind::PoRsi => &[("fast", 12.0), ("slow", 26.0), ("period", 14.0), ("level", 50.0)],
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_uppercase().replace("W%R", "WILLR").replace("ST+", "STOCH+");
        let single = IndicatorKind::ALL.iter().find(|k| k.code() == norm);
        match (single, norm.as_str()) {
            (Some(k), _) => Ok(StrategyKind::Single(*k)),
            (None, "STOCH+MO+MACD" | "STOCH+MOM+MACD") => Ok(StrategyKind::StMoMacd),
            (None, "PO+WILLR") => Ok(StrategyKind::PoWillr),
            (None, "PO+RSI") => Ok(StrategyKind::PoRsi),
            _ => Err(Error::Argument(format!("unknown indicator '{s}'"))),
        }
    }
}

/// Strategy kind plus parameter overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorSpec {
    pub kind: StrategyKind,
    pub params: BTreeMap<String, f64>,
}

impl IndicatorSpec {
    pub fn new(kind: StrategyKind) -> Self {
        Self {
            kind,
            params: kind.defaults().iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }

    pub fn single(kind: IndicatorKind) -> Self {
        Self::new(StrategyKind::Single(kind))
    }

    /// Replaces one parameter, validating the result.
    pub fn with(mut self, name: &str, value: f64) -> Result<Self> {
        if !self.params.contains_key(name) {
            return Err(Error::Argument(format!("{} has no parameter '{name}'", self.kind)));
        }
        self.params.insert(name.to_string(), value);
        self.validate()?;
        Ok(self)
    }

    pub fn get(&self, name: &str) -> f64 {
        self.params[name]
    }

    fn period(&self, name: &str) -> usize {
        self.params[name] as usize
    }

    pub fn validate(&self) -> Result<()> {
        for (name, _) in self.kind.defaults() {
            let v = *self
                .params
                .get(*name)
                .ok_or_else(|| Error::Argument(format!("{} is missing parameter '{name}'", self.kind)))?;
            let is_period = matches!(*name, "period" | "fast" | "slow" | "signal" | "smooth" | "momentum");
            if is_period && !(v >= 1.0 && v.fract() == 0.0) {
                return Err(Error::Argument(format!("{}: {name} must be a positive integer, got {v}", self.kind)));
            }
            if matches!(*name, "width" | "multiplier") && !(v > 0.0) {
                return Err(Error::Argument(format!("{}: {name} must be positive, got {v}", self.kind)));
            }
        }
        if self.params.len() != self.kind.defaults().len() {
            return Err(Error::Argument(format!("{} has unknown parameters", self.kind)));
        }
        if let (Some(f), Some(s)) = (self.params.get("fast"), self.params.get("slow")) {
            if f >= s {
                return Err(Error::Argument(format!("{}: fast period must be below slow period", self.kind)));
            }
        }
        let (lo, hi) = match self.kind {
            StrategyKind::Single(IndicatorKind::Willr) | StrategyKind::PoWillr => (-100.0, 0.0),
            _ => (0.0, 100.0),
        };
        for name in ["overbought", "oversold", "threshold", "level"] {
            if let Some(&v) = self.params.get(name) {
                if !(lo..=hi).contains(&v) {
                    return Err(Error::Argument(format!("{}: {name} {v} outside [{lo}, {hi}]", self.kind)));
                }
            }
        }
        if let (Some(ob), Some(os)) = (self.params.get("overbought"), self.params.get("oversold")) {
            if os >= ob {
                return Err(Error::Argument(format!("{}: oversold must be below overbought", self.kind)));
            }
        }
        Ok(())
    }

    /// Index of the first bar at which every line used by the rule is defined.
    pub fn warm_up(&self) -> usize {
        use IndicatorKind::*;
        let p = |n: &str| self.period(n);
        match self.kind {
            StrategyKind::Single(Sma) | StrategyKind::Single(Ema) | StrategyKind::Single(Bb) | StrategyKind::Single(Willr) => p("period") - 1,
            StrategyKind::Single(Macd) => p("slow") + p("signal") - 2,
            StrategyKind::Single(Stoch) => p("period") + p("smooth") - 2,
            StrategyKind::Single(Mom) | StrategyKind::Single(Rsi) | StrategyKind::Single(Atr) => p("period"),
            StrategyKind::Single(Po) => p("slow") - 1,
            StrategyKind::Single(Tema) => 3 * (p("period") - 1),
            StrategyKind::Single(Adx) => 2 * p("period") - 1,
            StrategyKind::StMoMacd => (p("period") + p("smooth") - 2).max(p("momentum")).max(p("slow") + p("signal") - 2),
            StrategyKind::PoWillr => (p("slow") - 1).max(p("period") - 1),
            StrategyKind::PoRsi => (p("slow") - 1).max(p("period")),
        }
    }

    /// `RSI(5,70,30)`-style label listing parameters in default order.
    pub fn label(&self) -> String {
        let values: Vec<String> = self.kind.defaults().iter().map(|(n, _)| format!("{}", self.params[*n])).collect();
        format!("{}({})", self.kind, values.join(","))
    }
}

impl fmt::Display for IndicatorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Every single indicator and combination with default parameters.
pub fn default_catalog() -> Vec<IndicatorSpec> {
    let mut out: Vec<IndicatorSpec> = IndicatorKind::ALL.iter().map(|&k| IndicatorSpec::single(k)).collect();
    out.extend([StrategyKind::StMoMacd, StrategyKind::PoWillr, StrategyKind::PoRsi].map(IndicatorSpec::new));
    out
}

/// Named indicator lines aligned with a price series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorValues {
    pub lines: Vec<(String, Vec<Option<f64>>)>,
}

impl IndicatorValues {
    pub fn get(&self, name: &str) -> Option<&[Option<f64>]> {
        self.lines.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }

    pub fn len(&self) -> usize {
        self.lines.first().map_or(0, |(_, v)| v.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `date,<line>...`; undefined cells are empty.
    pub fn to_csv(&self, dates: &[chrono::NaiveDate]) -> String {
        let mut out = String::from("date");
        for (name, _) in &self.lines {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for (t, d) in dates.iter().enumerate() {
            out.push_str(&d.format("%Y-%m-%d").to_string());
            for (_, v) in &self.lines {
                out.push(',');
                if let Some(x) = v.get(t).copied().flatten() {
                    out.push_str(&x.to_string());
                }
            }
            out.push('\n');
        }
        out
    }
}

fn price_oscillator(close: &[f64], fast: usize, slow: usize) -> Vec<Option<f64>> {
    ta::combine(&ta::ema_of(close, fast), &ta::ema_of(close, slow), |f, s| 100.0 * (f - s) / s)
}

fn macd_lines(close: &[f64], fast: usize, slow: usize, signal: usize) -> Vec<(String, Vec<Option<f64>>)> {
    let macd = ta::combine(&ta::ema_of(close, fast), &ta::ema_of(close, slow), |f, s| f - s);
    let sig = ta::ema(&macd, signal);
    let hist = ta::combine(&macd, &sig, |m, s| m - s);
    vec![("macd".into(), macd), ("signal".into(), sig), ("hist".into(), hist)]
}

fn stoch_lines(h: &[f64], l: &[f64], c: &[f64], period: usize, smooth: usize) -> Vec<(String, Vec<Option<f64>>)> {
    let k = ta::stochastic_k(h, l, c, period);
    let d = ta::sma_opt(&k, smooth);
    vec![("k".into(), k), ("d".into(), d)]
}

/// Evaluates the indicator lines of `spec` on `series`.
pub fn compute_indicator(spec: &IndicatorSpec, series: &PriceSeries) -> Result<IndicatorValues> {
    use IndicatorKind::*;
    spec.validate()?;
    let warm = spec.warm_up();
    if series.len() <= warm {
        return Err(Error::Size {
            what: "bars beyond the indicator warm-up",
            needed: warm + 1,
            got: series.len(),
        });
    }
    let (o, h, l, c) = (series.opens(), series.highs(), series.lows(), series.closes());
    let p = |n: &str| spec.period(n);
    let lines: Vec<(String, Vec<Option<f64>>)> = match spec.kind {
        StrategyKind::Single(Sma) => vec![("sma".into(), ta::sma(&c, p("period")))],
        StrategyKind::Single(Ema) => vec![("ema".into(), ta::ema_of(&c, p("period")))],
        StrategyKind::Single(Macd) => macd_lines(&c, p("fast"), p("slow"), p("signal")),
        StrategyKind::Single(Bb) => {
            let mid = ta::sma(&c, p("period"));
            let sd = ta::rolling_std(&c, p("period"));
            let w = spec.get("width");
            vec![
                ("middle".into(), mid.clone()),
                ("upper".into(), ta::combine(&mid, &sd, |m, s| m + w * s)),
                ("lower".into(), ta::combine(&mid, &sd, |m, s| m - w * s)),
            ]
        }
        StrategyKind::Single(Stoch) => stoch_lines(&h, &l, &c, p("period"), p("smooth")),
        StrategyKind::Single(Willr) => vec![("willr".into(), ta::williams_r(&h, &l, &c, p("period")))],
        StrategyKind::Single(Mom) => vec![("mom".into(), ta::momentum(&c, p("period")))],
        StrategyKind::Single(Rsi) => vec![("rsi".into(), ta::rsi(&c, p("period")))],
        StrategyKind::Single(Atr) => vec![("atr".into(), ta::atr(&h, &l, &c, p("period")))],
        StrategyKind::Single(Po) => vec![("po".into(), price_oscillator(&c, p("fast"), p("slow")))],
        StrategyKind::Single(Tema) => Component::ALL
            .iter()
            .map(|&comp| {
                let values = match comp {
                    Component::Open => &o,
                    Component::High => &h,
                    Component::Low => &l,
                    Component::Close => &c,
                };
                (format!("tema_{}", comp.name()), ta::tema(values, p("period")))
            })
            .collect(),
        StrategyKind::Single(Adx) => {
            let (adx, pdi, mdi) = ta::adx(&h, &l, &c, p("period"));
            vec![("adx".into(), adx), ("plus_di".into(), pdi), ("minus_di".into(), mdi)]
        }
        StrategyKind::StMoMacd => {
            let mut lines = stoch_lines(&h, &l, &c, p("period"), p("smooth"));
            lines.push(("mom".into(), ta::momentum(&c, p("momentum"))));
            lines.extend(macd_lines(&c, p("fast"), p("slow"), p("signal")));
            lines
        }
        StrategyKind::PoWillr => vec![
            ("po".into(), price_oscillator(&c, p("fast"), p("slow"))),
            ("willr".into(), ta::williams_r(&h, &l, &c, p("period"))),
        ],
        StrategyKind::PoRsi => vec![
            ("po".into(), price_oscillator(&c, p("fast"), p("slow"))),
            ("rsi".into(), ta::rsi(&c, p("period"))),
        ],
    };
    Ok(IndicatorValues { lines })
}
