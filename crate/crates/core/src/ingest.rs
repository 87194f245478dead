//! OHLC ingestion: CSV parsing and serialization, train/test splitting,
//! min-max scaling and an optional HTTP fetcher for remote CSV files.
//!
//! The only wire format is the Yahoo-Finance style CSV
//! `Date,Open,High,Low,Close,Adj Close,Volume` with ISO dates. `Close` is the
//! working price; `Adj Close` is kept as optional metadata.

use std::fmt;
use std::io::Read;
use std::time::Duration;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, RowError};

/// One trading day.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OhlcBar {
    pub date: NaiveDate,
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
    pub adj_close: Option<f64>,
    pub volume: u64,
}

impl OhlcBar {
    /// Builds a bar and checks `0 < low <= open, close <= high`.
    pub fn new(date: NaiveDate, open: f64, high: f64, low: f64, close: f64, volume: u64) -> Result<Self> {
        let bar = Self {
            date,
            open,
            high,
            low,
            close,
            adj_close: None,
            volume,
        };
        bar.validate()?;
        Ok(bar)
    }

    pub fn validate(&self) -> Result<()> {
        let reason = self.violation();
        match reason {
            None => Ok(()),
            Some(reason) => Err(Error::InvalidBar {
                date: self.date,
                reason,
            }),
        }
    }

    fn violation(&self) -> Option<String> {
        let values = [self.open, self.high, self.low, self.close];
        if values.iter().any(|v| !v.is_finite()) {
            return Some("non-finite price".into());
        }
        if self.low <= 0.0 {
            return Some(format!("low {} is not positive", self.low));
        }
        if self.low > self.high {
            return Some(format!("low {} > high {}", self.low, self.high));
        }
        if self.open < self.low || self.open > self.high {
            return Some(format!("open {} outside [{}, {}]", self.open, self.low, self.high));
        }
        if self.close < self.low || self.close > self.high {
            return Some(format!("close {} outside [{}, {}]", self.close, self.low, self.high));
        }
        None
    }

    pub fn component(&self, component: Component) -> f64 {
        match component {
            Component::Open => self.open,
            Component::High => self.high,
            Component::Low => self.low,
            Component::Close => self.close,
        }
    }
}

/// One of the four OHLC price components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Component {
    Open,
    High,
    Low,
    Close,
}

impl Component {
    pub const ALL: [Component; 4] = [Component::Open, Component::High, Component::Low, Component::Close];

    pub fn code(self) -> char {
        match self {
            Component::Open => 'O',
            Component::High => 'H',
            Component::Low => 'L',
            Component::Close => 'C',
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Component::Open => "open",
            Component::High => "high",
            Component::Low => "low",
            Component::Close => "close",
        }
    }
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Component {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "o" | "open" => Ok(Component::Open),
            "h" | "high" => Ok(Component::High),
            "l" | "low" => Ok(Component::Low),
            "c" | "close" => Ok(Component::Close),
            other => Err(Error::Argument(format!("unknown OHLC component '{other}'"))),
        }
    }
}

/// An ordered, date-unique sequence of bars for one ticker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceSeries {
    pub ticker: String,
    bars: Vec<OhlcBar>,
}

impl PriceSeries {
    /// Wraps `bars`, requiring strictly increasing dates. Bar-level OHLC
    /// invariants are not checked here so that forecast paths, which may be
    /// incoherent, can still be represented.
    pub fn new(ticker: impl Into<String>, bars: Vec<OhlcBar>) -> Result<Self> {
        for pair in bars.windows(2) {
            if pair[1].date <= pair[0].date {
                return Err(Error::DateOrder {
                    prev: pair[0].date,
                    next: pair[1].date,
                });
            }
        }
        Ok(Self {
            ticker: ticker.into(),
            bars,
        })
    }

    pub fn bars(&self) -> &[OhlcBar] {
        &self.bars
    }

    pub fn into_bars(self) -> Vec<OhlcBar> {
        self.bars
    }

    pub fn len(&self) -> usize {
        self.bars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bars.is_empty()
    }

    pub fn first_date(&self) -> Option<NaiveDate> {
        self.bars.first().map(|b| b.date)
    }

    pub fn last_date(&self) -> Option<NaiveDate> {
        self.bars.last().map(|b| b.date)
    }

    pub fn dates(&self) -> Vec<NaiveDate> {
        self.bars.iter().map(|b| b.date).collect()
    }

    pub fn component(&self, component: Component) -> Vec<f64> {
        self.bars.iter().map(|b| b.component(component)).collect()
    }

    pub fn opens(&self) -> Vec<f64> {
        self.component(Component::Open)
    }

    pub fn highs(&self) -> Vec<f64> {
        self.component(Component::High)
    }

    pub fn lows(&self) -> Vec<f64> {
        self.component(Component::Low)
    }

    pub fn closes(&self) -> Vec<f64> {
        self.component(Component::Close)
    }

    /// Sub-series over a bar index range.
    pub fn slice(&self, range: std::ops::Range<usize>) -> PriceSeries {
        PriceSeries {
            ticker: self.ticker.clone(),
            bars: self.bars[range].to_vec(),
        }
    }

    /// Bars dated on or before `date`.
    pub fn up_to(&self, date: NaiveDate) -> PriceSeries {
        let end = self.bars.partition_point(|b| b.date <= date);
        self.slice(0..end)
    }

    /// Index of the last bar dated on or before `date`.
    pub fn index_on_or_before(&self, date: NaiveDate) -> Option<usize> {
        self.bars.partition_point(|b| b.date <= date).checked_sub(1)
    }

    /// Appends `other` after this series; `other` must start later.
    pub fn concat(&self, other: &PriceSeries) -> Result<PriceSeries> {
        let mut bars = self.bars.clone();
        bars.extend_from_slice(&other.bars);
        PriceSeries::new(self.ticker.clone(), bars)
    }
}

/// How rows that violate OHLC invariants are treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParseMode {
    /// The first bad row aborts ingestion.
    #[default]
    Strict,
    /// Bad rows are skipped and reported.
    Permissive,
}

/// Result of parsing: the series plus any rows rejected in permissive mode.
#[derive(Debug, Clone)]
pub struct ParsedSeries {
    pub series: PriceSeries,
    pub rejected: Vec<RowError>,
}

const HEADER: [&str; 7] = ["Date", "Open", "High", "Low", "Close", "Adj Close", "Volume"];

struct Columns {
    date: usize,
    open: usize,
    high: usize,
    low: usize,
    close: usize,
    adj_close: Option<usize>,
    volume: usize,
}

impl Columns {
    fn from_header(header: &csv::StringRecord) -> Result<Self> {
        let find = |name: &str| header.iter().position(|h| h.trim() == name);
        let require = |name: &str| find(name).ok_or_else(|| Error::Format(format!("header is missing column '{name}'")));
        Ok(Columns {
            date: require("Date")?,
            open: require("Open")?,
            high: require("High")?,
            low: require("Low")?,
            close: require("Close")?,
            adj_close: find("Adj Close"),
            volume: require("Volume")?,
        })
    }

    fn parse_row(&self, record: &csv::StringRecord) -> std::result::Result<OhlcBar, String> {
        let field = |idx: usize| record.get(idx).map(str::trim).ok_or_else(|| format!("missing field {}", idx + 1));
        let price = |idx: usize, name: &str| -> std::result::Result<f64, String> {
            let raw = field(idx)?;
            let value: f64 = raw.parse().map_err(|_| format!("{name}: cannot parse '{raw}' as a price"))?;
            if !value.is_finite() {
                return Err(format!("{name}: non-finite value '{raw}'"));
            }
            Ok(value)
        };
        let raw_date = field(self.date)?;
        let date = NaiveDate::parse_from_str(raw_date, "%Y-%m-%d").map_err(|_| format!("cannot parse date '{raw_date}'"))?;
        let adj_close = match self.adj_close {
            Some(idx) if !field(idx)?.is_empty() => Some(price(idx, "Adj Close")?),
            _ => None,
        };
        let raw_volume = field(self.volume)?;
        let volume = raw_volume
            .parse::<u64>()
            .ok()
            .or_else(|| {
                raw_volume
                    .parse::<f64>()
                    .ok()
                    .filter(|v| *v >= 0.0 && v.fract() == 0.0 && *v <= u64::MAX as f64)
                    .map(|v| v as u64)
            })
            .ok_or_else(|| format!("cannot parse volume '{raw_volume}'"))?;
        Ok(OhlcBar {
            date,
            open: price(self.open, "Open")?,
            high: price(self.high, "High")?,
            low: price(self.low, "Low")?,
            close: price(self.close, "Close")?,
            adj_close,
            volume,
        })
    }
}

/// Parses a Yahoo-style OHLC CSV.
///
/// In strict mode the first unparsable or invariant-violating row is an
/// error. In permissive mode such rows are collected in
/// [`ParsedSeries::rejected`] with their line numbers. Rows may appear in any
/// date order; duplicated dates are always rejected.
pub fn parse_ohlc_csv(ticker: &str, text: &str, mode: ParseMode) -> Result<ParsedSeries> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| Error::Format(e.to_string()))?.clone();
    let columns = Columns::from_header(&header)?;

    let mut bars: Vec<(u64, OhlcBar)> = Vec::new();
    let mut rejected = Vec::new();
    let mut reject = |line: u64, message: String| -> Result<()> {
        let err = RowError { line, message };
        match mode {
            ParseMode::Strict => Err(Error::Row(err)),
            ParseMode::Permissive => {
                rejected.push(err);
                Ok(())
            }
        }
    };

    for record in reader.records() {
        let record = record.map_err(|e| Error::Format(e.to_string()))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.iter().all(|f| f.trim().is_empty()) {
            continue;
        }
        if record.len() != header.len() {
            reject(line, format!("expected {} fields, found {}", header.len(), record.len()))?;
            continue;
        }
        match columns.parse_row(&record) {
            Ok(bar) => match bar.violation() {
                None => bars.push((line, bar)),
                Some(reason) => reject(line, format!("invariant violation on {}: {reason}", bar.date))?,
            },
            Err(message) => reject(line, message)?,
        }
    }

    bars.sort_by_key(|(_, b)| b.date);
    let mut unique: Vec<OhlcBar> = Vec::with_capacity(bars.len());
    for (line, bar) in bars {
        if unique.last().is_some_and(|prev| prev.date == bar.date) {
            reject(line, format!("duplicate date {}", bar.date))?;
            continue;
        }
        unique.push(bar);
    }
    Ok(ParsedSeries {
        series: PriceSeries::new(ticker, unique)?,
        rejected,
    })
}

/// Writes a series in the canonical CSV layout. Floats use the shortest
/// representation that parses back to the same bits.
pub fn write_ohlc_csv(series: &PriceSeries) -> String {
    let mut out = HEADER.join(",");
    out.push('\n');
    for bar in series.bars() {
        let adj = bar.adj_close.map(|v| v.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            bar.date.format("%Y-%m-%d"),
            bar.open,
            bar.high,
            bar.low,
            bar.close,
            adj,
            bar.volume
        ));
    }
    out
}

/// Splits into bars dated `<= train_end` and bars dated `> train_end`.
pub fn split_train_test(series: &PriceSeries, train_end: NaiveDate) -> Result<(PriceSeries, PriceSeries)> {
    let cut = series.bars.partition_point(|b| b.date <= train_end);
    if cut == 0 || cut == series.len() {
        return Err(Error::EmptyPartition(train_end));
    }
    Ok((series.slice(0..cut), series.slice(cut..series.len())))
}

/// Linear map of `[min, max]` onto `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaler {
    pub min: f64,
    pub max: f64,
}

impl MinMaxScaler {
    pub fn new(min: f64, max: f64) -> Result<Self> {
        if !(max > min) || !min.is_finite() || !max.is_finite() {
            return Err(Error::Degenerate(format!("scaler needs max > min, got min={min} max={max}")));
        }
        Ok(Self { min, max })
    }

    pub fn fit(values: &[f64]) -> Result<Self> {
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self::new(min, max)
    }

    pub fn transform_one(&self, value: f64) -> f64 {
        (value - self.min) / (self.max - self.min)
    }

    pub fn inverse_one(&self, scaled: f64) -> f64 {
        scaled * (self.max - self.min) + self.min
    }

    pub fn transform(&self, values: &[f64]) -> Vec<f64> {
        values.iter().map(|&v| self.transform_one(v)).collect()
    }

    pub fn inverse(&self, scaled: &[f64]) -> Vec<f64> {
        scaled.iter().map(|&v| self.inverse_one(v)).collect()
    }
}

/// Fits a scaler on `values` and returns the scaled vector with it.
pub fn minmax_normalize(values: &[f64]) -> Result<(Vec<f64>, MinMaxScaler)> {
    let scaler = MinMaxScaler::fit(values)?;
    Ok((scaler.transform(values), scaler))
}

/// Settings for [`fetch_remote_csv`].
#[derive(Debug, Clone)]
pub struct FetchConfig {
    /// Master switch; when false every fetch fails without touching the network.
    pub allow_network: bool,
    /// Permit `http://` URLs (local fixtures). HTTPS is required otherwise.
    pub allow_plain_http: bool,
    pub timeout: Duration,
}

impl Default for FetchConfig {
    fn default() -> Self {
        Self {
            allow_network: false,
            allow_plain_http: false,
            timeout: Duration::from_secs(30),
        }
    }
}

/// Downloads `url` and returns the body verbatim.
pub fn fetch_remote_csv(url: &str, config: &FetchConfig) -> Result<String> {
    if !config.allow_network {
        return Err(Error::Transport("network access is disabled by configuration".into()));
    }
    let scheme_ok = url.starts_with("https://") || (config.allow_plain_http && url.starts_with("http://"));
    if !scheme_ok {
        return Err(Error::Transport(format!("refusing non-HTTPS url {url}")));
    }
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(config.timeout))
        .build()
        .into();
    let response = agent.get(url).call().map_err(|e| Error::Transport(format!("GET {url}: {e}")))?;
    let mut body = String::new();
    response
        .into_body()
        .into_reader()
        .read_to_string(&mut body)
        .map_err(|e| Error::Transport(format!("reading body of {url}: {e}")))?;
    Ok(body)
}
