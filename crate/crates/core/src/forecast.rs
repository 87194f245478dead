//! Model-agnostic forecast paths.

use chrono::{Datelike, Days, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{Component, OhlcBar, PriceSeries};

/// Predicted values for one or more OHLC components over consecutive days.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastSeries {
    pub model_id: String,
    pub dates: Vec<NaiveDate>,
    pub components: Vec<Component>,
    /// `values[day][c]` is the prediction for `components[c]` on `dates[day]`.
    pub values: Vec<Vec<f64>>,
}

impl ForecastSeries {
    pub fn new(model_id: impl Into<String>, dates: Vec<NaiveDate>, components: Vec<Component>, values: Vec<Vec<f64>>) -> Result<Self> {
        if dates.len() != values.len() {
            return Err(Error::Shape {
                expected: dates.len(),
                got: values.len(),
            });
        }
        if let Some(row) = values.iter().find(|r| r.len() != components.len()) {
            return Err(Error::Shape {
                expected: components.len(),
                got: row.len(),
            });
        }
        Ok(Self {
            model_id: model_id.into(),
            dates,
            components,
            values,
        })
    }

    /// Single-component forecast.
    pub fn single(model_id: impl Into<String>, dates: Vec<NaiveDate>, component: Component, values: Vec<f64>) -> Result<Self> {
        Self::new(model_id, dates, vec![component], values.into_iter().map(|v| vec![v]).collect())
    }

    pub fn horizon(&self) -> usize {
        self.values.len()
    }

    pub fn start_date(&self) -> Option<NaiveDate> {
        self.dates.first().copied()
    }

    pub fn component(&self, component: Component) -> Option<Vec<f64>> {
        let idx = self.components.iter().position(|&c| c == component)?;
        Some(self.values.iter().map(|row| row[idx]).collect())
    }

    /// The forecast as a price series; requires all four components. Bars are
    /// not checked for OHLC coherence (see [`Self::coherence_violations`]).
    pub fn to_price_series(&self, ticker: &str) -> Result<PriceSeries> {
        let get = |c: Component| {
            self.component(c)
                .ok_or_else(|| Error::Config(format!("forecast '{}' has no {c} component", self.model_id)))
        };
        let (o, h, l, c) = (get(Component::Open)?, get(Component::High)?, get(Component::Low)?, get(Component::Close)?);
        let bars = (0..self.horizon())
            .map(|i| OhlcBar {
                date: self.dates[i],
                open: o[i],
                high: h[i],
                low: l[i],
                close: c[i],
                adj_close: None,
                volume: 0,
            })
            .collect();
        PriceSeries::new(ticker, bars)
    }

    /// Dates on which a four-component forecast is not a valid OHLC bar.
    pub fn coherence_violations(&self) -> Vec<NaiveDate> {
        match self.to_price_series("") {
            Ok(series) => series.bars().iter().filter(|b| b.validate().is_err()).map(|b| b.date).collect(),
            Err(_) => Vec::new(),
        }
    }

    /// `date,open,high,low,close` for four-component forecasts, otherwise
    /// `date,<component>...`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("date");
        if self.components.len() == 1 {
            out.push_str(",value");
        } else {
            for c in &self.components {
                out.push(',');
                out.push_str(c.name());
            }
        }
        out.push('\n');
        for (date, row) in self.dates.iter().zip(&self.values) {
            out.push_str(&date.format("%Y-%m-%d").to_string());
            for v in row {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }
}

/// The `n` weekdays following `after`. Exchange holidays are not modelled.
pub fn next_weekdays(after: NaiveDate, n: usize) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(n);
    let mut d = after;
    while out.len() < n {
        d = d + Days::new(1);
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weekdays_skip_weekends() {
        let fri = NaiveDate::from_ymd_opt(2021, 10, 15).unwrap();
        let days = next_weekdays(fri, 3);
        assert_eq!(days[0], NaiveDate::from_ymd_opt(2021, 10, 18).unwrap());
        assert_eq!(days[2], NaiveDate::from_ymd_opt(2021, 10, 20).unwrap());
    }

    #[test]
    fn csv_layouts() {
        let d = NaiveDate::from_ymd_opt(2021, 1, 4).unwrap();
        let f = ForecastSeries::single("m", vec![d], Component::Close, vec![1.5]).unwrap();
        assert_eq!(f.to_csv(), "date,value\n2021-01-04,1.5\n");
        let f = ForecastSeries::new("m", vec![d], Component::ALL.to_vec(), vec![vec![1.0, 2.0, 0.5, 1.5]]).unwrap();
        assert_eq!(f.to_csv(), "date,open,high,low,close\n2021-01-04,1,2,0.5,1.5\n");
        assert!(f.coherence_violations().is_empty());
        let bad = ForecastSeries::new("m", vec![d], Component::ALL.to_vec(), vec![vec![1.0, 0.5, 2.0, 1.5]]).unwrap();
        assert_eq!(bad.coherence_violations(), vec![d]);
    }
}
