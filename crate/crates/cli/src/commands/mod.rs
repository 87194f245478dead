use std::path::Path;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use chrono::NaiveDate;
use forwardtest::forecast::ForecastSeries;
use forwardtest::indicators::{default_catalog, IndicatorSpec, StrategyKind};
use forwardtest::ingest::{parse_ohlc_csv, Component, ParseMode, PriceSeries};
use forwardtest::select::SimulationParams;

use crate::config::{self, Config};
use crate::manifest::Run;
use crate::{Cli, Command, SeriesArgs};

mod data;
mod models;
mod trading;

pub fn run(cli: Cli) -> Result<()> {
    let (config, config_sha) = config::load(cli.config.as_deref())?;
    let seed = cli.seed.or(config.seed).unwrap_or(0);
    let mut run = Run::new(&cli.out, command_name(&cli.command), seed, config_sha)?;
    match &cli.command {
        Command::Ingest(a) => data::ingest(&mut run, a)?,
        Command::Volatility(a) => data::volatility(&mut run, &config, a)?,
        Command::Cluster(a) => data::cluster(&mut run, &config, a)?,
        Command::Synchrony(a) => data::synchrony(&mut run, &config, a)?,
        Command::Adf(a) => models::adf(&mut run, &config, a)?,
        Command::Arima(a) => models::arima(&mut run, &config, a)?,
        Command::TrainDnn(a) => models::train_dnn(&mut run, &config, a)?,
        Command::Forecast(a) => models::forecast(&mut run, &config, a)?,
        Command::Select(a) => trading::select(&mut run, &config, a)?,
        Command::Backtest(a) => trading::backtest(&mut run, &config, a)?,
        Command::Compare(a) => trading::compare(&mut run, &config, a)?,
        Command::Report(a) => trading::report(&mut run, a)?,
    }
    run.finish()
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Ingest(_) => "ingest",
        Command::Volatility(_) => "volatility",
        Command::Cluster(_) => "cluster",
        Command::Synchrony(_) => "synchrony",
        Command::Adf(_) => "adf",
        Command::Arima(_) => "arima",
        Command::TrainDnn(_) => "train-dnn",
        Command::Forecast(_) => "forecast",
        Command::Select(_) => "select",
        Command::Backtest(_) => "backtest",
        Command::Compare(_) => "compare",
        Command::Report(_) => "report",
    }
}

pub(crate) fn default_ticker(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().to_ascii_uppercase()).unwrap_or_else(|| "SERIES".into())
}

pub(crate) fn read_series(run: &mut Run, path: &Path, ticker: Option<&str>, permissive: bool) -> Result<PriceSeries> {
    let text = run.read_input_text(path)?;
    let ticker = ticker.map(str::to_string).unwrap_or_else(|| default_ticker(path));
    let mode = if permissive { ParseMode::Permissive } else { ParseMode::Strict };
    let parsed = parse_ohlc_csv(&ticker, &text, mode).with_context(|| format!("parsing {}", path.display()))?;
    for r in &parsed.rejected {
        eprintln!("warning: {}: skipped {r}", path.display());
    }
    if parsed.series.is_empty() {
        bail!("{} contains no bars", path.display());
    }
    Ok(parsed.series)
}

pub(crate) fn load_series(run: &mut Run, args: &SeriesArgs) -> Result<PriceSeries> {
    read_series(run, &args.csv, args.ticker.as_deref(), args.permissive)
}

/// Bars dated on or before `date`, which must leave at least one bar.
pub(crate) fn history_until(series: &PriceSeries, date: NaiveDate) -> Result<PriceSeries> {
    let h = series.up_to(date);
    if h.is_empty() {
        bail!("no bars on or before {date}");
    }
    Ok(h)
}

pub(crate) fn parse_component(s: &str) -> Result<Component> {
    Ok(Component::from_str(s)?)
}

/// `KIND` or `KIND:name=value,...`.
pub(crate) fn parse_strategy(s: &str) -> Result<IndicatorSpec> {
    let (kind, params) = match s.split_once(':') {
        Some((k, p)) => (k, Some(p)),
        None => (s, None),
    };
    let mut spec = IndicatorSpec::new(StrategyKind::from_str(kind)?);
    for pair in params.into_iter().flat_map(|p| p.split(',')).filter(|p| !p.trim().is_empty()) {
        let (name, value) = pair
            .split_once('=')
            .with_context(|| format!("strategy parameter '{pair}' is not name=value"))?;
        let value: f64 = value.trim().parse().with_context(|| format!("strategy parameter '{pair}'"))?;
        spec = spec.with(name.trim(), value)?;
    }
    spec.validate()?;
    Ok(spec)
}

pub(crate) fn candidates(flags: &[String], config: &Config) -> Result<Vec<IndicatorSpec>> {
    let list = if !flags.is_empty() {
        flags.to_vec()
    } else if let Some(list) = &config.select.strategies {
        list.clone()
    } else {
        return Ok(default_catalog());
    };
    list.iter().map(|s| parse_strategy(s)).collect()
}

pub(crate) fn sim_params(fee: Option<f64>, budget: Option<f64>, periods: Option<f64>) -> SimulationParams {
    let d = SimulationParams::default();
    SimulationParams {
        fee_rate: fee.unwrap_or(d.fee_rate),
        budget: budget.unwrap_or(d.budget),
        periods_per_year: periods.unwrap_or(d.periods_per_year),
    }
}

/// Reads a forecast CSV written by `forecast` (`date,open,high,low,close`).
pub(crate) fn read_forecast(run: &mut Run, path: &Path) -> Result<ForecastSeries> {
    let text = run.read_input_text(path)?;
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().context("empty forecast file")?.split(',').map(str::trim).collect();
    if header.first() != Some(&"date") || header.len() < 2 {
        bail!("{}: expected a 'date,...' header", path.display());
    }
    let components = header[1..].iter().map(|h| parse_component(h)).collect::<Result<Vec<_>>>()?;
    let mut dates = Vec::new();
    let mut values = Vec::new();
    for (i, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != header.len() {
            bail!("{}: line {} has {} fields", path.display(), i + 2, fields.len());
        }
        dates.push(NaiveDate::parse_from_str(fields[0], "%Y-%m-%d").with_context(|| format!("{}: line {}", path.display(), i + 2))?);
        values.push(
            fields[1..]
                .iter()
                .map(|f| f.parse::<f64>().with_context(|| format!("{}: line {}", path.display(), i + 2)))
                .collect::<Result<Vec<_>>>()?,
        );
    }
    let model_id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    Ok(ForecastSeries::new(model_id, dates, components, values)?)
}

pub(crate) fn csv_rows<'a>(header: &str, rows: impl IntoIterator<Item = String> + 'a) -> String {
    let mut out = String::from(header);
    out.push('\n');
    for r in rows {
        out.push_str(&r);
        out.push('\n');
    }
    out
}

pub(crate) fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strategy_strings() {
        assert_eq!(parse_strategy("RSI").unwrap().label(), "RSI(5,70,30)");
        assert_eq!(parse_strategy("rsi:period=14,oversold=25").unwrap().label(), "RSI(14,70,25)");
        assert!(parse_strategy("RSI:period").is_err());
        assert!(parse_strategy("RSI:bogus=1").is_err());
        assert!(parse_strategy("NOPE").is_err());
        assert_eq!(parse_strategy("W%R").unwrap().kind, parse_strategy("WILLR").unwrap().kind);
    }
}
