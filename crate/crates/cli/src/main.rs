use std::path::PathBuf;
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

mod commands;
mod config;
mod manifest;
mod svg;

/// Price-series analysis, forecasting and strategy selection.
#[derive(Debug, Parser)]
#[command(name = "forwardtest", version)]
pub struct Cli {
    /// TOML file with per-command defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for clustering restarts and network training.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate an OHLC CSV and write the normalized series.
    Ingest(IngestArgs),
    /// Rolling volatility estimators.
    Volatility(VolatilityArgs),
    /// k-means over PK/GK/RS/YZ features with an elbow scan.
    Cluster(ClusterArgs),
    /// Pearson correlation, rolling correlation and DTW between two series.
    Synchrony(SynchronyArgs),
    /// Augmented Dickey-Fuller test with ACF/PACF.
    Adf(AdfArgs),
    /// AIC-selected ARIMA fit and forecast.
    Arima(ArimaArgs),
    /// Grid-search and train one network per OHLC component.
    TrainDnn(TrainDnnArgs),
    /// Forecast with trained networks.
    Forecast(ForecastArgs),
    /// Rank candidate strategies on history or on a forecast.
    Select(SelectArgs),
    /// Simulate one strategy.
    Backtest(BacktestArgs),
    /// Select in both modes and trade both choices on the real future.
    Compare(CompareArgs),
    /// Summarize the JSON outputs of a directory as Markdown.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SeriesArgs {
    /// Yahoo-style OHLC CSV (looked up under $FORWARDTEST_DATA_DIR if not found).
    #[arg(long)]
    pub csv: PathBuf,
    /// Ticker name; defaults to the upper-cased file stem.
    #[arg(long)]
    pub ticker: Option<String>,
    /// Skip invalid rows instead of failing.
    #[arg(long)]
    pub permissive: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct IngestArgs {
    #[command(flatten)]
    pub series: SeriesArgs,
    /// Also write train/test files split after this date.
    #[arg(long)]
    pub train_end: Option<NaiveDate>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct MultiSeriesArgs {
    /// One or more OHLC CSVs.
    #[arg(long, required = true)]
    pub csv: Vec<PathBuf>,
    #[arg(long)]
    pub permissive: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct VolatilityArgs {
    #[command(flatten)]
    pub input: MultiSeriesArgs,
    /// Rolling window in bars [default: 30].
    #[arg(long)]
    pub window: Option<usize>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ClusterArgs {
    #[command(flatten)]
    pub input: MultiSeriesArgs,
    /// Rolling window for the volatility features [default: 30].
    #[arg(long)]
    pub window: Option<usize>,
    /// Smallest k scanned [default: 1].
    #[arg(long)]
    pub k_min: Option<usize>,
    /// Largest k scanned [default: 10].
    #[arg(long)]
    pub k_max: Option<usize>,
    /// k-means++ restarts per k [default: 10].
    #[arg(long)]
    pub restarts: Option<usize>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SynchronyArgs {
    /// Exactly two OHLC CSVs.
    #[arg(long, required = true, num_args = 1)]
    pub csv: Vec<PathBuf>,
    #[arg(long, default_value = "close")]
    pub component: String,
    /// Rolling correlation window [default: 120].
    #[arg(long)]
    pub window: Option<usize>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AdfArgs {
    #[command(flatten)]
    pub series: SeriesArgs,
    #[arg(long, default_value = "close")]
    pub component: String,
    /// Only use bars up to this date.
    #[arg(long)]
    pub train_end: Option<NaiveDate>,
    /// Largest augmentation lag; AIC picks the lag [default: 12 (n/100)^(1/4)].
    #[arg(long)]
    pub max_lag: Option<usize>,
    /// ACF/PACF lags reported [default: 20].
    #[arg(long)]
    pub acf_lags: Option<usize>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ArimaArgs {
    #[command(flatten)]
    pub series: SeriesArgs,
    #[arg(long, default_value = "close")]
    pub component: String,
    /// Fit on bars up to this date; later bars are compared with the forecast.
    #[arg(long)]
    pub train_end: Option<NaiveDate>,
    /// Forecast horizon [default: 30].
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long)]
    pub p_max: Option<usize>,
    #[arg(long)]
    pub q_max: Option<usize>,
    /// Differencing order [default: 1].
    #[arg(long)]
    pub d: Option<usize>,
    /// Model log prices.
    #[arg(long)]
    pub log: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TrainDnnArgs {
    #[command(flatten)]
    pub series: SeriesArgs,
    /// Train on bars up to this date.
    #[arg(long)]
    pub train_end: Option<NaiveDate>,
    /// Input window length [default: 5].
    #[arg(long)]
    pub lags: Option<usize>,
    /// Comma-separated components [default: open,high,low,close].
    #[arg(long, value_delimiter = ',')]
    pub components: Option<Vec<String>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ForecastMode {
    /// Feed predictions back for a multi-day path.
    Recursive,
    /// Predict each test bar from the true bars before it.
    OneStep,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ForecastArgs {
    #[command(flatten)]
    pub series: SeriesArgs,
    /// Directory with `<component>.ftmlp` files.
    #[arg(long)]
    pub models: PathBuf,
    /// Last bar the forecast may see.
    #[arg(long)]
    pub train_end: Option<NaiveDate>,
    /// Forecast horizon [default: 30].
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long, value_enum, default_value = "recursive")]
    pub mode: ForecastMode,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimArgs {
    /// Candidate strategies, e.g. `RSI` or `RSI:period=5,oversold=25` [default: built-in catalog].
    #[arg(long = "strategy")]
    pub strategies: Vec<String>,
    /// Proportional fee per transaction [default: 0].
    #[arg(long)]
    pub fee: Option<f64>,
    /// Initial budget [default: 100].
    #[arg(long)]
    pub budget: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectMode {
    Backtest,
    Forwardtest,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SelectArgs {
    #[command(flatten)]
    pub series: SeriesArgs,
    /// Selection date: the last real bar that may be read.
    #[arg(long)]
    pub train_end: NaiveDate,
    #[arg(long, value_enum, default_value = "backtest")]
    pub mode: SelectMode,
    /// Forecast CSV (`date,open,high,low,close`) for forwardtest mode.
    #[arg(long)]
    pub forecast: Option<PathBuf>,
    /// Evaluation window in bars for backtest mode [default: 30].
    #[arg(long)]
    pub window: Option<usize>,
    #[command(flatten)]
    pub sim: SimArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BacktestArgs {
    #[command(flatten)]
    pub series: SeriesArgs,
    /// Strategy, e.g. `ADX` or `RSI:period=5`.
    #[arg(long)]
    pub strategy: String,
    /// First bar traded; earlier bars only warm up the indicator.
    #[arg(long)]
    pub from: Option<NaiveDate>,
    /// Last bar used.
    #[arg(long)]
    pub to: Option<NaiveDate>,
    #[arg(long)]
    pub fee: Option<f64>,
    #[arg(long)]
    pub budget: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CompareArgs {
    #[command(flatten)]
    pub series: SeriesArgs,
    /// Selection date; bars after it form the real future.
    #[arg(long)]
    pub train_end: NaiveDate,
    /// Forecast CSV covering the bars after the selection date.
    #[arg(long)]
    pub forecast: PathBuf,
    #[command(flatten)]
    pub sim: SimArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ReportArgs {
    /// Output directory of an earlier run; must differ from --out.
    #[arg(long)]
    pub from: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
