use anyhow::{bail, Result};
use forwardtest::cluster::{elbow_scan, zscore_standardize, VolatilityFeatureMatrix, DEFAULT_RESTARTS};
use forwardtest::ingest::{split_train_test, write_ohlc_csv, MinMaxScaler, ParseMode, PriceSeries};
use forwardtest::returns_vol::{self, VolatilityKind, VolatilitySummary};
use forwardtest::synchrony::{dtw_distance, pearson, rolling_pearson, DEFAULT_ROLLING_WINDOW};
use serde::Serialize;
use serde_json::json;

use super::{csv_rows, default_ticker, opt, parse_component, read_series};
use crate::config::Config;
use crate::manifest::Run;
use crate::svg::{line_chart, Line};
use crate::{ClusterArgs, IngestArgs, MultiSeriesArgs, SynchronyArgs, VolatilityArgs};

const DEFAULT_VOL_WINDOW: usize = 30;

pub fn ingest(run: &mut Run, a: &IngestArgs) -> Result<()> {
    run.set_parameters(a)?;
    let text = run.read_input_text(&a.series.csv)?;
    let ticker = a.series.ticker.clone().unwrap_or_else(|| default_ticker(&a.series.csv));
    let mode = if a.series.permissive { ParseMode::Permissive } else { ParseMode::Strict };
    let parsed = forwardtest::ingest::parse_ohlc_csv(&ticker, &text, mode)?;
    let s = &parsed.series;
    run.write("series.csv", write_ohlc_csv(s))?;
    if a.series.permissive {
        let rows = parsed.rejected.iter().map(|r| format!("{},\"{}\"", r.line, r.message.replace('"', "'")));
        run.write("rejected.csv", csv_rows("line,message", rows))?;
    }
    let mut summary = json!({
        "ticker": ticker,
        "bars": s.len(),
        "first_date": s.first_date(),
        "last_date": s.last_date(),
        "rejected_rows": parsed.rejected.len(),
    });
    if let Some(end) = a.train_end {
        let (train, test) = split_train_test(s, end)?;
        run.write("train.csv", write_ohlc_csv(&train))?;
        run.write("test.csv", write_ohlc_csv(&test))?;
        summary["train_bars"] = json!(train.len());
        summary["test_bars"] = json!(test.len());
    }
    run.write_json("summary.json", &summary)
}

fn read_all(run: &mut Run, input: &MultiSeriesArgs) -> Result<Vec<PriceSeries>> {
    input.csv.iter().map(|p| read_series(run, p, None, input.permissive)).collect()
}

#[derive(Serialize)]
struct TickerVolatility {
    ticker: String,
    summaries: Vec<VolatilitySummary>,
    /// Whether the full-sample means satisfy PK <= GK <= RS <= YZ.
    pk_gk_rs_yz_ordered: bool,
}

pub fn volatility(run: &mut Run, config: &Config, a: &VolatilityArgs) -> Result<()> {
    let window = a.window.or(config.volatility.window).unwrap_or(DEFAULT_VOL_WINDOW);
    run.set_parameters(&json!({ "input": a.input, "window": window }))?;
    let all = read_all(run, &a.input)?;
    let mut rows = Vec::new();
    let mut summary_rows = Vec::new();
    let mut report = Vec::new();
    let mut chart = Vec::new();
    for s in &all {
        let mut summaries = Vec::new();
        for kind in VolatilityKind::ALL {
            let v = returns_vol::volatility(s, kind, window)?;
            for (d, x) in v.dates.iter().zip(&v.values) {
                rows.push(format!("{},{},{d},{x}", s.ticker, kind.code()));
            }
            let m = &v.summary;
            summary_rows.push(format!("{},{},{},{},{},{},{}", s.ticker, kind.code(), m.window, m.min, m.max, m.mean, m.std));
            if chart.len() < VolatilityKind::ALL.len() {
                chart.push(Line::indexed(format!("{} {}", s.ticker, kind.code()), v.values.iter().map(|&x| Some(x))));
            }
            summaries.push(v.summary);
        }
        let mean = |k: VolatilityKind| summaries.iter().find(|m| m.kind == k).map(|m| m.mean).unwrap_or(f64::NAN);
        use VolatilityKind::*;
        let ordered = mean(Parkinson) <= mean(GarmanKlass) && mean(GarmanKlass) <= mean(RogersSatchell) && mean(RogersSatchell) <= mean(YangZhang);
        report.push(TickerVolatility {
            ticker: s.ticker.clone(),
            summaries,
            pk_gk_rs_yz_ordered: ordered,
        });
    }
    run.write("volatility.csv", csv_rows("ticker,kind,date,value", rows))?;
    run.write("volatility_summary.csv", csv_rows("ticker,kind,window,min,max,mean,std", summary_rows))?;
    run.write_json("volatility.json", &report)?;
    run.write("volatility.svg", line_chart("Annualized rolling volatility", "bar", "volatility", &chart))
}

pub fn cluster(run: &mut Run, config: &Config, a: &ClusterArgs) -> Result<()> {
    let c = &config.cluster;
    let window = a.window.or(c.window).unwrap_or(DEFAULT_VOL_WINDOW);
    let k_min = a.k_min.or(c.k_min).unwrap_or(1);
    let k_max = a.k_max.or(c.k_max).unwrap_or(10);
    let restarts = a.restarts.or(c.restarts).unwrap_or(DEFAULT_RESTARTS);
    run.set_parameters(&json!({
        "input": a.input, "window": window, "k_min": k_min, "k_max": k_max, "restarts": restarts, "seed": run.seed,
    }))?;
    let all = read_all(run, &a.input)?;
    let features = VolatilityFeatureMatrix::from_series(&all, window)?;
    let points = zscore_standardize(&features.points())?;
    let scan = elbow_scan(&points, k_min..=k_max, run.seed, restarts)?;
    let chosen = scan
        .best
        .iter()
        .find(|c| c.k == scan.knee)
        .expect("knee is one of the scanned k");
    let labels = chosen.canonical_assignments();
    let mut sizes = vec![0usize; chosen.k];
    for &l in &labels {
        sizes[l] += 1;
    }
    run.write(
        "elbow.csv",
        csv_rows("k,wss", scan.ks.iter().zip(&scan.wss).map(|(k, w)| format!("{k},{w}"))),
    )?;
    run.write(
        "assignments.csv",
        csv_rows(
            "ticker,date,pk,gk,rs,yz,cluster",
            features.labels.iter().zip(&features.rows).zip(&labels).map(|(((t, d), r), l)| {
                format!("{t},{d},{},{},{},{},{l}", r[0], r[1], r[2], r[3])
            }),
        ),
    )?;
    run.write_json(
        "cluster.json",
        &json!({
            "features": ["PK", "GK", "RS", "YZ"],
            "rows": points.len(),
            "ks": scan.ks,
            "wss": scan.wss,
            "knee": scan.knee,
            "knee_chord": scan.knee_chord,
            "k": chosen.k,
            "cluster_sizes": sizes,
            "centroids_standardized": chosen.centroids,
            "wss_at_knee": chosen.wss,
        }),
    )?;
    let line = Line {
        name: "wss".into(),
        points: scan.ks.iter().zip(&scan.wss).map(|(&k, &w)| (k as f64, w)).collect(),
    };
    run.write("elbow.svg", line_chart("Elbow scan", "k", "within-cluster sum of squares", &[line]))
}

pub fn synchrony(run: &mut Run, config: &Config, a: &SynchronyArgs) -> Result<()> {
    if a.csv.len() != 2 {
        bail!("synchrony needs exactly two --csv inputs, got {}", a.csv.len());
    }
    let window = a.window.or(config.synchrony.window).unwrap_or(DEFAULT_ROLLING_WINDOW);
    let component = parse_component(&a.component)?;
    run.set_parameters(&json!({ "csv": a.csv, "component": component.name(), "window": window }))?;
    let x = read_series(run, &a.csv[0], None, false)?;
    let y = read_series(run, &a.csv[1], None, false)?;
    // align on common dates
    let ydates = y.dates();
    let mut dates = Vec::new();
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for b in x.bars() {
        if let Ok(j) = ydates.binary_search(&b.date) {
            dates.push(b.date);
            xs.push(b.component(component));
            ys.push(y.bars()[j].component(component));
        }
    }
    if dates.len() < 2 {
        bail!("{} and {} share fewer than two dates", x.ticker, y.ticker);
    }
    let r = pearson(&xs, &ys)?;
    let rolling = rolling_pearson(&xs, &ys, window.min(dates.len()))?;
    let xn = MinMaxScaler::fit(&xs)?.transform(&xs);
    let yn = MinMaxScaler::fit(&ys)?.transform(&ys);
    let dtw = dtw_distance(&xn, &yn)?;
    run.write(
        "rolling_pearson.csv",
        csv_rows("date,pearson", dates.iter().zip(&rolling).map(|(d, v)| format!("{d},{}", opt(*v)))),
    )?;
    run.write_json(
        "synchrony.json",
        &json!({
            "tickers": [x.ticker, y.ticker],
            "component": component.name(),
            "common_bars": dates.len(),
            "first_date": dates.first(),
            "last_date": dates.last(),
            "pearson": r,
            "rolling_window": window.min(dates.len()),
            "dtw_input": "min-max scaled prices",
            "dtw_cost": dtw.cost,
            "dtw_path_length": dtw.path.len(),
        }),
    )?;
    let lines = [
        Line::indexed(x.ticker.clone(), xn.iter().map(|&v| Some(v))),
        Line::indexed(y.ticker.clone(), yn.iter().map(|&v| Some(v))),
    ];
    run.write("synchrony.svg", line_chart("Min-max scaled prices", "bar", "scaled price", &lines))
}
