use std::fmt::Write;

use anyhow::{bail, Context, Result};
use forwardtest::metrics::RiskMetrics;
use forwardtest::select::{compare_modes, evaluate_candidate, forward_series, select_strategy, CandidateResult, Mode, DEFAULT_WINDOW};
use serde_json::{json, Value};

use super::{candidates, csv_rows, history_until, load_series, parse_strategy, read_forecast, sim_params};
use crate::config::Config;
use crate::manifest::{sha256_hex, Run, MANIFEST_FILE};
use crate::svg::{line_chart, Line};
use crate::{BacktestArgs, CompareArgs, ReportArgs, SelectArgs, SelectMode};

const EXPECTANCY_NOTE: &str =
    "expectancy is (win_rate * avg_win - loss_rate * avg_loss) / avg_loss over per-trade return fractions";

fn summary(c: &CandidateResult) -> Value {
    json!({
        "strategy": c.label,
        "spec": c.spec,
        "metrics": c.metrics,
        "final_equity": c.report.final_equity(),
        "trades": c.report.trades,
    })
}

fn equity_line(name: &str, c: &CandidateResult) -> Line {
    Line::indexed(name, c.report.equity.iter().map(|&e| Some(e)))
}

pub fn select(run: &mut Run, config: &Config, a: &SelectArgs) -> Result<()> {
    let sc = &config.select;
    let sim = sim_params(a.sim.fee.or(sc.fee), a.sim.budget.or(sc.budget), sc.periods_per_year);
    let cands = candidates(&a.sim.strategies, config)?;
    let window = a.window.or(sc.window).unwrap_or(DEFAULT_WINDOW);
    run.set_parameters(&json!({
        "series": a.series, "train_end": a.train_end, "mode": a.mode, "forecast": a.forecast, "window": window,
        "simulation": sim, "strategies": cands.iter().map(|c| c.label()).collect::<Vec<_>>(),
    }))?;
    let s = load_series(run, &a.series)?;
    let history = history_until(&s, a.train_end)?;
    let result = match a.mode {
        SelectMode::Backtest => {
            if history.len() < window {
                bail!("history has {} bars, window needs {window}", history.len());
            }
            select_strategy(&cands, &history, history.len() - window, Mode::Backtest, &sim)?
        }
        SelectMode::Forwardtest => {
            let path = a.forecast.as_ref().context("forwardtest mode needs --forecast")?;
            let fc = read_forecast(run, path)?;
            let (series, start) = forward_series(&history, &fc)?;
            select_strategy(&cands, &series, start, Mode::Forwardtest, &sim)?
        }
    };
    run.write("ranking.csv", result.ranking_csv())?;
    run.write_json(
        "selection.json",
        &json!({
            "ticker": s.ticker,
            "mode": result.mode,
            "window_start": result.window_start,
            "window_end": result.window_end,
            "window_len": result.window_len,
            "chosen": result.best().label,
            "chosen_spec": result.chosen,
            "tie_break": result.tie_break,
            "fill_rule": result.best().report.fill_rule,
            "simulation": sim,
            "note": EXPECTANCY_NOTE,
            "ranked": result.ranked.iter().map(|c| json!({ "strategy": c.label, "metrics": c.metrics })).collect::<Vec<_>>(),
        }),
    )?;
    let lines: Vec<Line> = result.ranked.iter().take(5).map(|c| equity_line(&c.label, c)).collect();
    run.write("selection.svg", line_chart("Equity of the top candidates", "bar", "equity", &lines))
}

pub fn backtest(run: &mut Run, config: &Config, a: &BacktestArgs) -> Result<()> {
    let bc = &config.backtest;
    let sim = sim_params(a.fee.or(bc.fee), a.budget.or(bc.budget), bc.periods_per_year);
    let spec = parse_strategy(&a.strategy)?;
    run.set_parameters(&json!({
        "series": a.series, "strategy": spec.label(), "from": a.from, "to": a.to, "simulation": sim,
    }))?;
    let mut s = load_series(run, &a.series)?;
    if let Some(to) = a.to {
        s = history_until(&s, to)?;
    }
    let start = match a.from {
        Some(from) => s.bars().partition_point(|b| b.date < from),
        None => spec.warm_up(),
    };
    if start < spec.warm_up() {
        bail!("{} needs {} warm-up bars before the first traded bar, only {start} available", spec.label(), spec.warm_up());
    }
    if start + 2 > s.len() {
        bail!("fewer than two bars to trade");
    }
    let result = evaluate_candidate(&spec, &s, start, &sim)?;
    let (values, signals) = forwardtest::indicators::signals_for(&spec, &s)?;
    let dates = s.dates();
    run.write("indicator.csv", values.to_csv(&dates))?;
    run.write(
        "signals.csv",
        csv_rows(
            "date,action",
            dates[start..]
                .iter()
                .zip(&signals.actions[start..])
                .map(|(d, act)| format!("{d},{}", serde_json::to_value(act).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default())),
        ),
    )?;
    run.write("blotter.csv", result.report.blotter_csv())?;
    run.write("equity.csv", result.report.equity_csv())?;
    run.write(
        "metrics.csv",
        csv_rows(RiskMetrics::CSV_HEADER, [result.metrics.csv_row(&s.ticker, &result.label, Mode::Backtest.code())]),
    )?;
    let mut json = summary(&result);
    json["ticker"] = json!(s.ticker);
    json["fill_rule"] = json!(result.report.fill_rule);
    json["simulation"] = json!(sim);
    json["window_start"] = json!(dates[start]);
    json["note"] = json!(EXPECTANCY_NOTE);
    run.write_json("backtest.json", &json)?;
    run.write("equity.svg", line_chart(&format!("{} equity", result.label), "bar", "equity", &[equity_line(&result.label, &result)]))
}

pub fn compare(run: &mut Run, config: &Config, a: &CompareArgs) -> Result<()> {
    let sc = &config.select;
    let sim = sim_params(a.sim.fee.or(sc.fee), a.sim.budget.or(sc.budget), sc.periods_per_year);
    let cands = candidates(&a.sim.strategies, config)?;
    run.set_parameters(&json!({
        "series": a.series, "train_end": a.train_end, "forecast": a.forecast, "simulation": sim,
        "strategies": cands.iter().map(|c| c.label()).collect::<Vec<_>>(),
    }))?;
    let s = load_series(run, &a.series)?;
    let fc = read_forecast(run, &a.forecast)?;
    let history = history_until(&s, a.train_end)?;
    let after = s.slice(history.len()..s.len());
    if after.len() < fc.horizon() {
        bail!("{} real bars after {}, the forecast covers {}", after.len(), a.train_end, fc.horizon());
    }
    let future = after.slice(0..fc.horizon());
    let c = compare_modes(&cands, &history, &fc, &future, &sim)?;
    run.write("comparison.csv", c.comparison_csv())?;
    run.write("ranking_backtest.csv", c.backtest.ranking_csv())?;
    run.write("ranking_forwardtest.csv", c.forwardtest.ranking_csv())?;
    let fwd = c.forwardtest_on_future.metrics.total_return;
    let bwd = c.backtest_on_future.metrics.total_return;
    run.write_json(
        "comparison.json",
        &json!({
            "ticker": s.ticker,
            "selection_date": a.train_end,
            "future_start": future.first_date(),
            "future_end": future.last_date(),
            "forecast_model": fc.model_id,
            "runs": c.runs,
            "backtest_choice": c.backtest.best().label,
            "forwardtest_choice": c.forwardtest.best().label,
            "backtest_tie_break": c.backtest.tie_break,
            "forwardtest_tie_break": c.forwardtest.tie_break,
            "backtest_choice_on_future": summary(&c.backtest_on_future),
            "forwardtest_choice_on_future": summary(&c.forwardtest_on_future),
            "forwardtest_at_least_backtest": fwd >= bwd,
            "simulation": sim,
            "note": EXPECTANCY_NOTE,
        }),
    )?;
    let lines = [
        equity_line(&format!("backtest: {}", c.backtest_on_future.label), &c.backtest_on_future),
        equity_line(&format!("forwardtest: {}", c.forwardtest_on_future.label), &c.forwardtest_on_future),
    ];
    run.write("comparison.svg", line_chart("Chosen strategies on the real future", "bar", "equity", &lines))
}

fn scalar(v: &Value) -> Option<String> {
    match v {
        Value::Null => Some("null".into()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Number(n) => Some(n.to_string()),
        Value::String(s) => Some(s.clone()),
        _ => None,
    }
}

fn flatten(prefix: &str, v: &Value, depth: usize, out: &mut Vec<(String, String)>) {
    if let Some(s) = scalar(v) {
        out.push((prefix.to_string(), s));
        return;
    }
    match v {
        Value::Object(map) if depth > 0 => {
            for (k, x) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, x, depth - 1, out);
            }
        }
        Value::Array(items) => out.push((prefix.to_string(), format!("[{} items]", items.len()))),
        _ => out.push((prefix.to_string(), "{...}".into())),
    }
}

fn same_dir(a: &std::path::Path, b: &std::path::Path) -> bool {
    match (a.canonicalize(), b.canonicalize()) {
        (Ok(x), Ok(y)) => x == y,
        _ => a == b,
    }
}

pub fn report(run: &mut Run, a: &ReportArgs) -> Result<()> {
    let dir = a.from.clone();
    if same_dir(&dir, &run.out) {
        bail!("--from and --out are the same directory; the report would replace that run's manifest");
    }
    run.set_parameters(&json!({ "from": dir }))?;
    let mut names: Vec<String> = std::fs::read_dir(&dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .filter_map(|e| e.ok())
        .filter(|e| e.path().is_file())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n != MANIFEST_FILE && n != "report.md")
        .collect();
    names.sort();
    let mut md = String::from("# Run report\n\n## Files\n\n| file | sha256 |\n|---|---|\n");
    let mut sections = String::new();
    for name in &names {
        let bytes = std::fs::read(dir.join(name))?;
        let _ = writeln!(md, "| {name} | {} |", &sha256_hex(&bytes)[..16]);
        if name.ends_with(".json") {
            let value: Value = serde_json::from_slice(&bytes).with_context(|| format!("parsing {name}"))?;
            let mut fields = Vec::new();
            flatten("", &value, 2, &mut fields);
            let _ = writeln!(sections, "\n## {name}\n\n| field | value |\n|---|---|");
            for (k, v) in fields {
                let _ = writeln!(sections, "| {k} | {} |", v.replace('|', "\\|"));
            }
        }
    }
    md.push_str(&sections);
    run.write("report.md", md)
}
