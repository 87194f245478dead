use chrono::NaiveDate;
use forwardtest::backtest::{run_backtest, BacktestReport};
use forwardtest::indicators::{Action, SignalSeries};
use forwardtest::ingest::{OhlcBar, PriceSeries};
use forwardtest::metrics::*;
use forwardtest::returns_vol::{cumulative_return, TradeLeg};
use proptest::prelude::*;

fn series(opens: &[f64], closes: &[f64]) -> PriceSeries {
    let d0 = NaiveDate::from_ymd_opt(2019, 6, 3).unwrap();
    let bars = opens
        .iter()
        .zip(closes)
        .enumerate()
        .map(|(i, (&o, &c))| OhlcBar::new(d0 + chrono::Days::new(i as u64), o, o.max(c) + 0.1, o.min(c) - 0.1, c, 0).unwrap())
        .collect();
    PriceSeries::new("T", bars).unwrap()
}

fn actions(codes: &[u8]) -> SignalSeries {
    SignalSeries {
        actions: codes
            .iter()
            .map(|c| match c % 3 {
                0 => Action::Hold,
                1 => Action::Enter,
                _ => Action::Exit,
            })
            .collect(),
    }
}

fn price_path() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<u8>)> {
    (5usize..60).prop_flat_map(|n| {
        (
            prop::collection::vec(5.0f64..50.0, n),
            prop::collection::vec(5.0f64..50.0, n),
            prop::collection::vec(0u8..9, n),
        )
    })
}

#[test]
fn hand_ledger_with_fees() {
    // signal on bar 0 buys at the open of bar 1 (10), signal on bar 2 sells at
    // the open of bar 3 (11)
    let s = series(&[9.0, 10.0, 10.4, 11.0, 11.5], &[9.5, 10.2, 10.8, 11.1, 11.4]);
    let sig = SignalSeries {
        actions: vec![Action::Enter, Action::Hold, Action::Exit, Action::Hold, Action::Hold],
    };
    let k = 0.001;
    let r = run_backtest(&s, &sig, 100.0, k).unwrap();

    // double-entry ledger: cash and shares accounts, fees booked separately
    let mut cash = 100.0;
    let buy_fee = cash - cash / (1.0 + k);
    let shares = (cash - buy_fee) / 10.0;
    cash -= shares * 10.0 + buy_fee;
    assert!(cash.abs() < 1e-12);
    let gross = shares * 11.0;
    let sell_fee = gross * k;
    cash += gross - sell_fee;

    assert!((buy_fee - 0.0999).abs() < 1e-4);
    assert!((sell_fee - 0.1099).abs() < 1e-4);
    assert!((r.final_equity() - cash).abs() < 1e-9);
    assert!((r.final_equity() - 109.78).abs() < 0.01);
    let t = &r.trades[0];
    assert!((t.fee - (buy_fee + sell_fee)).abs() < 1e-12);
    assert!((t.profit - (t.quantity * (t.exit_price - t.entry_price) - t.fee)).abs() < 1e-12);
    assert!(t.exit_date > t.entry_date);
}

fn count_entries(sig: &SignalSeries) -> usize {
    let n = sig.len();
    let (mut long, mut trades) = (false, 0);
    for t in 0..n {
        match sig.actions[t] {
            Action::Enter if !long && t + 2 < n => {
                long = true;
                trades += 1;
            }
            Action::Exit if long => long = false,
            _ => {}
        }
    }
    trades
}

fn check_report_invariants(r: &BacktestReport, s: &PriceSeries) {
    assert_eq!(r.equity[0], r.budget);
    assert!(r.equity.iter().all(|&e| e >= 0.0));
    let dates = s.dates();
    for (t, w) in r.equity.windows(2).enumerate() {
        let d = dates[t + 1];
        let held = r.trades.iter().any(|tr| tr.entry_date <= d && d <= tr.exit_date);
        if !held {
            assert_eq!(w[0], w[1], "equity moved while flat on {d}");
        }
    }
    for tr in &r.trades {
        assert!(tr.exit_date > tr.entry_date);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn zero_fee_equity_matches_compounded_legs((o, c, codes) in price_path()) {
        let s = series(&o, &c);
        let sig = actions(&codes);
        let r = run_backtest(&s, &sig, 100.0, 0.0).unwrap();
        prop_assert_eq!(r.trades.len(), count_entries(&sig));
        check_report_invariants(&r, &s);
        if !r.trades.is_empty() {
            let legs: Vec<TradeLeg> = r.trades.iter().map(|t| TradeLeg::new(t.entry_price, t.exit_price, 0.0).unwrap()).collect();
            let (cr, _) = cumulative_return(&legs).unwrap();
            prop_assert!((r.final_equity() - 100.0 * cr).abs() <= 1e-9 * 100.0 * cr);
        } else {
            prop_assert_eq!(r.final_equity(), 100.0);
        }
    }

    #[test]
    fn fees_never_help((o, c, codes) in price_path(), k1 in 0.0f64..0.05, dk in 0.0f64..0.05) {
        let s = series(&o, &c);
        let sig = actions(&codes);
        let lo = run_backtest(&s, &sig, 100.0, k1).unwrap();
        let hi = run_backtest(&s, &sig, 100.0, k1 + dk).unwrap();
        prop_assert!(hi.final_equity() <= lo.final_equity() + 1e-9);
        check_report_invariants(&hi, &s);
    }

    #[test]
    fn drawdown_matches_exhaustive(e in prop::collection::vec(1.0f64..200.0, 1..200)) {
        let mut brute: f64 = 0.0;
        for t in 0..e.len() {
            for tau in t..e.len() {
                brute = brute.max((e[t] - e[tau]) / e[t]);
            }
        }
        let mdd = max_drawdown(&e);
        prop_assert!((mdd - brute).abs() < 1e-12);
        prop_assert!((0.0..1.0).contains(&mdd));
        let nondecreasing = e.windows(2).all(|w| w[1] >= w[0]);
        prop_assert_eq!(mdd == 0.0, nondecreasing);
    }

    #[test]
    fn error_metric_identities(
        y in prop::collection::vec(1.0f64..100.0, 2..50),
        noise in prop::collection::vec(-5.0f64..5.0, 50),
    ) {
        let p: Vec<f64> = y.iter().zip(&noise).map(|(a, b)| a + b).collect();
        let e = forecast_errors(&y, &p).unwrap();
        prop_assert!((e.rmse * e.rmse - e.mse).abs() <= 1e-12 * e.mse.max(1.0));
        if let Some(evs) = e.evs {
            prop_assert!(evs <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn ratio_signs_follow_mean_return(e in prop::collection::vec(50.0f64..150.0, 3..80)) {
        let report = BacktestReport {
            ticker: "X".into(),
            dates: Vec::new(),
            trades: Vec::new(),
            budget: e[0],
            equity: e.clone(),
            fee_rate: 0.0,
            fill_rule: Default::default(),
            metrics: None,
        };
        let m = risk_metrics(&report, 252.0).unwrap();
        let r = period_returns(&e);
        let mean = r.iter().sum::<f64>() / r.len() as f64;
        for ratio in [m.sharpe, m.sortino].into_iter().flatten() {
            prop_assert!(ratio == 0.0 && mean == 0.0 || ratio.signum() == mean.signum());
        }
    }
}

#[test]
fn evs_is_one_for_constant_residuals() {
    let y = [3.0, 5.0, 4.0, 8.0];
    let shifted: Vec<f64> = y.iter().map(|v| v - 1.5).collect();
    assert!((forecast_errors(&y, &shifted).unwrap().evs.unwrap() - 1.0).abs() < 1e-15);
    let noisy = [3.1, 5.0, 4.0, 8.0];
    assert!(forecast_errors(&y, &noisy).unwrap().evs.unwrap() < 1.0);
    let mean = [5.0; 4];
    assert!(forecast_errors(&y, &mean).unwrap().evs.unwrap().abs() < 1e-15);
}

#[test]
fn risk_metrics_by_hand() {
    let s = series(&[10.0, 10.0, 12.0, 12.0, 9.0, 9.0], &[10.0, 11.0, 12.0, 10.0, 9.0, 9.5]);
    let sig = SignalSeries {
        actions: [1u8, 2, 0, 1, 0, 0]
            .iter()
            .map(|c| [Action::Hold, Action::Enter, Action::Exit][*c as usize])
            .collect(),
    };
    let r = run_backtest(&s, &sig, 100.0, 0.0).unwrap();
    // buy 10 shares at 10, sell at 12; buy 10 at 9, forced out at 9.5
    assert_eq!(r.trades.len(), 2);
    assert_eq!(r.equity, vec![100.0, 110.0, 120.0, 120.0, 120.0, 120.0 / 9.0 * 9.5]);
    let m = risk_metrics(&r, 252.0).unwrap();
    assert!((m.total_return - (120.0 / 9.0 * 9.5 - 100.0)).abs() < 1e-12);
    assert_eq!(m.max_drawdown, 0.0);
    assert_eq!(m.calmar, None);
    assert_eq!(m.sortino, None);
    assert_eq!(m.expectancy, None);
    assert!(m.sharpe.unwrap() > 0.0);

    let rets = [0.1, 1.0 / 11.0, 0.0, 0.0, 9.5 / 9.0 - 1.0];
    let mean = rets.iter().sum::<f64>() / 5.0;
    let sd = (rets.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / 4.0).sqrt();
    assert!((m.sharpe.unwrap() - mean / sd * 252f64.sqrt()).abs() < 1e-12);
}

#[test]
fn expectancy_by_hand() {
    let s = series(&[10.0, 10.0, 12.0, 12.0, 12.0, 10.0, 10.0], &[10.0; 7]);
    let sig = SignalSeries {
        actions: vec![Action::Enter, Action::Exit, Action::Hold, Action::Enter, Action::Exit, Action::Hold, Action::Hold],
    };
    let r = run_backtest(&s, &sig, 100.0, 0.0).unwrap();
    let rf: Vec<f64> = r.trades.iter().map(|t| t.return_fraction).collect();
    assert_eq!(rf.len(), 2);
    assert!((rf[0] - 0.2).abs() < 1e-12);
    assert!((rf[1] + 1.0 / 6.0).abs() < 1e-12);
    let want = (0.5 * 0.2 - 0.5 / 6.0) / (1.0 / 6.0);
    assert!((expectancy(&r.trades).unwrap() - want).abs() < 1e-12);
    let m = risk_metrics(&r, 252.0).unwrap();
    assert!(m.sortino.is_some());
    assert!(m.calmar.is_some());
    let row = m.csv_row("T", "RSI(5,70,30)", "BACKTEST");
    assert!(row.starts_with("T,\"RSI(5,70,30)\",BACKTEST,"));
}
