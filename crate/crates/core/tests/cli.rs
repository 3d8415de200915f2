use std::io::Write;
use std::process::{Command, Output};

fn bidask(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bidask"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn csv_rows(o: &Output) -> Vec<Vec<String>> {
    stdout(o)
        .lines()
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

#[test]
fn zero_cost_price_matches_frictionless() {
    let costs = bidask(&["price", "--steps", "100", "--cost-rate", "0", "--threads", "2"]);
    assert_eq!(costs.status.code(), Some(0));
    let rows = csv_rows(&costs);
    assert_eq!(rows[0], ["mode", "payoff", "N", "p", "L", "ask", "bid"]);
    let (ask, bid) = (num(&rows[1][5]), num(&rows[1][6]));

    let plain = bidask(&["price", "--steps", "100", "--mode", "frictionless", "--threads", "2"]);
    let rows = csv_rows(&plain);
    assert_eq!(rows[0], ["mode", "payoff", "N", "p", "L", "price"]);
    assert_eq!(rows[1][4], "50");
    let price = num(&rows[1][5]);
    assert!((ask - price).abs() <= 1e-9 * price);
    assert!((bid - price).abs() <= 1e-9 * price);
}

#[test]
fn thread_count_does_not_change_prices() {
    let one = bidask(&["price", "--steps", "300", "--threads", "1", "--output", "json"]);
    let many = bidask(&["price", "--steps", "300", "--threads", "8", "--output", "json"]);
    let a: serde_json::Value = serde_json::from_slice(&one.stdout).unwrap();
    let b: serde_json::Value = serde_json::from_slice(&many.stdout).unwrap();
    assert_eq!(a["ask"], b["ask"]);
    assert_eq!(a["bid"], b["bid"]);
    assert_eq!(b["p"], 8);
}

#[test]
fn reports_are_byte_stable() {
    let args = ["curve", "--steps", "60", "--sweep-from", "95", "--sweep-to", "97", "--threads", "3"];
    let first = bidask(&args);
    let second = bidask(&args);
    assert_eq!(first.status.code(), Some(0));
    assert_eq!(first.stdout, second.stdout);
    let p1 = bidask(&["price", "--steps", "80", "--threads", "2"]);
    let p2 = bidask(&["price", "--steps", "80", "--threads", "2"]);
    assert_eq!(p1.stdout, p2.stdout);
}

#[test]
fn curve_rows_are_ordered_and_nested() {
    let out = bidask(&[
        "curve", "--steps", "80", "--sweep-from", "98", "--sweep-to", "102", "--sweep-step", "2",
        "--cost-rates", "0,0.0025,0.005",
    ]);
    let rows = csv_rows(&out);
    assert_eq!(rows[0], ["S0", "k", "ask", "bid"]);
    let body: Vec<(f64, f64, f64, f64)> = rows[1..]
        .iter()
        .map(|r| (num(&r[0]), num(&r[1]), num(&r[2]), num(&r[3])))
        .collect();
    assert_eq!(body.len(), 9);
    for group in body.chunks(3) {
        let s0 = group[0].0;
        assert!(group.iter().all(|r| r.0 == s0));
        assert_eq!([group[0].1, group[1].1, group[2].1], [0.0, 0.0025, 0.005]);
        let (z, k1, k2) = (group[0], group[1], group[2]);
        assert!(k2.3 <= k1.3 && k1.3 <= z.3 + 1e-9);
        assert!(z.2 < k1.2 && k1.2 < k2.2);
    }
    assert!(body.windows(2).all(|w| w[0].0 <= w[1].0));
}

#[test]
fn zero_cost_curve_has_equal_columns() {
    let out = bidask(&["curve", "--steps", "50", "--sweep-from", "100", "--sweep-to", "100", "--cost-rates", "0"]);
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 2);
    let (ask, bid) = (num(&rows[1][2]), num(&rows[1][3]));
    assert!((ask - bid).abs() <= 1e-9 * ask);
}

#[test]
fn verify_sched_reports_published_counts() {
    let out = bidask(&["verify-sched", "--steps-list", "1200,1500", "--threads-list", "2,4"]);
    assert_eq!(out.status.code(), Some(0));
    let rows = csv_rows(&out);
    assert_eq!(rows[0], ["N", "p", "L", "actual", "estimate", "error_pct", "sound"]);
    assert_eq!(rows[1][3], "362999");
    assert_eq!(rows[4][3], "282748");
    assert!((num(&rows[1][5]) + 0.83).abs() < 0.01);
    assert!((num(&rows[4][5]) + 0.53).abs() < 0.01);
}

#[test]
fn verify_sched_fails_outside_the_bound() {
    let out = bidask(&["verify-sched", "--steps-list", "20", "--threads-list", "1"]);
    assert_eq!(out.status.code(), Some(1));
    let rows = csv_rows(&out);
    assert_eq!(rows[1][3], ((23 * 22) / 2).to_string());
}

#[test]
fn bench_reports_serial_baseline() {
    let out = bidask(&["bench", "--steps-list", "60", "--threads-list", "1,2", "--repeats", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let rows = csv_rows(&out);
    assert_eq!(rows[0], ["mode", "N", "p", "L", "wall_ms", "speedup", "efficiency"]);
    assert_eq!((rows[1][5].as_str(), rows[1][6].as_str()), ("1.0", "1.0"));
    let (speedup, efficiency) = (num(&rows[2][5]), num(&rows[2][6]));
    assert!(num(&rows[2][4]) > 0.0);
    assert!((efficiency - speedup / 2.0).abs() < 1e-12);
}

#[test]
fn bench_warns_on_oversubscription() {
    let out = bidask(&["bench", "--mode", "frictionless", "--steps-list", "40", "--threads-list", "512", "--repeats", "1"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
}

#[test]
fn config_file_merges_under_flags() {
    let mut file = tempfile::NamedTempFile::new().unwrap();
    write!(
        file,
        r#"{{"mode": "frictionless", "steps": 40, "payoff": "custom", "output": "json",
            "custom_payoff": {{"anchor_y": 100.0, "anchor_value": 0.0, "breakpoints": [100.0], "slopes": [-1.0, 0.0]}}}}"#
    )
    .unwrap();
    let path = file.path().to_str().unwrap();
    let custom = bidask(&["price", "--config", path, "--steps", "60"]);
    assert_eq!(custom.status.code(), Some(0), "{}", String::from_utf8_lossy(&custom.stderr));
    let v: serde_json::Value = serde_json::from_slice(&custom.stdout).unwrap();
    assert_eq!(v["N"], 60);
    assert_eq!(v["payoff"], "custom");

    let put = bidask(&["price", "--mode", "frictionless", "--steps", "60", "--output", "json"]);
    let w: serde_json::Value = serde_json::from_slice(&put.stdout).unwrap();
    assert_eq!(v["price"], w["price"]);
}

#[test]
fn usage_errors_exit_with_two() {
    for args in [
        &["price", "--payoff", "bullspread"][..],
        &["price", "--steps", "0"],
        &["price", "--vol", "-1"],
        &["price", "--mode", "sideways"],
        &["price", "--payoff", "custom"],
        &["price", "--config", "/nonexistent/config.json"],
        &["curve", "--sweep-step", "0"],
        &["frobnicate"],
    ] {
        let out = bidask(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn bull_spread_quotes_are_ordered() {
    let out = bidask(&[
        "price", "--payoff", "bullspread", "--strike", "95", "--strike2", "105", "--cost-rate", "0.01", "--steps",
        "200",
    ]);
    let rows = csv_rows(&out);
    let (ask, bid) = (num(&rows[1][5]), num(&rows[1][6]));
    assert!(ask >= bid && bid >= 0.0);
}
