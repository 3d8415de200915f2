//! The four subcommands. Each writes its report to `out`; timings and
//! warnings go to `err` so that reports stay byte-stable.

use std::io::Write;
use std::time::Instant;

use serde::Serialize;

use super::config::{hardware_threads, Mode, Output, RunConfig};
use super::CliError;
use crate::model::ModelParams;
use crate::parallel::{count_worker_nodes, estimate_p0_nodes, run, verify_schedule};
use crate::seq::{backward_induction, CostsKernel, FrictionlessKernel, NodeKernel, PriceQuote, PricingError};

/// Whether a command's own checks passed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Priced {
    Costs(PriceQuote),
    Frictionless(f64),
}

impl Priced {
    pub fn ask_bid(self) -> (f64, f64) {
        match self {
            Priced::Costs(q) => (q.ask, q.bid),
            Priced::Frictionless(p) => (p, p),
        }
    }
}

/// Prices `m` in the configured mode with the parallel engine.
pub fn price_once(cfg: &RunConfig, m: &ModelParams, threads: usize, block_levels: usize) -> Result<Priced, PricingError> {
    match cfg.mode {
        Mode::Costs => {
            let kernel = CostsKernel::new(m, &cfg.payoff)?;
            Ok(Priced::Costs(run(&kernel, threads, block_levels)?.quote()))
        }
        Mode::Frictionless => {
            let kernel = FrictionlessKernel::new(m, &cfg.payoff)?;
            Ok(Priced::Frictionless(run(&kernel, threads, block_levels)?))
        }
    }
}

fn write_rows<T: Serialize>(out: &mut dyn Write, format: Output, rows: &[T]) -> Result<(), CliError> {
    match format {
        Output::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for row in rows {
                w.serialize(row)?;
            }
            w.flush()?;
        }
        Output::Json => {
            let text = if rows.len() == 1 {
                serde_json::to_string_pretty(&rows[0])
            } else {
                serde_json::to_string_pretty(rows)
            }
            .expect("report rows serialise");
            writeln!(out, "{text}")?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct CostsRow<'a> {
    mode: &'a str,
    payoff: &'a str,
    #[serde(rename = "N")]
    steps: usize,
    p: usize,
    #[serde(rename = "L")]
    block_levels: usize,
    ask: f64,
    bid: f64,
}

#[derive(Serialize)]
struct FrictionlessRow<'a> {
    mode: &'a str,
    payoff: &'a str,
    #[serde(rename = "N")]
    steps: usize,
    p: usize,
    #[serde(rename = "L")]
    block_levels: usize,
    price: f64,
}

pub fn cmd_price(cfg: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> Result<Verdict, CliError> {
    let m = cfg.model()?;
    let start = Instant::now();
    let priced = price_once(cfg, &m, cfg.threads, cfg.block_levels)?;
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    let (mode, payoff) = (cfg.mode.name(), cfg.payoff_kind.name());
    let (steps, p, block_levels) = (cfg.steps, cfg.threads, cfg.block_levels);
    match priced {
        Priced::Costs(q) => write_rows(
            out,
            cfg.output,
            &[CostsRow { mode, payoff, steps, p, block_levels, ask: q.ask, bid: q.bid }],
        )?,
        Priced::Frictionless(price) => write_rows(
            out,
            cfg.output,
            &[FrictionlessRow { mode, payoff, steps, p, block_levels, price }],
        )?,
    }
    writeln!(err, "wall time: {wall_ms:.3} ms")?;
    Ok(Verdict::Pass)
}

#[derive(Serialize)]
struct CurveRow {
    #[serde(rename = "S0")]
    s0: f64,
    k: f64,
    ask: f64,
    bid: f64,
}

pub fn cmd_curve(cfg: &RunConfig, out: &mut dyn Write) -> Result<Verdict, CliError> {
    let rates = match cfg.mode {
        Mode::Costs => cfg.cost_rates.clone(),
        Mode::Frictionless => vec![0.0],
    };
    let mut rows = Vec::new();
    for s0 in cfg.sweep() {
        for &k in &rates {
            let m = cfg.model_with(s0, cfg.steps, k)?;
            let (ask, bid) = price_once(cfg, &m, cfg.threads, cfg.block_levels)?.ask_bid();
            rows.push(CurveRow { s0, k, ask, bid });
        }
    }
    write_rows(out, cfg.output, &rows)?;
    Ok(Verdict::Pass)
}

#[derive(Serialize)]
struct ScheduleRow {
    #[serde(rename = "N")]
    steps: usize,
    p: usize,
    #[serde(rename = "L")]
    block_levels: usize,
    actual: u64,
    estimate: f64,
    error_pct: f64,
    sound: bool,
}

fn leaf_level(mode: Mode, steps: usize) -> usize {
    match mode {
        Mode::Costs => steps + 1,
        Mode::Frictionless => steps,
    }
}

pub fn cmd_verify_scheduler(cfg: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> Result<Verdict, CliError> {
    let mut rows = Vec::new();
    let mut verdict = Verdict::Pass;
    for &steps in &cfg.steps_list {
        for &p in &cfg.threads_list {
            let leaf = leaf_level(cfg.mode, steps);
            let actual = count_worker_nodes(leaf, p, cfg.block_levels, 0);
            let estimate = estimate_p0_nodes(steps, p);
            let error_pct = (estimate - actual as f64) / actual as f64 * 100.0;
            let sound = match verify_schedule(leaf, p, cfg.block_levels) {
                Ok(_) => true,
                Err(e) => {
                    writeln!(err, "N={steps} p={p}: {e}")?;
                    false
                }
            };
            if !sound || error_pct.abs() > 1.0 {
                verdict = Verdict::Fail;
            }
            rows.push(ScheduleRow { steps, p, block_levels: cfg.block_levels, actual, estimate, error_pct, sound });
        }
    }
    write_rows(out, cfg.output, &rows)?;
    Ok(verdict)
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchRecord {
    pub mode: &'static str,
    #[serde(rename = "N")]
    pub steps: usize,
    pub p: usize,
    #[serde(rename = "L")]
    pub block_levels: usize,
    pub wall_ms: f64,
    pub speedup: f64,
    pub efficiency: f64,
}

pub fn median(mut samples: Vec<f64>) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len();
    if n % 2 == 1 {
        samples[n / 2]
    } else {
        (samples[n / 2 - 1] + samples[n / 2]) / 2.0
    }
}

fn time_ms<K: NodeKernel>(kernel: &K, threads: Option<usize>, block_levels: usize, repeats: usize) -> Result<f64, K::Error> {
    let mut samples = Vec::with_capacity(repeats);
    for _ in 0..repeats {
        let start = Instant::now();
        match threads {
            None => drop(backward_induction(kernel)?),
            Some(p) => drop(run(kernel, p, block_levels)?),
        }
        samples.push(start.elapsed().as_secs_f64() * 1e3);
    }
    Ok(median(samples))
}

fn bench_kernel<K: NodeKernel>(
    kernel: &K,
    cfg: &RunConfig,
    steps: usize,
    err: &mut dyn Write,
) -> Result<Vec<BenchRecord>, CliError>
where
    CliError: From<K::Error>,
{
    let serial = time_ms(kernel, None, cfg.block_levels, cfg.repeats)?;
    let mut rows = Vec::new();
    for &p in &cfg.threads_list {
        let wall_ms = if p == 1 {
            serial
        } else {
            time_ms(kernel, Some(p), cfg.block_levels, cfg.repeats)?
        };
        let speedup = if p == 1 { 1.0 } else { serial / wall_ms };
        writeln!(err, "N={steps} p={p}: {wall_ms:.3} ms")?;
        rows.push(BenchRecord {
            mode: cfg.mode.name(),
            steps,
            p,
            block_levels: cfg.block_levels,
            wall_ms,
            speedup,
            efficiency: speedup / p as f64,
        });
    }
    Ok(rows)
}

/// Median wall time of `repeats` runs for every `(N, p)`; `p = 1` is the
/// sequential pricer and the baseline for speedups.
pub fn cmd_bench(cfg: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> Result<Verdict, CliError> {
    let cores = hardware_threads();
    for &p in &cfg.threads_list {
        if p > cores {
            writeln!(err, "warning: {p} threads requested but only {cores} available")?;
        }
    }
    let mut rows = Vec::new();
    for &steps in &cfg.steps_list {
        let m = cfg.model_with(cfg.s0, steps, cfg.cost_rate)?;
        match cfg.mode {
            Mode::Costs => rows.extend(bench_kernel(&CostsKernel::new(&m, &cfg.payoff)?, cfg, steps, err)?),
            Mode::Frictionless => {
                rows.extend(bench_kernel(&FrictionlessKernel::new(&m, &cfg.payoff)?, cfg, steps, err)?)
            }
        }
    }
    write_rows(out, cfg.output, &rows)?;
    Ok(Verdict::Pass)
}
