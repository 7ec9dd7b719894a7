//! Seeded Monte Carlo runs of many independent N-round experiments.
//!
//! Every batch gets its own seed, derived from `(master_seed, batch_index)`,
//! and two independent ChaCha streams: one for the setting choices and one for
//! the strategy. Batches are evaluated in parallel and aggregated in batch
//! order, so reports are bit-identical across runs and thread counts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bounds::{f_delta, x_tail_bound};
use crate::domain::{AliceSetting, BobSetting, PairCounts, SettingPair, Transcript};
use crate::enumerator::{collective_playout, playout_with_rng};
use crate::error::{Error, Result};
use crate::exec::{map_indexed, Execution};
use crate::rational::{from_decimal_f64, integer, to_f64, Rational};
use crate::statistics::BatchStatistics;
use crate::strategies::Model;

const SETTINGS_STREAM: u64 = 0;
const STRATEGY_STREAM: u64 = 1;

/// z for a two-sided 95% interval.
pub const Z95: f64 = 1.959_963_984_540_054;

/// SplitMix64 finaliser over `(master, index)`.
pub fn derive_seed(master_seed: u64, batch_index: u64) -> u64 {
    let mut z = master_seed ^ batch_index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn draw_settings(rng: &mut ChaCha8Rng, n: usize) -> Vec<SettingPair> {
    (0..n)
        .map(|_| {
            let alice = if rng.gen::<bool>() { AliceSetting::A2 } else { AliceSetting::A1 };
            let bob = if rng.gen::<bool>() { BobSetting::B2 } else { BobSetting::B1 };
            SettingPair::new(alice, bob)
        })
        .collect()
}

/// One N-round experiment with uniformly random settings.
pub fn run_batch(model: &Model, n: usize, seed: u64) -> Result<Transcript> {
    if n == 0 {
        return Err(Error::input("a batch needs at least one round"));
    }
    let settings = draw_settings(&mut stream(seed, SETTINGS_STREAM), n);
    match model {
        Model::Sequential(s) => playout_with_rng(s.as_ref(), &settings, &mut stream(seed, STRATEGY_STREAM)),
        Model::Collective(c) => collective_playout(c.as_ref(), &settings),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationPlan {
    pub n: usize,
    pub batches: u64,
    pub master_seed: u64,
    /// Tail threshold, held exactly.
    pub delta: Rational,
}

impl SimulationPlan {
    pub fn new(n: usize, batches: u64, master_seed: u64, delta: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::input("n must be at least 1"));
        }
        if batches == 0 {
            return Err(Error::input("at least one batch is required"));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::input(format!("delta must lie in (0, 1), got {delta}")));
        }
        Ok(SimulationPlan {
            n,
            batches,
            master_seed,
            delta: from_decimal_f64(delta)?,
        })
    }

    pub fn delta_f64(&self) -> f64 {
        to_f64(&self.delta)
    }

    /// Y_N tail event threshold 3 + δ.
    pub fn y_threshold(&self) -> Rational {
        integer(3) + &self.delta
    }

    /// X_N tail event threshold (3 + δ)/(1 − δ).
    pub fn x_threshold(&self) -> Rational {
        (integer(3) + &self.delta) / (integer(1) - &self.delta)
    }
}

/// Per-batch result, one CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchRecord {
    pub batch: u64,
    pub seed: u64,
    pub stats: BatchStatistics,
}

pub fn simulate(model: &Model, plan: &SimulationPlan, execution: Execution) -> Result<Vec<BatchRecord>> {
    map_indexed(execution, 0..plan.batches, |batch| {
        let seed = derive_seed(plan.master_seed, batch);
        let t = run_batch(model, plan.n, seed)?;
        Ok(BatchRecord {
            batch,
            seed,
            stats: BatchStatistics::from_transcript(&t)?,
        })
    })
    .into_iter()
    .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> Interval {
    if trials == 0 {
        return Interval { lo: 0.0, hi: 1.0 };
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    Interval {
        lo: if successes == 0 { 0.0 } else { (centre - half).max(0.0) },
        hi: if successes == trials { 1.0 } else { (centre + half).min(1.0) },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateReport {
    pub strategy: String,
    pub n: usize,
    pub batches: u64,
    pub master_seed: u64,
    pub delta: f64,
    pub mean_y: f64,
    pub se_y: f64,
    /// Mean of X_N over batches where it is defined.
    pub mean_x: Option<f64>,
    pub se_x: Option<f64>,
    pub undefined_count: u64,
    pub tail_count_y: u64,
    pub tail_freq_y: f64,
    pub wilson_y: Interval,
    pub tail_count_x: u64,
    /// Fraction of all batches with X_N > (3 + δ)/(1 − δ).
    pub tail_freq_x: f64,
    pub wilson_x: Interval,
}

fn mean_and_se(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return Some((mean, 0.0));
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Some((mean, (var / n).sqrt()))
}

/// Folds batch records in the order given. Callers pass them sorted by batch
/// index, which keeps the floating-point sums reproducible.
pub fn aggregate(strategy: &str, plan: &SimulationPlan, records: &[BatchRecord]) -> EstimateReport {
    let y_thr = plan.y_threshold();
    let x_thr = plan.x_threshold();
    let ys: Vec<f64> = records.iter().map(|r| to_f64(&r.stats.y_value)).collect();
    let xs: Vec<f64> = records
        .iter()
        .filter_map(|r| r.stats.x_value.as_ref().map(to_f64))
        .collect();
    let tail_y = records.iter().filter(|r| r.stats.y_value > y_thr).count() as u64;
    let tail_x = records
        .iter()
        .filter(|r| r.stats.x_value.as_ref().is_some_and(|x| *x > x_thr))
        .count() as u64;
    let total = records.len() as u64;
    let (mean_y, se_y) = mean_and_se(&ys).unwrap_or((f64::NAN, f64::NAN));
    let x = mean_and_se(&xs);
    let freq = |k: u64| if total == 0 { 0.0 } else { k as f64 / total as f64 };
    EstimateReport {
        strategy: strategy.to_string(),
        n: plan.n,
        batches: total,
        master_seed: plan.master_seed,
        delta: plan.delta_f64(),
        mean_y,
        se_y,
        mean_x: x.map(|(m, _)| m),
        se_x: x.map(|(_, s)| s),
        undefined_count: total - xs.len() as u64,
        tail_count_y: tail_y,
        tail_freq_y: freq(tail_y),
        wilson_y: wilson_interval(tail_y, total, Z95),
        tail_count_x: tail_x,
        tail_freq_x: freq(tail_x),
        wilson_x: wilson_interval(tail_x, total, Z95),
    }
}

/// Runs the plan and summarises it.
pub fn estimate(model: &Model, plan: &SimulationPlan, execution: Execution) -> Result<EstimateReport> {
    let records = simulate(model, plan, execution)?;
    Ok(aggregate(model.name(), plan, &records))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailRow {
    pub empirical: f64,
    pub wilson: Interval,
    pub bound: f64,
    /// empirical / bound.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailComparison {
    pub strategy: String,
    pub n: usize,
    pub delta: f64,
    pub y: TailRow,
    pub x: TailRow,
}

/// Empirical tail frequencies against f_N^δ (for Y) and 5 f_N^δ (for X).
pub fn tail_compare_report(report: &EstimateReport) -> Result<TailComparison> {
    let n = report.n as u64;
    let fy = f_delta(n, report.delta)?;
    let fx = x_tail_bound(n, report.delta)?;
    Ok(TailComparison {
        strategy: report.strategy.clone(),
        n: report.n,
        delta: report.delta,
        y: TailRow {
            empirical: report.tail_freq_y,
            wilson: report.wilson_y,
            bound: fy,
            ratio: report.tail_freq_y / fy,
        },
        x: TailRow {
            empirical: report.tail_freq_x,
            wilson: report.wilson_x,
            bound: fx,
            ratio: report.tail_freq_x / fx,
        },
    })
}

pub fn tail_compare(model: &Model, plan: &SimulationPlan, execution: Execution) -> Result<TailComparison> {
    tail_compare_report(&estimate(model, plan, execution)?)
}

/// Sum of per-batch pair counts, handy for checking setting uniformity.
pub fn pooled_counts(records: &[BatchRecord]) -> PairCounts {
    let mut c = PairCounts::default();
    for r in records {
        c.merge(&r.stats.counts);
    }
    c
}
