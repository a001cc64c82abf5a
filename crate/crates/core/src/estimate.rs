//! Replication engine, Wilson intervals and ratio sweeps.
//!
//! Replicas are cut into fixed chunks of [`CHUNK`] indices; each chunk is run
//! on one worker with per-replica streams from [`replica_rng`] and produces
//! integer counts. Counts are merged by addition, so results do not depend on
//! how many workers ran or in what order chunks finished.

use crate::error::{Error, Result};
use crate::models::Model;
use crate::predict::{ld_prediction, window, x_tail_prediction, Window};
use crate::rng::{replica_rng, ReplicaRng};
use crate::series::{contour_tail, exact_tail, Pgf, CONTOUR_MIN_X};
use crate::simulate::{sample_stationary_x, simulate_sn, stationary_truncation_bound, Outcome, SimBudget};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use std::fmt::Write as _;

pub const CHUNK: u64 = 1024;
pub const DEFAULT_GRID_SIZE: usize = 12;
pub const DEFAULT_LEVEL: f64 = 0.95;
/// Largest extraction size the exact channel will use.
pub const MAX_EXACT_POINTS: usize = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub x: f64,
    pub hits: u64,
    pub reps: u64,
    pub p_hat: f64,
    pub ci_lo: f64,
    /// Wilson upper end plus `aborted_reps / reps`.
    pub ci_hi: f64,
    /// Aborted replicas whose lower bound did not already exceed `x`.
    pub aborted_reps: u64,
}

/// Wilson score interval for `hits` successes in `reps` trials.
pub fn wilson(hits: u64, reps: u64, level: f64) -> (f64, f64) {
    let n = reps as f64;
    let p = hits as f64 / n;
    let z = Normal::standard().inverse_cdf(0.5 + level / 2.0);
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).clamp(0.0, p), (center + half).clamp(p, 1.0))
}

fn pool(workers: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .expect("failed to start worker pool")
}

/// Runs `f(replica, rng)` for every replica and returns the results in
/// replica order. `workers = 0` lets the pool pick its size.
pub fn run_replicas<T, F>(reps: u64, seed: u64, workers: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, &mut ReplicaRng) -> T + Sync,
{
    pool(workers).install(|| {
        (0..reps)
            .into_par_iter()
            .map(|i| f(i, &mut replica_rng(seed, i)))
            .collect()
    })
}

#[derive(Clone)]
struct Counts {
    hits: Vec<u64>,
    aborted: Vec<u64>,
    aborted_any: u64,
}

impl Counts {
    fn zero(k: usize) -> Self {
        Counts {
            hits: vec![0; k],
            aborted: vec![0; k],
            aborted_any: 0,
        }
    }

    fn merge(mut self, other: Counts) -> Counts {
        for (a, b) in self.hits.iter_mut().zip(other.hits) {
            *a += b;
        }
        for (a, b) in self.aborted.iter_mut().zip(other.aborted) {
            *a += b;
        }
        self.aborted_any += other.aborted_any;
        self
    }
}

/// Monte Carlo estimates of `P(V > x)` for every `x` in `xs` from one pass of
/// `reps` replicas. An aborted replica whose lower bound exceeds `x` is a hit;
/// otherwise it widens `ci_hi` by `1/reps`.
pub fn mc_tail<F>(sampler: F, xs: &[f64], reps: u64, seed: u64, workers: usize, level: f64) -> Result<(Vec<TailEstimate>, u64)>
where
    F: Fn(&mut ReplicaRng) -> Outcome + Sync,
{
    if reps == 0 {
        return Err(Error::DegenerateGrid("reps must be at least 1".into()));
    }
    let k = xs.len();
    let chunks = reps.div_ceil(CHUNK);
    let counts = pool(workers).install(|| {
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut acc = Counts::zero(k);
                for i in c * CHUNK..((c + 1) * CHUNK).min(reps) {
                    let mut rng = replica_rng(seed, i);
                    match sampler(&mut rng) {
                        Outcome::Value { value } => {
                            for (j, &x) in xs.iter().enumerate() {
                                if value as f64 > x {
                                    acc.hits[j] += 1;
                                }
                            }
                        }
                        Outcome::Aborted { lower_bound, .. } => {
                            acc.aborted_any += 1;
                            for (j, &x) in xs.iter().enumerate() {
                                if lower_bound as f64 > x {
                                    acc.hits[j] += 1;
                                } else {
                                    acc.aborted[j] += 1;
                                }
                            }
                        }
                    }
                }
                acc
            })
            .reduce(|| Counts::zero(k), Counts::merge)
    });
    let estimates = xs
        .iter()
        .enumerate()
        .map(|(j, &x)| {
            let hits = counts.hits[j];
            let (lo, hi) = wilson(hits, reps, level);
            TailEstimate {
                x,
                hits,
                reps,
                p_hat: hits as f64 / reps as f64,
                ci_lo: lo,
                ci_hi: (hi + counts.aborted[j] as f64 / reps as f64).min(1.0),
                aborted_reps: counts.aborted[j],
            }
        })
        .collect();
    Ok((estimates, counts.aborted_any))
}

/// `size` log-equispaced points from `lo` to `hi`.
pub fn geometric_grid(lo: f64, hi: f64, size: usize) -> Result<Vec<f64>> {
    if size == 0 || !(lo > 0.0) || !(hi >= lo) || !hi.is_finite() {
        return Err(Error::DegenerateGrid(format!(
            "need 0 < lo ≤ hi and at least one point, got [{lo}, {hi}] with {size}"
        )));
    }
    if size == 1 {
        return Ok(vec![lo]);
    }
    let (a, b) = (lo.ln(), hi.ln());
    Ok((0..size)
        .map(|i| match i {
            0 => lo,
            i if i == size - 1 => hi,
            i => (a + (b - a) * i as f64 / (size - 1) as f64).exp(),
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub x: f64,
    pub prediction: f64,
    pub mc: Option<TailEstimate>,
    /// `p_hat / prediction`.
    pub ratio: Option<f64>,
    pub ratio_lo: Option<f64>,
    pub ratio_hi: Option<f64>,
    pub exact_lo: Option<f64>,
    pub exact_hi: Option<f64>,
    /// `exact_hi / prediction`.
    pub exact_ratio: Option<f64>,
}

/// Ratio table over a finite grid. Both sup-errors are taken over the grid
/// only, so they bound the supremum over the window from below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub window: Option<Window>,
    pub n: Option<usize>,
    pub reps: u64,
    pub seed: u64,
    pub level: f64,
    pub rows: Vec<SweepRow>,
    pub sup_error: Option<f64>,
    pub exact_sup_error: Option<f64>,
    pub aborted_reps: u64,
    pub abort_fraction: f64,
    /// Stationary sweeps only: bias bound from truncating the series at `m`.
    pub truncation_bound: Option<f64>,
}

fn cell(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.9e}")).unwrap_or_default()
}

impl SweepReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,p_hat,ci_lo,ci_hi,prediction,ratio,exact_lo,exact_hi,exact_ratio\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:.9e},{},{},{},{:.9e},{},{},{},{}",
                r.x,
                cell(r.mc.map(|m| m.p_hat)),
                cell(r.mc.map(|m| m.ci_lo)),
                cell(r.mc.map(|m| m.ci_hi)),
                r.prediction,
                cell(r.ratio),
                cell(r.exact_lo),
                cell(r.exact_hi),
                cell(r.exact_ratio),
            );
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn exact_ratios(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.exact_ratio).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    /// Monte Carlo replicas; zero skips the Monte Carlo channel.
    pub reps: u64,
    pub seed: u64,
    pub workers: usize,
    pub level: f64,
    pub budget: SimBudget,
    pub exact: bool,
    /// Quadrature tolerance of the contour channel.
    pub tol: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            reps: 0,
            seed: 0,
            workers: 0,
            level: DEFAULT_LEVEL,
            budget: SimBudget::default(),
            exact: true,
            tol: 1e-10,
        }
    }
}

/// `P(· > x)` brackets for integer-floored `xs`: contour inversion where the
/// model allows it and `x` is large, one extraction for the rest.
fn exact_channel(model: &Model, pgf: &Pgf, xs: &[f64], tol: f64) -> Result<Vec<Option<(f64, f64)>>> {
    let contour = model.supports_continuation();
    let mut out = vec![None; xs.len()];
    let mut need_series = Vec::new();
    for (i, &x) in xs.iter().enumerate() {
        let k = x.floor();
        if contour && k >= CONTOUR_MIN_X {
            let v = contour_tail(model, pgf, k, tol)?;
            out[i] = Some((v, v));
        } else {
            need_series.push(i);
        }
    }
    if let Some(kmax) = need_series.iter().map(|&i| xs[i].floor() as usize).max() {
        let n_points = (kmax + 2).next_power_of_two().max(1024);
        if n_points <= MAX_EXACT_POINTS {
            let series = pgf.series(model, n_points)?;
            for i in need_series {
                out[i] = Some(exact_tail(&series, xs[i].floor() as i64)?);
            }
        }
    }
    Ok(out)
}

fn assemble(
    xs: &[f64],
    predictions: Vec<f64>,
    mc: Option<(Vec<TailEstimate>, u64)>,
    exact: Option<Vec<Option<(f64, f64)>>>,
) -> (Vec<SweepRow>, Option<f64>, Option<f64>, u64) {
    let mut rows = Vec::with_capacity(xs.len());
    for (i, &x) in xs.iter().enumerate() {
        let pred = predictions[i];
        let est = mc.as_ref().map(|(e, _)| e[i]);
        let br = exact.as_ref().and_then(|e| e[i]);
        rows.push(SweepRow {
            x,
            prediction: pred,
            mc: est,
            ratio: est.map(|e| e.p_hat / pred),
            ratio_lo: est.map(|e| e.ci_lo / pred),
            ratio_hi: est.map(|e| e.ci_hi / pred),
            exact_lo: br.map(|b| b.0),
            exact_hi: br.map(|b| b.1),
            exact_ratio: br.map(|b| b.1 / pred),
        });
    }
    let sup = |f: fn(&SweepRow) -> Option<f64>| -> Option<f64> {
        let v: Vec<f64> = rows.iter().filter_map(f).collect();
        (!v.is_empty()).then(|| v.iter().map(|r| (r - 1.0).abs()).fold(0.0, f64::max))
    };
    let sup_mc = sup(|r| r.ratio);
    let sup_exact = sup(|r| r.exact_ratio);
    let aborted = mc.map(|(_, a)| a).unwrap_or(0);
    (rows, sup_mc, sup_exact, aborted)
}

/// `P(S_n > x) / (n·P(Y^{(∞)} > x))` over a geometric grid spanning the window.
pub fn sweep_theorem(
    model: &Model,
    n: usize,
    kappa1: f64,
    kappa2: f64,
    grid_size: usize,
    opts: &SweepOptions,
) -> Result<SweepReport> {
    let w = window(model, n, kappa1, kappa2)?;
    let xs = geometric_grid(w.x_lo, w.x_hi, grid_size)?;
    let mut report = sweep_sn(model, n, &xs, opts)?;
    report.window = Some(w);
    Ok(report)
}

/// The ratio table of [`sweep_theorem`] on an explicit grid.
pub fn sweep_sn(model: &Model, n: usize, xs: &[f64], opts: &SweepOptions) -> Result<SweepReport> {
    if xs.is_empty() || xs.iter().any(|x| !(*x >= 1.0 && x.is_finite())) {
        return Err(Error::DegenerateGrid("sweep points must be finite and at least 1".into()));
    }
    let predictions = xs.iter().map(|&x| ld_prediction(model, n, x)).collect::<Result<Vec<_>>>()?;
    let mc = if opts.reps > 0 {
        Some(mc_tail(
            |rng| simulate_sn(rng, model, n, &opts.budget),
            xs,
            opts.reps,
            opts.seed,
            opts.workers,
            opts.level,
        )?)
    } else {
        None
    };
    let exact = if opts.exact {
        Some(exact_channel(model, &Pgf::Sn(n), xs, opts.tol)?)
    } else {
        None
    };
    let (rows, sup_error, exact_sup_error, aborted_reps) = assemble(xs, predictions, mc, exact);
    Ok(SweepReport {
        window: None,
        n: Some(n),
        reps: opts.reps,
        seed: opts.seed,
        level: opts.level,
        rows,
        sup_error,
        exact_sup_error,
        aborted_reps,
        abort_fraction: aborted_reps as f64 / opts.reps.max(1) as f64,
        truncation_bound: None,
    })
}

/// `P(X > x)` against the stationary tail prediction. The Monte Carlo channel
/// truncates the series representation at `m` and adds the truncation bound
/// to every `ci_hi`.
pub fn sweep_stationary(model: &Model, xs: &[f64], m: usize, opts: &SweepOptions) -> Result<SweepReport> {
    if xs.is_empty() || xs.iter().any(|x| !(*x >= 0.0 && x.is_finite())) {
        return Err(Error::DegenerateGrid("stationary sweep needs finite nonnegative points".into()));
    }
    let predictions = xs.iter().map(|&x| x_tail_prediction(model, x)).collect::<Result<Vec<_>>>()?;
    let (mc, truncation_bound) = if opts.reps > 0 {
        let bound = stationary_truncation_bound(model, m)?;
        let (mut est, aborted) = mc_tail(
            |rng| sample_stationary_x(rng, model, m, &opts.budget),
            xs,
            opts.reps,
            opts.seed,
            opts.workers,
            opts.level,
        )?;
        for e in &mut est {
            e.ci_hi = (e.ci_hi + bound).min(1.0);
        }
        (Some((est, aborted)), Some(bound))
    } else {
        (None, None)
    };
    let exact = if opts.exact {
        Some(exact_channel(model, &Pgf::Stationary, xs, opts.tol)?)
    } else {
        None
    };
    let (rows, sup_error, exact_sup_error, aborted_reps) = assemble(xs, predictions, mc, exact);
    Ok(SweepReport {
        window: None,
        n: None,
        reps: opts.reps,
        seed: opts.seed,
        level: opts.level,
        rows,
        sup_error,
        exact_sup_error,
        aborted_reps,
        abort_fraction: aborted_reps as f64 / opts.reps.max(1) as f64,
        truncation_bound,
    })
}
