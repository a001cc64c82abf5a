//! Path-level simulation of the branching process with immigration.
//!
//! Offspring sums are drawn one individual at a time. Heavy tails make the
//! work per replica unbounded, so every routine runs under a [`SimBudget`]
//! and reports an aborted outcome, with a lower bound for the quantity it
//! was computing, instead of truncating.

use crate::error::{Error, Result};
use crate::models::Model;
use crate::series::{iterate_complement, log_tail};
use crate::numeric::C64;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimBudget {
    /// Largest population allowed in one generation.
    pub pop_cap: u64,
    /// Largest number of generations when closing families.
    pub gen_cap: u64,
    /// Largest number of offspring draws per replica; also the step cap of
    /// the first-passage walk.
    pub work_cap: u64,
}

impl Default for SimBudget {
    fn default() -> Self {
        SimBudget {
            pop_cap: 10_000_000,
            gen_cap: 1_000_000,
            work_cap: 100_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AbortReason {
    PopCap,
    GenCap,
    WorkCap,
    SampleCap,
}

/// Budget overrun, with what was known when it happened.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Abort {
    pub reason: AbortReason,
    pub lower_bound: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Outcome {
    Value { value: u64 },
    Aborted { reason: AbortReason, lower_bound: u64 },
}

impl Outcome {
    pub fn from_result(r: std::result::Result<u64, Abort>) -> Self {
        match r {
            Ok(value) => Outcome::Value { value },
            Err(a) => Outcome::Aborted {
                reason: a.reason,
                lower_bound: a.lower_bound,
            },
        }
    }

    pub fn is_aborted(&self) -> bool {
        matches!(self, Outcome::Aborted { .. })
    }
}

struct Work<'a> {
    budget: &'a SimBudget,
    draws: u64,
}

impl Work<'_> {
    /// Sum of `count` offspring draws; on overrun `partial` holds the sum so far.
    fn offspring<R: Rng + ?Sized>(&mut self, rng: &mut R, model: &Model, count: u64) -> std::result::Result<u64, Abort> {
        let mut sum = 0u64;
        for _ in 0..count {
            self.draws += 1;
            if self.draws > self.budget.work_cap {
                return Err(Abort {
                    reason: AbortReason::WorkCap,
                    lower_bound: sum,
                });
            }
            let xi = model.sample_xi(rng).map_err(|_| Abort {
                reason: AbortReason::SampleCap,
                lower_bound: sum.saturating_add(model.xi.cap()),
            })?;
            sum = sum.saturating_add(xi);
            if sum > self.budget.pop_cap {
                return Err(Abort {
                    reason: AbortReason::PopCap,
                    lower_bound: sum,
                });
            }
        }
        Ok(sum)
    }

    fn immigrants<R: Rng + ?Sized>(&mut self, rng: &mut R, model: &Model) -> std::result::Result<u64, Abort> {
        let eta = model.sample_eta(rng).map_err(|_| Abort {
            reason: AbortReason::SampleCap,
            lower_bound: model.eta.cap(),
        })?;
        if eta > self.budget.pop_cap {
            return Err(Abort {
                reason: AbortReason::PopCap,
                lower_bound: eta,
            });
        }
        Ok(eta)
    }
}

fn shift(a: Abort, by: u64) -> Abort {
    Abort {
        reason: a.reason,
        lower_bound: a.lower_bound.saturating_add(by),
    }
}

/// `X_n = Σ_{i ≤ x_prev} ξ_i + η`.
pub fn gwi_step<R: Rng + ?Sized>(rng: &mut R, model: &Model, x_prev: u64, budget: &SimBudget) -> std::result::Result<u64, Abort> {
    let mut work = Work { budget, draws: 0 };
    let born = work.offspring(rng, model, x_prev)?;
    let eta = work.immigrants(rng, model).map_err(|a| shift(a, born))?;
    Ok(born + eta)
}

/// `S_n = X_1 + … + X_n` from `X_0 = 0`.
pub fn simulate_sn<R: Rng + ?Sized>(rng: &mut R, model: &Model, n: usize, budget: &SimBudget) -> Outcome {
    let mut work = Work { budget, draws: 0 };
    let mut x = 0u64;
    let mut s = 0u64;
    let run = (|| {
        for _ in 0..n {
            let born = work.offspring(rng, model, x).map_err(|a| shift(a, s))?;
            let eta = work.immigrants(rng, model).map_err(|a| shift(a, s + born))?;
            x = born + eta;
            s = s.saturating_add(x);
        }
        Ok(s)
    })();
    Outcome::from_result(run)
}

/// Total progeny of `z0` ancestors: the first time the walk
/// `z0 + Σ (ξ_i − 1)` reaches zero.
pub fn total_progeny<R: Rng + ?Sized>(rng: &mut R, model: &Model, z0: u64, budget: &SimBudget) -> Outcome {
    let mut pos = z0;
    let mut steps = 0u64;
    while pos > 0 {
        if steps >= budget.work_cap {
            // every individual still queued adds at least one step
            return Outcome::Aborted {
                reason: AbortReason::WorkCap,
                lower_bound: steps + pos,
            };
        }
        let xi = match model.sample_xi(rng) {
            Ok(v) => v,
            Err(_) => {
                return Outcome::Aborted {
                    reason: AbortReason::SampleCap,
                    lower_bound: steps + pos + model.xi.cap(),
                }
            }
        };
        steps += 1;
        pos = pos - 1 + xi;
        if pos > budget.pop_cap {
            return Outcome::Aborted {
                reason: AbortReason::PopCap,
                lower_bound: steps + pos,
            };
        }
    }
    Outcome::Value { value: steps }
}

/// Total progeny of the immigrants that arrived at one time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImmigrantFamily {
    pub arrival: usize,
    pub eta: u64,
    pub total: u64,
}

/// One coupled trajectory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathSample {
    pub traj: Vec<u64>,
    pub s_n: u64,
    /// Total progeny of all immigrants arriving up to time `n`.
    pub s_n1: u64,
    /// Descendants of those immigrants born after time `n`.
    pub s_n2: u64,
    pub per_immigrant: Vec<ImmigrantFamily>,
}

impl PathSample {
    pub fn identity_holds(&self) -> bool {
        self.s_n1 >= self.s_n && self.s_n1 - self.s_n == self.s_n2
    }
}

/// Runs the process for `n` steps tracking each immigrant cohort, then
/// closes every surviving family generation by generation.
pub fn simulate_coupled<R: Rng + ?Sized>(rng: &mut R, model: &Model, n: usize, budget: &SimBudget) -> std::result::Result<PathSample, Abort> {
    struct Cohort {
        arrival: usize,
        eta: u64,
        alive: u64,
        total: u64,
    }
    let mut work = Work { budget, draws: 0 };
    let mut cohorts: Vec<Cohort> = Vec::with_capacity(n);
    let mut traj = Vec::with_capacity(n);
    let mut s_n = 0u64;
    for i in 1..=n {
        for c in cohorts.iter_mut() {
            if c.alive > 0 {
                c.alive = work.offspring(rng, model, c.alive).map_err(|a| shift(a, s_n))?;
                c.total += c.alive;
            }
        }
        let eta = work.immigrants(rng, model).map_err(|a| shift(a, s_n))?;
        cohorts.push(Cohort {
            arrival: i,
            eta,
            alive: eta,
            total: eta,
        });
        let x: u64 = cohorts.iter().map(|c| c.alive).sum();
        if x > budget.pop_cap {
            return Err(Abort {
                reason: AbortReason::PopCap,
                lower_bound: s_n + x,
            });
        }
        traj.push(x);
        s_n += x;
    }
    let mut s_n2 = 0u64;
    let mut s_n1 = 0u64;
    for c in cohorts.iter_mut() {
        let mut gens = 0u64;
        while c.alive > 0 {
            gens += 1;
            if gens > budget.gen_cap {
                return Err(Abort {
                    reason: AbortReason::GenCap,
                    lower_bound: s_n + s_n2,
                });
            }
            c.alive = work
                .offspring(rng, model, c.alive)
                .map_err(|a| shift(a, s_n + s_n2))?;
            c.total += c.alive;
            s_n2 += c.alive;
        }
        s_n1 += c.total;
    }
    Ok(PathSample {
        traj,
        s_n,
        s_n1,
        s_n2,
        per_immigrant: cohorts
            .iter()
            .map(|c| ImmigrantFamily {
                arrival: c.arrival,
                eta: c.eta,
                total: c.total,
            })
            .collect(),
    })
}

/// `Σ_{n=0}^{m} D_n`, each `D_n` a fresh immigrant batch pushed through `n`
/// generations.
pub fn sample_stationary_x<R: Rng + ?Sized>(rng: &mut R, model: &Model, m: usize, budget: &SimBudget) -> Outcome {
    let mut work = Work { budget, draws: 0 };
    let mut total = 0u64;
    let run = (|| {
        for n in 0..=m {
            let mut d = work.immigrants(rng, model).map_err(|a| shift(a, total))?;
            for _ in 0..n {
                if d == 0 {
                    break;
                }
                d = work.offspring(rng, model, d).map_err(|a| shift(a, total))?;
            }
            total = total.saturating_add(d);
        }
        Ok(total)
    })();
    Outcome::from_result(run)
}

/// Bound on `Σ_{n>m} P(D_n > 0)`, the law-level bias of truncating at `m`.
pub fn stationary_truncation_bound(model: &Model, m: usize) -> Result<f64> {
    if model.delta().is_none() {
        return Err(Error::Unsupported("no stationary law for this model".into()));
    }
    // P(D_n > 0) = 1 − g(f_n(0)) ≤ −ln g(f_n(0))
    let r = iterate_complement(model, m + 1, C64::new(1.0, 0.0));
    Ok(log_tail(model, r, 1e-10)?.value.re)
}
