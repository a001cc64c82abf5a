//! Concrete offspring and immigration laws for critical branching processes
//! with heavy-tailed immigration.
//!
//! Two families are provided. [`HeavyModel`] pairs the Slack offspring law
//! `f(s) = s + C₁(1−s)^{1+ν}` with scaled Sibuya immigration
//! `g(s) = 1 − C₂(1−s)^δ`. [`VeryHeavyModel`] is defined through its tails,
//! with offspring tail `κ/((n+1) ln(n+1+e)^{1+a})` and immigration tail
//! `cc (n+1)^{−δ} ln(n+1+e)^{−a}`. A third, [`FiniteModel`], takes explicit
//! mass functions and exists for brute-force checks.

pub mod laws;
pub mod lattice;
pub mod sampler;

use crate::error::{Error, Result};
use crate::numeric::quad::tanh_sinh;
use crate::numeric::special::gamma;
use crate::numeric::C64;
use laws::{Law, LATTICE_START};
use lattice::{LatticeTail, PowerLogTail};
use rand::Rng;
use sampler::{TailSampler, DEFAULT_CAP};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeavyModel {
    pub nu: f64,
    pub delta: f64,
    pub c1: f64,
    pub c2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VeryHeavyModel {
    pub a: f64,
    pub delta: f64,
    pub kappa: f64,
    pub cc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiniteModel {
    pub xi_pmf: Vec<f64>,
    pub eta_pmf: Vec<f64>,
}

/// Serialized as `{"family": "heavy" | "very_heavy" | "finite", ...}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ModelSpec {
    Heavy(HeavyModel),
    VeryHeavy(VeryHeavyModel),
    Finite(FiniteModel),
}

impl ModelSpec {
    pub fn heavy(nu: f64, delta: f64, c1: f64, c2: f64) -> Self {
        ModelSpec::Heavy(HeavyModel { nu, delta, c1, c2 })
    }

    pub fn very_heavy(a: f64, delta: f64, kappa: f64, cc: f64) -> Self {
        ModelSpec::VeryHeavy(VeryHeavyModel { a, delta, kappa, cc })
    }

    pub fn finite(xi_pmf: Vec<f64>, eta_pmf: Vec<f64>) -> Self {
        ModelSpec::Finite(FiniteModel { xi_pmf, eta_pmf })
    }
}

impl VeryHeavyModel {
    pub fn offspring_tail(&self) -> PowerLogTail {
        PowerLogTail {
            scale: self.kappa,
            alpha: 1.0,
            beta: 1.0 + self.a,
        }
    }

    pub fn immigration_tail(&self) -> PowerLogTail {
        PowerLogTail {
            scale: self.cc,
            alpha: self.delta,
            beta: self.a,
        }
    }

    /// `p = cc·Γ(1−δ)·a/κ`.
    pub fn p(&self) -> f64 {
        self.cc * gamma(1.0 - self.delta) * self.a / self.kappa
    }
}

/// `q0 = 1 − Σ_{n≥1} P(ξ > n)`, the mass that makes the offspring law critical.
pub fn solve_q0(spec: &VeryHeavyModel) -> Result<f64> {
    if !(spec.kappa > 0.0) || !spec.kappa.is_finite() {
        return Err(Error::InvalidModel(format!(
            "kappa must be positive, got {}",
            spec.kappa
        )));
    }
    if !(spec.a > 0.0) || !spec.a.is_finite() {
        return Err(Error::InvalidModel(format!("a must be positive, got {}", spec.a)));
    }
    let t = spec.offspring_tail();
    let head: f64 = (1..LATTICE_START).map(|n| t.at(n as f64)).sum();
    let far = LatticeTail::new(t, LATTICE_START)
        .sum_at_zero()
        .expect("summable for a > 0");
    let total = head + far;
    if total >= 1.0 {
        return Err(Error::NoSolution(format!(
            "offspring tails sum to {total} ≥ 1 (kappa too large)"
        )));
    }
    let q0 = 1.0 - total;
    if q0 < t.at(1.0) {
        return Err(Error::NoSolution(format!(
            "q0 = {q0} is below P(ξ > 1) = {}",
            t.at(1.0)
        )));
    }
    Ok(q0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub spec: ModelSpec,
    pub checks: Vec<Check>,
    /// `|Eξ − 1|`, computed independently of the construction.
    pub criticality_residual: f64,
    /// `∫_0^1 (1 − g(s))/(f(s) − s) ds`, finite iff a stationary law exists.
    pub stationarity_integral: Option<f64>,
    pub q0: Option<f64>,
    pub p: Option<f64>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn check(name: &str, passed: bool, detail: String) -> Check {
    Check {
        name: name.to_string(),
        passed,
        detail,
    }
}

fn in_open_unit(x: f64) -> bool {
    x > 0.0 && x < 1.0
}

/// Rejects inadmissible parameters and reports each model invariant.
pub fn validate_spec(spec: &ModelSpec) -> Result<ValidationReport> {
    let mut checks = Vec::new();
    let mut q0 = None;
    let mut p = None;
    match spec {
        ModelSpec::Heavy(h) => {
            if !in_open_unit(h.nu) || !in_open_unit(h.delta) {
                return Err(Error::InvalidModel(format!(
                    "nu and delta must lie in (0,1), got nu={}, delta={}",
                    h.nu, h.delta
                )));
            }
            if h.nu >= h.delta {
                return Err(Error::InvalidModel(format!(
                    "need nu < delta, got nu={} ≥ delta={}",
                    h.nu, h.delta
                )));
            }
            let p1 = 1.0 - h.c1 * (1.0 + h.nu);
            if !(h.c1 > 0.0) || p1 < 0.0 {
                return Err(Error::InvalidModel(format!(
                    "c1 must lie in (0, 1/(1+nu)], got {} (P(ξ=1) = {p1})",
                    h.c1
                )));
            }
            if !(h.c2 > 0.0 && h.c2 <= 1.0) {
                return Err(Error::InvalidModel(format!("c2 must lie in (0,1], got {}", h.c2)));
            }
            checks.push(check("nu < delta", true, format!("{} < {}", h.nu, h.delta)));
            checks.push(check("offspring masses nonnegative", true, format!("P(ξ=1) = {p1}")));
            checks.push(check("immigration masses nonnegative", true, format!("P(η=0) = {}", 1.0 - h.c2)));
        }
        ModelSpec::VeryHeavy(v) => {
            if !in_open_unit(v.delta) {
                return Err(Error::InvalidModel(format!("delta must lie in (0,1), got {}", v.delta)));
            }
            if !(v.cc > 0.0 && v.cc <= 1.0) {
                return Err(Error::InvalidModel(format!("cc must lie in (0,1], got {}", v.cc)));
            }
            let q = solve_q0(v)?;
            let t1 = v.offspring_tail().at(1.0);
            checks.push(check("offspring tail monotone", q >= t1, format!("q0 = {q}, P(ξ>1) = {t1}")));
            let e0 = v.immigration_tail().at(0.0);
            checks.push(check("immigration tail ≤ 1", e0 <= 1.0, format!("P(η>0) = {e0}")));
            q0 = Some(q);
            p = Some(v.p());
        }
        ModelSpec::Finite(f) => {
            for (name, pmf) in [("xi_pmf", &f.xi_pmf), ("eta_pmf", &f.eta_pmf)] {
                if pmf.is_empty() || pmf.iter().any(|&x| !(x >= 0.0)) {
                    return Err(Error::InvalidModel(format!("{name} must be nonempty and nonnegative")));
                }
                let total: f64 = pmf.iter().sum();
                if (total - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidModel(format!("{name} sums to {total}")));
                }
            }
            checks.push(check("mass functions normalized", true, String::new()));
        }
    }
    let model = Model::build(spec.clone(), q0, DEFAULT_CAP);
    let residual = criticality_residual(&model);
    checks.push(check(
        "critical (Eξ = 1)",
        residual < 1e-8,
        format!("|Eξ − 1| = {residual:e}"),
    ));
    let integral = match spec {
        ModelSpec::Finite(_) => None,
        _ => Some(stationarity_integral(&model)),
    };
    if let Some(v) = integral {
        checks.push(check(
            "stationary law exists",
            v.is_finite(),
            format!("∫(1−g)/(f−s) = {v}"),
        ));
    }
    Ok(ValidationReport {
        spec: spec.clone(),
        checks,
        criticality_residual: residual,
        stationarity_integral: integral,
        q0,
        p,
    })
}

fn criticality_residual(model: &Model) -> f64 {
    let law = &model.xi.law;
    match law {
        Law::Slack { nu, .. } => {
            // Σ_{n≥N} t(n) = t(N−1)·(N−1−ν)/ν, by telescoping the gamma ratios
            let n = 10_000u64;
            let head: f64 = (0..n).map(|k| law.tail(k)).sum();
            let rest = law.tail(n - 1) * ((n - 1) as f64 - nu) / nu;
            (head + rest - 1.0).abs()
        }
        Law::LogOffspring { tail, q0, .. } => {
            let n = 1u64 << 20;
            let head: f64 = (1..n).map(|k| tail.at(k as f64)).sum();
            let rest = LatticeTail::new(*tail, n).sum_at_zero().unwrap();
            (q0 + head + rest - 1.0).abs()
        }
        Law::Finite { pmf, .. } => {
            let mean: f64 = pmf.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
            (mean - 1.0).abs()
        }
        _ => unreachable!("offspring law"),
    }
}

fn stationarity_integral(model: &Model) -> f64 {
    // integrate in w = 1 − s; f(s) − s = w − (1 − f(1−w))
    let q = tanh_sinh(
        |w| {
            let w = C64::new(w, 0.0);
            model.comp_g(w) / (w - model.comp_f(w))
        },
        0.0,
        1.0,
        1e-10,
    );
    if q.error <= 1e-6 * q.value.norm() {
        q.value.re
    } else {
        f64::INFINITY
    }
}

/// A validated model with samplers for its offspring and immigration laws.
#[derive(Debug, Clone)]
pub struct Model {
    pub spec: ModelSpec,
    pub xi: TailSampler,
    pub eta: TailSampler,
    q0: Option<f64>,
}

impl Model {
    pub fn new(spec: ModelSpec) -> Result<Model> {
        Model::with_cap(spec, DEFAULT_CAP)
    }

    /// Like [`Model::new`] with a custom sampler cap.
    pub fn with_cap(spec: ModelSpec, cap: u64) -> Result<Model> {
        let report = validate_spec(&spec)?;
        Ok(Model::build(spec, report.q0, cap))
    }

    fn build(spec: ModelSpec, q0: Option<f64>, cap: u64) -> Model {
        let (xi, eta) = match &spec {
            ModelSpec::Heavy(h) => (Law::slack(h.nu, h.c1), Law::sibuya(h.delta, h.c2)),
            ModelSpec::VeryHeavy(v) => (
                Law::log_offspring(v.offspring_tail(), q0.expect("q0 solved")),
                Law::log_immigration(v.immigration_tail()),
            ),
            ModelSpec::Finite(f) => (Law::finite(f.xi_pmf.clone()), Law::finite(f.eta_pmf.clone())),
        };
        Model {
            spec,
            xi: TailSampler::new(xi, cap),
            eta: TailSampler::new(eta, cap),
            q0,
        }
    }

    pub fn q0(&self) -> Option<f64> {
        self.q0
    }

    /// Offspring tail exponent ν (zero for the very heavy family).
    pub fn nu(&self) -> Option<f64> {
        match &self.spec {
            ModelSpec::Heavy(h) => Some(h.nu),
            ModelSpec::VeryHeavy(_) => Some(0.0),
            ModelSpec::Finite(_) => None,
        }
    }

    pub fn delta(&self) -> Option<f64> {
        match &self.spec {
            ModelSpec::Heavy(h) => Some(h.delta),
            ModelSpec::VeryHeavy(v) => Some(v.delta),
            ModelSpec::Finite(_) => None,
        }
    }

    /// Limit ratio `p` of `L₂/L₁`; only defined for the very heavy family.
    pub fn p(&self) -> Option<f64> {
        match &self.spec {
            ModelSpec::VeryHeavy(v) => Some(v.p()),
            _ => None,
        }
    }

    pub fn xi_pmf(&self, k: u64) -> f64 {
        self.xi.law.pmf(k)
    }

    pub fn xi_tail(&self, n: u64) -> f64 {
        self.xi.law.tail(n)
    }

    pub fn eta_pmf(&self, k: u64) -> f64 {
        self.eta.law.pmf(k)
    }

    pub fn eta_tail(&self, n: u64) -> f64 {
        self.eta.law.tail(n)
    }

    pub fn sample_xi<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<u64> {
        self.xi.sample(rng)
    }

    pub fn sample_eta<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<u64> {
        self.eta.sample(rng)
    }

    /// `1 − f(1 − w)`.
    pub fn comp_f(&self, w: C64) -> C64 {
        self.xi.law.comp(w)
    }

    pub fn comp_f_deriv(&self, w: C64) -> C64 {
        self.xi.law.comp_deriv(w)
    }

    /// `1 − g(1 − w)`.
    pub fn comp_g(&self, w: C64) -> C64 {
        self.eta.law.comp(w)
    }

    pub fn f(&self, z: C64) -> C64 {
        C64::new(1.0, 0.0) - self.comp_f(C64::new(1.0, 0.0) - z)
    }

    pub fn g(&self, z: C64) -> C64 {
        C64::new(1.0, 0.0) - self.comp_g(C64::new(1.0, 0.0) - z)
    }

    /// Whether the generating functions continue past the unit circle, as
    /// contour inversion requires.
    pub fn supports_continuation(&self) -> bool {
        self.xi.law.continues_outside_disk() && self.eta.law.continues_outside_disk()
    }
}
