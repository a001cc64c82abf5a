//! Exact distributional computations through generating functions.
//!
//! All iterations run in complement coordinates: instead of `f_k(x)` the
//! code tracks `R_k = 1 − f_k(x)`, which keeps full relative precision as
//! `x → 1` where every interesting asymptotic lives.

pub mod contour;
pub mod extract;
pub mod stationary;

pub use contour::{contour_tail, CONTOUR_MIN_X};
pub use extract::{default_radius, exact_tail, extract, PowerSeries};
pub use stationary::{log_tail, LogTail, FACTOR_BUDGET};

use crate::error::{Error, Result};
use crate::models::laws::Law;
use crate::models::Model;
use crate::numeric::special::gamma;
use crate::numeric::{expm1, ln1p, pow, C64, ZERO};
use serde::{Deserialize, Serialize};

const ONE: C64 = C64::new(1.0, 0.0);

/// Default relative tolerance for infinite products.
pub const DEFAULT_TOL: f64 = 1e-13;

/// `f_k(x)`.
pub fn iterate_f(model: &Model, k: usize, x: C64) -> C64 {
    ONE - iterate_complement(model, k, ONE - x)
}

/// `1 − f_k(1 − w)`.
pub fn iterate_complement(model: &Model, k: usize, w: C64) -> C64 {
    (0..k).fold(w, |r, _| model.comp_f(r))
}

/// Generation-by-generation iterates `R_k = 1 − f_k(x)` at a set of points.
#[derive(Debug, Clone)]
pub struct IterationState {
    pub k: usize,
    pub points: Vec<C64>,
    pub r: Vec<C64>,
}

impl IterationState {
    pub fn new(points: Vec<C64>) -> Self {
        let r = points.iter().map(|x| ONE - x).collect();
        IterationState { k: 0, points, r }
    }

    pub fn step(&mut self, model: &Model) {
        for r in &mut self.r {
            *r = model.comp_f(*r);
        }
        self.k += 1;
    }

    pub fn advance_to(&mut self, model: &Model, k: usize) {
        while self.k < k {
            self.step(model);
        }
    }

    /// `f_k` at each point.
    pub fn values(&self) -> Vec<C64> {
        self.r.iter().map(|r| ONE - r).collect()
    }
}

/// `1 − h(1 − w)` where `h = x f(h)` is the total-progeny pgf.
pub fn total_progeny_complement(model: &Model, w: C64) -> Result<C64> {
    if w == ZERO {
        return Ok(ZERO);
    }
    if w.im == 0.0 && w.re > 0.0 && w.re <= 1.0 {
        return progeny_fixed_point(model, w, 10_000_000);
    }
    match progeny_newton(model, w) {
        Some(v) => Ok(v),
        None if (ONE - w).norm() <= 1.0 => progeny_fixed_point(model, w, 1_000_000),
        None => Err(Error::NonConvergence { residual: f64::NAN }),
    }
}

/// `h(x)`.
pub fn total_progeny_pgf(model: &Model, x: C64) -> Result<C64> {
    Ok(ONE - total_progeny_complement(model, ONE - x)?)
}

fn progeny_map(model: &Model, w: C64, big_w: C64) -> C64 {
    w + (ONE - w) * model.comp_f(big_w)
}

fn progeny_fixed_point(model: &Model, w: C64, max_iter: usize) -> Result<C64> {
    // h_0 = 0, i.e. W_0 = 1; the iterates decrease to the fixed point
    let mut big_w = ONE;
    for _ in 0..max_iter {
        let next = progeny_map(model, w, big_w);
        let step = (next - big_w).norm();
        big_w = next;
        if step == 0.0 {
            break;
        }
        // geometric rate ρ = (1 − w) comp_f'(W); error ≈ step·ρ/(1 − ρ)
        let rho = ((ONE - w) * model.comp_f_deriv(big_w)).norm();
        if rho < 1.0 && step * rho / (1.0 - rho) <= 1e-15 * big_w.norm() {
            break;
        }
    }
    let residual = (progeny_map(model, w, big_w) - big_w).norm();
    if residual > 1e-12 {
        return Err(Error::NonConvergence { residual });
    }
    Ok(big_w)
}

fn progeny_newton(model: &Model, w: C64) -> Option<C64> {
    let mut big_w = match &model.xi.law {
        Law::Slack { nu, c1 } => pow(w / *c1, 1.0 / (1.0 + nu)),
        _ => {
            let mut v = ONE;
            for _ in 0..30 {
                v = progeny_map(model, w, v);
            }
            v
        }
    };
    let mut last = f64::INFINITY;
    for it in 0..100 {
        // W − (1−w)·comp_f(W) cancels for small W; the Slack deficit is exact
        let f = match &model.xi.law {
            Law::Slack { nu, c1 } => pow(big_w, 1.0 + nu) * (*c1 * (ONE - w)) - w * (ONE - big_w),
            _ => big_w - progeny_map(model, w, big_w),
        };
        let df = ONE - (ONE - w) * model.comp_f_deriv(big_w);
        let step = f / df;
        if !step.re.is_finite() || !step.im.is_finite() {
            return None;
        }
        big_w -= step;
        let size = step.norm() / big_w.norm();
        // past the quadratic phase the steps stall at round-off level
        let stalled = it > 5 && size <= 1e-13 && size >= last;
        last = size;
        if size <= 1e-15 || stalled {
            let inside = (ONE - w).norm() <= 1.0;
            if inside && (ONE - big_w).norm() > 1.0 + 1e-9 {
                return None;
            }
            return Some(big_w);
        }
    }
    None
}

/// `1 − P_n(1 − w)` with `P_n = Π_{k<n} g(f_k)`.
pub fn pn_complement(model: &Model, n: usize, w: C64) -> C64 {
    let mut r = w;
    let mut acc = ZERO;
    for _ in 0..n {
        acc += ln1p(-model.comp_g(r));
        r = model.comp_f(r);
    }
    -expm1(acc)
}

/// `P_n(x) = E x^{X_n}`.
pub fn pn_pgf(model: &Model, n: usize, x: C64) -> C64 {
    ONE - pn_complement(model, n, ONE - x)
}

/// Value of the stationary pgf with truncation bookkeeping.
#[derive(Debug, Clone, Copy)]
pub struct StationaryValue {
    pub value: C64,
    /// `1 − P(x)`, accurate near `x = 1`.
    pub complement: C64,
    /// Factors evaluated explicitly before the analytic remainder.
    pub factors: usize,
    pub error: f64,
}

/// `1 − P(1 − r0)` where `P = Π_{k≥0} g(f_k)`.
pub fn stationary_complement(model: &Model, r0: C64, tol: f64) -> Result<StationaryValue> {
    let t = log_tail(model, r0, tol)?;
    let complement = -expm1(-t.value);
    Ok(StationaryValue {
        value: ONE - complement,
        complement,
        factors: t.factors,
        error: t.error,
    })
}

/// `P(x) = E x^X` for the stationary law.
pub fn stationary_pgf(model: &Model, x: C64, tol: f64) -> Result<StationaryValue> {
    stationary_complement(model, ONE - x, tol)
}

/// `1 − E x^{S_n}` with `E x^{S_n} = Π_{m<n} g(A_m)`, `A_0 = x`, `A_{m+1} = x f(A_m)`.
pub fn sn_complement(model: &Model, n: usize, w: C64) -> C64 {
    let mut big_w = w;
    let mut acc = ZERO;
    for _ in 0..n {
        acc += ln1p(-model.comp_g(big_w));
        big_w = progeny_map(model, w, big_w);
    }
    -expm1(acc)
}

/// The generating functions this module knows how to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pgf {
    Xi,
    Eta,
    /// Total progeny `T` of one ancestor.
    Progeny,
    /// `X_n`.
    Pn(usize),
    /// `S_n = X_1 + … + X_n`.
    Sn(usize),
    /// `Y^{(∞)}`, the total progeny of one immigrant batch.
    YInf,
    /// `S^{(∞)}`, total future progeny of the stationary population.
    SInf,
    /// The stationary law `X`.
    Stationary,
}

impl Pgf {
    /// `1 − F(1 − w)`.
    pub fn complement(&self, model: &Model, w: C64) -> Result<C64> {
        Ok(match *self {
            Pgf::Xi => model.comp_f(w),
            Pgf::Eta => model.comp_g(w),
            Pgf::Progeny => total_progeny_complement(model, w)?,
            Pgf::Pn(n) => pn_complement(model, n, w),
            Pgf::Sn(n) => sn_complement(model, n, w),
            Pgf::YInf => model.comp_g(total_progeny_complement(model, w)?),
            Pgf::SInf => {
                let h = total_progeny_complement(model, w)?;
                stationary_complement(model, model.comp_f(h), DEFAULT_TOL)?.complement
            }
            Pgf::Stationary => stationary_complement(model, w, DEFAULT_TOL)?.complement,
        })
    }

    pub fn series(&self, model: &Model, n_points: usize) -> Result<PowerSeries> {
        if *self == Pgf::Sn(0) || *self == Pgf::Pn(0) {
            return Ok(PowerSeries::point_mass(n_points));
        }
        extract(|z| Ok(ONE - self.complement(model, ONE - z)?), n_points, None)
    }
}

/// Masses of `S_n` up to `n_points − 1`.
pub fn sn_pgf_series(model: &Model, n: usize, n_points: usize) -> Result<PowerSeries> {
    Pgf::Sn(n).series(model, n_points)
}

/// Masses of `Y^{(∞)}`, with pgf `g(h)`.
pub fn y_inf_series(model: &Model, n_points: usize) -> Result<PowerSeries> {
    Pgf::YInf.series(model, n_points)
}

/// Masses of `S^{(∞)}`, with pgf `P(f(h))`.
pub fn s_inf_series(model: &Model, n_points: usize) -> Result<PowerSeries> {
    Pgf::SInf.series(model, n_points)
}

/// Masses of the stationary law.
pub fn stationary_series(model: &Model, n_points: usize) -> Result<PowerSeries> {
    Pgf::Stationary.series(model, n_points)
}

/// Masses of the total progeny `T`.
pub fn progeny_series(model: &Model, n_points: usize) -> Result<PowerSeries> {
    Pgf::Progeny.series(model, n_points)
}

/// `(P_n(x)/P(x) − 1) / (p δ^{−1} (1 − f_n(x))^δ)`.
pub fn lemma1_ratio(model: &Model, n: usize, x: f64) -> Result<f64> {
    let p = model
        .p()
        .ok_or_else(|| Error::Unsupported("the ratio is defined for the very heavy family".into()))?;
    let delta = model.delta().expect("very heavy family");
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::OutOfRange { x: x as i64, n_points: 0 });
    }
    let r_n = iterate_complement(model, n, C64::new(1.0 - x, 0.0));
    let tail = log_tail(model, r_n, 1e-13)?;
    Ok(expm1(tail.value).re / (p / delta * r_n.re.powf(delta)))
}

/// Least-squares slope of `ln P(· > x)` against `ln x` over `points`
/// log-equispaced integers in `[lo, hi]`, using the upper bracket end.
pub fn tail_slope(series: &PowerSeries, lo: f64, hi: f64, points: usize) -> Result<f64> {
    if points < 2 || !(lo >= 1.0 && hi > lo) {
        return Err(Error::DegenerateGrid(format!("need 1 ≤ lo < hi and two points, got [{lo}, {hi}]")));
    }
    let mut xs = Vec::with_capacity(points);
    let mut ys = Vec::with_capacity(points);
    for i in 0..points {
        let x = (lo.ln() + (hi / lo).ln() * i as f64 / (points - 1) as f64).exp().floor();
        let (_, tail) = series.exact_tail(x as i64)?;
        if !(tail > 0.0) {
            return Err(Error::DegenerateGrid(format!("tail vanishes at {x}")));
        }
        xs.push(x.ln());
        ys.push(tail.ln());
    }
    let n = points as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(sxy / sxx)
}

/// Least-squares power law `1 − F(s) ≈ constant · (1 − s)^exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub exponent: f64,
    pub constant: f64,
    /// `constant / Γ(1 − exponent)`, the matching tail constant.
    pub tail_constant: f64,
}

pub fn near_one_exponent_fit<F>(values_of: F, s_grid: &[f64]) -> Result<ExponentFit>
where
    F: Fn(f64) -> Result<f64>,
{
    if s_grid.windows(2).any(|w| !(w[1] > w[0])) || s_grid.iter().any(|&s| !(s < 1.0)) {
        return Err(Error::DegenerateGrid("grid must increase strictly below 1".into()));
    }
    let w_grid: Vec<f64> = s_grid.iter().map(|s| 1.0 - s).collect();
    near_one_exponent_fit_complement(|w| values_of(1.0 - w), &w_grid)
}

/// [`near_one_exponent_fit`] parametrized by `w = 1 − s`, so that points
/// closer to 1 than double precision resolves can be used.
pub fn near_one_exponent_fit_complement<F>(values_of: F, w_grid: &[f64]) -> Result<ExponentFit>
where
    F: Fn(f64) -> Result<f64>,
{
    if w_grid.len() < 2 {
        return Err(Error::DegenerateGrid("need at least two points".into()));
    }
    if w_grid.windows(2).any(|w| !(w[1] < w[0])) || w_grid.iter().any(|&w| !(w > 0.0)) {
        return Err(Error::DegenerateGrid("grid must approach 1 strictly".into()));
    }
    let mut xs = Vec::with_capacity(w_grid.len());
    let mut ys = Vec::with_capacity(w_grid.len());
    for &w in w_grid {
        let v = values_of(w)?;
        if !(v > 0.0) {
            return Err(Error::DegenerateGrid(format!("1 − F at 1 − {w} is {v}, not positive")));
        }
        xs.push(w.ln());
        ys.push(v.ln());
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let exponent = sxy / sxx;
    let constant = (my - exponent * mx).exp();
    let tail_constant = if (1.0 - exponent).abs() < 1e-9 {
        0.0
    } else {
        constant / gamma(1.0 - exponent)
    };
    Ok(ExponentFit {
        exponent,
        constant,
        tail_constant,
    })
}
