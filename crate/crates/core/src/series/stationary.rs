//! Tails of the infinite product `Π_{k≥0} g(f_k)`.
//!
//! For the Slack/Sibuya pair the iterates `R_k = 1 − f_k` obey
//! `R_{k+1} = R_k − C₁R_k^{1+ν}`, so `v_k = R_k^{−ν}` follows
//! `v ↦ v(1 − C₁/v)^{−ν}` and grows almost linearly. The tail
//! `Σ_{k≥K} −ln g(f_k)` is then an integral against an asymptotic Abel
//! function plus a Gregory end correction. Other laws are iterated directly
//! with a geometric remainder estimate.

use crate::error::{Error, Result};
use crate::models::laws::Law;
use crate::models::Model;
use crate::numeric::jet::Jet;
use crate::numeric::special::gregory_coefficients;
use crate::numeric::{ln1p, pow, C64, ZERO};

/// Hard cap on explicitly evaluated factors.
pub const FACTOR_BUDGET: usize = 1_000_000;

/// Where the Abel expansion takes over.
const ABEL_START: f64 = 40.0;
const ABEL_TERMS: usize = 14;
const GREGORY_TERMS: usize = 12;

/// `Σ_{k≥0} −ln g(f_k)` started from `R_0`, with bookkeeping.
#[derive(Debug, Clone, Copy)]
pub struct LogTail {
    pub value: C64,
    /// Factors evaluated explicitly.
    pub factors: usize,
    /// Size of the analytic remainder that was added.
    pub remainder: f64,
    pub error: f64,
}

/// Abel function `A(v) = v/c − b ln v + Σ_j a_j v^{−j}` of `v ↦ v(1 − C₁/v)^{−ν}`.
#[derive(Debug, Clone)]
pub(crate) struct AbelSeries {
    c: f64,
    b: f64,
    a: Vec<f64>,
}

impl AbelSeries {
    pub(crate) fn new(nu: f64, c1: f64) -> Self {
        let order = ABEL_TERMS + 2;
        let base = Jet::from_coeffs(vec![1.0, -c1], order);
        let mut d = base.powf(-nu);
        d.c[0] -= 1.0;
        let ln1d = base.ln().scale(-nu);
        let c = d.c[1];
        let b = d.c[2] / (c * c);
        // e_j = ε^j ((1 − C₁ε)^{νj} − 1)
        let e: Vec<Vec<f64>> = (0..=ABEL_TERMS)
            .map(|j| {
                let mut p = base.powf(nu * j as f64);
                p.c[0] -= 1.0;
                let mut shifted = vec![0.0; order + 1];
                for (i, v) in p.c.iter().enumerate() {
                    if i + j <= order {
                        shifted[i + j] = *v;
                    }
                }
                shifted
            })
            .collect();
        let mut a = vec![0.0; ABEL_TERMS + 1];
        for m in 2..=ABEL_TERMS + 1 {
            let mut num = d.c[m + 1] / c - b * ln1d.c[m];
            for j in 1..m - 1 {
                num += a[j] * e[j][m];
            }
            a[m - 1] = num / ((m - 1) as f64 * c);
        }
        AbelSeries { c, b, a }
    }

    /// `A'(v)`.
    #[cfg(test)]
    fn deriv(&self, v: C64) -> C64 {
        let mut acc = C64::new(1.0 / self.c, 0.0) - self.b / v;
        for (j, aj) in self.a.iter().enumerate().skip(1) {
            acc -= pow(v, -(j as f64) - 1.0) * (j as f64 * aj);
        }
        acc
    }

    #[cfg(test)]
    fn value(&self, v: C64) -> C64 {
        let mut acc = v / self.c - v.ln() * self.b;
        for (j, aj) in self.a.iter().enumerate().skip(1) {
            acc += pow(v, -(j as f64)) * *aj;
        }
        acc
    }

    /// `∫_v^∞ v'^{−p} A'(v') dv'` for `Re p > 1`.
    fn moment(&self, v: C64, p: f64) -> (C64, f64) {
        let mut acc = pow(v, 1.0 - p) / (self.c * (p - 1.0)) - pow(v, -p) * (self.b / p);
        let mut last = 0.0;
        for (j, aj) in self.a.iter().enumerate().skip(1) {
            let q = p + j as f64;
            let term = pow(v, -q) * (j as f64 * aj / q);
            acc -= term;
            last = term.norm();
        }
        (acc, last)
    }
}

/// `Σ_{k≥0} −ln g(f_k)` with `1 − f_0 = r0`.
pub fn log_tail(model: &Model, r0: C64, tol: f64) -> Result<LogTail> {
    match (&model.xi.law, &model.eta.law) {
        (Law::Slack { nu, c1 }, Law::Sibuya { delta, c2 }) => {
            abel_log_tail(model, r0, *nu, *c1, *delta, *c2, tol)
        }
        (Law::Finite { .. }, _) | (_, Law::Finite { .. }) => Err(Error::Unsupported(
            "finite-support critical models have no stationary law".into(),
        )),
        _ => direct_log_tail(model, r0, tol),
    }
}

fn neg_ln_g(model: &Model, r: C64) -> C64 {
    -ln1p(-model.comp_g(r))
}

fn abel_log_tail(model: &Model, r0: C64, nu: f64, c1: f64, delta: f64, c2: f64, tol: f64) -> Result<LogTail> {
    if r0 == ZERO {
        return Ok(LogTail {
            value: ZERO,
            factors: 0,
            remainder: 0.0,
            error: 0.0,
        });
    }
    let abel = AbelSeries::new(nu, c1);
    let gamma = delta / nu;
    let threshold = ABEL_START.powf(-1.0 / nu);
    let mut r = r0;
    let mut sum = ZERO;
    let mut k = 0usize;
    loop {
        while r.norm() > threshold {
            sum += neg_ln_g(model, r);
            r = model.comp_f(r);
            k += 1;
            if k > FACTOR_BUDGET {
                return Err(Error::TruncationBudgetExceeded {
                    budget: FACTOR_BUDGET,
                    remainder: r.norm().powf(delta),
                });
            }
        }
        // Gregory end correction from the next few exact terms
        let mut g = Vec::with_capacity(GREGORY_TERMS);
        let mut rr = r;
        for _ in 0..GREGORY_TERMS {
            g.push(neg_ln_g(model, rr));
            rr = model.comp_f(rr);
        }
        let coef = gregory_coefficients(GREGORY_TERMS);
        let mut greg = ZERO;
        let mut last_greg = 0.0;
        for gk in &coef {
            let term = g[0] * *gk;
            greg += term;
            last_greg = term.norm();
            g = g.windows(2).map(|w| w[1] - w[0]).collect();
            if g.is_empty() {
                break;
            }
        }
        // ∫ Φ A' with Φ(v) = Σ_m (c2^m/m) v^{−mγ}
        let v = pow(r, -nu);
        let mut integral = ZERO;
        let mut trunc = 0.0;
        let mut m = 1;
        loop {
            let w = c2.powi(m as i32) / m as f64;
            let (mom, last) = abel.moment(v, m as f64 * gamma);
            integral += mom * w;
            trunc += w * last;
            if w * v.norm().powf(-(m as f64) * gamma) < 1e-18 || m > 200 {
                break;
            }
            m += 1;
        }
        let remainder = integral + greg;
        let error = last_greg + trunc;
        if error <= tol * (sum + remainder).norm().max(1e-300) || k > FACTOR_BUDGET / 2 {
            return Ok(LogTail {
                value: sum + remainder,
                factors: k,
                remainder: remainder.norm(),
                error,
            });
        }
        // push further into the asymptotic regime
        for _ in 0..200 {
            sum += neg_ln_g(model, r);
            r = model.comp_f(r);
            k += 1;
        }
    }
}

fn direct_log_tail(model: &Model, r0: C64, tol: f64) -> Result<LogTail> {
    let delta = model.delta().expect("stationary family");
    let mut r = r0;
    let mut sum = ZERO;
    for k in 0..FACTOR_BUDGET {
        if r == ZERO {
            return Ok(LogTail {
                value: sum,
                factors: k,
                remainder: 0.0,
                error: 0.0,
            });
        }
        let q = neg_ln_g(model, r);
        let next = model.comp_f(r);
        // successive terms shrink by about (R_{k+1}/R_k)^δ
        let ratio = pow(next / r, delta);
        let rest = q * ratio / (C64::new(1.0, 0.0) - ratio);
        sum += q;
        r = next;
        if rest.norm() <= tol * sum.norm() {
            return Ok(LogTail {
                value: sum + rest,
                factors: k + 1,
                remainder: rest.norm(),
                error: rest.norm() * 0.1,
            });
        }
    }
    Err(Error::TruncationBudgetExceeded {
        budget: FACTOR_BUDGET,
        remainder: f64::NAN,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ModelSpec;

    #[test]
    fn abel_series_satisfies_functional_equation() {
        let (nu, c1) = (0.3, 0.5);
        let abel = AbelSeries::new(nu, c1);
        assert!((abel.b - 1.3 / 0.6).abs() < 1e-14);
        for &v in &[C64::new(40.0, 0.0), C64::new(60.0, 25.0), C64::new(1e3, -300.0)] {
            let psi = v * pow(C64::new(1.0, 0.0) - c1 / v, -nu);
            let diff = abel.value(psi) - abel.value(v) - 1.0;
            // A(v) ≈ v/c, so the difference carries cancellation of that size
            assert!(diff.norm() < 1e-13 + 4e-16 * abel.value(v).norm(), "v={v}: {diff}");
            let h = 1e-5 * v.norm();
            let fd = (abel.value(v + h) - abel.value(v - h)) / (2.0 * h);
            assert!((fd - abel.deriv(v)).norm() < 1e-8);
        }
    }

    #[test]
    fn accelerated_tail_sits_in_monotone_bracket() {
        // direct sum to K; past K the increments of v lie in [c, c'] with
        // c' = ψ(v_K) − v_K, which brackets the remainder by two integrals
        let model = Model::new(ModelSpec::heavy(0.3, 0.7, 0.5, 1.0)).unwrap();
        let (nu, c1, delta) = (0.3, 0.5, 0.7);
        let acc = log_tail(&model, C64::new(0.5, 0.0), 1e-14).unwrap();
        let mut r = 0.5f64;
        let (mut sum, mut comp) = (0.0f64, 0.0f64);
        for _ in 0..10_000_000 {
            let y = -(-(r.powf(delta))).ln_1p() - comp;
            let t = sum + y;
            comp = (t - sum) - y;
            sum = t;
            r -= c1 * r.powf(1.0 + nu);
        }
        let v = r.powf(-nu);
        let c = nu * c1;
        let c_hi = v * (1.0 - c1 / v).powf(-nu) - v;
        let gamma = delta / nu;
        let phi = |v: f64| -(-(v.powf(-gamma))).ln_1p();
        let moments: f64 = (1..20)
            .map(|m| v.powf(1.0 - m as f64 * gamma) / (m as f64 * (m as f64 * gamma - 1.0)))
            .sum();
        let hi = sum + phi(v) + moments / c;
        let lo = sum + moments / c_hi;
        assert!(hi - lo < 1e-13, "bracket width {}", hi - lo);
        assert!(
            acc.value.re <= hi + 1e-11 && acc.value.re >= lo - 1e-11,
            "{} not in [{lo}, {hi}]",
            acc.value.re
        );
        assert!(acc.value.im == 0.0);
    }
}
