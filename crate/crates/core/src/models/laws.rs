//! Offspring and immigration laws with closed-form tails.
//!
//! Every law exposes its tail `P(· > n)`, its mass function, and the
//! complement map `W ↦ 1 − F(1 − W)` of its generating function, which is
//! what the series code iterates.

use super::lattice::{horner, s_of_complement, LatticeTail, PowerLogTail};
use crate::numeric::special::{ln_gamma, ln_gamma_ratio};
use crate::numeric::{expm1, pow, C64, ZERO};

/// Index from which lattice sums switch to Euler–Maclaurin.
pub(crate) const LATTICE_START: u64 = 64;

#[derive(Debug, Clone)]
pub enum Law {
    /// `f(s) = s + c1 (1 − s)^{1+nu}`.
    Slack { nu: f64, c1: f64 },
    /// `g(s) = 1 − c2 (1 − s)^delta`.
    Sibuya { delta: f64, c2: f64 },
    /// `P(ξ > 0) = q0`, `P(ξ > n) = t(n)` for `n ≥ 1`.
    LogOffspring {
        tail: PowerLogTail,
        q0: f64,
        lattice: LatticeTail,
        /// `Σ_{n ≥ LATTICE_START} t(n)`
        far_sum: f64,
    },
    /// `P(η > n) = min(1, t(n))` for `n ≥ 0`.
    LogImmigration { tail: PowerLogTail, lattice: LatticeTail },
    /// Finite support, given by its mass function.
    Finite { pmf: Vec<f64>, tails: Vec<f64> },
}

impl Law {
    pub fn slack(nu: f64, c1: f64) -> Self {
        Law::Slack { nu, c1 }
    }

    pub fn sibuya(delta: f64, c2: f64) -> Self {
        Law::Sibuya { delta, c2 }
    }

    pub fn log_offspring(tail: PowerLogTail, q0: f64) -> Self {
        let lattice = LatticeTail::new(tail, LATTICE_START);
        let far_sum = lattice
            .sum_at_zero()
            .expect("offspring tail must be summable");
        Law::LogOffspring {
            tail,
            q0,
            lattice,
            far_sum,
        }
    }

    pub fn log_immigration(tail: PowerLogTail) -> Self {
        Law::LogImmigration {
            tail,
            lattice: LatticeTail::new(tail, LATTICE_START),
        }
    }

    pub fn finite(pmf: Vec<f64>) -> Self {
        let mut tails = Vec::with_capacity(pmf.len());
        let mut rest: f64 = pmf.iter().sum();
        for p in &pmf {
            rest -= p;
            tails.push(rest.max(0.0));
        }
        Law::Finite { pmf, tails }
    }

    /// `P(· > n)`.
    pub fn tail(&self, n: u64) -> f64 {
        match self {
            Law::Slack { nu, c1 } => {
                if n == 0 {
                    1.0 - c1
                } else {
                    let ln = ln_gamma_ratio(n as f64, -nu, 1.0) - ln_gamma(1.0 - nu);
                    c1 * nu * ln.exp()
                }
            }
            Law::Sibuya { delta, c2 } => {
                if n == 0 {
                    *c2
                } else {
                    let ln = ln_gamma_ratio(n as f64, 1.0 - delta, 1.0) - ln_gamma(1.0 - delta);
                    c2 * ln.exp()
                }
            }
            Law::LogOffspring { tail, q0, .. } => {
                if n == 0 {
                    *q0
                } else {
                    tail.at(n as f64)
                }
            }
            Law::LogImmigration { tail, .. } => tail.at(n as f64).min(1.0),
            Law::Finite { tails, .. } => tails.get(n as usize).copied().unwrap_or(0.0),
        }
    }

    /// `P(· = k)`.
    pub fn pmf(&self, k: u64) -> f64 {
        match self {
            Law::Slack { nu, c1 } => match k {
                0 => *c1,
                1 => 1.0 - c1 * (1.0 + nu),
                _ => self.tail(k - 1) * (1.0 + nu) / k as f64,
            },
            Law::Sibuya { delta, c2 } => match k {
                0 => 1.0 - c2,
                _ => self.tail(k - 1) * delta / k as f64,
            },
            Law::Finite { pmf, .. } => pmf.get(k as usize).copied().unwrap_or(0.0),
            _ => {
                if k == 0 {
                    1.0 - self.tail(0)
                } else {
                    self.tail(k - 1) - self.tail(k)
                }
            }
        }
    }

    /// `1 − F(1 − w)`.
    pub fn comp(&self, w: C64) -> C64 {
        if w == ZERO {
            return ZERO;
        }
        match self {
            Law::Slack { nu, c1 } => w - pow(w, 1.0 + nu) * *c1,
            Law::Sibuya { delta, c2 } => pow(w, *delta) * *c2,
            Law::LogOffspring {
                tail,
                q0,
                lattice,
                far_sum,
            } => {
                let z = C64::new(1.0, 0.0) - w;
                if z.norm() <= 0.5 {
                    return w * (direct_tail_series(|n| tail.at(n as f64), z, 1) + *q0);
                }
                // Σ_{n≥1} t(n)(1 − z^n)
                let s = s_of_complement(w);
                let mut l1 = ZERO;
                for n in 1..LATTICE_START {
                    l1 += -expm1(-s * n as f64) * tail.at(n as f64);
                }
                l1 += *far_sum - lattice.sum_exp(s);
                w * (C64::new(1.0, 0.0) - l1)
            }
            Law::LogImmigration { tail, lattice } => {
                let z = C64::new(1.0, 0.0) - w;
                let t = |n: u64| tail.at(n as f64).min(1.0);
                if z.norm() <= 0.5 {
                    return w * direct_tail_series(t, z, 0);
                }
                let s = s_of_complement(w);
                let mut e = ZERO;
                for n in 0..LATTICE_START {
                    e += (-s * n as f64).exp() * t(n);
                }
                w * (e + lattice.sum_exp(s))
            }
            Law::Finite { tails, .. } => w * horner(tails, C64::new(1.0, 0.0) - w),
        }
    }

    /// Derivative of [`Law::comp`] in `w`.
    pub fn comp_deriv(&self, w: C64) -> C64 {
        match self {
            Law::Slack { nu, c1 } => C64::new(1.0, 0.0) - pow(w, *nu) * (c1 * (1.0 + nu)),
            Law::Sibuya { delta, c2 } => pow(w, delta - 1.0) * (c2 * delta),
            _ => {
                let h = 1e-6 * w.norm().max(1e-300);
                (self.comp(w + h) - self.comp(w - h)) / (2.0 * h)
            }
        }
    }

    /// Whether `comp` continues analytically past `|1 − w| = 1`.
    pub fn continues_outside_disk(&self) -> bool {
        matches!(self, Law::Slack { .. } | Law::Sibuya { .. } | Law::Finite { .. })
    }
}

/// `Σ_{n≥from} t(n) z^n` for `|z| ≤ 1/2`.
fn direct_tail_series(t: impl Fn(u64) -> f64, z: C64, from: u64) -> C64 {
    let mut acc = ZERO;
    let mut zn = pow_int(z, from);
    let mut n = from;
    loop {
        let term = zn * t(n);
        acc += term;
        if zn.norm() < 1e-18 {
            break;
        }
        zn *= z;
        n += 1;
    }
    acc
}

fn pow_int(z: C64, k: u64) -> C64 {
    (0..k).fold(C64::new(1.0, 0.0), |acc, _| acc * z)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slack_pmf_matches_binomial_series_of_pgf() {
        // coefficients of c1(1-s)^{1+nu}: c1 (-1)^k binom(1+nu, k)
        let (nu, c1) = (0.3, 0.5);
        let law = Law::slack(nu, c1);
        let mut binom = 1.0;
        for k in 0..40u64 {
            let coef = c1 * if k % 2 == 0 { 1.0 } else { -1.0 } * binom;
            let expect = coef + if k == 1 { 1.0 } else { 0.0 };
            assert!((law.pmf(k) - expect).abs() < 1e-15, "k={k}");
            binom *= (1.0 + nu - k as f64) / (k + 1) as f64;
        }
    }

    #[test]
    fn sibuya_tail_matches_product_formula() {
        let law = Law::sibuya(0.7, 1.0);
        let mut prod = 1.0;
        for n in 1..3000u64 {
            prod *= 1.0 - 0.7 / n as f64;
            assert!((law.tail(n) - prod).abs() < 1e-13 * prod, "n={n}");
        }
    }

    #[test]
    fn comp_matches_power_series_inside_disk() {
        let law = Law::sibuya(0.7, 0.8);
        let z = C64::new(0.3, -0.4);
        let direct: C64 = (0..400u64).map(|k| pow_int(z, k) * law.pmf(k)).sum();
        let lhs = law.comp(C64::new(1.0, 0.0) - z);
        // truncation at 400 leaves |z|^400 ≈ 0
        assert!((lhs - (C64::new(1.0, 0.0) - direct)).norm() < 1e-13);
    }

    #[test]
    fn finite_comp_and_derivative() {
        let law = Law::finite(vec![0.25, 0.5, 0.25]);
        let w = C64::new(0.2, 0.1);
        let z = C64::new(1.0, 0.0) - w;
        let f = 0.25 + z * 0.5 + z * z * 0.25;
        assert!((law.comp(w) - (C64::new(1.0, 0.0) - f)).norm() < 1e-15);
        // f'(z) = 0.5 + 0.5 z, d/dw (1 - f(1-w)) = f'(1-w)
        assert!((law.comp_deriv(w) - (z * 0.5 + 0.5)).norm() < 1e-8);
    }
}
