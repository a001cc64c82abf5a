//! Lattice sums `Σ_{n≥N} t(n) e^{-sn}` for smooth power-log sequences.
//!
//! The sequences `t(u) = scale·(u+1)^{-α}·(ln(u+1+e))^{-β}` decay so slowly
//! that direct summation is hopeless near `s = 0`. The tail from `N` on is
//! summed with Euler–Maclaurin: the integral is done along a rotated ray in
//! the complex `u`-plane, and the derivative corrections come from an exact
//! Taylor jet of `t` at `N` multiplied by the jet of `e^{-su}`.

use crate::numeric::jet::Jet;
use crate::numeric::quad::{exp_sinh, tanh_sinh};
use crate::numeric::special::bernoulli_numbers;
use crate::numeric::{C64, ZERO};
use std::f64::consts::E;

/// `t(u) = scale·(u+1)^{-alpha}·(ln(u+1+e))^{-beta}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLogTail {
    pub scale: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl PowerLogTail {
    pub fn at(&self, n: f64) -> f64 {
        self.scale * (n + 1.0).powf(-self.alpha) * (n + 1.0 + E).ln().powf(-self.beta)
    }

    pub fn at_complex(&self, u: C64) -> C64 {
        let a = (u + 1.0).ln() * (-self.alpha);
        let l = (u + 1.0 + E).ln();
        let b = l.ln() * (-self.beta);
        (a + b).exp() * self.scale
    }

    /// Taylor coefficients of `t(start + h)` in `h`.
    pub fn jet(&self, start: f64, order: usize) -> Jet {
        let base = Jet::variable(start + 1.0, order).powf(-self.alpha);
        let log = Jet::variable(start + 1.0 + E, order).ln().powf(-self.beta);
        (&base * &log).scale(self.scale)
    }
}

const EM_TERMS: usize = 40;

/// Euler–Maclaurin summation of a [`PowerLogTail`] from a fixed index on.
#[derive(Debug, Clone)]
pub struct LatticeTail {
    pub tail: PowerLogTail,
    pub start: u64,
    jet: Vec<f64>,
    bern_half: Vec<f64>,
    sum_at_zero: Option<f64>,
}

impl LatticeTail {
    pub fn new(tail: PowerLogTail, start: u64) -> Self {
        let order = 2 * EM_TERMS;
        let jet = tail.jet(start as f64, order).c;
        let bern = bernoulli_numbers(2 * EM_TERMS);
        let bern_half = (1..=EM_TERMS).map(|k| bern[2 * k] / (2 * k) as f64).collect();
        let mut lt = LatticeTail {
            tail,
            start,
            jet,
            bern_half,
            sum_at_zero: None,
        };
        if tail.alpha > 1.0 || (tail.alpha == 1.0 && tail.beta > 1.0) {
            lt.sum_at_zero = Some(lt.sum_unweighted());
        }
        lt
    }

    /// `Σ_{n≥start} t(n)`; `None` when the series diverges.
    pub fn sum_at_zero(&self) -> Option<f64> {
        self.sum_at_zero
    }

    fn sum_unweighted(&self) -> f64 {
        let n = self.start as f64;
        let integral = self.integral_at_zero();
        let mut corr = 0.0;
        for (k, bh) in self.bern_half.iter().enumerate() {
            let term = bh * self.jet[2 * k + 1];
            corr += term;
            if term.abs() < 1e-18 * integral.abs() {
                break;
            }
        }
        integral + 0.5 * self.tail.at(n) - corr
    }

    /// `∫_start^∞ t(u) du`, only for `alpha == 1` (the offspring family).
    fn integral_at_zero(&self) -> f64 {
        let t = self.tail;
        assert!(t.alpha == 1.0, "closed-form integral needs alpha = 1");
        // substitute w = ln(u+1+e): t du = scale w^{-β} e^w/(e^w - e) dw
        let w0 = (self.start as f64 + 1.0 + E).ln();
        let main = t.scale * w0.powf(1.0 - t.beta) / (t.beta - 1.0);
        let corr = exp_sinh(
            |v| {
                let w = w0 + v;
                let r = E / (w.exp() - E);
                C64::new(t.scale * w.powf(-t.beta) * r, 0.0)
            },
            1.0,
            1e-14,
        );
        main + corr.value.re
    }

    /// `Σ_{n≥start} t(n) e^{-sn}` for `Re s ≥ 0`, `|Im s| ≤ π`, `s ≠ 0`.
    pub fn sum_exp(&self, s: C64) -> C64 {
        let n = self.start as f64;
        let es = (-s * n).exp();
        // rotated Laplace integral: u = n + τ d with s·d = |s|
        let modulus = s.norm();
        let d = s.conj() / modulus;
        let scale = (n * n.max(1.0 / modulus)).sqrt();
        let tail = self.tail;
        let phi = |tau: f64| tail.at_complex(C64::new(n, 0.0) + d * tau) * (-modulus * tau).exp();
        let ray = if n * modulus > 1e-12 {
            exp_sinh(phi, scale, 1e-14).value
        } else {
            // the decay scale 1/|s| is too far out for one exp-sinh sweep:
            // [0,1] directly, [1, 1/|s|] in log scale, the rest by exp-sinh
            let cut = 1.0 / modulus;
            let head = tanh_sinh(phi, 0.0, 1.0, 1e-14).value;
            let mid = tanh_sinh(|y| phi(y.exp()) * y.exp(), 0.0, cut.ln(), 1e-14).value;
            let far = exp_sinh(|sig| phi(cut + sig), cut, 1e-14).value;
            head + mid + far
        };
        let integral = ray * d * es;
        // jet of φ(n+h) = t(n+h) e^{-s(n+h)}
        let order = self.jet.len();
        let mut exp_jet = vec![ZERO; order];
        exp_jet[0] = es;
        for m in 1..order {
            exp_jet[m] = exp_jet[m - 1] * (-s) / m as f64;
        }
        let jet_at = |m: usize| -> C64 {
            let mut acc = ZERO;
            for j in 0..=m {
                acc += exp_jet[m - j] * self.jet[j];
            }
            acc
        };
        let mut corr = ZERO;
        let mut last = f64::INFINITY;
        for (k, bh) in self.bern_half.iter().enumerate() {
            let term = jet_at(2 * k + 1) * *bh;
            let mag = term.norm();
            if mag > last {
                break;
            }
            corr += term;
            last = mag;
            if mag < 1e-18 * integral.norm() {
                break;
            }
        }
        integral + es * tail.at(n) * 0.5 - corr
    }
}

/// `ln(1 - w)` negated, i.e. `s` with `1 - w = e^{-s}`.
pub(crate) fn s_of_complement(w: C64) -> C64 {
    -crate::numeric::ln1p(-w)
}

/// `Σ_{n≥0} a_n z^n` for a short explicit list, Horner order.
pub(crate) fn horner(coeffs: &[f64], z: C64) -> C64 {
    coeffs.iter().rev().fold(ZERO, |acc, &c| acc * z + c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn offspring_tail() -> PowerLogTail {
        PowerLogTail {
            scale: 0.2,
            alpha: 1.0,
            beta: 2.0,
        }
    }

    #[test]
    fn unweighted_sum_matches_direct_summation_with_bracket() {
        let t = offspring_tail();
        let lt = LatticeTail::new(t, 64);
        let em = lt.sum_at_zero().unwrap();
        // direct up to M, remainder bracketed by integrals of the decreasing tail
        let m = 2_000_000u64;
        let direct: f64 = (64..m).map(|n| t.at(n as f64)).sum();
        // ln(u+1) ≤ ln(u+1+e) ≤ ln(u+1) + e/(m+1) on [m, ∞)
        let lm = (m as f64 + 1.0).ln();
        let rest_lo = t.scale / (lm + E / (m as f64 + 1.0));
        let rest_hi = t.scale / lm + t.at(m as f64);
        assert!(em >= direct + rest_lo - 1e-12 && em <= direct + rest_hi + 1e-12,
            "em={em} direct={direct} rest=[{rest_lo},{rest_hi}]");
    }

    #[test]
    fn weighted_sum_matches_direct_summation_away_from_one() {
        let t = PowerLogTail {
            scale: 0.5,
            alpha: 0.6,
            beta: 1.0,
        };
        let lt = LatticeTail::new(t, 64);
        for &s in &[C64::new(0.05, 0.0), C64::new(0.01, 2.5), C64::new(1e-3, -0.4)] {
            let em = lt.sum_exp(s);
            let mut direct = ZERO;
            let mut n = 64u64;
            loop {
                let term = (-s * n as f64).exp() * t.at(n as f64);
                direct += term;
                if term.norm() < 1e-19 {
                    break;
                }
                n += 1;
            }
            assert!((em - direct).norm() < 1e-12 * direct.norm().max(1e-3), "s={s}: {em} vs {direct}");
        }
    }

    #[test]
    fn weighted_sum_continuous_as_s_vanishes() {
        let t = offspring_tail();
        let lt = LatticeTail::new(t, 64);
        let at0 = lt.sum_at_zero().unwrap();
        let near = lt.sum_exp(C64::new(1e-14, 0.0));
        // Σ t(n)(1 - e^{-sn}) ≈ κ/ln(1/s) for tiny s, far smaller than at0
        assert!((at0 - near.re) > 0.0 && (at0 - near.re) < 0.02);
        assert!(near.im.abs() < 1e-15);
    }

    #[test]
    fn tiny_argument_uses_log_split_consistently() {
        // Σ t(n)(1 − e^{-sn}) ≈ κ/(a ln(1/s)^a) to leading order, a = 1 here
        let t = offspring_tail();
        let lt = LatticeTail::new(t, 64);
        let at0 = lt.sum_at_zero().unwrap();
        let mut last = f64::INFINITY;
        for &s in &[1e-11, 1e-13, 1e-30, 1e-100, 1e-250] {
            let l = at0 - lt.sum_exp(C64::new(s, 0.0)).re;
            let lead = t.scale / (1.0 / s).ln();
            assert!(l > 0.0 && l < last);
            assert!((l / lead - 1.0).abs() < 8.0 / (1.0 / s).ln(), "s={s}: {l} vs {lead}");
            last = l;
        }
    }
}
