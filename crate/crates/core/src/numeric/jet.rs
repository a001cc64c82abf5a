//! Truncated Taylor series ("jets") with real coefficients.

use std::ops::{Add, Mul, Sub};

#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub c: Vec<f64>,
}

impl Jet {
    pub fn zeros(order: usize) -> Self {
        Jet {
            c: vec![0.0; order + 1],
        }
    }

    pub fn constant(v: f64, order: usize) -> Self {
        let mut j = Jet::zeros(order);
        j.c[0] = v;
        j
    }

    /// `v + h`, the identity jet shifted to `v`.
    pub fn variable(v: f64, order: usize) -> Self {
        let mut j = Jet::constant(v, order);
        if order > 0 {
            j.c[1] = 1.0;
        }
        j
    }

    pub fn from_coeffs(mut c: Vec<f64>, order: usize) -> Self {
        c.resize(order + 1, 0.0);
        Jet { c }
    }

    pub fn order(&self) -> usize {
        self.c.len() - 1
    }

    pub fn scale(mut self, s: f64) -> Self {
        self.c.iter_mut().for_each(|v| *v *= s);
        self
    }

    pub fn ln(&self) -> Jet {
        let a = &self.c;
        let n = a.len();
        assert!(a[0] > 0.0, "jet log of non-positive constant term");
        let mut l = vec![0.0; n];
        l[0] = a[0].ln();
        for k in 1..n {
            let mut s = k as f64 * a[k];
            for j in 1..k {
                s -= j as f64 * l[j] * a[k - j];
            }
            l[k] = s / (k as f64 * a[0]);
        }
        Jet { c: l }
    }

    pub fn exp(&self) -> Jet {
        let b = &self.c;
        let n = b.len();
        let mut e = vec![0.0; n];
        e[0] = b[0].exp();
        for k in 1..n {
            let mut s = 0.0;
            for j in 1..=k {
                s += j as f64 * b[j] * e[k - j];
            }
            e[k] = s / k as f64;
        }
        Jet { c: e }
    }

    pub fn powf(&self, p: f64) -> Jet {
        self.ln().scale(p).exp()
    }
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, o: &Jet) -> Jet {
        Jet {
            c: self.c.iter().zip(&o.c).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, o: &Jet) -> Jet {
        Jet {
            c: self.c.iter().zip(&o.c).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, o: &Jet) -> Jet {
        let n = self.c.len().min(o.c.len());
        let mut c = vec![0.0; n];
        for i in 0..n {
            if self.c[i] == 0.0 {
                continue;
            }
            for j in 0..n - i {
                c[i + j] += self.c[i] * o.c[j];
            }
        }
        Jet { c }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_of_shifted_variable_matches_binomial_series() {
        // (2 + h)^{-0.7}
        let j = Jet::variable(2.0, 6).powf(-0.7);
        let mut coef = 2f64.powf(-0.7);
        for k in 0..=6 {
            assert!((j.c[k] - coef).abs() < 1e-14, "k={k}");
            coef *= (-0.7 - k as f64) / ((k + 1) as f64 * 2.0);
        }
    }

    #[test]
    fn log_of_exp_roundtrip() {
        let j = Jet::from_coeffs(vec![0.3, -1.0, 0.25, 2.0], 8);
        let back = j.exp().ln();
        for (a, b) in back.c.iter().zip(&j.c) {
            assert!((a - b).abs() < 1e-13);
        }
    }
}
