//! Special functions: log-gamma ratios, Bernoulli and Gregory numbers.

use std::f64::consts::PI;

pub use statrs::function::gamma::{gamma, ln_gamma};

/// Bernoulli numbers `B_0..=B_n` (with `B_1 = -1/2`).
pub fn bernoulli_numbers(n: usize) -> Vec<f64> {
    let mut b = vec![0.0; n + 1];
    b[0] = 1.0;
    if n >= 1 {
        b[1] = -0.5;
    }
    let small = [1.0 / 6.0, -1.0 / 30.0, 1.0 / 42.0, -1.0 / 30.0];
    for k in (2..=n).step_by(2) {
        b[k] = if k <= 8 {
            small[k / 2 - 1]
        } else {
            // B_{2m} = (-1)^{m+1} 2 (2m)! ζ(2m) / (2π)^{2m}
            let m = k / 2;
            let zeta: f64 = (1..200).map(|j| (j as f64).powi(-(k as i32))).sum();
            let log_mag = (2.0f64).ln() + ln_gamma(k as f64 + 1.0) + zeta.ln()
                - k as f64 * (2.0 * PI).ln();
            let sign = if m % 2 == 1 { 1.0 } else { -1.0 };
            sign * log_mag.exp()
        };
    }
    b
}

/// Bernoulli polynomial `B_n(x)`.
pub fn bernoulli_polynomial(n: usize, x: f64, bern: &[f64]) -> f64 {
    let mut binom = 1.0;
    let mut acc = 0.0;
    for k in 0..=n {
        acc += binom * bern[k] * x.powi((n - k) as i32);
        binom = binom * (n - k) as f64 / (k + 1) as f64;
    }
    acc
}

/// `ln Γ(x + a) − ln Γ(x + b)` without the cancellation that plagues the
/// naive difference for large `x`.
pub fn ln_gamma_ratio(x: f64, a: f64, b: f64) -> f64 {
    if x < 64.0 {
        // shift into the asymptotic range with Γ(y+1) = yΓ(y)
        let m = (64.0 - x).ceil();
        let mut shift = 0.0;
        for j in 0..m as usize {
            let y = x + j as f64;
            shift += ((y + a) / (y + b)).ln();
        }
        return ln_gamma_ratio(x + m, a, b) - shift;
    }
    thread_local! {
        static BERN: Vec<f64> = bernoulli_numbers(12);
    }
    BERN.with(|bern| {
        let mut acc = (a - b) * x.ln();
        let mut xp = 1.0;
        for k in 1..=9usize {
            xp *= x;
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            let d = bernoulli_polynomial(k + 1, a, bern) - bernoulli_polynomial(k + 1, b, bern);
            acc += sign * d / ((k * (k + 1)) as f64 * xp);
        }
        acc
    })
}

/// Signed Gregory coefficients `G_1..=G_n` of `t / ln(1+t) = Σ G_k t^k`.
///
/// With forward differences `Δ`, a convergent sum satisfies
/// `Σ_{j≥0} f_j = ∫_0^∞ f + Σ_{k≥0} G_{k+1} Δ^k f_0`.
pub fn gregory_coefficients(n: usize) -> Vec<f64> {
    // reciprocal of ln(1+t)/t = Σ (-1)^k t^k/(k+1)
    let len = n + 1;
    let l: Vec<f64> = (0..len)
        .map(|k| if k % 2 == 0 { 1.0 } else { -1.0 } / (k + 1) as f64)
        .collect();
    let mut g = vec![0.0; len];
    g[0] = 1.0;
    for k in 1..len {
        let s: f64 = (1..=k).map(|j| l[j] * g[k - j]).sum();
        g[k] = -s;
    }
    g[1..].to_vec()
}
