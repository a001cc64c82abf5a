//! Numerical building blocks shared by the model and series code.
//!
//! Everything that works near the point `z = 1` of a probability generating
//! function is written in complement coordinates `w = 1 - z`, so the helpers
//! here provide cancellation-free `ln(1 + q)` and `exp(q) - 1` for complex
//! arguments.

pub mod jet;
pub mod quad;
pub mod special;

use num_complex::Complex64;

pub type C64 = Complex64;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);

/// `ln(1 + q)` for complex `q`, accurate when `|q|` is small.
pub fn ln1p(q: C64) -> C64 {
    let re = 0.5 * (2.0 * q.re + q.norm_sqr()).ln_1p();
    let im = q.im.atan2(1.0 + q.re);
    C64::new(re, im)
}

/// `exp(q) - 1` for complex `q`, accurate when `|q|` is small.
pub fn expm1(q: C64) -> C64 {
    let ea = q.re.exp();
    let half = (0.5 * q.im).sin();
    let re = q.re.exp_m1() * q.im.cos() - 2.0 * half * half;
    C64::new(re, ea * q.im.sin())
}

/// Principal power `w^p`, with `0^p = 0` for `p > 0`.
pub fn pow(w: C64, p: f64) -> C64 {
    if w.re == 0.0 && w.im == 0.0 {
        return ZERO;
    }
    (w.ln() * p).exp()
}

/// `1 - (1 - w)^k` computed without cancellation.
pub fn one_minus_pow_complement(w: C64, k: f64) -> C64 {
    -expm1(ln1p(-w) * k)
}
