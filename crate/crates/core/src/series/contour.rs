//! Tail probabilities far beyond any FFT size, by Hankel-contour inversion.
//!
//! With `G(z) = (1 − F(z))/(1 − z) = Σ P(S > k) z^k` and `z = e^{−s}`, the
//! coefficient of `z^x` is `(1/π) Im ∫_0^∞ G(e^{−s}) e^{sx} ds` along the ray
//! `arg s = φ`, once the vertical inversion line is folded around the branch
//! point at `s = 0`. The integrand decays like `e^{u cos φ}` in `u = |s| x`.

use super::Pgf;
use crate::error::{Error, Result};
use crate::models::Model;
use crate::numeric::quad::tanh_sinh;
use crate::numeric::{expm1, C64};

/// Smallest `x` for which the folded contour is used.
pub const CONTOUR_MIN_X: f64 = 100.0;

const ANGLE: f64 = 2.0 * std::f64::consts::PI / 3.0;
const U_MAX: f64 = 150.0;

/// `P(S > x)` for the law with generating function `pgf`.
pub fn contour_tail(model: &Model, pgf: &Pgf, x: f64, tol: f64) -> Result<f64> {
    if !model.supports_continuation() {
        return Err(Error::Unsupported(
            "contour inversion needs generating functions that continue past |z| = 1".into(),
        ));
    }
    if x < CONTOUR_MIN_X {
        return Err(Error::Unsupported(format!(
            "contour inversion is reserved for x ≥ {CONTOUR_MIN_X}, got {x}"
        )));
    }
    let dir = C64::from_polar(1.0, ANGLE);
    let failed = std::cell::Cell::new(None);
    let q = tanh_sinh(
        |u| {
            let s = dir * (u / x);
            let w = -expm1(-s);
            match pgf.complement(model, w) {
                Ok(c) => c / w * (dir * u).exp() * dir,
                Err(e) => {
                    failed.set(Some(e));
                    C64::new(f64::NAN, f64::NAN)
                }
            }
        },
        0.0,
        U_MAX,
        tol,
    );
    if let Some(e) = failed.take() {
        return Err(e);
    }
    let value = q.value.im / (std::f64::consts::PI * x);
    if !(q.error <= tol.max(1e-14) * q.value.norm() * 10.0) {
        return Err(Error::QuadratureFailure { error: q.error });
    }
    Ok(value)
}
