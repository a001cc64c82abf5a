//! Coefficient extraction from generating-function values on a circle.

use crate::error::{Error, Result};
use crate::numeric::C64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt::Write as _;

/// Masses `c_0..c_{N−1}` of a distribution on the nonnegative integers,
/// with the mass beyond `N − 1` kept explicitly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerSeries {
    pub coeffs: Vec<f64>,
    pub tail_mass: f64,
    pub n_points: usize,
    pub radius: f64,
    /// Number of slightly negative coefficients set to zero.
    pub clamped: usize,
    /// Largest noise floor used in the clamping test.
    pub floor: f64,
}

impl PowerSeries {
    /// Point mass at zero.
    pub fn point_mass(n_points: usize) -> Self {
        let mut coeffs = vec![0.0; n_points];
        coeffs[0] = 1.0;
        PowerSeries {
            coeffs,
            tail_mass: 0.0,
            n_points,
            radius: 1.0,
            clamped: 0,
            floor: 0.0,
        }
    }

    /// Bracket `[lo, hi]` for `P(· > x)`.
    pub fn exact_tail(&self, x: i64) -> Result<(f64, f64)> {
        exact_tail(self, x)
    }

    /// `k,mass` rows followed by a `tail_mass` row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,mass\n");
        for (k, c) in self.coeffs.iter().enumerate() {
            let _ = writeln!(out, "{k},{c:.9e}");
        }
        let _ = writeln!(out, "tail_mass,{:.9e}", self.tail_mass);
        out
    }

    pub fn metadata_json(&self) -> serde_json::Value {
        serde_json::json!({
            "n_points": self.n_points,
            "radius": self.radius,
            "tail_mass": self.tail_mass,
            "clamped": self.clamped,
            "noise_floor": self.floor,
        })
    }
}

/// Rigorous bracket `[Σ_{k>x} c_k, Σ_{k>x} c_k + tail_mass]` for `P(· > x)`.
pub fn exact_tail(series: &PowerSeries, x: i64) -> Result<(f64, f64)> {
    if x < 0 {
        return Ok((1.0, 1.0));
    }
    if x as usize >= series.n_points {
        return Err(Error::OutOfRange {
            x,
            n_points: series.n_points,
        });
    }
    let lo: f64 = series.coeffs[x as usize + 1..].iter().sum();
    Ok((lo, (lo + series.tail_mass).min(1.0)))
}

/// `N^{−1/N}` clamped to `[0.9, 1 − 1e−6]`.
pub fn default_radius(n_points: usize) -> f64 {
    let n = n_points as f64;
    n.powf(-1.0 / n).clamp(0.9, 1.0 - 1e-6)
}

/// Extracts the first `n_points` coefficients of a probability generating
/// function from its values on the circle of the given radius.
///
/// The circle carries `2·n_points` nodes, so aliasing from index `k + 2N`
/// is damped by `r^{2N}`. `pgf` receives points `z` with `|z| = r` and
/// returns `F(z)`.
pub fn extract<F>(pgf: F, n_points: usize, radius: Option<f64>) -> Result<PowerSeries>
where
    F: Fn(C64) -> Result<C64> + Sync,
{
    if n_points == 0 || !n_points.is_power_of_two() {
        return Err(Error::DegenerateGrid(format!(
            "extraction size must be a power of two, got {n_points}"
        )));
    }
    let r = radius.unwrap_or_else(|| default_radius(n_points));
    let amplification = r.powf(-((n_points - 1) as f64));
    if !(r > 0.0 && r < 1.0) || !amplification.is_finite() || amplification > 1e300 {
        return Err(Error::RadiusIllConditioned { radius: r, n_points });
    }
    let m = 2 * n_points;
    // F(conj z) = conj F(z): evaluate the upper half only
    let half: Vec<C64> = (0..=m / 2)
        .into_par_iter()
        .map(|j| pgf(C64::from_polar(r, 2.0 * PI * j as f64 / m as f64)))
        .collect::<Result<_>>()?;
    let mut buf: Vec<C64> = (0..m)
        .map(|j| if j <= m / 2 { half[j] } else { half[m - j].conj() })
        .collect();
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    let eps = f64::EPSILON * 16.0 * (m as f64).log2();
    let mut coeffs = Vec::with_capacity(n_points);
    let mut scale = 1.0 / m as f64;
    let mut clamped = 0;
    let mut floor = 0.0f64;
    for (k, v) in buf.iter().take(n_points).enumerate() {
        let c = v.re * scale;
        let noise = (eps * scale * m as f64).max(1e-12);
        floor = floor.max(noise);
        if c < -noise {
            return Err(Error::NegativeCoefficient {
                index: k,
                value: c,
                floor: noise,
            });
        }
        if c < 0.0 {
            clamped += 1;
        }
        coeffs.push(c.max(0.0));
        scale /= r;
    }
    let tail_mass = (1.0 - coeffs.iter().sum::<f64>()).max(0.0);
    Ok(PowerSeries {
        coeffs,
        tail_mass,
        n_points,
        radius: r,
        clamped,
        floor,
    })
}
