//! Asymptotic tail predictions with the constants resolved for each family.

use crate::error::{Error, Result};
use crate::models::{Model, ModelSpec};
use crate::numeric::special::gamma;
use crate::numeric::C64;
use crate::series::total_progeny_complement;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticConstants {
    /// `lim (1 − h(x))/(1 − x)^{1/(1+ν)}`.
    pub l3_limit: Option<f64>,
    /// `lim x^{δ/(1+ν)} P(Y^{(∞)} > x)`.
    pub l4_limit: Option<f64>,
    /// `lim x^{index} P(X > x)` for the stationary law.
    pub x_tail_const: f64,
    /// `lim x^{1/(1+ν)} P(T > x)`.
    pub t_tail_const: Option<f64>,
    /// `C = C₂/(C₁(δ − ν))`.
    pub c: Option<f64>,
    /// `p = lim L₂/L₁`.
    pub p: Option<f64>,
}

pub fn constants(model: &Model) -> Result<AsymptoticConstants> {
    match &model.spec {
        ModelSpec::Heavy(h) => {
            let l3 = h.c1.powf(-1.0 / (1.0 + h.nu));
            let rho = h.delta / (1.0 + h.nu);
            let c = h.c2 / (h.c1 * (h.delta - h.nu));
            Ok(AsymptoticConstants {
                l3_limit: Some(l3),
                l4_limit: Some(h.c2 * l3.powf(h.delta) / gamma(1.0 - rho)),
                x_tail_const: c / gamma(1.0 + h.nu - h.delta),
                t_tail_const: Some(l3 / gamma(1.0 - 1.0 / (1.0 + h.nu))),
                c: Some(c),
                p: None,
            })
        }
        ModelSpec::VeryHeavy(v) => Ok(AsymptoticConstants {
            l3_limit: None,
            l4_limit: None,
            x_tail_const: v.p() / v.delta / gamma(1.0 - v.delta),
            t_tail_const: None,
            c: None,
            p: Some(v.p()),
        }),
        ModelSpec::Finite(_) => Err(unsupported()),
    }
}

fn unsupported() -> Error {
    Error::Unsupported("asymptotics are only defined for the heavy-tailed families".into())
}

/// `P(X > x)`.
pub fn x_tail_prediction(model: &Model, x: f64) -> Result<f64> {
    let k = constants(model)?;
    let index = match &model.spec {
        ModelSpec::Heavy(h) => h.delta - h.nu,
        ModelSpec::VeryHeavy(v) => v.delta,
        ModelSpec::Finite(_) => unreachable!(),
    };
    Ok(k.x_tail_const * x.powf(-index))
}

/// `P(T > x)` for the total progeny of one ancestor.
pub fn t_tail_prediction(model: &Model, x: f64) -> Result<f64> {
    match &model.spec {
        ModelSpec::Heavy(h) => Ok(constants(model)?.t_tail_const.unwrap() * x.powf(-1.0 / (1.0 + h.nu))),
        // Σ P(T>n) z^n ≈ (a/κ) ln(1/(1−z))^a, so P(T>x) ≈ (a²/κ)(ln x)^{a−1}/x
        ModelSpec::VeryHeavy(v) => Ok(v.a * v.a / v.kappa * x.ln().powf(v.a - 1.0) / x),
        ModelSpec::Finite(_) => Err(unsupported()),
    }
}

/// `P(Y^{(∞)} > x)`.
pub fn y_tail_prediction(model: &Model, x: f64) -> Result<f64> {
    match &model.spec {
        ModelSpec::Heavy(h) => Ok(constants(model)?.l4_limit.unwrap() * x.powf(-h.delta / (1.0 + h.nu))),
        ModelSpec::VeryHeavy(v) => {
            // Tauberian conversion of 1 − g(h(1 − 1/x)) at index δ
            let w = total_progeny_complement(model, C64::new(1.0 / x, 0.0))?;
            Ok(model.comp_g(w).re / gamma(1.0 - v.delta))
        }
        ModelSpec::Finite(_) => Err(unsupported()),
    }
}

/// `n · P(Y^{(∞)} > x)`, the large-deviation approximation of `P(S_n > x)`.
pub fn ld_prediction(model: &Model, n: usize, x: f64) -> Result<f64> {
    Ok(n as f64 * y_tail_prediction(model, x)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `ν > 0`: `x_n = n^{(1+ν)/δ+κ₁}`, `y_n = n^{(1+ν)/ν−κ₂}`.
    Theorem1,
    /// `ν = 0`: `x_n = n^{1/δ+κ₁}`, `y_n = n^{κ₂}`.
    Theorem2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub regime: Regime,
    pub n: usize,
    pub x_lo: f64,
    pub x_hi: f64,
    pub kappa1: f64,
    pub kappa2: f64,
}

pub fn window(model: &Model, n: usize, kappa1: f64, kappa2: f64) -> Result<Window> {
    if n < 1 {
        return Err(Error::InfeasibleWindow("n must be at least 1".into()));
    }
    if !(kappa1 > 0.0 && kappa2 > 0.0) {
        return Err(Error::InfeasibleWindow(format!(
            "kappa1 and kappa2 must be positive, got {kappa1}, {kappa2}"
        )));
    }
    let nf = n as f64;
    let (regime, x_lo, x_hi) = match &model.spec {
        ModelSpec::Heavy(h) => {
            let limit = (1.0 + h.nu) * (1.0 / h.nu - 1.0 / h.delta);
            if !(kappa1 + kappa2 < limit) {
                return Err(Error::InfeasibleWindow(format!(
                    "need kappa1 + kappa2 < {limit}, got {}",
                    kappa1 + kappa2
                )));
            }
            (
                Regime::Theorem1,
                nf.powf((1.0 + h.nu) / h.delta + kappa1),
                nf.powf((1.0 + h.nu) / h.nu - kappa2),
            )
        }
        ModelSpec::VeryHeavy(v) => {
            if !(kappa2 - kappa1 > 1.0 / v.delta) {
                return Err(Error::InfeasibleWindow(format!(
                    "need kappa2 − kappa1 > {}, got {}",
                    1.0 / v.delta,
                    kappa2 - kappa1
                )));
            }
            (Regime::Theorem2, nf.powf(1.0 / v.delta + kappa1), nf.powf(kappa2))
        }
        ModelSpec::Finite(_) => return Err(unsupported()),
    };
    if !(x_lo < x_hi) {
        return Err(Error::InfeasibleWindow(format!(
            "empty window at n = {n}: [{x_lo}, {x_hi}]"
        )));
    }
    Ok(Window {
        regime,
        n,
        x_lo,
        x_hi,
        kappa1,
        kappa2,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    X,
    T,
    Y,
    Ld,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionCurve {
    pub quantity: Quantity,
    pub n: Option<usize>,
    pub constants: AsymptoticConstants,
    pub provenance: String,
    pub rows: Vec<(f64, f64)>,
}

impl PredictionCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,prediction,constant_provenance\n");
        for (x, p) in &self.rows {
            let _ = writeln!(out, "{x:.9e},{p:.9e},{}", self.provenance);
        }
        out
    }
}

pub fn prediction_curve(model: &Model, quantity: Quantity, n: Option<usize>, xs: &[f64]) -> Result<PredictionCurve> {
    let constants = constants(model)?;
    let heavy = matches!(model.spec, ModelSpec::Heavy(_));
    let provenance = match (quantity, heavy) {
        (Quantity::X, true) => "closed form C/Gamma(1+nu-delta)",
        (Quantity::X, false) => "closed form p/(delta Gamma(1-delta))",
        (Quantity::T, true) => "closed form C1^(-1/(1+nu))/Gamma(1-1/(1+nu))",
        (Quantity::T, false) => "leading log order a^2/kappa",
        (Quantity::Y | Quantity::Ld, true) => "closed form L4 limit",
        (Quantity::Y | Quantity::Ld, false) => "numeric 1-g(h(1-1/x)) over Gamma(1-delta)",
    }
    .to_string();
    let rows = xs
        .iter()
        .map(|&x| {
            let p = match quantity {
                Quantity::X => x_tail_prediction(model, x)?,
                Quantity::T => t_tail_prediction(model, x)?,
                Quantity::Y => y_tail_prediction(model, x)?,
                Quantity::Ld => ld_prediction(model, n.unwrap_or(1), x)?,
            };
            Ok((x, p))
        })
        .collect::<Result<_>>()?;
    Ok(PredictionCurve {
        quantity,
        n,
        constants,
        provenance,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m1() -> Model {
        Model::new(ModelSpec::heavy(0.3, 0.7, 0.5, 1.0)).unwrap()
    }

    #[test]
    fn heavy_constants_closed_forms() {
        let k = constants(&m1()).unwrap();
        assert!((k.c.unwrap() - 5.0).abs() < 1e-14);
        assert!((k.x_tail_const - 5.0 / gamma(0.6)).abs() < 1e-13);
        let l4 = 0.5f64.powf(-0.7 / 1.3) / gamma(1.0 - 0.7 / 1.3);
        assert!((k.l4_limit.unwrap() - l4).abs() < 1e-13);
        assert!(k.p.is_none());
    }

    #[test]
    fn windows_and_boundaries() {
        let w = window(&m1(), 100, 0.1, 0.5).unwrap();
        assert!((w.x_lo.log(100.0) - (1.3 / 0.7 + 0.1)).abs() < 1e-12);
        assert!((w.x_hi.log(100.0) - (1.3 / 0.3 - 0.5)).abs() < 1e-12);
        let limit = 1.3 * (1.0 / 0.3 - 1.0 / 0.7);
        assert!(matches!(window(&m1(), 100, 0.1, limit - 0.1), Err(Error::InfeasibleWindow(_))));
        let m2 = Model::new(ModelSpec::very_heavy(1.0, 0.6, 0.2, 0.5)).unwrap();
        assert!(matches!(window(&m2, 100, 0.5, 0.5 + 1.0 / 0.6), Err(Error::InfeasibleWindow(_))));
        assert!(window(&m2, 100, 0.5, 2.5).is_ok());
    }

    #[test]
    fn power_law_scaling() {
        let m = m1();
        let a = x_tail_prediction(&m, 1e3).unwrap();
        let b = x_tail_prediction(&m, 2e3).unwrap();
        assert!((b / a - 2f64.powf(-0.4)).abs() < 1e-14);
        let a = ld_prediction(&m, 10, 1e3).unwrap();
        let b = ld_prediction(&m, 10, 2e3).unwrap();
        assert!((b / a - 2f64.powf(-0.7 / 1.3)).abs() < 1e-14);
        assert!(ld_prediction(&m, 11, 1e3).unwrap() > a);
        assert_eq!(ld_prediction(&m, 7, 5e4).unwrap(), 7.0 * y_tail_prediction(&m, 5e4).unwrap());
    }
}
