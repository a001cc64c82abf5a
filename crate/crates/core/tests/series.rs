use gwi_core::numeric::{expm1, C64};
use gwi_core::series::*;
use gwi_core::{Model, ModelSpec};

fn m1() -> Model {
    Model::new(ModelSpec::heavy(0.3, 0.7, 0.5, 1.0)).unwrap()
}

fn m2() -> Model {
    Model::new(ModelSpec::very_heavy(1.0, 0.6, 0.2, 0.5)).unwrap()
}

fn points() -> Vec<C64> {
    vec![
        C64::new(0.0, 0.0),
        C64::new(0.5, 0.0),
        C64::new(0.9, 0.1),
        C64::new(-0.3, 0.6),
        C64::from_polar(0.999, 2.0),
    ]
}

#[test]
fn iterates_compose() {
    for m in [m1(), m2()] {
        for x in points() {
            for (j, k) in [(1, 1), (3, 5), (10, 7)] {
                let a = iterate_f(&m, j, iterate_f(&m, k, x));
                let b = iterate_f(&m, j + k, x);
                assert!((a - b).norm() < 1e-12, "{x} {j} {k}");
            }
        }
    }
}

#[test]
fn sn_satisfies_its_recursion() {
    // E x^{S_{n+1}} = E x^{S_n} · g(A_{n+1}(x)) with A_1 = x, A_{k+1} = x f(A_k)
    for m in [m1(), m2()] {
        for x in points() {
            let mut a = x;
            for n in 0..12 {
                let lhs = C64::new(1.0, 0.0) - sn_complement(&m, n + 1, C64::new(1.0, 0.0) - x);
                let rhs = (C64::new(1.0, 0.0) - sn_complement(&m, n, C64::new(1.0, 0.0) - x)) * m.g(a);
                assert!((lhs - rhs).norm() < 1e-10, "{x} n={n}");
                a = x * m.f(a);
            }
        }
    }
}

#[test]
fn progeny_solves_its_fixed_point() {
    for m in [m1(), m2()] {
        for x in points() {
            let h = total_progeny_pgf(&m, x).unwrap();
            assert!((h - x * m.f(h)).norm() < 1e-12, "{x}");
        }
    }
    let m = m1();
    assert_eq!(total_progeny_pgf(&m, C64::new(1.0, 0.0)).unwrap(), C64::new(1.0, 0.0));
}

#[test]
fn progeny_continues_along_the_contour_ray() {
    // tiny |w| off the unit disk once made Newton stall at round-off level
    let m = m1();
    let dir = C64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
    for x in [1e6, 1e8, 1e10, 1e12] {
        for i in 0..400 {
            let u = 1e-8 * 1.05f64.powi(i);
            let w = -expm1(-dir * (u / x));
            let big_w = total_progeny_complement(&m, w).unwrap();
            let resid = big_w * big_w.powf(0.3) * (0.5 * (1.0 - w)) - w * (1.0 - big_w);
            assert!(resid.norm() <= 1e-12 * w.norm(), "x={x} u={u}");
        }
    }
}

#[test]
fn extraction_reproduces_immigration_law() {
    let m = m1();
    let s = Pgf::Eta.series(&m, 1 << 16).unwrap();
    for k in 0..(1 << 16) as u64 {
        assert!((s.coeffs[k as usize] - m.eta_pmf(k)).abs() < 1e-10, "k={k}");
    }
}

#[test]
fn boundary_values_of_derived_laws() {
    let m = m1();
    // Y has no mass at zero since g(h(0)) = g(0) = 1 − c2 = 0
    let y = y_inf_series(&m, 1024).unwrap();
    // up to aliasing from index 2N, damped by r^{2N}, with P(Y ≥ 2048) < 0.02
    assert!(y.coeffs[0].abs() < y.radius.powi(2048) * 0.02, "{}", y.coeffs[0]);
    // P(S = 0) = P(f(h(0))) = P(f(0))
    let s = s_inf_series(&m, 1024).unwrap();
    let p = stationary_pgf(&m, m.f(C64::new(0.0, 0.0)), 1e-13).unwrap().value.re;
    assert!((s.coeffs[0] - p).abs() < 1e-10);
    // pgfs approach 1 at x = 1⁻
    for pgf in [Pgf::YInf, Pgf::SInf, Pgf::Stationary, Pgf::Sn(5)] {
        let near = pgf.complement(&m, C64::new(1e-12, 0.0)).unwrap().re;
        let far = pgf.complement(&m, C64::new(1e-6, 0.0)).unwrap().re;
        assert!(0.0 < near && near < far && near < 1e-2, "{pgf:?}: {near}, {far}");
    }
}

#[test]
fn contour_agrees_with_extraction() {
    let m = m1();
    for pgf in [Pgf::Sn(4), Pgf::YInf, Pgf::Stationary] {
        let s = pgf.series(&m, 1 << 14).unwrap();
        for x in [100.0, 500.0, 2000.0] {
            let c = contour_tail(&m, &pgf, x, 1e-11).unwrap();
            let (_, hi) = s.exact_tail(x as i64).unwrap();
            assert!((c - hi).abs() < 1e-9, "{pgf:?} x={x}: {c} vs {hi}");
        }
    }
    assert!(contour_tail(&m2(), &Pgf::Stationary, 1000.0, 1e-10).is_err());
    assert!(contour_tail(&m, &Pgf::Stationary, 50.0, 1e-10).is_err());
}

#[test]
fn near_one_fit_on_known_forms() {
    let grid = [1.0 - 1e-4, 1.0 - 1e-5, 1.0 - 1e-6, 1.0 - 1e-7];
    let id = near_one_exponent_fit(|s| Ok(1.0 - s), &grid).unwrap();
    assert!((id.exponent - 1.0).abs() < 1e-9);
    let m = m1();
    let g = near_one_exponent_fit(|s| Ok(m.comp_g(C64::new(1.0 - s, 0.0)).re), &grid).unwrap();
    assert!((g.exponent - 0.7).abs() < 1e-9);
    assert!((g.constant - 1.0).abs() < 1e-7);
    assert!(near_one_exponent_fit(|s| Ok(1.0 - s), &[0.9, 0.8]).is_err());
}

#[test]
fn lemma1_ratio_at_zero_steps() {
    // f_0(x) = x and P_0 = 1, so the ratio reduces to (1/P(x) − 1)/(p δ^{−1} (1 − x)^δ)
    let m = m2();
    let x = 0.5;
    let p_x = stationary_pgf(&m, C64::new(x, 0.0), 1e-13).unwrap().value.re;
    let expect = (1.0 / p_x - 1.0) / (m.p().unwrap() / 0.6 * (1.0 - x).powf(0.6));
    let r = lemma1_ratio(&m, 0, x).unwrap();
    assert!((r - expect).abs() < 1e-10 * expect, "{r} vs {expect}");
    assert!(lemma1_ratio(&m1(), 4, x).is_err());
}

#[test]
fn tail_slope_of_a_sibuya_law() {
    // P(η > x) ~ x^{−δ}/Γ(1 − δ)
    let s = Pgf::Eta.series(&m1(), 1 << 14).unwrap();
    let slope = tail_slope(&s, 256.0, 8192.0, 8).unwrap();
    assert!((slope + 0.7).abs() < 5e-3, "{slope}");
}
