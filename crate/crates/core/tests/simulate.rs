use gwi_core::estimate::{mc_tail, run_replicas, wilson};
use gwi_core::numeric::C64;
use gwi_core::rng::replica_rng;
use gwi_core::series::{iterate_f, s_inf_series, sn_pgf_series, stationary_pgf};
use gwi_core::simulate::*;
use gwi_core::{Model, ModelSpec};

fn m1() -> Model {
    Model::new(ModelSpec::heavy(0.3, 0.7, 0.5, 1.0)).unwrap()
}

fn budget() -> SimBudget {
    SimBudget {
        pop_cap: 1_000_000,
        gen_cap: 100_000,
        work_cap: 10_000_000,
    }
}

#[test]
fn one_step_from_one_is_a_convolution() {
    let xi = vec![0.3, 0.4, 0.3];
    let eta = vec![0.1, 0.6, 0.3];
    let m = Model::new(ModelSpec::finite(xi.clone(), eta.clone())).unwrap();
    let mut conv = [0.0; 5];
    for (i, a) in xi.iter().enumerate() {
        for (j, b) in eta.iter().enumerate() {
            conv[i + j] += a * b;
        }
    }
    let reps = 100_000;
    let draws = run_replicas(reps, 17, 0, |_, rng| gwi_step(rng, &m, 1, &budget()).unwrap());
    for (k, p) in conv.iter().enumerate() {
        let hat = draws.iter().filter(|&&d| d == k as u64).count() as f64 / reps as f64;
        let se = (p * (1.0 - p) / reps as f64).sqrt();
        assert!((hat - p).abs() < 4.0 * se, "k={k}: {hat} vs {p}");
    }
}

#[test]
fn monte_carlo_sn_sits_in_exact_brackets() {
    let m = m1();
    let series = sn_pgf_series(&m, 3, 1 << 14).unwrap();
    let xs = [1.0, 5.0, 20.0, 100.0, 1000.0];
    let (est, _) = mc_tail(|rng| simulate_sn(rng, &m, 3, &budget()), &xs, 200_000, 5, 0, 0.99).unwrap();
    for e in est {
        let (lo, hi) = series.exact_tail(e.x as i64).unwrap();
        assert!(e.ci_lo <= hi && lo <= e.ci_hi, "x={}: [{}, {}] vs [{lo}, {hi}]", e.x, e.ci_lo, e.ci_hi);
    }
}

#[test]
fn stationary_sampler_matches_pgf_at_one_half() {
    let m = m1();
    let mm = 20;
    let reps = 20_000u64;
    let b = SimBudget {
        pop_cap: 100_000,
        ..budget()
    };
    let draws = run_replicas(reps, 9, 0, |_, rng| sample_stationary_x(rng, &m, mm, &b));
    let vals: Vec<f64> = draws
        .iter()
        .map(|o| match o {
            Outcome::Value { value } => 0.5f64.powi((*value).min(2000) as i32),
            Outcome::Aborted { .. } => 0.0,
        })
        .collect();
    let mean = vals.iter().sum::<f64>() / reps as f64;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / reps as f64;
    let se = (var / reps as f64).sqrt();
    // the truncated sum has pgf Π_{n≤M} g(f_n(x)) exactly
    let truncated: f64 = (0..=mm)
        .map(|n| m.g(iterate_f(&m, n, C64::new(0.5, 0.0))).re)
        .product();
    assert!((mean - truncated).abs() < 4.0 * se, "{mean} ± {se} vs {truncated}");
    // truncation lowers X, so E 0.5^X lies below by at most the bound
    let exact = stationary_pgf(&m, C64::new(0.5, 0.0), 1e-13).unwrap().value.re;
    let bound = stationary_truncation_bound(&m, mm).unwrap();
    assert!(exact <= truncated && truncated - exact <= bound, "{exact} {truncated} {bound}");
}

#[test]
fn truncation_bound_shrinks() {
    let m = m1();
    let a = stationary_truncation_bound(&m, 10).unwrap();
    let b = stationary_truncation_bound(&m, 1000).unwrap();
    assert!(0.0 < b && b < a);
}

#[test]
fn families_left_after_n_are_dominated_by_s_infinity() {
    let m = m1();
    let n = 6;
    let reps = 20_000;
    let samples = run_replicas(reps, 21, 0, |_, rng| simulate_coupled(rng, &m, n, &budget()));
    let s = s_inf_series(&m, 1 << 12).unwrap();
    for x in [0.0, 3.0, 30.0, 300.0] {
        let hits = samples.iter().filter(|r| matches!(r, Ok(p) if p.s_n2 as f64 > x)).count() as u64;
        let (lo, _) = wilson(hits, reps, 0.99);
        let (_, hi) = s.exact_tail(x as i64).unwrap();
        assert!(lo <= hi, "x={x}: {lo} > {hi}");
    }
    let ok = samples.iter().filter(|r| r.is_ok()).count();
    assert!(ok as f64 > 0.99 * reps as f64);
    assert!(samples.iter().flatten().all(|p| p.identity_holds()));
}

#[test]
fn single_worker_streams_repeat() {
    let m = m1();
    let a: Vec<_> = (0..50).map(|i| simulate_coupled(&mut replica_rng(4, i), &m, 5, &budget())).collect();
    let b: Vec<_> = (0..50).map(|i| simulate_coupled(&mut replica_rng(4, i), &m, 5, &budget())).collect();
    assert_eq!(a, b);
}
