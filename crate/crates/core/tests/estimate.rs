use gwi_core::estimate::*;
use gwi_core::simulate::SimBudget;
use gwi_core::{Error, Model, ModelSpec};

fn m1() -> Model {
    Model::new(ModelSpec::heavy(0.3, 0.7, 0.5, 1.0)).unwrap()
}

#[test]
fn one_step_exact_channel_is_the_immigration_tail() {
    let m = m1();
    // the window is empty at n = 1, so the grid is given explicitly
    let xs = geometric_grid(2.0, 1e6, 6).unwrap();
    let r = sweep_sn(&m, 1, &xs, &SweepOptions::default()).unwrap();
    for row in &r.rows {
        let t = m.eta_tail(row.x.floor() as u64);
        assert!((row.exact_hi.unwrap() / t - 1.0).abs() < 1e-8, "x={}", row.x);
        assert!((row.exact_ratio.unwrap() - t / row.prediction).abs() < 1e-8);
    }
}

#[test]
fn monte_carlo_agrees_with_exact_channel() {
    let m = m1();
    let opts = SweepOptions {
        reps: 100_000,
        seed: 31,
        level: 0.99,
        budget: SimBudget {
            pop_cap: 1_000_000,
            gen_cap: 1_000,
            work_cap: 10_000_000,
        },
        ..SweepOptions::default()
    };
    let r = sweep_theorem(&m, 4, 0.1, 0.5, 12, &opts).unwrap();
    let inside = r
        .rows
        .iter()
        .filter(|row| {
            let e = row.mc.unwrap();
            e.ci_lo <= row.exact_hi.unwrap() && row.exact_lo.unwrap() <= e.ci_hi
        })
        .count();
    assert!(inside as f64 >= 0.99 * r.rows.len() as f64, "{inside}/{}", r.rows.len());
    assert!(r.abort_fraction < 0.01);
    let w = r.window.unwrap();
    assert!(r.rows.iter().all(|row| row.x >= w.x_lo * (1.0 - 1e-12) && row.x <= w.x_hi * (1.0 + 1e-12)));
}

#[test]
fn merged_counts_do_not_depend_on_partition() {
    let m = m1();
    let budget = SimBudget::default();
    let xs = [2.0, 20.0, 200.0];
    let sampler = |rng: &mut gwi_core::rng::ReplicaRng| gwi_core::simulate::simulate_sn(rng, &m, 3, &budget);
    let whole = mc_tail(sampler, &xs, 3 * CHUNK + 17, 12, 1, 0.95).unwrap();
    let split = mc_tail(sampler, &xs, 3 * CHUNK + 17, 12, 3, 0.95).unwrap();
    assert_eq!(whole, split);
}

#[test]
fn stationary_sweep_single_point_and_errors() {
    let m = m1();
    let r = sweep_stationary(&m, &[1000.0], 0, &SweepOptions::default()).unwrap();
    assert_eq!(r.rows.len(), 1);
    assert!((r.rows[0].exact_ratio.unwrap() - 1.0).abs() < 0.1);
    assert!(matches!(sweep_stationary(&m, &[], 0, &SweepOptions::default()), Err(Error::DegenerateGrid(_))));
    assert!(matches!(
        sweep_theorem(&m, 8, 0.1, 0.5, 0, &SweepOptions::default()),
        Err(Error::DegenerateGrid(_))
    ));
}

#[test]
fn report_serializations() {
    let m = m1();
    let r = sweep_theorem(&m, 2, 0.1, 0.5, 3, &SweepOptions::default()).unwrap();
    let csv = r.to_csv();
    assert!(csv.starts_with("x,p_hat,ci_lo,ci_hi,prediction,ratio,exact_lo,exact_hi"));
    assert_eq!(csv.lines().count(), 4);
    let back: SweepReport = serde_json::from_str(&r.to_json()).unwrap();
    assert_eq!(back.to_csv(), csv);
}
