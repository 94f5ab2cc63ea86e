mod common;

use apnc_core::{
    derive_point_seed, estimate_outage, fit_diversity, snr_grid_db, sweep, FitOptions, OutageEstimate, OutageEvent,
    RateLaw, RatePartition, Scenario, SeedRecord, SnrPoint, StopRule, Strategy, SweepRow, SweepSpec,
};
use common::{best_of_n_two_hop_df, single_link_outage};
use proptest::prelude::*;

fn pool(threads: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap()
}

#[test]
fn estimator_is_consistent_over_repeated_runs() {
    let cases: [(Scenario, f64, Box<dyn Fn(f64) -> f64>); 2] = [
        (Scenario::new(Strategy::SingleLink, 1), 1.0, Box::new(|rho| single_link_outage(rho, 1.0))),
        (
            Scenario::new(Strategy::Multihop, 2).with_event(OutageEvent::O1),
            0.5,
            Box::new(|rho| best_of_n_two_hop_df(rho, 0.5, 4.0, 2)),
        ),
    ];
    for (scenario, rate, oracle) in cases {
        let rho = SnrPoint::from_db(15.0).unwrap();
        let p = oracle(rho.rho());
        let law = RateLaw::fixed(rate, 0.0, 0.0).unwrap();
        let hits = (0..100u64)
            .filter(|&run| {
                let est = estimate_outage(&scenario, rho, &law, StopRule::Fixed { trials: 40_000 }, 1000 + run).unwrap();
                (est.p_hat - p).abs() <= 3.0 * est.stderr
            })
            .count();
        assert!(hits >= 99, "{:?}: only {hits}/100 runs within 3 stderr", scenario.strategy);
    }
}

#[test]
fn worker_count_does_not_change_results() {
    let sc = Scenario::new(Strategy::ActivePnc, 2);
    let law = RateLaw::fixed(1.0, 0.5, 0.25).unwrap();
    let rho = SnrPoint::from_db(12.0).unwrap();
    for stop in [
        StopRule::Fixed { trials: 150_001 },
        StopRule::RelativeStderr { target: 0.02, max_trials: 10_000_000 },
    ] {
        let runs: Vec<OutageEstimate> = [1, 2, 8]
            .iter()
            .map(|&k| pool(k).install(|| estimate_outage(&sc, rho, &law, stop, 5150).unwrap()))
            .collect();
        assert_eq!(runs[0], runs[1]);
        assert_eq!(runs[0], runs[2]);
    }
}

fn single_link_spec(trials: u64, seed: u64) -> SweepSpec {
    SweepSpec {
        scenario: Scenario::new(Strategy::SingleLink, 1),
        grid: snr_grid_db(10.0, 25.0, 5.0).unwrap(),
        rate_law: RateLaw::fixed(1.0, 0.0, 0.0).unwrap(),
        stop: StopRule::Fixed { trials },
        base_seed: seed,
    }
}

#[test]
fn sweep_shape_and_determinism() {
    let mut spec = single_link_spec(20_000, 7);
    spec.grid = snr_grid_db(10.0, 13.0, 3.0).unwrap();
    let a = sweep(&spec).unwrap();
    assert_eq!(a.len(), 2);
    let b = sweep(&spec).unwrap();
    assert_eq!(a, b);
    assert_eq!(a[1].estimate.seed.point_seed, derive_point_seed(7, 1));
    assert!(a[0].rho_db < a[1].rho_db);
}

#[test]
fn multihop_sweep_decreases() {
    let spec = SweepSpec {
        scenario: Scenario::new(Strategy::Multihop, 1),
        grid: snr_grid_db(10.0, 25.0, 5.0).unwrap(),
        rate_law: RateLaw::fixed(0.25, 0.0, 0.0).unwrap(),
        stop: StopRule::Fixed { trials: 300_000 },
        base_seed: 3,
    };
    let rows = sweep(&spec).unwrap();
    for w in rows.windows(2) {
        let (a, b) = (&w[0].estimate, &w[1].estimate);
        // Upper 3-sigma edge of the higher-SNR point sits below the lower edge of the previous one.
        assert!(b.p_hat + 3.0 * b.stderr < a.p_hat - 3.0 * a.stderr, "{} -> {}", a.p_hat, b.p_hat);
    }
    for row in &rows {
        let q = best_of_n_two_hop_df(10f64.powf(row.rho_db / 10.0), 0.25, 4.0, 1);
        let p = 1.0 - (1.0 - q).powi(2);
        assert!((row.estimate.p_hat - p).abs() <= 3.0 * row.estimate.stderr);
    }
}

#[test]
fn scaling_law_at_unit_snr_never_fails() {
    let rates = RatePartition::new(1.0, 0.3, 0.6).unwrap();
    let law = RateLaw::scaling(0.45, rates).unwrap();
    let rho = SnrPoint::from_linear(1.0).unwrap();
    for strategy in [
        Strategy::ActivePnc,
        Strategy::Multihop,
        Strategy::Dnc { overhearing_perfect: true },
        Strategy::Pnc { overhearing_perfect: true },
        Strategy::SingleLink,
    ] {
        let est = estimate_outage(&Scenario::new(strategy, 2), rho, &law, StopRule::Fixed { trials: 20_000 }, 1).unwrap();
        assert_eq!(est.failures, 0, "{strategy}");
        assert!(est.no_failure);
    }
}

fn oracle_rows(grid: &[f64]) -> Vec<SweepRow> {
    grid.iter()
        .map(|&db| {
            let p = single_link_outage(10f64.powf(db / 10.0), 1.0);
            let trials = 1u64 << 40;
            SweepRow {
                rho_db: db,
                estimate: OutageEstimate {
                    p_hat: p,
                    trials,
                    failures: (p * trials as f64) as u64,
                    stderr: 0.0,
                    no_failure: false,
                    upper_bound: None,
                    seed: SeedRecord { point_seed: 0, block_trials: 1 },
                },
            }
        })
        .collect()
}

#[test]
fn single_link_sweep_recovers_unit_diversity() {
    let rows = sweep(&single_link_spec(1_000_000, 11)).unwrap();
    let est = fit_diversity(&rows, 0.0, FitOptions::default()).unwrap();
    assert!((0.85..=1.1).contains(&est.d_hat), "d_hat {}", est.d_hat);
    let oracle = fit_diversity(&oracle_rows(&[10.0, 15.0, 20.0, 25.0]), 0.0, FitOptions::default()).unwrap();
    assert!((est.d_hat - oracle.d_hat).abs() < 0.03, "{} vs oracle {}", est.d_hat, oracle.d_hat);
}

#[test]
fn dropping_low_snr_points_steepens_the_oracle_fit() {
    let grid: Vec<f64> = (0..=10).map(|i| 5.0 + 2.5 * i as f64).collect();
    let mut prev = fit_diversity(&oracle_rows(&grid), 0.0, FitOptions::default()).unwrap().d_hat;
    for start in 1..grid.len() - 1 {
        let d = fit_diversity(&oracle_rows(&grid[start..]), 0.0, FitOptions::default()).unwrap().d_hat;
        assert!(d >= prev - 1e-12, "{d} < {prev}");
        assert!(d <= 1.0 + 1e-9);
        prev = d;
    }
}

proptest! {
    #[test]
    fn scaling_p_hat_leaves_slope_unchanged(k in 1e-3f64..1.0, d in 0.5f64..3.0) {
        let grid = [10.0, 14.0, 18.0, 22.0];
        let mut rows = oracle_rows(&grid);
        for row in rows.iter_mut() {
            row.estimate.p_hat = 10f64.powf(-d * row.rho_db / 10.0);
        }
        let base = fit_diversity(&rows, 0.0, FitOptions::default()).unwrap();
        for row in rows.iter_mut() {
            row.estimate.p_hat *= k;
        }
        let scaled = fit_diversity(&rows, 0.0, FitOptions::default()).unwrap();
        prop_assert!((base.d_hat - scaled.d_hat).abs() < 1e-10);
        prop_assert!((base.d_hat - d).abs() < 1e-10);
    }
}
