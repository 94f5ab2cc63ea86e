mod common;

use apnc_core::{
    empirical_exponential_order, order_statistics, sample_realization, ChannelRealization, SnrPoint, TrialStream,
};
use common::ks_statistic;
use proptest::prelude::*;

#[test]
fn power_moment_over_a_million_draws() {
    let mut stream = TrialStream::new(0xfade, 0);
    let draws = 1_000_000 / 4;
    let mut sum = 0.0;
    for _ in 0..draws {
        let real = sample_realization(1, stream.rng()).unwrap();
        for g in real.gains_sr()[0].iter().chain(real.gains_rt()[0].iter()) {
            sum += g.norm_sqr();
        }
    }
    let mean = sum / 1_000_000.0;
    assert!((mean - 1.0).abs() <= 0.005, "mean |h|^2 = {mean}");
}

#[test]
fn power_is_exponential_ks() {
    let mut stream = TrialStream::new(77, 3);
    let mut samples: Vec<f64> = (0..100_000)
        .map(|_| sample_realization(1, stream.rng()).unwrap().gains_sr()[0][0].norm_sqr())
        .collect();
    let d = ks_statistic(&mut samples, |x| 1.0 - (-x).exp());
    // 1% critical value of the one-sample KS test, large-n form
    let critical = 1.6276 / (100_000f64).sqrt();
    assert!(d < critical, "KS statistic {d} >= {critical}");
}

#[test]
fn deep_fade_probability_has_order_minus_one() {
    let mut stream = TrialStream::new(4242, 0);
    let trials = 2_000_000;
    let mut points = Vec::new();
    for rho in [1e2, 1e3, 1e4] {
        let hits = (0..trials)
            .filter(|_| {
                let real = sample_realization(1, stream.rng()).unwrap();
                real.gains_sr()[0][0].norm_sqr() < 1.0 / rho
            })
            .count();
        points.push((rho, hits as f64 / trials as f64));
    }
    let b = empirical_exponential_order(&points).unwrap();
    assert!((b + 1.0).abs() <= 0.1, "order {b}");
}

#[test]
fn tail_of_link_order_tracks_rho_to_minus_v() {
    // P[v_link > v] = P[|h|^2 < rho^-v] should scale as rho^-v.
    let mut stream = TrialStream::new(99, 1);
    let trials = 1_000_000;
    for v in [0.5, 1.0] {
        let mut points = Vec::new();
        for rho_db in [20.0, 30.0, 40.0] {
            let rho = SnrPoint::from_db(rho_db).unwrap();
            let hits = (0..trials)
                .filter(|_| {
                    let real = sample_realization(1, stream.rng()).unwrap();
                    let stats = order_statistics(&real, rho).unwrap();
                    stats[0].v > v
                })
                .count();
            points.push((rho.rho(), hits as f64 / trials as f64));
        }
        let b = empirical_exponential_order(&points).unwrap();
        assert!((b + v).abs() <= 0.15, "v = {v}: order {b}");
    }
}

#[test]
fn streams_are_reproducible_across_relay_counts() {
    for n in 1..=4 {
        let a = sample_realization(n, TrialStream::new(12, 34).rng()).unwrap();
        let b = sample_realization(n, TrialStream::new(12, 34).rng()).unwrap();
        assert_eq!(a, b);
    }
}

proptest! {
    #[test]
    fn order_statistics_invert_the_gain(p in 1e-6f64..1e3, rho_db in 1.0f64..60.0) {
        let rho = SnrPoint::from_db(rho_db).unwrap();
        let real = ChannelRealization::from_powers(&[[p, p]], &[[p, p]]).unwrap();
        for s in order_statistics(&real, rho).unwrap() {
            let back = rho.rho().powf(-s.v);
            prop_assert!((back - p).abs() <= 1e-9 * p);
        }
    }
}
