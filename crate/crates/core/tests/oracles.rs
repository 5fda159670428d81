use std::time::Instant;

use flight_core::oracles::{
    cube_survival, interval_survival, interval_survival_eigen, interval_survival_reflection, normal_cdf,
    IntervalSurvivalQuery, DEFAULT_TERMS,
};
use proptest::prelude::*;

fn q(x: f64, a: f64, t: f64) -> IntervalSurvivalQuery {
    IntervalSurvivalQuery::new(x, a, t).unwrap()
}

/// 12 log-spaced times from 1e-3 to 10.
fn times() -> Vec<f64> {
    (0..12).map(|i| 10f64.powf(-3.0 + 4.0 * i as f64 / 11.0)).collect()
}

#[test]
fn series_agree_on_the_grid() {
    let start = Instant::now();
    let mut worst = 0f64;
    for i in 1..=9 {
        let x = i as f64 / 10.0;
        for &t in &times() {
            let r = interval_survival_reflection(q(x, 1.0, t), 60).unwrap();
            let e = interval_survival_eigen(q(x, 1.0, t), 200).unwrap();
            worst = worst.max((r - e).abs());
        }
    }
    assert!(worst <= 1e-10, "max disagreement {worst:e}");
    assert!(start.elapsed().as_secs_f64() < 1.0);
}

#[test]
fn automatic_choice_matches_converged_series() {
    for i in 1..=9 {
        let x = i as f64 / 10.0;
        for &t in &times() {
            let auto = interval_survival(q(x, 1.0, t), DEFAULT_TERMS).unwrap();
            let exact = interval_survival_reflection(q(x, 1.0, t), 60).unwrap();
            assert!((auto - exact).abs() <= 1e-12, "x={x} t={t}: {auto} vs {exact}");
        }
    }
}

#[test]
fn large_time_decay_rate_is_the_first_eigenvalue() {
    let (t1, t2) = (2.0, 4.0);
    let s1 = interval_survival_eigen(q(0.3, 1.0, t1), 50).unwrap();
    let s2 = interval_survival_eigen(q(0.3, 1.0, t2), 50).unwrap();
    let rate = (s2.ln() - s1.ln()) / (t2 - t1);
    let expected = -std::f64::consts::PI.powi(2) / 2.0;
    assert!((rate - expected).abs() < 1e-9, "{rate} vs {expected}");
}

#[test]
fn small_time_matches_the_half_line() {
    // near one endpoint the far endpoint is invisible: P = 2Φ(x/√t) − 1
    for (x, t) in [(0.01, 1e-4), (0.02, 1e-3), (0.05, 1e-3)] {
        let exact = interval_survival(q(x, 1.0, t), DEFAULT_TERMS).unwrap();
        let half_line = 2.0 * normal_cdf(x / t.sqrt()) - 1.0;
        let ratio = exact / half_line;
        assert!(ratio <= 1.0 + 1e-12 && ratio > 1.0 - 1e-12, "x={x} t={t}: ratio {ratio}");
    }
}

#[test]
fn square_center_reference() {
    // product of two converged eigen series
    let s = interval_survival_eigen(q(0.5, 1.0, 0.2), 100).unwrap();
    assert!((cube_survival(1.0, 2, 0.2, DEFAULT_TERMS).unwrap() - s * s).abs() < 1e-13);
    assert!((cube_survival(1.0, 3, 0.2, DEFAULT_TERMS).unwrap() - s * s * s).abs() < 1e-13);
}

proptest! {
    #[test]
    fn survival_decreases_in_time(x in 0.01f64..0.99, t in 1e-4f64..5.0, dt in 1e-4f64..1.0) {
        let a = interval_survival(q(x, 1.0, t), DEFAULT_TERMS).unwrap();
        let b = interval_survival(q(x, 1.0, t + dt), DEFAULT_TERMS).unwrap();
        prop_assert!(b <= a + 1e-14);
        prop_assert!((0.0..=1.0).contains(&a));
    }

    #[test]
    fn survival_is_symmetric(x in 0.01f64..0.99, t in 1e-4f64..5.0) {
        let a = interval_survival(q(x, 1.0, t), DEFAULT_TERMS).unwrap();
        let b = interval_survival(q(1.0 - x, 1.0, t), DEFAULT_TERMS).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn brownian_scaling(x in 0.01f64..0.99, t in 1e-3f64..2.0, a in 0.1f64..10.0) {
        let scaled = interval_survival(q(x * a, a, t * a * a), DEFAULT_TERMS).unwrap();
        let unit = interval_survival(q(x, 1.0, t), DEFAULT_TERMS).unwrap();
        prop_assert!((scaled - unit).abs() < 1e-12);
    }

    #[test]
    fn cube_survival_is_a_power(side in 0.1f64..4.0, d in 1usize..5, t in 1e-3f64..3.0) {
        let interval = interval_survival(q(side / 2.0, side, t), DEFAULT_TERMS).unwrap();
        let cube = cube_survival(side, d, t, DEFAULT_TERMS).unwrap();
        prop_assert!((cube - interval.powi(d as i32)).abs() < 1e-14);
    }
}
