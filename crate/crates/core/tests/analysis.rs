mod common;

use common::unit_square;
use flight_core::analysis::{
    empirical_survival, fit_exponent, fit_length_exponent, fit_tail_exponent, fit_time_windows, length_window,
    log_grid, non_self_similar_bound, theorem_report, time_windows, whitney_dimension, Bootstrap, GridSpec,
    ReportInputs, SurvivalCurve, VerificationReport,
};
use flight_core::flight::{run_campaign, StepPolicy};
use flight_core::whitney::{count_generations, decompose};
use flight_core::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const EPS: f64 = 0.01;

/// Draws `τ` with `P(τ > t) = min(1, (ε/√t)^α)` by inverse CDF.
fn power_law_taus(alpha: f64, n: usize, seed: u64) -> Vec<(f64, bool)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let u: f64 = 1.0 - rng.random::<f64>();
            (EPS * EPS * u.powf(-2.0 / alpha), false)
        })
        .collect()
}

fn grid() -> GridSpec {
    GridSpec { t_min: EPS * EPS, t_max: 1e4 * EPS * EPS, points: 81 }
}

#[test]
fn synthetic_time_law_is_recovered() {
    let samples = power_law_taus(1.2, 200_000, 1);
    let curve = SurvivalCurve::from_durations(&samples, EPS, f64::INFINITY, &grid()).unwrap();
    // the curve follows the law within binomial error
    let n = samples.len() as f64;
    for (&t, &s) in curve.grid.iter().zip(&curve.survival) {
        let p = (EPS / t.sqrt()).powf(1.2).min(1.0);
        assert!((s - p).abs() <= 4.0 * (p * (1.0 - p) / n).sqrt() + 1e-12, "t={t}: {s} vs {p}");
    }
    let fit = fit_exponent(&curve, (10.0 * EPS * EPS, 1e3 * EPS * EPS), &Bootstrap::default()).unwrap();
    assert!((fit.exponent - 1.2).abs() <= 0.01, "{fit:?}");
    let (lo, hi) = fit.ci_90.unwrap();
    assert!(lo < fit.exponent && fit.exponent < hi);
    assert!(hi - lo < 0.05);
    assert!(fit.r_squared > 0.999);
}

#[test]
fn synthetic_length_law_is_recovered() {
    // stratified quantiles: no sampling noise in the tail
    let n = 200_000;
    let values: Vec<f64> = (0..n).map(|i| EPS * ((i as f64 + 0.5) / n as f64).powf(-1.0 / 1.26)).collect();
    let fit = fit_tail_exponent(&values, (4.0 * EPS, 100.0 * EPS), &Bootstrap::default()).unwrap();
    assert!((fit.exponent - 1.26).abs() <= 0.01, "{fit:?}");
    assert_eq!(fit.n_points, 16);
}

#[test]
fn constant_survival_has_zero_exponent() {
    let samples = vec![(1e6, false); 500];
    let curve = SurvivalCurve::from_durations(&samples, EPS, 1e7, &grid()).unwrap();
    let fit = fit_exponent(&curve, (1e-3, 0.1), &Bootstrap::default()).unwrap();
    assert!(fit.exponent.abs() <= 0.01, "{fit:?}");
}

#[test]
fn fit_consistency() {
    let samples = power_law_taus(1.1, 50_000, 3);
    let curve = SurvivalCurve::from_durations(&samples, EPS, f64::INFINITY, &grid()).unwrap();
    let window = (10.0 * EPS * EPS, 1e3 * EPS * EPS);
    let fit = fit_exponent(&curve, window, &Bootstrap { resamples: 0, seed: 0 }).unwrap();
    assert!(fit.ci_90.is_none());
    // regenerate durations from the fitted law at stratified quantiles
    let c = fit.intercept.exp();
    let n = 200_000;
    let regenerated: Vec<(f64, bool)> = (0..n)
        .map(|i| {
            let u = (i as f64 + 0.5) / n as f64;
            ((c / u).powf(2.0 / fit.exponent), false)
        })
        .collect();
    let again = SurvivalCurve::from_durations(&regenerated, EPS, f64::INFINITY, &grid()).unwrap();
    let refit = fit_exponent(&again, window, &Bootstrap { resamples: 0, seed: 0 }).unwrap();
    assert!((refit.exponent - fit.exponent).abs() <= 0.01, "{} vs {}", refit.exponent, fit.exponent);
}

#[test]
fn fit_errors() {
    let samples = power_law_taus(1.0, 1_000, 4);
    let curve = SurvivalCurve::from_durations(&samples, EPS, 1.0, &grid()).unwrap();
    assert!(matches!(fit_exponent(&curve, (1e-2, 1e-3), &Bootstrap::default()), Err(Error::Config(_))));
    assert!(matches!(fit_exponent(&curve, (1e-6, 1e-2), &Bootstrap::default()), Err(Error::Precondition(_))));
    // 1000 samples cannot reach survival 1e-4·…: the tail runs dry
    let short: Vec<(f64, bool)> = (1..=200).map(|i| (EPS * EPS * (1.0 + i as f64 / 100.0), false)).collect();
    let curve = SurvivalCurve::from_durations(&short, EPS, 1.0, &grid()).unwrap();
    assert!(matches!(
        fit_exponent(&curve, (EPS * EPS, 100.0 * EPS * EPS), &Bootstrap::default()),
        Err(Error::ZeroTail { .. })
    ));
}

#[test]
fn bootstrap_is_reproducible() {
    let samples = power_law_taus(1.2, 5_000, 5);
    let curve = SurvivalCurve::from_durations(&samples, EPS, f64::INFINITY, &grid()).unwrap();
    let window = (10.0 * EPS * EPS, 1e3 * EPS * EPS);
    let a = fit_exponent(&curve, window, &Bootstrap { resamples: 50, seed: 9 }).unwrap();
    let b = fit_exponent(&curve, window, &Bootstrap { resamples: 50, seed: 9 }).unwrap();
    let c = fit_exponent(&curve, window, &Bootstrap { resamples: 50, seed: 10 }).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.ci_90, c.ci_90);
}

proptest! {
    #[test]
    fn censoring_only_matters_beyond_t_max(
        raw in proptest::collection::vec(1e-5f64..1.0, 250..400),
        t_max in 0.6f64..0.95,
        stretch in 1.0f64..100.0,
    ) {
        let censored: Vec<(f64, bool)> = raw.iter().map(|&t| if t >= t_max { (t_max, true) } else { (t, false) }).collect();
        prop_assume!(censored.iter().filter(|s| !s.1).count() >= 100);
        // the same flights observed longer, censored ones ending anywhere past t_max
        let observed: Vec<(f64, bool)> = raw.iter().map(|&t| if t >= t_max { (t * stretch, false) } else { (t, false) }).collect();
        let g = GridSpec { t_min: 1e-5, t_max: 1.0, points: 60 };
        let a = SurvivalCurve::from_durations(&censored, EPS, t_max, &g).unwrap();
        let b = SurvivalCurve::from_durations(&observed, EPS, f64::INFINITY, &g).unwrap();
        for (i, &t) in a.grid.iter().enumerate() {
            prop_assert!(t < t_max);
            prop_assert_eq!(a.survival[i], b.survival[i]);
        }
    }

    #[test]
    fn survival_is_a_non_increasing_probability(raw in proptest::collection::vec(1e-5f64..1.0, 100..300)) {
        let samples: Vec<(f64, bool)> = raw.iter().map(|&t| (t, false)).collect();
        let curve = SurvivalCurve::from_durations(&samples, EPS, 2.0, &GridSpec { t_min: 1e-6, t_max: 1.5, points: 50 }).unwrap();
        prop_assert!(curve.survival.iter().all(|&s| (0.0..=1.0).contains(&s)));
        prop_assert!(curve.survival.windows(2).all(|w| w[1] <= w[0]));
        prop_assert!(curve.grid.windows(2).all(|w| w[1] > w[0]));
    }
}

#[test]
fn grid_helpers() {
    let g = log_grid(1e-3, 1.0, 4);
    assert!((g[1] - 1e-2).abs() < 1e-15 && (g[3] - 1.0).abs() < 1e-15);
    let spec = GridSpec::default_for(0.01, 1.0);
    assert!((spec.t_min - 2.5e-5).abs() < 1e-18);
    assert!(spec.points >= 90);
}

#[test]
fn survival_csv_columns() {
    let samples = power_law_taus(1.0, 500, 6);
    let curve = SurvivalCurve::from_durations(&samples, EPS, 1.0, &grid()).unwrap();
    let csv = curve.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,survival,stderr"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), curve.grid.len());
    assert!(rows.iter().all(|r| r.len() == 3 && r[2] >= 0.0));
}

#[test]
fn dimension_of_smooth_boundaries() {
    let square = whitney_dimension(&count_generations(&unit_square(), -16).unwrap()).unwrap();
    assert!((square.dimension - 1.0).abs() <= 0.05, "{square:?}");
    let disk = whitney_dimension(&count_generations(&common::disk(1.0), -15).unwrap()).unwrap();
    assert!((disk.dimension - 1.0).abs() <= 0.05, "{disk:?}");
}

fn square_report(target: Option<f64>) -> VerificationReport {
    let sq = unit_square();
    let w = decompose(&sq, -10).unwrap();
    let eps = 2f64.powi(-6);
    let r = w.r_omega().unwrap();
    let policy = StepPolicy::defaults(eps, r);
    let records = run_campaign(&sq, &w, eps, policy, 5_000, 31, 1).unwrap();
    let curve = empirical_survival(&records, eps, policy.t_max, &GridSpec::default_for(eps, policy.t_max)).unwrap();
    let boot = Bootstrap { resamples: 50, seed: 1 };
    let time_fits = fit_time_windows(&curve, &time_windows(eps, r).unwrap(), &boot).unwrap();
    let length_fit = fit_length_exponent(&records, length_window(eps, r), &boot).unwrap();
    let dimension_estimate = whitney_dimension(&w.layer_counts()).unwrap();
    let hypothesis = w.check_self_similarity_hypothesis().unwrap();
    theorem_report(&ReportInputs {
        domain_name: sq.name(),
        dimension: 2,
        epsilon: eps,
        r_omega: r,
        target_boundary_dimension: target,
        curve: &curve,
        time_fits: &time_fits,
        length_fit: &length_fit,
        dimension_estimate: &dimension_estimate,
        hypothesis: Some(&hypothesis),
        diagnostic: non_self_similar_bound(&w, &curve).unwrap(),
        tolerance: None,
    })
}

#[test]
fn report_is_deterministic_and_serializable() {
    let a = square_report(Some(1.0));
    let b = square_report(Some(1.0));
    assert_eq!(a, b);
    assert_eq!(a.time_check.target, 1.0);
    assert_eq!(a.length_check.target, 1.0);
    assert_eq!(a.time_check.tolerance, 0.15);
    let json = serde_json::to_string(&a).unwrap();
    assert_eq!(serde_json::from_str::<VerificationReport>(&json).unwrap(), a);
    let text = a.to_string();
    for needle in ["time law", "length law", "alpha [middle]", "overall"] {
        assert!(text.contains(needle), "{needle} missing from\n{text}");
    }
    assert!(!a.diagnostic.is_empty());
    assert!(a.diagnostic.iter().all(|p| p.bound.is_finite() && p.bound > 0.0));
}

#[test]
fn wrong_target_fails_the_report() {
    let report = square_report(Some(1.7));
    assert!(!report.pass);
    assert!(!report.time_check.pass && !report.length_check.pass);
    assert_eq!(report.time_check.tolerance, 0.2);
}
