//! Flight ensembles to numbers: empirical survival, power-law tail fits
//! with bootstrap intervals, Whitney dimension and the verification report.

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::flight::{flight_rng, FlightRecord};
use crate::whitney::{HypothesisReport, WhitneyDecomposition};
use crate::{Error, Result};

/// Minimum number of uncensored flights an estimate is built from.
pub const MIN_UNCENSORED: usize = 100;
pub const DEFAULT_RESAMPLES: usize = 200;
/// Tolerance on exponents when the boundary dimension is an integer.
pub const SMOOTH_TOLERANCE: f64 = 0.15;
/// Tolerance on exponents for fractal boundaries (covers the log factor).
pub const FRACTAL_TOLERANCE: f64 = 0.2;

const BOOTSTRAP_SALT: u64 = 0x2545_f491_4f6c_dd1d;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares `y ≈ intercept + slope·x`.
pub fn least_squares(xs: &[f64], ys: &[f64]) -> LineFit {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    LineFit { slope, intercept: my - slope * mx, r_squared }
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub t_min: f64,
    pub t_max: f64,
    pub points: usize,
}

impl GridSpec {
    /// From `ε²/4` to `t_max`, 20 points per decade.
    pub fn default_for(epsilon: f64, t_max: f64) -> Self {
        let t_min = epsilon * epsilon / 4.0;
        let decades = (t_max / t_min).log10();
        Self { t_min, t_max, points: (20.0 * decades).ceil() as usize + 1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurvivalCurve {
    pub grid: Vec<f64>,
    pub survival: Vec<f64>,
    pub n_samples: usize,
    pub epsilon: f64,
    pub t_max: f64,
    /// Sorted durations (censored ones at `t_max`), kept for resampling.
    #[serde(skip)]
    durations: Vec<f64>,
}

impl SurvivalCurve {
    /// Builds the curve from `(tau, censored)` pairs. Grid points at or
    /// beyond `t_max` are dropped.
    pub fn from_durations(samples: &[(f64, bool)], epsilon: f64, t_max: f64, grid: &GridSpec) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InsufficientData("no flight records".into()));
        }
        let uncensored = samples.iter().filter(|(_, c)| !c).count();
        if uncensored < MIN_UNCENSORED {
            return Err(Error::InsufficientData(format!(
                "{uncensored} uncensored flights, need at least {MIN_UNCENSORED}"
            )));
        }
        if !(grid.t_min > 0.0 && grid.t_max > grid.t_min && grid.points >= 2) {
            return Err(Error::Config(format!("invalid survival grid {grid:?}")));
        }
        let mut durations: Vec<f64> = samples.iter().map(|&(t, c)| if c { t_max } else { t }).collect();
        durations.sort_by(f64::total_cmp);
        let n = durations.len();
        let grid: Vec<f64> = log_grid(grid.t_min, grid.t_max, grid.points).into_iter().filter(|&t| t < t_max).collect();
        let survival = grid.iter().map(|&t| (n - durations.partition_point(|&d| d <= t)) as f64 / n as f64).collect();
        Ok(Self { grid, survival, n_samples: n, epsilon, t_max, durations })
    }

    pub fn stderr(&self) -> Vec<f64> {
        let n = self.n_samples as f64;
        self.survival.iter().map(|p| (p * (1.0 - p) / n).sqrt()).collect()
    }

    /// Empirical `P(τ > t)` at an arbitrary `t < t_max`.
    pub fn at(&self, t: f64) -> f64 {
        let n = self.durations.len();
        (n - self.durations.partition_point(|&d| d <= t)) as f64 / n as f64
    }

    /// CSV with columns `t,survival,stderr`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,survival,stderr\n");
        for ((t, s), e) in self.grid.iter().zip(&self.survival).zip(self.stderr()) {
            let _ = writeln!(out, "{t:e},{s:e},{e:e}");
        }
        out
    }
}

/// Empirical survival of flight durations.
pub fn empirical_survival<const D: usize>(
    records: &[FlightRecord<D>],
    epsilon: f64,
    t_max: f64,
    grid: &GridSpec,
) -> Result<SurvivalCurve> {
    let samples: Vec<(f64, bool)> = records.iter().map(|r| (r.tau, r.censored)).collect();
    SurvivalCurve::from_durations(&samples, epsilon, t_max, grid)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bootstrap {
    pub resamples: usize,
    pub seed: u64,
}

impl Default for Bootstrap {
    fn default() -> Self {
        Self { resamples: DEFAULT_RESAMPLES, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub exponent: f64,
    pub intercept: f64,
    pub window: (f64, f64),
    /// 5%–95% bootstrap percentiles; absent when no resample was usable.
    pub ci_90: Option<(f64, f64)>,
    pub r_squared: f64,
    pub n_points: usize,
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (i, frac) = (pos.floor() as usize, pos.fract());
    if i + 1 < sorted.len() {
        sorted[i] * (1.0 - frac) + sorted[i + 1] * frac
    } else {
        sorted[i]
    }
}

/// Fits `P(X > x) ≈ C·x^{−exponent/scale}` on `points` from sorted samples,
/// i.e. `exponent = −scale · slope` of `log P` against `log x`.
fn fit_tail(
    sorted: &[f64],
    points: &[f64],
    scale: f64,
    window: (f64, f64),
    bootstrap: &Bootstrap,
) -> Result<ExponentFit> {
    if points.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "window [{}, {}] holds {} grid points, need at least 3",
            window.0,
            window.1,
            points.len()
        )));
    }
    let n = sorted.len();
    // bins[j]: number of window points strictly below sample j
    let bins: Vec<usize> = sorted.iter().map(|&v| points.partition_point(|&p| p < v)).collect();
    let tail_from_hist = |hist: &[usize]| -> Vec<f64> {
        // tail[i] = #{samples with bin > i}
        let mut tail = vec![0usize; points.len()];
        let mut acc = 0usize;
        for i in (0..points.len()).rev() {
            acc += hist[i + 1];
            tail[i] = acc;
        }
        tail.into_iter().map(|c| c as f64 / n as f64).collect()
    };
    let mut hist = vec![0usize; points.len() + 1];
    for &b in &bins {
        hist[b] += 1;
    }
    let tail = tail_from_hist(&hist);
    if let Some(i) = tail.iter().position(|&p| p <= 0.0) {
        return Err(Error::ZeroTail { at: points[i], lo: window.0, hi: window.1 });
    }
    let xs: Vec<f64> = points.iter().map(|p| p.ln()).collect();
    let ys: Vec<f64> = tail.iter().map(|p| p.ln()).collect();
    let fit = least_squares(&xs, &ys);

    let mut boots: Vec<f64> = (0..bootstrap.resamples as u64)
        .into_par_iter()
        .filter_map(|b| {
            let mut rng = flight_rng(bootstrap.seed ^ BOOTSTRAP_SALT, b);
            let mut hist = vec![0usize; points.len() + 1];
            for _ in 0..n {
                hist[bins[rng.random_range(0..n)]] += 1;
            }
            let tail = tail_from_hist(&hist);
            if tail.iter().any(|&p| p <= 0.0) {
                return None;
            }
            let ys: Vec<f64> = tail.iter().map(|p| p.ln()).collect();
            Some(-scale * least_squares(&xs, &ys).slope)
        })
        .collect();
    boots.sort_by(f64::total_cmp);
    let ci_90 = (!boots.is_empty()).then(|| (percentile(&boots, 0.05), percentile(&boots, 0.95)));
    Ok(ExponentFit {
        exponent: -scale * fit.slope,
        intercept: fit.intercept,
        window,
        ci_90,
        r_squared: fit.r_squared,
        n_points: points.len(),
    })
}

fn check_window(window: (f64, f64)) -> Result<()> {
    if window.0 > 0.0 && window.1 > window.0 && window.1.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("invalid fit window {window:?}")))
    }
}

/// Fits `P(τ > t) ≈ C·(ε/√t)^α` on the curve's grid points inside `window`;
/// `α = −2·slope` of `log survival` against `log t`.
pub fn fit_exponent(curve: &SurvivalCurve, window: (f64, f64), bootstrap: &Bootstrap) -> Result<ExponentFit> {
    check_window(window)?;
    let (first, last) = (curve.grid[0], *curve.grid.last().unwrap_or(&0.0));
    let slack = 1e-9;
    if window.0 < first * (1.0 - slack) || window.1 > last * (1.0 + slack) {
        return Err(Error::Precondition(format!("window {window:?} outside the curve support [{first}, {last}]")));
    }
    let points: Vec<f64> = curve.grid.iter().copied().filter(|&t| t >= window.0 && t <= window.1).collect();
    fit_tail(&curve.durations, &points, 2.0, window, bootstrap)
}

/// Fits `P(X > r) ≈ C·(ε/r)^β` to samples `X` on 16 log-spaced radii in
/// `window`.
pub fn fit_tail_exponent(values: &[f64], window: (f64, f64), bootstrap: &Bootstrap) -> Result<ExponentFit> {
    check_window(window)?;
    if values.len() < MIN_UNCENSORED {
        return Err(Error::InsufficientData(format!("{} samples, need at least {MIN_UNCENSORED}", values.len())));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let points = log_grid(window.0, window.1, 16);
    fit_tail(&sorted, &points, 1.0, window, bootstrap)
}

/// Length law: exponent of `P(displacement > r)` over uncensored flights.
pub fn fit_length_exponent<const D: usize>(
    records: &[FlightRecord<D>],
    window_r: (f64, f64),
    bootstrap: &Bootstrap,
) -> Result<ExponentFit> {
    let displacements: Vec<f64> = records.iter().filter(|r| !r.censored).map(|r| r.displacement).collect();
    fit_tail_exponent(&displacements, window_r, bootstrap)
}

/// Three nested time windows; acceptance uses `middle`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NestedWindows {
    pub wide: (f64, f64),
    pub middle: (f64, f64),
    pub narrow: (f64, f64),
}

/// `middle = [10ε², R²/10]`, `wide = [10ε², R²/4]`, `narrow` = the decade
/// geometrically centered in `middle`.
pub fn time_windows(epsilon: f64, r_omega: f64) -> Result<NestedWindows> {
    let middle = (10.0 * epsilon * epsilon, r_omega * r_omega / 10.0);
    if middle.1 < 10.0 * middle.0 * (1.0 - 1e-12) {
        return Err(Error::Precondition(format!("time window {middle:?} spans less than a decade; decrease epsilon")));
    }
    Ok(nested_windows(middle, r_omega * r_omega / 4.0))
}

/// Windows around a given `middle`: `wide` extends it up to `wide_hi`,
/// `narrow` is the decade geometrically centered in it (or all of it).
pub fn nested_windows(middle: (f64, f64), wide_hi: f64) -> NestedWindows {
    let center = (middle.0 * middle.1).sqrt();
    let half = 10f64.sqrt();
    NestedWindows {
        wide: (middle.0, wide_hi.max(middle.1)),
        middle,
        narrow: ((center / half).max(middle.0), (center * half).min(middle.1)),
    }
}

/// `[4ε, R/4]`.
pub fn length_window(epsilon: f64, r_omega: f64) -> (f64, f64) {
    (4.0 * epsilon, r_omega / 4.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowFits {
    pub wide: ExponentFit,
    pub middle: ExponentFit,
    pub narrow: ExponentFit,
}

pub fn fit_time_windows(curve: &SurvivalCurve, windows: &NestedWindows, bootstrap: &Bootstrap) -> Result<WindowFits> {
    Ok(WindowFits {
        wide: fit_exponent(curve, windows.wide, bootstrap)?,
        middle: fit_exponent(curve, windows.middle, bootstrap)?,
        narrow: fit_exponent(curve, windows.narrow, bootstrap)?,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionEstimate {
    pub dimension: f64,
    pub r_squared: f64,
    /// Range of `j = −k` used in the fit.
    pub used: (i32, i32),
    /// `(j, W_j)` for every generation with a positive count.
    pub counts: Vec<(i32, usize)>,
    /// `(j, W_{j+1}/W_j)`.
    pub ratios: Vec<(i32, f64)>,
}

fn positive_counts(layer_counts: &BTreeMap<i32, usize>) -> Vec<(i32, usize)> {
    let mut counts: Vec<(i32, usize)> = layer_counts.iter().filter(|(_, &w)| w > 0).map(|(&k, &w)| (-k, w)).collect();
    counts.sort();
    counts
}

fn fit_counts(counts: Vec<(i32, usize)>, used: &[(i32, usize)]) -> DimensionEstimate {
    let ratios = counts.windows(2).map(|w| (w[0].0, w[1].1 as f64 / w[0].1 as f64)).collect();
    let xs: Vec<f64> = used.iter().map(|&(j, _)| j as f64).collect();
    let ys: Vec<f64> = used.iter().map(|&(_, w)| (w as f64).log2()).collect();
    let fit = least_squares(&xs, &ys);
    DimensionEstimate {
        dimension: fit.slope,
        r_squared: fit.r_squared,
        used: (used[0].0, used[used.len() - 1].0),
        counts,
        ratios,
    }
}

/// Slope of `log₂ W_j` against `j = −k`, dropping the coarsest and the
/// finest generation.
pub fn whitney_dimension(layer_counts: &BTreeMap<i32, usize>) -> Result<DimensionEstimate> {
    let counts = positive_counts(layer_counts);
    if counts.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "dimension estimate needs at least 4 generations, have {}",
            counts.len()
        )));
    }
    let used = counts[1..counts.len() - 1].to_vec();
    Ok(fit_counts(counts, &used))
}

/// Whitney cubes whose distance band `[√d·ℓ, 4√d·ℓ]` ends below
/// `SCALING_FRACTION·R_Ω` only see the boundary, not the global shape.
pub const SCALING_FRACTION: f64 = 1.0 / 16.0;

/// Range of `j = −k` in the boundary scaling regime: `4√d·2^{−j} ≤
/// SCALING_FRACTION·R_Ω` and `2^{−j} ≥ cutoff` when a cutoff scale is known.
pub fn scaling_generations(r_omega: f64, dimension: usize, cutoff: Option<f64>) -> (i32, i32) {
    let band = 4.0 * (dimension as f64).sqrt();
    let j_lo = (band / (SCALING_FRACTION * r_omega)).log2().ceil() as i32;
    let j_hi = cutoff.map_or(i32::MAX, |c| (-c.log2() + 1e-9).floor() as i32);
    (j_lo, j_hi)
}

/// Slope of `log₂ W_j` against `j` over the generations in `range`
/// (inclusive); needs at least 3 of them with positive counts.
pub fn whitney_dimension_in(layer_counts: &BTreeMap<i32, usize>, range: (i32, i32)) -> Result<DimensionEstimate> {
    let counts = positive_counts(layer_counts);
    let used: Vec<(i32, usize)> = counts.iter().copied().filter(|&(j, _)| j >= range.0 && j <= range.1).collect();
    if used.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "dimension estimate over j in [{}, {}] needs at least 3 generations, have {}",
            range.0,
            range.1,
            used.len()
        )));
    }
    Ok(fit_counts(counts, &used))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticPoint {
    pub t: f64,
    /// Layer-count upper-bound shape (constants and log factor omitted).
    pub bound: f64,
    pub empirical: f64,
}

/// Upper-bound shape without self-similarity:
/// `sup_N (2^{−Nd} + Σ_{k≤N} (#S_{√t/2^k}/#S_ε)·(2^{−k}√t/ε)^{d−2})`,
/// with `N` ranging over the scales `√t/2^N ≥ ε`, at every curve grid point
/// with `ε² < t ≤ R_Ω²`.
pub fn non_self_similar_bound<const D: usize>(
    decomposition: &WhitneyDecomposition<D>,
    curve: &SurvivalCurve,
) -> Result<Vec<DiagnosticPoint>> {
    let eps = curve.epsilon;
    let r = decomposition.r_omega()?;
    let s_eps = decomposition.layer_size(eps);
    if s_eps == 0 {
        return Err(Error::EmptyLayer(eps));
    }
    let d = D as f64;
    let mut out = Vec::new();
    for (&t, &empirical) in curve.grid.iter().zip(&curve.survival) {
        let st = t.sqrt();
        if t <= eps * eps || st > r {
            continue;
        }
        let mut partial = 0.0;
        let mut best = f64::MIN;
        let mut k = 0;
        loop {
            let rk = st / 2f64.powi(k);
            if rk < eps {
                break;
            }
            let ratio = decomposition.layer_size(rk) as f64 / s_eps as f64;
            partial += ratio * (rk / eps).powf(d - 2.0);
            best = best.max(2f64.powf(-(k as f64) * d) + partial);
            k += 1;
        }
        out.push(DiagnosticPoint { t, bound: best, empirical });
    }
    Ok(out)
}

/// Everything the verification report is assembled from.
#[derive(Clone, Debug)]
pub struct ReportInputs<'a> {
    pub domain_name: &'a str,
    pub dimension: usize,
    pub epsilon: f64,
    pub r_omega: f64,
    /// Boundary dimension the exponents are checked against; falls back to
    /// the measured one when `None`.
    pub target_boundary_dimension: Option<f64>,
    pub curve: &'a SurvivalCurve,
    pub time_fits: &'a WindowFits,
    pub length_fit: &'a ExponentFit,
    pub dimension_estimate: &'a DimensionEstimate,
    pub hypothesis: Option<&'a HypothesisReport>,
    pub diagnostic: Vec<DiagnosticPoint>,
    /// Overrides [`SMOOTH_TOLERANCE`] / [`FRACTAL_TOLERANCE`].
    pub tolerance: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub target: f64,
    pub measured: f64,
    pub ci_90: Option<(f64, f64)>,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    fn new(target: f64, fit: &ExponentFit, tolerance: f64) -> Self {
        Self {
            target,
            measured: fit.exponent,
            ci_90: fit.ci_90,
            tolerance,
            pass: (fit.exponent - target).abs() <= tolerance,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub domain: String,
    pub dimension: usize,
    pub epsilon: f64,
    pub r_omega: f64,
    pub n_samples: usize,
    pub censored_fraction: f64,
    pub target_boundary_dimension: f64,
    pub measured_boundary_dimension: f64,
    /// `d̂_M + 2 − d` from the measured dimension.
    pub predicted_time_exponent: f64,
    pub time_fits: WindowFits,
    pub time_check: Check,
    pub length_fit: ExponentFit,
    pub length_check: Check,
    pub hypothesis: Option<HypothesisReport>,
    pub diagnostic: Vec<DiagnosticPoint>,
    pub pass: bool,
}

fn is_integral(x: f64) -> bool {
    (x - x.round()).abs() < 1e-9
}

/// Compares measured exponents with `d_M + 2 − d` (time) and `d_M − (d − 2)`
/// (length).
pub fn theorem_report(inputs: &ReportInputs<'_>) -> VerificationReport {
    let d = inputs.dimension as f64;
    let measured_dm = inputs.dimension_estimate.dimension;
    let target_dm = inputs.target_boundary_dimension.unwrap_or(measured_dm);
    let tolerance =
        inputs.tolerance.unwrap_or(if is_integral(target_dm) { SMOOTH_TOLERANCE } else { FRACTAL_TOLERANCE });
    let time_check = Check::new(target_dm + 2.0 - d, &inputs.time_fits.middle, tolerance);
    let length_check = Check::new(target_dm - (d - 2.0), inputs.length_fit, tolerance);
    let censored = inputs.curve.durations.iter().filter(|&&t| t >= inputs.curve.t_max).count();
    VerificationReport {
        domain: inputs.domain_name.to_string(),
        dimension: inputs.dimension,
        epsilon: inputs.epsilon,
        r_omega: inputs.r_omega,
        n_samples: inputs.curve.n_samples,
        censored_fraction: censored as f64 / inputs.curve.n_samples as f64,
        target_boundary_dimension: target_dm,
        measured_boundary_dimension: measured_dm,
        predicted_time_exponent: measured_dm + 2.0 - d,
        time_fits: inputs.time_fits.clone(),
        pass: time_check.pass && length_check.pass,
        time_check,
        length_fit: inputs.length_fit.clone(),
        length_check,
        hypothesis: inputs.hypothesis.cloned(),
        diagnostic: inputs.diagnostic.clone(),
    }
}

fn fmt_ci(ci: Option<(f64, f64)>) -> String {
    ci.map_or_else(|| "n/a".to_string(), |(a, b)| format!("[{a:.4}, {b:.4}]"))
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "domain            {}", self.domain)?;
        writeln!(f, "dimension         {}", self.dimension)?;
        writeln!(f, "epsilon           {:.6e}", self.epsilon)?;
        writeln!(f, "R_omega           {:.6}", self.r_omega)?;
        writeln!(f, "flights           {} ({:.3}% censored)", self.n_samples, 100.0 * self.censored_fraction)?;
        writeln!(
            f,
            "boundary dim      target {:.5}, measured {:.5}",
            self.target_boundary_dimension, self.measured_boundary_dimension
        )?;
        writeln!(f, "predicted alpha   {:.5} (from measured dimension)", self.predicted_time_exponent)?;
        for (name, fit) in
            [("wide", &self.time_fits.wide), ("middle", &self.time_fits.middle), ("narrow", &self.time_fits.narrow)]
        {
            writeln!(
                f,
                "alpha [{name:>6}]   {:.4}  ci90 {}  window [{:.3e}, {:.3e}]  r2 {:.4}",
                fit.exponent,
                fmt_ci(fit.ci_90),
                fit.window.0,
                fit.window.1,
                fit.r_squared
            )?;
        }
        let verdict = |pass: bool| if pass { "PASS" } else { "FAIL" };
        writeln!(
            f,
            "time law          {}  |{:.4} - {:.4}| <= {}",
            verdict(self.time_check.pass),
            self.time_check.measured,
            self.time_check.target,
            self.time_check.tolerance
        )?;
        writeln!(
            f,
            "length law        {}  |{:.4} - {:.4}| <= {}  ci90 {}  window [{:.3e}, {:.3e}]",
            verdict(self.length_check.pass),
            self.length_check.measured,
            self.length_check.target,
            self.length_check.tolerance,
            fmt_ci(self.length_fit.ci_90),
            self.length_fit.window.0,
            self.length_fit.window.1
        )?;
        if let Some(h) = &self.hypothesis {
            writeln!(
                f,
                "layer scaling     fitted d_M {:.4}, spread {:.3} ({})",
                h.fitted_dimension,
                h.spread,
                if h.holds { "holds" } else { "fails" }
            )?;
        }
        if !self.diagnostic.is_empty() {
            writeln!(f, "layer-count bound (t, bound, empirical):")?;
            for p in &self.diagnostic {
                writeln!(f, "  {:.4e}  {:.4e}  {:.4e}", p.t, p.bound, p.empirical)?;
            }
        }
        writeln!(f, "overall           {}", verdict(self.pass))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(durations: &[f64], t_max: f64, grid: GridSpec) -> SurvivalCurve {
        let s: Vec<(f64, bool)> = durations.iter().map(|&t| (t, t >= t_max)).collect();
        SurvivalCurve::from_durations(&s, 0.01, t_max, &grid).unwrap()
    }

    #[test]
    fn step_function_survival() {
        let taus = vec![1.0; 200];
        let c = curve(&taus, 10.0, GridSpec { t_min: 0.1, t_max: 9.0, points: 41 });
        for (t, s) in c.grid.iter().zip(&c.survival) {
            assert_eq!(*s, if *t < 1.0 { 1.0 } else { 0.0 }, "t={t}");
        }
    }

    #[test]
    fn survival_is_one_minus_ecdf() {
        let taus: Vec<f64> = (1..=300).map(|i| i as f64 * 0.01).collect();
        let c = curve(&taus, 10.0, GridSpec { t_min: 0.005, t_max: 5.0, points: 30 });
        for (t, s) in c.grid.iter().zip(&c.survival) {
            let ecdf = taus.iter().filter(|&&x| x <= *t).count() as f64 / taus.len() as f64;
            assert!((*s - (1.0 - ecdf)).abs() < 1e-15);
        }
    }

    #[test]
    fn grid_is_truncated_at_t_max() {
        let taus: Vec<f64> = (1..=200).map(|i| i as f64 * 0.01).collect();
        let c = curve(&taus, 1.5, GridSpec { t_min: 0.01, t_max: 4.0, points: 50 });
        assert!(c.grid.iter().all(|&t| t < 1.5));
    }

    #[test]
    fn empty_and_thin_inputs_are_rejected() {
        let grid = GridSpec { t_min: 0.1, t_max: 1.0, points: 10 };
        assert!(SurvivalCurve::from_durations(&[], 0.1, 1.0, &grid).is_err());
        let few = vec![(0.5, false); 50];
        assert!(matches!(SurvivalCurve::from_durations(&few, 0.1, 1.0, &grid), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn zero_tail_in_window_is_reported() {
        let taus: Vec<f64> = (1..=200).map(|i| 0.001 * i as f64).collect();
        let c = curve(&taus, 10.0, GridSpec { t_min: 0.001, t_max: 5.0, points: 40 });
        let err = fit_exponent(&c, (0.01, 1.0), &Bootstrap::default()).unwrap_err();
        assert!(matches!(err, Error::ZeroTail { .. }), "{err}");
    }

    #[test]
    fn least_squares_exact_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys = [1.0, 3.0, 5.0, 7.0];
        let f = least_squares(&xs, &ys);
        assert!((f.slope - 2.0).abs() < 1e-15 && (f.intercept - 1.0).abs() < 1e-15);
        assert!((f.r_squared - 1.0).abs() < 1e-15);
    }

    #[test]
    fn dimension_needs_four_generations() {
        let counts: BTreeMap<i32, usize> = [(-3, 10), (-4, 20), (-5, 40)].into_iter().collect();
        assert!(whitney_dimension(&counts).is_err());
        assert!(whitney_dimension(&BTreeMap::new()).is_err());
    }

    #[test]
    fn windowed_dimension_ignores_outside_generations() {
        // bulk-dominated coarse generations break the doubling
        let mut counts: BTreeMap<i32, usize> = (2..12).map(|j| (-j, 5usize << j)).collect();
        counts.insert(-2, 1);
        counts.insert(-3, 200);
        let est = whitney_dimension_in(&counts, (5, 11)).unwrap();
        assert!((est.dimension - 1.0).abs() < 1e-12);
        assert_eq!(est.used, (5, 11));
        assert!(whitney_dimension_in(&counts, (10, 11)).is_err());
    }

    #[test]
    fn scaling_generations_for_unit_square() {
        // 4√2·2^{-j} ≤ 0.5/16 first holds at j = 8
        assert_eq!(scaling_generations(0.5, 2, None), (8, i32::MAX));
        assert_eq!(scaling_generations(0.5, 2, Some(3f64.powi(-7))).1, 11);
        assert_eq!(scaling_generations(0.5, 2, Some(2f64.powi(-10))).1, 10);
    }

    #[test]
    fn dimension_of_exact_doubling() {
        let counts: BTreeMap<i32, usize> = (2..9).map(|j| (-j, 3usize << j)).collect();
        let est = whitney_dimension(&counts).unwrap();
        assert!((est.dimension - 1.0).abs() < 1e-12);
        assert_eq!(est.used, (3, 7));
        assert!(est.ratios.iter().all(|&(_, r)| (r - 2.0).abs() < 1e-12));
    }

    #[test]
    fn nested_windows() {
        let w = time_windows(2f64.powi(-7), 0.3).unwrap();
        assert!(w.wide.0 <= w.middle.0 && w.middle.0 <= w.narrow.0);
        assert!(w.narrow.1 <= w.middle.1 && w.middle.1 <= w.wide.1);
        assert!((w.narrow.1 / w.narrow.0 - 10.0).abs() < 1e-9);
        assert!(time_windows(0.1, 0.3).is_err());
    }
}
