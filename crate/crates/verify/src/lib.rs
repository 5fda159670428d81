//! Acceptance criteria for the workspace. The checks live in
//! `tests/acceptance.rs`; the thresholds they use are fixed here.

/// Largest allowed reflection/eigenfunction disagreement (C1).
pub const SERIES_AGREEMENT: f64 = 1e-10;
/// Binomial standard errors allowed against the cube law (C2).
pub const CUBE_LAW_Z: f64 = 3.0;
/// Range for the smooth-boundary time exponent (C3).
pub const SMOOTH_ALPHA_RANGE: (f64, f64) = (0.85, 1.15);
/// Tolerance on fractal exponents around `log 4 / log 3` (C4, C5).
pub const FRACTAL_TOLERANCE: f64 = 0.2;
/// Tolerance on the smooth length exponent around 1 (C5).
pub const SMOOTH_BETA_TOLERANCE: f64 = 0.15;
/// Tolerance on Whitney-count dimensions (C6).
pub const DIMENSION_TOLERANCE: f64 = 0.05;
/// Lower bound on the estimated harmonic-measure constant (C7).
pub const DELTA_REGULARITY_FLOOR: f64 = 0.05;

/// Wall-clock budgets in seconds.
pub const C1_BUDGET: f64 = 1.0;
pub const C2_BUDGET: f64 = 300.0;
pub const C3_BUDGET: f64 = 900.0;
pub const C4_BUDGET: f64 = 3600.0;
pub const C7_BUDGET: f64 = 300.0;

/// Dimension of the Koch snowflake boundary.
pub fn koch_dimension() -> f64 {
    4f64.ln() / 3f64.ln()
}
