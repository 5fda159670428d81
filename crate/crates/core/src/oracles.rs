//! Exact exit-time survival functions used as ground truth for the sampler.
//!
//! Brownian motion here is standard: each coordinate has variance `t` at
//! time `t`. For the interval `(0, a)` two classical series are available,
//! the image (reflection) series, fast for small `t`, and the sine
//! eigenfunction series, fast for large `t`. Cubes factor into intervals.

use crate::{Error, Result};

/// Terms used by [`interval_survival`] on either side of the switchover.
pub const DEFAULT_TERMS: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntervalSurvivalQuery {
    /// Start position in `(0, a)`.
    pub x: f64,
    /// Interval length.
    pub a: f64,
    pub t: f64,
}

impl IntervalSurvivalQuery {
    pub fn new(x: f64, a: f64, t: f64) -> Result<Self> {
        let q = Self { x, a, t };
        q.validate()?;
        Ok(q)
    }

    fn validate(&self) -> Result<()> {
        if !(self.a.is_finite() && self.a > 0.0) {
            return Err(Error::Precondition(format!("interval length must be positive, got {}", self.a)));
        }
        if !(self.x > 0.0 && self.x < self.a) {
            return Err(Error::Precondition(format!("start {} not inside (0, {})", self.x, self.a)));
        }
        if !(self.t >= 0.0) || self.t.is_infinite() {
            return Err(Error::Precondition(format!("time must be finite and non-negative, got {}", self.t)));
        }
        Ok(())
    }
}

/// Standard normal cdf via the complementary error function.
#[inline]
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// `Φ(hi) − Φ(lo)` without cancellation in either tail.
fn normal_mass(lo: f64, hi: f64) -> f64 {
    let s = std::f64::consts::SQRT_2;
    if lo >= 0.0 {
        0.5 * (libm::erfc(lo / s) - libm::erfc(hi / s))
    } else if hi <= 0.0 {
        0.5 * (libm::erfc(-hi / s) - libm::erfc(-lo / s))
    } else {
        1.0 - 0.5 * libm::erfc(-lo / s) - 0.5 * libm::erfc(hi / s)
    }
}

/// Image series: the killed heat kernel is a sum of Gaussians reflected
/// across both endpoints, integrated over `(0, a)`; images `|k| ≤ n_terms`.
pub fn interval_survival_reflection(q: IntervalSurvivalQuery, n_terms: usize) -> Result<f64> {
    q.validate()?;
    if n_terms < 1 {
        return Err(Error::Precondition("n_terms must be at least 1".into()));
    }
    if q.t == 0.0 {
        return Ok(1.0);
    }
    let IntervalSurvivalQuery { x, a, t } = q;
    let st = t.sqrt();
    let n = n_terms as i64;
    let mut sum = 0.0;
    // smallest images last so the tiny terms do not get swamped mid-sum
    let mut ks: Vec<i64> = (-n..=n).collect();
    ks.sort_by_key(|k| std::cmp::Reverse(k.abs()));
    for k in ks {
        let shift = 2.0 * k as f64 * a;
        let direct = normal_mass((-x - shift) / st, (a - x - shift) / st);
        let mirrored = normal_mass((x - shift) / st, (a + x - shift) / st);
        sum += direct - mirrored;
    }
    Ok(sum.clamp(0.0, 1.0))
}

/// Eigenfunction series
/// `(4/π) Σ_{n≥0} sin((2n+1)πx/a) e^{−(2n+1)²π²t/(2a²)} / (2n+1)`,
/// truncated after `n_terms` terms and clamped to `[0, 1]`.
pub fn interval_survival_eigen(q: IntervalSurvivalQuery, n_terms: usize) -> Result<f64> {
    q.validate()?;
    if n_terms < 1 {
        return Err(Error::Precondition("n_terms must be at least 1".into()));
    }
    if q.t == 0.0 {
        return Ok(1.0);
    }
    let IntervalSurvivalQuery { x, a, t } = q;
    let pi = std::f64::consts::PI;
    let mut sum = 0.0;
    for n in (0..n_terms).rev() {
        let m = (2 * n + 1) as f64;
        sum += (m * pi * x / a).sin() * (-m * m * pi * pi * t / (2.0 * a * a)).exp() / m;
    }
    Ok((4.0 / pi * sum).clamp(0.0, 1.0))
}

/// Survival with automatic series choice: images for `t ≤ a²`,
/// eigenfunctions beyond.
pub fn interval_survival(q: IntervalSurvivalQuery, n_terms: usize) -> Result<f64> {
    if q.t <= q.a * q.a {
        interval_survival_reflection(q, n_terms)
    } else {
        interval_survival_eigen(q, n_terms)
    }
}

/// Survival of Brownian motion started at the center of a cube of the
/// given side in `d` dimensions: the `d`-th power of the interval value.
pub fn cube_survival(side: f64, d: usize, t: f64, n_terms: usize) -> Result<f64> {
    if d < 1 {
        return Err(Error::Precondition("dimension must be at least 1".into()));
    }
    let q = IntervalSurvivalQuery::new(side / 2.0, side, t)?;
    Ok(interval_survival(q, n_terms)?.powi(d as i32))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(x: f64, a: f64, t: f64) -> IntervalSurvivalQuery {
        IntervalSurvivalQuery::new(x, a, t).unwrap()
    }

    #[test]
    fn zero_time_survives() {
        assert_eq!(interval_survival_reflection(q(0.5, 1.0, 0.0), 5).unwrap(), 1.0);
        assert_eq!(interval_survival_eigen(q(0.5, 1.0, 0.0), 5).unwrap(), 1.0);
        assert_eq!(cube_survival(1.0, 3, 0.0, 5).unwrap(), 1.0);
    }

    #[test]
    fn reference_value_at_half() {
        // both series, independently summed
        let r = interval_survival_reflection(q(0.5, 1.0, 0.5), 20).unwrap();
        let e = interval_survival_eigen(q(0.5, 1.0, 0.5), 50).unwrap();
        assert!((r - e).abs() < 1e-12);
        assert!((r - 0.1080).abs() < 5e-5, "{r}");
        let c = cube_survival(1.0, 2, 0.5, DEFAULT_TERMS).unwrap();
        assert!((c - 0.01166).abs() < 5e-6, "{c}");
        assert!((c - r * r).abs() < 1e-14);
    }

    #[test]
    fn start_near_boundary_vanishes_monotonically() {
        let mut prev = f64::INFINITY;
        for x in [0.1, 0.01, 1e-3, 1e-4, 1e-6] {
            let p = interval_survival(q(x, 1.0, 0.2), DEFAULT_TERMS).unwrap();
            assert!(p < prev);
            prev = p;
        }
        assert!(prev < 1e-5);
    }

    #[test]
    fn invalid_queries() {
        assert!(IntervalSurvivalQuery::new(0.0, 1.0, 1.0).is_err());
        assert!(IntervalSurvivalQuery::new(1.0, 1.0, 1.0).is_err());
        assert!(IntervalSurvivalQuery::new(0.5, 1.0, -1.0).is_err());
        assert!(IntervalSurvivalQuery::new(0.5, 0.0, 1.0).is_err());
        assert!(interval_survival_reflection(q(0.5, 1.0, 1.0), 0).is_err());
        assert!(cube_survival(1.0, 0, 1.0, 5).is_err());
        assert!(cube_survival(-1.0, 2, 1.0, 5).is_err());
    }

    #[test]
    fn one_dimensional_cube_is_the_interval() {
        for t in [0.01, 0.3, 2.0] {
            let c = cube_survival(2.0, 1, t, DEFAULT_TERMS).unwrap();
            let i = interval_survival(q(1.0, 2.0, t), DEFAULT_TERMS).unwrap();
            assert_eq!(c, i);
        }
    }

    #[test]
    fn normal_mass_tails() {
        assert!((normal_mass(-1.0, 1.0) - 0.682_689_492_137_086).abs() < 1e-14);
        let tail = normal_mass(10.0, 11.0);
        // Q(10) - Q(11) = 7.6198530241605e-24 - 1.9106595e-28
        let expected = 7.6198530241605e-24 - 1.9106595e-28;
        assert!((tail - expected).abs() / expected < 1e-8, "{tail:e}");
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-16);
    }
}
