//! Brownian flights: start at the center of a uniformly chosen cube of the
//! layer `S_ε`, run Brownian motion until it is absorbed at the boundary.
//!
//! Paths are advanced with Gaussian increments of per-coordinate variance
//! `δt = min(δt_max, (c_step·d)²)`, where `d` is the current distance to the
//! boundary. A step ends the flight when it lands outside, lands within
//! `δ_abs` of the boundary, or (with bridge correction) when the half-space
//! Brownian bridge between the two endpoints would have crossed, which
//! happens with probability `exp(−2·d₁·d₂/δt)`.
//!
//! Every flight owns a ChaCha8 stream selected by `(seed, flight_id)`, so a
//! campaign gives the same records for any number of workers.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{Domain, Point};
use crate::whitney::{CertifiedCube, DyadicCube, WhitneyDecomposition};
use crate::{Error, Result};

/// Seed salt for the Δ-regularity paths, keeping them off the flight streams.
const DELTA_REG_SALT: u64 = 0x9e37_79b9_7f4a_7c15;
/// Seed salt for sampling probe points.
const PROBE_SALT: u64 = 0xd1b5_4a32_d192_ed03;

/// Bridge crossing probabilities below `e^{-40}` are treated as zero.
const BRIDGE_CUTOFF: f64 = 40.0;

/// Shells `k` tracked individually; distances outside are clamped.
const SHELL_MIN: i32 = -100;
const SHELL_MAX: i32 = 27;
const SHELLS: usize = (SHELL_MAX - SHELL_MIN + 1) as usize;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepPolicy {
    /// Safety factor: step standard deviation is `c_step` times the distance.
    pub c_step: f64,
    /// Cap on the step duration.
    pub dt_max: f64,
    /// Absorption distance.
    pub delta_abs: f64,
    /// Censoring time.
    pub t_max: f64,
    pub bridge_correction: bool,
}

impl StepPolicy {
    /// `c_step = 0.1`, `δt_max = R²/100`, `δ_abs = ε/100`, `t_max = 4R²`.
    pub fn defaults(epsilon: f64, r_omega: f64) -> Self {
        Self {
            c_step: 0.1,
            dt_max: r_omega * r_omega / 100.0,
            delta_abs: 1e-2 * epsilon,
            t_max: 4.0 * r_omega * r_omega,
            bridge_correction: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c_step > 0.0 && self.c_step < 1.0) {
            return Err(Error::Config(format!("c_step must be in (0, 1), got {}", self.c_step)));
        }
        for (name, v) in [("dt_max", self.dt_max), ("delta_abs", self.delta_abs), ("t_max", self.t_max)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive and finite, got {v}")));
            }
        }
        Ok(())
    }
}

/// One simulated flight.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlightRecord<const D: usize> {
    pub flight_id: u64,
    pub start_cube: DyadicCube<D>,
    pub start: Point<D>,
    /// Flight duration; `t_max` when censored.
    pub tau: f64,
    pub exit_point: Point<D>,
    /// `|exit_point − start|`.
    pub displacement: f64,
    pub censored: bool,
    /// Time spent at distances in `[2^{k−1}, 2^k)`, keyed by `k`.
    pub shell_occupation: BTreeMap<i32, f64>,
}

impl<const D: usize> FlightRecord<D> {
    /// Total time spent within distance `s` of the boundary, counting whole
    /// dyadic shells with `2^k ≤ s`.
    pub fn time_within(&self, s: f64) -> f64 {
        self.shell_occupation.iter().filter(|(&k, _)| 2f64.powi(k) <= s).map(|(_, t)| t).sum()
    }

    /// Time spent in the shell band `(s/2, s]` under the dyadic convention.
    pub fn time_in_band(&self, s: f64) -> f64 {
        self.time_within(s) - self.time_within(s / 2.0)
    }
}

/// End state of a single killed path.
#[derive(Clone, Debug, PartialEq)]
pub struct PathOutcome<const D: usize> {
    pub tau: f64,
    pub exit_point: Point<D>,
    pub censored: bool,
    pub shell_occupation: BTreeMap<i32, f64>,
}

struct ShellTally([f64; SHELLS]);

impl ShellTally {
    fn new() -> Self {
        Self([0.0; SHELLS])
    }

    /// Adds `dt` to shell `k` with `d ∈ [2^{k−1}, 2^k)`.
    #[inline]
    fn add(&mut self, d: f64, dt: f64) {
        let exponent = ((d.to_bits() >> 52) & 0x7ff) as i32 - 1023;
        let k = (exponent + 1).clamp(SHELL_MIN, SHELL_MAX);
        self.0[(k - SHELL_MIN) as usize] += dt;
    }

    fn into_map(self) -> BTreeMap<i32, f64> {
        self.0.iter().enumerate().filter(|(_, &t)| t > 0.0).map(|(i, &t)| (i as i32 + SHELL_MIN, t)).collect()
    }
}

/// Random stream of flight `flight_id` under `seed`.
pub fn flight_rng(seed: u64, flight_id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(flight_id);
    rng
}

#[inline]
fn gaussian_step<const D: usize, R: Rng>(x: &Point<D>, scale: f64, rng: &mut R) -> Point<D> {
    let mut y = *x;
    for c in &mut y.0 {
        let z: f64 = rng.sample(StandardNormal);
        *c += scale * z;
    }
    y
}

/// Point of the segment `inside → outside` where the signed distance is
/// within `tol` of zero, by bisection.
fn bisect_to_boundary<const D: usize>(
    domain: &Domain<D>,
    mut inside: Point<D>,
    mut outside: Point<D>,
    tol: f64,
) -> Point<D> {
    for _ in 0..200 {
        let mid = (inside + outside) * 0.5;
        let s = domain.signed_distance(&mid);
        if s.abs() <= tol {
            return mid;
        }
        if s > 0.0 {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    // the segment has collapsed onto a zero of the distance
    outside
}

/// Moves an interior point onto the boundary along the distance gradient.
fn project_to_boundary<const D: usize>(domain: &Domain<D>, p: Point<D>, tol: f64) -> Point<D> {
    let s = domain.signed_distance(&p);
    if s.abs() <= tol {
        return p;
    }
    let h = (s.abs() * 1e-3).max(1e-9);
    let g = domain.distance_gradient(&p, h);
    let towards = if s > 0.0 { -1.0 } else { 1.0 };
    let mut reach = 2.0 * s.abs();
    for _ in 0..40 {
        let q = p + g * (towards * reach);
        let sq = domain.signed_distance(&q);
        if sq.abs() <= tol {
            return q;
        }
        if sq.signum() != s.signum() {
            return if s > 0.0 { bisect_to_boundary(domain, p, q, tol) } else { bisect_to_boundary(domain, q, p, tol) };
        }
        reach *= 2.0;
    }
    p
}

/// Runs Brownian motion from `start` until absorption at the boundary or
/// censoring at `policy.t_max`.
pub fn simulate_path<const D: usize, R: Rng>(
    domain: &Domain<D>,
    start: &Point<D>,
    policy: &StepPolicy,
    rng: &mut R,
) -> Result<PathOutcome<D>> {
    let mut x = *start;
    let mut d = domain.signed_distance(&x);
    if !(d > 0.0) {
        return Err(Error::Precondition(format!("start point {start:?} is not inside the domain")));
    }
    let tol = policy.delta_abs / 10.0;
    let mut tally = ShellTally::new();
    let mut t = 0.0;
    loop {
        let mut dt = (policy.c_step * d).powi(2).min(policy.dt_max);
        let last = t + dt >= policy.t_max;
        if last {
            dt = policy.t_max - t;
        }
        tally.add(d, dt);
        t += dt;
        let y = gaussian_step(&x, dt.sqrt(), rng);
        let dy = domain.signed_distance(&y);
        debug_assert!(y.is_finite() && dy.is_finite());

        let exit = if dy <= 0.0 {
            Some(bisect_to_boundary(domain, x, y, tol))
        } else if dy < policy.delta_abs {
            Some(project_to_boundary(domain, y, tol))
        } else if policy.bridge_correction && 2.0 * d * dy / dt < BRIDGE_CUTOFF {
            let crossing = (-2.0 * d * dy / dt).exp();
            (rng.random::<f64>() < crossing).then(|| project_to_boundary(domain, y, tol))
        } else {
            None
        };
        if let Some(exit_point) = exit {
            return finish(t, exit_point, false, tally);
        }
        if last {
            return finish(t, y, true, tally);
        }
        x = y;
        d = dy;
    }
}

fn finish<const D: usize>(tau: f64, exit_point: Point<D>, censored: bool, tally: ShellTally) -> Result<PathOutcome<D>> {
    if !(tau.is_finite() && tau > 0.0 && exit_point.is_finite()) {
        return Err(Error::Internal(format!("non-finite path state: tau={tau}, exit={exit_point:?}")));
    }
    Ok(PathOutcome { tau, exit_point, censored, shell_occupation: tally.into_map() })
}

/// Flight sampler for one `(domain, decomposition, ε, policy)`; the layer
/// `S_ε` is computed once.
#[derive(Debug)]
pub struct FlightSampler<'a, const D: usize> {
    domain: &'a Domain<D>,
    layer: Vec<CertifiedCube<D>>,
    epsilon: f64,
    policy: StepPolicy,
}

impl<'a, const D: usize> FlightSampler<'a, D> {
    pub fn new(
        domain: &'a Domain<D>,
        decomposition: &WhitneyDecomposition<D>,
        epsilon: f64,
        policy: StepPolicy,
    ) -> Result<Self> {
        policy.validate()?;
        let lo = 2f64.powi(decomposition.min_generation() + 3);
        let r = decomposition.r_omega()?;
        if !(epsilon >= lo && epsilon < r) {
            return Err(Error::Precondition(format!("epsilon {epsilon} must lie in [{lo}, {r})")));
        }
        let layer = decomposition.layer(epsilon)?;
        Ok(Self { domain, layer, epsilon, policy })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn layer(&self) -> &[CertifiedCube<D>] {
        &self.layer
    }

    pub fn policy(&self) -> &StepPolicy {
        &self.policy
    }

    pub fn sample(&self, seed: u64, flight_id: u64) -> Result<FlightRecord<D>> {
        let mut rng = flight_rng(seed, flight_id);
        let start_cube = self.layer[rng.random_range(0..self.layer.len())].cube;
        let start = start_cube.center();
        let path = simulate_path(self.domain, &start, &self.policy, &mut rng)?;
        Ok(FlightRecord {
            flight_id,
            start_cube,
            start,
            tau: path.tau,
            displacement: path.exit_point.distance(&start),
            exit_point: path.exit_point,
            censored: path.censored,
            shell_occupation: path.shell_occupation,
        })
    }
}

/// A single flight; see [`FlightSampler`] for repeated sampling.
pub fn sample_flight<const D: usize>(
    domain: &Domain<D>,
    decomposition: &WhitneyDecomposition<D>,
    epsilon: f64,
    policy: StepPolicy,
    seed: u64,
    flight_id: u64,
) -> Result<FlightRecord<D>> {
    FlightSampler::new(domain, decomposition, epsilon, policy)?.sample(seed, flight_id)
}

/// `n_flights` flights with ids `0..n_flights`, run on `workers` threads
/// and returned in id order.
#[allow(clippy::too_many_arguments)]
pub fn run_campaign<const D: usize>(
    domain: &Domain<D>,
    decomposition: &WhitneyDecomposition<D>,
    epsilon: f64,
    policy: StepPolicy,
    n_flights: u64,
    master_seed: u64,
    workers: usize,
) -> Result<Vec<FlightRecord<D>>> {
    if n_flights < 1 {
        return Err(Error::Precondition("a campaign needs at least one flight".into()));
    }
    if workers < 1 {
        return Err(Error::Config("workers must be at least 1".into()));
    }
    let sampler = FlightSampler::new(domain, decomposition, epsilon, policy)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
    pool.install(|| (0..n_flights).into_par_iter().map(|id| sampler.sample(master_seed, id)).collect())
}

/// Harmonic measure of `∂Ω` seen from one point inside `B(x, 2d_x) ∩ Ω`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaRegEstimate<const D: usize> {
    pub point: Point<D>,
    pub distance: f64,
    /// Fraction of paths absorbed on `∂Ω` rather than on the sphere.
    pub fraction: f64,
    pub stderr: f64,
    pub n_paths: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaRegReport<const D: usize> {
    pub estimates: Vec<DeltaRegEstimate<D>>,
    /// Minimum fraction over the points.
    pub l_hat: f64,
}

enum Killed {
    Boundary,
    Sphere,
    Censored,
}

fn run_local_path<const D: usize, R: Rng>(
    domain: &Domain<D>,
    x: &Point<D>,
    d_x: f64,
    policy: &StepPolicy,
    delta: f64,
    rng: &mut R,
) -> Killed {
    let radius = 2.0 * d_x;
    let mut y = *x;
    let mut ds = d_x;
    let mut dsph = radius;
    let mut t = 0.0;
    while t < policy.t_max {
        let reach = ds.min(dsph);
        let dt = (policy.c_step * reach).powi(2).min(policy.dt_max);
        t += dt;
        y = gaussian_step(&y, dt.sqrt(), rng);
        ds = domain.signed_distance(&y);
        dsph = radius - y.distance(x);
        let boundary = ds < delta;
        let sphere = dsph < delta;
        match (boundary, sphere) {
            (true, true) => return if ds <= dsph { Killed::Boundary } else { Killed::Sphere },
            (true, false) => return Killed::Boundary,
            (false, true) => return Killed::Sphere,
            (false, false) => {}
        }
    }
    Killed::Censored
}

/// Monte Carlo estimate of `ω^x_{B(x,2d_x)∩Ω}(∂Ω)` at each point, with
/// `n_paths` paths per point.
pub fn estimate_delta_regularity<const D: usize>(
    domain: &Domain<D>,
    r_omega: f64,
    points: &[Point<D>],
    n_paths: usize,
    policy: &StepPolicy,
    seed: u64,
) -> Result<DeltaRegReport<D>> {
    policy.validate()?;
    if points.is_empty() || n_paths == 0 {
        return Err(Error::Precondition("need at least one point and one path".into()));
    }
    let distances = points
        .iter()
        .map(|p| {
            let d = domain.signed_distance(p);
            if d > 0.0 && d < r_omega {
                Ok(d)
            } else {
                Err(Error::Precondition(format!("point {p:?} has distance {d}, outside (0, {r_omega})")))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let estimates: Vec<DeltaRegEstimate<D>> = points
        .par_iter()
        .zip(distances.par_iter())
        .enumerate()
        .map(|(i, (p, &d))| {
            let mut rng = flight_rng(seed ^ DELTA_REG_SALT, i as u64);
            let delta = policy.delta_abs.min(1e-2 * d);
            let hits = (0..n_paths)
                .filter(|_| matches!(run_local_path(domain, p, d, policy, delta, &mut rng), Killed::Boundary))
                .count();
            let fraction = hits as f64 / n_paths as f64;
            DeltaRegEstimate {
                point: *p,
                distance: d,
                fraction,
                stderr: (fraction * (1.0 - fraction) / n_paths as f64).sqrt(),
                n_paths,
            }
        })
        .collect();
    let l_hat = estimates.iter().map(|e| e.fraction).fold(f64::INFINITY, f64::min);
    Ok(DeltaRegReport { estimates, l_hat })
}

/// `n` points drawn uniformly from the bounding box subject to
/// `0 < dist(x, ∂Ω) < max_distance`.
pub fn sample_near_boundary_points<const D: usize>(
    domain: &Domain<D>,
    max_distance: f64,
    n: usize,
    seed: u64,
) -> Vec<Point<D>> {
    let mut rng = flight_rng(seed ^ PROBE_SALT, 0);
    let (lo, hi) = domain.bounding_box();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let p = Point(std::array::from_fn(|i| rng.random_range(lo.0[i]..hi.0[i])));
        let d = domain.signed_distance(&p);
        if d > 0.0 && d < max_distance {
            out.push(p);
        }
    }
    out
}
