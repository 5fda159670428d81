//! Domains with compact boundary, described by a signed distance function.
//!
//! Signed distances are positive inside, negative outside and zero on the
//! boundary. Every shape here is exact (or exact up to rounding), hence
//! 1-Lipschitz, which is what the certified Whitney bounds rely on.

mod polygon;
mod shapes;

use std::fmt;
use std::ops::{Add, Mul, Sub};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::whitney::{DyadicCube, WhitneyDecomposition};
use crate::{Error, Result};

pub use polygon::{koch_snowflake_vertices, Polygon};
pub use shapes::{AxisBox, Ball};

/// Placement used when a spec does not give a center. Keeps boundaries off
/// the dyadic grid lines.
pub const DEFAULT_OFFSET: f64 = 1.0 / 3.0;

/// Largest Koch generation accepted by [`make_domain`] (3·4^9 edges).
pub const MAX_KOCH_GENERATION: i64 = 9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point<const D: usize>(#[serde(with = "crate::serde_array")] pub [f64; D]);

impl<const D: usize> Point<D> {
    pub const fn new(coords: [f64; D]) -> Self {
        Self(coords)
    }

    pub const fn origin() -> Self {
        Self([0.0; D])
    }

    pub fn coords(&self) -> &[f64; D] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn distance(&self, other: &Self) -> f64 {
        (*self - *other).norm()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }
}

impl<const D: usize> Add for Point<D> {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        for (a, b) in self.0.iter_mut().zip(rhs.0) {
            *a += b;
        }
        self
    }
}

impl<const D: usize> Sub for Point<D> {
    type Output = Self;
    fn sub(mut self, rhs: Self) -> Self {
        for (a, b) in self.0.iter_mut().zip(rhs.0) {
            *a -= b;
        }
        self
    }
}

impl<const D: usize> Mul<f64> for Point<D> {
    type Output = Self;
    fn mul(mut self, rhs: f64) -> Self {
        for a in &mut self.0 {
            *a *= rhs;
        }
        self
    }
}

/// Signed distance oracle: positive inside, negative outside, 1-Lipschitz.
pub trait SignedDistance<const D: usize>: Send + Sync {
    fn signed_distance(&self, p: &Point<D>) -> f64;

    /// Tight axis-aligned box around the closure of the domain.
    fn extent(&self) -> (Point<D>, Point<D>);
}

/// Tagged description of a built-in test domain, as found in config files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DomainSpec {
    Square {
        side: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
    },
    Rectangle {
        width: f64,
        height: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
    },
    Disk {
        radius: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
    },
    Box3d {
        a: f64,
        b: f64,
        c: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
    },
    KochSnowflake {
        generation: i64,
        side: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
    },
}

impl DomainSpec {
    pub fn dimension(&self) -> usize {
        match self {
            DomainSpec::Box3d { .. } => 3,
            _ => 2,
        }
    }
}

/// A bounded domain in `R^D`.
#[derive(Clone)]
pub struct Domain<const D: usize> {
    name: String,
    bounding_box: (Point<D>, Point<D>),
    known_boundary_dimension: Option<f64>,
    cutoff_scale: Option<f64>,
    shape: Arc<dyn SignedDistance<D>>,
}

impl<const D: usize> fmt::Debug for Domain<D> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Domain")
            .field("name", &self.name)
            .field("dimension", &D)
            .field("bounding_box", &self.bounding_box)
            .field("known_boundary_dimension", &self.known_boundary_dimension)
            .field("cutoff_scale", &self.cutoff_scale)
            .finish()
    }
}

impl<const D: usize> Domain<D> {
    /// Wraps a shape. The bounding box is the shape extent padded by 1/16 of
    /// its largest side so that the box corners lie strictly outside.
    pub fn from_shape(
        name: impl Into<String>,
        shape: Arc<dyn SignedDistance<D>>,
        known_boundary_dimension: Option<f64>,
    ) -> Self {
        let (mut lo, mut hi) = shape.extent();
        let pad = (0..D).map(|i| hi.0[i] - lo.0[i]).fold(0.0, f64::max) / 16.0;
        for i in 0..D {
            lo.0[i] -= pad;
            hi.0[i] += pad;
        }
        Self { name: name.into(), bounding_box: (lo, hi), known_boundary_dimension, cutoff_scale: None, shape }
    }

    /// Sets the length below which the shape stops resembling the ideal
    /// boundary (edge length of a prefractal).
    pub fn with_cutoff_scale(mut self, cutoff: f64) -> Self {
        self.cutoff_scale = Some(cutoff);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub const fn dimension(&self) -> usize {
        D
    }

    pub fn bounding_box(&self) -> (Point<D>, Point<D>) {
        self.bounding_box
    }

    pub fn known_boundary_dimension(&self) -> Option<f64> {
        self.known_boundary_dimension
    }

    /// Scaling windows must stay above this length, if set.
    pub fn cutoff_scale(&self) -> Option<f64> {
        self.cutoff_scale
    }

    #[inline]
    pub fn signed_distance(&self, p: &Point<D>) -> f64 {
        self.shape.signed_distance(p)
    }

    pub fn contains(&self, p: &Point<D>) -> bool {
        self.signed_distance(p) > 0.0
    }

    /// Central-difference gradient of the signed distance, normalised.
    /// Falls back to the first axis where the distance is not differentiable
    /// in a usable way (medial axis, exact ties).
    pub fn distance_gradient(&self, p: &Point<D>, h: f64) -> Point<D> {
        let mut g = [0.0; D];
        for (i, gi) in g.iter_mut().enumerate() {
            let mut plus = *p;
            let mut minus = *p;
            plus.0[i] += h;
            minus.0[i] -= h;
            *gi = (self.signed_distance(&plus) - self.signed_distance(&minus)) / (2.0 * h);
        }
        let g = Point(g);
        let n = g.norm();
        if n > 1e-12 && n.is_finite() {
            g * (1.0 / n)
        } else {
            let mut e = [0.0; D];
            e[0] = 1.0;
            Point(e)
        }
    }
}

/// A domain of either supported dimension.
#[derive(Clone, Debug)]
pub enum AnyDomain {
    Planar(Domain<2>),
    Spatial(Domain<3>),
}

impl AnyDomain {
    pub fn dimension(&self) -> usize {
        match self {
            AnyDomain::Planar(_) => 2,
            AnyDomain::Spatial(_) => 3,
        }
    }

    pub fn name(&self) -> &str {
        match self {
            AnyDomain::Planar(d) => d.name(),
            AnyDomain::Spatial(d) => d.name(),
        }
    }
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::Config(format!("{name} must be a positive finite number, got {v}")))
    }
}

fn center<const D: usize>(center: &Option<Vec<f64>>) -> Result<Point<D>> {
    match center {
        None => Ok(Point([DEFAULT_OFFSET; D])),
        Some(c) => {
            let arr: [f64; D] = c
                .as_slice()
                .try_into()
                .map_err(|_| Error::Config(format!("center must have {D} coordinates, got {}", c.len())))?;
            if arr.iter().all(|x| x.is_finite()) {
                Ok(Point(arr))
            } else {
                Err(Error::Config("center coordinates must be finite".into()))
            }
        }
    }
}

/// Builds one of the built-in test domains.
pub fn make_domain(spec: &DomainSpec) -> Result<AnyDomain> {
    let domain = match spec {
        DomainSpec::Square { side, center: c } => {
            let side = positive("side", *side)?;
            let shape = AxisBox::centered(center::<2>(c)?, [side, side]);
            AnyDomain::Planar(Domain::from_shape(format!("square(side={side})"), Arc::new(shape), Some(1.0)))
        }
        DomainSpec::Rectangle { width, height, center: c } => {
            let (w, h) = (positive("width", *width)?, positive("height", *height)?);
            let shape = AxisBox::centered(center::<2>(c)?, [w, h]);
            AnyDomain::Planar(Domain::from_shape(format!("rectangle({w}x{h})"), Arc::new(shape), Some(1.0)))
        }
        DomainSpec::Disk { radius, center: c } => {
            let r = positive("radius", *radius)?;
            let shape = Ball::new(center::<2>(c)?, r);
            AnyDomain::Planar(Domain::from_shape(format!("disk(radius={r})"), Arc::new(shape), Some(1.0)))
        }
        DomainSpec::Box3d { a, b, c: cc, center: c } => {
            let sides = [positive("a", *a)?, positive("b", *b)?, positive("c", *cc)?];
            let shape = AxisBox::centered(center::<3>(c)?, sides);
            AnyDomain::Spatial(Domain::from_shape(
                format!("box3d({}x{}x{})", sides[0], sides[1], sides[2]),
                Arc::new(shape),
                Some(2.0),
            ))
        }
        DomainSpec::KochSnowflake { generation, side, center: c } => {
            let side = positive("side", *side)?;
            if !(0..=MAX_KOCH_GENERATION).contains(generation) {
                return Err(Error::Config(format!(
                    "koch generation must be in 0..={MAX_KOCH_GENERATION}, got {generation}"
                )));
            }
            let vertices = koch_snowflake_vertices(*generation as u32, side, center::<2>(c)?.0);
            let shape = Polygon::new(vertices)?;
            AnyDomain::Planar(
                Domain::from_shape(
                    format!("koch_snowflake(g={generation},side={side})"),
                    Arc::new(shape),
                    Some(4f64.ln() / 3f64.ln()),
                )
                .with_cutoff_scale(side * 3f64.powi(-(*generation as i32))),
            )
        }
    };
    Ok(domain)
}

/// Certified bounds of the signed distance over a closed cube.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct CubeBounds {
    pub center: f64,
    pub lo: f64,
    pub hi: f64,
    /// Upper bound on `inf_Q dist(·, ∂Ω)`: the smallest sampled value.
    pub inf_upper: f64,
}

pub(crate) fn cube_bounds<const D: usize>(domain: &Domain<D>, cube: &DyadicCube<D>) -> CubeBounds {
    let h = cube.half_diagonal();
    let center = domain.signed_distance(&cube.center());
    let (mut cmin, mut cmax) = (f64::INFINITY, f64::NEG_INFINITY);
    for corner in cube.corners() {
        let s = domain.signed_distance(&corner);
        cmin = cmin.min(s);
        cmax = cmax.max(s);
    }
    CubeBounds { center, lo: (center - h).max(cmin - h), hi: (center + h).min(cmax + h), inf_upper: center.min(cmin) }
}

/// Certified enclosure `(lo, hi)` of the signed distance over a closed cube.
///
/// Uses the center value ± half-diagonal, tightened by the corners: every
/// point of the cube is within one half-diagonal of both the center and its
/// nearest corner.
pub fn distance_interval_on_cube<const D: usize>(domain: &Domain<D>, cube: &DyadicCube<D>) -> (f64, f64) {
    let b = cube_bounds(domain, cube);
    (b.lo, b.hi)
}

/// `min(1, inradius)`. Uses the certified inradius when the decomposition
/// carries one, otherwise the largest cube-center distance (a lower bound).
pub fn r_omega<const D: usize>(decomposition: &WhitneyDecomposition<D>) -> Result<f64> {
    let inradius = match decomposition.inradius() {
        Some(r) => r,
        None => decomposition
            .entries()
            .iter()
            .map(|e| e.center_distance)
            .reduce(f64::max)
            .ok_or(Error::EmptyDecomposition)?,
    };
    Ok(inradius.min(1.0))
}

/// `sup_Ω dist(·, ∂Ω)` by branch and bound over the Whitney cubes: the
/// returned value is attained at some cube center and is within
/// `2·half_diagonal(2^{min_generation})` of the supremum.
pub fn inradius<const D: usize>(domain: &Domain<D>, decomposition: &WhitneyDecomposition<D>) -> Result<f64> {
    let entries = decomposition.entries();
    let mut best = entries.iter().map(|e| e.center_distance).reduce(f64::max).ok_or(Error::EmptyDecomposition)?;
    let floor = decomposition.min_generation();
    let mut candidates: Vec<DyadicCube<D>> =
        entries.iter().filter(|e| e.dist_hi > best && e.cube.generation > floor).map(|e| e.cube).collect();
    while !candidates.is_empty() {
        let mut next = Vec::new();
        for cube in &candidates {
            for child in cube.children() {
                let b = cube_bounds(domain, &child);
                best = best.max(b.center);
                if b.hi > best && child.generation > floor {
                    next.push((child, b.hi));
                }
            }
        }
        candidates = next.into_iter().filter(|&(_, hi)| hi > best).map(|(c, _)| c).collect();
    }
    Ok(best)
}
