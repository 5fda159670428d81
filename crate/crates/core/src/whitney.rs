//! Whitney decomposition of a domain into closed dyadic cubes.
//!
//! Cubes are produced top-down: a cube is accepted when its certified
//! distance bounds satisfy `√d·ℓ ≤ dist(Q, ∂Ω) ≤ 4√d·ℓ`, discarded when it
//! lies outside Ω, and split into `2^d` children otherwise, down to a
//! minimum generation. Generation `k` means side length `2^k`; the
//! Whitney counts are reported per generation and the dimension estimate
//! uses `j = -k`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{cube_bounds, inradius, r_omega, Domain, Point};
use crate::{Error, Result};

/// Finest generation accepted by [`decompose`].
pub const FINEST_GENERATION: i32 = -40;

/// Closed dyadic cube `Π [index_i·2^k, (index_i+1)·2^k]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DyadicCube<const D: usize> {
    pub generation: i32,
    #[serde(with = "crate::serde_array")]
    pub index: [i64; D],
}

impl<const D: usize> DyadicCube<D> {
    pub const fn new(generation: i32, index: [i64; D]) -> Self {
        Self { generation, index }
    }

    /// Cube of the given generation containing `p` (half-open convention).
    pub fn containing(generation: i32, p: &Point<D>) -> Self {
        let side = side_of(generation);
        let mut index = [0i64; D];
        for (i, c) in p.0.iter().enumerate() {
            index[i] = (c / side).floor() as i64;
        }
        Self { generation, index }
    }

    #[inline]
    pub fn side(&self) -> f64 {
        side_of(self.generation)
    }

    pub fn half_diagonal(&self) -> f64 {
        self.side() * (D as f64).sqrt() / 2.0
    }

    pub fn lower_corner(&self) -> Point<D> {
        let s = self.side();
        Point(self.index.map(|i| i as f64 * s))
    }

    pub fn center(&self) -> Point<D> {
        let s = self.side();
        Point(self.index.map(|i| (i as f64 + 0.5) * s))
    }

    pub fn corners(&self) -> impl Iterator<Item = Point<D>> + '_ {
        let s = self.side();
        (0..1usize << D).map(move |mask| {
            let mut c = [0.0; D];
            for (i, ci) in c.iter_mut().enumerate() {
                *ci = (self.index[i] + ((mask >> i) & 1) as i64) as f64 * s;
            }
            Point(c)
        })
    }

    pub fn parent(&self) -> Self {
        Self { generation: self.generation + 1, index: self.index.map(|i| i >> 1) }
    }

    /// Ancestor `levels` generations up (`levels = 0` is the cube itself).
    pub fn ancestor(&self, levels: u32) -> Self {
        Self { generation: self.generation + levels as i32, index: self.index.map(|i| i >> levels) }
    }

    pub fn children(&self) -> impl Iterator<Item = Self> + '_ {
        (0..1usize << D).map(move |mask| {
            let mut index = [0i64; D];
            for (i, ix) in index.iter_mut().enumerate() {
                *ix = 2 * self.index[i] + ((mask >> i) & 1) as i64;
            }
            Self { generation: self.generation - 1, index }
        })
    }

    pub fn contains_point(&self, p: &Point<D>) -> bool {
        let s = self.side();
        (0..D).all(|i| {
            let lo = self.index[i] as f64 * s;
            p.0[i] >= lo && p.0[i] <= lo + s
        })
    }

    /// Whether two closed cubes touch: they intersect but their interiors
    /// are disjoint. Nested or overlapping cubes do not touch.
    pub fn touches(&self, other: &Self) -> bool {
        let (small, big) = if self.generation <= other.generation { (self, other) } else { (other, self) };
        let shift = (big.generation - small.generation) as u32;
        if shift > 62 {
            return false;
        }
        let scale = 1i64 << shift;
        let mut boundary_contact = false;
        for i in 0..D {
            let (a0, a1) = (small.index[i], small.index[i] + 1);
            let (b0, b1) = (big.index[i] * scale, (big.index[i] + 1) * scale);
            if a1 < b0 || b1 < a0 {
                return false;
            }
            if a1 == b0 || b1 == a0 {
                boundary_contact = true;
            }
        }
        boundary_contact
    }
}

#[inline]
fn side_of(generation: i32) -> f64 {
    2f64.powi(generation)
}

/// A Whitney cube together with its certified distance data.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertifiedCube<const D: usize> {
    pub cube: DyadicCube<D>,
    /// Signed distance at the cube center.
    pub center_distance: f64,
    /// Lower bound of `dist(·, ∂Ω)` over the cube.
    pub dist_lo: f64,
    /// Upper bound of `dist(·, ∂Ω)` over the cube.
    pub dist_hi: f64,
    /// Upper bound of `dist(Q, ∂Ω) = inf_Q dist(·, ∂Ω)`.
    pub inf_upper: f64,
}

#[derive(Clone, Debug)]
pub struct WhitneyDecomposition<const D: usize> {
    entries: Vec<CertifiedCube<D>>,
    min_generation: i32,
    domain_name: String,
    lookup: HashMap<DyadicCube<D>, usize>,
    generations: BTreeSet<i32>,
    inradius: Option<f64>,
}

enum Verdict<const D: usize> {
    Accept(CertifiedCube<D>),
    Split,
    Drop,
}

fn classify<const D: usize>(domain: &Domain<D>, cube: &DyadicCube<D>, min_generation: i32) -> Verdict<D> {
    let b = cube_bounds(domain, cube);
    let s = (D as f64).sqrt() * cube.side();
    if b.hi <= 0.0 {
        Verdict::Drop
    } else if b.lo >= s && b.inf_upper <= 4.0 * s {
        Verdict::Accept(CertifiedCube {
            cube: *cube,
            center_distance: b.center,
            dist_lo: b.lo,
            dist_hi: b.hi,
            inf_upper: b.inf_upper,
        })
    } else if cube.generation > min_generation {
        Verdict::Split
    } else {
        Verdict::Drop
    }
}

/// Generation of the root cubes and the roots covering the bounding box.
fn roots<const D: usize>(domain: &Domain<D>, min_generation: i32) -> Result<Vec<DyadicCube<D>>> {
    if min_generation < FINEST_GENERATION {
        return Err(Error::Config(format!(
            "min_generation {min_generation} is below the supported floor {FINEST_GENERATION}"
        )));
    }
    let (lo, hi) = domain.bounding_box();
    let extent = (0..D).map(|i| hi.0[i] - lo.0[i]).fold(0.0, f64::max);
    let top = extent.log2().ceil() as i32;
    let root_side = side_of(top);
    let ranges: Vec<(i64, i64)> =
        (0..D).map(|i| ((lo.0[i] / root_side).floor() as i64, (hi.0[i] / root_side).floor() as i64)).collect();
    let mut out = Vec::new();
    let mut index = [0i64; D];
    enumerate_box(&ranges, 0, &mut index, &mut |ix| out.push(DyadicCube::new(top, ix)));
    Ok(out)
}

/// Builds the Whitney decomposition down to `min_generation`.
pub fn decompose<const D: usize>(domain: &Domain<D>, min_generation: i32) -> Result<WhitneyDecomposition<D>> {
    let mut current = roots(domain, min_generation)?;
    let mut entries = Vec::new();
    while !current.is_empty() {
        let verdicts: Vec<Verdict<D>> = current.par_iter().map(|cube| classify(domain, cube, min_generation)).collect();
        let mut next = Vec::new();
        for (cube, verdict) in current.iter().zip(verdicts) {
            match verdict {
                Verdict::Accept(c) => entries.push(c),
                Verdict::Split => next.extend(cube.children()),
                Verdict::Drop => {}
            }
        }
        current = next;
    }
    if entries.is_empty() {
        return Err(Error::NoCubeAccepted { min_generation });
    }
    let mut decomposition = WhitneyDecomposition::from_entries(entries, min_generation, domain.name().to_string());
    decomposition.inradius = Some(inradius(domain, &decomposition)?);
    Ok(decomposition)
}

/// Per-generation counts `#Q_k` of the decomposition [`decompose`] would
/// build, computed depth-first without storing cubes. Suited to depths
/// where the full decomposition does not fit in memory.
pub fn count_generations<const D: usize>(domain: &Domain<D>, min_generation: i32) -> Result<BTreeMap<i32, usize>> {
    fn visit<const D: usize>(domain: &Domain<D>, cube: &DyadicCube<D>, min_generation: i32, counts: &mut [usize]) {
        match classify(domain, cube, min_generation) {
            Verdict::Accept(_) => counts[(cube.generation - min_generation) as usize] += 1,
            Verdict::Split => {
                for child in cube.children() {
                    visit(domain, &child, min_generation, counts);
                }
            }
            Verdict::Drop => {}
        }
    }
    let mut frontier = roots(domain, min_generation)?;
    let levels = (frontier[0].generation - min_generation + 1).max(1) as usize;
    let mut counts = vec![0usize; levels];
    // breadth-first for a few levels so the depth-first work spreads over threads
    for _ in 0..4 {
        let mut next = Vec::new();
        for cube in &frontier {
            match classify(domain, cube, min_generation) {
                Verdict::Accept(_) => counts[(cube.generation - min_generation) as usize] += 1,
                Verdict::Split => next.extend(cube.children()),
                Verdict::Drop => {}
            }
        }
        frontier = next;
    }
    let deep = frontier
        .par_iter()
        .map(|cube| {
            let mut counts = vec![0usize; levels];
            visit(domain, cube, min_generation, &mut counts);
            counts
        })
        .reduce(|| vec![0usize; levels], |a, b| a.iter().zip(&b).map(|(x, y)| x + y).collect());
    for (c, d) in counts.iter_mut().zip(deep) {
        *c += d;
    }
    let out: BTreeMap<i32, usize> =
        counts.into_iter().enumerate().filter(|&(_, n)| n > 0).map(|(i, n)| (i as i32 + min_generation, n)).collect();
    if out.is_empty() {
        return Err(Error::NoCubeAccepted { min_generation });
    }
    Ok(out)
}

fn enumerate_box<const D: usize>(
    ranges: &[(i64, i64)],
    dim: usize,
    index: &mut [i64; D],
    f: &mut impl FnMut([i64; D]),
) {
    if dim == D {
        f(*index);
        return;
    }
    for i in ranges[dim].0..=ranges[dim].1 {
        index[dim] = i;
        enumerate_box(ranges, dim + 1, index, f);
    }
}

/// Counts of violations of the four Whitney properties.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct InvariantReport {
    pub cubes: usize,
    /// Cubes whose interior overlaps another cube (nested dyadic cubes).
    pub overlaps: usize,
    /// Cubes failing `√d·ℓ ≤ dist ≤ 4√d·ℓ` on their certified bounds.
    pub distance_violations: usize,
    /// Touching pairs with side ratio above 4.
    pub ratio_violations: usize,
    pub max_side_ratio: f64,
    /// Cubes touching more than `12^d` others.
    pub neighbor_violations: usize,
    pub max_neighbors: usize,
}

impl InvariantReport {
    pub fn is_clean(&self) -> bool {
        self.overlaps == 0
            && self.distance_violations == 0
            && self.ratio_violations == 0
            && self.neighbor_violations == 0
    }
}

/// Outcome of checking `#S_ε ≍ ε^{-d_M}` on dyadic radii.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    /// `(k, #S_{2^k})` for every radius used.
    pub layer_sizes: Vec<(i32, usize)>,
    pub fitted_dimension: f64,
    /// max/min of `#S_{2^k}·2^{k·d_M}` across radii.
    pub spread: f64,
    pub holds: bool,
}

/// Spread threshold under which the layer counts count as self-similar.
pub const HYPOTHESIS_SPREAD_LIMIT: f64 = 10.0;

impl<const D: usize> WhitneyDecomposition<D> {
    /// Assembles a decomposition from accepted cubes (sorted internally).
    pub fn from_entries(mut entries: Vec<CertifiedCube<D>>, min_generation: i32, domain_name: String) -> Self {
        entries.sort_by_key(|e| e.cube);
        let lookup = entries.iter().enumerate().map(|(i, e)| (e.cube, i)).collect();
        let generations = entries.iter().map(|e| e.cube.generation).collect();
        Self { entries, min_generation, domain_name, lookup, generations, inradius: None }
    }

    /// Certified `sup dist(·, ∂Ω)` when computed by [`decompose`].
    pub fn inradius(&self) -> Option<f64> {
        self.inradius
    }

    pub fn entries(&self) -> &[CertifiedCube<D>] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn min_generation(&self) -> i32 {
        self.min_generation
    }

    pub fn domain_name(&self) -> &str {
        &self.domain_name
    }

    pub fn get(&self, cube: &DyadicCube<D>) -> Option<&CertifiedCube<D>> {
        self.lookup.get(cube).map(|&i| &self.entries[i])
    }

    /// The cubes of generation `k` (the collection `Q_k`).
    pub fn generation(&self, k: i32) -> impl Iterator<Item = &CertifiedCube<D>> {
        self.entries.iter().filter(move |e| e.cube.generation == k)
    }

    pub fn r_omega(&self) -> Result<f64> {
        r_omega(self)
    }

    /// Some cube containing `p`, if any.
    pub fn find_containing(&self, p: &Point<D>) -> Option<&CertifiedCube<D>> {
        self.generations
            .iter()
            .find_map(|&k| self.get(&DyadicCube::containing(k, p)).filter(|e| e.cube.contains_point(p)))
    }

    /// The layer `S_r`: cubes whose certified distance interval contains `r`.
    pub fn layer(&self, r: f64) -> Result<Vec<CertifiedCube<D>>> {
        let lo = side_of(self.min_generation);
        let hi = self.r_omega()?;
        if !(r >= lo && r <= hi) {
            return Err(Error::OutOfRange { r, lo, hi });
        }
        let layer: Vec<_> = self.entries.iter().filter(|e| e.dist_lo <= r && r <= e.dist_hi).copied().collect();
        if layer.is_empty() {
            return Err(Error::EmptyLayer(r));
        }
        Ok(layer)
    }

    /// Number of cubes in `S_r` without range checks; zero outside coverage.
    pub fn layer_size(&self, r: f64) -> usize {
        self.entries.iter().filter(|e| e.dist_lo <= r && r <= e.dist_hi).count()
    }

    /// `W = #Q_k` for every generation present.
    pub fn layer_counts(&self) -> BTreeMap<i32, usize> {
        let mut counts = BTreeMap::new();
        for e in &self.entries {
            *counts.entry(e.cube.generation).or_insert(0) += 1;
        }
        counts
    }

    /// Touching pairs `(i, j)` of entry indices, each pair once.
    pub fn touching_pairs(&self) -> Vec<(usize, usize)> {
        let max_gen = match self.generations.last() {
            Some(&g) => g,
            None => return Vec::new(),
        };
        let mut pairs = Vec::new();
        let mut offsets = Vec::with_capacity(3usize.pow(D as u32));
        let mut off = [0i64; D];
        enumerate_box(&[(-1, 1); D], 0, &mut off, &mut |o| offsets.push(o));
        for (i, e) in self.entries.iter().enumerate() {
            let a = e.cube;
            for levels in 0..=(max_gen - a.generation) as u32 {
                let anc = a.ancestor(levels);
                for o in &offsets {
                    let mut index = anc.index;
                    for d in 0..D {
                        index[d] += o[d];
                    }
                    let cand = DyadicCube::new(anc.generation, index);
                    if levels == 0 && cand <= a {
                        // same-size pairs are recorded from the smaller index
                        continue;
                    }
                    if let Some(&j) = self.lookup.get(&cand) {
                        if a.touches(&cand) {
                            pairs.push((i, j));
                        }
                    }
                }
            }
        }
        pairs
    }

    /// Exhaustive check of the four Whitney properties.
    pub fn verify_invariants(&self) -> InvariantReport {
        let sqrt_d = (D as f64).sqrt();
        let max_gen = self.generations.last().copied().unwrap_or(0);
        let mut report = InvariantReport { cubes: self.entries.len(), max_side_ratio: 1.0, ..Default::default() };
        for e in &self.entries {
            let s = sqrt_d * e.cube.side();
            if !(e.dist_lo >= s && e.inf_upper <= 4.0 * s) {
                report.distance_violations += 1;
            }
            let nested = (1..=(max_gen - e.cube.generation).max(0) as u32)
                .any(|l| self.lookup.contains_key(&e.cube.ancestor(l)));
            if nested {
                report.overlaps += 1;
            }
        }
        let mut degree = vec![0usize; self.entries.len()];
        for (i, j) in self.touching_pairs() {
            degree[i] += 1;
            degree[j] += 1;
            let gi = self.entries[i].cube.generation;
            let gj = self.entries[j].cube.generation;
            let ratio = 2f64.powi((gi - gj).abs());
            report.max_side_ratio = report.max_side_ratio.max(ratio);
            if ratio > 4.0 {
                report.ratio_violations += 1;
            }
        }
        let limit = 12usize.pow(D as u32);
        report.max_neighbors = degree.iter().copied().max().unwrap_or(0);
        report.neighbor_violations = degree.iter().filter(|&&n| n > limit).count();
        report
    }

    /// Fits `#S_{2^k} ≍ 2^{-k·d_M}` over the dyadic radii between
    /// `2^{min_generation+3}` and `R_Ω`.
    pub fn check_self_similarity_hypothesis(&self) -> Result<HypothesisReport> {
        let r_max = self.r_omega()?;
        let k_hi = r_max.log2().floor() as i32;
        let layer_sizes: Vec<(i32, usize)> = (self.min_generation + 3..=k_hi)
            .map(|k| (k, self.layer_size(side_of(k))))
            .filter(|&(_, n)| n > 0)
            .collect();
        if layer_sizes.len() < 4 {
            return Err(Error::InsufficientData(format!(
                "self-similarity check needs at least 4 dyadic radii, have {}",
                layer_sizes.len()
            )));
        }
        let xs: Vec<f64> = layer_sizes.iter().map(|&(k, _)| -(k as f64)).collect();
        let ys: Vec<f64> = layer_sizes.iter().map(|&(_, n)| (n as f64).log2()).collect();
        let fitted_dimension = crate::analysis::least_squares(&xs, &ys).slope;
        let normalised: Vec<f64> =
            layer_sizes.iter().map(|&(k, n)| n as f64 * 2f64.powf(k as f64 * fitted_dimension)).collect();
        let max = normalised.iter().copied().fold(f64::MIN, f64::max);
        let min = normalised.iter().copied().fold(f64::MAX, f64::min);
        let spread = max / min;
        Ok(HypothesisReport { layer_sizes, fitted_dimension, spread, holds: spread <= HYPOTHESIS_SPREAD_LIMIT })
    }

    /// CSV dump: `generation,index_0..index_{d-1},dist_lo,dist_hi`, one row
    /// per cube in canonical order. Header lines starting with `#` may be
    /// prepended by callers.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("generation");
        for i in 0..D {
            let _ = write!(out, ",index_{i}");
        }
        out.push_str(",dist_lo,dist_hi\n");
        for e in &self.entries {
            let _ = write!(out, "{}", e.cube.generation);
            for ix in e.cube.index {
                let _ = write!(out, ",{ix}");
            }
            let _ = writeln!(out, ",{:e},{:e}", e.dist_lo, e.dist_hi);
        }
        out
    }
}
