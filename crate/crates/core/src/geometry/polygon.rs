//! Simple closed polygons with exact signed distance.
//!
//! Distances are exact point-segment minima, accelerated by a bounding volume
//! hierarchy over contiguous edge ranges (polygon edges in boundary order are
//! spatially coherent). The sign comes from the nearest feature: the edge side
//! for edge interiors, the angle-weighted pseudo-normal for vertices.

use super::{Point, SignedDistance};
use crate::{Error, Result};

const LEAF_SIZE: usize = 8;
const NO_CHILD: u32 = u32::MAX;

#[derive(Clone, Copy, Debug)]
struct Edge {
    a: [f64; 2],
    d: [f64; 2],
    inv_len2: f64,
    /// Unit outward normal (right of the edge for counter-clockwise order).
    normal: [f64; 2],
}

#[derive(Clone, Copy, Debug)]
struct Node {
    lo: [f64; 2],
    hi: [f64; 2],
    start: u32,
    end: u32,
    left: u32,
    right: u32,
}

impl Node {
    #[inline]
    fn distance2(&self, p: &[f64; 2]) -> f64 {
        let dx = (self.lo[0] - p[0]).max(p[0] - self.hi[0]).max(0.0);
        let dy = (self.lo[1] - p[1]).max(p[1] - self.hi[1]).max(0.0);
        dx * dx + dy * dy
    }
}

#[derive(Clone, Debug)]
pub struct Polygon {
    vertices: Vec<[f64; 2]>,
    edges: Vec<Edge>,
    nodes: Vec<Node>,
}

impl Polygon {
    /// Builds a polygon from vertices in counter-clockwise order (clockwise
    /// input is reversed). The polygon is closed implicitly.
    pub fn new(mut vertices: Vec<[f64; 2]>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::Config("polygon needs at least 3 vertices".into()));
        }
        if vertices.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::Config("polygon vertices must be finite".into()));
        }
        let area2: f64 = (0..vertices.len())
            .map(|i| {
                let (p, q) = (vertices[i], vertices[(i + 1) % vertices.len()]);
                p[0] * q[1] - q[0] * p[1]
            })
            .sum();
        if area2 == 0.0 {
            return Err(Error::Config("degenerate polygon".into()));
        }
        if area2 < 0.0 {
            vertices.reverse();
        }
        let n = vertices.len();
        let edges = (0..n)
            .map(|i| {
                let a = vertices[i];
                let b = vertices[(i + 1) % n];
                let d = [b[0] - a[0], b[1] - a[1]];
                let len2 = d[0] * d[0] + d[1] * d[1];
                let len = len2.sqrt();
                Edge { a, d, inv_len2: 1.0 / len2, normal: [d[1] / len, -d[0] / len] }
            })
            .collect::<Vec<_>>();
        if edges.iter().any(|e| !e.inv_len2.is_finite()) {
            return Err(Error::Config("polygon has repeated vertices".into()));
        }
        let mut poly = Self { vertices, edges, nodes: Vec::with_capacity(2 * n / LEAF_SIZE + 1) };
        poly.build(0, n);
        Ok(poly)
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    fn build(&mut self, start: usize, end: usize) -> u32 {
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for e in &self.edges[start..end] {
            for k in 0..2 {
                let (x0, x1) = (e.a[k], e.a[k] + e.d[k]);
                lo[k] = lo[k].min(x0.min(x1));
                hi[k] = hi[k].max(x0.max(x1));
            }
        }
        let id = self.nodes.len() as u32;
        self.nodes.push(Node { lo, hi, start: start as u32, end: end as u32, left: NO_CHILD, right: NO_CHILD });
        if end - start > LEAF_SIZE {
            let mid = start + (end - start) / 2;
            let left = self.build(start, mid);
            let right = self.build(mid, end);
            let node = &mut self.nodes[id as usize];
            node.left = left;
            node.right = right;
        }
        id
    }

    /// Squared distance to the nearest edge, its index and the clamped
    /// projection parameter along it.
    fn nearest(&self, p: &[f64; 2]) -> (f64, usize, f64) {
        let mut best = (f64::INFINITY, 0usize, 0.0);
        let mut stack = [0u32; 64];
        let mut top = 1usize;
        while top > 0 {
            top -= 1;
            let node = &self.nodes[stack[top] as usize];
            if node.distance2(p) >= best.0 {
                continue;
            }
            if node.left == NO_CHILD {
                for i in node.start as usize..node.end as usize {
                    let e = &self.edges[i];
                    let (px, py) = (p[0] - e.a[0], p[1] - e.a[1]);
                    let t = ((px * e.d[0] + py * e.d[1]) * e.inv_len2).clamp(0.0, 1.0);
                    let (qx, qy) = (px - t * e.d[0], py - t * e.d[1]);
                    let d2 = qx * qx + qy * qy;
                    if d2 < best.0 {
                        best = (d2, i, t);
                    }
                }
            } else {
                let (l, r) = (node.left, node.right);
                let dl = self.nodes[l as usize].distance2(p);
                let dr = self.nodes[r as usize].distance2(p);
                // nearer child popped first
                let (near, far, dfar) = if dl <= dr { (l, r, dr) } else { (r, l, dl) };
                if dfar < best.0 {
                    stack[top] = far;
                    top += 1;
                }
                stack[top] = near;
                top += 1;
            }
        }
        best
    }

    fn inside_by_nearest(&self, p: &[f64; 2], edge: usize, t: f64) -> bool {
        let n = self.edges.len();
        let e = &self.edges[edge];
        if t > 0.0 && t < 1.0 {
            let (px, py) = (p[0] - e.a[0], p[1] - e.a[1]);
            return e.d[0] * py - e.d[1] * px > 0.0;
        }
        let (prev, next, v) = if t <= 0.0 {
            ((edge + n - 1) % n, edge, e.a)
        } else {
            (edge, (edge + 1) % n, [e.a[0] + e.d[0], e.a[1] + e.d[1]])
        };
        let (n1, n2) = (self.edges[prev].normal, self.edges[next].normal);
        let pseudo = [n1[0] + n2[0], n1[1] + n2[1]];
        (p[0] - v[0]) * pseudo[0] + (p[1] - v[1]) * pseudo[1] < 0.0
    }
}

impl SignedDistance<2> for Polygon {
    fn signed_distance(&self, p: &Point<2>) -> f64 {
        let (d2, edge, t) = self.nearest(&p.0);
        let d = d2.sqrt();
        if d == 0.0 {
            0.0
        } else if self.inside_by_nearest(&p.0, edge, t) {
            d
        } else {
            -d
        }
    }

    fn extent(&self) -> (Point<2>, Point<2>) {
        let root = &self.nodes[0];
        (Point(root.lo), Point(root.hi))
    }
}

/// Vertices of the Koch snowflake prefractal of the given generation, in
/// counter-clockwise order: an equilateral triangle of side `side` whose
/// centroid is `center`, each edge replaced `generation` times by four
/// edges with an outward bump. There are `3·4^generation` vertices.
pub fn koch_snowflake_vertices(generation: u32, side: f64, center: [f64; 2]) -> Vec<[f64; 2]> {
    let circumradius = side / 3f64.sqrt();
    let mut verts: Vec<[f64; 2]> = [90.0f64, 210.0, 330.0]
        .iter()
        .map(|deg| {
            let a = deg.to_radians();
            [center[0] + circumradius * a.cos(), center[1] + circumradius * a.sin()]
        })
        .collect();
    let h = 3f64.sqrt() / 6.0;
    for _ in 0..generation {
        let n = verts.len();
        let mut next = Vec::with_capacity(4 * n);
        for i in 0..n {
            let p = verts[i];
            let q = verts[(i + 1) % n];
            let d = [q[0] - p[0], q[1] - p[1]];
            let one = [p[0] + d[0] / 3.0, p[1] + d[1] / 3.0];
            let two = [p[0] + 2.0 * d[0] / 3.0, p[1] + 2.0 * d[1] / 3.0];
            let mid = [p[0] + d[0] / 2.0, p[1] + d[1] / 2.0];
            // outward = right-hand normal for counter-clockwise traversal
            let peak = [mid[0] + h * d[1], mid[1] - h * d[0]];
            next.extend_from_slice(&[p, one, peak, two]);
        }
        verts = next;
    }
    verts
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Independent oracle: brute-force edge scan for the distance and the
    /// winding number for the sign.
    fn brute_force(vertices: &[[f64; 2]], p: [f64; 2]) -> f64 {
        let n = vertices.len();
        let mut best = f64::INFINITY;
        let mut winding = 0i32;
        for i in 0..n {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            let d = [b[0] - a[0], b[1] - a[1]];
            let (px, py) = (p[0] - a[0], p[1] - a[1]);
            let t = ((px * d[0] + py * d[1]) / (d[0] * d[0] + d[1] * d[1])).clamp(0.0, 1.0);
            let (qx, qy) = (px - t * d[0], py - t * d[1]);
            best = best.min(qx * qx + qy * qy);
            let cross = d[0] * py - d[1] * px;
            if a[1] <= p[1] {
                if b[1] > p[1] && cross > 0.0 {
                    winding += 1;
                }
            } else if b[1] <= p[1] && cross < 0.0 {
                winding -= 1;
            }
        }
        if winding != 0 {
            best.sqrt()
        } else {
            -best.sqrt()
        }
    }

    #[test]
    fn vertex_count_and_orientation() {
        for g in 0..5 {
            let v = koch_snowflake_vertices(g, 1.0, [0.0, 0.0]);
            assert_eq!(v.len(), 3 * 4usize.pow(g));
            let poly = Polygon::new(v.clone()).unwrap();
            // already counter-clockwise, so untouched
            assert_eq!(poly.vertices()[1], v[1]);
        }
    }

    #[test]
    fn koch_distance_matches_brute_force() {
        let verts = koch_snowflake_vertices(4, 1.0, [1.0 / 3.0, 1.0 / 3.0]);
        let poly = Polygon::new(verts.clone()).unwrap();
        let (lo, hi) = poly.extent();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let p = [rng.random_range(lo.0[0] - 0.1..hi.0[0] + 0.1), rng.random_range(lo.0[1] - 0.1..hi.0[1] + 0.1)];
            let fast = poly.signed_distance(&Point(p));
            let slow = brute_force(&verts, p);
            assert!((fast - slow).abs() <= 1e-12, "p={p:?} fast={fast} slow={slow}");
        }
    }

    #[test]
    fn near_vertex_signs_match_winding() {
        let verts = koch_snowflake_vertices(3, 1.0, [0.0, 0.0]);
        let poly = Polygon::new(verts.clone()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for v in &verts {
            for _ in 0..4 {
                let p = [v[0] + rng.random_range(-1e-3..1e-3), v[1] + rng.random_range(-1e-3..1e-3)];
                let fast = poly.signed_distance(&Point(p));
                let slow = brute_force(&verts, p);
                assert!((fast - slow).abs() <= 1e-12, "p={p:?} fast={fast} slow={slow}");
            }
        }
    }

    #[test]
    fn clockwise_input_is_reoriented() {
        let poly = Polygon::new(vec![[0.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, 0.0]]).unwrap();
        assert!((poly.signed_distance(&Point([0.5, 0.25])) - 0.25).abs() < 1e-15);
        assert!((poly.signed_distance(&Point([1.5, 0.5])) + 0.5).abs() < 1e-15);
    }

    #[test]
    fn degenerate_polygons_are_rejected() {
        assert!(Polygon::new(vec![[0.0, 0.0], [1.0, 0.0]]).is_err());
        assert!(Polygon::new(vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]).is_err());
    }
}
