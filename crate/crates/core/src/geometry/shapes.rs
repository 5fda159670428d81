use super::{Point, SignedDistance};

/// Axis-aligned box `Π [lo_i, hi_i]` (squares, rectangles, 3d boxes).
#[derive(Clone, Debug)]
pub struct AxisBox<const D: usize> {
    lo: Point<D>,
    hi: Point<D>,
}

impl<const D: usize> AxisBox<D> {
    pub fn new(lo: Point<D>, hi: Point<D>) -> Self {
        debug_assert!((0..D).all(|i| lo.0[i] < hi.0[i]));
        Self { lo, hi }
    }

    pub fn centered(center: Point<D>, sides: [f64; D]) -> Self {
        let lo = Point(std::array::from_fn(|i| center.0[i] - sides[i] / 2.0));
        let hi = Point(std::array::from_fn(|i| center.0[i] + sides[i] / 2.0));
        Self::new(lo, hi)
    }
}

impl<const D: usize> SignedDistance<D> for AxisBox<D> {
    #[inline]
    fn signed_distance(&self, p: &Point<D>) -> f64 {
        let mut inside = f64::INFINITY;
        let mut outside2 = 0.0;
        for i in 0..D {
            let below = self.lo.0[i] - p.0[i];
            let above = p.0[i] - self.hi.0[i];
            let gap = below.max(above);
            if gap > 0.0 {
                outside2 += gap * gap;
            }
            inside = inside.min(-gap);
        }
        if outside2 > 0.0 {
            -outside2.sqrt()
        } else {
            inside
        }
    }

    fn extent(&self) -> (Point<D>, Point<D>) {
        (self.lo, self.hi)
    }
}

#[derive(Clone, Debug)]
pub struct Ball<const D: usize> {
    center: Point<D>,
    radius: f64,
}

impl<const D: usize> Ball<D> {
    pub fn new(center: Point<D>, radius: f64) -> Self {
        Self { center, radius }
    }
}

impl<const D: usize> SignedDistance<D> for Ball<D> {
    #[inline]
    fn signed_distance(&self, p: &Point<D>) -> f64 {
        self.radius - p.distance(&self.center)
    }

    fn extent(&self) -> (Point<D>, Point<D>) {
        let mut lo = self.center;
        let mut hi = self.center;
        for i in 0..D {
            lo.0[i] -= self.radius;
            hi.0[i] += self.radius;
        }
        (lo, hi)
    }
}
