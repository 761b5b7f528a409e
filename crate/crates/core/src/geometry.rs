//! Points and axis-aligned boxes in the plane.

use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Neg, Sub};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, o: Point2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, o: Point2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm2(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    pub fn norm(self) -> f64 {
        self.norm2().sqrt()
    }

    pub fn dist(self, o: Point2) -> f64 {
        (self - o).norm()
    }

    pub fn coord(self, axis: usize) -> f64 {
        if axis == 0 {
            self.x
        } else {
            self.y
        }
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl Neg for Point2 {
    type Output = Point2;
    fn neg(self) -> Point2 {
        Point2::new(-self.x, -self.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, s: f64) -> Point2 {
        Point2::new(self.x * s, self.y * s)
    }
}

impl Mul<Point2> for f64 {
    type Output = Point2;
    fn mul(self, p: Point2) -> Point2 {
        p * self
    }
}

/// Closed axis-aligned rectangle `[lo.x, hi.x] x [lo.y, hi.y]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Box2 {
    pub lo: Point2,
    pub hi: Point2,
}

impl Box2 {
    pub fn new(lo: Point2, hi: Point2) -> Self {
        Self { lo, hi }
    }

    /// An empty box that acts as the identity for [`Box2::union`].
    pub fn empty() -> Self {
        Self {
            lo: Point2::new(f64::INFINITY, f64::INFINITY),
            hi: Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
        }
    }

    pub fn from_points<I: IntoIterator<Item = Point2>>(pts: I) -> Self {
        let mut b = Self::empty();
        for p in pts {
            b.include(p);
        }
        b
    }

    pub fn is_empty(&self) -> bool {
        self.lo.x > self.hi.x || self.lo.y > self.hi.y
    }

    pub fn include(&mut self, p: Point2) {
        self.lo.x = self.lo.x.min(p.x);
        self.lo.y = self.lo.y.min(p.y);
        self.hi.x = self.hi.x.max(p.x);
        self.hi.y = self.hi.y.max(p.y);
    }

    pub fn union(&self, o: &Box2) -> Box2 {
        Box2::new(
            Point2::new(self.lo.x.min(o.lo.x), self.lo.y.min(o.lo.y)),
            Point2::new(self.hi.x.max(o.hi.x), self.hi.y.max(o.hi.y)),
        )
    }

    pub fn center(&self) -> Point2 {
        (self.lo + self.hi) * 0.5
    }

    pub fn width(&self, axis: usize) -> f64 {
        self.hi.coord(axis) - self.lo.coord(axis)
    }

    /// Length of the diagonal.
    pub fn diameter(&self) -> f64 {
        (self.hi - self.lo).norm()
    }

    /// Euclidean distance between the two boxes (zero if they intersect).
    pub fn distance(&self, o: &Box2) -> f64 {
        let gx = (o.lo.x - self.hi.x).max(self.lo.x - o.hi.x).max(0.0);
        let gy = (o.lo.y - self.hi.y).max(self.lo.y - o.hi.y).max(0.0);
        (gx * gx + gy * gy).sqrt()
    }

    pub fn contains(&self, p: Point2) -> bool {
        p.x >= self.lo.x && p.x <= self.hi.x && p.y >= self.lo.y && p.y <= self.hi.y
    }

    /// Widens every side narrower than `min_width` symmetrically about its midpoint.
    pub fn inflated(&self, min_width: f64) -> Box2 {
        let mut b = *self;
        for axis in 0..2 {
            let w = b.width(axis);
            if w < min_width {
                let pad = 0.5 * (min_width - w);
                if axis == 0 {
                    b.lo.x -= pad;
                    b.hi.x += pad;
                } else {
                    b.lo.y -= pad;
                    b.hi.y += pad;
                }
            }
        }
        b
    }
}
