//! Tensor Chebyshev interpolation on boxes.

use std::f64::consts::PI;

use crate::geometry::{Box2, Point2};

/// Tensor interpolation with `p` first-kind Chebyshev points per axis.
///
/// Tensor indices are `alpha = a1 + p * a2`, `a1` running along `x`.
#[derive(Clone, Debug)]
pub struct ChebInterp {
    pub p: usize,
    /// Reference nodes on `[-1, 1]`.
    nodes: Vec<f64>,
    /// Barycentric weights of the reference nodes.
    bary: Vec<f64>,
}

impl ChebInterp {
    pub fn new(p: usize) -> Self {
        assert!(p >= 1, "interpolation order must be at least 1");
        let nodes = (0..p)
            .map(|k| if 2 * k + 1 == p { 0.0 } else { ((2 * k + 1) as f64 * PI / (2 * p) as f64).cos() })
            .collect();
        let bary = (0..p)
            .map(|k| {
                let s = ((2 * k + 1) as f64 * PI / (2 * p) as f64).sin();
                if k % 2 == 0 {
                    s
                } else {
                    -s
                }
            })
            .collect();
        Self { p, nodes, bary }
    }

    /// Number of tensor nodes, `p^2`.
    pub fn rank(&self) -> usize {
        self.p * self.p
    }

    fn node_1d(&self, lo: f64, hi: f64, k: usize) -> f64 {
        0.5 * (lo + hi) + 0.5 * (hi - lo) * self.nodes[k]
    }

    /// The `p^2` interpolation nodes of `b`.
    pub fn nodes(&self, b: &Box2) -> Vec<Point2> {
        let mut out = Vec::with_capacity(self.rank());
        for a2 in 0..self.p {
            let y = self.node_1d(b.lo.y, b.hi.y, a2);
            for a1 in 0..self.p {
                out.push(Point2::new(self.node_1d(b.lo.x, b.hi.x, a1), y));
            }
        }
        out
    }

    /// Values of the `p` Lagrange polynomials of `[lo, hi]` at `x`.
    pub fn lagrange_1d(&self, lo: f64, hi: f64, x: f64, out: &mut [f64]) {
        let t = if hi > lo { (2.0 * x - lo - hi) / (hi - lo) } else { 0.0 };
        let mut sum = 0.0;
        for k in 0..self.p {
            let d = t - self.nodes[k];
            if d == 0.0 {
                out[..self.p].iter_mut().for_each(|v| *v = 0.0);
                out[k] = 1.0;
                return;
            }
            out[k] = self.bary[k] / d;
            sum += out[k];
        }
        let inv = 1.0 / sum;
        out[..self.p].iter_mut().for_each(|v| *v *= inv);
    }

    /// Values of the `p^2` tensor Lagrange polynomials of `b` at `x`.
    pub fn lagrange(&self, b: &Box2, x: Point2, out: &mut [f64]) {
        let p = self.p;
        let mut lx = vec![0.0; p];
        let mut ly = vec![0.0; p];
        self.lagrange_1d(b.lo.x, b.hi.x, x.x, &mut lx);
        self.lagrange_1d(b.lo.y, b.hi.y, x.y, &mut ly);
        for a2 in 0..p {
            for a1 in 0..p {
                out[a1 + p * a2] = lx[a1] * ly[a2];
            }
        }
    }

    /// Transfer matrix, row-major `[beta][alpha]`: the parent's Lagrange
    /// polynomial `alpha` evaluated at the child's node `beta`.
    pub fn transfer(&self, parent: &Box2, child: &Box2) -> Vec<f64> {
        let k = self.rank();
        let mut e = vec![0.0; k * k];
        for (beta, x) in self.nodes(child).into_iter().enumerate() {
            self.lagrange(parent, x, &mut e[beta * k..(beta + 1) * k]);
        }
        e
    }
}

/// Box suitable for interpolation: sides narrower than a millionth of the
/// diagonal, or than `1e-9 * scale` for single points, are widened.
pub fn interp_box(b: &Box2, scale: f64) -> Box2 {
    b.inflated((1e-6 * b.diameter()).max(1e-9 * scale))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bx() -> Box2 {
        Box2::new(Point2::new(-1.0, 0.5), Point2::new(2.0, 1.5))
    }

    #[test]
    fn order_one_is_the_center() {
        let c = ChebInterp::new(1);
        let b = bx();
        assert_eq!(c.nodes(&b), vec![b.center()]);
        let mut w = [0.0];
        c.lagrange(&b, Point2::new(0.3, 0.7), &mut w);
        assert_eq!(w[0], 1.0);
    }

    #[test]
    fn kronecker_at_nodes_and_partition_of_unity() {
        let c = ChebInterp::new(5);
        let b = bx();
        let mut w = vec![0.0; 25];
        for (a, x) in c.nodes(&b).into_iter().enumerate() {
            c.lagrange(&b, x, &mut w);
            for (k, v) in w.iter().enumerate() {
                assert!((v - if k == a { 1.0 } else { 0.0 }).abs() < 1e-14);
            }
        }
        c.lagrange(&b, Point2::new(0.123, 0.987), &mut w);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn identical_child_gives_identity_transfer() {
        let c = ChebInterp::new(4);
        let e = c.transfer(&bx(), &bx());
        for i in 0..16 {
            for j in 0..16 {
                assert!((e[i * 16 + j] - if i == j { 1.0 } else { 0.0 }).abs() < 1e-14);
            }
        }
    }
}
