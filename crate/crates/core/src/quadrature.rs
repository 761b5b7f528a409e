//! Gauss-Legendre rules on `[0, 1]` and quadrature rules on triangles.

use crate::error::{Error, Result};
use crate::geometry::Point2;

/// Gauss-Legendre rule on `[0, 1]`, nodes ascending, weights summing to one.
#[derive(Clone, Debug)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integrates `f` over `[a, b]`.
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let h = b - a;
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w * f(a + h * t))
            .sum::<f64>()
            * h
    }
}

/// `n`-point Gauss-Legendre rule mapped to `[0, 1]`.
///
/// Nodes are the roots of the Legendre polynomial found by Newton iteration
/// from Chebyshev initial guesses.
pub fn gauss01(n: usize) -> GaussRule {
    assert!(n > 0, "Gauss rule needs at least one point");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // x is the i-th largest root on [-1, 1].
        nodes[n - 1 - i] = 0.5 * (1.0 + x);
        nodes[i] = 0.5 * (1.0 - x);
        weights[n - 1 - i] = 0.5 * w;
        weights[i] = 0.5 * w;
    }
    GaussRule { nodes, weights }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Quadrature rule on a triangle, stored in barycentric coordinates.
///
/// Weights sum to one, so the rule on a physical triangle uses
/// `area * weight`. The barycentric coordinates double as the values of the
/// three nodal P1 shape functions.
#[derive(Clone, Debug, PartialEq)]
pub struct TriangleRule {
    pub bary: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    /// Highest total polynomial degree integrated exactly.
    pub degree: usize,
}

impl TriangleRule {
    /// Symmetric rule with the given number of points (1, 3, 6 or 7).
    ///
    /// The 3-point rule sits at the edge midpoints.
    pub fn symmetric(points: usize) -> Result<Self> {
        match points {
            1 => Ok(Self {
                bary: vec![[1.0 / 3.0; 3]],
                weights: vec![1.0],
                degree: 1,
            }),
            3 => Ok(Self {
                bary: vec![[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]],
                weights: vec![1.0 / 3.0; 3],
                degree: 2,
            }),
            6 => {
                let mut r = Self { bary: vec![], weights: vec![], degree: 4 };
                r.push_orbit(0.445_948_490_915_965, 0.223_381_589_678_011);
                r.push_orbit(0.091_576_213_509_771, 0.109_951_743_655_322);
                Ok(r)
            }
            7 => {
                let mut r = Self {
                    bary: vec![[1.0 / 3.0; 3]],
                    weights: vec![0.225],
                    degree: 5,
                };
                r.push_orbit(0.470_142_064_105_115, 0.132_394_152_788_506);
                r.push_orbit(0.101_286_507_323_456, 0.125_939_180_544_827);
                Ok(r)
            }
            other => Err(Error::UnsupportedOrder(other)),
        }
    }

    fn push_orbit(&mut self, a: f64, w: f64) {
        let b = 1.0 - 2.0 * a;
        for p in [[a, a, b], [a, b, a], [b, a, a]] {
            self.bary.push(p);
            self.weights.push(w);
        }
    }

    /// Collapsed tensor Gauss rule with `n * n` points.
    ///
    /// The square is mapped onto the triangle by `(xi, eta) -> (xi, xi * eta)`,
    /// exact for total degree `2n - 2`.
    pub fn collapsed(n: usize) -> Self {
        let g = gauss01(n);
        let mut bary = Vec::with_capacity(n * n);
        let mut weights = Vec::with_capacity(n * n);
        for (&xi, &wx) in g.nodes.iter().zip(&g.weights) {
            for (&eta, &we) in g.nodes.iter().zip(&g.weights) {
                let x1 = xi;
                let x2 = xi * eta;
                bary.push([1.0 - x1, x1 - x2, x2]);
                weights.push(2.0 * wx * we * xi);
            }
        }
        Self { bary, weights, degree: 2 * n - 2 }
    }

    /// Parses `"1"`, `"3"`, `"6"`, `"7"` or `"gauss-N"`.
    pub fn parse(spec: &str) -> Result<Self> {
        if let Some(n) = spec.strip_prefix("gauss-") {
            let n: usize = n.parse().map_err(|_| Error::Parse(format!("bad rule {spec}")))?;
            if n == 0 {
                return Err(Error::UnsupportedOrder(0));
            }
            return Ok(Self::collapsed(n));
        }
        let n: usize = spec.parse().map_err(|_| Error::Parse(format!("bad rule {spec}")))?;
        Self::symmetric(n)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Physical points of the rule on the triangle `v`.
    pub fn map(&self, v: &[Point2; 3]) -> impl Iterator<Item = Point2> + '_ {
        let v = *v;
        self.bary
            .iter()
            .map(move |b| v[0] * b[0] + v[1] * b[1] + v[2] * b[2])
    }
}

/// Signed area of the triangle `(a, b, c)`, positive when counter-clockwise.
pub fn signed_area(a: Point2, b: Point2, c: Point2) -> f64 {
    0.5 * (b - a).cross(c - a)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_integrates_polynomials_exactly() {
        for n in 1..=20 {
            let g = gauss01(n);
            assert!((g.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            for k in 0..(2 * n) {
                let v = g.integrate(0.0, 1.0, |x| x.powi(k as i32));
                assert!((v - 1.0 / (k as f64 + 1.0)).abs() < 1e-13, "n={n} k={k}");
            }
            assert!(g.nodes.windows(2).all(|w| w[0] < w[1]));
        }
    }

    fn monomial_exact(i: i32, j: i32) -> f64 {
        // Integral of x^i y^j over the unit simplex {x, y >= 0, x + y <= 1}
        // is i! j! / (i + j + 2)!; divide by its area 1/2.
        let f = |k: i32| (1..=k).map(f64::from).product::<f64>();
        2.0 * f(i) * f(j) / f(i + j + 2)
    }

    #[test]
    fn triangle_rules_are_exact_to_their_degree() {
        let mut rules: Vec<TriangleRule> =
            [1, 3, 6, 7].iter().map(|&n| TriangleRule::symmetric(n).unwrap()).collect();
        rules.extend((2..=8).map(TriangleRule::collapsed));
        for r in rules {
            for i in 0..=r.degree as i32 {
                for j in 0..=(r.degree as i32 - i) {
                    let v: f64 = r
                        .bary
                        .iter()
                        .zip(&r.weights)
                        .map(|(b, w)| w * b[1].powi(i) * b[2].powi(j))
                        .sum();
                    assert!((v - monomial_exact(i, j)).abs() < 1e-12, "deg {} ({i},{j})", r.degree);
                }
            }
        }
    }

    #[test]
    fn unsupported_rule_is_rejected() {
        assert!(matches!(TriangleRule::symmetric(5), Err(Error::UnsupportedOrder(5))));
        assert!(TriangleRule::parse("gauss-4").is_ok());
        assert!(TriangleRule::parse("x").is_err());
    }
}
