//! Slow, independent reference computations used to validate the fast
//! algorithms.
//!
//! Touching element pairs are integrated in the difference variable
//! `z = x - y`: for fixed `z` the inner integral runs over the convex
//! polygon `t1 ∩ (t2 + z)` and the outer integral over `z` is done in polar
//! coordinates, split wherever the polygon changes combinatorially. This
//! shares no code with the collapsed-coordinate rules of [`crate::nearfield`].

use std::collections::HashMap;
use std::f64::consts::PI;

use crate::fields::Kernel;
use crate::geometry::Point2;
use crate::mesh::{barycentric, Mesh};
use crate::quadrature::{gauss01, signed_area, GaussRule, TriangleRule};

/// A triangle together with the global ids of its vertices.
#[derive(Clone, Copy, Debug)]
pub struct NodalTriangle {
    pub v: [Point2; 3],
    pub ids: [usize; 3],
}

impl NodalTriangle {
    pub fn from_mesh(mesh: &Mesh, t: usize) -> Self {
        Self { v: mesh.element_vertices(t), ids: mesh.triangles[t].v }
    }

    fn ccw(mut self) -> Self {
        if signed_area(self.v[0], self.v[1], self.v[2]) < 0.0 {
            self.v.swap(1, 2);
            self.ids.swap(1, 2);
        }
        self
    }

    /// Values of the nodal basis functions listed in `nodes` at `p`.
    fn shape(&self, nodes: &[usize], p: Point2, out: &mut [f64]) {
        let l = barycentric(&self.v, p);
        for (o, n) in out.iter_mut().zip(nodes) {
            *o = self.ids.iter().position(|i| i == n).map_or(0.0, |k| l[k]);
        }
    }
}

/// Union of the vertex ids of two triangles, first triangle first.
pub fn pair_nodes(a: &NodalTriangle, b: &NodalTriangle) -> Vec<usize> {
    let mut nodes = a.ids.to_vec();
    for i in b.ids {
        if !nodes.contains(&i) {
            nodes.push(i);
        }
    }
    nodes
}

/// Dense symmetric matrix indexed by `nodes`.
#[derive(Clone, Debug)]
pub struct NodalMatrix {
    pub nodes: Vec<usize>,
    pub values: Vec<f64>,
}

impl NodalMatrix {
    pub fn get_global(&self, i: usize, j: usize) -> Option<f64> {
        let a = self.nodes.iter().position(|&n| n == i)?;
        let b = self.nodes.iter().position(|&n| n == j)?;
        Some(self.values[a * self.nodes.len() + b])
    }
}

fn sutherland_hodgman(subject: &[Point2], clip: &[Point2; 3]) -> Vec<Point2> {
    let mut out: Vec<Point2> = subject.to_vec();
    for k in 0..3 {
        let a = clip[k];
        let b = clip[(k + 1) % 3];
        let inside = |p: Point2| (b - a).cross(p - a) >= 0.0;
        let input = std::mem::take(&mut out);
        if input.is_empty() {
            break;
        }
        for i in 0..input.len() {
            let p = input[i];
            let q = input[(i + 1) % input.len()];
            let (ip, iq) = (inside(p), inside(q));
            if ip {
                out.push(p);
            }
            if ip != iq {
                let dp = (b - a).cross(p - a);
                let dq = (b - a).cross(q - a);
                let t = dp / (dp - dq);
                out.push(p + (q - p) * t);
            }
        }
    }
    out
}

fn convex_hull(mut pts: Vec<Point2>) -> Vec<Point2> {
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup_by(|a, b| a.dist(*b) < 1e-15);
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<Point2> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && (lower[lower.len() - 1] - lower[lower.len() - 2]).cross(p - lower[lower.len() - 2]) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Point2> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && (upper[upper.len() - 1] - upper[upper.len() - 2]).cross(p - upper[upper.len() - 2]) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

fn perp(p: Point2) -> Point2 {
    Point2::new(-p.y, p.x)
}

/// Coefficients of the nodal functions of a triangle, `psi_k(x) = c_k + g_k . (x - o)`.
fn linear_coefficients(t: &NodalTriangle, nodes: &[usize], o: Point2) -> Vec<(f64, Point2)> {
    let area2 = (t.v[1] - t.v[0]).cross(t.v[2] - t.v[0]);
    nodes
        .iter()
        .map(|n| match t.ids.iter().position(|i| i == n) {
            Some(k) => {
                let (p, q) = (t.v[(k + 1) % 3], t.v[(k + 2) % 3]);
                // psi_k vanishes on the opposite edge (p, q).
                let g = perp(q - p) * (-1.0 / area2);
                let g = Point2::new(-g.x, -g.y);
                (g.dot(o - p), g)
            }
            None => (0.0, Point2::new(0.0, 0.0)),
        })
        .collect()
}

/// Reference integrator for one touching pair.
struct TouchingIntegrand<'a> {
    a: NodalTriangle,
    b: NodalTriangle,
    nodes: Vec<usize>,
    /// `psi^a - psi^b` as linear functions about a shared vertex `origin`.
    diff: Vec<(f64, Point2)>,
    /// Gradients of the nodal functions on `b`.
    grad_b: Vec<Point2>,
    origin: Point2,
    identical: bool,
    kernel: &'a Kernel,
    rule: TriangleRule,
    hull: Vec<Point2>,
    scale: f64,
    constant: Option<(f64, f64)>,
}

impl TouchingIntegrand<'_> {
    fn m(&self) -> usize {
        self.nodes.len()
    }

    /// `int_{a ∩ (b + z)} F(x, x - z) dx` times `r`, accumulated into `out`.
    fn polygon(&self, z: Point2, out: &mut [f64]) {
        let shifted: Vec<Point2> = self.b.v.iter().map(|&q| q + z).collect();
        let poly = sutherland_hodgman(&shifted, &self.a.v);
        if poly.len() < 3 {
            return;
        }
        let m = self.m();
        let r2 = z.norm2();
        let r = r2.sqrt();
        let mut px = [0.0; 6];
        for k in 1..poly.len() - 1 {
            let tri = [poly[0], poly[k], poly[k + 1]];
            let area = signed_area(tri[0], tri[1], tri[2]).abs();
            if area == 0.0 {
                continue;
            }
            for (x, w) in self.rule.map(&tri).zip(&self.rule.weights) {
                let y = x - z;
                // psi^a(x) - psi^b(x - z) = (psi^a - psi^b)(x) + grad psi^b . z,
                // written so that no O(1) terms cancel when z is small.
                let xo = x - self.origin;
                for k in 0..m {
                    let (c, g) = self.diff[k];
                    let lin = if self.identical { 0.0 } else { c + g.dot(xo) };
                    px[k] = lin + self.grad_b[k].dot(z);
                }
                let g = match self.constant {
                    Some((sigma, kappa)) => kappa * crate::fields::gamma_power(r2, sigma),
                    None => self.kernel.gamma_r2(x, y, r2),
                };
                let wt = w * area * g * r;
                for i in 0..m {
                    let di = px[i];
                    for j in i..m {
                        out[i * m + j] += wt * di * px[j];
                    }
                }
            }
        }
    }

    fn exit_distance(&self, e: Point2) -> f64 {
        let h = &self.hull;
        let mut r = f64::INFINITY;
        for k in 0..h.len() {
            let p = h[k];
            let q = h[(k + 1) % h.len()];
            // Outward normal of a counter-clockwise hull edge.
            let n = Point2::new(q.y - p.y, p.x - q.x);
            let ne = n.dot(e);
            if ne > 0.0 {
                r = r.min((n.dot(p) / ne).max(0.0));
            }
        }
        r
    }

    fn breakpoints(&self, e: Point2, rmax: f64) -> Vec<f64> {
        let mut bps = vec![0.0, rmax];
        let eps = 1e-12 * self.scale;
        let mut push = |r: f64| {
            if r.is_finite() && r > eps && r < rmax - eps {
                bps.push(r);
            }
        };
        for k in 0..3 {
            let (pa, pb) = (self.a.v[k], self.a.v[(k + 1) % 3]);
            let n = perp(pb - pa);
            let ne = n.dot(e);
            if ne.abs() > 1e-300 {
                for q in self.b.v {
                    push((n.dot(pa) - n.dot(q)) / ne);
                }
            }
            let (qa, qb) = (self.b.v[k], self.b.v[(k + 1) % 3]);
            let n2 = perp(qb - qa);
            let ne2 = n2.dot(e);
            if ne2.abs() > 1e-300 {
                for p in self.a.v {
                    push((n2.dot(p) - n2.dot(qa)) / ne2);
                }
            }
        }
        bps.sort_by(f64::total_cmp);
        bps.dedup_by(|a, b| (*a - *b).abs() <= eps);
        bps
    }

    /// Radial integral `int_0^R(theta) r P(r e) dr` for the direction `e`.
    fn radial(&self, e: Point2, g: &GaussRule, out: &mut [f64]) {
        let rmax = self.exit_distance(e);
        if rmax <= 0.0 {
            return;
        }
        let bps = self.breakpoints(e, rmax);
        let mm = self.m() * self.m();
        let mut panel = vec![0.0; mm];
        let eval_panel = |lo: f64, hi: f64, acc: &mut [f64]| {
            let h = hi - lo;
            for (&t, &w) in g.nodes.iter().zip(&g.weights) {
                let mut v = vec![0.0; mm];
                self.polygon(e * (lo + h * t), &mut v);
                for (a, x) in acc.iter_mut().zip(&v) {
                    *a += w * h * x;
                }
            }
        };
        // Pieces away from the origin, split geometrically where long.
        for w in bps.windows(2).skip(1) {
            let (mut lo, hi) = (w[0], w[1]);
            while hi / lo > 2.0 {
                eval_panel(lo, 2.0 * lo, out);
                lo *= 2.0;
            }
            eval_panel(lo, hi, out);
        }
        // First piece: geometric panels towards r = 0. Below `floor` the
        // rounding error of points near a shared edge dominates, so the rest
        // is added as the geometric tail of the last two panels.
        let floor = if self.identical { 1e-60 * self.scale } else { 1e-13 * self.scale };
        let mut hi = bps[1];
        let mut total = 0.0;
        let mut prev = 0.0;
        let mut norm = 0.0;
        while hi > floor {
            panel.iter_mut().for_each(|p| *p = 0.0);
            eval_panel(0.5 * hi, hi, &mut panel);
            prev = norm;
            norm = panel.iter().map(|v| v.abs()).sum::<f64>();
            for (o, p) in out.iter_mut().zip(&panel) {
                *o += p;
            }
            total += norm;
            hi *= 0.5;
            if norm <= 1e-17 * total {
                return;
            }
        }
        if prev > 0.0 && norm < prev {
            let ratio = norm / prev;
            let tail = ratio / (1.0 - ratio);
            for (o, p) in out.iter_mut().zip(&panel) {
                *o += p * tail;
            }
        }
    }

    fn angular(&self, lo: f64, hi: f64, g: &GaussRule) -> Vec<f64> {
        let mm = self.m() * self.m();
        let mut acc = vec![0.0; mm];
        let h = hi - lo;
        for (&t, &w) in g.nodes.iter().zip(&g.weights) {
            let th = lo + h * t;
            let mut v = vec![0.0; mm];
            self.radial(Point2::new(th.cos(), th.sin()), g, &mut v);
            for (a, x) in acc.iter_mut().zip(&v) {
                *a += w * h * x;
            }
        }
        acc
    }

    fn adaptive(&self, lo: f64, hi: f64, whole: Vec<f64>, tol: f64, g: &GaussRule, depth: usize, out: &mut [f64]) {
        let mid = 0.5 * (lo + hi);
        let left = self.angular(lo, mid, g);
        let right = self.angular(mid, hi, g);
        let err: f64 = whole.iter().zip(left.iter().zip(&right)).map(|(w, (l, r))| (w - l - r).abs()).fold(0.0, f64::max);
        if err <= tol || depth >= 40 {
            for (o, (l, r)) in out.iter_mut().zip(left.iter().zip(&right)) {
                *o += l + r;
            }
            return;
        }
        self.adaptive(lo, mid, left, 0.5 * tol, g, depth + 1, out);
        self.adaptive(mid, hi, right, 0.5 * tol, g, depth + 1, out);
    }
}

/// Reference value of `int_a int_b (psi_i(x) - psi_i(y)) (psi_j(x) - psi_j(y)) gamma(x, y) dy dx`
/// for two touching (or identical) triangles, over the union of their nodes.
///
/// `rel_tol` controls the adaptive angular integration.
pub fn touching_pair_reference(a: NodalTriangle, b: NodalTriangle, kernel: &Kernel, rel_tol: f64) -> NodalMatrix {
    let a = a.ccw();
    let b = b.ccw();
    let nodes = pair_nodes(&a, &b);
    let constant = kernel.as_constant().map(|(s, k)| (2.0 * s, k));
    let rule = if constant.is_some() { TriangleRule::symmetric(3).unwrap() } else { TriangleRule::collapsed(6) };
    let mut diffs = Vec::new();
    for p in a.v {
        for q in b.v {
            diffs.push(p - q);
        }
    }
    let hull = convex_hull(diffs.clone());
    let scale = hull.iter().map(|p| p.norm()).fold(0.0, f64::max);
    let shared = a.ids.iter().position(|i| b.ids.contains(i)).expect("pair must touch");
    let origin = a.v[shared];
    let ca = linear_coefficients(&a, &nodes, origin);
    let cb = linear_coefficients(&b, &nodes, origin);
    let diff = ca.iter().zip(&cb).map(|(p, q)| (p.0 - q.0, p.1 - q.1)).collect();
    let grad_b = cb.iter().map(|c| c.1).collect();
    let identical = a.ids.iter().all(|i| b.ids.contains(i));
    let integrand = TouchingIntegrand {
        a,
        b,
        nodes: nodes.clone(),
        diff,
        grad_b,
        origin,
        identical,
        kernel,
        rule,
        hull,
        scale,
        constant,
    };

    let mut angles: Vec<f64> = Vec::new();
    let mut add_dir = |d: Point2| {
        if d.norm() > 1e-12 * scale {
            let t = d.y.atan2(d.x).rem_euclid(2.0 * PI);
            angles.push(t);
            angles.push((t + PI).rem_euclid(2.0 * PI));
        }
    };
    for d in &diffs {
        add_dir(*d);
    }
    for k in 0..3 {
        add_dir(a.v[(k + 1) % 3] - a.v[k]);
        add_dir(b.v[(k + 1) % 3] - b.v[k]);
    }
    angles.push(0.0);
    angles.push(2.0 * PI);
    angles.sort_by(f64::total_cmp);
    angles.dedup_by(|x, y| (*x - *y).abs() < 1e-13);

    let g = gauss01(12);
    let m = nodes.len();
    let coarse: Vec<Vec<f64>> = angles.windows(2).map(|w| integrand.angular(w[0], w[1], &g)).collect();
    let size = coarse
        .iter()
        .flat_map(|c| (0..m).map(move |i| c[i * m + i]))
        .fold(0.0f64, |s, v| s + v.abs());
    let tol = rel_tol * size.max(f64::MIN_POSITIVE);
    let mut acc = vec![0.0; m * m];
    for (w, c) in angles.windows(2).zip(coarse) {
        let piece_tol = tol * (w[1] - w[0]) / (2.0 * PI);
        integrand.adaptive(w[0], w[1], c, piece_tol, &g, 0, &mut acc);
    }
    let mut values = vec![0.0; m * m];
    for i in 0..m {
        for j in i..m {
            values[i * m + j] = acc[i * m + j];
            values[j * m + i] = acc[i * m + j];
        }
    }
    NodalMatrix { nodes, values }
}

/// Reference value of the same pair integral for two separated triangles:
/// the triangles are subdivided until every sub-pair is well separated and
/// each sub-pair uses a high-order product rule.
pub fn separated_pair_reference(a: NodalTriangle, b: NodalTriangle, kernel: &Kernel) -> NodalMatrix {
    let nodes = pair_nodes(&a, &b);
    let m = nodes.len();
    let rule = TriangleRule::collapsed(10);
    let mut acc = vec![0.0; m * m];
    let mut stack = vec![(a.v, b.v)];
    let diam = |t: &[Point2; 3]| t[0].dist(t[1]).max(t[1].dist(t[2])).max(t[2].dist(t[0]));
    let mut pa = [0.0; 6];
    let mut pb = [0.0; 6];
    while let Some((ta, tb)) = stack.pop() {
        let dist = triangle_distance(&ta, &tb);
        let (da, db) = (diam(&ta), diam(&tb));
        if dist < 1.5 * da.max(db) {
            let split = |t: &[Point2; 3]| {
                let m01 = (t[0] + t[1]) * 0.5;
                let m12 = (t[1] + t[2]) * 0.5;
                let m20 = (t[2] + t[0]) * 0.5;
                [[t[0], m01, m20], [m01, t[1], m12], [m20, m12, t[2]], [m01, m12, m20]]
            };
            if da >= db {
                for c in split(&ta) {
                    stack.push((c, tb));
                }
            } else {
                for c in split(&tb) {
                    stack.push((ta, c));
                }
            }
            continue;
        }
        let area_a = signed_area(ta[0], ta[1], ta[2]).abs();
        let area_b = signed_area(tb[0], tb[1], tb[2]).abs();
        let xs: Vec<Point2> = rule.map(&ta).collect();
        let ys: Vec<Point2> = rule.map(&tb).collect();
        for (x, wx) in xs.iter().zip(&rule.weights) {
            a.shape(&nodes, *x, &mut pa[..m]);
            for (y, wy) in ys.iter().zip(&rule.weights) {
                b.shape(&nodes, *y, &mut pb[..m]);
                let w = wx * wy * area_a * area_b * kernel.gamma(*x, *y);
                for i in 0..m {
                    let di = pa[i] - pb[i];
                    for j in i..m {
                        acc[i * m + j] += w * di * (pa[j] - pb[j]);
                    }
                }
            }
        }
    }
    let mut values = vec![0.0; m * m];
    for i in 0..m {
        for j in i..m {
            values[i * m + j] = acc[i * m + j];
            values[j * m + i] = acc[i * m + j];
        }
    }
    NodalMatrix { nodes, values }
}

fn segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let ab = b - a;
    let t = ((p - a).dot(ab) / ab.norm2()).clamp(0.0, 1.0);
    p.dist(a + ab * t)
}

/// Distance between two disjoint triangles (zero if they intersect).
pub fn triangle_distance(a: &[Point2; 3], b: &[Point2; 3]) -> f64 {
    let mut d = f64::INFINITY;
    for k in 0..3 {
        for l in 0..3 {
            d = d.min(segment_distance(a[k], b[l], b[(l + 1) % 3]));
            d = d.min(segment_distance(b[k], a[l], a[(l + 1) % 3]));
        }
    }
    d
}

/// Brute-force dense matrix of the full bilinear form over the free
/// degrees of freedom: every ordered element pair with at least one interior
/// element, touching pairs by [`touching_pair_reference`], separated pairs by
/// [`separated_pair_reference`].
///
/// With constant coefficients, translated copies of the same pair geometry
/// are integrated once.
pub fn dense_reference(mesh: &Mesh, kernel: &Kernel, rel_tol: f64) -> Vec<Vec<f64>> {
    let n = mesh.n_free;
    let mut a = vec![vec![0.0; n]; n];
    let mut cache: HashMap<Vec<i64>, Vec<f64>> = HashMap::new();
    let cacheable = kernel.as_constant().is_some();
    let nt = mesh.n_triangles();
    let has_free = |t: usize| mesh.triangles[t].v.iter().any(|&v| mesh.is_free(v));
    for t1 in 0..nt {
        for t2 in t1..nt {
            if !(has_free(t1) || has_free(t2)) {
                continue;
            }
            let ta = NodalTriangle::from_mesh(mesh, t1);
            let tb = NodalTriangle::from_mesh(mesh, t2);
            let touching = mesh.touching(t1, t2);
            let compute = || {
                if touching {
                    touching_pair_reference(ta, tb, kernel, rel_tol).values
                } else {
                    separated_pair_reference(ta, tb, kernel).values
                }
            };
            let values = if cacheable {
                let key = geometry_key(&ta, &tb);
                cache.entry(key).or_insert_with(compute).clone()
            } else {
                compute()
            };
            let nodes = pair_nodes(&ta, &tb);
            let m = nodes.len();
            let weight = if t1 == t2 { 1.0 } else { 2.0 };
            for (p, &i) in nodes.iter().enumerate() {
                if !mesh.is_free(i) {
                    continue;
                }
                for (q, &j) in nodes.iter().enumerate() {
                    if mesh.is_free(j) {
                        a[i][j] += weight * values[p * m + q];
                    }
                }
            }
        }
    }
    a
}

/// Translation-invariant description of a pair: vertex offsets from the
/// first vertex and the vertex-sharing pattern.
fn geometry_key(a: &NodalTriangle, b: &NodalTriangle) -> Vec<i64> {
    let o = a.v[0];
    let mut key = Vec::with_capacity(16);
    for p in a.v.iter().chain(&b.v) {
        key.push(((p.x - o.x) * 1e9).round() as i64);
        key.push(((p.y - o.y) * 1e9).round() as i64);
    }
    for i in b.ids {
        key.push(a.ids.iter().position(|&j| j == i).map_or(-1, |k| k as i64));
    }
    key
}

/// Adaptive Gauss-Legendre quadrature on `[a, b]`: a panel is accepted when
/// its `n`-point value agrees with the sum over its two halves.
pub fn adaptive_gauss(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64, rel_tol: f64, g: &GaussRule) -> f64 {
    fn rec(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64, whole: f64, tol: f64, g: &GaussRule, depth: usize) -> f64 {
        let m = 0.5 * (a + b);
        let left = g.integrate(a, m, &mut *f);
        let right = g.integrate(m, b, &mut *f);
        let halves = left + right;
        if depth == 0 || (halves - whole).abs() <= tol {
            return halves;
        }
        rec(f, a, m, left, 0.5 * tol, g, depth - 1) + rec(f, m, b, right, 0.5 * tol, g, depth - 1)
    }
    let whole = g.integrate(a, b, &mut *f);
    let tol = rel_tol * whole.abs().max(f64::MIN_POSITIVE);
    rec(f, a, b, whole, tol, g, 40)
}

/// `int_{|y| > radius} |x - y|^(-2 - 2 s) dy` in polar coordinates about the
/// disk center, with the radial tail mapped to a finite interval.
pub fn exterior_density_reference(x: Point2, radius: f64, s: f64, rel_tol: f64) -> f64 {
    let g = gauss01(10);
    let rx = x.norm();
    let e = 1.0 + s;
    // Radius r = radius * v^(-1 / (2 s)), v in (0, 1].
    let mut outer = |v: f64| {
        let r = radius * v.powf(-0.5 / s);
        let dr = radius / (2.0 * s) * v.powf(-0.5 / s - 1.0);
        // The angular integrand peaks at the direction of x.
        let mut inner = |th: f64| (r * r + rx * rx - 2.0 * r * rx * th.cos()).powf(-e);
        let ang = 2.0 * adaptive_gauss(&mut inner, 0.0, PI, 0.1 * rel_tol, &g);
        ang * r * dr
    };
    adaptive_gauss(&mut outer, 0.0, 1.0, rel_tol, &g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clipping_identical_triangles_gives_the_triangle() {
        let t = [Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)];
        let p = sutherland_hodgman(&t, &t);
        let area: f64 = (1..p.len() - 1).map(|k| signed_area(p[0], p[k], p[k + 1])).sum();
        assert!((area - 0.5).abs() < 1e-15);
    }

    #[test]
    fn hull_of_square_points() {
        let pts = vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(0.5, 0.5),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
        ];
        assert_eq!(convex_hull(pts).len(), 4);
    }

    #[test]
    fn identical_pair_matches_closed_form_radial_structure() {
        // For s = 1/2 the identical-pair integral of (psi(x) - psi(y))^2 |x-y|^-3
        // is finite; check symmetry, zero row sums and positivity.
        let t = NodalTriangle {
            v: [Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(1.0, 1.0)],
            ids: [0, 1, 2],
        };
        let k = Kernel::constant(0.5).unwrap();
        let r = touching_pair_reference(t, t, &k, 1e-10);
        for i in 0..3 {
            let row: f64 = (0..3).map(|j| r.values[i * 3 + j]).sum();
            assert!(row.abs() < 1e-9 * r.values[0].abs());
            assert!(r.values[i * 3 + i] > 0.0);
        }
    }

    #[test]
    fn exterior_density_reference_at_center() {
        let v = exterior_density_reference(Point2::new(0.0, 0.0), 1.1, 0.7, 1e-12);
        let exact = PI * 1.1f64.powf(-1.4) / 0.7;
        assert!((v - exact).abs() < 1e-10 * exact, "{v} vs {exact}");
    }
}
