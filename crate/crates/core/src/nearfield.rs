//! Local stiffness contributions of touching element pairs and assembly of
//! the sparse near-field matrix `B`.
//!
//! Each touching pair is pulled back to the reference element
//! `{(0,0), (1,0), (1,1)}` by affine maps aligned so that the shared
//! vertex or edge sits at a fixed place. The 4D integral is split into
//! sub-simplices (2 for a shared vertex, 5 for a shared edge, 3 plus
//! their mirror images for identical elements), each mapped to the unit
//! cube so that the singularity becomes a power of one or more cube
//! coordinates. Those powers are removed by a polynomial substitution and
//! the remaining integrand is smooth, so tensor Gauss rules converge
//! exponentially.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{gamma_power, Kernel};
use crate::geometry::Point2;
use crate::mesh::{Mesh, PairType};
use crate::quadrature::{gauss01, GaussRule};
use crate::sparse::CsrMatrix;

/// Two affine maps `chi_t(x) = origin + cols[0] x1 + cols[1] x2` from the
/// reference element onto the elements of a touching pair.
///
/// The shared vertex is the image of `(0,0)`; a shared edge is the image of
/// the reference edge from `(0,0)` to `(1,0)`.
#[derive(Clone, Debug)]
pub struct AffinePair {
    pub kind: PairType,
    pub elements: [usize; 2],
    pub x_origin: Point2,
    pub x_cols: [Point2; 2],
    pub y_origin: Point2,
    pub y_cols: [Point2; 2],
    /// Global vertex indices in local order: identical `[v0, v1, v2]`,
    /// shared edge `[a, b, c, c']`, shared vertex `[p, a, b, c, d]`.
    pub nodes: Vec<usize>,
}

impl AffinePair {
    pub fn det_x(&self) -> f64 {
        self.x_cols[0].cross(self.x_cols[1]).abs()
    }

    pub fn det_y(&self) -> f64 {
        self.y_cols[0].cross(self.y_cols[1]).abs()
    }

    #[inline]
    fn map_x(&self, u: f64, v: f64) -> Point2 {
        self.x_origin + self.x_cols[0] * u + self.x_cols[1] * v
    }

    #[inline]
    fn map_y(&self, u: f64, v: f64) -> Point2 {
        self.y_origin + self.y_cols[0] * u + self.y_cols[1] * v
    }
}

/// Builds the aligned maps for a touching pair.
pub fn aligned_affine_maps(mesh: &Mesh, t1: usize, t2: usize) -> Result<AffinePair> {
    let v1 = mesh.triangles[t1].v;
    let v2 = mesh.triangles[t2].v;
    let p = |i: usize| mesh.vertices[i];
    // Rotate a CCW triple so that it starts at `first`.
    let rotate = |v: [usize; 3], first: usize| -> [usize; 3] {
        let k = v.iter().position(|&i| i == first).expect("vertex belongs to element");
        [v[k], v[(k + 1) % 3], v[(k + 2) % 3]]
    };
    let kind = mesh.classify_pair(t1, t2);
    let cols = |a: usize, b: usize, c: usize| [p(b) - p(a), p(c) - p(b)];
    match kind {
        PairType::Identical => Ok(AffinePair {
            kind,
            elements: [t1, t2],
            x_origin: p(v1[0]),
            x_cols: cols(v1[0], v1[1], v1[2]),
            y_origin: p(v1[0]),
            y_cols: cols(v1[0], v1[1], v1[2]),
            nodes: v1.to_vec(),
        }),
        PairType::SharedEdge => {
            // Shared edge (a, b) in the orientation of the first element.
            let r = (0..3)
                .map(|k| rotate(v1, v1[k]))
                .find(|r| v2.contains(&r[0]) && v2.contains(&r[1]))
                .expect("edge pair shares two vertices");
            let (a, b, c1) = (r[0], r[1], r[2]);
            let c2 = *v2.iter().find(|&&i| i != a && i != b).unwrap();
            Ok(AffinePair {
                kind,
                elements: [t1, t2],
                x_origin: p(a),
                x_cols: cols(a, b, c1),
                y_origin: p(a),
                y_cols: cols(a, b, c2),
                nodes: vec![a, b, c1, c2],
            })
        }
        PairType::SharedVertex => {
            let s = *v1.iter().find(|i| v2.contains(i)).unwrap();
            let r1 = rotate(v1, s);
            let r2 = rotate(v2, s);
            Ok(AffinePair {
                kind,
                elements: [t1, t2],
                x_origin: p(s),
                x_cols: cols(r1[0], r1[1], r1[2]),
                y_origin: p(s),
                y_cols: cols(r2[0], r2[1], r2[2]),
                nodes: vec![s, r1[1], r1[2], r2[1], r2[2]],
            })
        }
        PairType::Separated => Err(Error::PairMismatch(t1, t2)),
    }
}

/// How the singular power `t^(a - sigma)` of a collapsed coordinate is removed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Substitution {
    /// `t = u^q` with `q = 1 / (a + 1 - 2 s_bar)`: exact when `sigma = 2 s_bar`.
    Matched,
    /// `t = u^q` with integer `q = ceil(g / (a + 1 - 2 s_bar))`, which keeps
    /// the geometry polynomial in `u` and leaves a high power of `u` for
    /// any `sigma <= 2 s_bar`.
    Graded(u32),
}

/// Tensor Gauss rule with `n` points per direction for singular pairs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingularRule {
    pub n: usize,
    /// Reference order used in the substitution, normally `max s(x)`.
    pub s_bar: f64,
    pub substitution: Substitution,
    /// Number of equal panels, each with `n` points, for the regular
    /// cube coordinates of the identical and shared-edge cases.
    pub regular_panels: usize,
}

impl SingularRule {
    pub fn new(n: usize, s_bar: f64) -> Self {
        Self { n, s_bar, substitution: Substitution::Matched, regular_panels: 2 }
    }

    pub fn graded(n: usize, s_bar: f64, g: u32) -> Self {
        Self { n, s_bar, substitution: Substitution::Graded(g), regular_panels: 2 }
    }

    /// Order from the a-priori estimate with `beta = 2`, `rho = 0.85` and the
    /// constant dropped, clamped to `[2, 12]`.
    pub fn order_for(h: f64, s_bar: f64) -> usize {
        let n = (2.0 + 2.0 * s_bar) * (1.0 / h).ln() / (2.0 * (2.0 * 0.85f64).ln());
        (n.ceil() as usize).clamp(2, 12)
    }

    pub fn with_panels(mut self, panels: usize) -> Self {
        self.regular_panels = panels.max(1);
        self
    }

    fn panels(&self, kind: PairType) -> usize {
        match kind {
            PairType::Identical | PairType::SharedEdge => self.regular_panels.max(1),
            _ => 1,
        }
    }

    fn power(&self, a: f64) -> f64 {
        let base = a + 1.0 - 2.0 * self.s_bar;
        match self.substitution {
            Substitution::Matched => 1.0 / base,
            Substitution::Graded(g) => (g as f64 / base).ceil().max(1.0),
        }
    }
}

fn composite(g: &GaussRule, panels: usize) -> GaussRule {
    let h = 1.0 / panels as f64;
    let mut nodes = Vec::with_capacity(g.len() * panels);
    let mut weights = Vec::with_capacity(g.len() * panels);
    for p in 0..panels {
        for (&t, &w) in g.nodes.iter().zip(&g.weights) {
            nodes.push(h * (p as f64 + t));
            weights.push(h * w);
        }
    }
    GaussRule { nodes, weights }
}

/// Dense local matrix over the nodes of a pair.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalMatrix {
    pub nodes: Vec<usize>,
    /// Row-major `nodes.len() x nodes.len()` values.
    pub values: Vec<f64>,
}

impl LocalMatrix {
    pub fn size(&self) -> usize {
        self.nodes.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.size() + j]
    }

    /// Largest entry in absolute value.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// One substituted singular coordinate: `t = u^q`, `t^(a - sigma) dt =
/// q u^(q (a + 1 - sigma) - 1) du`.
#[derive(Clone, Copy)]
struct SingularVar {
    a: f64,
    q: f64,
}

impl SingularVar {
    #[inline]
    fn weight(&self, ln_u: f64, sigma: f64) -> f64 {
        self.q * ((self.q * (self.a + 1.0 - sigma) - 1.0) * ln_u).exp()
    }

    /// Logarithm of [`SingularVar::weight`] without the constant factor `q`.
    #[inline]
    fn ln_weight(&self, ln_u: f64, sigma: f64) -> f64 {
        (self.q * (self.a + 1.0 - sigma) - 1.0) * ln_u
    }

    #[inline]
    fn value(&self, ln_u: f64) -> f64 {
        (self.q * ln_u).exp()
    }

    /// Gauss sum of the weight over `[0, 1]`.
    fn weight_sum(&self, g: &GaussRule, ln_nodes: &[f64], sigma: f64) -> f64 {
        g.weights.iter().zip(ln_nodes).map(|(w, &l)| w * self.weight(l, sigma)).sum()
    }
}

/// Quantities of one sub-simplex map at a point of the unit cube, with the
/// singular factors already divided out.
struct MapPoint {
    phi: [f64; 5],
    d: Point2,
    jac: f64,
    x_ref: [f64; 2],
    y_ref: [f64; 2],
}

fn vertex_point(pair: &AffinePair, k: usize, e1: f64, e2: f64, e3: f64) -> MapPoint {
    let (x, y) = if k == 0 {
        ([1.0, e1], [e2, e2 * e3])
    } else {
        ([e2, e2 * e3], [1.0, e1])
    };
    let d = (pair.x_cols[0] * x[0] + pair.x_cols[1] * x[1]) - (pair.y_cols[0] * y[0] + pair.y_cols[1] * y[1]);
    MapPoint {
        phi: [y[0] - x[0], x[0] - x[1], x[1], y[1] - y[0], -y[1]],
        d,
        jac: e2,
        x_ref: x,
        y_ref: y,
    }
}

fn edge_point(pair: &AffinePair, k: usize, e1: f64, e2: f64, e3: f64) -> MapPoint {
    // (x1 - y1) / (xi eta1), x2 / (xi eta1), y2 / (xi eta1), x1 / xi, jacobian rest
    let (d1, x2, y2, x1, jac) = match k {
        0 => (e2, e3, 1.0 - e2, 1.0, 1.0),
        1 => (e2 * e3, 1.0, e2 * (1.0 - e3), 1.0, e2),
        2 => (-e2, 1.0 - e2, e2 * e3, 1.0 - e1 * e2, e2),
        3 => (-e2 * e3, e2 * (1.0 - e3), 1.0, 1.0 - e1 * e2 * e3, e2),
        _ => (-e2 * e3, 1.0 - e2 * e3, e2, 1.0 - e1 * e2 * e3, e2),
    };
    let d = pair.x_cols[0] * d1 + pair.x_cols[1] * x2 - pair.y_cols[1] * y2;
    MapPoint {
        phi: [-d1, d1 - x2 + y2, x2, -y2, 0.0],
        d,
        jac,
        x_ref: [x1, e1 * x2],
        y_ref: [x1 - e1 * d1, e1 * y2],
    }
}

fn identical_point(pair: &AffinePair, k: usize, e1: f64, e2: f64, e3: f64) -> MapPoint {
    let (dd, x, y) = match k {
        0 => ([e3, 1.0], [1.0, 1.0 - e1 + e1 * e2], [1.0 - e1 * e2 * e3, 1.0 - e1]),
        1 => ([1.0, e3], [1.0, e1 * (1.0 - e2 + e2 * e3)], [1.0 - e1 * e2, e1 * (1.0 - e2)]),
        _ => ([-e3, 1.0 - e3], [1.0 - e1 * e2 * e3, e1 * (1.0 - e2 * e3)], [1.0, e1 * (1.0 - e2)]),
    };
    MapPoint {
        phi: [-dd[0], dd[0] - dd[1], dd[1], 0.0, 0.0],
        d: pair.x_cols[0] * dd[0] + pair.x_cols[1] * dd[1],
        jac: 1.0,
        x_ref: x,
        y_ref: y,
    }
}

struct CaseSpec {
    maps: usize,
    size: usize,
    /// Number of leading cube coordinates that are singular (xi, eta1, eta2).
    singular: usize,
    symmetry_factor: f64,
    point: fn(&AffinePair, usize, f64, f64, f64) -> MapPoint,
}

fn case_spec(kind: PairType) -> CaseSpec {
    match kind {
        PairType::SharedVertex => CaseSpec { maps: 2, size: 5, singular: 1, symmetry_factor: 1.0, point: vertex_point },
        PairType::SharedEdge => CaseSpec { maps: 5, size: 4, singular: 2, symmetry_factor: 1.0, point: edge_point },
        PairType::Identical => CaseSpec { maps: 3, size: 3, singular: 3, symmetry_factor: 2.0, point: identical_point },
        PairType::Separated => unreachable!("separated pairs have no singular rule"),
    }
}

/// Local matrix `A_ij = int int (psi_i(x) - psi_i(y)) (psi_j(x) - psi_j(y)) gamma(x, y)`
/// over a touching pair.
pub fn local_matrix(pair: &AffinePair, kernel: &Kernel, rule: &SingularRule) -> Result<LocalMatrix> {
    if rule.n == 0 {
        return Err(Error::InvalidParameter("singular rule needs n >= 1".into()));
    }
    let spec = case_spec(pair.kind);
    let g = gauss01(rule.n);
    let ln_nodes: Vec<f64> = g.nodes.iter().map(|t| t.ln()).collect();
    let gr = composite(&g, rule.panels(pair.kind));
    let vars: Vec<SingularVar> = [3.0, 2.0, 1.0][..spec.singular]
        .iter()
        .map(|&a| SingularVar { a, q: rule.power(a) })
        .collect();
    let m = spec.size;
    let mut acc = vec![0.0; m * m];
    let mut add = |phi: &[f64; 5], w: f64| {
        for i in 0..m {
            let wi = w * phi[i];
            for j in i..m {
                acc[i * m + j] += wi * phi[j];
            }
        }
    };

    if let Some((sigma, kappa)) = constant_coefficients(pair, kernel) {
        let sing: f64 = vars.iter().map(|v| v.weight_sum(&g, &ln_nodes, sigma)).product();
        // Representative values for the singular coordinates do not matter
        // here: with constant coefficients the integrand does not depend on them.
        let n = gr.len();
        let free = 4 - spec.singular;
        let count = n.pow(free as u32);
        for k in 0..spec.maps {
            for idx in 0..count {
                let mut e = [0.5; 3];
                let mut w = sing * kappa;
                let mut rest = idx;
                for c in (3 - free)..3 {
                    let i = rest % n;
                    rest /= n;
                    e[c] = gr.nodes[i];
                    w *= gr.weights[i];
                }
                let mp = (spec.point)(pair, k, e[0], e[1], e[2]);
                add(&mp.phi, w * mp.jac * gamma_power(mp.d.norm2(), sigma));
            }
        }
    } else {
        let n = rule.n;
        let kappa = kernel.diffusivity.as_constant();
        // Coordinate c is singular (substituted, single panel) or regular (composite).
        let count = |c: usize| if c < spec.singular { n } else { gr.len() };
        let node = |c: usize, i: usize| if c < spec.singular { g.nodes[i] } else { gr.nodes[i] };
        let weight = |c: usize, i: usize| if c < spec.singular { g.weights[i] } else { gr.weights[i] };
        for k in 0..spec.maps {
            for i0 in 0..n {
                let xi = vars[0].value(ln_nodes[i0]);
                for i1 in 0..count(1) {
                    let e1 = if spec.singular > 1 { vars[1].value(ln_nodes[i1]) } else { node(1, i1) };
                    for i2 in 0..count(2) {
                        let e2 = if spec.singular > 2 { vars[2].value(ln_nodes[i2]) } else { node(2, i2) };
                        for i3 in 0..count(3) {
                            let e3 = node(3, i3);
                            let mp = (spec.point)(pair, k, e1, e2, e3);
                            let x = pair.map_x(xi * mp.x_ref[0], xi * mp.x_ref[1]);
                            let y = pair.map_y(xi * mp.y_ref[0], xi * mp.y_ref[1]);
                            let sigma = kernel.order.eval_checked(x)? + kernel.order.eval_checked(y)?;
                            let idx = [i0, i1, i2];
                            // Substitution weights and the kernel power share one exponential.
                            let mut ln_w = -(1.0 + 0.5 * sigma) * mp.d.norm2().ln();
                            let mut w = weight(0, i0) * weight(1, i1) * weight(2, i2) * weight(3, i3);
                            for (v, &i) in vars.iter().zip(&idx) {
                                w *= v.q;
                                ln_w += v.ln_weight(ln_nodes[i], sigma);
                            }
                            let a = kappa.unwrap_or_else(|| kernel.a(x, y));
                            add(&mp.phi, w * mp.jac * a * ln_w.exp());
                        }
                    }
                }
            }
        }
    }

    let scale = pair.det_x() * pair.det_y() * spec.symmetry_factor;
    let mut values = vec![0.0; m * m];
    for i in 0..m {
        for j in i..m {
            let v = acc[i * m + j] * scale;
            values[i * m + j] = v;
            values[j * m + i] = v;
        }
    }
    Ok(LocalMatrix { nodes: pair.nodes.clone(), values })
}

/// Coefficients `psi_a(x) - psi_a(y)`, divided by the collapsed singular
/// coordinate, for every sub-map of the pair at the cube point `e`; each
/// list has one entry per node of the pair.
pub fn difference_lists(pair: &AffinePair, e: [f64; 3]) -> Vec<Vec<f64>> {
    let spec = case_spec(pair.kind);
    (0..spec.maps).map(|k| (spec.point)(pair, k, e[0], e[1], e[2]).phi[..spec.size].to_vec()).collect()
}

/// `(s(x) + s(y), kappa)` when both are constant over the pair.
fn constant_coefficients(pair: &AffinePair, kernel: &Kernel) -> Option<(f64, f64)> {
    if let Some((s, kappa)) = kernel.as_constant() {
        return Some((2.0 * s, kappa));
    }
    let kappa = kernel.diffusivity.as_constant()?;
    let corners = |map: &dyn Fn(f64, f64) -> Point2| [map(0.0, 0.0), map(1.0, 0.0), map(1.0, 1.0)];
    let sx = kernel.order.constant_on(&corners(&|a, b| pair.map_x(a, b)))?;
    let sy = kernel.order.constant_on(&corners(&|a, b| pair.map_y(a, b)))?;
    Some((sx + sy, kappa))
}

fn expect_kind(pair: &AffinePair, kind: PairType) -> Result<()> {
    if pair.kind == kind {
        Ok(())
    } else {
        Err(Error::PairMismatch(pair.elements[0], pair.elements[1]))
    }
}

pub fn local_vertex(pair: &AffinePair, kernel: &Kernel, rule: &SingularRule) -> Result<LocalMatrix> {
    expect_kind(pair, PairType::SharedVertex)?;
    local_matrix(pair, kernel, rule)
}

pub fn local_edge(pair: &AffinePair, kernel: &Kernel, rule: &SingularRule) -> Result<LocalMatrix> {
    expect_kind(pair, PairType::SharedEdge)?;
    local_matrix(pair, kernel, rule)
}

pub fn local_identical(pair: &AffinePair, kernel: &Kernel, rule: &SingularRule) -> Result<LocalMatrix> {
    expect_kind(pair, PairType::Identical)?;
    local_matrix(pair, kernel, rule)
}

/// Weight applied to touching pairs of one interior and one exterior element.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InterfacePairs {
    /// Both orderings of the pair are counted (weight 2), matching the
    /// full double integral.
    #[default]
    BothOrders,
    /// Only the ordering with the interior element first (weight 1).
    InteriorFirst,
}

/// Enumerates the unordered touching pairs that contribute to `B` together
/// with their weights.
pub fn touching_pairs(mesh: &Mesh, interface: InterfacePairs) -> Vec<(usize, usize, f64)> {
    let mut out = Vec::new();
    for t in mesh.interior_elements() {
        for &t2 in mesh.patch(t) {
            let weight = if mesh.is_interior(t2) {
                if t2 < t {
                    continue;
                }
                if t2 == t {
                    1.0
                } else {
                    2.0
                }
            } else {
                match interface {
                    InterfacePairs::BothOrders => 2.0,
                    InterfacePairs::InteriorFirst => 1.0,
                }
            };
            let has_free = mesh.triangles[t].v.iter().chain(&mesh.triangles[t2].v).any(|&v| mesh.is_free(v));
            if has_free {
                out.push((t, t2, weight));
            }
        }
    }
    out
}

/// Assembles the sparse near-field matrix over the free degrees of freedom.
pub fn assemble_b(mesh: &Mesh, kernel: &Kernel, rule: &SingularRule, interface: InterfacePairs) -> Result<CsrMatrix> {
    let pairs = touching_pairs(mesh, interface);
    let mut pattern = Vec::new();
    for &(t, t2, _) in &pairs {
        let mut nodes: Vec<usize> = mesh.triangles[t].v.iter().chain(&mesh.triangles[t2].v).copied().collect();
        nodes.retain(|&v| mesh.is_free(v));
        for &i in &nodes {
            for &j in &nodes {
                pattern.push((i, j));
            }
        }
    }
    let mut b = CsrMatrix::from_pattern(mesh.n_free, mesh.n_free, pattern);
    for &(t, t2, weight) in &pairs {
        let pair = aligned_affine_maps(mesh, t, t2)?;
        let local = local_matrix(&pair, kernel, rule)?;
        scatter(&mut b, mesh, &local, weight);
    }
    Ok(b)
}

fn scatter(b: &mut CsrMatrix, mesh: &Mesh, local: &LocalMatrix, weight: f64) {
    let m = local.size();
    for a in 0..m {
        let i = local.nodes[a];
        if !mesh.is_free(i) {
            continue;
        }
        for c in 0..m {
            let j = local.nodes[c];
            if mesh.is_free(j) {
                b.add(i, j, weight * local.values[a * m + c]);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::square_mesh;

    fn find_pair(mesh: &Mesh, kind: PairType) -> (usize, usize) {
        for t in mesh.interior_elements() {
            for &t2 in mesh.patch(t) {
                if mesh.classify_pair(t, t2) == kind {
                    return (t, t2);
                }
            }
        }
        panic!("no pair of kind {kind:?}");
    }

    #[test]
    fn maps_send_reference_vertices_to_nodes() {
        let mesh = square_mesh(2.0, 1.0, 1).unwrap();
        for kind in [PairType::Identical, PairType::SharedEdge, PairType::SharedVertex] {
            let (t, t2) = find_pair(&mesh, kind);
            let p = aligned_affine_maps(&mesh, t, t2).unwrap();
            let v = |i: usize| mesh.vertices[p.nodes[i]];
            assert_eq!(p.map_x(0.0, 0.0), v(0));
            assert!(p.map_x(1.0, 0.0).dist(v(1)) < 1e-14);
            assert!(p.map_x(1.0, 1.0).dist(v(2)) < 1e-14);
            match kind {
                PairType::SharedEdge => {
                    assert!(p.map_y(1.0, 0.0).dist(v(1)) < 1e-14);
                    assert!(p.map_y(1.0, 1.0).dist(v(3)) < 1e-14);
                }
                PairType::SharedVertex => {
                    assert!(p.map_y(1.0, 0.0).dist(v(3)) < 1e-14);
                    assert!(p.map_y(1.0, 1.0).dist(v(4)) < 1e-14);
                }
                _ => {}
            }
        }
        let sep = (0..mesh.n_triangles()).find(|&t| !mesh.touching(0, t)).unwrap();
        assert!(matches!(aligned_affine_maps(&mesh, 0, sep), Err(Error::PairMismatch(..))));
    }

    #[test]
    fn local_matrices_have_zero_row_sums_and_are_psd_on_diagonal() {
        let mesh = square_mesh(2.0, 1.0, 1).unwrap();
        let kernel = Kernel::constant(0.6).unwrap();
        let rule = SingularRule::new(6, 0.6);
        for kind in [PairType::Identical, PairType::SharedEdge, PairType::SharedVertex] {
            let (t, t2) = find_pair(&mesh, kind);
            let pair = aligned_affine_maps(&mesh, t, t2).unwrap();
            let l = local_matrix(&pair, &kernel, &rule).unwrap();
            let m = l.size();
            for i in 0..m {
                let row: f64 = (0..m).map(|j| l.get(i, j)).sum();
                assert!(row.abs() < 1e-12 * l.max_abs(), "{kind:?} row {i}");
                assert!(l.get(i, i) >= 0.0);
            }
        }
    }

    #[test]
    fn wrong_kind_is_rejected() {
        let mesh = square_mesh(2.0, 1.0, 1).unwrap();
        let (t, t2) = find_pair(&mesh, PairType::SharedEdge);
        let pair = aligned_affine_maps(&mesh, t, t2).unwrap();
        let k = Kernel::constant(0.5).unwrap();
        let r = SingularRule::new(3, 0.5);
        assert!(local_vertex(&pair, &k, &r).is_err());
        assert!(local_identical(&pair, &k, &r).is_err());
        assert!(local_edge(&pair, &k, &r).is_ok());
    }

    #[test]
    fn quadrature_order_policy() {
        assert_eq!(SingularRule::order_for(1.0, 0.5), 2);
        assert!(SingularRule::order_for(0.01, 0.9) == 12);
        let n = SingularRule::order_for(0.1, 0.5);
        assert!((4..=8).contains(&n));
    }
}
