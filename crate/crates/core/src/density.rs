//! Quadrature point cloud, the density `rho_T` at interior quadrature
//! points, weighted mass matrices and the closed-form exterior density of a
//! disk.
//!
//! `rho_T(q) = sum_j gamma_T(q, q_j) w_j` over every quadrature point of the
//! mesh is evaluated for all interior `q` at once as one product with a
//! rectangular H² collocation matrix whose blocks are generated on the fly.

use std::f64::consts::PI;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{gamma_power, Kernel};
use crate::geometry::{Box2, Point2};
use crate::h2::{interp_box, partition_blocks, AdmMode, Admissibility, BlockPartition, ChebInterp, ClusterTree, NestedBasis};
use crate::mesh::Mesh;
use crate::quadrature::{gauss01, TriangleRule};
use crate::sparse::CsrMatrix;

/// Quadrature points of one triangle rule on every element, stored element
/// by element.
#[derive(Clone, Debug)]
pub struct QuadCloud {
    pub rule: TriangleRule,
    pub points: Vec<Point2>,
    /// Rule weight times element area.
    pub weights: Vec<f64>,
    pub element: Vec<usize>,
    pub interior: Vec<bool>,
}

impl QuadCloud {
    pub fn gather(mesh: &Mesh, rule: TriangleRule) -> Self {
        let nq = rule.len();
        let nt = mesh.n_triangles();
        let mut points = Vec::with_capacity(nt * nq);
        let mut weights = Vec::with_capacity(nt * nq);
        let mut element = Vec::with_capacity(nt * nq);
        let mut interior = Vec::with_capacity(nt * nq);
        for t in 0..nt {
            let area = mesh.area(t);
            let inside = mesh.is_interior(t);
            for (p, w) in rule.map(&mesh.element_vertices(t)).zip(&rule.weights) {
                points.push(p);
                weights.push(area * w);
                element.push(t);
                interior.push(inside);
            }
        }
        Self { rule, points, weights, element, interior }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn per_element(&self) -> usize {
        self.rule.len()
    }

    pub fn element_range(&self, t: usize) -> Range<usize> {
        let nq = self.per_element();
        t * nq..(t + 1) * nq
    }

    /// Value at point `i` of the shape function of local vertex `a` of its element.
    #[inline]
    pub fn shape(&self, i: usize, a: usize) -> f64 {
        self.rule.bary[i % self.per_element()][a]
    }

    pub fn interior_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.interior[i]).collect()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Order and square-root diffusivity cached at the points of a cloud.
#[derive(Clone, Debug)]
pub struct CloudKernel {
    pub s: Vec<f64>,
    pub sqrt_kappa: Vec<f64>,
}

impl CloudKernel {
    /// Evaluates the fields at every point, checking their declared bounds.
    pub fn new(cloud: &QuadCloud, kernel: &Kernel) -> Result<Self> {
        let mut s = Vec::with_capacity(cloud.len());
        let mut sqrt_kappa = Vec::with_capacity(cloud.len());
        for &p in &cloud.points {
            s.push(kernel.order.eval_checked(p)?);
            sqrt_kappa.push(kernel.diffusivity.eval_checked(p)?.sqrt());
        }
        Ok(Self { s, sqrt_kappa })
    }

    /// `gamma(q_i, q_j)`; symmetric in `i` and `j` bit for bit.
    #[inline]
    pub fn gamma(&self, cloud: &QuadCloud, i: usize, j: usize) -> f64 {
        let r2 = (cloud.points[i] - cloud.points[j]).norm2();
        self.sqrt_kappa[i] * self.sqrt_kappa[j] * gamma_power(r2, self.s[i] + self.s[j])
    }

    /// `gamma_T(q_i, q_j)`: zero when the points lie in touching elements.
    #[inline]
    pub fn gamma_t(&self, mesh: &Mesh, cloud: &QuadCloud, i: usize, j: usize) -> f64 {
        if mesh.touching(cloud.element[i], cloud.element[j]) {
            0.0
        } else {
            self.gamma(cloud, i, j)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CollocationParams {
    pub p: usize,
    pub leaf_size: usize,
    pub lambda2: f64,
    pub mode: AdmMode,
    /// Admissible boxes must be at least `guard_factor * h` apart.
    pub guard_factor: f64,
}

impl Default for CollocationParams {
    fn default() -> Self {
        Self { p: 10, leaf_size: 128, lambda2: 0.75, mode: AdmMode::Geometric, guard_factor: 3.0 }
    }
}

/// Rectangular H² matrix `(K_rho)_ij = gamma_T(q_i, q_j)` with rows on the
/// interior quadrature points and columns on all quadrature points.
///
/// Only the cluster trees, transfers and the block partition are stored;
/// leaf bases, coupling matrices and near-field blocks are generated during
/// the product.
pub struct CollocationH2<'a> {
    mesh: &'a Mesh,
    cloud: &'a QuadCloud,
    ck: &'a CloudKernel,
    interp: ChebInterp,
    /// Cloud indices of the row points.
    pub targets: Vec<usize>,
    pub rows: NestedBasis,
    pub cols: NestedBasis,
    pub partition: BlockPartition,
    /// `(s, sqrt(kappa))` at the interpolation nodes of every cluster.
    row_node_fields: Vec<Vec<(Point2, f64, f64)>>,
    col_node_fields: Vec<Vec<(Point2, f64, f64)>>,
}

impl<'a> CollocationH2<'a> {
    pub fn build(
        mesh: &'a Mesh,
        cloud: &'a QuadCloud,
        kernel: &Kernel,
        ck: &'a CloudKernel,
        params: &CollocationParams,
    ) -> Result<Self> {
        if params.lambda2 <= 0.0 || params.p == 0 || params.leaf_size == 0 {
            return Err(Error::InvalidParameter("collocation needs p, leaf size and lambda2 positive".into()));
        }
        let targets = cloud.interior_indices();
        if targets.is_empty() {
            return Err(Error::InvalidParameter("mesh has no interior quadrature points".into()));
        }
        let interp = ChebInterp::new(params.p);
        let row_pts: Vec<Point2> = targets.iter().map(|&i| cloud.points[i]).collect();
        let row_tree = ClusterTree::build(&row_pts, params.leaf_size);
        let col_tree = ClusterTree::build(&cloud.points, params.leaf_size);
        let scale = col_tree.clusters[0].bbox.diameter();
        let boxes = |t: &ClusterTree| -> Vec<Box2> { t.clusters.iter().map(|c| interp_box(&c.bbox, scale)).collect() };
        let row_boxes = boxes(&row_tree);
        let col_boxes = boxes(&col_tree);
        let adm = Admissibility::new(params.lambda2, params.mode).with_guard(params.guard_factor * mesh.h);
        let partition = partition_blocks(&row_tree, &row_boxes, &col_tree, &col_boxes, &adm, false);
        let fields = |bx: &[Box2]| -> Result<Vec<Vec<(Point2, f64, f64)>>> {
            bx.iter()
                .map(|b| {
                    interp
                        .nodes(b)
                        .into_iter()
                        .map(|x| Ok((x, kernel.order.eval_checked(x)?, kernel.diffusivity.eval_checked(x)?.sqrt())))
                        .collect()
                })
                .collect()
        };
        let row_node_fields = fields(&row_boxes)?;
        let col_node_fields = fields(&col_boxes)?;
        let rows = NestedBasis::new(row_tree, row_boxes, &interp, |_| Vec::new());
        let cols = NestedBasis::new(col_tree, col_boxes, &interp, |_| Vec::new());
        Ok(Self { mesh, cloud, ck, interp, targets, rows, cols, partition, row_node_fields, col_node_fields })
    }

    /// `K_rho w`, returned in the order of [`CollocationH2::targets`].
    pub fn apply(&self, w: &[f64]) -> Result<Vec<f64>> {
        let cloud = self.cloud;
        if w.len() != cloud.len() {
            return Err(Error::DimensionMismatch { expected: cloud.len(), got: w.len() });
        }
        let k = self.interp.rank();
        let mut ell = vec![0.0; k];
        let xt = self.cols.tree.to_tree_order(w);
        let xhat = self.cols.forward_with(&xt, |c, xs, out| {
            let b = &self.cols.boxes[c];
            for (&j, &x) in self.cols.tree.indices(c).iter().zip(xs) {
                self.interp.lagrange(b, cloud.points[j], &mut ell);
                for (o, l) in out.iter_mut().zip(&ell) {
                    *o += l * x;
                }
            }
        });
        let mut yhat = vec![vec![0.0; k]; self.rows.n_clusters()];
        for &(r, c) in &self.partition.far {
            let out = &mut yhat[r];
            let xc = &xhat[c];
            for (o, &(xa, sa, ka)) in out.iter_mut().zip(&self.row_node_fields[r]) {
                let mut acc = 0.0;
                for (&(xb, sb, kb), &v) in self.col_node_fields[c].iter().zip(xc) {
                    acc += ka * kb * gamma_power((xa - xb).norm2(), sa + sb) * v;
                }
                *o += acc;
            }
        }
        let mut yt = vec![0.0; self.targets.len()];
        self.rows.backward_with(&mut yhat, &mut yt, |c, coef, ys| {
            let b = &self.rows.boxes[c];
            for (&i, y) in self.rows.tree.indices(c).iter().zip(ys.iter_mut()) {
                self.interp.lagrange(b, cloud.points[self.targets[i]], &mut ell);
                *y += ell.iter().zip(coef).map(|(l, v)| l * v).sum::<f64>();
            }
        });
        for &(r, c) in &self.partition.near {
            let rc = &self.rows.tree.clusters[r];
            let cc = &self.cols.tree.clusters[c];
            let cols = self.cols.tree.indices(c);
            let xc = &xt[cc.start..cc.end];
            for (pos, &i) in self.rows.tree.indices(r).iter().enumerate() {
                let qi = self.targets[i];
                let mut acc = 0.0;
                for (&j, &v) in cols.iter().zip(xc) {
                    acc += self.ck.gamma_t(self.mesh, cloud, qi, j) * v;
                }
                yt[rc.start + pos] += acc;
            }
        }
        Ok(self.rows.tree.from_tree_order(&yt))
    }

    /// Dense `K_rho` implied by the representation, rows in target order
    /// (for tests on small meshes).
    pub fn to_dense(&self) -> Result<Vec<Vec<f64>>> {
        let n = self.cloud.len();
        let mut out = vec![vec![0.0; n]; self.targets.len()];
        let mut e = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            for (row, v) in out.iter_mut().zip(self.apply(&e)?) {
                row[j] = v;
            }
            e[j] = 0.0;
        }
        Ok(out)
    }
}

/// `rho_T` at every interior quadrature point by the H² product; entries at
/// exterior points are zero.
pub fn density_at_quadrature(krho: &CollocationH2<'_>, cloud: &QuadCloud) -> Result<Vec<f64>> {
    let values = krho.apply(&cloud.weights)?;
    let mut rho = vec![0.0; cloud.len()];
    for (&i, v) in krho.targets.iter().zip(values) {
        rho[i] = v;
    }
    Ok(rho)
}

/// `rho_T` at every interior quadrature point by direct summation.
pub fn density_direct(mesh: &Mesh, cloud: &QuadCloud, ck: &CloudKernel) -> Vec<f64> {
    let mut rho = vec![0.0; cloud.len()];
    for i in cloud.interior_indices() {
        rho[i] = (0..cloud.len()).map(|j| ck.gamma_t(mesh, cloud, i, j) * cloud.weights[j]).sum();
    }
    rho
}

/// Zero matrix over the free vertices with the pattern of the P1 mass
/// matrix on interior elements.
pub fn mass_pattern(mesh: &Mesh) -> CsrMatrix {
    let mut entries = Vec::new();
    for t in mesh.interior_elements() {
        for &a in &mesh.triangles[t].v {
            for &b in &mesh.triangles[t].v {
                if mesh.is_free(a) && mesh.is_free(b) {
                    entries.push((a, b));
                }
            }
        }
    }
    CsrMatrix::from_pattern(mesh.n_free, mesh.n_free, entries)
}

/// Weighted mass matrix
/// `M_ij = factor * sum over interior points of psi_i psi_j weight w`.
pub fn weighted_mass(mesh: &Mesh, cloud: &QuadCloud, weight: &[f64], factor: f64) -> CsrMatrix {
    let mut m = mass_pattern(mesh);
    for t in mesh.interior_elements() {
        let v = mesh.triangles[t].v;
        for i in cloud.element_range(t) {
            let wq = factor * weight[i] * cloud.weights[i];
            for a in 0..3 {
                if !mesh.is_free(v[a]) {
                    continue;
                }
                for b in 0..3 {
                    if mesh.is_free(v[b]) {
                        m.add(v[a], v[b], wq * cloud.shape(i, a) * cloud.shape(i, b));
                    }
                }
            }
        }
    }
    m
}

/// Weighted mass matrix of the density, including the factor 2 of the
/// symmetric splitting unless `literal` is set.
pub fn assemble_m(mesh: &Mesh, cloud: &QuadCloud, rho: &[f64], literal: bool) -> CsrMatrix {
    weighted_mass(mesh, cloud, rho, if literal { 1.0 } else { 2.0 })
}

/// `int_{|y| > R} |x - y|^(-2 - 2s) dy` for `|x| < R`, written as
/// `(1 / 2s) int_0^{2 pi} t(theta)^(-2s) dtheta` with
/// `t = sqrt(mu^2 + R^2 - |x|^2) - mu`, `mu = x . (cos theta, sin theta)`.
///
/// The angular integral uses `n_theta`-point Gauss panels refined
/// geometrically towards the direction of `x`.
pub fn rho_exterior_disk(x: Point2, radius: f64, s: f64, n_theta: usize) -> Result<f64> {
    let r = x.norm();
    if !(r < radius) {
        return Err(Error::InvalidParameter(format!("point at radius {r} is not inside the disk of radius {radius}")));
    }
    if !(s > 0.0 && s < 1.0) || n_theta == 0 {
        return Err(Error::InvalidParameter("need 0 < s < 1 and n_theta >= 1".into()));
    }
    let g = gauss01(n_theta);
    // phi is the angle to the direction of x; the integrand is even in phi.
    let f = |phi: f64| {
        let mu = r * phi.cos();
        let t = (mu * mu + radius * radius - r * r).sqrt() - mu;
        t.powf(-2.0 * s)
    };
    let gap = (radius - r) / radius;
    let panels = ((PI / (0.1 * gap.max(1e-14))).log2().ceil().max(0.0) as usize).min(60);
    let mut hi = PI;
    let mut total = 0.0;
    for _ in 0..panels {
        total += g.integrate(0.5 * hi, hi, f);
        hi *= 0.5;
    }
    total += g.integrate(0.0, hi, f);
    Ok(total / s)
}

/// Weighted mass matrix of the exterior density of a disk of radius
/// `radius` (factor 2), for constant-order kernels only.
pub fn assemble_m_out(mesh: &Mesh, cloud: &QuadCloud, kernel: &Kernel, radius: f64, n_theta: usize) -> Result<CsrMatrix> {
    let (s, kappa) = kernel
        .as_constant()
        .ok_or_else(|| Error::InvalidParameter("the exterior disk density needs constant order and diffusivity".into()))?;
    let mut weight = vec![0.0; cloud.len()];
    for i in cloud.interior_indices() {
        weight[i] = kappa * rho_exterior_disk(cloud.points[i], radius, s, n_theta)?;
    }
    Ok(weighted_mass(mesh, cloud, &weight, 2.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::square_mesh;

    #[test]
    fn cloud_weights_cover_the_domain() {
        let mesh = square_mesh(2.0, 1.0, 1).unwrap();
        let cloud = QuadCloud::gather(&mesh, TriangleRule::symmetric(3).unwrap());
        assert!((cloud.total_weight() - 16.0).abs() < 1e-12);
        let n_int = mesh.interior_elements().count();
        assert_eq!(cloud.interior_indices().len(), 3 * n_int);
    }

    #[test]
    fn exterior_density_at_center() {
        let v = rho_exterior_disk(Point2::new(0.0, 0.0), 1.1, 0.7, 9).unwrap();
        let exact = PI * 1.1f64.powf(-1.4) / 0.7;
        assert!((v - exact).abs() < 1e-12 * exact);
        assert!((exact - 3.927372).abs() < 1e-6);
        assert!(rho_exterior_disk(Point2::new(1.1, 0.0), 1.1, 0.7, 9).is_err());
    }

    #[test]
    fn exterior_density_grows_towards_the_boundary() {
        let mut last = 0.0;
        for k in 0..10 {
            let v = rho_exterior_disk(Point2::new(0.1 * k as f64, 0.05), 1.1, 0.7, 9).unwrap();
            assert!(v > last);
            last = v;
        }
    }
}
