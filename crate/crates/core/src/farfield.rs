//! The far-field matrix `K_ij = -2 sum int_tau int_tau' gamma(x, y) psi_i(x) psi_j(y)`
//! over non-touching interior element pairs, stored as a symmetric H²
//! matrix on the free vertices.
//!
//! All element integrals use the quadrature cloud, so `K` and the weighted
//! mass matrix together form one point-pair quadrature of the separated part
//! of the bilinear form.

use serde::{Deserialize, Serialize};

use crate::density::{CloudKernel, QuadCloud};
use crate::error::{Error, Result};
use crate::fields::{gamma_power, Kernel};
use crate::geometry::{Box2, Point2};
use crate::h2::{interp_box, partition_blocks, AdmMode, Admissibility, ChebInterp, ClusterTree, H2Matrix, H2Stats, NestedBasis};
use crate::mesh::Mesh;
use crate::quadrature::TriangleRule;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct H2Params {
    /// Chebyshev points per axis.
    pub p: usize,
    pub leaf_size: usize,
    pub lambda: f64,
    pub mode: AdmMode,
}

impl Default for H2Params {
    fn default() -> Self {
        Self { p: 10, leaf_size: 128, lambda: 0.75, mode: AdmMode::Geometric }
    }
}

/// How the leaf bases `int psi_i l_alpha` are integrated.
#[derive(Clone, Debug, PartialEq)]
pub enum LeafQuadrature {
    /// The quadrature cloud shared with the near blocks and the density.
    Cloud,
    /// A separate triangle rule, e.g. one exact for the polynomial integrand.
    Rule(TriangleRule),
}

/// The far-field matrix on the free vertices.
#[derive(Clone, Debug)]
pub struct FarField {
    /// `None` when the mesh has no free vertices.
    pub h2: Option<H2Matrix>,
    pub n: usize,
}

impl FarField {
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: x.len() });
        }
        match &self.h2 {
            Some(h) => h.matvec(x),
            None => Ok(Vec::new()),
        }
    }

    pub fn stats(&self) -> H2Stats {
        self.h2.as_ref().map(H2Matrix::stats).unwrap_or_default()
    }
}

/// Boxes covering the supports of the cluster's vertices.
pub fn extended_boxes(tree: &ClusterTree, mesh: &Mesh) -> Vec<Box2> {
    let mut boxes = vec![Box2::empty(); tree.clusters.len()];
    for c in (0..tree.clusters.len()).rev() {
        boxes[c] = match tree.clusters[c].children {
            Some([a, b]) => boxes[a].union(&boxes[b]),
            None => {
                let mut b = Box2::empty();
                for &v in tree.indices(c) {
                    for &t in mesh.support(v) {
                        for p in mesh.element_vertices(t) {
                            b.include(p);
                        }
                    }
                }
                b
            }
        };
    }
    boxes
}

/// Leaf basis `U[i][alpha] = int_{S_i} psi_i l_alpha` for the vertices of
/// leaf `c`, `|c| x p^2` row-major.
pub fn galerkin_leaf_basis(
    tree: &ClusterTree,
    c: usize,
    bbox: &Box2,
    mesh: &Mesh,
    cloud: &QuadCloud,
    leaf: &LeafQuadrature,
    interp: &ChebInterp,
) -> Vec<f64> {
    let k = interp.rank();
    let verts = tree.indices(c);
    let mut u = vec![0.0; verts.len() * k];
    let mut ell = vec![0.0; k];
    for (row, &v) in verts.iter().enumerate() {
        let out = &mut u[row * k..(row + 1) * k];
        for &t in mesh.support(v) {
            let a = mesh.triangles[t].v.iter().position(|&x| x == v).expect("support element holds the vertex");
            let mut add = |p: Point2, w: f64| {
                interp.lagrange(bbox, p, &mut ell);
                for (o, l) in out.iter_mut().zip(&ell) {
                    *o += w * l;
                }
            };
            match leaf {
                LeafQuadrature::Cloud => {
                    for i in cloud.element_range(t) {
                        add(cloud.points[i], cloud.weights[i] * cloud.shape(i, a));
                    }
                }
                LeafQuadrature::Rule(rule) => {
                    let area = mesh.area(t);
                    for ((p, w), b) in rule.map(&mesh.element_vertices(t)).zip(&rule.weights).zip(&rule.bary) {
                        add(p, area * w * b[a]);
                    }
                }
            }
        }
    }
    u
}

/// Scratch space for near-block assembly, sized to the mesh.
pub struct NearScratch {
    row_pos: Vec<usize>,
    col_pos: Vec<usize>,
    mark: Vec<bool>,
}

impl NearScratch {
    pub fn new(mesh: &Mesh) -> Self {
        Self {
            row_pos: vec![usize::MAX; mesh.n_vertices()],
            col_pos: vec![usize::MAX; mesh.n_vertices()],
            mark: vec![false; mesh.n_triangles()],
        }
    }

    fn elements(&mut self, mesh: &Mesh, verts: &[usize]) -> Vec<usize> {
        let mut out = Vec::new();
        for &v in verts {
            for &t in mesh.support(v) {
                if !self.mark[t] {
                    self.mark[t] = true;
                    out.push(t);
                }
            }
        }
        for &t in &out {
            self.mark[t] = false;
        }
        out
    }
}

/// Dense block `K[rows][cols]` summed over non-touching element pairs of the
/// supports, `|rows| x |cols|` row-major.
pub fn smooth_near_block(
    mesh: &Mesh,
    cloud: &QuadCloud,
    ck: &CloudKernel,
    rows: &[usize],
    cols: &[usize],
    scratch: &mut NearScratch,
) -> Vec<f64> {
    let nc = cols.len();
    let mut d = vec![0.0; rows.len() * nc];
    for (k, &v) in rows.iter().enumerate() {
        scratch.row_pos[v] = k;
    }
    for (k, &v) in cols.iter().enumerate() {
        scratch.col_pos[v] = k;
    }
    let er = scratch.elements(mesh, rows);
    let ec = scratch.elements(mesh, cols);
    let nq = cloud.per_element();
    // Per element and point: weight times shape value for each local vertex
    // that belongs to the block (zero otherwise).
    let factors = |elems: &[usize], pos: &[usize]| -> Vec<[f64; 3]> {
        let mut f = Vec::with_capacity(elems.len() * nq);
        for &t in elems {
            let v = mesh.triangles[t].v;
            for i in cloud.element_range(t) {
                let mut row = [0.0; 3];
                for a in 0..3 {
                    if pos[v[a]] != usize::MAX {
                        row[a] = cloud.weights[i] * cloud.shape(i, a);
                    }
                }
                f.push(row);
            }
        }
        f
    };
    let fr = factors(&er, &scratch.row_pos);
    let fc = factors(&ec, &scratch.col_pos);
    for (ti, &t) in er.iter().enumerate() {
        let vt = mesh.triangles[t].v;
        for (tj, &u) in ec.iter().enumerate() {
            if mesh.touching(t, u) {
                continue;
            }
            let vu = mesh.triangles[u].v;
            let mut local = [[0.0; 3]; 3];
            for (qi, i) in cloud.element_range(t).enumerate() {
                let f_i = fr[ti * nq + qi];
                for (qj, j) in cloud.element_range(u).enumerate() {
                    let g = ck.gamma(cloud, i, j);
                    let f_j = fc[tj * nq + qj];
                    for a in 0..3 {
                        let ga = g * f_i[a];
                        for b in 0..3 {
                            local[a][b] += ga * f_j[b];
                        }
                    }
                }
            }
            for a in 0..3 {
                let r = scratch.row_pos[vt[a]];
                if r == usize::MAX {
                    continue;
                }
                for b in 0..3 {
                    let c = scratch.col_pos[vu[b]];
                    if c != usize::MAX {
                        d[r * nc + c] -= 2.0 * local[a][b];
                    }
                }
            }
        }
    }
    for &v in rows {
        scratch.row_pos[v] = usize::MAX;
    }
    for &v in cols {
        scratch.col_pos[v] = usize::MAX;
    }
    d
}

/// Assembles the far-field H² matrix.
pub fn assemble_k(
    mesh: &Mesh,
    kernel: &Kernel,
    cloud: &QuadCloud,
    ck: &CloudKernel,
    params: &H2Params,
    leaf: &LeafQuadrature,
) -> Result<FarField> {
    if params.p == 0 || params.leaf_size == 0 || params.lambda <= 0.0 {
        return Err(Error::InvalidParameter("H² parameters p, leaf size and lambda must be positive".into()));
    }
    let n = mesh.n_free;
    if n == 0 {
        return Ok(FarField { h2: None, n });
    }
    let interp = ChebInterp::new(params.p);
    let tree = ClusterTree::build(&mesh.vertices[..n], params.leaf_size);
    let scale = tree.clusters[0].bbox.diameter().max(mesh.h);
    let boxes: Vec<Box2> = extended_boxes(&tree, mesh).iter().map(|b| interp_box(b, scale)).collect();
    let adm = Admissibility::new(params.lambda, params.mode);
    let partition = partition_blocks(&tree, &boxes, &tree, &boxes, &adm, true);
    let leaf_bases: Vec<Vec<f64>> = tree
        .leaves()
        .map(|c| galerkin_leaf_basis(&tree, c, &boxes[c], mesh, cloud, leaf, &interp))
        .collect();
    let mut leaf_bases = leaf_bases.into_iter();
    let basis = NestedBasis::new(tree, boxes, &interp, |_| leaf_bases.next().unwrap_or_default());
    let mut scratch = NearScratch::new(mesh);
    let h2 = H2Matrix::build(
        basis,
        None,
        partition,
        &interp,
        |xs, ys| coupling_block(kernel, xs, ys),
        |rows, cols| smooth_near_block(mesh, cloud, ck, rows, cols, &mut scratch),
    );
    Ok(FarField { h2: Some(h2), n })
}

/// `-2 gamma` on the interpolation nodes of a far block.
fn coupling_block(kernel: &Kernel, xs: &[Point2], ys: &[Point2]) -> Vec<f64> {
    let fy: Vec<(f64, f64)> = ys.iter().map(|&y| (kernel.order.eval(y), kernel.diffusivity.eval(y).sqrt())).collect();
    let mut s = Vec::with_capacity(xs.len() * ys.len());
    for &x in xs {
        let (sx, kx) = (kernel.order.eval(x), kernel.diffusivity.eval(x).sqrt());
        for (&y, &(sy, ky)) in ys.iter().zip(&fy) {
            s.push(-2.0 * kx * ky * gamma_power((x - y).norm2(), sx + sy));
        }
    }
    s
}

/// Dense far-field matrix with the same quadrature and no compression,
/// by a direct loop over all interior element pairs (small meshes only).
pub fn k_direct(mesh: &Mesh, cloud: &QuadCloud, ck: &CloudKernel) -> Vec<Vec<f64>> {
    let n = mesh.n_free;
    let all: Vec<usize> = (0..n).collect();
    let mut scratch = NearScratch::new(mesh);
    let flat = smooth_near_block(mesh, cloud, ck, &all, &all, &mut scratch);
    flat.chunks(n.max(1)).take(n).map(<[f64]>::to_vec).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::square_mesh;

    #[test]
    fn extended_box_of_single_vertex_is_its_support() {
        let mesh = square_mesh(2.0, 1.0, 2).unwrap();
        let tree = ClusterTree::build(&mesh.vertices[..1], 1);
        let b = extended_boxes(&tree, &mesh)[0];
        let expect = Box2::from_points(mesh.support(0).iter().flat_map(|&t| mesh.element_vertices(t)));
        assert_eq!(b, expect);
        assert!(b.width(0) > 0.0 && b.width(1) > 0.0);
    }

    #[test]
    fn leaf_basis_rows_sum_to_hat_integrals() {
        let mesh = square_mesh(2.0, 1.0, 2).unwrap();
        let cloud = QuadCloud::gather(&mesh, TriangleRule::symmetric(3).unwrap());
        let tree = ClusterTree::build(&mesh.vertices[..mesh.n_free], 16);
        let boxes = extended_boxes(&tree, &mesh);
        let interp = ChebInterp::new(3);
        let leaf = tree.leaves().next().unwrap();
        let u = galerkin_leaf_basis(&tree, leaf, &boxes[leaf], &mesh, &cloud, &LeafQuadrature::Cloud, &interp);
        for (row, &v) in tree.indices(leaf).iter().enumerate() {
            let sum: f64 = u[row * 9..(row + 1) * 9].iter().sum();
            let hat: f64 = mesh.support(v).iter().map(|&t| mesh.area(t) / 3.0).sum();
            assert!((sum - hat).abs() < 1e-14);
        }
    }
}
