//! Load vector, the assembled operator `A = B + K + M (+ M_out)`, plain
//! conjugate gradients and error norms.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::density::{assemble_m, assemble_m_out, density_at_quadrature, CloudKernel, CollocationH2, CollocationParams, QuadCloud};
use crate::error::{Error, Result};
use crate::farfield::{assemble_k, FarField, H2Params, LeafQuadrature};
use crate::fields::Kernel;
use crate::geometry::Point2;
use crate::mesh::Mesh;
use crate::nearfield::{assemble_b, InterfacePairs, SingularRule};
use crate::quadrature::TriangleRule;
use crate::sparse::CsrMatrix;

/// Anything that can be applied to a vector of free-vertex values.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, v: &[f64]) -> Result<Vec<f64>>;
}

impl LinearOperator for CsrMatrix {
    fn dim(&self) -> usize {
        self.n_rows
    }

    fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.n_cols {
            return Err(Error::DimensionMismatch { expected: self.n_cols, got: v.len() });
        }
        Ok(self.matvec(v))
    }
}

/// `int_{Omega_int} f psi_i` for the free vertices, element by element with `rule`.
pub fn load_vector(mesh: &Mesh, f: impl Fn(Point2) -> f64, rule: &TriangleRule) -> Vec<f64> {
    let mut b = vec![0.0; mesh.n_free];
    for t in mesh.interior_elements() {
        let local = element_load(mesh, t, &f, rule);
        for (&v, l) in mesh.triangles[t].v.iter().zip(local) {
            if mesh.is_free(v) {
                b[v] += l;
            }
        }
    }
    b
}

/// `int_t f psi_a` for the three vertices of element `t`.
pub fn element_load(mesh: &Mesh, t: usize, f: impl Fn(Point2) -> f64, rule: &TriangleRule) -> [f64; 3] {
    let area = mesh.area(t);
    let mut out = [0.0; 3];
    for ((p, w), bary) in rule.map(&mesh.element_vertices(t)).zip(&rule.weights).zip(&rule.bary) {
        let fw = area * w * f(p);
        for a in 0..3 {
            out[a] += fw * bary[a];
        }
    }
    out
}

/// The stiffness matrix as a sum of independently stored parts.
#[derive(Clone, Debug)]
pub struct AssembledOperator {
    pub b: CsrMatrix,
    pub k: FarField,
    pub m: CsrMatrix,
    pub m_out: Option<CsrMatrix>,
}

impl LinearOperator for AssembledOperator {
    fn dim(&self) -> usize {
        self.b.n_rows
    }

    fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        if v.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: v.len() });
        }
        let mut y = self.k.matvec(v)?;
        self.b.matvec_add(v, &mut y);
        self.m.matvec_add(v, &mut y);
        if let Some(m) = &self.m_out {
            m.matvec_add(v, &mut y);
        }
        Ok(y)
    }
}

/// Exterior region handled by an analytic density instead of a mesh.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExteriorDisk {
    pub radius: f64,
    /// Gauss points per angular panel.
    pub n_theta: usize,
}

/// Everything that determines the discrete operator besides mesh and kernel.
#[derive(Clone, Debug, PartialEq)]
pub struct AssemblyOptions {
    pub singular: SingularRule,
    /// Element rule shared by the density, the weighted mass, the far field and the load.
    pub rule: TriangleRule,
    pub h2: H2Params,
    pub collocation: CollocationParams,
    pub leaf: LeafQuadrature,
    pub interface: InterfacePairs,
    /// Drop the factor 2 of the weighted mass matrix.
    pub literal_mass: bool,
    pub exterior: Option<ExteriorDisk>,
}

impl AssemblyOptions {
    /// Defaults for a mesh of size `h` and maximal order `s_bar`.
    pub fn for_mesh(h: f64, s_bar: f64) -> Self {
        Self {
            singular: SingularRule::new(SingularRule::order_for(h, s_bar), s_bar),
            rule: TriangleRule::symmetric(3).expect("3-point rule exists"),
            h2: H2Params::default(),
            collocation: CollocationParams::default(),
            leaf: LeafQuadrature::Cloud,
            interface: InterfacePairs::BothOrders,
            literal_mass: false,
            exterior: None,
        }
    }
}

/// Wall-clock time of the three assembly routines.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct AssemblyTimings {
    pub b: Duration,
    pub k: Duration,
    /// Density evaluation plus the weighted mass (and exterior mass) matrices.
    pub m: Duration,
}

pub fn assemble_operator(mesh: &Mesh, kernel: &Kernel, opts: &AssemblyOptions) -> Result<(AssembledOperator, AssemblyTimings)> {
    let t = Instant::now();
    let b = assemble_b(mesh, kernel, &opts.singular, opts.interface)?;
    let tb = t.elapsed();

    let cloud = QuadCloud::gather(mesh, opts.rule.clone());
    let ck = CloudKernel::new(&cloud, kernel)?;

    let t = Instant::now();
    let k = assemble_k(mesh, kernel, &cloud, &ck, &opts.h2, &opts.leaf)?;
    let tk = t.elapsed();

    let t = Instant::now();
    let krho = CollocationH2::build(mesh, &cloud, kernel, &ck, &opts.collocation)?;
    let rho = density_at_quadrature(&krho, &cloud)?;
    let m = assemble_m(mesh, &cloud, &rho, opts.literal_mass);
    let m_out = match opts.exterior {
        Some(d) => Some(assemble_m_out(mesh, &cloud, kernel, d.radius, d.n_theta)?),
        None => None,
    };
    let tm = t.elapsed();
    Ok((AssembledOperator { b, k, m, m_out }, AssemblyTimings { b: tb, k: tk, m: tm }))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CgParams {
    pub rel_tol: f64,
    /// `None` means `10 N`.
    pub max_iter: Option<usize>,
}

impl Default for CgParams {
    fn default() -> Self {
        Self { rel_tol: 1e-10, max_iter: None }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct CgReport {
    pub iterations: usize,
    pub converged: bool,
    /// `|r_k| / |rhs|` after every iteration, starting with the initial residual.
    pub residuals: Vec<f64>,
}

impl CgReport {
    pub fn final_residual(&self) -> f64 {
        self.residuals.last().copied().unwrap_or(0.0)
    }
}

/// Unpreconditioned CG from a zero initial guess.
///
/// Stops when `|r| <= rel_tol |rhs|`; hitting `max_iter` is reported through
/// [`CgReport::converged`], a non-positive `p^T A p` as [`Error::Breakdown`].
pub fn cg_solve(op: &dyn LinearOperator, rhs: &[f64], params: &CgParams) -> Result<(Vec<f64>, CgReport)> {
    let n = op.dim();
    if rhs.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: rhs.len() });
    }
    let max_iter = params.max_iter.unwrap_or(10 * n);
    let mut x = vec![0.0; n];
    let norm_b = dot(rhs, rhs).sqrt();
    let mut report = CgReport::default();
    if norm_b == 0.0 {
        report.converged = true;
        report.residuals.push(0.0);
        return Ok((x, report));
    }
    let mut r = rhs.to_vec();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    report.residuals.push(1.0);
    while report.iterations < max_iter {
        let ap = op.apply(&p)?;
        let curvature = dot(&p, &ap);
        if !(curvature > 0.0) {
            return Err(Error::Breakdown { iteration: report.iterations, curvature });
        }
        let alpha = rr / curvature;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        report.iterations += 1;
        let rr_new = dot(&r, &r);
        let rel = rr_new.sqrt() / norm_b;
        report.residuals.push(rel);
        if rel <= params.rel_tol {
            report.converged = true;
            break;
        }
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    Ok((x, report))
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Nodal values on all mesh vertices, zero off the free set.
fn nodal(mesh: &Mesh, u: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; mesh.n_vertices()];
    out[..mesh.n_free].copy_from_slice(u);
    out
}

fn check_len(mesh: &Mesh, u: &[f64]) -> Result<()> {
    if u.len() != mesh.n_free {
        return Err(Error::DimensionMismatch { expected: mesh.n_free, got: u.len() });
    }
    Ok(())
}

/// `|U - u|` in `L^2` over the interior elements.
pub fn l2_error(mesh: &Mesh, u: &[f64], exact: impl Fn(Point2) -> f64, rule: &TriangleRule) -> Result<f64> {
    check_len(mesh, u)?;
    let full = nodal(mesh, u);
    let mut sum = 0.0;
    for t in mesh.interior_elements() {
        let v = mesh.triangles[t].v;
        let area = mesh.area(t);
        for ((p, w), bary) in rule.map(&mesh.element_vertices(t)).zip(&rule.weights).zip(&rule.bary) {
            let uh: f64 = (0..3).map(|a| bary[a] * full[v[a]]).sum();
            let e = uh - exact(p);
            sum += area * w * e * e;
        }
    }
    Ok(sum.sqrt())
}

/// Largest nodal deviation over the free vertices.
pub fn linf_nodal(mesh: &Mesh, u: &[f64], exact: impl Fn(Point2) -> f64) -> Result<f64> {
    check_len(mesh, u)?;
    Ok(u.iter().enumerate().map(|(i, &ui)| (ui - exact(mesh.vertices[i])).abs()).fold(0.0, f64::max))
}

/// `|U_fine - U_coarse|` in `L^2(Omega_int)`, the coarse solution prolonged
/// to the fine mesh by linear interpolation.
pub fn l2_diff(fine: &Mesh, u_fine: &[f64], coarse: &Mesh, u_coarse: &[f64]) -> Result<f64> {
    check_len(fine, u_fine)?;
    check_len(coarse, u_coarse)?;
    let prolonged = prolong(fine, coarse, u_coarse)?;
    let diff: Vec<f64> = nodal(fine, u_fine).iter().zip(&prolonged).map(|(a, b)| a - b).collect();
    // Squares of linear functions are integrated exactly by the mass-matrix formula.
    let mut sum = 0.0;
    for t in fine.interior_elements() {
        let d = fine.triangles[t].v.map(|v| diff[v]);
        let s = d[0] * d[0] + d[1] * d[1] + d[2] * d[2] + d[0] * d[1] + d[1] * d[2] + d[2] * d[0];
        sum += fine.area(t) * s / 6.0;
    }
    Ok(sum.sqrt())
}

/// Values of the coarse P1 function at every fine vertex.
pub fn prolong(fine: &Mesh, coarse: &Mesh, u_coarse: &[f64]) -> Result<Vec<f64>> {
    check_len(coarse, u_coarse)?;
    let full = nodal(coarse, u_coarse);
    let loc = fine.locate_in_parent(coarse)?;
    Ok(loc
        .iter()
        .map(|&(t, bary)| {
            let v = coarse.triangles[t].v;
            (0..3).map(|a| bary[a] * full[v[a]]).sum()
        })
        .collect())
}

/// Normalisation constant of the fractional Laplacian in two dimensions.
pub fn fractional_laplacian_constant(s: f64) -> f64 {
    4f64.powf(s) * s * libm::tgamma(1.0 + s) / (std::f64::consts::PI * libm::tgamma(1.0 - s))
}

/// Factor turning the unit load of the fractional Laplacian into the load
/// of the unnormalised form assembled here.
pub fn disk_load_scale(s: f64) -> f64 {
    2.0 / fractional_laplacian_constant(s)
}

/// Solution of the fractional Laplacian with unit load on the unit disk.
pub fn exact_disk_solution(s: f64) -> impl Fn(Point2) -> f64 {
    let c = 4f64.powf(-s) / libm::tgamma(1.0 + s).powi(2);
    move |p: Point2| {
        let r2 = p.norm2();
        if r2 < 1.0 {
            c * (1.0 - r2).powf(s)
        } else {
            0.0
        }
    }
}
