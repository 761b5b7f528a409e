//! Measurements against the slow reference computations, and the
//! verification suite that compares them with default tolerances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::density::{assemble_m, density_at_quadrature, density_direct, CloudKernel, CollocationH2, CollocationParams, QuadCloud};
use crate::error::Result;
use crate::farfield::{assemble_k, k_direct, H2Params, LeafQuadrature};
use crate::fields::Kernel;
use crate::geometry::Point2;
use crate::mesh::{square_mesh, Mesh, PairType};
use crate::nearfield::{aligned_affine_maps, assemble_b, difference_lists, local_matrix, SingularRule};
use crate::oracle::{dense_reference, exterior_density_reference, touching_pair_reference, NodalTriangle};
use crate::density::rho_exterior_disk;
use crate::solver::{assemble_operator, dot, AssemblyOptions, LinearOperator};

use super::config::RunConfig;

/// Reproducible uniform random vectors in `[-1, 1]^n`.
pub fn random_vectors(n: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect()
}

fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

fn dense_matvec(a: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    a.iter().map(|row| dot(row, v)).collect()
}

fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm(&d) / norm(b)
}

/// Largest `|K_h2 v - K_dense v| / |K_dense v|` over `vectors`.
pub fn farfield_error(mesh: &Mesh, kernel: &Kernel, params: &H2Params, vectors: &[Vec<f64>]) -> Result<f64> {
    let cloud = QuadCloud::gather(mesh, crate::quadrature::TriangleRule::symmetric(3)?);
    let ck = CloudKernel::new(&cloud, kernel)?;
    let k = assemble_k(mesh, kernel, &cloud, &ck, params, &LeafQuadrature::Cloud)?;
    let dense = k_direct(mesh, &cloud, &ck);
    let mut worst = 0.0f64;
    for v in vectors {
        worst = worst.max(rel_diff(&k.matvec(v)?, &dense_matvec(&dense, v)));
    }
    Ok(worst)
}

/// Largest pointwise relative deviation of the H² density from direct summation.
pub fn density_error(mesh: &Mesh, kernel: &Kernel, params: &CollocationParams) -> Result<f64> {
    let cloud = QuadCloud::gather(mesh, crate::quadrature::TriangleRule::symmetric(3)?);
    let ck = CloudKernel::new(&cloud, kernel)?;
    let krho = CollocationH2::build(mesh, &cloud, kernel, &ck, params)?;
    let fast = density_at_quadrature(&krho, &cloud)?;
    let direct = density_direct(mesh, &cloud, &ck);
    Ok(krho
        .targets
        .iter()
        .map(|&i| if direct[i] > 0.0 { ((fast[i] - direct[i]) / direct[i]).abs() } else { fast[i].abs() })
        .fold(0.0, f64::max))
}

/// An element whose centroid is closest to `target` and one partner of each
/// touching kind.
pub fn sample_pairs(mesh: &Mesh, target: Point2) -> Vec<(PairType, usize, usize)> {
    let centroid = |t: usize| {
        let v = mesh.element_vertices(t);
        (v[0] + v[1] + v[2]) * (1.0 / 3.0)
    };
    let t = mesh
        .interior_elements()
        .min_by(|&a, &b| centroid(a).dist(target).total_cmp(&centroid(b).dist(target)))
        .expect("mesh has interior elements");
    [PairType::Identical, PairType::SharedEdge, PairType::SharedVertex]
        .into_iter()
        .filter_map(|kind| mesh.patch(t).iter().find(|&&u| mesh.classify_pair(t, u) == kind).map(|&u| (kind, t, u)))
        .collect()
}

/// Relative max-entry error of the local matrix of each pair against the
/// adaptive reference, for every `n` in `ns`.
pub fn singular_errors(
    mesh: &Mesh,
    kernel: &Kernel,
    pairs: &[(PairType, usize, usize)],
    rule: SingularRule,
    ns: &[usize],
    oracle_tol: f64,
) -> Result<Vec<(PairType, Vec<f64>)>> {
    let mut out = Vec::new();
    for &(kind, t, u) in pairs {
        let reference = touching_pair_reference(NodalTriangle::from_mesh(mesh, t), NodalTriangle::from_mesh(mesh, u), kernel, oracle_tol);
        let pair = aligned_affine_maps(mesh, t, u)?;
        let mut errs = Vec::new();
        for &n in ns {
            let local = local_matrix(&pair, kernel, &SingularRule { n, ..rule })?;
            let m = local.size();
            let mut e = 0.0f64;
            for a in 0..m {
                for b in 0..m {
                    let r = reference.get_global(local.nodes[a], local.nodes[b]).expect("reference covers the pair nodes");
                    e = e.max((local.get(a, b) - r).abs());
                }
            }
            errs.push(e / local.max_abs());
        }
        out.push((kind, errs));
    }
    Ok(out)
}

/// Comparison of the assembled operator with the dense reference.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OperatorCheck {
    /// Largest `|A v - A_dense v| / |A_dense v|`.
    pub rel_error: f64,
    /// Largest `|v^T A u - u^T A v| / (|u| |v|)`.
    pub asymmetry: f64,
    /// Smallest `v^T A v / |v|^2`.
    pub min_rayleigh: f64,
}

pub fn operator_vs_dense(mesh: &Mesh, kernel: &Kernel, opts: &AssemblyOptions, oracle_tol: f64, vectors: &[Vec<f64>]) -> Result<OperatorCheck> {
    let (op, _) = assemble_operator(mesh, kernel, opts)?;
    let dense = dense_reference(mesh, kernel, oracle_tol);
    let mut check = OperatorCheck { rel_error: 0.0, asymmetry: 0.0, min_rayleigh: f64::INFINITY };
    let applied: Vec<Vec<f64>> = vectors.iter().map(|v| op.apply(v)).collect::<Result<_>>()?;
    for (v, av) in vectors.iter().zip(&applied) {
        check.rel_error = check.rel_error.max(rel_diff(av, &dense_matvec(&dense, v)));
        check.min_rayleigh = check.min_rayleigh.min(dot(v, av) / dot(v, v));
    }
    for (k, (v, av)) in vectors.iter().zip(&applied).enumerate() {
        let (u, au) = (&vectors[(k + 1) % vectors.len()], &applied[(k + 1) % vectors.len()]);
        check.asymmetry = check.asymmetry.max((dot(v, au) - dot(u, av)).abs() / (norm(u) * norm(v)));
    }
    Ok(check)
}

/// Largest relative deviation of the exterior density from the polar reference.
pub fn exterior_density_error(points: &[Point2], radius: f64, s: f64, n_theta: usize) -> Result<f64> {
    let mut worst = 0.0f64;
    for &x in points {
        let r = exterior_density_reference(x, radius, s, 1e-12);
        worst = worst.max((rho_exterior_disk(x, radius, s, n_theta)? - r).abs() / r);
    }
    Ok(worst)
}

/// `count` points spread over the disk of radius `r_max`.
pub fn disk_sample_points(count: usize, r_max: f64) -> Vec<Point2> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|k| {
            let r = r_max * ((k as f64 + 0.5) / count as f64).sqrt();
            let th = golden * k as f64;
            Point2::new(r * th.cos(), r * th.sin())
        })
        .collect()
}

/// Results of the structural property checks.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StructuralCheck {
    /// Entries covered by the far-field partition minus `N^2`.
    pub k_coverage_defect: i128,
    /// Entries covered by the collocation partition minus `|Q_int| |Q|`.
    pub collocation_coverage_defect: i128,
    /// Largest `|sum|` of a difference list relative to its largest entry.
    pub difference_sum: f64,
    /// Largest row sum of a local matrix relative to its largest entry.
    pub local_row_sum: f64,
    pub b_asymmetry: f64,
    pub m_asymmetry: f64,
    /// Smallest Rayleigh quotients over random vectors.
    pub b_min_rayleigh: f64,
    pub m_min_rayleigh: f64,
    /// Kernel pairs whose two orderings differ.
    pub gamma_asymmetric_pairs: usize,
    /// Touching point pairs with a nonzero `gamma_T`.
    pub touching_nonzero: usize,
}

impl StructuralCheck {
    pub fn passed(&self) -> bool {
        self.k_coverage_defect == 0
            && self.collocation_coverage_defect == 0
            && self.difference_sum <= 8.0 * f64::EPSILON
            && self.local_row_sum <= 1e-12
            && self.b_asymmetry == 0.0
            && self.m_asymmetry == 0.0
            && self.b_min_rayleigh >= 0.0
            && self.m_min_rayleigh >= 0.0
            && self.gamma_asymmetric_pairs == 0
            && self.touching_nonzero == 0
    }
}

pub fn structural_checks(mesh: &Mesh, kernel: &Kernel, opts: &AssemblyOptions, seed: u64) -> Result<StructuralCheck> {
    let cloud = QuadCloud::gather(mesh, opts.rule.clone());
    let ck = CloudKernel::new(&cloud, kernel)?;
    let k = assemble_k(mesh, kernel, &cloud, &ck, &opts.h2, &opts.leaf)?;
    let n = mesh.n_free as i128;
    let k_coverage_defect = match &k.h2 {
        Some(h) => h.partition.coverage(&h.rows.tree, &h.rows.tree) as i128 - n * n,
        None => -n * n,
    };
    let krho = CollocationH2::build(mesh, &cloud, kernel, &ck, &opts.collocation)?;
    let collocation_coverage_defect = krho.partition.coverage(&krho.rows.tree, &krho.cols.tree) as i128
        - (krho.targets.len() * cloud.len()) as i128;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut difference_sum = 0.0f64;
    let mut local_row_sum = 0.0f64;
    for (_, t, u) in sample_pairs(mesh, Point2::new(0.1, -0.2)) {
        let pair = aligned_affine_maps(mesh, t, u)?;
        for _ in 0..50 {
            let e = [rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>()];
            for list in difference_lists(&pair, e) {
                let scale = list.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                difference_sum = difference_sum.max(list.iter().sum::<f64>().abs() / scale);
            }
        }
        let local = local_matrix(&pair, kernel, &opts.singular)?;
        let m = local.size();
        for a in 0..m {
            let row: f64 = (0..m).map(|b| local.get(a, b)).sum();
            local_row_sum = local_row_sum.max(row.abs() / local.max_abs());
        }
    }

    let b = assemble_b(mesh, kernel, &opts.singular, opts.interface)?;
    let rho = density_at_quadrature(&krho, &cloud)?;
    let m = assemble_m(mesh, &cloud, &rho, opts.literal_mass);
    let vectors = random_vectors(mesh.n_free, 100, seed);
    let rayleigh = |a: &crate::sparse::CsrMatrix| vectors.iter().map(|v| dot(v, &a.matvec(v)) / dot(v, v)).fold(f64::INFINITY, f64::min);

    let mut gamma_asymmetric_pairs = 0;
    let mut touching_nonzero = 0;
    for _ in 0..10_000 {
        let i = rng.gen_range(0..cloud.len());
        let j = rng.gen_range(0..cloud.len());
        let (x, y) = (cloud.points[i], cloud.points[j]);
        if i != j && (kernel.gamma(x, y) != kernel.gamma(y, x) || ck.gamma_t(mesh, &cloud, i, j) != ck.gamma_t(mesh, &cloud, j, i)) {
            gamma_asymmetric_pairs += 1;
        }
    }
    for t in 0..mesh.n_triangles() {
        for &u in mesh.patch(t) {
            for i in cloud.element_range(t) {
                for j in cloud.element_range(u) {
                    if ck.gamma_t(mesh, &cloud, i, j) != 0.0 {
                        touching_nonzero += 1;
                    }
                }
            }
        }
    }
    Ok(StructuralCheck {
        k_coverage_defect,
        collocation_coverage_defect,
        difference_sum,
        local_row_sum,
        b_asymmetry: b.max_asymmetry(),
        m_asymmetry: m.max_asymmetry(),
        b_min_rayleigh: rayleigh(&b),
        m_min_rayleigh: rayleigh(&m),
        gamma_asymmetric_pairs,
        touching_nonzero,
    })
}

/// Outcome of one check of the verification suite.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn at_most(name: &str, value: f64, tolerance: f64) -> Self {
        Self { name: name.into(), value, tolerance, passed: value <= tolerance }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct VerificationReport {
    pub checks: Vec<Check>,
    pub structural: Option<StructuralCheck>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn first_failure(&self) -> Option<&Check> {
        self.checks.iter().find(|c| !c.passed)
    }
}

/// Oracle comparisons on small square meshes with the H², collocation and
/// element-rule settings of `cfg`.
pub fn run_verification_suite(cfg: &RunConfig) -> Result<VerificationReport> {
    let kernel = Kernel::constant(0.5)?;
    let mut report = VerificationReport::default();

    let mesh = square_mesh(2.0, 1.0, 4)?;
    let vectors = random_vectors(mesh.n_free, 10, 1);
    report.checks.push(Check::at_most("farfield-h2-vs-dense", farfield_error(&mesh, &kernel, &cfg.h2, &vectors)?, 1e-5));

    let mesh = square_mesh(2.0, 1.0, 3)?;
    report.checks.push(Check::at_most("density-h2-vs-direct", density_error(&mesh, &kernel, &cfg.collocation)?, 1e-6));

    let pairs = sample_pairs(&mesh, Point2::new(0.3, -0.2));
    for (kind, errs) in singular_errors(&mesh, &kernel, &pairs, SingularRule::new(10, 0.5), &[10], 1e-12)? {
        report.checks.push(Check::at_most(&format!("singular-{kind:?}").to_lowercase(), errs[0], 1e-8));
    }

    let mesh = square_mesh(2.0, 1.0, 1)?;
    let mut opts = cfg.assembly_options(&kernel, &mesh)?;
    opts.singular = SingularRule::new(10, 0.5);
    opts.rule = crate::quadrature::TriangleRule::parse("gauss-6")?;
    opts.exterior = None;
    let vectors = random_vectors(mesh.n_free, 10, 2);
    let op = operator_vs_dense(&mesh, &kernel, &opts, 1e-10, &vectors)?;
    report.checks.push(Check::at_most("operator-vs-dense", op.rel_error, 1e-4));
    report.checks.push(Check::at_most("operator-symmetry", op.asymmetry, 1e-10));
    report.checks.push(Check { name: "operator-positive".into(), value: op.min_rayleigh, tolerance: 0.0, passed: op.min_rayleigh > 0.0 });

    let pts = disk_sample_points(20, 0.95);
    report.checks.push(Check::at_most("exterior-density", exterior_density_error(&pts, 1.1, 0.7, 9)?, 1e-8));

    let mesh = square_mesh(2.0, 1.0, 2)?;
    let opts = cfg.assembly_options(&kernel, &mesh)?;
    let s = structural_checks(&mesh, &kernel, &opts, 3)?;
    report.checks.push(Check { name: "structural".into(), value: 0.0, tolerance: 0.0, passed: s.passed() });
    report.structural = Some(s);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_suite_passes_and_low_degree_fails() {
        let report = run_verification_suite(&RunConfig::disk()).unwrap();
        assert!(report.passed(), "{:?}", report.first_failure());
        let mut cfg = RunConfig::disk();
        cfg.h2.p = 2;
        let report = run_verification_suite(&cfg).unwrap();
        assert_eq!(report.first_failure().map(|c| c.name.as_str()), Some("farfield-h2-vs-dense"));
    }

    #[test]
    fn sample_points_stay_inside_the_radius() {
        let pts = disk_sample_points(20, 0.95);
        assert_eq!(pts.len(), 20);
        assert!(pts.iter().all(|p| p.norm() <= 0.95));
    }
}
