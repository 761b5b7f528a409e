//! End-to-end acceptance checks. Each test writes one `PASS`/`FAIL` line
//! with the measured value and the pinned tolerance before asserting.
//!
//! The tests share a lock so the assembly timings are taken on an otherwise
//! idle process.

use std::io::Write;
use std::sync::{Mutex, MutexGuard};

use fracfem::density::rho_exterior_disk;
use fracfem::farfield::{assemble_k, H2Params, LeafQuadrature};
use fracfem::density::{CloudKernel, QuadCloud};
use fracfem::harness::verify::{
    density_error, disk_sample_points, exterior_density_error, farfield_error, operator_vs_dense, random_vectors,
    sample_pairs, singular_errors, structural_checks,
};
use fracfem::harness::{run_bench_assembly, run_disk_convergence, run_self_convergence, RunConfig};
use fracfem::{disk_mesh, square_mesh, Kernel, OrderSpec, Point2, SingularRule, TriangleRule};

static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

/// Writes straight to the stderr handle, which the test harness does not
/// capture, so the verdicts show up in plain `cargo test` output.
fn verdict(name: &str, passed: bool, detail: &str) -> bool {
    let line = format!("[{}] {name}: {detail}\n", if passed { "PASS" } else { "FAIL" });
    let _ = std::io::stderr().write_all(line.as_bytes());
    passed
}

fn in_band(v: Option<f64>, lo: f64, hi: f64) -> bool {
    v.is_some_and(|v| (lo..=hi).contains(&v))
}

#[test]
fn disk_l2_error_is_first_order() {
    let _g = serial();
    let mut cfg = RunConfig::disk();
    cfg.levels = (2..=5).collect();
    let report = run_disk_convergence(&cfg).unwrap();
    for r in &report.records {
        println!("  level {} N {} h {:.4e} l2 {:.4e}", r.level, r.n_dofs, r.h, r.error_l2.unwrap());
    }
    let slope = report.slopes.l2;
    let ok = verdict("disk first-order convergence", in_band(slope, 0.8, 1.2), &format!("L2 slope {slope:?}, band [0.8, 1.2]"));
    assert!(ok);
}

#[test]
fn assembly_time_is_linear() {
    let _g = serial();
    let mut cfg = RunConfig::disk();
    cfg.name = "assembly-timing".into();
    cfg.levels = (3..=6).collect();
    cfg.quadrature.n = Some(6);
    let report = run_bench_assembly(&cfg).unwrap();
    for r in &report.records {
        println!("  level {} N {} B {:.3}s K {:.3}s M {:.3}s", r.level, r.n_dofs, r.time_b, r.time_k, r.time_m);
    }
    let s = &report.slopes;
    let slopes_ok = [s.time_b, s.time_k, s.time_m].iter().all(|&v| in_band(v, 0.8, 1.3));
    let ratios = report.max_time_ratios();
    let ratios_ok = ratios.iter().all(|&r| r <= 5.5);
    let ok = verdict(
        "linear assembly complexity",
        slopes_ok && ratios_ok,
        &format!(
            "time-vs-N slopes B {:?} K {:?} M {:?} (band [0.8, 1.3]); max level ratios B {:.2} K {:.2} M {:.2} (limit 5.5)",
            s.time_b, s.time_k, s.time_m, ratios[0], ratios[1], ratios[2]
        ),
    );
    assert!(ok);
}

#[test]
fn farfield_matches_dense_reference() {
    let _g = serial();
    let mesh = square_mesh(2.0, 1.0, 4).unwrap();
    let kernel = Kernel::constant(0.5).unwrap();
    let p10 = H2Params::default();
    let cloud = QuadCloud::gather(&mesh, TriangleRule::symmetric(3).unwrap());
    let ck = CloudKernel::new(&cloud, &kernel).unwrap();
    let far_blocks = assemble_k(&mesh, &kernel, &cloud, &ck, &p10, &LeafQuadrature::Cloud).unwrap().stats().far_blocks;
    let v = random_vectors(mesh.n_free, 10, 11);
    let e10 = farfield_error(&mesh, &kernel, &p10, &v).unwrap();
    let e5 = farfield_error(&mesh, &kernel, &H2Params { p: 5, ..p10 }, &v).unwrap();
    let ok = verdict(
        "far-field H2 fidelity",
        far_blocks > 0 && e10 <= 1e-5 && e5 / e10 >= 10.0,
        &format!("N {} far blocks {far_blocks}; error p=10 {e10:.3e} (limit 1e-5); p=5 {e5:.3e}, ratio {:.1} (min 10)", mesh.n_free, e5 / e10),
    );
    assert!(ok);
}

#[test]
fn density_matches_direct_summation() {
    let _g = serial();
    let kernel = Kernel::constant(0.7).unwrap();
    let params = RunConfig::disk().collocation;
    let mut worst = 0.0f64;
    for mesh in [square_mesh(2.0, 1.0, 3).unwrap(), disk_mesh(1.0, 1.1, 3).unwrap()] {
        let e = density_error(&mesh, &kernel, &params).unwrap();
        println!("  {} elements: {e:.3e}", mesh.n_triangles());
        worst = worst.max(e);
    }
    let ok = verdict("density collocation fidelity", worst <= 1e-6, &format!("max relative deviation {worst:.3e} (limit 1e-6)"));
    assert!(ok);
}

#[test]
fn singular_quadrature_matches_adaptive_reference() {
    let _g = serial();
    let mesh = square_mesh(2.0, 1.0, 2).unwrap();
    let ns: Vec<usize> = (2..=10).collect();
    let constant = Kernel::constant(0.5).unwrap();
    let bump_cfg = RunConfig::bump(0.2);
    let bump = bump_cfg.kernel().unwrap();
    let cases = [
        ("s = 0.5", &constant, SingularRule::new(10, 0.5), Point2::new(0.3, -0.2), 1e-12, 1e-8),
        ("bump", &bump, bump_cfg.singular_rule(&bump, mesh.h), Point2::new(-0.4, 0.4), 1e-11, 1e-6),
    ];
    let mut all = true;
    for (label, kernel, rule, at, oracle_tol, limit) in cases {
        let pairs = sample_pairs(&mesh, at);
        assert_eq!(pairs.len(), 3);
        for (kind, errs) in singular_errors(&mesh, kernel, &pairs, rule, &ns, oracle_tol).unwrap() {
            let at10 = *errs.last().unwrap();
            let decaying = errs.windows(2).all(|w| w[1] < w[0]);
            let ok = verdict(
                &format!("singular quadrature {label} {kind:?}"),
                at10 <= limit && decaying,
                &format!("error at n=10 {at10:.3e} (limit {limit:.0e}); monotone decay over n=2..10: {decaying}"),
            );
            all &= ok;
        }
    }
    assert!(all);
}

#[test]
fn operator_matches_dense_reference() {
    let _g = serial();
    let mut constant = RunConfig::bump(0.0);
    constant.order = OrderSpec::Constant { s: 0.5 };
    let bump = RunConfig::bump(0.2);
    let mut all = true;
    for (label, cfg, level) in [("s = 0.5", &constant, 2), ("bump", &bump, 1)] {
        let mesh = square_mesh(2.0, 1.0, level).unwrap();
        let kernel = cfg.kernel().unwrap();
        let mut opts = cfg.assembly_options(&kernel, &mesh).unwrap();
        opts.rule = TriangleRule::parse("gauss-6").unwrap();
        opts.singular.n = 10;
        let v = random_vectors(mesh.n_free, 100, 21);
        let c = operator_vs_dense(&mesh, &kernel, &opts, 1e-9, &v).unwrap();
        let ok = verdict(
            &format!("operator equivalence {label}"),
            c.rel_error <= 1e-4 && c.asymmetry <= 1e-10 && c.min_rayleigh > 0.0,
            &format!(
                "N {} relative error {:.3e} (limit 1e-4); asymmetry {:.1e}; min Rayleigh quotient {:.3}",
                mesh.n_free, c.rel_error, c.asymmetry, c.min_rayleigh
            ),
        );
        all &= ok;
    }
    assert!(all);
}

#[test]
fn bump_self_convergence_is_first_order() {
    let _g = serial();
    let mut probes = Vec::new();
    let mut all = true;
    for eta in [0.2, -0.2] {
        let mut cfg = RunConfig::bump(eta);
        cfg.levels = (0..=6).collect();
        let report = run_self_convergence(&cfg).unwrap();
        for r in report.records.iter().filter(|r| r.error_l2.is_some()) {
            println!("  eta {eta:+} level {} N {} |U_j+1 - U_j| {:.4e}", r.level, r.n_dofs, r.error_l2.unwrap());
        }
        let slope = report.slopes.l2;
        all &= verdict(&format!("bump self-convergence eta {eta:+}"), in_band(slope, 0.8, 1.2), &format!("L2 slope {slope:?}, band [0.8, 1.2]"));
        probes.push(report.probe.unwrap().1);
    }
    all &= verdict(
        "bump center value ordering",
        probes[0] < probes[1],
        &format!("u(x_c) eta +0.2 {:.6} < eta -0.2 {:.6}", probes[0], probes[1]),
    );
    assert!(all);
}

#[test]
fn exterior_density_is_exact() {
    let _g = serial();
    let (radius, s) = (1.1, 0.7);
    let center = rho_exterior_disk(Point2::new(0.0, 0.0), radius, s, 9).unwrap();
    let closed = std::f64::consts::PI * radius.powf(-2.0 * s) / s;
    let e0 = ((center - closed) / closed).abs();
    let e = exterior_density_error(&disk_sample_points(20, 0.95), radius, s, 9).unwrap();
    let ok = verdict(
        "exterior density",
        e0 <= 1e-10 && e <= 1e-8,
        &format!("center vs closed form {e0:.2e} (limit 1e-10); 20 points vs polar reference {e:.2e} (limit 1e-8)"),
    );
    assert!(ok);
}

#[test]
fn structural_properties_hold() {
    let _g = serial();
    let constant = RunConfig::disk();
    let bump = RunConfig::bump(0.2);
    let mut all = true;
    for (label, cfg, mesh) in [
        ("disk s = 0.7", &constant, disk_mesh(1.0, 1.1, 2).unwrap()),
        ("square bump", &bump, square_mesh(2.0, 1.0, 2).unwrap()),
    ] {
        let kernel = cfg.kernel().unwrap();
        let mut opts = cfg.assembly_options(&kernel, &mesh).unwrap();
        // Small leaves so both partitions contain admissible blocks.
        opts.h2.leaf_size = 16;
        opts.collocation.leaf_size = 16;
        let c = structural_checks(&mesh, &kernel, &opts, 31).unwrap();
        all &= verdict(&format!("structural suite {label}"), c.passed(), &format!("{c:?}"));
    }
    assert!(all);
}
