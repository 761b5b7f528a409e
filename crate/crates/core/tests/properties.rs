//! Randomised invariants of the building blocks.

use std::f64::consts::PI;

use fracfem::density::{rho_exterior_disk, CloudKernel, QuadCloud};
use fracfem::farfield::{assemble_k, k_direct, H2Params, LeafQuadrature};
use fracfem::h2::{partition_blocks, AdmMode, Admissibility, ChebInterp, ClusterTree};
use fracfem::nearfield::{aligned_affine_maps, difference_lists, local_matrix};
use fracfem::solver::{cg_solve, l2_diff, prolong, CgParams};
use fracfem::{square_mesh, BumpOrder, Box2, CsrMatrix, Diffusivity, Kernel, OrderField, PairType, Point2, SingularRule, TriangleRule};
use proptest::prelude::*;

fn point() -> impl Strategy<Value = Point2> {
    (-2.0..2.0f64, -2.0..2.0f64).prop_map(|(x, y)| Point2::new(x, y))
}

fn bump_kernel(eta: f64) -> Kernel {
    let order = OrderField::bump(BumpOrder::new(0.7, eta, 1.0, [-0.4, 0.4])).unwrap();
    Kernel::new(order, Diffusivity::constant(1.0).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn partition_covers_every_entry_once(
        pts in prop::collection::vec(point(), 1..150),
        leaf in 1usize..20,
        lambda in 0.1..3.0f64,
        geometric in any::<bool>(),
        symmetric in any::<bool>(),
    ) {
        let tree = ClusterTree::build(&pts, leaf);
        let boxes: Vec<Box2> = tree.clusters.iter().map(|c| c.bbox).collect();
        let mode = if geometric { AdmMode::Geometric } else { AdmMode::Strict };
        let part = partition_blocks(&tree, &boxes, &tree, &boxes, &Admissibility::new(lambda, mode), symmetric);
        let n = pts.len();
        let mut hits = vec![0u8; n * n];
        for &(r, c) in part.far.iter().chain(&part.near) {
            for &i in tree.indices(r) {
                for &j in tree.indices(c) {
                    hits[i * n + j] += 1;
                    if symmetric && r != c {
                        hits[j * n + i] += 1;
                    }
                }
            }
        }
        prop_assert!(hits.iter().all(|&h| h == 1));
        prop_assert_eq!(part.coverage(&tree, &tree), (n * n) as u128);
    }

    #[test]
    fn chebyshev_interpolation_reproduces_polynomials(
        p in 1usize..12,
        x in 0.0..1.0f64,
        y in 0.0..1.0f64,
        a in 0usize..12,
        b in 0usize..12,
    ) {
        prop_assume!(a < p && b < p);
        let bx = Box2::new(Point2::new(-0.3, 0.5), Point2::new(1.2, 0.9));
        let interp = ChebInterp::new(p);
        let q = Point2::new(-0.3 + 1.5 * x, 0.5 + 0.4 * y);
        let mut l = vec![0.0; interp.rank()];
        interp.lagrange(&bx, q, &mut l);
        let f = |z: Point2| z.x.powi(a as i32) * z.y.powi(b as i32);
        let approx: f64 = interp.nodes(&bx).iter().zip(&l).map(|(&z, &w)| w * f(z)).sum();
        prop_assert!((approx - f(q)).abs() <= 1e-10 * (1.0 + f(q).abs()));
        prop_assert!((l.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn kernel_is_symmetric_and_order_stays_in_bounds(x in point(), y in point(), eta in -0.25..0.25f64) {
        prop_assume!(x != y);
        let k = bump_kernel(eta);
        prop_assert_eq!(k.gamma(x, y), k.gamma(y, x));
        prop_assert!(k.gamma(x, y) > 0.0);
        let (lo, hi) = k.order.bounds();
        let s = k.order.eval(x);
        prop_assert!(lo <= s && s <= hi);
    }

    #[test]
    fn triangle_rules_are_exact_to_their_degree(rule in prop::sample::select(vec!["1", "3", "6", "7", "gauss-2", "gauss-4"]), a in 0usize..9, b in 0usize..9) {
        let r = TriangleRule::parse(rule).unwrap();
        prop_assume!(a + b <= r.degree);
        // Reference triangle (0,0), (1,0), (0,1).
        let v = [Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)];
        let q: f64 = r.map(&v).zip(&r.weights).map(|(z, w)| 0.5 * w * z.x.powi(a as i32) * z.y.powi(b as i32)).sum();
        let fact = |n: usize| (1..=n).map(|k| k as f64).product::<f64>();
        let exact = fact(a) * fact(b) / fact(a + b + 2);
        prop_assert!((q - exact).abs() <= 1e-13);
    }

    #[test]
    fn exterior_density_is_radial_and_increasing(r in 0.0..0.9f64, th in 0.0..(2.0 * PI), s in 0.1..0.95f64) {
        let at = |r: f64, th: f64| rho_exterior_disk(Point2::new(r * th.cos(), r * th.sin()), 1.1, s, 9).unwrap();
        let base = at(r, 0.0);
        prop_assert!(base > 0.0);
        prop_assert!((at(r, th) - base).abs() <= 1e-12 * base);
        prop_assert!(at(r + 0.05, th) > base);
    }

    #[test]
    fn conjugate_gradients_solve_spd_systems(diag in prop::collection::vec(1.0..10.0f64, 2..40), off in -0.4..0.4f64) {
        let n = diag.len();
        let pattern = (0..n).flat_map(|i| [(i, i), (i, (i + 1) % n), ((i + 1) % n, i)]).collect();
        let mut a = CsrMatrix::from_pattern(n, n, pattern);
        for i in 0..n {
            a.add(i, i, diag[i]);
            if n > 2 || i == 0 {
                a.add(i, (i + 1) % n, off);
                a.add((i + 1) % n, i, off);
            }
        }
        let rhs: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let (u, report) = cg_solve(&a, &rhs, &CgParams::default()).unwrap();
        prop_assert!(report.converged);
        let r: f64 = a.matvec(&u).iter().zip(&rhs).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        let b: f64 = rhs.iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assert!(r <= 1e-9 * b.max(1e-300));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn local_matrices_are_symmetric_with_zero_row_sums(
        t in 0usize..128,
        pick in 0usize..16,
        s in 0.1..0.9f64,
        eta in -0.2..0.2f64,
        variable in any::<bool>(),
    ) {
        let mesh = square_mesh(2.0, 1.0, 2).unwrap();
        let t = t % mesh.n_triangles();
        let patch = mesh.patch(t);
        let u = patch[pick % patch.len()];
        let pair = aligned_affine_maps(&mesh, t, u).unwrap();
        let (kernel, rule) = if variable {
            let k = bump_kernel(eta);
            let hi = k.s_max();
            (k, SingularRule::graded(5, hi, 3))
        } else {
            (Kernel::constant(s).unwrap(), SingularRule::new(5, s))
        };
        let local = local_matrix(&pair, &kernel, &rule).unwrap();
        let m = local.size();
        let scale = local.max_abs();
        for a in 0..m {
            let row: f64 = (0..m).map(|b| local.get(a, b)).sum();
            prop_assert!(row.abs() <= 1e-12 * scale);
            for b in 0..m {
                prop_assert!((local.get(a, b) - local.get(b, a)).abs() <= 1e-13 * scale);
            }
            prop_assert!(local.get(a, a) >= 0.0);
        }
        prop_assert_eq!(mesh.classify_pair(t, u), mesh.classify_pair(u, t));
        prop_assert!(mesh.classify_pair(t, u) != PairType::Separated);
    }

    #[test]
    fn difference_lists_sum_to_zero(t in 0usize..128, pick in 0usize..16, e in prop::array::uniform3(0.0..1.0f64)) {
        let mesh = square_mesh(2.0, 1.0, 2).unwrap();
        let t = t % mesh.n_triangles();
        let patch = mesh.patch(t);
        let pair = aligned_affine_maps(&mesh, t, patch[pick % patch.len()]).unwrap();
        for list in difference_lists(&pair, e) {
            let scale = list.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
            prop_assert!(list.iter().sum::<f64>().abs() <= 8.0 * f64::EPSILON * scale);
        }
    }

    #[test]
    fn prolongation_is_exact_for_linear_functions(level in 0usize..3, a in -2.0..2.0f64, b in -2.0..2.0f64) {
        let coarse = square_mesh(2.0, 1.0, level).unwrap();
        let fine = coarse.refine().unwrap();
        // Linear away from the boundary, where the coarse function is pinned to zero.
        let f = |p: Point2| a * p.x + b * p.y;
        let uc: Vec<f64> = coarse.vertices[..coarse.n_free].iter().map(|&p| f(p)).collect();
        let all = prolong(&fine, &coarse, &uc).unwrap();
        prop_assert_eq!(all.len(), fine.n_vertices());
        let uf = &all[..fine.n_free];
        for (k, &p) in fine.vertices[..fine.n_free].iter().enumerate() {
            if p.x.abs() < 0.5 && p.y.abs() < 0.5 && level > 0 {
                prop_assert!((uf[k] - f(p)).abs() <= 1e-12);
            }
        }
        let from_self = l2_diff(&fine, uf, &coarse, &uc).unwrap();
        prop_assert!(from_self <= 1e-12);
    }

    #[test]
    fn h2_far_field_matches_direct_assembly(leaf in 4usize..48, p in 6usize..10, geometric in any::<bool>()) {
        let mesh = square_mesh(2.0, 1.0, 3).unwrap();
        let kernel = Kernel::constant(0.6).unwrap();
        let cloud = QuadCloud::gather(&mesh, TriangleRule::symmetric(3).unwrap());
        let ck = CloudKernel::new(&cloud, &kernel).unwrap();
        let mode = if geometric { AdmMode::Geometric } else { AdmMode::Strict };
        let params = H2Params { p, leaf_size: leaf, lambda: 0.75, mode };
        let k = assemble_k(&mesh, &kernel, &cloud, &ck, &params, &LeafQuadrature::Cloud).unwrap();
        let dense = k_direct(&mesh, &cloud, &ck);
        let v: Vec<f64> = (0..mesh.n_free).map(|i| ((i * 7919) % 113) as f64 / 113.0 - 0.5).collect();
        let kv = k.matvec(&v).unwrap();
        let dv: Vec<f64> = dense.iter().map(|row| row.iter().zip(&v).map(|(a, b)| a * b).sum()).collect();
        let err: f64 = kv.iter().zip(&dv).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let norm: f64 = dv.iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assert!(err <= 1e-3 * norm, "relative error {}", err / norm);
    }
}
