use mals::cases::ProblemCase;
use mals::fem::NodalField;
use mals::harness::fit_slope;
use mals::mesh::{read_mesh, write_mesh, MarkSet, TriMesh};
use mals::projection::{project_spd_det, Sym2};
use mals::recovery::ppr_gradient;
use proptest::prelude::*;

fn sym2() -> impl Strategy<Value = Sym2> {
    (-10.0..10.0f64, -10.0..10.0f64, -10.0..10.0f64)
        .prop_map(|(a, b, c)| Sym2::new(a, b, c))
        .prop_filter("trace and norm bounds", |h| h.trace() >= 0.5 && h.norm() <= 10.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn projection_hits_constraint(h in sym2(), f in 0.25..4.0f64) {
        let p = project_spd_det(&h, f).unwrap();
        prop_assert!((p.det() - f).abs() <= 1e-10 * f);
        prop_assert!(p.min_eigenvalue() > 0.0);
        let q = project_spd_det(&p, f).unwrap();
        prop_assert!(q.sub(&p).norm() <= 1e-12 * p.norm());
    }

    #[test]
    fn projection_commutes_with_rotation(h in sym2(), f in 0.25..4.0f64, angle in 0.0..std::f64::consts::TAU) {
        let a = project_spd_det(&h.rotated(angle), f).unwrap();
        let b = project_spd_det(&h, f).unwrap().rotated(angle);
        prop_assert!(a.sub(&b).norm() <= 1e-12 * b.norm());
    }

    #[test]
    fn projection_scales(h in sym2(), f in 0.25..4.0f64, s in 0.2..5.0f64) {
        let a = project_spd_det(&h.scale(s), s * s * f).unwrap();
        let b = project_spd_det(&h, f).unwrap().scale(s);
        prop_assert!(a.sub(&b).norm() <= 1e-11 * b.norm());
    }

    /// Nothing SPD with the right determinant is closer to `h`.
    #[test]
    fn projection_beats_feasible_points(h in sym2(), f in 0.25..4.0f64, l in 0.1..10.0f64, angle in 0.0..3.2f64) {
        let p = project_spd_det(&h, f).unwrap();
        let q = Sym2::new(l, 0.0, f / l).rotated(angle);
        prop_assert!(p.sub(&h).norm() <= q.sub(&h).norm() + 1e-9);
    }

    #[test]
    fn slope_of_power_law(p in -3.0..3.0f64, c in 0.01..100.0f64) {
        let pairs: Vec<(f64, f64)> = [0.2, 0.1, 0.05, 0.025].iter().map(|&h: &f64| (h, c * h.powf(p))).collect();
        prop_assert!((fit_slope(&pairs).unwrap() - p).abs() < 1e-10);
    }

    #[test]
    fn exact_cases_solve_the_equation(x in 0.0..1.0f64, y in 0.0..1.0f64, which in 0usize..5) {
        let case = match which {
            0 => ProblemCase::case1(),
            1 => ProblemCase::case2(),
            2 => ProblemCase::case3(2.0).unwrap(),
            3 => ProblemCase::case3(1.5).unwrap(),
            _ => ProblemCase::adapt1(),
        };
        let h = case.hessian([x, y]).unwrap();
        let f = case.f([x, y]);
        prop_assert!((h.det() - f).abs() <= 1e-10 * f.max(1.0));
        prop_assert!((case.laplacian([x, y]).unwrap() - h.trace()).abs() <= 1e-10 * h.trace().abs().max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn local_refinement_stays_conforming(n in 2usize..6, picks in prop::collection::vec(0usize..1000, 1..12)) {
        let mesh = TriMesh::structured_unit_square(n).unwrap();
        let marks = MarkSet { refine: picks.iter().map(|p| p % mesh.num_triangles()).collect(), ..MarkSet::default() };
        let fine = mesh.refine(&marks, None).unwrap();
        prop_assert!(fine.check_conformity().is_ok());
        prop_assert!((fine.total_area() - 1.0).abs() < 1e-12);
        prop_assert!(fine.num_triangles() > mesh.num_triangles());

        // Linear data transfers exactly both ways.
        let lin = |p: [f64; 2]| 0.3 + 1.7 * p[0] - 0.4 * p[1];
        let u: Vec<f64> = mesh.vertices().iter().map(|&p| lin(p)).collect();
        let v = mesh.transfer(&u, &fine).unwrap();
        for (p, val) in fine.vertices().iter().zip(&v) {
            prop_assert!((lin(*p) - val).abs() < 1e-12);
        }

        let all: MarkSet = MarkSet { coarsen: (0..fine.num_triangles()).collect(), ..MarkSet::default() };
        let back = fine.refine(&all, None).unwrap();
        prop_assert!(back.check_conformity().is_ok());
        prop_assert!(back.num_triangles() <= fine.num_triangles());
        prop_assert!((back.total_area() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mesh_dump_round_trips(n in 1usize..6, times in 0usize..3) {
        let mesh = TriMesh::structured_unit_square(n).unwrap().refine_uniform(times).unwrap();
        let back = read_mesh(&write_mesh(&mesh)).unwrap();
        prop_assert_eq!(back.vertices(), mesh.vertices());
        prop_assert_eq!(back.triangles(), mesh.triangles());
    }

    #[test]
    fn ppr_reproduces_quadratics(c in prop::array::uniform6(-2.0..2.0f64), n in 3usize..9) {
        let mesh = TriMesh::structured_unit_square(n).unwrap();
        let q = |p: [f64; 2]| c[0] + c[1] * p[0] + c[2] * p[1] + c[3] * p[0] * p[0] + c[4] * p[0] * p[1] + c[5] * p[1] * p[1];
        let g = ppr_gradient(&mesh, &NodalField::interpolate(&mesh, q)).unwrap();
        for v in 0..mesh.num_vertices() {
            let [x, y] = mesh.vertex(v);
            let e = [c[1] + 2.0 * c[3] * x + c[4] * y, c[2] + c[4] * x + 2.0 * c[5] * y];
            let gv = g.get(v);
            prop_assert!((gv[0] - e[0]).abs() < 1e-10 && (gv[1] - e[1]).abs() < 1e-10);
        }
    }
}

/// Empirical Lipschitz constant of the projection over the sampled set.
/// Only finiteness is asserted; the value is printed for the record.
#[test]
fn projection_lipschitz_estimate() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    let mut sample = || loop {
        let h = Sym2::new(rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0));
        if h.trace() >= 0.5 && h.norm() <= 10.0 {
            break h;
        }
    };
    let mut worst: f64 = 0.0;
    for _ in 0..2000 {
        let (a, b) = (sample(), sample());
        let f = 1.0;
        let d = a.sub(&b).norm();
        if d > 1e-3 {
            let pa = project_spd_det(&a, f).unwrap();
            let pb = project_spd_det(&b, f).unwrap();
            worst = worst.max(pa.sub(&pb).norm() / d);
        }
    }
    println!("empirical Lipschitz constant {worst:.3}");
    assert!(worst.is_finite());
}
