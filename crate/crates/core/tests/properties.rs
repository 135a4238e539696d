use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

use xq_bergman::bergman::{BergmanSpace, SpaceKind};
use xq_bergman::curve::{horner, poly_mul, PlaneCurve};
use xq_bergman::diagnostics::{discrepancy, CellMeasure, MassGauge, TestFamily};
use xq_bergman::quadrature::{QuadratureGrid, QuadratureParams};
use xq_bergman::roots::polynomial_roots;
use xq_bergman::weights::Weight;
use xq_bergman::zeros::divisor_of_poly;

fn complex() -> impl Strategy<Value = Complex64> {
    (-2.0..2.0f64, -2.0..2.0f64).prop_map(|(a, b)| Complex64::new(a, b))
}

fn grid() -> QuadratureGrid {
    QuadratureGrid::new(QuadratureParams::default()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn divisor_mass_is_pd(d in 2usize..6, p in 1usize..5, extra in 0usize..10, coeffs in prop::collection::vec(complex(), 40)) {
        // any section of the regular-part space: degree <= dp + d - 2
        let top = (d * p + d - 2).min(d * p + extra);
        let poly: Vec<Complex64> = coeffs[..=top.min(39)].to_vec();
        prop_assume!(poly.iter().any(|c| c.norm() > 1e-3));
        let dv = divisor_of_poly(&poly, p, d).unwrap();
        prop_assert_eq!(dv.total_mass, (p * d) as i64);
        prop_assert!(dv.atom_at_x1 >= -((d - 2) as i64));
    }

    #[test]
    fn roots_recovered(roots in prop::collection::vec(complex(), 1..12)) {
        // keep roots separated so that clustering cannot merge them
        for i in 0..roots.len() {
            for j in 0..i {
                prop_assume!((roots[i] - roots[j]).norm() > 1e-2);
            }
        }
        let mut c = vec![Complex64::new(1.0, 0.0)];
        for r in &roots {
            c = poly_mul(&c, &[-r, Complex64::new(1.0, 0.0)]);
        }
        let found = polynomial_roots(&c).unwrap();
        prop_assert_eq!(found.iter().map(|f| f.multiplicity).sum::<usize>(), roots.len());
        for r in &roots {
            prop_assert!(found.iter().any(|f| (f.value - r).norm() < 1e-6), "{} not found", r);
        }
        let scale = c.iter().map(|x| x.norm()).fold(0.0, f64::max);
        for f in &found {
            prop_assert!(horner(&c, f.value).norm() <= 1e-8 * scale * f.value.norm().max(1.0).powi(roots.len() as i32));
        }
    }

    #[test]
    fn normalization_lands_on_curve(coeffs in prop::collection::vec(complex(), 4), t in complex()) {
        let mut c = coeffs.clone();
        c[0] = Complex64::new(1.0, 0.0);
        let curve = PlaneCurve::new(c, 3).unwrap();
        prop_assume!(t.norm() > 1e-3);
        let x = curve.normalize_point(Complex64::new(1.0, 0.0), t).unwrap();
        prop_assert!(curve.defining_residual(&x).norm() < 1e-12);
    }

    #[test]
    fn discrepancy_is_a_gauge(pts in prop::collection::vec((complex(), complex(), complex()), 1..20)) {
        let f = TestFamily::standard();
        let mut a = CellMeasure::empty(&f);
        let mut b = CellMeasure::empty(&f);
        let mut c = CellMeasure::empty(&f);
        for &(x, y, z) in &pts {
            a.add_point(x, 1.0);
            b.add_point(y, 1.0);
            c.add_point(z, 1.0);
        }
        let ab = discrepancy(&a, &b, &f).unwrap();
        prop_assert_eq!(ab, discrepancy(&b, &a, &f).unwrap());
        prop_assert_eq!(discrepancy(&a, &a, &f).unwrap(), 0.0);
        let ac = discrepancy(&a, &c, &f).unwrap();
        let cb = discrepancy(&c, &b, &f).unwrap();
        prop_assert!(ab <= ac + cb + 1e-12);
        prop_assert!((a.total_mass() - pts.len() as f64).abs() < 1e-12);
    }

    #[test]
    fn fs_density_is_radial_for_monomials(d in 2usize..6, r in 0.01f64..50.0, t in 0.0f64..6.3) {
        let c = PlaneCurve::monomial(d).unwrap();
        let a = c.fs_pullback_density(Complex64::new(r, 0.0));
        let b = c.fs_pullback_density(Complex64::from_polar(r, t));
        prop_assert!(a > 0.0);
        prop_assert!((a - b).abs() <= 1e-14 * a);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn kernel_radial_for_monomial_curve(d in 2usize..5, p in 1usize..5, r in 0.05f64..4.0, t in 0.0f64..6.3) {
        let c = PlaneCurve::monomial(d).unwrap();
        let w = Weight::fubini_study(&c);
        for kind in SpaceKind::ALL {
            let s = BergmanSpace::build(kind, &c, &w, p, &grid()).unwrap();
            let a = s.kernel_at(Complex64::new(r, 0.0)).unwrap();
            let b = s.kernel_at(Complex64::from_polar(r, t)).unwrap();
            prop_assert!((a - b).abs() <= 1e-10 * a);
        }
    }

    #[test]
    fn kernel_and_fs_measure_basis_independent(
        phases in prop::collection::vec(0.0f64..6.3, 8),
        mix in 0.0f64..1.5,
        z in complex(),
    ) {
        let c = PlaneCurve::from_real_affine(&[0.3, 0.5, 0.0, 1.0]).unwrap();
        let w = Weight::fubini_study(&c);
        let s = BergmanSpace::build(SpaceKind::WeaklyHolomorphic, &c, &w, 2, &grid()).unwrap();
        let n = s.dim();
        // unitary: diagonal phases times a Givens rotation in the (0, 1) plane
        let mut u = DMatrix::<Complex64>::zeros(n, n);
        for i in 0..n {
            u[(i, i)] = Complex64::from_polar(1.0, phases[i % phases.len()]);
        }
        let (co, si) = (mix.cos(), mix.sin());
        let g = DMatrix::from_fn(n, n, |i, j| match (i, j) {
            (0, 0) | (1, 1) => Complex64::new(co, 0.0),
            (0, 1) => Complex64::new(-si, 0.0),
            (1, 0) => Complex64::new(si, 0.0),
            (i, j) if i == j => Complex64::new(1.0, 0.0),
            _ => Complex64::new(0.0, 0.0),
        });
        let rotated = BergmanSpace::from_orthonormal_basis(
            SpaceKind::WeaklyHolomorphic, &c, &w, 2, s.basis_poly().unwrap() * (u * g),
        );
        let a = s.kernel_at(z).unwrap();
        let b = rotated.kernel_at(z).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * a);
        let gs = s.fs_measure(&grid()).unwrap();
        let gr = rotated.fs_measure(&grid()).unwrap();
        let (da, db) = (gs.density_at(z), gr.density_at(z));
        prop_assert!((da - db).abs() <= 1e-6 * da.abs().max(1e-3));
    }
}
