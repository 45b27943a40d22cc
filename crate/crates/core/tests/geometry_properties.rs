mod common;

use metric_constraints::chart::{embedding_jacobian, embedding_jacobian_fd};
use metric_constraints::geometry::{fubini_study_distance, nijenhuis_residual, type_decompose};
use metric_constraints::linalg::max_abs;
use metric_constraints::{embed, geometry_at, StateVector};
use num_complex::Complex64;
use proptest::prelude::*;

fn check_compatibility(x: &metric_constraints::ChartPoint) -> Result<(), TestCaseError> {
    let geom = geometry_at(x).unwrap();
    let c = geom.compatibility();
    // Entries scale like 1/p; compare relative to the metric's size.
    let scale = max_abs(&geom.g).max(max_abs(&geom.g_inv)).max(1.0);
    prop_assert!(c.j_squared < 1e-10 * scale, "{c:?}");
    prop_assert!(c.hermitian_metric < 1e-10 * scale * scale, "{c:?}");
    prop_assert!(c.kahler_form < 1e-10 * scale, "{c:?}");
    prop_assert!(c.form_inverse < 1e-10 * scale, "{c:?}");
    prop_assert!(c.canonical_form < 1e-10, "{c:?}");
    prop_assert!(c.form_antisymmetry == 0.0);
    prop_assert!(c.symplectic_inverse < 1e-12);
    Ok(())
}

proptest! {
    #[test]
    fn kahler_compatibility_two_levels(x in common::interior_point(2)) {
        check_compatibility(&x)?;
    }

    #[test]
    fn kahler_compatibility_three_levels(x in common::interior_point(3)) {
        check_compatibility(&x)?;
    }

    #[test]
    fn kahler_compatibility_four_levels(x in common::interior_point(4)) {
        check_compatibility(&x)?;
    }

    #[test]
    fn complex_structure_is_integrable(x in common::interior_point(3)) {
        prop_assert!(nijenhuis_residual(&x, 1e-5).unwrap() < 1e-4);
    }

    #[test]
    fn metric_is_positive_definite(x in common::interior_point(4)) {
        let geom = geometry_at(&x).unwrap();
        let eig = geom.g.clone().symmetric_eigen();
        prop_assert!(eig.eigenvalues.iter().all(|e| *e > 0.0));
    }

    #[test]
    fn embedding_jacobian_agrees_with_differences(x in common::interior_point(4)) {
        let exact = embedding_jacobian(&x);
        let fd = embedding_jacobian_fd(&x, 1e-7).unwrap();
        for (e, f) in exact.iter().zip(&fd) {
            prop_assert!((e - f).iter().all(|d| d.norm() < 1e-5));
        }
    }

    #[test]
    fn distance_ignores_phase_and_scale(
        x in common::interior_point(3),
        y in common::interior_point(3),
        re in 0.1f64..3.0,
        im in -3.0f64..3.0,
    ) {
        let a = embed(&x);
        let b = embed(&y);
        let scaled = StateVector::new(b.amplitudes() * Complex64::new(re, im)).unwrap();
        let d1 = fubini_study_distance(&a, &b).unwrap();
        let d2 = fubini_study_distance(&a, &scaled).unwrap();
        prop_assert!((d1 - d2).abs() < 1e-7);
        prop_assert!(fubini_study_distance(&a, &a).unwrap() < 1e-7);
    }

    #[test]
    fn type_parts_are_eigenvectors_of_j(x in common::interior_point(3), seed in 0u64..1000) {
        let geom = geometry_at(&x).unwrap();
        let v = metric_constraints::linalg::RealVector::from_fn(geom.dim(), |k, _| ((seed + k as u64) as f64).sin());
        let (plus, minus) = type_decompose(&v, &geom).unwrap();
        let jt = metric_constraints::linalg::complexify(&geom.j.transpose());
        let i = Complex64::new(0.0, 1.0);
        // J^T v+ = i v+ and J^T v- = -i v-.
        prop_assert!((&jt * &plus - &plus * i).camax() < 1e-9 * (1.0 + max_abs(&geom.j)));
        prop_assert!((&jt * &minus + &minus * i).camax() < 1e-9 * (1.0 + max_abs(&geom.j)));
        let sum = &plus + &minus;
        prop_assert!(sum.iter().zip(v.iter()).all(|(s, r)| (s.re - r).abs() < 1e-12 && s.im.abs() < 1e-12));
    }
}
