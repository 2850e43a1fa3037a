use heckesign::cheb_minorant::minorant_coeffs;
use heckesign::sato_tate::{
    a_coeffs_quadrature, cheb_x, expansion_dump, g_eval, gram_defect, ChebyshevExpansion,
    SatoTateMeasure,
};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn both_routes_give_the_same_coefficients(l in 1u32..24, delta in 0.02f64..0.5) {
        let p = minorant_coeffs(l, delta).unwrap();
        let e = ChebyshevExpansion::from_poly(&p).unwrap();
        prop_assert!(e.check_invariants());
        for ell in 0..=l {
            let q = a_coeffs_quadrature(&p, ell).unwrap();
            prop_assert!((q - e.sato_tate_a[ell as usize]).abs() < 1e-9);
        }
        prop_assert!(a_coeffs_quadrature(&p, l + 1).unwrap().abs() < 1e-10);
    }

    #[test]
    fn expansion_reconstructs_g(l in 1u32..24, delta in 0.02f64..0.5, t in 0.0f64..std::f64::consts::PI) {
        let p = minorant_coeffs(l, delta).unwrap();
        let e = ChebyshevExpansion::from_poly(&p).unwrap();
        let g = g_eval(&p, t);
        prop_assert!(g >= -1e-15 && g <= 1.0 + 1e-12);
        prop_assert!((e.eval_chebyshev(t) - g).abs() < 1e-10);
        prop_assert!((e.eval_fourier(t) - g).abs() < 1e-10);
    }

    #[test]
    fn chebyshev_functions_satisfy_hecke_recurrence(n in 1u32..40, t in 0.01f64..3.13) {
        let lhs = 2.0 * t.cos() * cheb_x(n, t);
        let rhs = cheb_x(n + 1, t) + cheb_x(n - 1, t);
        prop_assert!((lhs - rhs).abs() < 1e-9 * (1.0 + lhs.abs()));
    }
}

#[test]
fn a0_is_the_sato_tate_mean_of_g() {
    let p = minorant_coeffs(6, 0.1).unwrap();
    let e = ChebyshevExpansion::from_poly(&p).unwrap();
    let mean = SatoTateMeasure.integrate(|t| g_eval(&p, t), 64).unwrap();
    assert!((mean - e.a0()).abs() < 1e-12);
}

#[test]
fn gram_matrix_is_identity() {
    assert!(gram_defect(13).unwrap() < 1e-9);
}

#[test]
fn dump_carries_consistent_checks() {
    let d = expansion_dump(&minorant_coeffs(8, 0.05).unwrap()).unwrap();
    assert_eq!(d.a.len(), 9);
    assert_eq!(d.a_quadrature.len(), 14);
    assert!(d.checks.two_route_defect < 1e-9);
    assert!(d.checks.tail_max < 1e-10);
}
