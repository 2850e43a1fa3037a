use std::f64::consts::PI;

use heckesign::cheb_minorant::{
    certify, l2_lower_bounds, minorant_coeffs, minorant_eval, verify_peak_decay, CertifyOptions,
};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn peak_is_one_and_global_max(l in 1u32..48, delta in 0.01f64..0.5) {
        let p = minorant_coeffs(l, delta).unwrap();
        prop_assert!((p.coeff_sum() - 1.0).abs() < 1e-12);
        for i in 0..400 {
            let t = i as f64 / 400.0;
            prop_assert!(p.eval(t).norm() <= 1.0 + 1e-10);
        }
    }

    #[test]
    fn tail_respects_bound(l in 1u32..48, delta in 0.01f64..0.5, t in 0.0f64..1.0) {
        let theta = delta + t * (1.0 - 2.0 * delta);
        let v = minorant_eval(l, delta, theta).unwrap().norm();
        prop_assert!(v <= 2.0 * (-PI * l as f64 * delta).exp() * (1.0 + 1e-12));
    }

    #[test]
    fn coefficient_and_closed_forms_agree(l in 1u32..40, delta in 0.02f64..0.5, t in 0.0f64..1.0) {
        let p = minorant_coeffs(l, delta).unwrap();
        prop_assert!((p.eval(t) - p.eval_closed(t)).norm() < 1e-11);
    }

    #[test]
    fn plain_l2_at_least_reciprocal_degree(l in 1u32..32, delta in 0.02f64..0.5) {
        let p = minorant_coeffs(l, delta).unwrap();
        let b = l2_lower_bounds(&p, 256).unwrap();
        prop_assert!(b.plain_ok);
        prop_assert!(b.weighted_l2 > 0.0);
        prop_assert!((b.plain_l2 - p.l2_from_coeffs()).abs() < 1e-9);
    }
}

#[test]
fn degree_one_is_cosine() {
    let p = minorant_coeffs(1, 0.3).unwrap();
    assert!((p.coeffs[0] - 0.5).abs() < 1e-15 && (p.coeffs[1] - 0.5).abs() < 1e-15);
    let r = verify_peak_decay(&p, 2000).unwrap();
    assert!((r.max_on_tail - (0.3 * PI).cos()).abs() < 1e-12);
}

#[test]
fn certification_fails_when_bound_is_shrunk() {
    let ok = certify(8, 0.1, CertifyOptions::default()).unwrap();
    assert!(ok.pass);
    let bad = certify(8, 0.1, CertifyOptions { bound_scale: 1e-3, ..CertifyOptions::default() }).unwrap();
    assert!(!bad.pass);
    assert_eq!(ok.max_on_tail, bad.max_on_tail);
}
