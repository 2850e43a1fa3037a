use heckesign::arith::{divisors, gcd};
use heckesign::modforms::eigen::spectra_range;
use heckesign::modforms::{delta_form, dim_cusp_forms, eigenforms, EigenOptions, SignStatistics};
use proptest::prelude::*;
use std::sync::OnceLock;

fn forms_26() -> &'static Vec<heckesign::modforms::Eigenform> {
    static F: OnceLock<Vec<heckesign::modforms::Eigenform>> = OnceLock::new();
    F.get_or_init(|| {
        let mut all = Vec::new();
        for k in (12..=40).step_by(2) {
            all.extend(eigenforms(k, 600).unwrap());
        }
        all
    })
}

/// Ramanujan's τ(n) from Jacobi's `∏(1−qⁿ)³ = Σ (−1)^j (2j+1) q^{j(j+1)/2}`.
fn tau_oracle(n_max: usize) -> Vec<i128> {
    let mut cube = vec![0i128; n_max];
    let mut j = 0usize;
    while j * (j + 1) / 2 < n_max {
        let sign = if j % 2 == 0 { 1 } else { -1 };
        cube[j * (j + 1) / 2] = sign * (2 * j as i128 + 1);
        j += 1;
    }
    let mul = |a: &[i128], b: &[i128]| {
        let mut c = vec![0i128; n_max];
        for (i, x) in a.iter().enumerate().filter(|(_, x)| **x != 0) {
            for (j, y) in b.iter().enumerate().take(n_max - i) {
                c[i + j] += x * y;
            }
        }
        c
    };
    let p2 = mul(&cube, &cube);
    let p4 = mul(&p2, &p2);
    let p8 = mul(&p4, &p4);
    let mut tau = vec![0i128; n_max + 1];
    tau[1..].copy_from_slice(&p8);
    tau
}

#[test]
fn discriminant_matches_product_formula() {
    let tau = tau_oracle(200);
    let d = delta_form(200).unwrap();
    for (n, t) in tau.iter().enumerate() {
        assert_eq!(d.coeff(n).to_string(), t.to_string(), "n = {n}");
    }
}

#[test]
fn counts_match_dimensions() {
    let spectra = spectra_range(12, 60, &EigenOptions::with_n_max(50)).unwrap();
    for k in (12..=60).step_by(2) {
        let d = dim_cusp_forms(k).unwrap();
        let n = spectra.iter().find(|s| s.weight == k).map_or(0, |s| s.forms.len());
        assert_eq!(n, d, "k = {k}");
    }
}

#[test]
fn eigenvalues_are_distinct_and_sorted() {
    let forms = eigenforms(48, 30).unwrap();
    assert_eq!(forms.len(), 4);
    for w in forms.windows(2) {
        assert!(w[0].root_eigenvalue < w[1].root_eigenvalue);
        assert_eq!(w[0].index + 1, w[1].index);
    }
}

#[test]
fn signs_are_prime_powers_and_ordered() {
    for f in forms_26() {
        let s = SignStatistics::from_forms(f.weight_k, std::slice::from_ref(f), 600).unwrap();
        assert!(s.ordered());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn hecke_relation(
        i in 0usize..1000,
        (m, n) in (1u64..=600).prop_flat_map(|m| (Just(m), 1..=600 / m)),
    ) {
        let forms = forms_26();
        let f = &forms[i % forms.len()];
        let lhs = f.lambda_at(m).unwrap() * f.lambda_at(n).unwrap();
        let rhs: f64 = divisors(gcd(m, n))
            .into_iter()
            .map(|d| f.lambda_at(m * n / (d * d)).unwrap())
            .sum();
        prop_assert!((lhs - rhs).abs() < 1e-8);
    }

    #[test]
    fn deligne_bound(i in 0usize..1000, n in 1u64..=600) {
        let forms = forms_26();
        let f = &forms[i % forms.len()];
        let d = divisors(n).len() as f64;
        prop_assert!(f.lambda_at(n).unwrap().abs() <= d * (1.0 + 1e-6));
    }
}
