//! First sign changes of Hecke eigenvalues: the least `n` and the least prime
//! `p` with `λ_f(n) < 0`.

use serde::{Deserialize, Serialize};

use super::eigen::Eigenform;
use crate::arith::{is_prime, prime_power};
use crate::error::{Error, Result};

/// Values within this distance of zero have no trusted sign.
pub const SIGN_TOLERANCE: f64 = 1e-9;

/// `n_f` and `p_f` for one form; `None` means no negative value up to `n_max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeastNegative {
    pub n_f: Option<u64>,
    pub p_f: Option<u64>,
    /// Some value in `[−tol, tol]` came before the first clear negative.
    pub ambiguous: bool,
}

pub fn least_negative(f: &Eigenform, n_max: u64) -> Result<LeastNegative> {
    if n_max > f.n_max {
        return Err(Error::InvalidArgument(format!(
            "eigenvalues are stored up to {}, asked for {n_max}",
            f.n_max
        )));
    }
    let table = f.table();
    let mut ambiguous = false;
    let mut n_f = None;
    for (n, &v) in table.iter().enumerate().take(n_max as usize + 1).skip(1) {
        if v < -SIGN_TOLERANCE {
            n_f = Some(n as u64);
            break;
        }
        if v.abs() <= SIGN_TOLERANCE {
            ambiguous = true;
        }
    }
    let mut p_f = None;
    for (n, &v) in table.iter().enumerate().take(n_max as usize + 1).skip(2) {
        if !is_prime(n as u64) {
            continue;
        }
        if v < -SIGN_TOLERANCE {
            p_f = Some(n as u64);
            break;
        }
        if v.abs() <= SIGN_TOLERANCE {
            ambiguous = true;
        }
    }
    if let Some(n) = n_f {
        if prime_power(n).is_none() {
            return Err(Error::Arithmetic(format!(
                "weight {} form {}: first negative eigenvalue at {n}, which is not a prime power",
                f.weight_k, f.index
            )));
        }
    }
    Ok(LeastNegative { n_f, p_f, ambiguous })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormSigns {
    pub form_index: usize,
    #[serde(flatten)]
    pub signs: LeastNegative,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignStatistics {
    pub weight_k: u32,
    pub records: Vec<FormSigns>,
}

impl SignStatistics {
    pub fn from_forms(weight_k: u32, forms: &[Eigenform], n_max: u64) -> Result<Self> {
        let records = forms
            .iter()
            .map(|f| {
                Ok(FormSigns {
                    form_index: f.index,
                    signs: least_negative(f, n_max)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { weight_k, records })
    }

    /// Largest `n_f` over the forms, `None` if some form has no negative value in range.
    pub fn max_n_f(&self) -> Option<u64> {
        self.records
            .iter()
            .map(|r| r.signs.n_f)
            .collect::<Option<Vec<_>>>()?
            .into_iter()
            .max()
    }

    /// Every found `n_f` is at most the corresponding `p_f`.
    pub fn ordered(&self) -> bool {
        self.records.iter().all(|r| match (r.signs.n_f, r.signs.p_f) {
            (Some(n), Some(p)) => n <= p,
            (None, Some(_)) => false,
            _ => true,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modforms::eigen::eigenforms;
    use std::collections::BTreeMap;

    fn synthetic(values: &[(u64, f64)], n_max: u64) -> Eigenform {
        let lambda: BTreeMap<u64, f64> = values.iter().copied().collect();
        Eigenform {
            weight_k: 12,
            index: 1,
            n_max,
            hecke_prime: 2,
            direct: lambda.clone(),
            lambda,
            eigen_residual: 0.0,
            precision_bits: 64,
            endpoint_spread: 0.0,
            root_eigenvalue: 0.0,
        }
    }

    #[test]
    fn discriminant_changes_sign_at_two() {
        let f = &eigenforms(12, 30).unwrap()[0];
        let r = least_negative(f, 30).unwrap();
        assert_eq!(r, LeastNegative { n_f: Some(2), p_f: Some(2), ambiguous: false });
    }

    #[test]
    fn prime_square_can_precede_first_negative_prime() {
        // λ(2) = 0.5 so λ(4) = −0.75 < 0, while λ(3) > 0 and λ(5) < 0
        let f = synthetic(
            &[(2, 0.5), (4, -0.75), (3, 1.0), (5, -0.2), (7, 0.3), (8, -0.875), (9, 0.0)],
            9,
        );
        let r = least_negative(&f, 9).unwrap();
        assert_eq!(r.n_f, Some(4));
        assert_eq!(r.p_f, Some(5));
        assert!(!r.ambiguous);
    }

    #[test]
    fn near_zero_values_are_flagged_and_sentinel_returned() {
        let f = synthetic(&[(2, 1e-12), (4, 0.5), (3, 0.5), (5, 0.5)], 5);
        let r = least_negative(&f, 5).unwrap();
        assert_eq!(r.n_f, None);
        assert_eq!(r.p_f, None);
        assert!(r.ambiguous);
    }

    #[test]
    fn statistics_over_weight_24() {
        let forms = eigenforms(24, 100).unwrap();
        let s = SignStatistics::from_forms(24, &forms, 100).unwrap();
        assert_eq!(s.records.len(), 2);
        assert!(s.ordered());
        assert!(s.max_n_f().unwrap() <= 100);
    }
}
