//! The detector `G(f) = Π_{p≤z} g(θ_f(p)) − ε Σ_{q≤z} Π_{p≤z, p≠q} g(θ_f(p))`,
//! the set `A` of forms whose angles at all `p ≤ z` lie in `[0, 2πδ)`, and the
//! checks that tie them to the Chebyshev expansion of `g`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::arith::primes_up_to;
use crate::cheb_minorant::{minorant_coeffs, MinorantPolynomial};
use crate::error::{Error, Result};
use crate::modforms::eigen::theta_angle;
use crate::modforms::Eigenform;
use crate::petersson::HarmonicWeights;
use crate::sato_tate::{cheb_x, g_eval, ChebyshevExpansion};

/// Largest number of index tuples the brute-force expansion will enumerate.
pub const EXPANSION_BUDGET: u128 = 1_000_000;
/// Slack on `G ≤ 1` and on `G ≤ 0` outside `A`.
pub const DETECTOR_SLACK: f64 = 1e-9;
/// Floors of coupled quantities tolerate this much rounding below an integer.
const FLOOR_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ParamSource {
    Coupled { k: f64 },
    Manual,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorParams {
    pub delta: f64,
    #[serde(rename = "L")]
    pub degree: u32,
    pub epsilon: f64,
    pub z: f64,
    pub primes: Vec<u64>,
    #[serde(rename = "J")]
    pub j: usize,
    pub source: ParamSource,
}

/// `ε = 4 e^{−2πLδ}`, the square of the peak polynomial's tail bound.
pub fn coupled_epsilon(degree: u32, delta: f64) -> f64 {
    4.0 * (-2.0 * PI * degree as f64 * delta).exp()
}

impl DetectorParams {
    /// The coupling `δ = 1/(16 log log k)`, `L = ⌊4 (log log k)²⌋`,
    /// `z = log k / (2 (log log k)²)` (at least 2), `ε = 4e^{−2πLδ}`.
    pub fn coupled(k: f64) -> Result<Self> {
        if !(k >= 16.0) {
            return Err(Error::InvalidArgument(format!(
                "the coupling needs log log k > 1, i.e. k ≥ 16; got k = {k}"
            )));
        }
        let ll = k.ln().ln();
        let delta = 1.0 / (16.0 * ll);
        let degree = (4.0 * ll * ll + FLOOR_SLACK).floor() as u32;
        let z = (k.ln() / (2.0 * ll * ll)).max(2.0);
        let primes = primes_up_to((z + FLOOR_SLACK).floor() as u64);
        Ok(Self {
            delta,
            degree,
            epsilon: coupled_epsilon(degree, delta),
            z,
            j: primes.len(),
            primes,
            source: ParamSource::Coupled { k },
        })
    }

    /// Explicit parameters; `ε` is stored as given.
    pub fn manual(delta: f64, degree: u32, epsilon: f64, z: f64) -> Result<Self> {
        if !(delta > 0.0 && delta <= 0.5) {
            return Err(Error::InvalidArgument(format!("δ must lie in (0, 1/2], got {delta}")));
        }
        if degree == 0 {
            return Err(Error::InvalidArgument("L must be positive".into()));
        }
        if !(epsilon >= 0.0) {
            return Err(Error::InvalidArgument(format!("ε must be non-negative, got {epsilon}")));
        }
        if !(z >= 2.0) {
            return Err(Error::InvalidArgument(format!("z must be at least 2, got {z}")));
        }
        let primes = primes_up_to(z.floor() as u64);
        Ok(Self {
            delta,
            degree,
            epsilon,
            z,
            j: primes.len(),
            primes,
            source: ParamSource::Manual,
        })
    }

    /// Manual `δ, L, z` with the coupled `ε`.
    pub fn manual_coupled_epsilon(delta: f64, degree: u32, z: f64) -> Result<Self> {
        Self::manual(delta, degree, coupled_epsilon(degree, delta), z)
    }
}

/// Coupled parameters for an even weight `k ≥ 16`.
pub fn params_from_weight(k: u32) -> Result<DetectorParams> {
    if k < 16 {
        return Err(Error::InvalidArgument(format!(
            "weight {k} is below 16, where log log k ≤ 1 and the coupling degenerates"
        )));
    }
    DetectorParams::coupled(k as f64)
}

/// Parameters together with the peak polynomial and its Chebyshev expansion.
#[derive(Debug, Clone)]
pub struct Detector {
    pub params: DetectorParams,
    pub poly: MinorantPolynomial,
    pub expansion: ChebyshevExpansion,
}

impl Detector {
    pub fn new(params: DetectorParams) -> Result<Self> {
        let poly = minorant_coeffs(params.degree, params.delta)?;
        let expansion = ChebyshevExpansion::from_poly(&poly)?;
        Ok(Self {
            params,
            poly,
            expansion,
        })
    }

    pub fn g(&self, theta: f64) -> f64 {
        g_eval(&self.poly, theta)
    }

    pub fn a_coeffs(&self) -> &[f64] {
        &self.expansion.sato_tate_a
    }

    pub fn angles(&self, f: &Eigenform) -> Result<Vec<f64>> {
        self.params.primes.iter().map(|&p| theta_angle(f, p)).collect()
    }
}

/// `Π g_p − ε Σ_q Π_{p≠q} g_p`.
fn combine(values: &[f64], epsilon: f64) -> f64 {
    let all: f64 = values.iter().product();
    let leave_one_out: f64 = (0..values.len())
        .map(|q| {
            values
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != q)
                .map(|(_, v)| v)
                .product::<f64>()
        })
        .sum();
    all - epsilon * leave_one_out
}

pub fn detector_g(f: &Eigenform, det: &Detector) -> Result<f64> {
    let g: Vec<f64> = det.angles(f)?.into_iter().map(|t| det.g(t)).collect();
    Ok(combine(&g, det.params.epsilon))
}

/// Every angle `θ_f(p)`, `p ≤ z`, lies in `[0, 2πδ)`.
pub fn in_set_a(f: &Eigenform, params: &DetectorParams) -> Result<bool> {
    let bound = 2.0 * PI * params.delta;
    for &p in &params.primes {
        if theta_angle(f, p)? >= bound {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpansionCheck {
    /// `G` from the multilinear expansion in the `λ_f(Π p_j^{ℓ_j})`.
    pub expansion: f64,
    /// `G` with `g(θ) = Σ a_ℓ X_ℓ(θ)` evaluated at the angles.
    pub direct: f64,
    pub defect: f64,
    pub tuples: u128,
}

/// Recomputes `G(f)` as `Σ_ℓ Π_j a_{ℓ_j} λ_f(Π_j p_j^{ℓ_j})` minus `ε` times the
/// `J` leave-one-out sums, with `λ_f` at composite arguments formed from the
/// directly computed prime-power values.
pub fn expansion_identity_check(
    f: &Eigenform,
    params: &DetectorParams,
    a: &[f64],
) -> Result<ExpansionCheck> {
    let j = params.primes.len() as u32;
    let base = a.len() as u128;
    let tuples = base.checked_pow(j).unwrap_or(u128::MAX);
    if tuples > EXPANSION_BUDGET {
        return Err(Error::BudgetExceeded {
            needed: tuples,
            budget: EXPANSION_BUDGET,
        });
    }
    // λ_f(p^ℓ) for each prime and 0 ≤ ℓ < a.len()
    let mut table: Vec<Vec<f64>> = Vec::with_capacity(j as usize);
    for &p in &params.primes {
        let mut row = vec![1.0];
        let mut q = 1u64;
        for _ in 1..a.len() {
            q = q.checked_mul(p).ok_or(Error::MissingEigenvalue(u64::MAX))?;
            row.push(*f.direct.get(&q).ok_or(Error::MissingEigenvalue(q))?);
        }
        table.push(row);
    }
    // Σ over tuples of Π a_{ℓ_i} λ(p_i^{ℓ_i}); `skip` drops one prime
    let sum_over = |skip: Option<usize>| -> f64 {
        let active: Vec<usize> = (0..table.len()).filter(|i| Some(*i) != skip).collect();
        let mut idx = vec![0usize; active.len()];
        let mut total = 0.0;
        loop {
            let mut term = 1.0;
            for (slot, &prime) in active.iter().enumerate() {
                term *= a[idx[slot]] * table[prime][idx[slot]];
            }
            total += term;
            let mut pos = 0;
            loop {
                if pos == idx.len() {
                    return total;
                }
                idx[pos] += 1;
                if idx[pos] < a.len() {
                    break;
                }
                idx[pos] = 0;
                pos += 1;
            }
        }
    };
    let main = sum_over(None);
    let penalty: f64 = (0..table.len()).map(|q| sum_over(Some(q))).sum();
    let expansion = main - params.epsilon * penalty;

    let g_a = |theta: f64| -> f64 {
        a.iter()
            .enumerate()
            .map(|(l, c)| c * cheb_x(l as u32, theta))
            .sum()
    };
    let values = params
        .primes
        .iter()
        .map(|&p| theta_angle(f, p).map(g_a))
        .collect::<Result<Vec<_>>>()?;
    let direct = combine(&values, params.epsilon);
    Ok(ExpansionCheck {
        expansion,
        direct,
        defect: (expansion - direct).abs(),
        tuples,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignPropagation {
    pub holds: bool,
    /// Smallest `sin((m+1)θ)/sin θ` over the grid.
    pub min_margin: f64,
    /// Failing `(θ, m)` with the largest `θ`, then the largest `m`.
    pub witness: Option<(f64, u32)>,
    pub m_max: u32,
    /// `4πδ (log z/log 2 + 1)`, to be compared with `π/4`.
    pub constraint: f64,
    pub constraint_ok: bool,
}

/// Grid points per unit of `(m+1)`-scaled angle range.
pub const SIGN_GRID: usize = 20_000;

/// `sin((m+1)θ)/sin θ > 0` for `θ ∈ (0, 2πδ)` and `0 ≤ m ≤ m_max`.
pub fn sign_propagation_m(delta: f64, m_max: u32) -> SignPropagation {
    let top = 2.0 * PI * delta;
    let mut min_margin = f64::INFINITY;
    let mut witness = None;
    for m in 0..=m_max {
        for i in 1..=SIGN_GRID {
            // open interval: the last point sits just inside 2πδ
            let theta = if i == SIGN_GRID {
                top * (1.0 - 1e-12)
            } else {
                top * i as f64 / SIGN_GRID as f64
            };
            let v = cheb_x(m, theta);
            if v < min_margin {
                min_margin = v;
            }
            if v <= 0.0 {
                let better = match witness {
                    None => true,
                    Some((t, _)) => theta >= t,
                };
                if better {
                    witness = Some((theta, m));
                }
            }
        }
    }
    SignPropagation {
        holds: witness.is_none(),
        min_margin,
        witness,
        m_max,
        constraint: f64::NAN,
        constraint_ok: false,
    }
}

/// Sign propagation for every prime power `p^m ≤ z`, i.e. `m ≤ log z / log 2`.
pub fn sign_propagation_check(delta: f64, z: f64) -> SignPropagation {
    let m_max = ((z.ln() / 2f64.ln()) + FLOOR_SLACK).floor().max(0.0) as u32;
    let mut out = sign_propagation_m(delta, m_max);
    out.constraint = 4.0 * PI * delta * (z.ln() / 2f64.ln() + 1.0);
    out.constraint_ok = out.constraint <= PI / 4.0 + 1e-12;
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedReport {
    pub k: u32,
    pub params: DetectorParams,
    pub form_index: Vec<usize>,
    #[serde(rename = "G_values")]
    pub g_values: Vec<f64>,
    #[serde(rename = "in_A")]
    pub in_a: Vec<bool>,
    #[serde(rename = "weighted_G")]
    pub weighted_g: f64,
    /// `Σ_f w_f 1_A(f)`.
    #[serde(rename = "weighted_A")]
    pub weighted_a: f64,
    #[serde(rename = "a0_pow_J")]
    pub a0_pow_j: f64,
    /// `weighted_G / a0_pow_J`.
    pub ratio: f64,
    #[serde(rename = "count_A")]
    pub count_a: usize,
    /// `|H_k| exp(−5 log k log₃ k/(log₂ k)³)`, when `log₃ k > 0`.
    pub asymptotic_bound: Option<f64>,
    /// `1_A(f) ≥ G(f)` for every form.
    pub indicator_dominates: bool,
    /// Desk-scale numbers only; the asymptotic regime is far out of reach.
    pub descriptive: bool,
}

/// `|H_k| · exp(−5 log k · log log log k / (log log k)³)` where `log log log k > 0`.
pub fn asymptotic_bound(k: u32, forms: usize) -> Option<f64> {
    let l1 = (k as f64).ln();
    let l2 = l1.ln();
    if l2 <= 1.0 {
        return None;
    }
    let l3 = l2.ln();
    Some(forms as f64 * (-5.0 * l1 * l3 / l2.powi(3)).exp())
}

pub fn weighted_average_report(
    k: u32,
    forms: &[Eigenform],
    weights: &HarmonicWeights,
    det: &Detector,
) -> Result<WeightedReport> {
    let mut g_values = Vec::with_capacity(forms.len());
    let mut in_a = Vec::with_capacity(forms.len());
    let mut weighted_g = 0.0;
    let mut weighted_a = 0.0;
    for f in forms {
        let g = detector_g(f, det)?;
        let a = in_set_a(f, &det.params)?;
        let w = weights.get(f.index).ok_or_else(|| {
            Error::InvalidArgument(format!("no weight for form {} of weight {k}", f.index))
        })?;
        weighted_g += w * g;
        if a {
            weighted_a += w;
        }
        g_values.push(g);
        in_a.push(a);
    }
    let a0_pow_j = det.expansion.a0().powi(det.params.j as i32);
    let indicator_dominates = g_values
        .iter()
        .zip(&in_a)
        .all(|(g, a)| f64::from(u8::from(*a)) >= *g - DETECTOR_SLACK);
    Ok(WeightedReport {
        k,
        params: det.params.clone(),
        form_index: forms.iter().map(|f| f.index).collect(),
        count_a: in_a.iter().filter(|a| **a).count(),
        g_values,
        in_a,
        weighted_g,
        weighted_a,
        a0_pow_j,
        ratio: weighted_g / a0_pow_j,
        asymptotic_bound: asymptotic_bound(k, forms.len()),
        indicator_dominates,
        descriptive: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modforms::eigenforms;
    use std::collections::BTreeMap;

    fn with_angles(angles: &[(u64, f64)]) -> Eigenform {
        let direct: BTreeMap<u64, f64> = angles.iter().map(|&(p, t)| (p, 2.0 * t.cos())).collect();
        Eigenform {
            weight_k: 12,
            index: 1,
            n_max: 10,
            hecke_prime: 2,
            lambda: direct.clone(),
            direct,
            eigen_residual: 0.0,
            precision_bits: 64,
            endpoint_spread: 0.0,
            root_eigenvalue: 0.0,
        }
    }

    #[test]
    fn coupling_at_log_log_two() {
        let k = 2f64.exp().exp();
        let p = DetectorParams::coupled(k).unwrap();
        assert!((p.delta - 1.0 / 32.0).abs() < 1e-12);
        assert_eq!(p.degree, 16);
        assert!((p.epsilon - 4.0 * (-PI).exp()).abs() < 1e-12);
        assert_eq!(p.z, 2.0);
        // ε/4 is the square of the tail bound e^{−πLδ}
        assert!((p.epsilon / 4.0 - (-PI * 16.0 / 32.0).exp().powi(2)).abs() < 1e-15);
    }

    #[test]
    fn coupling_at_sixteen_clamps_z() {
        let p = params_from_weight(16).unwrap();
        assert_eq!(p.z, 2.0);
        assert_eq!(p.j, 1);
        assert_eq!(p.primes, vec![2]);
        assert!(params_from_weight(12).is_err());
    }

    #[test]
    fn detector_at_zero_angles() {
        let params = DetectorParams::manual(0.1, 4, 0.01, 5.0).unwrap();
        let det = Detector::new(params).unwrap();
        let f = with_angles(&[(2, 0.0), (3, 0.0), (5, 0.0)]);
        let g = detector_g(&f, &det).unwrap();
        assert!((g - (1.0 - 0.01 * 3.0)).abs() < 1e-12);
        assert!(in_set_a(&f, &det.params).unwrap());
    }

    #[test]
    fn single_prime_degree_one_closed_form() {
        let params = DetectorParams::manual(0.25, 1, 0.05, 2.0).unwrap();
        let det = Detector::new(params).unwrap();
        let f = with_angles(&[(2, PI / 2.0)]);
        let g = detector_g(&f, &det).unwrap();
        assert!((g - (0.5 - 0.05)).abs() < 1e-12);
    }

    #[test]
    fn boundary_angle_is_outside_a() {
        let params = DetectorParams::manual_coupled_epsilon(0.1, 4, 3.0).unwrap();
        let f = with_angles(&[(2, 0.0), (3, 2.0 * PI * 0.1)]);
        assert!(!in_set_a(&f, &params).unwrap());
        let det = Detector::new(params).unwrap();
        assert!(detector_g(&f, &det).unwrap() <= DETECTOR_SLACK);
    }

    #[test]
    fn constant_expansion_reduces_to_power_of_a0() {
        let params = DetectorParams::manual(0.1, 2, 0.02, 5.0).unwrap();
        let f = with_angles(&[(2, 0.3), (3, 1.1), (5, 2.9)]);
        let a0 = 0.4;
        let r = expansion_identity_check(&f, &params, &[a0]).unwrap();
        let expect = a0.powi(3) * (1.0 - 0.02 * 3.0 / a0);
        assert!((r.expansion - expect).abs() < 1e-15);
        assert!(r.defect < 1e-15);
    }

    #[test]
    fn expansion_identity_on_discriminant() {
        let forms = eigenforms(12, 50).unwrap();
        let params = DetectorParams::manual_coupled_epsilon(0.2, 1, 2.0).unwrap();
        let det = Detector::new(params.clone()).unwrap();
        let r = expansion_identity_check(&forms[0], &params, det.a_coeffs()).unwrap();
        assert!(r.defect < 1e-8);
        assert!((r.direct - detector_g(&forms[0], &det).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn budget_is_enforced() {
        let params = DetectorParams::manual(0.1, 30, 0.01, 20.0).unwrap();
        let f = with_angles(&[]);
        let a = vec![0.1; 31];
        assert!(matches!(
            expansion_identity_check(&f, &params, &a),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn sign_propagation_cases() {
        let p = DetectorParams::coupled(2f64.exp().exp()).unwrap();
        assert!(sign_propagation_check(p.delta, p.z).holds);
        let bad = sign_propagation_m(0.4, 3);
        assert!(!bad.holds);
        let (theta, m) = bad.witness.unwrap();
        assert_eq!(m, 3);
        assert!((theta - 0.8 * PI).abs() < 1e-3);
        assert!((m + 1) as f64 * theta > PI);
        assert!(sign_propagation_m(0.49, 0).holds);
    }

    #[test]
    fn asymptotic_bound_needs_large_k() {
        assert!(asymptotic_bound(12, 1).is_none());
        let b = asymptotic_bound(1000, 83).unwrap();
        assert!(b > 0.0 && b < 83.0);
    }
}
