//! Hecke eigenforms: exact diagonalisation of `T_2` (or `T_3`) on the Miller
//! basis, eigenvectors from Krylov sequences, and normalised eigenvalues
//! `λ_f(n) = a_f(n)/n^{(k−1)/2}` at prime powers.

use std::cell::OnceCell;
use std::collections::BTreeMap;
use std::f64::consts::LN_2;

use rug::Integer;
use serde::{Deserialize, Serialize};

use super::basis::{dim_cusp_forms, weight_split, BasisFamily, TriangularBasis};
use super::linalg::{charpoly, IntMatrix};
use super::qseries::QSeries;
use super::roots::{dyadic_to_f64, isolate_real_roots, refine, DyadicInterval};
use crate::arith::{factorize, primes_up_to};
use crate::error::{Error, Result};
use crate::sato_tate::cheb_x;

/// Normalised eigenvalues closer than this count as a repeated root.
pub const ROOT_SEPARATION: f64 = 1e-20;
/// `|λ_f(p)|` may exceed 2 by this much before it counts as a Deligne violation.
pub const DELIGNE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy)]
pub struct EigenOptions {
    /// Largest `n` at which eigenvalues are produced.
    pub n_max: usize,
    /// Initial root precision in bits, in normalised units.
    pub start_bits: u32,
    pub max_bits: u32,
    /// Largest disagreement allowed between the two ends of the root bracket.
    pub agreement: f64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            n_max: 1000,
            start_bits: 64,
            max_bits: 8192,
            agreement: 1e-11,
        }
    }
}

impl EigenOptions {
    pub fn with_n_max(n_max: usize) -> Self {
        Self {
            n_max,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Eigenform {
    pub weight_k: u32,
    /// 1-based position in increasing order of the diagonalised Hecke eigenvalue.
    pub index: usize,
    pub n_max: u64,
    /// Prime whose Hecke operator was diagonalised (2, or 3 after a fallback).
    pub hecke_prime: u64,
    /// `λ_f(p^m)` for prime powers up to `n_max`: primes from the q-expansion,
    /// higher powers from `sin((m+1)θ)/sin θ`.
    pub lambda: BTreeMap<u64, f64>,
    /// `λ_f(p^m)` read directly off the q-expansion.
    pub direct: BTreeMap<u64, f64>,
    /// `‖(M − r)v‖ / (‖M‖ ‖v‖)` for the Hecke matrix `M`, root `r` and eigenvector `v`.
    pub eigen_residual: f64,
    /// Root precision used, in bits below the normalised unit.
    pub precision_bits: u32,
    /// Largest change in any `λ_f(p^m)` across the final root bracket.
    pub endpoint_spread: f64,
    /// The normalised Hecke eigenvalue taken from the characteristic polynomial.
    pub root_eigenvalue: f64,
}

impl Eigenform {
    /// `λ_f(n)` by multiplicativity from the prime-power table.
    pub fn lambda_at(&self, n: u64) -> Result<f64> {
        if n == 1 {
            return Ok(1.0);
        }
        if n == 0 {
            return Err(Error::MissingEigenvalue(0));
        }
        let mut v = 1.0;
        for (p, e) in factorize(n) {
            let q = p.pow(e);
            v *= self.lambda.get(&q).copied().ok_or(Error::MissingEigenvalue(q))?;
        }
        Ok(v)
    }

    /// `λ_f(n)` for every `n ≤ n_max` (index 0 is unused and set to 0).
    pub fn table(&self) -> Vec<f64> {
        let n_max = self.n_max as usize;
        let spf = crate::arith::smallest_prime_factors(n_max);
        let mut t = vec![0.0; n_max + 1];
        if n_max >= 1 {
            t[1] = 1.0;
        }
        for n in 2..=n_max {
            let p = spf[n] as usize;
            let mut q = p;
            let mut rest = n / p;
            while rest % p == 0 {
                q *= p;
                rest /= p;
            }
            t[n] = self.lambda[&(q as u64)] * t[rest];
        }
        t
    }

    /// Largest `|sin((m+1)θ)/sin θ − direct value|` over prime powers `p^m`, `m ≥ 2`.
    pub fn prime_power_defect(&self) -> f64 {
        self.lambda
            .iter()
            .filter(|(q, _)| crate::arith::prime_power(**q).is_some_and(|(_, m)| m >= 2))
            .map(|(q, v)| (v - self.direct[q]).abs())
            .fold(0.0, f64::max)
    }

    pub fn primes(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.direct
            .iter()
            .filter(|(q, _)| crate::arith::is_prime(**q))
            .map(|(q, v)| (*q, *v))
    }
}

/// `θ_f(p) = arccos(λ_f(p)/2) ∈ [0, π]`.
pub fn theta_angle(f: &Eigenform, p: u64) -> Result<f64> {
    let l = *f.direct.get(&p).ok_or(Error::MissingAngle(p))?;
    angle_from_lambda(p, l)
}

pub fn angle_from_lambda(p: u64, l: f64) -> Result<f64> {
    if l.abs() > 2.0 + DELIGNE_SLACK || !l.is_finite() {
        return Err(Error::DeligneViolation { p, value: l.abs() });
    }
    Ok((l / 2.0).clamp(-1.0, 1.0).acos())
}

/// Matrix of `T_p` in an echelon basis given by its coefficient rows:
/// column `i` holds `(T_p g_i)(1..=d)`.
pub fn hecke_matrix_rows(k: u32, p: u64, g: &[Vec<Integer>]) -> Result<IntMatrix> {
    let d = g.len();
    let p = p as usize;
    if g.iter().any(|r| r.len() <= p * d) {
        return Err(Error::InvalidArgument(format!(
            "T_{p} needs basis coefficients up to q^{}",
            p * d
        )));
    }
    let pk = Integer::from(Integer::u_pow_u(p as u32, k - 1));
    let mut m = IntMatrix::zero(d);
    for (i, gi) in g.iter().enumerate() {
        for r in 1..=d {
            let mut v = gi[p * r].clone();
            if r % p == 0 {
                v += Integer::from(&pk * &gi[r / p]);
            }
            m.set(r - 1, i, v);
        }
    }
    Ok(m)
}

/// Matrix of `T_p` on the Miller basis of weight `k`.
pub fn hecke_matrix(k: u32, p: u64, basis: &[QSeries]) -> Result<IntMatrix> {
    let rows = basis
        .iter()
        .map(|s| {
            s.integer_coeffs()
                .map(<[Integer]>::to_vec)
                .ok_or_else(|| Error::Arithmetic("Miller basis must be integral".into()))
        })
        .collect::<Result<Vec<_>>>()?;
    hecke_matrix_rows(k, p, &rows)
}

/// Everything computed for one weight.
#[derive(Debug, Clone)]
pub struct WeightSpectrum {
    pub weight: u32,
    pub hecke_prime: u64,
    /// True when `T_2` had a repeated root and `T_3` was used instead.
    pub fell_back: bool,
    pub charpoly: Vec<Integer>,
    pub forms: Vec<Eigenform>,
}

/// Prime powers `p^m ≤ n_max`, increasing.
pub fn prime_powers_up_to(n_max: u64) -> Vec<u64> {
    let mut out = Vec::new();
    for p in primes_up_to(n_max) {
        let mut q = p;
        while q <= n_max {
            out.push(q);
            match q.checked_mul(p) {
                Some(n) => q = n,
                None => break,
            }
        }
    }
    out.sort_unstable();
    out
}

fn log2_abs(x: &Integer) -> f64 {
    if *x == 0 {
        return f64::NEG_INFINITY;
    }
    let (m, e) = x.to_f64_exp();
    m.abs().log2() + e as f64
}

fn max_log2(v: &[Integer]) -> f64 {
    v.iter().map(log2_abs).fold(f64::NEG_INFINITY, f64::max)
}

/// `a / (v1 · n^{(k−1)/2})` evaluated through logarithms of the exact integers.
fn normalize(a: &Integer, v1: &Integer, k: u32, n: u64) -> f64 {
    if *a == 0 {
        return 0.0;
    }
    let (ma, ea) = a.to_f64_exp();
    let (mv, ev) = v1.to_f64_exp();
    let sign = ma.signum() * mv.signum();
    let log = (ma.abs() / mv.abs()).ln() + (ea as i64 - ev as i64) as f64 * LN_2
        - 0.5 * (k as f64 - 1.0) * (n as f64).ln();
    sign * log.exp()
}

struct Diagonaliser<'a> {
    k: u32,
    basis: &'a TriangularBasis,
    echelon: IntMatrix,
    matrix: IntMatrix,
    chi: Vec<Integer>,
    hecke_prime: u64,
    prime_powers: Vec<u64>,
    krylov_cache: [OnceCell<Vec<Vec<Integer>>>; 3],
}

impl Diagonaliser<'_> {
    /// Start vectors tried in turn: `e_1`, all ones, `(1, 2, …, d)`.
    fn start_vector(&self, which: usize) -> Vec<Integer> {
        let d = self.matrix.dim;
        match which {
            0 => (0..d).map(|i| Integer::from(u32::from(i == 0))).collect(),
            1 => vec![Integer::from(1); d],
            _ => (1..=d as u32).map(Integer::from).collect(),
        }
    }

    fn krylov(&self, which: usize) -> &[Vec<Integer>] {
        self.krylov_cache[which].get_or_init(|| self.krylov_sequence(self.start_vector(which)))
    }

    fn krylov_sequence(&self, w: Vec<Integer>) -> Vec<Vec<Integer>> {
        let d = self.matrix.dim;
        let mut ys = vec![w];
        for j in 1..d {
            let next = self.matrix.mul_vec(&ys[j - 1]);
            ys.push(next);
        }
        ys
    }

    /// `2^{s(d−1)} · χ(M)/(M − r) w` at `r = a/2^s`, an eigenvector as `r` tends to a root.
    fn eigvec(&self, ys: &[Vec<Integer>], a: &Integer, s: u32) -> Vec<Integer> {
        // quotient coefficients q_j scaled to integers Q_j = 2^{s(d−1−j)} q_j
        let d = self.matrix.dim;
        let mut q = Integer::from(1);
        let shift = |j: usize| s * j as u32;
        let mut v: Vec<Integer> = ys[d - 1].iter().map(|y| Integer::from(y << shift(d - 1))).collect();
        for j in (1..d).rev() {
            q = Integer::from(&self.chi[j] << (s * (d - j) as u32)) + Integer::from(a * &q);
            for (vi, yi) in v.iter_mut().zip(&ys[j - 1]) {
                *vi += Integer::from(&q * yi) << shift(j - 1);
            }
        }
        v
    }

    /// Normalised eigenvalues at every stored prime power for eigenvector `v`.
    fn lambdas(&self, v: &[Integer]) -> Option<Vec<f64>> {
        if v[0] == 0 {
            return None;
        }
        let d = v.len();
        let u: Vec<Integer> = (0..d)
            .map(|j| (0..=j).map(|i| Integer::from(self.echelon.get(i, j) * &v[i])).sum())
            .collect();
        Some(
            self.prime_powers
                .iter()
                .map(|&n| {
                    let mut acc = Integer::new();
                    for (uj, b) in u.iter().zip(&self.basis.rows) {
                        acc += Integer::from(uj * &b[n as usize]);
                    }
                    normalize(&acc, &v[0], self.k, n)
                })
                .collect(),
        )
    }

    fn residual(&self, v: &[Integer], a: &Integer, s: u32) -> f64 {
        let mv = self.matrix.mul_vec(v);
        let res: Vec<Integer> = mv
            .iter()
            .zip(v)
            .map(|(x, y)| Integer::from(x << s) - Integer::from(a * y))
            .collect();
        let norm_m = max_log2(&self.matrix.entries);
        (max_log2(&res) - s as f64 - norm_m - max_log2(v)).exp2()
    }

    fn form(&self, index: usize, iv: &DyadicInterval, opts: &EigenOptions) -> Result<Eigenform> {
        let unit = 0.5 * (self.k as f64 - 1.0) * (self.hecke_prime as f64).log2();
        for which in 0..self.krylov_cache.len() {
            let ys = self.krylov(which);
            let mut bits = opts.start_bits;
            while bits <= opts.max_bits {
                let fine = refine(&self.chi, iv, unit - bits as f64);
                let v_lo = self.eigvec(ys, &fine.lo, fine.scale);
                let v_hi = self.eigvec(ys, &fine.hi, fine.scale);
                let (Some(l_lo), Some(l_hi)) = (self.lambdas(&v_lo), self.lambdas(&v_hi)) else {
                    break;
                };
                let spread = l_lo
                    .iter()
                    .zip(&l_hi)
                    .map(|(a, b)| (a - b).abs() / a.abs().max(1.0))
                    .fold(0.0, f64::max);
                if !spread.is_finite() || spread > opts.agreement {
                    bits *= 2;
                    continue;
                }
                return self.assemble(index, &fine, &v_lo, l_lo, spread, bits, opts);
            }
        }
        Err(Error::Spectrum {
            weight: self.k,
            reason: format!(
                "eigenvector {index} did not stabilise within {} bits",
                opts.max_bits
            ),
        })
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        &self,
        index: usize,
        fine: &DyadicInterval,
        v: &[Integer],
        values: Vec<f64>,
        spread: f64,
        bits: u32,
        opts: &EigenOptions,
    ) -> Result<Eigenform> {
        let direct: BTreeMap<u64, f64> = self.prime_powers.iter().copied().zip(values).collect();
        let mut lambda = BTreeMap::new();
        for (&q, &val) in &direct {
            let (p, m) = crate::arith::prime_power(q).expect("prime power");
            if m == 1 {
                angle_from_lambda(p, val)?;
                lambda.insert(q, val);
            } else {
                let theta = angle_from_lambda(p, direct[&p])?;
                lambda.insert(q, cheb_x(m, theta));
            }
        }
        let root = fine.lo_f64().signum()
            * (dyadic_to_f64(&fine.lo, fine.scale).abs().ln()
                - 0.5 * (self.k as f64 - 1.0) * (self.hecke_prime as f64).ln())
            .exp();
        Ok(Eigenform {
            weight_k: self.k,
            index,
            n_max: opts.n_max as u64,
            hecke_prime: self.hecke_prime,
            lambda,
            direct,
            eigen_residual: self.residual(v, &fine.lo, fine.scale),
            precision_bits: bits,
            endpoint_spread: spread,
            root_eigenvalue: root,
        })
    }
}

/// Basis length needed to diagonalise and evaluate up to `n_max`.
pub fn required_precision(k: u32, n_max: usize) -> usize {
    let d = dim_cusp_forms(k).unwrap_or(0);
    n_max.max(3 * d + 3)
}

/// Diagonalises the Hecke algebra on a triangular basis of weight `k`.
pub fn spectrum(basis: &TriangularBasis, opts: &EigenOptions) -> Result<WeightSpectrum> {
    let k = basis.weight;
    let d = basis.dim();
    if d == 0 {
        return Ok(WeightSpectrum {
            weight: k,
            hecke_prime: 2,
            fell_back: false,
            charpoly: vec![Integer::from(1)],
            forms: Vec::new(),
        });
    }
    if basis.n_max() < required_precision(k, opts.n_max) {
        return Err(Error::InvalidArgument(format!(
            "weight {k}: basis known to q^{}, need q^{}",
            basis.n_max(),
            required_precision(k, opts.n_max)
        )));
    }
    let echelon = basis.echelon_transform()?;
    let g = basis.echelonized(3 * d)?;
    let prime_powers = prime_powers_up_to(opts.n_max as u64);
    let mut fell_back = false;
    for p in [2u64, 3] {
        let matrix = hecke_matrix_rows(k, p, &g)?;
        let chi = charpoly(&matrix);
        let sep = ROOT_SEPARATION.log2() + 0.5 * (k as f64 - 1.0) * (p as f64).log2();
        let ivs = match isolate_real_roots(&chi, sep) {
            Ok(ivs) => ivs,
            Err(_) => {
                fell_back = true;
                continue;
            }
        };
        if ivs.len() != d {
            return Err(Error::Spectrum {
                weight: k,
                reason: format!(
                    "T_{p} has {} real eigenvalues, expected {d}",
                    ivs.len()
                ),
            });
        }
        let diag = Diagonaliser {
            k,
            basis,
            echelon: echelon.clone(),
            matrix,
            chi: chi.clone(),
            hecke_prime: p,
            prime_powers: prime_powers.clone(),
            krylov_cache: Default::default(),
        };
        let forms = ivs
            .iter()
            .enumerate()
            .map(|(i, iv)| diag.form(i + 1, iv, opts))
            .collect::<Result<Vec<_>>>()?;
        return Ok(WeightSpectrum {
            weight: k,
            hecke_prime: p,
            fell_back,
            charpoly: chi,
            forms,
        });
    }
    Err(Error::Spectrum {
        weight: k,
        reason: "T_2 and T_3 both have repeated eigenvalues".into(),
    })
}

/// All eigenforms of weight `k` with eigenvalues up to `n_max`.
pub fn eigenforms(k: u32, n_max: usize) -> Result<Vec<Eigenform>> {
    eigenforms_with(k, &EigenOptions::with_n_max(n_max))
}

pub fn eigenforms_with(k: u32, opts: &EigenOptions) -> Result<Vec<Eigenform>> {
    if k < 12 || k % 2 == 1 {
        return Err(Error::InvalidArgument(format!(
            "weight must be even and at least 12, got {k}"
        )));
    }
    if dim_cusp_forms(k)? == 0 {
        return Ok(Vec::new());
    }
    let basis = super::basis::triangular_basis(k, required_precision(k, opts.n_max))?;
    Ok(spectrum(&basis, opts)?.forms)
}

/// Spectra of every weight `k ≡ k' (mod 12)` in `[k_min, k_max]` with a
/// positive-dimensional cusp space, sharing one basis family.
pub fn class_spectra(
    residue_weight: u32,
    k_min: u32,
    k_max: u32,
    opts: &EigenOptions,
) -> Result<Vec<WeightSpectrum>> {
    let mut out = Vec::new();
    if k_max < residue_weight + 12 {
        return Ok(out);
    }
    let n = required_precision(k_max, opts.n_max);
    let mut fam = BasisFamily::new(residue_weight, n)?;
    while fam.next_weight() <= k_max {
        let basis = fam.advance();
        if basis.weight >= k_min {
            out.push(spectrum(&basis, opts)?);
        }
    }
    Ok(out)
}

/// Residue weights `k'` of the classes meeting the even weights in `[k_min, k_max]`.
pub fn residue_classes(k_min: u32, k_max: u32) -> Vec<u32> {
    let mut out: Vec<u32> = (k_min..=k_max)
        .filter(|k| k % 2 == 0 && dim_cusp_forms(*k).unwrap_or(0) > 0)
        .map(|k| weight_split(k).0)
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Spectra of all weights in `[k_min, k_max]`, sorted by weight.
pub fn spectra_range(k_min: u32, k_max: u32, opts: &EigenOptions) -> Result<Vec<WeightSpectrum>> {
    let mut out = Vec::new();
    for kp in residue_classes(k_min, k_max) {
        out.extend(class_spectra(kp, k_min, k_max, opts)?);
    }
    out.sort_by_key(|s| s.weight);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn discriminant_eigenvalues() {
        let forms = eigenforms(12, 50).unwrap();
        assert_eq!(forms.len(), 1);
        let f = &forms[0];
        let l2 = -24.0 / 2f64.powf(5.5);
        assert!((f.direct[&2] - l2).abs() < 1e-14);
        assert!((f.root_eigenvalue - l2).abs() < 1e-14);
        // τ(5) = 4830, τ(7) = −16744
        assert!((f.direct[&5] - 4830.0 / 5f64.powf(5.5)).abs() < 1e-14);
        assert!((f.direct[&7] + 16744.0 / 7f64.powf(5.5)).abs() < 1e-14);
        assert!((f.lambda[&4] - (l2 * l2 - 1.0)).abs() < 1e-13);
        assert!(f.prime_power_defect() < 1e-12);
        assert!((theta_angle(f, 2).unwrap() - (l2 / 2.0).acos()).abs() < 1e-15);
    }

    #[test]
    fn hecke_matrices_of_small_weights() {
        let b12 = super::super::basis::miller_basis(12, 20).unwrap();
        let m = hecke_matrix(12, 2, &b12).unwrap();
        assert_eq!(m.entries, vec![Integer::from(-24)]);
        let m = hecke_matrix(12, 5, &b12).unwrap();
        assert_eq!(m.entries, vec![Integer::from(4830)]);

        // T_2 on S_24 has characteristic polynomial x^2 - 1080x - 20468736
        let b24 = super::super::basis::miller_basis(24, 10).unwrap();
        let m = hecke_matrix(24, 2, &b24).unwrap();
        assert_eq!(m.trace(), 1080);
        let chi = charpoly(&m);
        assert_eq!(chi[0], Integer::from(-20468736));
    }

    #[test]
    fn weight_24_pair() {
        let forms = eigenforms(24, 200).unwrap();
        assert_eq!(forms.len(), 2);
        // a(2) = 540 ± 12 sqrt(144169)
        let disc = 12.0 * 144169f64.sqrt();
        let scale = 2f64.powf(11.5);
        assert!((forms[0].direct[&2] - (540.0 - disc) / scale).abs() < 1e-12);
        assert!((forms[1].direct[&2] - (540.0 + disc) / scale).abs() < 1e-12);
        for f in &forms {
            assert!(f.eigen_residual < 1e-15, "{}", f.eigen_residual);
            for (q, v) in &f.direct {
                assert!(v.abs() <= crate::arith::divisor_count(*q) as f64 + 1e-6);
            }
        }
    }

    #[test]
    fn zero_dimensional_weights_have_no_forms() {
        assert!(eigenforms(14, 10).unwrap().is_empty());
        assert!(eigenforms(10, 10).is_err());
    }

    #[test]
    fn class_iteration_matches_single_weights() {
        let opts = EigenOptions::with_n_max(60);
        let spectra = spectra_range(12, 60, &opts).unwrap();
        let weights: Vec<u32> = spectra.iter().map(|s| s.weight).collect();
        let expect: Vec<u32> = (12..=60)
            .filter(|k| k % 2 == 0 && dim_cusp_forms(*k).unwrap() > 0)
            .collect();
        assert_eq!(weights, expect);
        let direct = eigenforms_with(48, &opts).unwrap();
        let from_range = &spectra.iter().find(|s| s.weight == 48).unwrap().forms;
        for (a, b) in direct.iter().zip(from_range) {
            for (q, v) in &a.direct {
                assert!((v - b.direct[q]).abs() < 1e-12);
            }
        }
    }
}
