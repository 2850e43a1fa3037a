//! Eisenstein series, the discriminant, dimensions, and the Miller basis of
//! level-one cusp forms.

use rug::{Integer, Rational};

use super::linalg::IntMatrix;
use super::qseries::QSeries;
use crate::error::{Error, Result};

/// `σ_r(n)` for `n = 0..=n_max` (entry 0 is 0).
pub fn divisor_power_sums(r: u32, n_max: usize) -> Vec<Integer> {
    let mut out = vec![Integer::new(); n_max + 1];
    for d in 1..=n_max {
        let dr = Integer::from(Integer::u_pow_u(d as u32, r));
        let mut m = d;
        while m <= n_max {
            out[m] += &dr;
            m += d;
        }
    }
    out
}

/// `E_4 = 1 + 240 Σ σ_3(n) q^n` or `E_6 = 1 − 504 Σ σ_5(n) q^n`.
pub fn eisenstein(weight: u32, n_max: usize) -> Result<QSeries> {
    let (r, c) = match weight {
        4 => (3, 240i32),
        6 => (5, -504),
        _ => {
            return Err(Error::InvalidArgument(format!(
                "Eisenstein series are provided for weights 4 and 6, not {weight}"
            )))
        }
    };
    if n_max < 1 {
        return Err(Error::InvalidArgument("n_max must be at least 1".into()));
    }
    let mut coeffs = divisor_power_sums(r, n_max);
    for x in coeffs.iter_mut() {
        *x *= c;
    }
    coeffs[0] = Integer::from(1);
    Ok(QSeries::from_integers(weight, coeffs))
}

/// `Δ = (E_4³ − E_6²)/1728`.
pub fn delta_form(n_max: usize) -> Result<QSeries> {
    if n_max < 2 {
        return Err(Error::InvalidArgument("n_max must be at least 2".into()));
    }
    let e4 = eisenstein(4, n_max)?;
    let e6 = eisenstein(6, n_max)?;
    let num = e4.pow(3).sub(&e6.pow(2));
    let mut d = num.div_exact_integer(&Integer::from(1728))?;
    d.weight = 12;
    if d.numerators()[0] != 0 || d.numerators()[1] != 1 {
        return Err(Error::Arithmetic("discriminant is not q + O(q^2)".into()));
    }
    Ok(d)
}

/// Dimension of the space of level-one cusp forms of weight `k`.
pub fn dim_cusp_forms(k: u32) -> Result<usize> {
    if k % 2 == 1 {
        return Err(Error::InvalidArgument(format!("weight {k} is odd")));
    }
    if k < 12 || k == 14 {
        return Ok(0);
    }
    let base = (k / 12) as usize;
    Ok(if k % 12 == 2 { base - 1 } else { base })
}

/// `k = 12 m + k'` with `k' ∈ {0, 4, 6, 8, 10, 14}` and `m = dim S_k`.
pub fn weight_split(k: u32) -> (u32, usize) {
    let r = k % 12;
    let kp = if r == 2 { 14 } else { r };
    if k < kp {
        return (kp, 0);
    }
    (kp, ((k - kp) / 12) as usize)
}

/// The Eisenstein-type factor `E_{k'}` (with `E_0 = 1`, `E_{k'}` a monomial in E4, E6).
fn eisenstein_factor(kp: u32, e4: &QSeries, e6: &QSeries) -> QSeries {
    let n = e4.n_max();
    let mut s = match kp {
        0 => QSeries::one(n),
        4 => e4.clone(),
        6 => e6.clone(),
        8 => e4.mul(e4),
        10 => e4.mul(e6),
        14 => e4.mul(e4).mul(e6),
        _ => unreachable!("k' is one of 0, 4, 6, 8, 10, 14"),
    };
    s.weight = kp;
    s
}

/// Integral basis `b_j = E_{k'} Δ^j (E_6²)^{m−j}`, `j = 1..m`, of `S_k`, so
/// that `b_j = q^j + O(q^{j+1})`.
#[derive(Debug, Clone)]
pub struct TriangularBasis {
    pub weight: u32,
    /// `rows[j-1][n]` is the coefficient of `q^n` in `b_j`.
    pub rows: Vec<Vec<Integer>>,
}

impl TriangularBasis {
    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn n_max(&self) -> usize {
        self.rows.first().map_or(0, |r| r.len() - 1)
    }

    /// Unit upper-triangular `E` with `g_i = Σ_j E_{ij} b_j = q^i + O(q^{d+1})`.
    pub fn echelon_transform(&self) -> Result<IntMatrix> {
        let d = self.dim();
        if self.n_max() < d {
            return Err(Error::InvalidArgument(format!(
                "need coefficients up to q^{d} to echelonize, have {}",
                self.n_max()
            )));
        }
        for (j, b) in self.rows.iter().enumerate() {
            if b[..=j].iter().any(|c| *c != 0) || b[j + 1] != 1 {
                return Err(Error::Arithmetic(format!(
                    "basis element {} of weight {} is not q^{} + O(q^{})",
                    j + 1,
                    self.weight,
                    j + 1,
                    j + 2
                )));
            }
        }
        let mut e = IntMatrix::zero(d);
        for i in (0..d).rev() {
            e.set(i, i, Integer::from(1));
            for j in i + 1..d {
                let c = self.rows[i][j + 1].clone();
                if c == 0 {
                    continue;
                }
                for l in j..d {
                    let v = Integer::from(e.get(i, l) - Integer::from(&c * e.get(j, l)));
                    e.set(i, l, v);
                }
            }
        }
        Ok(e)
    }

    /// Coefficients `0..=n_max` of `Σ_j u_j b_j`.
    pub fn combine(&self, u: &[Integer], n_max: usize) -> Vec<Integer> {
        let n = n_max.min(self.n_max());
        (0..=n)
            .map(|idx| {
                let mut acc = Integer::new();
                for (uj, b) in u.iter().zip(&self.rows) {
                    if b[idx] != 0 {
                        acc += uj * &b[idx];
                    }
                }
                acc
            })
            .collect()
    }

    /// Echelonized basis `g_1..g_d` with coefficients up to `n_max`.
    pub fn echelonized(&self, n_max: usize) -> Result<Vec<Vec<Integer>>> {
        let e = self.echelon_transform()?;
        let d = self.dim();
        Ok((0..d)
            .map(|i| {
                let row: Vec<Integer> = (0..d).map(|j| e.get(i, j).clone()).collect();
                self.combine(&row, n_max)
            })
            .collect())
    }
}

/// Generates the triangular bases of every weight `k ≡ k' (mod 12)` in
/// increasing order, reusing the previous weight: the basis of weight
/// `k + 12` is `E_6² · (basis of k)` together with `E_{k'} Δ^{m+1}`.
#[derive(Debug)]
pub struct BasisFamily {
    kp: u32,
    e6_sq: QSeries,
    delta: QSeries,
    factor: QSeries,
    delta_pow: QSeries,
    current: Vec<QSeries>,
    m: usize,
}

impl BasisFamily {
    pub fn new(residue_weight: u32, n_max: usize) -> Result<Self> {
        if ![0, 4, 6, 8, 10, 14].contains(&residue_weight) {
            return Err(Error::InvalidArgument(format!(
                "{residue_weight} is not one of 0, 4, 6, 8, 10, 14"
            )));
        }
        let n_max = n_max.max(2);
        let e4 = eisenstein(4, n_max)?;
        let e6 = eisenstein(6, n_max)?;
        let delta = delta_form(n_max)?;
        Ok(Self {
            kp: residue_weight,
            e6_sq: e6.mul(&e6),
            factor: eisenstein_factor(residue_weight, &e4, &e6),
            delta_pow: QSeries::one(n_max),
            delta,
            current: Vec::new(),
            m: 0,
        })
    }

    /// Weight of the basis that the next call to [`Self::advance`] returns.
    pub fn next_weight(&self) -> u32 {
        self.kp + 12 * (self.m as u32 + 1)
    }

    pub fn advance(&mut self) -> TriangularBasis {
        for b in self.current.iter_mut() {
            *b = b.mul(&self.e6_sq);
        }
        self.delta_pow = self.delta_pow.mul(&self.delta);
        self.current.push(self.factor.mul(&self.delta_pow));
        self.m += 1;
        self.snapshot()
    }

    fn snapshot(&self) -> TriangularBasis {
        TriangularBasis {
            weight: self.kp + 12 * self.m as u32,
            rows: self
                .current
                .iter()
                .map(|s| s.integer_coeffs().expect("products of integral series").to_vec())
                .collect(),
        }
    }
}

pub fn triangular_basis(k: u32, n_max: usize) -> Result<TriangularBasis> {
    let d = dim_cusp_forms(k)?;
    if d == 0 {
        return Err(Error::InvalidArgument(format!("no cusp forms of weight {k}")));
    }
    let (kp, m) = weight_split(k);
    let mut fam = BasisFamily::new(kp, n_max)?;
    let mut out = fam.advance();
    for _ in 1..m {
        out = fam.advance();
    }
    debug_assert_eq!(out.weight, k);
    Ok(out)
}

/// The Miller basis `g_i = q^i + O(q^{d+1})` of `S_k` as exact q-series.
pub fn miller_basis(k: u32, n_max: usize) -> Result<Vec<QSeries>> {
    let d = dim_cusp_forms(k)?;
    if n_max < d {
        return Err(Error::InvalidArgument(format!(
            "n_max = {n_max} is below the dimension {d}"
        )));
    }
    let tb = triangular_basis(k, n_max)?;
    let rows = tb.echelonized(n_max)?;
    let out: Vec<QSeries> = rows.into_iter().map(|r| QSeries::from_integers(k, r)).collect();
    for (i, g) in out.iter().enumerate() {
        for n in 0..=d {
            if g.coeff(n) != Rational::from(u32::from(n == i + 1)) {
                return Err(Error::Arithmetic(format!(
                    "weight {k}: echelon basis element {} has a wrong coefficient at q^{n}",
                    i + 1
                )));
            }
        }
    }
    Ok(out)
}
