//! Truncated q-expansions with exact rational coefficients.
//!
//! Coefficients are stored as integer numerators over one positive common
//! denominator. Products of long series go through Kronecker substitution so
//! that the heavy lifting is a single big-integer multiplication.

use rug::integer::Order;
use rug::{Integer, Rational};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QSeries {
    /// Modular weight, 0 for series without one.
    pub weight: u32,
    numer: Vec<Integer>,
    denom: Integer,
}

impl QSeries {
    /// Integral series from its coefficients `a(0..=n_max)`.
    pub fn from_integers(weight: u32, coeffs: Vec<Integer>) -> Self {
        assert!(!coeffs.is_empty(), "a q-series needs at least a(0)");
        Self {
            weight,
            numer: coeffs,
            denom: Integer::from(1),
        }
    }

    pub fn from_rationals(weight: u32, coeffs: &[Rational]) -> Self {
        assert!(!coeffs.is_empty());
        let mut denom = Integer::from(1);
        for c in coeffs {
            denom.lcm_mut(c.denom());
        }
        let numer = coeffs
            .iter()
            .map(|c| Integer::from(c.numer() * Integer::from(&denom / c.denom())))
            .collect();
        Self {
            weight,
            numer,
            denom,
        }
    }

    pub fn one(n_max: usize) -> Self {
        let mut c = vec![Integer::new(); n_max + 1];
        c[0] = Integer::from(1);
        Self::from_integers(0, c)
    }

    pub fn n_max(&self) -> usize {
        self.numer.len() - 1
    }

    pub fn coeff(&self, n: usize) -> Rational {
        Rational::from((self.numer[n].clone(), self.denom.clone()))
    }

    pub fn denom(&self) -> &Integer {
        &self.denom
    }

    pub fn numerators(&self) -> &[Integer] {
        &self.numer
    }

    pub fn is_integral(&self) -> bool {
        self.denom == 1
    }

    /// Coefficients as integers, when the series is integral.
    pub fn integer_coeffs(&self) -> Option<&[Integer]> {
        self.is_integral().then_some(self.numer.as_slice())
    }

    pub fn into_integer_coeffs(self) -> Option<Vec<Integer>> {
        if self.is_integral() {
            Some(self.numer)
        } else {
            None
        }
    }

    pub fn truncate(&self, n_max: usize) -> Self {
        let keep = (n_max + 1).min(self.numer.len());
        let mut out = Self {
            weight: self.weight,
            numer: self.numer[..keep].to_vec(),
            denom: self.denom.clone(),
        };
        out.reduce();
        out
    }

    /// Removes the common factor of the denominator and all numerators.
    fn reduce(&mut self) {
        if self.denom == 1 {
            return;
        }
        let mut g = self.denom.clone();
        for c in &self.numer {
            if g == 1 {
                return;
            }
            g.gcd_mut(c);
        }
        if g != 1 {
            for c in &mut self.numer {
                c.div_exact_mut(&g);
            }
            self.denom.div_exact_mut(&g);
        }
    }

    fn combine(&self, other: &Self, sign: i32) -> Self {
        let len = self.numer.len().min(other.numer.len());
        let l = Integer::from(self.denom.lcm_ref(&other.denom));
        let fa = Integer::from(&l / &self.denom);
        let fb = Integer::from(&l / &other.denom);
        let numer = (0..len)
            .map(|i| {
                let a = Integer::from(&self.numer[i] * &fa);
                let b = Integer::from(&other.numer[i] * &fb);
                if sign > 0 {
                    a + b
                } else {
                    a - b
                }
            })
            .collect();
        let mut out = Self {
            weight: if self.weight == other.weight { self.weight } else { 0 },
            numer,
            denom: l,
        };
        out.reduce();
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        self.combine(other, 1)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.combine(other, -1)
    }

    /// Product truncated at the smaller of the two precisions; weights add.
    pub fn mul(&self, other: &Self) -> Self {
        let len = self.numer.len().min(other.numer.len());
        let numer = mul_truncated(&self.numer[..len], &other.numer[..len], len);
        let mut out = Self {
            weight: self.weight + other.weight,
            numer,
            denom: Integer::from(&self.denom * &other.denom),
        };
        out.reduce();
        out
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut result = Self::one(self.n_max());
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        result
    }

    pub fn scale(&self, factor: &Rational) -> Self {
        let mut out = Self {
            weight: self.weight,
            numer: self
                .numer
                .iter()
                .map(|c| Integer::from(c * factor.numer()))
                .collect(),
            denom: Integer::from(&self.denom * factor.denom()),
        };
        out.reduce();
        out
    }

    /// Exact division by an integer; fails unless every coefficient stays integral.
    pub fn div_exact_integer(&self, divisor: &Integer) -> Result<Self> {
        if !self.is_integral() {
            return Err(Error::Arithmetic("division of a non-integral series".into()));
        }
        let mut numer = Vec::with_capacity(self.numer.len());
        for (n, c) in self.numer.iter().enumerate() {
            if !c.is_divisible(divisor) {
                return Err(Error::Arithmetic(format!(
                    "coefficient {n} is not divisible by {divisor}"
                )));
            }
            numer.push(Integer::from(c.div_exact_ref(divisor)));
        }
        Ok(Self {
            weight: self.weight,
            numer,
            denom: Integer::from(1),
        })
    }

    /// Leading exponent (first nonzero coefficient), if any.
    pub fn valuation(&self) -> Option<usize> {
        self.numer.iter().position(|c| *c != 0)
    }
}

/// Below this length products use the schoolbook method.
const KRONECKER_THRESHOLD: usize = 24;

/// First `len` coefficients of the product of two integer polynomials.
pub fn mul_truncated(a: &[Integer], b: &[Integer], len: usize) -> Vec<Integer> {
    let a = &a[..a.len().min(len)];
    let b = &b[..b.len().min(len)];
    if a.is_empty() || b.is_empty() {
        return vec![Integer::new(); len];
    }
    if a.len().min(b.len()) < KRONECKER_THRESHOLD {
        return schoolbook(a, b, len);
    }
    kronecker(a, b, len)
}

fn schoolbook(a: &[Integer], b: &[Integer], len: usize) -> Vec<Integer> {
    let mut out = vec![Integer::new(); len];
    for (i, x) in a.iter().enumerate() {
        if *x == 0 {
            continue;
        }
        for (j, y) in b.iter().enumerate().take(len.saturating_sub(i)) {
            out[i + j] += x * y;
        }
    }
    out
}

fn max_bits(v: &[Integer]) -> u32 {
    v.iter().map(|x| x.significant_bits()).max().unwrap_or(0)
}

/// Packs `|x|` for the coefficients with the requested sign into one integer
/// with `limbs` 64-bit limbs per slot.
fn pack(v: &[Integer], limbs: usize, negative: bool) -> Integer {
    let mut buf = vec![0u64; v.len() * limbs];
    for (i, x) in v.iter().enumerate() {
        if (*x < 0) != negative || *x == 0 {
            continue;
        }
        let digits = x.as_abs().to_digits::<u64>(Order::Lsf);
        buf[i * limbs..i * limbs + digits.len()].copy_from_slice(&digits);
    }
    Integer::from_digits(&buf, Order::Lsf)
}

fn kronecker(a: &[Integer], b: &[Integer], len: usize) -> Vec<Integer> {
    let terms = a.len().min(b.len()) as u32;
    let need = max_bits(a) + max_bits(b) + (32 - terms.leading_zeros()) + 2;
    let limbs = need.div_ceil(64) as usize;
    let slot_bits = (limbs * 64) as u32;

    let pa = Integer::from(pack(a, limbs, false) - pack(a, limbs, true));
    let pb = Integer::from(pack(b, limbs, false) - pack(b, limbs, true));
    let mut prod = pa * pb;
    let negate = prod < 0;
    if negate {
        prod = -prod;
    }
    let digits = prod.to_digits::<u64>(Order::Lsf);
    let half = Integer::from(1) << (slot_bits - 1);
    let full = Integer::from(1) << slot_bits;

    let mut out = Vec::with_capacity(len);
    let mut carry = false;
    for i in 0..len {
        let lo = (i * limbs).min(digits.len());
        let hi = ((i + 1) * limbs).min(digits.len());
        let mut u = Integer::from_digits(&digits[lo..hi], Order::Lsf);
        if carry {
            u += 1;
        }
        if u >= half {
            u -= &full;
            carry = true;
        } else {
            carry = false;
        }
        if negate {
            u = -u;
        }
        out.push(u);
    }
    out
}
