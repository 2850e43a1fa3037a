//! Real root isolation for integer polynomials by Descartes' rule of signs
//! with bisection, and refinement of isolating intervals to dyadic precision.

use rug::Integer;

use crate::error::{Error, Result};

/// Interval `[lo, hi] / 2^scale` containing exactly one real root.
/// `lo == hi` marks a root hit exactly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DyadicInterval {
    pub lo: Integer,
    pub hi: Integer,
    pub scale: u32,
}

impl DyadicInterval {
    pub fn lo_f64(&self) -> f64 {
        dyadic_to_f64(&self.lo, self.scale)
    }

    pub fn hi_f64(&self) -> f64 {
        dyadic_to_f64(&self.hi, self.scale)
    }

    pub fn mid_f64(&self) -> f64 {
        dyadic_to_f64(&Integer::from(&self.lo + &self.hi), self.scale + 1)
    }

    /// log2 of the interval width (−inf for an exact root).
    pub fn width_log2(&self) -> f64 {
        let w = Integer::from(&self.hi - &self.lo);
        if w == 0 {
            return f64::NEG_INFINITY;
        }
        let (m, e) = w.to_f64_exp();
        m.log2() + e as f64 - self.scale as f64
    }

    fn rescale(&mut self, scale: u32) {
        if scale > self.scale {
            let s = scale - self.scale;
            self.lo <<= s;
            self.hi <<= s;
            self.scale = scale;
        }
    }
}

pub fn dyadic_to_f64(x: &Integer, scale: u32) -> f64 {
    if *x == 0 {
        return 0.0;
    }
    let (m, e) = x.to_f64_exp();
    m * 2f64.powi(e as i32 - scale as i32)
}

/// Sign of `p(a / 2^s)`.
pub fn sign_at(p: &[Integer], a: &Integer, s: u32) -> i32 {
    // 2^{s d} p(a/2^s) = sum c_i a^i 2^{s(d-i)}
    let d = p.len() - 1;
    let mut acc = p[d].clone();
    for i in (0..d).rev() {
        acc *= a;
        acc += Integer::from(&p[i] << (s * (d - i) as u32));
    }
    acc.cmp0() as i32
}

pub fn derivative(p: &[Integer]) -> Vec<Integer> {
    if p.len() <= 1 {
        return vec![Integer::new()];
    }
    p.iter()
        .enumerate()
        .skip(1)
        .map(|(i, c)| Integer::from(c * i as u32))
        .collect()
}

fn taylor_shift_one(c: &mut [Integer]) {
    let n = c.len();
    for i in 0..n {
        for j in (i..n - 1).rev() {
            let t = c[j + 1].clone();
            c[j] += t;
        }
    }
}

fn sign_variations(c: &[Integer]) -> usize {
    let mut last = 0;
    let mut count = 0;
    for x in c {
        let s = x.cmp0() as i32;
        if s != 0 {
            if last != 0 && s != last {
                count += 1;
            }
            last = s;
        }
    }
    count
}

/// Descartes bound for roots of `q` in the open interval (0, 1).
fn descartes_01(q: &[Integer]) -> usize {
    let mut r: Vec<Integer> = q.iter().rev().cloned().collect();
    taylor_shift_one(&mut r);
    sign_variations(&r)
}

fn strip_power_of_two(q: &mut [Integer]) {
    let tz = q
        .iter()
        .filter(|x| **x != 0)
        .map(|x| x.find_one(0).unwrap_or(0))
        .min()
        .unwrap_or(0);
    if tz > 0 {
        for x in q.iter_mut() {
            *x >>= tz;
        }
    }
}

/// Exponent `e` with every root strictly inside `(-2^e, 2^e)`.
pub fn root_bound_log2(p: &[Integer]) -> u32 {
    let d = p.len() - 1;
    let lead_bits = p[d].significant_bits() as i64;
    let mut e: i64 = 0;
    for i in 1..=d {
        let c = &p[d - i];
        if *c == 0 {
            continue;
        }
        // |c/lead|^{1/i} <= 2^{ceil((bits(c) - bits(lead) + 1)/i)}
        let num = c.significant_bits() as i64 - lead_bits + 1;
        let t = if num <= 0 { 0 } else { (num + i as i64 - 1) / i as i64 };
        e = e.max(t);
    }
    // Fujiwara: |x| < 2 max |c_{d-i}/c_d|^{1/i}
    (e + 2) as u32
}

/// Isolates all real roots of a squarefree integer polynomial (low degree first).
/// Intervals are returned in increasing order. `min_width_log2` bounds the
/// bisection depth: a cluster not separated at that width is reported as an error.
pub fn isolate_real_roots(p: &[Integer], min_width_log2: f64) -> Result<Vec<DyadicInterval>> {
    let mut p: Vec<Integer> = p.to_vec();
    while p.len() > 1 && *p.last().unwrap() == 0 {
        p.pop();
    }
    let d = p.len() - 1;
    if d == 0 {
        return Ok(Vec::new());
    }
    let e = root_bound_log2(&p);
    // x = 2^e (2t - 1); Q(t) = p(2^{e+1} t - 2^e) on t in (0, 1)
    let mut q: Vec<Integer> = p
        .iter()
        .enumerate()
        .map(|(i, c)| Integer::from(c << (e * i as u32)))
        .collect();
    // r(u) = q(u - 1): shift by -1 is shift by 1 of q(-u) then sign flip back
    for (i, c) in q.iter_mut().enumerate() {
        if i % 2 == 1 {
            *c = -c.clone();
        }
    }
    taylor_shift_one(&mut q);
    for (i, c) in q.iter_mut().enumerate() {
        if i % 2 == 1 {
            *c = -c.clone();
        }
        // u = 2t
        *c <<= i as u32;
    }
    strip_power_of_two(&mut q);

    // stack of (poly on (0,1), c, k) meaning t in (c/2^k, (c+1)/2^k)
    let mut found: Vec<(Integer, u32, bool)> = Vec::new();
    let mut stack = vec![(q, Integer::new(), 0u32)];
    while let Some((q, c, k)) = stack.pop() {
        let v = descartes_01(&q);
        if v == 0 {
            continue;
        }
        if v == 1 {
            found.push((c, k, false));
            continue;
        }
        // interval width in x units: 2^{e+1-k}
        if (e as f64 + 1.0 - k as f64) < min_width_log2 {
            return Err(Error::Arithmetic(format!(
                "roots closer than 2^{min_width_log2:.1}; polynomial is not squarefree to working tolerance"
            )));
        }
        // left half: 2^d Q(t/2)
        let mut left: Vec<Integer> = q
            .iter()
            .enumerate()
            .map(|(i, x)| Integer::from(x << (d - i) as u32))
            .collect();
        let mid_val: Integer = left.iter().sum();
        let mut right = left.clone();
        taylor_shift_one(&mut right);
        strip_power_of_two(&mut left);
        strip_power_of_two(&mut right);
        let c2 = Integer::from(&c << 1);
        if mid_val == 0 {
            let slope: Integer = q
                .iter()
                .enumerate()
                .map(|(i, x)| Integer::from(x * i as u32) << (d - i) as u32)
                .sum();
            if slope == 0 {
                return Err(Error::Arithmetic("repeated root at a dyadic point".into()));
            }
            found.push((Integer::from(&c2 + 1), k + 1, true));
        }
        stack.push((right, Integer::from(&c2 + 1), k + 1));
        stack.push((left, c2, k + 1));
    }

    // back to x: x = 2^{e+1} t - 2^e, t = c/2^k
    let mut out: Vec<DyadicInterval> = found
        .into_iter()
        .map(|(c, k, exact)| {
            let shift = |t: Integer| -> Integer {
                // x * 2^k = 2^{e+1} t - 2^{e+k}
                Integer::from(t << (e + 1)) - (Integer::from(1) << (e + k))
            };
            let lo = shift(c.clone());
            let hi = if exact { lo.clone() } else { shift(c + 1) };
            let mut iv = DyadicInterval { lo, hi, scale: k };
            normalize(&mut iv);
            iv
        })
        .collect();
    out.sort_by(|a, b| {
        let s = a.scale.max(b.scale);
        let al = Integer::from(&a.lo << (s - a.scale));
        let bl = Integer::from(&b.lo << (s - b.scale));
        al.cmp(&bl)
    });
    Ok(out)
}

fn normalize(iv: &mut DyadicInterval) {
    while iv.scale > 0 && iv.lo.is_even() && iv.hi.is_even() {
        iv.lo >>= 1;
        iv.hi >>= 1;
        iv.scale -= 1;
    }
}

/// Bisects an isolating interval of `p` until its width is at most `2^max_width_log2`.
pub fn refine(p: &[Integer], iv: &DyadicInterval, max_width_log2: f64) -> DyadicInterval {
    let mut iv = iv.clone();
    if iv.lo == iv.hi {
        return iv;
    }
    // a root on the closed end belongs to the neighbouring interval; the sign
    // just inside is then read off the derivative
    let mut s_lo = sign_at(p, &iv.lo, iv.scale);
    if s_lo == 0 {
        s_lo = sign_at(&derivative(p), &iv.lo, iv.scale);
    }
    while iv.width_log2() > max_width_log2 {
        if Integer::from(&iv.lo + &iv.hi).is_odd() {
            iv.rescale(iv.scale + 1);
        }
        let mid = Integer::from(&iv.lo + &iv.hi) >> 1;
        let s = sign_at(p, &mid, iv.scale);
        if s == 0 {
            return DyadicInterval {
                lo: mid.clone(),
                hi: mid,
                scale: iv.scale,
            };
        }
        if s == s_lo {
            iv.lo = mid;
        } else {
            iv.hi = mid;
        }
    }
    iv
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly_from_roots(roots: &[i64]) -> Vec<Integer> {
        let mut c = vec![Integer::from(1)];
        for &r in roots {
            let mut next = vec![Integer::new(); c.len() + 1];
            for (i, x) in c.iter().enumerate() {
                next[i + 1] += x;
                next[i] -= Integer::from(x * r);
            }
            c = next;
        }
        c
    }

    #[test]
    fn integer_roots_are_found_in_order() {
        let roots = [-1000, -3, 0, 2, 7, 123456];
        let p = poly_from_roots(&roots);
        let ivs = isolate_real_roots(&p, -80.0).unwrap();
        assert_eq!(ivs.len(), roots.len());
        for (iv, &r) in ivs.iter().zip(&roots) {
            let fine = refine(&p, iv, -40.0);
            assert!((fine.mid_f64() - r as f64).abs() < 1e-9, "{r}: {}", fine.mid_f64());
        }
    }

    #[test]
    fn irrational_roots() {
        // x^2 - 2 and x^3 - 3x + 1, whose roots are 2cos(2πj/9)
        let p = vec![Integer::from(-2), Integer::new(), Integer::from(1)];
        let ivs = isolate_real_roots(&p, -80.0).unwrap();
        assert_eq!(ivs.len(), 2);
        let r = refine(&p, &ivs[1], -60.0).mid_f64();
        assert!((r - 2f64.sqrt()).abs() < 1e-15);

        let p = vec![Integer::from(1), Integer::from(-3), Integer::new(), Integer::from(1)];
        let ivs = isolate_real_roots(&p, -80.0).unwrap();
        assert_eq!(ivs.len(), 3);
        let mut expect: Vec<f64> = [2.0, 4.0, 8.0]
            .iter()
            .map(|j: &f64| 2.0 * (std::f64::consts::PI * j / 9.0).cos())
            .collect();
        expect.sort_by(f64::total_cmp);
        for (iv, e) in ivs.iter().zip(expect) {
            assert!((refine(&p, iv, -60.0).mid_f64() - e).abs() < 1e-14);
        }
    }

    #[test]
    fn complex_roots_are_ignored() {
        // (x^2 + 1)(x - 5)
        let p = vec![Integer::from(-5), Integer::from(1), Integer::from(-5), Integer::from(1)];
        let ivs = isolate_real_roots(&p, -80.0).unwrap();
        assert_eq!(ivs.len(), 1);
        assert!((refine(&p, &ivs[0], -50.0).mid_f64() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn repeated_root_is_reported() {
        let p = poly_from_roots(&[3, 3, 1]);
        assert!(isolate_real_roots(&p, -40.0).is_err());
    }

    #[test]
    fn close_roots_separate() {
        // roots 1 and 1 + 2^-30 : (2^30 x - 2^30)(2^30 x - 2^30 - 1)
        let a = Integer::from(1) << 30u32;
        let a = Integer::from(a);
        let b = Integer::from(&a + 1);
        let p = vec![
            Integer::from(&a * &b),
            -Integer::from(&a * &a) - Integer::from(&a * &b),
            Integer::from(&a * &a),
        ];
        let ivs = isolate_real_roots(&p, -64.0).unwrap();
        assert_eq!(ivs.len(), 2);
    }
}
