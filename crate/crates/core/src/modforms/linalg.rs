//! Exact integer matrices and their characteristic polynomials.
//!
//! The characteristic polynomial is computed by Hessenberg reduction modulo
//! word-sized primes and reassembled by Chinese remaindering against a bound
//! on the size of its coefficients.

use rug::Integer;

/// Dense square matrix over the integers, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntMatrix {
    pub dim: usize,
    pub entries: Vec<Integer>,
}

impl IntMatrix {
    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            entries: vec![Integer::new(); dim * dim],
        }
    }

    pub fn from_rows(rows: Vec<Vec<Integer>>) -> Self {
        let dim = rows.len();
        assert!(rows.iter().all(|r| r.len() == dim), "matrix must be square");
        Self {
            dim,
            entries: rows.into_iter().flatten().collect(),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> &Integer {
        &self.entries[i * self.dim + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Integer) {
        self.entries[i * self.dim + j] = v;
    }

    pub fn trace(&self) -> Integer {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn mul_vec(&self, v: &[Integer]) -> Vec<Integer> {
        (0..self.dim)
            .map(|i| {
                let mut acc = Integer::new();
                for (j, x) in v.iter().enumerate() {
                    acc += self.get(i, j) * x;
                }
                acc
            })
            .collect()
    }

    /// Largest absolute row sum, an upper bound for every eigenvalue.
    pub fn row_sum_norm(&self) -> Integer {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| Integer::from(self.get(i, j).abs_ref())).sum::<Integer>())
            .max()
            .unwrap_or_default()
    }

    pub fn col_sum_norm(&self) -> Integer {
        (0..self.dim)
            .map(|j| (0..self.dim).map(|i| Integer::from(self.get(i, j).abs_ref())).sum::<Integer>())
            .max()
            .unwrap_or_default()
    }

    /// Frobenius norm as a float, for residual scaling.
    pub fn frobenius_f64(&self) -> f64 {
        self.entries
            .iter()
            .map(|x| x.to_f64().powi(2))
            .sum::<f64>()
            .sqrt()
    }

    fn reduce_mod(&self, p: u32) -> Vec<u64> {
        self.entries.iter().map(|x| x.mod_u(p) as u64).collect()
    }
}

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % m;
        }
        b = b * b % m;
        e >>= 1;
    }
    r
}

fn inv_mod(a: u64, p: u64) -> u64 {
    pow_mod(a, p - 2, p)
}

fn is_prime_u32(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    for &a in &[2u64, 3, 5, 7] {
        if n as u64 == a {
            return true;
        }
        if n as u64 % a == 0 {
            return false;
        }
    }
    let n = n as u64;
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    // deterministic for n < 3.2e9
    'outer: for &a in &[2u64, 3, 5, 7] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = x * x % n;
            if x == n - 1 {
                continue 'outer;
            }
        }
        return false;
    }
    true
}

/// Primes just below 2^31, largest first.
struct PrimeStream {
    next: u32,
}

impl PrimeStream {
    fn new() -> Self {
        Self { next: (1u32 << 31) - 1 }
    }
}

impl Iterator for PrimeStream {
    type Item = u32;
    fn next(&mut self) -> Option<u32> {
        while self.next > 3 {
            let c = self.next;
            self.next -= 2;
            if is_prime_u32(c) {
                return Some(c);
            }
        }
        None
    }
}

/// Characteristic polynomial of `a` modulo the prime `p`, low degree first, monic.
pub fn charpoly_mod(a: &[u64], n: usize, p: u64) -> Vec<u64> {
    let mut h = a.to_vec();
    let at = |i: usize, j: usize| i * n + j;
    // similarity reduction to upper Hessenberg form
    for m in 1..n.saturating_sub(1) {
        let Some(piv) = (m..n).find(|&i| h[at(i, m - 1)] != 0) else {
            continue;
        };
        if piv != m {
            for j in 0..n {
                h.swap(at(piv, j), at(m, j));
            }
            for i in 0..n {
                h.swap(at(i, piv), at(i, m));
            }
        }
        let inv = inv_mod(h[at(m, m - 1)], p);
        for i in m + 1..n {
            let u = h[at(i, m - 1)] * inv % p;
            if u == 0 {
                continue;
            }
            for j in 0..n {
                let t = u * h[at(m, j)] % p;
                h[at(i, j)] = (h[at(i, j)] + p - t) % p;
            }
            for r in 0..n {
                let t = u * h[at(r, i)] % p;
                h[at(r, m)] = (h[at(r, m)] + t) % p;
            }
        }
    }
    // p_m(x) = (x - h_mm) p_{m-1} - sum_i h_{m-i,m} (prod subdiag) p_{m-i-1}
    let mut polys: Vec<Vec<u64>> = vec![vec![1]];
    for m in 0..n {
        let prev = &polys[m];
        let mut next = vec![0u64; m + 2];
        for (d, &c) in prev.iter().enumerate() {
            next[d + 1] = (next[d + 1] + c) % p;
            next[d] = (next[d] + p - c * h[at(m, m)] % p) % p;
        }
        let mut t = 1u64;
        for i in 1..=m {
            t = t * h[at(m - i + 1, m - i)] % p;
            let coef = h[at(m - i, m)] * t % p;
            if coef == 0 {
                continue;
            }
            for (d, &c) in polys[m - i].iter().enumerate() {
                next[d] = (next[d] + p - coef * c % p) % p;
            }
        }
        polys.push(next);
    }
    polys.pop().unwrap()
}

/// Exact characteristic polynomial `det(xI - M)`, coefficients low degree first.
pub fn charpoly(m: &IntMatrix) -> Vec<Integer> {
    let n = m.dim;
    if n == 0 {
        return vec![Integer::from(1)];
    }
    let norm = m.row_sum_norm().min(m.col_sum_norm()).max(Integer::from(1));
    // |c_{n-i}| <= C(n, i) R^i <= (2R)^n
    let bound_bits = n as u32 * (norm.significant_bits() + 1) + 2;

    let mut coeffs = vec![Integer::new(); n + 1];
    let mut modulus = Integer::from(1);
    for p in PrimeStream::new() {
        let red = m.reduce_mod(p);
        let cp = charpoly_mod(&red, n, p as u64);
        let pm = modulus.mod_u(p) as u64;
        let inv = inv_mod(pm, p as u64);
        for (c, &r) in coeffs.iter_mut().zip(&cp) {
            let cur = c.mod_u(p) as u64;
            let t = (r + p as u64 - cur) % p as u64 * inv % p as u64;
            if t != 0 {
                *c += Integer::from(&modulus * t);
            }
        }
        modulus *= p;
        if modulus.significant_bits() > bound_bits + 1 {
            break;
        }
    }
    let half = Integer::from(&modulus >> 1);
    for c in &mut coeffs {
        if *c > half {
            *c -= &modulus;
        }
    }
    coeffs
}

/// Determinant by fraction-free elimination.
pub fn determinant(m: &IntMatrix) -> Integer {
    let n = m.dim;
    if n == 0 {
        return Integer::from(1);
    }
    let mut a = m.entries.clone();
    let mut sign = 1;
    let mut prev = Integer::from(1);
    for k in 0..n - 1 {
        if a[k * n + k] == 0 {
            let Some(r) = (k + 1..n).find(|&r| a[r * n + k] != 0) else {
                return Integer::new();
            };
            for j in 0..n {
                a.swap(k * n + j, r * n + j);
            }
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = Integer::from(&a[i * n + j] * &a[k * n + k])
                    - Integer::from(&a[i * n + k] * &a[k * n + j]);
                a[i * n + j] = v.div_exact(&prev);
            }
        }
        prev = a[k * n + k].clone();
    }
    let d = a[n * n - 1].clone();
    if sign < 0 {
        -d
    } else {
        d
    }
}

/// `P(x)` for an integer polynomial given low degree first.
pub fn eval_poly(c: &[Integer], x: &Integer) -> Integer {
    let mut acc = Integer::new();
    for coef in c.iter().rev() {
        acc *= x;
        acc += coef;
    }
    acc
}
