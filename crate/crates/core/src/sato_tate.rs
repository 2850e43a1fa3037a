//! `g(θ) = |f(θ/2π)|²` and its two expansions: the Fourier series
//! `Σ_{|ℓ|≤L} b_ℓ e^{iℓθ}` and the Sato–Tate series `Σ_{ℓ≤L} a_ℓ X_ℓ(θ)` with
//! `X_n(θ) = sin((n+1)θ)/sin θ`.
//!
//! The `a_ℓ` are computed twice: by the telescoping identity
//! `a_ℓ = b_ℓ - b_{ℓ+2}` (from `X_ℓ = Σ_{m≡ℓ (2), |m|≤ℓ} e^{imθ}`) and by
//! integrating `g X_ℓ` against the Sato–Tate measure.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cheb_minorant::MinorantPolynomial;
use crate::error::{Error, Result};
use crate::quadrature::{integrate, DoublingPolicy};

/// Below this `|sin θ|` the removable singularity of `X_n` is handled by a series.
const SINGULAR_SWITCH: f64 = 1e-6;
const B_IMAG_TOLERANCE: f64 = 1e-12;

/// `g(θ) = |f(θ/2π)|²`.
pub fn g_eval(poly: &MinorantPolynomial, theta: f64) -> f64 {
    poly.eval_closed(theta / (2.0 * PI)).norm_sqr()
}

/// `b_0..b_L` from `b_ℓ = Σ_{ℓ₂-ℓ₁=ℓ} c_{ℓ₁} conj(c_{ℓ₂})`.
pub fn fourier_coeffs_b(poly: &MinorantPolynomial) -> Result<Vec<f64>> {
    let c: Vec<Complex64> = poly.coeffs.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    let n = c.len();
    let mut out = Vec::with_capacity(n);
    for l in 0..n {
        let b: Complex64 = (0..n - l).map(|l1| c[l1] * c[l1 + l].conj()).sum();
        if b.im.abs() > B_IMAG_TOLERANCE {
            return Err(Error::ComplexCoefficient {
                index: l,
                imag: b.im,
            });
        }
        out.push(b.re);
    }
    Ok(out)
}

/// `X_n(θ) = sin((n+1)θ)/sin θ`, with the limits `n+1` at `θ = 0` and
/// `(-1)^n (n+1)` at `θ = π`.
pub fn cheb_x(n: u32, theta: f64) -> f64 {
    let m = (n + 1) as f64;
    let t = theta.rem_euclid(2.0 * PI);
    let s = t.sin();
    if s.abs() >= SINGULAR_SWITCH {
        return (m * t).sin() / s;
    }
    // distance to the nearest multiple of π, and the sign picked up there
    let (u, sign) = if t < PI / 2.0 {
        (t, 1.0)
    } else if t < 1.5 * PI {
        (t - PI, if n % 2 == 0 { 1.0 } else { -1.0 })
    } else {
        (t - 2.0 * PI, 1.0)
    };
    if u == 0.0 {
        return sign * m;
    }
    // sin u = u(1 - u²/6) to the order that matters here
    sign * (m * u).sin() / (u * (1.0 - u * u / 6.0))
}

/// `a_ℓ = b_ℓ - b_{ℓ+2}` with `b` taken as zero past its end.
pub fn a_coeffs_recurrence(b: &[f64]) -> Vec<f64> {
    (0..b.len())
        .map(|l| b[l] - b.get(l + 2).copied().unwrap_or(0.0))
        .collect()
}

/// `a_ℓ = (2/π) ∫₀^π g(θ) X_ℓ(θ) sin²θ dθ`.
pub fn a_coeffs_quadrature(poly: &MinorantPolynomial, ell: u32) -> Result<f64> {
    let m = (ell + 1) as f64;
    // g X_ℓ sin²θ = g sin((ℓ+1)θ) sin θ, which has no singularity
    let start = 64 * (poly.degree as usize + ell as usize + 2);
    let q = integrate(
        |t| g_eval(poly, t) * (m * t).sin() * t.sin(),
        0.0,
        PI,
        DoublingPolicy::with_start(start.max(256)),
    )?;
    Ok(2.0 / PI * q.value)
}

/// The measure `(2/π) sin²θ dθ` on `[0, π]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct SatoTateMeasure;

impl SatoTateMeasure {
    pub fn density(&self, theta: f64) -> f64 {
        2.0 / PI * theta.sin().powi(2)
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, start_nodes: usize) -> Result<f64> {
        let q = integrate(
            |t| f(t) * self.density(t),
            0.0,
            PI,
            DoublingPolicy {
                tolerance: 1e-13,
                ..DoublingPolicy::with_start(start_nodes)
            },
        )?;
        Ok(q.value)
    }

    pub fn total_mass(&self) -> Result<f64> {
        self.integrate(|_| 1.0, 64)
    }
}

/// `∫ X_m X_n dμ_ST` for `0 ≤ m, n ≤ size-1`.
pub fn gram_matrix(size: u32) -> Result<Vec<Vec<f64>>> {
    let mut g = vec![vec![0.0; size as usize]; size as usize];
    for m in 0..size {
        for n in m..size {
            // X_m X_n sin² = sin((m+1)θ) sin((n+1)θ)
            let v = integrate(
                |t| ((m + 1) as f64 * t).sin() * ((n + 1) as f64 * t).sin(),
                0.0,
                PI,
                DoublingPolicy {
                    tolerance: 1e-13,
                    ..DoublingPolicy::with_start(256)
                },
            )?
            .value
                * 2.0
                / PI;
            g[m as usize][n as usize] = v;
            g[n as usize][m as usize] = v;
        }
    }
    Ok(g)
}

/// Largest entry of `|Gram - I|`.
pub fn gram_defect(size: u32) -> Result<f64> {
    let g = gram_matrix(size)?;
    let mut worst: f64 = 0.0;
    for (i, row) in g.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let want = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((v - want).abs());
        }
    }
    Ok(worst)
}

/// Fourier and Sato–Tate coefficients of `g`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChebyshevExpansion {
    pub degree: u32,
    pub fourier_b: Vec<f64>,
    pub sato_tate_a: Vec<f64>,
}

impl ChebyshevExpansion {
    pub fn from_poly(poly: &MinorantPolynomial) -> Result<Self> {
        let b = fourier_coeffs_b(poly)?;
        let a = a_coeffs_recurrence(&b);
        Ok(Self {
            degree: poly.degree,
            fourier_b: b,
            sato_tate_a: a,
        })
    }

    /// `b_0 + 2 Σ_{ℓ≥1} b_ℓ cos(ℓθ)`.
    pub fn eval_fourier(&self, theta: f64) -> f64 {
        self.fourier_b
            .iter()
            .enumerate()
            .map(|(l, b)| if l == 0 { *b } else { 2.0 * b * (l as f64 * theta).cos() })
            .sum()
    }

    /// `Σ a_ℓ X_ℓ(θ)`.
    pub fn eval_chebyshev(&self, theta: f64) -> f64 {
        self.sato_tate_a
            .iter()
            .enumerate()
            .map(|(l, a)| a * cheb_x(l as u32, theta))
            .sum()
    }

    pub fn a0(&self) -> f64 {
        self.sato_tate_a[0]
    }

    /// `|a_ℓ| ≤ 1 + 1e-10` and `a_ℓ = b_ℓ - b_{ℓ+2}`.
    pub fn check_invariants(&self) -> bool {
        let telescoped = a_coeffs_recurrence(&self.fourier_b);
        self.sato_tate_a.iter().all(|a| a.abs() <= 1.0 + 1e-10)
            && telescoped
                .iter()
                .zip(&self.sato_tate_a)
                .all(|(x, y)| (x - y).abs() <= 1e-15)
    }
}

/// Consistency numbers attached to an expansion dump.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExpansionChecks {
    /// max over `ℓ ≤ L` of |recurrence − quadrature|.
    pub two_route_defect: f64,
    /// max over `L < ℓ ≤ L+5` of |quadrature a_ℓ|.
    pub tail_max: f64,
    /// Gram matrix defect of `X_0..X_12`.
    pub gram_defect: f64,
    /// max |g − Σ a_ℓ X_ℓ| and |g − Σ b_ℓ e^{iℓθ}| on a 1000-point grid of `[0, π]`.
    pub reconstruction_defect: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExpansionDump {
    #[serde(rename = "L")]
    pub degree: u32,
    pub delta: f64,
    pub b: Vec<f64>,
    pub a: Vec<f64>,
    pub a0: f64,
    pub a_quadrature: Vec<f64>,
    pub checks: ExpansionChecks,
}

pub const GRAM_SIZE: u32 = 13;

/// Builds the expansion and runs both routes against each other.
pub fn expansion_dump(poly: &MinorantPolynomial) -> Result<ExpansionDump> {
    let exp = ChebyshevExpansion::from_poly(poly)?;
    let l = poly.degree;
    let mut a_quad = Vec::with_capacity(l as usize + 6);
    for ell in 0..=l + 5 {
        a_quad.push(a_coeffs_quadrature(poly, ell)?);
    }
    let two_route_defect = exp
        .sato_tate_a
        .iter()
        .zip(&a_quad)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    let tail_max = a_quad[l as usize + 1..]
        .iter()
        .map(|x| x.abs())
        .fold(0.0, f64::max);
    let reconstruction_defect = (0..=1000)
        .map(|i| {
            let t = PI * i as f64 / 1000.0;
            let g = g_eval(poly, t);
            (g - exp.eval_chebyshev(t)).abs().max((g - exp.eval_fourier(t)).abs())
        })
        .fold(0.0, f64::max);
    Ok(ExpansionDump {
        degree: l,
        delta: poly.delta,
        a0: exp.a0(),
        b: exp.fourier_b,
        a: exp.sato_tate_a,
        a_quadrature: a_quad,
        checks: ExpansionChecks {
            two_route_defect,
            tail_max,
            gram_defect: gram_defect(GRAM_SIZE)?,
            reconstruction_defect,
        },
    })
}
