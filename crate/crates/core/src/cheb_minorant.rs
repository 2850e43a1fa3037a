//! The sharply peaked trigonometric polynomial built from the Chebyshev
//! polynomial of the first kind:
//!
//! ```text
//! f(θ) = e^{-iπLθ} T_L(cos(πθ)/cos(πδ)) / T_L(1/cos(πδ)) = Σ_{ℓ=0}^{L} c_ℓ e(-ℓθ)
//! ```
//!
//! `f(0) = 1 = max|f|`, and `|f| ≤ 2e^{-πLδ}` on `[δ, 1-δ]`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate, DoublingPolicy};

/// Imaginary parts above this mean the evaluation is wrong; anything smaller is dropped.
const IMAG_FATAL: f64 = 1e-9;

/// `T_L(x)` from the trigonometric/hyperbolic closed forms.
pub fn cheb_t(degree: u32, x: f64) -> f64 {
    let l = degree as f64;
    if x.abs() <= 1.0 {
        (l * x.acos()).cos()
    } else {
        let v = (l * x.abs().acosh()).cosh();
        if x < 0.0 && degree % 2 == 1 {
            -v
        } else {
            v
        }
    }
}

/// `T_L(y) / T_L(big)` for `big > 1`, without forming either factor when they overflow.
fn cheb_ratio(degree: u32, y: f64, big: f64) -> f64 {
    let l = degree as f64;
    let a_big = big.acosh();
    let damp_big = (-2.0 * l * a_big).exp();
    if y.abs() <= 1.0 {
        (l * y.acos()).cos() * 2.0 * (-l * a_big).exp() / (1.0 + damp_big)
    } else {
        let a = y.abs().acosh();
        let sign = if y < 0.0 && degree % 2 == 1 { -1.0 } else { 1.0 };
        sign * (l * (a - a_big)).exp() * (1.0 + (-2.0 * l * a).exp()) / (1.0 + damp_big)
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta <= 0.5 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "delta must lie in (0, 1/2], got {delta}"
        )))
    }
}

fn check_degree(degree: u32) -> Result<()> {
    if degree == 0 {
        return Err(Error::InvalidArgument("degree L must be positive".into()));
    }
    Ok(())
}

/// Evaluates `f(θ)` from the closed form.
pub fn minorant_eval(degree: u32, delta: f64, theta: f64) -> Result<Complex64> {
    check_degree(degree)?;
    check_delta(delta)?;
    Ok(eval_closed(degree, delta, theta))
}

fn eval_closed(degree: u32, delta: f64, theta: f64) -> Complex64 {
    let c = (PI * delta).cos();
    let big = 1.0 / c;
    let ratio = cheb_ratio(degree, (PI * theta).cos() * big, big);
    Complex64::from_polar(1.0, -PI * degree as f64 * theta) * ratio
}

/// The polynomial in coefficient form, together with the parameters it was built from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinorantPolynomial {
    pub degree: u32,
    pub delta: f64,
    /// `c_0..c_L`, coefficients of `e(-ℓθ)`.
    pub coeffs: Vec<f64>,
}

impl MinorantPolynomial {
    /// `Σ c_ℓ e(-ℓθ)`.
    pub fn eval(&self, theta: f64) -> Complex64 {
        // Horner in z = e(-θ)
        let z = Complex64::from_polar(1.0, -2.0 * PI * theta);
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    /// Closed-form value, which agrees with [`Self::eval`] up to rounding.
    pub fn eval_closed(&self, theta: f64) -> Complex64 {
        eval_closed(self.degree, self.delta, theta)
    }

    pub fn coeff_sum(&self) -> f64 {
        self.coeffs.iter().sum()
    }

    /// `Σ |c_ℓ|²`, which equals `∫₀¹ |f|²` by Parseval.
    pub fn l2_from_coeffs(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }

    /// The tail bound `2e^{-πLδ}`.
    pub fn decay_bound(&self) -> f64 {
        2.0 * (-PI * self.degree as f64 * self.delta).exp()
    }
}

/// Recovers `c_0..c_L` from `L+1` equispaced samples by an inverse DFT.
pub fn minorant_coeffs(degree: u32, delta: f64) -> Result<MinorantPolynomial> {
    check_degree(degree)?;
    check_delta(delta)?;
    let n = degree as usize + 1;
    let samples: Vec<Complex64> = (0..n)
        .map(|j| eval_closed(degree, delta, j as f64 / n as f64))
        .collect();
    let mut coeffs = Vec::with_capacity(n);
    for l in 0..n {
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, s) in samples.iter().enumerate() {
            // e(+ℓθ_j); the index product is reduced mod n to keep the angle small
            let phase = 2.0 * PI * ((l * j) % n) as f64 / n as f64;
            acc += s * Complex64::from_polar(1.0, phase);
        }
        acc /= n as f64;
        if acc.im.abs() > IMAG_FATAL {
            return Err(Error::ComplexCoefficient {
                index: l,
                imag: acc.im,
            });
        }
        coeffs.push(acc.re);
    }
    Ok(MinorantPolynomial {
        degree,
        delta,
        coeffs,
    })
}

/// Largest imaginary part seen while extracting coefficients; exposed for diagnostics.
pub fn max_imaginary_residue(degree: u32, delta: f64) -> Result<f64> {
    check_degree(degree)?;
    check_delta(delta)?;
    let n = degree as usize + 1;
    let samples: Vec<Complex64> = (0..n)
        .map(|j| eval_closed(degree, delta, j as f64 / n as f64))
        .collect();
    let mut worst: f64 = 0.0;
    for l in 0..n {
        let acc: Complex64 = samples
            .iter()
            .enumerate()
            .map(|(j, s)| s * Complex64::from_polar(1.0, 2.0 * PI * ((l * j) % n) as f64 / n as f64))
            .sum::<Complex64>()
            / n as f64;
        worst = worst.max(acc.im.abs());
    }
    Ok(worst)
}

/// Grid certification of the tail bound and the symmetry `|f(θ)| = |f(-θ)|`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PeakDecayReport {
    pub bound: f64,
    /// Grid maximum of the closed form, whose rounding error scales with the value itself.
    pub max_on_tail: f64,
    /// Grid maximum of the coefficient form in `f64`; floored by rounding near `1e-15`.
    pub coefficient_max_on_tail: f64,
    /// Grid spacing times the Bernstein bound `|f'| ≤ 2πL max|f|`, halved.
    pub derivative_slack: f64,
    pub symmetry_defect: f64,
    /// Grid maximum is below the bound.
    pub pass: bool,
    /// Grid maximum plus slack is below the bound.
    pub certified: bool,
}

pub fn verify_peak_decay(poly: &MinorantPolynomial, grid_points: usize) -> Result<PeakDecayReport> {
    verify_peak_decay_scaled(poly, grid_points, 1.0)
}

/// As [`verify_peak_decay`], with the bound multiplied by `bound_scale`
/// (used to exercise the failure path).
pub fn verify_peak_decay_scaled(
    poly: &MinorantPolynomial,
    grid_points: usize,
    bound_scale: f64,
) -> Result<PeakDecayReport> {
    let min_points = 10 * poly.degree as usize;
    if grid_points < min_points.max(2) {
        return Err(Error::InvalidArgument(format!(
            "grid needs at least 10·L = {min_points} points, got {grid_points}"
        )));
    }
    let bound = poly.decay_bound() * bound_scale;
    let lo = poly.delta;
    let hi = 1.0 - poly.delta;
    let h = (hi - lo) / (grid_points - 1) as f64;
    let mut max_on_tail: f64 = 0.0;
    let mut coefficient_max_on_tail: f64 = 0.0;
    let mut symmetry_defect: f64 = 0.0;
    for i in 0..grid_points {
        let theta = lo + h * i as f64;
        let v = poly.eval(theta).norm();
        max_on_tail = max_on_tail.max(poly.eval_closed(theta).norm());
        coefficient_max_on_tail = coefficient_max_on_tail.max(v);
        symmetry_defect = symmetry_defect.max((v - poly.eval(-theta).norm()).abs());
    }
    let derivative_slack = PI * poly.degree as f64 * h;
    Ok(PeakDecayReport {
        bound,
        max_on_tail,
        coefficient_max_on_tail,
        derivative_slack,
        symmetry_defect,
        pass: max_on_tail <= bound,
        certified: max_on_tail + derivative_slack <= bound,
    })
}

/// `∫₀¹ |f|²` and `∫₀^{1/2} |f|² sin²(2πθ)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct L2Bounds {
    pub plain_l2: f64,
    pub weighted_l2: f64,
    /// `1/(L+1)`.
    pub plain_floor: f64,
    /// `weighted_l2 · L³`, the empirical constant behind the `≫ 1/L³` bound.
    pub weighted_constant: f64,
    pub plain_ok: bool,
    pub weighted_ok: bool,
    pub nodes_used: usize,
}

/// Slack granted to `plain_l2 ≥ 1/(L+1)`; equality holds exactly at `L = 1`.
pub const PLAIN_L2_SLACK: f64 = 1e-12;

pub fn l2_lower_bounds(poly: &MinorantPolynomial, quad_nodes: usize) -> Result<L2Bounds> {
    let policy = DoublingPolicy::with_start(quad_nodes.max(16));
    let plain = integrate(|t| poly.eval_closed(t).norm_sqr(), 0.0, 1.0, policy)?;
    let weighted = integrate(
        |t| poly.eval_closed(t).norm_sqr() * (2.0 * PI * t).sin().powi(2),
        0.0,
        0.5,
        policy,
    )?;
    let l = poly.degree as f64;
    let plain_floor = 1.0 / (l + 1.0);
    let weighted_constant = weighted.value * l.powi(3);
    Ok(L2Bounds {
        plain_l2: plain.value,
        weighted_l2: weighted.value,
        plain_floor,
        weighted_constant,
        plain_ok: plain.value >= plain_floor - PLAIN_L2_SLACK,
        weighted_ok: weighted.value > 0.0,
        nodes_used: plain.nodes.max(weighted.nodes),
    })
}

/// Full certification record for one `(L, δ)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertificationReport {
    #[serde(rename = "L")]
    pub degree: u32,
    pub delta: f64,
    pub bound: f64,
    pub max_on_tail: f64,
    pub coefficient_max_on_tail: f64,
    pub plain_l2: f64,
    pub weighted_l2: f64,
    pub parseval_defect: f64,
    pub symmetry_defect: f64,
    pub pass: bool,
    pub f0_error: f64,
    pub sup_on_circle: f64,
    pub weighted_constant: f64,
    pub derivative_slack: f64,
}

/// Options for [`certify`].
#[derive(Debug, Clone, Copy)]
pub struct CertifyOptions {
    /// Tail grid has `grid_density · 10 · L` points (and at least 1000).
    pub grid_density: usize,
    pub quad_nodes: usize,
    /// Points on `[0, 1)` for the `|f| ≤ 1` check.
    pub circle_points: usize,
    pub bound_scale: f64,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self {
            grid_density: 10,
            quad_nodes: 512,
            circle_points: 10_000,
            bound_scale: 1.0,
        }
    }
}

pub const F0_TOLERANCE: f64 = 1e-12;
pub const PARSEVAL_TOLERANCE: f64 = 1e-9;
pub const SYMMETRY_TOLERANCE: f64 = 1e-10;
pub const SUP_TOLERANCE: f64 = 1e-10;

pub fn certify(degree: u32, delta: f64, opts: CertifyOptions) -> Result<CertificationReport> {
    let poly = minorant_coeffs(degree, delta)?;
    let grid = (opts.grid_density * 10 * degree as usize).max(1000);
    let decay = verify_peak_decay_scaled(&poly, grid, opts.bound_scale)?;
    let l2 = l2_lower_bounds(&poly, opts.quad_nodes)?;
    let f0_error = (poly.eval(0.0) - Complex64::new(1.0, 0.0)).norm();
    let sup_on_circle = (0..opts.circle_points)
        .map(|i| poly.eval(i as f64 / opts.circle_points as f64).norm())
        .fold(0.0, f64::max);
    let parseval_defect = (poly.l2_from_coeffs() - l2.plain_l2).abs();
    let pass = f0_error <= F0_TOLERANCE
        && decay.pass
        && l2.plain_ok
        && l2.weighted_ok
        && parseval_defect <= PARSEVAL_TOLERANCE
        && decay.symmetry_defect <= SYMMETRY_TOLERANCE
        && sup_on_circle <= 1.0 + SUP_TOLERANCE;
    Ok(CertificationReport {
        degree,
        delta,
        bound: decay.bound,
        max_on_tail: decay.max_on_tail,
        coefficient_max_on_tail: decay.coefficient_max_on_tail,
        plain_l2: l2.plain_l2,
        weighted_l2: l2.weighted_l2,
        parseval_defect,
        symmetry_defect: decay.symmetry_defect,
        pass,
        f0_error,
        sup_on_circle,
        weighted_constant: l2.weighted_constant,
        derivative_slack: decay.derivative_slack,
    })
}

/// The `(L, δ)` matrix used for certification runs.
pub const DEFAULT_DEGREES: [u32; 7] = [1, 2, 4, 8, 16, 32, 64];
pub const DEFAULT_DELTAS: [f64; 5] = [0.02, 0.05, 0.1, 0.25, 0.5];
