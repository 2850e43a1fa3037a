//! Harmonic weights `ω_f` of level-one eigenforms: by a linear solve against
//! `Σ_f ω_f λ_f(m) = 1_{m=1}`, and independently through the Petersson norm
//! computed by quadrature over the fundamental domain.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modforms::{Eigenform, QSeries};
use crate::quadrature::{GaussLegendre, PANEL_ORDER};

/// Linear systems with a larger condition number are rejected.
pub const MAX_CONDITION: f64 = 1e12;
/// Accepted relative gap between the two routes for one-dimensional spaces.
pub const TWO_ROUTE_BAND: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightMethod {
    LinearSolve,
    Quadrature,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicWeights {
    #[serde(rename = "k")]
    pub weight_k: u32,
    /// Form index to weight.
    pub weights: BTreeMap<usize, f64>,
    pub condition_number: f64,
    pub method: WeightMethod,
    /// `max_m |Σ_f w_f λ_f(m) − 1_{m=1}|` over the solving rows.
    pub solve_residual: f64,
}

impl HarmonicWeights {
    pub fn get(&self, index: usize) -> Option<f64> {
        self.weights.get(&index).copied()
    }

    pub fn total(&self) -> f64 {
        self.weights.values().sum()
    }

    /// `max_f w_f · k/(log k)²`, which stays bounded if `ω_f ≪ (log k)²/k`.
    pub fn scaled_max(&self) -> f64 {
        let k = self.weight_k as f64;
        self.weights.values().copied().fold(f64::MIN, f64::max) * k / k.ln().powi(2)
    }

    /// `Σ_f w_f λ_f(m)`.
    pub fn average(&self, forms: &[Eigenform], m: u64) -> Result<f64> {
        let mut s = 0.0;
        for f in forms {
            let w = self.get(f.index).ok_or_else(|| {
                Error::InvalidArgument(format!("no weight for form {}", f.index))
            })?;
            s += w * f.lambda_at(m)?;
        }
        Ok(s)
    }
}

/// Solves `Σ_f w_f λ_f(m) = 1_{m=1}`, `m = 1..d`, without judging the signs.
pub fn solve_weights(forms: &[Eigenform]) -> Result<HarmonicWeights> {
    let d = forms.len();
    if d == 0 {
        return Err(Error::InvalidArgument("no forms to weight".into()));
    }
    let k = forms[0].weight_k;
    let mut a = DMatrix::<f64>::zeros(d, d);
    for (col, f) in forms.iter().enumerate() {
        for m in 1..=d {
            a[(m - 1, col)] = f.lambda_at(m as u64)?;
        }
    }
    let sv = a.clone().svd(false, false).singular_values;
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(condition <= MAX_CONDITION) {
        return Err(Error::SingularWeights {
            weight: k,
            condition,
        });
    }
    let mut rhs = DVector::<f64>::zeros(d);
    rhs[0] = 1.0;
    let w = a
        .clone()
        .lu()
        .solve(&rhs)
        .ok_or(Error::SingularWeights {
            weight: k,
            condition,
        })?;
    let residual = (&a * &w - &rhs).amax();
    Ok(HarmonicWeights {
        weight_k: k,
        weights: forms.iter().map(|f| f.index).zip(w.iter().copied()).collect(),
        condition_number: condition,
        method: WeightMethod::LinearSolve,
        solve_residual: residual,
    })
}

/// Weights by linear solve; a non-positive weight is an error.
pub fn weights_by_linear_solve(forms: &[Eigenform]) -> Result<HarmonicWeights> {
    let hw = solve_weights(forms)?;
    if let Some((&index, &value)) = hw.weights.iter().find(|(_, w)| **w <= 0.0) {
        return Err(Error::NonPositiveWeight {
            weight: hw.weight_k,
            index,
            value,
        });
    }
    Ok(hw)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub k: u32,
    pub m: u64,
    #[serde(rename = "D")]
    pub defect: f64,
    /// Whether `m` lies outside the solving rows `1..=d`.
    pub held_out: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayScan {
    pub rows: Vec<DecayRow>,
    /// `β` in `D ≈ c k^{−β}`, least squares over all held-out rows with `D > 0`.
    pub beta: Option<f64>,
    /// `(k, max_m D(k, m))` over held-out `m`.
    pub max_by_weight: Vec<(u32, f64)>,
    /// Least-squares `β` fitted to `max_by_weight`.
    pub beta_of_max: Option<f64>,
}

/// `D(k, m) = |Σ_f w_f λ_f(m) − 1_{m=1}|` for each listed `m`.
pub fn decay_rows(
    forms: &[Eigenform],
    weights: &HarmonicWeights,
    m_list: &[u64],
) -> Result<Vec<DecayRow>> {
    let d = forms.len() as u64;
    m_list
        .iter()
        .map(|&m| {
            let avg = weights.average(forms, m)?;
            let target = if m == 1 { 1.0 } else { 0.0 };
            Ok(DecayRow {
                k: weights.weight_k,
                m,
                defect: (avg - target).abs(),
                held_out: m > d,
            })
        })
        .collect()
}

/// Default held-out rows for a space of dimension `d`: `m = d+1, …, d+window`.
pub fn held_out_window(d: usize, window: u64) -> Vec<u64> {
    (d as u64 + 1..=d as u64 + window).collect()
}

fn slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

/// Runs the held-out scan over several weights. Each entry pairs the forms of a
/// weight with the list of `m` to test.
pub fn decay_scan(entries: &[(&[Eigenform], Vec<u64>)]) -> Result<DecayScan> {
    let mut rows = Vec::new();
    let mut max_by_weight = Vec::new();
    for (forms, m_list) in entries {
        if forms.is_empty() {
            continue;
        }
        let w = weights_by_linear_solve(forms)?;
        let r = decay_rows(forms, &w, m_list)?;
        let mx = r
            .iter()
            .filter(|x| x.held_out)
            .map(|x| x.defect)
            .fold(f64::NAN, f64::max);
        if mx.is_finite() {
            max_by_weight.push((w.weight_k, mx));
        }
        rows.extend(r);
    }
    let pooled: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.held_out && r.defect > 0.0)
        .map(|r| ((r.k as f64).ln(), r.defect.ln()))
        .collect();
    let maxes: Vec<(f64, f64)> = max_by_weight
        .iter()
        .filter(|(_, d)| *d > 0.0)
        .map(|&(k, d)| ((k as f64).ln(), d.ln()))
        .collect();
    Ok(DecayScan {
        rows,
        beta: slope(&pooled).map(|s| -s),
        max_by_weight,
        beta_of_max: slope(&maxes).map(|s| -s),
    })
}

/// Settings for the Petersson-norm quadrature.
#[derive(Debug, Clone, Copy)]
pub struct NormOptions {
    /// Height above which the integral is taken analytically.
    pub y_cut: f64,
    /// Gauss–Legendre nodes per dimension in the first pass.
    pub start_nodes: usize,
    pub tolerance: f64,
    pub max_doublings: u32,
    /// Allowed relative size of the discarded q-expansion tail at `y = √3/2`.
    pub truncation_tolerance: f64,
}

impl Default for NormOptions {
    fn default() -> Self {
        Self {
            y_cut: 2.0,
            start_nodes: 32,
            tolerance: 1e-12,
            max_doublings: 6,
            truncation_tolerance: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeterssonNorm {
    pub value: f64,
    /// Part of `value` contributed above `y_cut`.
    pub tail: f64,
    pub nodes_per_dim: usize,
    pub last_shift: f64,
    /// Bound for the discarded coefficients relative to the leading term.
    pub truncation_bound: f64,
}

/// `Σ_{n > n_max} 2√n n^{(k−1)/2} e^{−2πny}`, the discarded part of `|f|` at height `y`
/// under Deligne's bound with `d(n) ≤ 2√n`.
pub fn truncation_bound(k: u32, n_max: usize, y: f64) -> f64 {
    let mut sum = 0.0;
    let mut n = n_max as f64 + 1.0;
    loop {
        let term = (2f64.ln() + (0.5 * k as f64) * n.ln() - 2.0 * PI * n * y).exp();
        sum += term;
        // past the peak the terms shrink geometrically
        if n > 0.5 * k as f64 / (2.0 * PI * y) + 1.0 && term < 1e-30 * sum.max(1e-300) {
            break;
        }
        if term == 0.0 && n > k as f64 {
            break;
        }
        n += 1.0;
    }
    sum
}

/// Smallest truncation whose discarded tail is below `tol` relative to the leading term.
pub fn required_truncation(k: u32, tol: f64) -> usize {
    let y = 3f64.sqrt() / 2.0;
    let lead = (-2.0 * PI * y).exp();
    let mut n = 1;
    while truncation_bound(k, n, y) > tol * lead {
        n += 1;
    }
    n
}

fn ln_factorial(n: u32) -> f64 {
    (2..=n).map(|j| (j as f64).ln()).sum()
}

/// `ln Γ(s, x)` for a positive integer `s`: `Γ(s, x) = (s−1)! e^{−x} Σ_{j<s} x^j/j!`.
pub fn ln_upper_gamma(s: u32, x: f64) -> f64 {
    let terms: Vec<f64> = (0..s)
        .map(|j| -x + j as f64 * x.ln() - ln_factorial(j))
        .collect();
    let mx = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = terms.iter().map(|t| (t - mx).exp()).sum();
    ln_factorial(s - 1) + mx + sum.ln()
}

fn eval_series(a: &[f64], x: f64, y: f64) -> Complex64 {
    let q = Complex64::from_polar((-2.0 * PI * y).exp(), 2.0 * PI * x);
    let mut qn = q;
    let mut s = Complex64::new(0.0, 0.0);
    for &c in a.iter().skip(1) {
        s += qn * c;
        qn *= q;
    }
    s
}

/// `⟨f, f⟩ = ∬_F |f(z)|² y^{k−2} dx dy` for a cusp form with real coefficients
/// `a[n]`, `n = 0..=n_max` (`a[0]` is ignored).
pub fn petersson_norm_coeffs(a: &[f64], k: u32, opts: NormOptions) -> Result<PeterssonNorm> {
    if k > 60 {
        return Err(Error::InvalidArgument(format!(
            "the quadrature route is meant for weights up to 60, got {k}"
        )));
    }
    if opts.y_cut <= 1.0 {
        return Err(Error::InvalidArgument("y_cut must exceed 1".into()));
    }
    let n_max = a.len() - 1;
    let y0 = 3f64.sqrt() / 2.0;
    let bound = truncation_bound(k, n_max, y0);
    let lead = a.get(1).copied().unwrap_or(0.0).abs().max(1.0) * (-2.0 * PI * y0).exp();
    if bound > opts.truncation_tolerance * lead {
        return Err(Error::InvalidArgument(format!(
            "q-expansion truncated at {n_max} leaves a tail of {:.3e} relative to the leading term; need at least {} terms",
            bound / lead,
            required_truncation(k, opts.truncation_tolerance)
        )));
    }

    let rule = GaussLegendre::new(PANEL_ORDER);
    let kk = k as f64 - 2.0;
    let integrand = |x: f64, y: f64| eval_series(a, x, y).norm_sqr() * y.powf(kk);
    let pass = |panels: usize| -> f64 {
        // region below y = 1 bounded by the unit circle, then the strip up to y_cut,
        // on x ∈ [0, 1/2] and doubled by the symmetry x ↦ −x
        let arc = rule.composite(0.0, 0.5, panels, |x| {
            let lo = (1.0 - x * x).sqrt();
            rule.composite(lo, 1.0, panels, |y| integrand(x, y))
        });
        let strip = rule.composite(0.0, 0.5, panels, |x| {
            rule.composite(1.0, opts.y_cut, panels, |y| integrand(x, y))
        });
        2.0 * (arc + strip)
    };
    let mut panels = opts.start_nodes.div_ceil(PANEL_ORDER).max(1);
    let mut prev = pass(panels);
    let mut shift = f64::INFINITY;
    for _ in 0..opts.max_doublings {
        panels *= 2;
        let next = pass(panels);
        shift = (next - prev).abs();
        prev = next;
        if shift <= opts.tolerance * next.abs() {
            break;
        }
    }
    if shift > opts.tolerance * prev.abs() {
        return Err(Error::QuadratureNotConverged {
            shift,
            tolerance: opts.tolerance,
        });
    }
    // ∫_{y_cut}^∞ Σ a(n)² e^{−4πny} y^{k−2} dy = Σ a(n)² Γ(k−1, 4πn y_cut)/(4πn)^{k−1}
    let tail: f64 = a
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, c)| **c != 0.0)
        .map(|(n, c)| {
            let r = 4.0 * PI * n as f64;
            (2.0 * c.abs().ln() + ln_upper_gamma(k - 1, r * opts.y_cut) - (k - 1) as f64 * r.ln())
                .exp()
        })
        .sum();
    Ok(PeterssonNorm {
        value: prev + tail,
        tail,
        nodes_per_dim: panels * PANEL_ORDER,
        last_shift: shift,
        truncation_bound: bound / lead,
    })
}

/// Petersson norm of an exact q-series of weight `k`.
pub fn petersson_norm_quadrature(f: &QSeries, k: u32, opts: NormOptions) -> Result<PeterssonNorm> {
    let a: Vec<f64> = (0..=f.n_max()).map(|n| f.coeff(n).to_f64()).collect();
    petersson_norm_coeffs(&a, k, opts)
}

/// Petersson norm of a normalised eigenform from its eigenvalue table.
pub fn petersson_norm_eigenform(f: &Eigenform, opts: NormOptions) -> Result<PeterssonNorm> {
    let k = f.weight_k;
    let need = required_truncation(k, opts.truncation_tolerance);
    if (f.n_max as usize) < need {
        return Err(Error::InvalidArgument(format!(
            "eigenform stored to n = {}, the quadrature needs {need}",
            f.n_max
        )));
    }
    let table = f.table();
    let a: Vec<f64> = table
        .iter()
        .enumerate()
        .take(need + 1)
        .map(|(n, l)| if n == 0 { 0.0 } else { l * (n as f64).powf(0.5 * (k as f64 - 1.0)) })
        .collect();
    petersson_norm_coeffs(&a, k, opts)
}

/// `ω = Γ(k−1)/((4π)^{k−1} ⟨f, f⟩)` for an eigenform normalised by `a(1) = 1`.
pub fn omega_from_norm(k: u32, norm: f64) -> f64 {
    (ln_factorial(k - 2) - (k - 1) as f64 * (4.0 * PI).ln() - norm.ln()).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoRoute {
    pub k: u32,
    pub linear_solve: f64,
    pub quadrature: f64,
    pub norm: PeterssonNorm,
    /// `|quadrature − linear_solve| / linear_solve`.
    pub relative_gap: f64,
    pub within_band: bool,
}

/// Compares the two routes to `ω_f` for a one-dimensional space.
pub fn two_route(forms: &[Eigenform], opts: NormOptions) -> Result<TwoRoute> {
    if forms.len() != 1 {
        return Err(Error::InvalidArgument(format!(
            "two-route comparison needs a one-dimensional space, got {} forms",
            forms.len()
        )));
    }
    let f = &forms[0];
    let ls = weights_by_linear_solve(forms)?.get(f.index).unwrap_or(f64::NAN);
    let norm = petersson_norm_eigenform(f, opts)?;
    let q = omega_from_norm(f.weight_k, norm.value);
    let gap = (q - ls).abs() / ls.abs();
    Ok(TwoRoute {
        k: f.weight_k,
        linear_solve: ls,
        quadrature: q,
        norm,
        relative_gap: gap,
        within_band: gap <= TWO_ROUTE_BAND,
    })
}
