//! Composite Gauss–Legendre quadrature with panel doubling.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Single application on `[a, b]`.
    pub fn apply<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }

    /// Composite rule with `panels` equal sub-intervals.
    pub fn composite<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, panels: usize, mut f: F) -> f64 {
        let h = (b - a) / panels as f64;
        (0..panels)
            .map(|j| {
                let lo = a + h * j as f64;
                self.apply(lo, lo + h, &mut f)
            })
            .sum()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let d = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Points per panel used by [`integrate`].
pub const PANEL_ORDER: usize = 16;

/// Outcome of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub value: f64,
    /// Total number of function evaluations in the accepted rule.
    pub nodes: usize,
    /// Change produced by the last doubling.
    pub last_shift: f64,
}

/// Settings for [`integrate`]: start size, stop tolerance and the failure threshold.
#[derive(Debug, Clone, Copy)]
pub struct DoublingPolicy {
    pub start_nodes: usize,
    pub tolerance: f64,
    pub failure: f64,
    pub max_doublings: u32,
}

impl Default for DoublingPolicy {
    fn default() -> Self {
        Self {
            start_nodes: 256,
            tolerance: 1e-10,
            failure: 1e-8,
            max_doublings: 12,
        }
    }
}

impl DoublingPolicy {
    pub fn with_start(start_nodes: usize) -> Self {
        Self {
            start_nodes,
            ..Self::default()
        }
    }
}

/// Integrates `f` over `[a, b]`, doubling the panel count until two successive
/// values differ by at most `tolerance` (absolute, scaled by `max(1, |value|)`).
pub fn integrate<F: FnMut(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    policy: DoublingPolicy,
) -> Result<Quadrature> {
    let rule = GaussLegendre::new(PANEL_ORDER);
    integrate_with(&rule, f, a, b, policy)
}

pub fn integrate_with<F: FnMut(f64) -> f64>(
    rule: &GaussLegendre,
    mut f: F,
    a: f64,
    b: f64,
    policy: DoublingPolicy,
) -> Result<Quadrature> {
    let mut panels = policy.start_nodes.div_ceil(rule.len()).max(1);
    let mut prev = rule.composite(a, b, panels, &mut f);
    let mut shift = f64::INFINITY;
    for _ in 0..policy.max_doublings {
        panels *= 2;
        let next = rule.composite(a, b, panels, &mut f);
        shift = (next - prev).abs();
        prev = next;
        if shift <= policy.tolerance * next.abs().max(1.0) {
            return Ok(Quadrature {
                value: next,
                nodes: panels * rule.len(),
                last_shift: shift,
            });
        }
    }
    if shift <= policy.failure * prev.abs().max(1.0) {
        Ok(Quadrature {
            value: prev,
            nodes: panels * rule.len(),
            last_shift: shift,
        })
    } else {
        Err(Error::QuadratureNotConverged {
            shift,
            tolerance: policy.failure,
        })
    }
}
