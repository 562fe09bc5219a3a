//! Adaptive 1D quadrature on finite and semi-infinite intervals.
//!
//! Panels use nested Gauss-Legendre rules (7 and 15 points) with the
//! difference as the error estimate and recursive bisection. Node/weight
//! pairs are computed at startup by Newton iteration on the Legendre
//! polynomials rather than typed in from tables.

use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Gauss-Legendre nodes and weights on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    pub fn new(n: usize) -> Self {
        assert!(n >= 2);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n {
            // Chebyshev-like initial guess, then Newton on P_n(x) = 0
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
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
            nodes[n - 1 - i] = x;
            weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        GaussRule { nodes, weights }
    }

    /// Apply the rule on [a, b].
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: &F, a: f64, b: f64) -> f64 {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(c + h * x);
        }
        acc * h
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

fn rule7() -> &'static GaussRule {
    static RULE: OnceLock<GaussRule> = OnceLock::new();
    RULE.get_or_init(|| GaussRule::new(7))
}

fn rule15() -> &'static GaussRule {
    static RULE: OnceLock<GaussRule> = OnceLock::new();
    RULE.get_or_init(|| GaussRule::new(15))
}

const MAX_DEPTH: u32 = 60;

fn adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32, err_acc: &mut f64) -> f64 {
    let coarse = rule7().integrate(f, a, b);
    let fine = rule15().integrate(f, a, b);
    let err = (fine - coarse).abs();
    if err <= tol || depth >= MAX_DEPTH {
        *err_acc += err;
        return fine;
    }
    let m = 0.5 * (a + b);
    adaptive(f, a, m, 0.5 * tol, depth + 1, err_acc) + adaptive(f, m, b, 0.5 * tol, depth + 1, err_acc)
}

/// Integrate f over [a, b] to relative tolerance `rel_tol`.
///
/// Integrable endpoint singularities are handled by the bisection (panels
/// shrink geometrically toward the singular point).
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let scale = rule15().integrate(&f, a, b).abs().max(1e-300);
    let tol_abs = rel_tol * scale;
    let mut err = 0.0;
    let val = adaptive(&f, a, b, tol_abs, 0, &mut err);
    let achieved = err / val.abs().max(scale);
    if achieved > 10.0 * rel_tol && err > 1e-290 {
        return Err(Error::Quadrature {
            requested: rel_tol,
            achieved,
        });
    }
    Ok(val)
}

/// Integrate f over [a, +inf) by dyadically widening panels.
///
/// The integrand must decay fast enough for the tail panels to become
/// negligible; panels stop once three consecutive contributions fall
/// below the relative tolerance.
pub fn integrate_to_inf<F: Fn(f64) -> f64>(f: F, a: f64, rel_tol: f64) -> Result<f64> {
    let mut lo = a;
    let mut width = a.abs().max(1.0);
    let mut acc = 0.0;
    let mut quiet = 0;
    for _ in 0..400 {
        let hi = lo + width;
        let part = integrate(&f, lo, hi, rel_tol)?;
        acc += part;
        if part.abs() <= rel_tol * acc.abs().max(1e-300) {
            quiet += 1;
            if quiet >= 3 {
                return Ok(acc);
            }
        } else {
            quiet = 0;
        }
        lo = hi;
        width *= 2.0;
    }
    Err(Error::Quadrature {
        requested: rel_tol,
        achieved: f64::NAN,
    })
}
