//! The Hardy-weighted integral ∫ |u|^q / |x|^s dx for radial functions.
//!
//! On a grid the rule is composite product integration: |u|^q is
//! interpolated linearly on each cell and integrated against the exact
//! moments of r^{N-1-s}, so the weight is never evaluated at r = 0 and
//! constants integrate exactly.

use crate::error::{Error, Result};
use crate::gamma::sphere_area;
use crate::quad;
use crate::radial::{RadialFunction, RadialGrid};

fn check_s(s: f64) -> Result<()> {
    if !(0.0..=2.0).contains(&s) {
        return Err(Error::InvalidParams {
            field: "s",
            message: format!("weight exponent s must lie in [0, 2], got {s}"),
        });
    }
    Ok(())
}

/// Coefficients c_i with  ∫ |u|^q / |x|^s dx  ~  sum_i c_i |u_i|^q.
///
/// Each cell contributes its two exact weight moments split between the
/// endpoints; all coefficients are nonnegative.
pub fn hardy_weight_coeffs(grid: &RadialGrid, s: f64) -> Result<Vec<f64>> {
    check_s(s)?;
    let n = f64::from(grid.dim);
    let omega = sphere_area(grid.dim);
    let r = grid.nodes();
    let m = r.len();
    let e0 = n - s; // exponent of the first moment integral
    let mut coeffs = vec![0.0; m];
    for i in 0..m - 1 {
        let (a, b) = (r[i], r[i + 1]);
        let h = b - a;
        let m0 = (b.powf(e0) - a.powf(e0)) / e0;
        let m1 = (b.powf(e0 + 1.0) - a.powf(e0 + 1.0)) / (e0 + 1.0);
        // linear hat contributions: (b - r)/h toward node i, (r - a)/h toward i+1
        coeffs[i] += omega * (b * m0 - m1) / h;
        coeffs[i + 1] += omega * (m1 - a * m0) / h;
    }
    Ok(coeffs)
}

/// ∫ |u|^q / |x|^s dx for a sampled radial function.
pub fn hardy_weighted_integral(u: &RadialFunction, q: f64, s: f64) -> Result<f64> {
    if !(q >= 1.0) {
        return Err(Error::InvalidParams {
            field: "q",
            message: format!("q must be >= 1, got {q}"),
        });
    }
    let coeffs = hardy_weight_coeffs(&u.grid, s)?;
    Ok(coeffs
        .iter()
        .zip(&u.values)
        .map(|(c, v)| c * v.abs().powf(q))
        .sum())
}

/// Same integral for an explicit profile by adaptive quadrature on [0, R].
pub fn hardy_weighted_integral_profile<F>(f: F, q: f64, s: f64, dim: u32, r_max: f64, rel_tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    check_s(s)?;
    let n = f64::from(dim);
    let omega = sphere_area(dim);
    let g = |r: f64| {
        if r <= 0.0 {
            0.0
        } else {
            f(r).abs().powf(q) * r.powf(n - 1.0 - s)
        }
    };
    // dyadic splits toward the origin so profile structure at any scale
    // (bubble cores) is resolved
    let mut acc = 0.0;
    let mut hi = r_max;
    let floor = r_max * 2f64.powi(-60);
    while hi > floor {
        let lo = 0.5 * hi;
        acc += quad::integrate(&g, lo, hi, rel_tol)?;
        hi = lo;
    }
    Ok(omega * acc)
}
