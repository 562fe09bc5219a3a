//! The two explicit extremal families ("bubbles"), their rescalings and
//! smooth cutoffs.
//!
//! Radial profiles on R^N:
//!   Hardy-Sobolev family   U_s(r) = (k (N-s)(N-2))^{(N-2)/(2(2-s))} (k + r^{2-s})^{-(N-2)/(2-s)}
//!   Aubin-Talenti bubble   U(r)   = [N(N-2)]^{(N-2)/4} (1 + r^2)^{-(N-2)/2}
//! with the invariant rescaling U_eps(r) = eps^{-(N-2)/2} U(r/eps).

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::radial::{RadialFunction, RadialGrid};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum BubbleFamily {
    /// Minimizer of the Hardy-Sobolev quotient; requires s < 2.
    HardySobolev { s: f64, k: f64 },
    /// Minimizer of the Sobolev quotient.
    AubinTalenti,
}

impl BubbleFamily {
    pub fn validate(&self, dim: u32) -> Result<()> {
        if dim < 3 {
            return Err(Error::InvalidParams {
                field: "N",
                message: format!("dimension must be >= 3, got {dim}"),
            });
        }
        if let BubbleFamily::HardySobolev { s, k } = self {
            if !(0.0..2.0).contains(s) {
                return Err(Error::InvalidParams {
                    field: "s",
                    message: format!("the Hardy-Sobolev family needs s in [0, 2), got {s}"),
                });
            }
            if !(*k > 0.0) {
                return Err(Error::InvalidParams {
                    field: "k",
                    message: format!("k must be positive, got {k}"),
                });
            }
        }
        Ok(())
    }
}

/// Unscaled profile value at radius r >= 0.
pub fn profile_value(dim: u32, family: BubbleFamily, r: f64) -> f64 {
    let n = f64::from(dim);
    match family {
        BubbleFamily::AubinTalenti => {
            let amp = (n * (n - 2.0)).powf((n - 2.0) / 4.0);
            amp * (1.0 + r * r).powf(-(n - 2.0) / 2.0)
        }
        BubbleFamily::HardySobolev { s, k } => {
            let amp = (k * (n - s) * (n - 2.0)).powf((n - 2.0) / (2.0 * (2.0 - s)));
            amp * (k + r.powf(2.0 - s)).powf(-(n - 2.0) / (2.0 - s))
        }
    }
}

/// Unscaled profile derivative dU/dr.
///
/// For the Hardy-Sobolev family with s > 1 the derivative has an
/// integrable cusp at the origin; r = 0 returns 0 there by convention
/// (the weight r^{N-1} kills the node in every quadrature).
pub fn profile_derivative(dim: u32, family: BubbleFamily, r: f64) -> f64 {
    let n = f64::from(dim);
    match family {
        BubbleFamily::AubinTalenti => {
            let amp = (n * (n - 2.0)).powf((n - 2.0) / 4.0);
            -amp * (n - 2.0) * r * (1.0 + r * r).powf(-n / 2.0)
        }
        BubbleFamily::HardySobolev { s, k } => {
            if r == 0.0 {
                return 0.0;
            }
            let amp = (k * (n - s) * (n - 2.0)).powf((n - 2.0) / (2.0 * (2.0 - s)));
            -amp * (n - 2.0) * r.powf(1.0 - s) * (k + r.powf(2.0 - s)).powf(-(n - s) / (2.0 - s))
        }
    }
}

/// Rescaled value eps^{-(N-2)/2} U(r/eps).
pub fn uncut_value(dim: u32, family: BubbleFamily, eps: f64, r: f64) -> f64 {
    let n = f64::from(dim);
    eps.powf(-(n - 2.0) / 2.0) * profile_value(dim, family, r / eps)
}

/// Rescaled derivative d/dr of `uncut_value`.
pub fn uncut_derivative(dim: u32, family: BubbleFamily, eps: f64, r: f64) -> f64 {
    let n = f64::from(dim);
    eps.powf(-n / 2.0) * profile_derivative(dim, family, r / eps)
}

/// Right-hand side of the Euler-Lagrange equation the rescaled profile
/// satisfies:  u'' + (N-1)/r u' + rhs = 0.
pub fn euler_lagrange_rhs(dim: u32, family: BubbleFamily, eps: f64, r: f64) -> f64 {
    let n = f64::from(dim);
    let u = uncut_value(dim, family, eps, r);
    match family {
        BubbleFamily::AubinTalenti => u.powf((n + 2.0) / (n - 2.0)),
        BubbleFamily::HardySobolev { s, .. } => {
            let exponent = 2.0 * (n - s) / (n - 2.0) - 1.0;
            u.powf(exponent) / r.powf(s)
        }
    }
}

/// Quintic smoothstep cutoff: identically 1 on [0, inner], 0 beyond
/// outer, C^2 across both joints with values in [0, 1].
pub fn cutoff_value(inner: f64, outer: f64, r: f64) -> f64 {
    if r <= inner {
        1.0
    } else if r >= outer {
        0.0
    } else {
        let t = (r - inner) / (outer - inner);
        1.0 - t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
    }
}

pub fn cutoff_derivative(inner: f64, outer: f64, r: f64) -> f64 {
    if r <= inner || r >= outer {
        0.0
    } else {
        let w = outer - inner;
        let t = (r - inner) / w;
        -30.0 * t * t * (1.0 - t) * (1.0 - t) / w
    }
}

/// A cutoff, rescaled bubble: psi(r) * eps^{-(N-2)/2} U(r/eps).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BubbleSpec {
    #[serde(flatten)]
    pub family: BubbleFamily,
    pub epsilon: f64,
    pub cutoff_inner: f64,
    pub cutoff_outer: f64,
}

impl BubbleSpec {
    /// Standard construction: plateau up to rho, support up to 2 rho.
    pub fn new(family: BubbleFamily, epsilon: f64, rho: f64) -> Self {
        BubbleSpec {
            family,
            epsilon,
            cutoff_inner: rho,
            cutoff_outer: 2.0 * rho,
        }
    }

    pub fn validate(&self, dim: u32, domain_radius: f64) -> Result<()> {
        self.family.validate(dim)?;
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidParams {
                field: "epsilon",
                message: format!("bubble scale must be positive, got {}", self.epsilon),
            });
        }
        if !(self.cutoff_inner > 0.0 && self.cutoff_inner < self.cutoff_outer) {
            return Err(Error::InvalidParams {
                field: "cutoff_inner",
                message: format!(
                    "need 0 < inner < outer, got inner {} outer {}",
                    self.cutoff_inner, self.cutoff_outer
                ),
            });
        }
        if self.cutoff_outer > domain_radius * (1.0 + 1e-12) {
            return Err(Error::InvalidParams {
                field: "cutoff_outer",
                message: format!(
                    "cutoff support must fit in the ball: outer {} > R {}",
                    self.cutoff_outer, domain_radius
                ),
            });
        }
        Ok(())
    }

    pub fn value(&self, dim: u32, r: f64) -> f64 {
        let psi = cutoff_value(self.cutoff_inner, self.cutoff_outer, r);
        if psi == 0.0 {
            0.0
        } else {
            psi * uncut_value(dim, self.family, self.epsilon, r)
        }
    }

    pub fn derivative(&self, dim: u32, r: f64) -> f64 {
        let psi = cutoff_value(self.cutoff_inner, self.cutoff_outer, r);
        if psi == 0.0 {
            return 0.0;
        }
        let dpsi = cutoff_derivative(self.cutoff_inner, self.cutoff_outer, r);
        dpsi * uncut_value(dim, self.family, self.epsilon, r) + psi * uncut_derivative(dim, self.family, self.epsilon, r)
    }
}

/// Sample a cutoff bubble on a grid.
pub fn eval_bubble(spec: &BubbleSpec, grid: Arc<RadialGrid>) -> Result<RadialFunction> {
    spec.validate(grid.dim, grid.radius)?;
    let dim = grid.dim;
    Ok(RadialFunction::from_profile(grid, |r| spec.value(dim, r), true))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial::make_grid;
    use approx::assert_relative_eq;

    #[test]
    fn hardy_sobolev_center_value() {
        // (k (N-s)(N-2))^{(N-2)/(2(2-s))} at N=3, s=1, k=1 is sqrt(2)
        let f = BubbleFamily::HardySobolev { s: 1.0, k: 1.0 };
        assert_relative_eq!(profile_value(3, f, 0.0), 2.0f64.sqrt(), max_relative = 1e-15);
    }

    #[test]
    fn aubin_talenti_center_value() {
        // [N(N-2)]^{(N-2)/4} at N=3 is 3^{1/4}
        assert_relative_eq!(
            profile_value(3, BubbleFamily::AubinTalenti, 0.0),
            3.0f64.powf(0.25),
            max_relative = 1e-15
        );
    }

    #[test]
    fn cutoff_kills_tail() {
        let grid = make_grid(3, 1.0, 128, 2.0).unwrap();
        let spec = BubbleSpec::new(BubbleFamily::AubinTalenti, 0.3, 0.25);
        let u = eval_bubble(&spec, Arc::clone(&grid)).unwrap();
        for (r, v) in grid.nodes().iter().zip(&u.values) {
            assert!(*v >= 0.0);
            if *r >= 0.5 {
                assert_eq!(*v, 0.0, "support must end at 2 rho");
            }
        }
    }

    #[test]
    fn profiles_monotone_on_plateau() {
        let grid = make_grid(3, 1.0, 256, 2.0).unwrap();
        for family in [
            BubbleFamily::AubinTalenti,
            BubbleFamily::HardySobolev { s: 0.5, k: 1.0 },
            BubbleFamily::HardySobolev { s: 1.5, k: 3.0 },
        ] {
            let spec = BubbleSpec::new(family, 0.2, 0.25);
            let u = eval_bubble(&spec, Arc::clone(&grid)).unwrap();
            let mut prev = f64::INFINITY;
            for (r, v) in grid.nodes().iter().zip(&u.values) {
                if *r <= 0.25 {
                    assert!(*v <= prev + 1e-14, "profile must be radially nonincreasing");
                    prev = *v;
                }
            }
        }
    }

    #[test]
    fn rejects_s_equal_two() {
        let f = BubbleFamily::HardySobolev { s: 2.0, k: 1.0 };
        assert!(f.validate(3).is_err());
    }

    #[test]
    fn rejects_cutoff_outside_domain() {
        let grid = make_grid(3, 1.0, 64, 2.0).unwrap();
        let spec = BubbleSpec::new(BubbleFamily::AubinTalenti, 0.3, 0.6);
        assert!(eval_bubble(&spec, grid).is_err());
    }

    #[test]
    fn cutoff_smoothstep_shape() {
        assert_eq!(cutoff_value(0.25, 0.5, 0.1), 1.0);
        assert_eq!(cutoff_value(0.25, 0.5, 0.7), 0.0);
        let mid = cutoff_value(0.25, 0.5, 0.375);
        assert_relative_eq!(mid, 0.5, max_relative = 1e-12);
        // derivative consistent with a central difference
        let d = cutoff_derivative(0.25, 0.5, 0.31);
        let fd = (cutoff_value(0.25, 0.5, 0.31 + 1e-6) - cutoff_value(0.25, 0.5, 0.31 - 1e-6)) / 2e-6;
        assert_relative_eq!(d, fd, max_relative = 1e-8);
    }
}
