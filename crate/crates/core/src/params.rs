//! Problem instance, derived exponents, and the existence-regime classifier.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance used when deciding whether an exponent sits exactly
/// on a critical value. Regime boundaries must be deterministic in
/// floating point, so the band is fixed here rather than configurable.
pub const EXPONENT_EQ_TOL: f64 = 1e-9;

pub(crate) fn nearly_equal(a: f64, b: f64) -> bool {
    (a - b).abs() <= EXPONENT_EQ_TOL * a.abs().max(b.abs()).max(1.0)
}

/// The tuple (N, alpha, s, p, q, lambda, mu) plus the ball radius.
///
/// Single source of truth for a problem instance
///   -Δu = λ (|x|^{-α} * |u|^p) |u|^{p-2} u + μ |u|^{q-2} u / |x|^s
/// on B(0, R) with zero boundary values.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ProblemParams {
    #[serde(rename = "N")]
    pub dim: u32,
    pub alpha: f64,
    pub s: f64,
    pub p: f64,
    pub q: f64,
    #[serde(rename = "lambda")]
    pub lambda: f64,
    pub mu: f64,
    #[serde(default = "default_radius")]
    pub radius: f64,
}

fn default_radius() -> f64 {
    1.0
}

impl ProblemParams {
    pub fn new(dim: u32, alpha: f64, s: f64, p: f64, q: f64, lambda: f64, mu: f64, radius: f64) -> Result<Self> {
        let params = ProblemParams {
            dim,
            alpha,
            s,
            p,
            q,
            lambda,
            mu,
            radius,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |field: &'static str, message: String| Err(Error::InvalidParams { field, message });
        if self.dim < 3 {
            return fail("N", format!("dimension must be >= 3, got {}", self.dim));
        }
        if !(self.alpha > 0.0 && self.alpha < f64::from(self.dim)) {
            return fail("alpha", format!("alpha must lie in (0, N) = (0, {}), got {}", self.dim, self.alpha));
        }
        if !(0.0..=2.0).contains(&self.s) {
            return fail("s", format!("s must lie in [0, 2], got {}", self.s));
        }
        let exps = DerivedExponents::from_raw(self.dim, self.alpha, self.s);
        if !(self.p > 1.0 && (self.p <= exps.upper_critical || nearly_equal(self.p, exps.upper_critical))) {
            return fail(
                "p",
                format!("p must lie in (1, (2N-alpha)/(N-2)] = (1, {}], got {}", exps.upper_critical, self.p),
            );
        }
        if !(self.q >= 2.0 && (self.q <= exps.hardy_sobolev || nearly_equal(self.q, exps.hardy_sobolev))) {
            return fail(
                "q",
                format!("q must lie in [2, 2(N-s)/(N-2)] = [2, {}], got {}", exps.hardy_sobolev, self.q),
            );
        }
        if !(self.lambda > 0.0) {
            return fail("lambda", format!("lambda must be > 0, got {}", self.lambda));
        }
        if !(self.mu > 0.0) {
            return fail("mu", format!("mu must be > 0, got {}", self.mu));
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return fail("radius", format!("radius must be a positive real, got {}", self.radius));
        }
        Ok(())
    }

    pub fn exponents(&self) -> DerivedExponents {
        DerivedExponents::from_raw(self.dim, self.alpha, self.s)
    }

    /// p sits on the upper critical exponent (2N-alpha)/(N-2).
    pub fn p_is_critical(&self) -> bool {
        nearly_equal(self.p, self.exponents().upper_critical)
    }

    /// q sits on the Hardy-Sobolev exponent 2(N-s)/(N-2).
    pub fn q_is_critical(&self) -> bool {
        nearly_equal(self.q, self.exponents().hardy_sobolev)
    }
}

/// All exponents derived from (N, alpha, s).
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct DerivedExponents {
    /// (2N - alpha) / (N - 2)
    pub upper_critical: f64,
    /// (2N - alpha) / N
    pub lower_critical: f64,
    /// 2 (N - s) / (N - 2)
    pub hardy_sobolev: f64,
    /// 2N / (N - 2)
    pub sobolev: f64,
    /// (N - 2)^2 / 4
    pub hardy_best: f64,
}

impl DerivedExponents {
    fn from_raw(dim: u32, alpha: f64, s: f64) -> Self {
        let n = f64::from(dim);
        DerivedExponents {
            upper_critical: (2.0 * n - alpha) / (n - 2.0),
            lower_critical: (2.0 * n - alpha) / n,
            hardy_sobolev: 2.0 * (n - s) / (n - 2.0),
            sobolev: 2.0 * n / (n - 2.0),
            hardy_best: (n - 2.0) * (n - 2.0) / 4.0,
        }
    }
}

/// Derive all critical exponents for a problem instance.
pub fn derive_exponents(params: &ProblemParams) -> Result<DerivedExponents> {
    params.validate()?;
    Ok(params.exponents())
}

/// Which parameter a "sufficiently large" existence case refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LargeParameter {
    Lambda,
    Mu,
}

/// Existence-theorem case labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CaseId {
    #[serde(rename = "1")]
    Case1,
    #[serde(rename = "2")]
    Case2,
    #[serde(rename = "3i")]
    Case3i,
    #[serde(rename = "3ii")]
    Case3ii,
    #[serde(rename = "4i")]
    Case4i,
    #[serde(rename = "4ii")]
    Case4ii,
    #[serde(rename = "4iii")]
    Case4iii,
    #[serde(rename = "4iv")]
    Case4iv,
    #[serde(rename = "uncovered")]
    Uncovered,
}

impl CaseId {
    pub fn as_str(&self) -> &'static str {
        match self {
            CaseId::Case1 => "1",
            CaseId::Case2 => "2",
            CaseId::Case3i => "3i",
            CaseId::Case3ii => "3ii",
            CaseId::Case4i => "4i",
            CaseId::Case4ii => "4ii",
            CaseId::Case4iii => "4iii",
            CaseId::Case4iv => "4iv",
            CaseId::Uncovered => "uncovered",
        }
    }
}

/// Result of the regime classification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeCase {
    pub case_id: CaseId,
    /// Set for the cases that require a coupling to be "sufficiently
    /// large"; the classifier never resolves that to a number.
    pub requires_large_parameter: Option<LargeParameter>,
}

impl RegimeCase {
    fn plain(case_id: CaseId) -> Self {
        RegimeCase {
            case_id,
            requires_large_parameter: None,
        }
    }

    pub fn is_covered(&self) -> bool {
        self.case_id != CaseId::Uncovered
    }
}

/// Classify a problem instance into the existence cases.
///
/// Total and deterministic: exactly one case is returned for every valid
/// parameter tuple, with `Uncovered` as the catch-all (in particular for
/// the doubly critical situation p = (2N-alpha)/(N-2), q = 2(N-s)/(N-2)).
pub fn classify_regime(params: &ProblemParams) -> RegimeCase {
    let exps = params.exponents();
    let n = params.dim;
    let p_crit = params.p_is_critical();
    let q_crit = params.q_is_critical();
    let p_subcrit = !p_crit && params.p < exps.upper_critical;
    let q_subcrit = !q_crit && params.q < exps.hardy_sobolev;
    let q_above_2 = params.q > 2.0 && !nearly_equal(params.q, 2.0);
    let s_is_2 = nearly_equal(params.s, 2.0);

    // (1) both exponents strictly subcritical, q > 2
    if p_subcrit && q_above_2 && q_subcrit {
        return RegimeCase::plain(CaseId::Case1);
    }

    // (2) s = 2 (so q = 2 = 2*(2)) with mu below the Hardy constant
    if s_is_2 && nearly_equal(params.q, 2.0) && p_subcrit {
        if params.mu < exps.hardy_best {
            return RegimeCase::plain(CaseId::Case2);
        }
        return RegimeCase::plain(CaseId::Uncovered);
    }

    // (3) critical Hardy-Sobolev exponent, subcritical p
    if q_crit && q_above_2 && p_subcrit {
        let p_threshold = exps.upper_critical - 1.0;
        if params.p > p_threshold && !nearly_equal(params.p, p_threshold) {
            return RegimeCase::plain(CaseId::Case3i);
        }
        if params.alpha <= 4.0 {
            return RegimeCase {
                case_id: CaseId::Case3ii,
                requires_large_parameter: Some(LargeParameter::Lambda),
            };
        }
        return RegimeCase::plain(CaseId::Uncovered);
    }

    // (4) critical convolution exponent, subcritical q > 2
    if p_crit && q_above_2 && q_subcrit {
        let q_low = exps.hardy_sobolev - 2.0;
        if n == 3 {
            if params.s < 1.0 && !nearly_equal(params.s, 1.0) {
                if params.q > q_low && !nearly_equal(params.q, q_low) {
                    return RegimeCase::plain(CaseId::Case4i);
                }
                return RegimeCase {
                    case_id: CaseId::Case4ii,
                    requires_large_parameter: Some(LargeParameter::Mu),
                };
            }
            // 1 <= s < 2
            if params.s < 2.0 && !s_is_2 {
                return RegimeCase::plain(CaseId::Case4iii);
            }
            return RegimeCase::plain(CaseId::Uncovered);
        }
        // N >= 4 requires 0 < s < 2
        if params.s > 0.0 && !nearly_equal(params.s, 0.0) && params.s < 2.0 && !s_is_2 {
            return RegimeCase::plain(CaseId::Case4iv);
        }
        return RegimeCase::plain(CaseId::Uncovered);
    }

    RegimeCase::plain(CaseId::Uncovered)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params(dim: u32, alpha: f64, s: f64, p: f64, q: f64, lambda: f64, mu: f64) -> ProblemParams {
        ProblemParams::new(dim, alpha, s, p, q, lambda, mu, 1.0).unwrap()
    }

    #[test]
    fn exponents_n3_alpha1() {
        let e = derive_exponents(&params(3, 1.0, 0.5, 3.0, 4.0, 1.0, 1.0)).unwrap();
        assert_relative_eq!(e.upper_critical, 5.0, max_relative = 1e-15);
        assert_relative_eq!(e.lower_critical, 5.0 / 3.0, max_relative = 1e-15);
    }

    #[test]
    fn hardy_sobolev_exponent_limits() {
        let e = derive_exponents(&params(3, 1.0, 0.0, 3.0, 4.0, 1.0, 1.0)).unwrap();
        assert_relative_eq!(e.hardy_sobolev, 6.0, max_relative = 1e-15);
        assert_relative_eq!(e.sobolev, 6.0, max_relative = 1e-15);
        let e2 = derive_exponents(&params(5, 1.0, 2.0, 3.0, 2.0, 1.0, 1.0)).unwrap();
        assert_relative_eq!(e2.hardy_sobolev, 2.0, max_relative = 1e-15);
    }

    #[test]
    fn hardy_best_n4() {
        let e = derive_exponents(&params(4, 1.0, 1.0, 2.0, 3.0, 1.0, 1.0)).unwrap();
        assert_relative_eq!(e.hardy_best, 1.0, max_relative = 1e-15);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(ProblemParams::new(2, 0.5, 0.0, 2.0, 3.0, 1.0, 1.0, 1.0).is_err());
        assert!(ProblemParams::new(3, 0.0, 0.0, 2.0, 3.0, 1.0, 1.0, 1.0).is_err());
        assert!(ProblemParams::new(3, 3.0, 0.0, 2.0, 3.0, 1.0, 1.0, 1.0).is_err());
        assert!(ProblemParams::new(3, 1.0, 2.5, 2.0, 3.0, 1.0, 1.0, 1.0).is_err());
        assert!(ProblemParams::new(3, 1.0, 0.0, 1.0, 3.0, 1.0, 1.0, 1.0).is_err());
        assert!(ProblemParams::new(3, 1.0, 0.0, 5.5, 3.0, 1.0, 1.0, 1.0).is_err());
        assert!(ProblemParams::new(3, 1.0, 0.0, 2.0, 6.5, 1.0, 1.0, 1.0).is_err());
        assert!(ProblemParams::new(3, 1.0, 0.0, 2.0, 3.0, 0.0, 1.0, 1.0).is_err());
        assert!(ProblemParams::new(3, 1.0, 0.0, 2.0, 3.0, 1.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn classify_examples() {
        // both subcritical
        let c = classify_regime(&params(3, 1.0, 0.5, 3.0, 4.0, 1.0, 1.0));
        assert_eq!(c.case_id, CaseId::Case1);
        assert_eq!(c.requires_large_parameter, None);

        // s = 2 with mu below the Hardy constant (mu_bar = 1 at N = 4)
        let c = classify_regime(&params(4, 1.0, 2.0, 2.0, 2.0, 1.0, 0.5));
        assert_eq!(c.case_id, CaseId::Case2);

        // critical p, N = 3, s = 1
        let c = classify_regime(&params(3, 1.0, 1.0, 5.0, 3.0, 1.0, 1.0));
        assert_eq!(c.case_id, CaseId::Case4iii);
    }

    #[test]
    fn classify_large_parameter_cases() {
        // q = 2*(s) with small p --> lambda must be large
        let c = classify_regime(&params(3, 1.0, 0.0, 2.0, 6.0, 1.0, 1.0));
        assert_eq!(c.case_id, CaseId::Case3ii);
        assert_eq!(c.requires_large_parameter, Some(LargeParameter::Lambda));

        // p critical, N = 3, s < 1, small q --> mu must be large
        let c = classify_regime(&params(3, 1.0, 0.5, 5.0, 2.5, 1.0, 1.0));
        assert_eq!(c.case_id, CaseId::Case4ii);
        assert_eq!(c.requires_large_parameter, Some(LargeParameter::Mu));

        // p critical, N = 3, s < 1, q above 2*(s) - 2
        let c = classify_regime(&params(3, 1.0, 0.5, 5.0, 4.0, 1.0, 1.0));
        assert_eq!(c.case_id, CaseId::Case4i);
    }

    #[test]
    fn classify_uncovered() {
        // doubly critical: p = (2N-alpha)/(N-2) and q = 2(N-s)/(N-2)
        let c = classify_regime(&params(3, 1.0, 1.0, 5.0, 4.0, 1.0, 1.0));
        assert_eq!(c.case_id, CaseId::Uncovered);

        // s = 2 with mu at/above the Hardy constant
        let c = classify_regime(&params(4, 1.0, 2.0, 2.0, 2.0, 1.0, 1.0));
        assert_eq!(c.case_id, CaseId::Uncovered);

        // q = 2 with s < 2 is not covered
        let c = classify_regime(&params(3, 1.0, 0.0, 2.0, 2.0, 1.0, 1.0));
        assert_eq!(c.case_id, CaseId::Uncovered);

        // p critical at N = 4 needs s strictly inside (0, 2)
        let c = classify_regime(&params(4, 2.0, 0.0, 3.0, 3.0, 1.0, 1.0));
        assert_eq!(c.case_id, CaseId::Uncovered);
    }

    #[test]
    fn alpha_above_4_with_critical_q_is_case_3i() {
        // for alpha > 4 the upper critical exponent is below 2, so any
        // admissible p already sits above upper_critical - 1
        let c = classify_regime(&params(6, 5.0, 1.0, 1.5, 2.5, 1.0, 1.0));
        assert_eq!(c.case_id, CaseId::Case3i);
    }
}
