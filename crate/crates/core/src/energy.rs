//! The energy functional
//!     I(u) = 1/2 ∫|∇u|^2 - λ/(2p) ∫∫ |u|^p |u|^p / |x-y|^α - μ/q ∫ |u|^q/|x|^s,
//! its exact discrete gradient, the fiber maps t -> I(t u), and the
//! mountain-pass geometry certificate.
//!
//! The gradient differentiates the discrete quadratures themselves, so
//! pairing it with any test vector reproduces the directional derivative
//! of the discrete energy to rounding.

use serde::{Deserialize, Serialize};

use crate::constants::SharpConstants;
use crate::error::{Error, Result};
use crate::gamma::sphere_area;
use crate::hardy::{hardy_weight_coeffs, hardy_weighted_integral};
use crate::params::{nearly_equal, ProblemParams};
use crate::radial::{
    derivative_transpose, derivative_values, dirichlet_norm_sq, dirichlet_weights, RadialFunction,
};
use crate::riesz::{riesz_double_integral, KernelMatrix};

/// The three terms of the functional, reported separately.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    /// 1/2 ∫ |∇u|^2
    pub kinetic: f64,
    /// λ/(2p) ∫∫ |u|^p |u|^p / |x-y|^α
    pub nonlocal: f64,
    /// μ/q ∫ |u|^q / |x|^s
    pub hardy: f64,
    /// kinetic - nonlocal - hardy
    pub total: f64,
}

/// Precomputed discrete operators for one (grid, params, kernel) triple.
///
/// Works on raw nodal slices so the solver can avoid re-validating and
/// re-allocating wrappers in its inner loop.
pub struct DiscreteEnergy<'a> {
    pub params: ProblemParams,
    pub kernel: &'a KernelMatrix,
    dirichlet_w: Vec<f64>,
    hardy_c: Vec<f64>,
}

impl<'a> DiscreteEnergy<'a> {
    pub fn new(params: &ProblemParams, kernel: &'a KernelMatrix) -> Result<Self> {
        params.validate()?;
        if !nearly_equal(kernel.alpha, params.alpha) {
            return Err(Error::InvalidParams {
                field: "kernel",
                message: format!(
                    "kernel alpha {} does not match problem alpha {}",
                    kernel.alpha, params.alpha
                ),
            });
        }
        Ok(DiscreteEnergy {
            params: *params,
            kernel,
            dirichlet_w: dirichlet_weights(&kernel.grid),
            hardy_c: hardy_weight_coeffs(&kernel.grid, params.s)?,
        })
    }

    pub fn grid(&self) -> &crate::radial::RadialGrid {
        &self.kernel.grid
    }

    pub fn dirichlet_sq(&self, values: &[f64]) -> f64 {
        let d = derivative_values(&self.kernel.grid, values);
        d.iter().zip(&self.dirichlet_w).map(|(di, wi)| wi * di * di).sum()
    }

    pub fn riesz_term(&self, values: &[f64]) -> f64 {
        let p = self.params.p;
        let v: Vec<f64> = values.iter().map(|x| x.abs().powf(p)).collect();
        let kv = self.kernel.apply(&v);
        v.iter().zip(kv).map(|(a, b)| a * b).sum()
    }

    pub fn hardy_term(&self, values: &[f64]) -> f64 {
        let q = self.params.q;
        self.hardy_c
            .iter()
            .zip(values)
            .map(|(c, v)| c * v.abs().powf(q))
            .sum()
    }

    pub fn breakdown(&self, values: &[f64]) -> EnergyBreakdown {
        let kinetic = 0.5 * self.dirichlet_sq(values);
        let nonlocal = self.params.lambda / (2.0 * self.params.p) * self.riesz_term(values);
        let hardy = self.params.mu / self.params.q * self.hardy_term(values);
        EnergyBreakdown {
            kinetic,
            nonlocal,
            hardy,
            total: kinetic - nonlocal - hardy,
        }
    }

    pub fn total(&self, values: &[f64]) -> f64 {
        self.breakdown(values).total
    }

    /// Exact gradient of the discrete energy with respect to the nodal
    /// values; the boundary entry is pinned to zero (H^1_0 constraint).
    pub fn gradient(&self, values: &[f64]) -> Vec<f64> {
        let (p, q) = (self.params.p, self.params.q);
        let grid = &self.kernel.grid;

        // kinetic: d/du [ 1/2 sum W_i (Du)_i^2 ] = D^T (W . Du)
        let d = derivative_values(grid, values);
        let coeffs: Vec<f64> = d.iter().zip(&self.dirichlet_w).map(|(di, wi)| wi * di).collect();
        let mut g = derivative_transpose(grid, &coeffs);

        // nonlocal: -λ (K|u|^p)_j p |u_j|^{p-1} sgn(u_j) / ... the 2p and
        // the symmetric double sum combine to exactly this factor
        let v: Vec<f64> = values.iter().map(|x| x.abs().powf(p)).collect();
        let kv = self.kernel.apply(&v);
        for ((gj, kvj), &uj) in g.iter_mut().zip(kv).zip(values) {
            if uj != 0.0 {
                *gj -= self.params.lambda * kvj * uj.abs().powf(p - 1.0) * uj.signum();
            }
        }

        // hardy: -μ c_j |u_j|^{q-1} sgn(u_j)
        for ((gj, cj), &uj) in g.iter_mut().zip(&self.hardy_c).zip(values) {
            if uj != 0.0 {
                *gj -= self.params.mu * cj * uj.abs().powf(q - 1.0) * uj.signum();
            }
        }

        *g.last_mut().unwrap() = 0.0;
        g
    }
}

/// Evaluate the energy breakdown of a sampled radial function.
pub fn energy(u: &RadialFunction, params: &ProblemParams, kernel: &KernelMatrix) -> Result<EnergyBreakdown> {
    if !kernel.matches_grid(&u.grid) {
        return Err(Error::InvalidParams {
            field: "kernel",
            message: "kernel matrix was assembled on a different grid".to_string(),
        });
    }
    let ops = DiscreteEnergy::new(params, kernel)?;
    Ok(ops.breakdown(&u.values))
}

/// Gradient of the discrete energy as a nodal dual vector.
pub fn energy_gradient(u: &RadialFunction, params: &ProblemParams, kernel: &KernelMatrix) -> Result<Vec<f64>> {
    if !kernel.matches_grid(&u.grid) {
        return Err(Error::InvalidParams {
            field: "kernel",
            message: "kernel matrix was assembled on a different grid".to_string(),
        });
    }
    let ops = DiscreteEnergy::new(params, kernel)?;
    Ok(ops.gradient(&u.values))
}

/// Fiber map data along the ray t -> t u.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FiberProfile {
    /// ∫ |∇u|^2
    pub dirichlet: f64,
    /// raw double Riesz integral (λ not applied)
    pub riesz: f64,
    /// raw Hardy integral (μ not applied)
    pub hardy: f64,
    pub exponents: (f64, f64, f64),
    pub t_star: f64,
    pub h_star: f64,
    /// h(t) on a logarithmic sample around t_star (for diagnostics)
    pub samples: Vec<(f64, f64)>,
}

/// Maximize  h(t) = t^2/2 A - t^{2p}/(2p) λB - t^q/q μD  over t > 0 given
/// the raw coefficient triple.
///
/// h'(t)/t = A - λB t^{2p-2} - μD t^{q-2} is strictly decreasing (p > 1,
/// q >= 2, positive coefficients), so the positive critical point is
/// unique when it exists; bracketing by doubling plus bisection to 1e-12
/// absolute keeps this robust if a caller feeds degenerate coefficients.
pub fn fiber_max_from_coeffs(a: f64, lam_b: f64, mu_d: f64, p: f64, q: f64) -> Result<(f64, f64)> {
    if !(a > 0.0) {
        return Err(Error::InvalidParams {
            field: "u",
            message: "fiber maximization needs a nonzero Dirichlet norm".to_string(),
        });
    }
    let h = |t: f64| 0.5 * t * t * a - t.powf(2.0 * p) / (2.0 * p) * lam_b - t.powf(q) / q * mu_d;
    let dh = |t: f64| t * a - lam_b * t.powf(2.0 * p - 1.0) - mu_d * t.powf(q - 1.0);

    let t_lo = 1e-6;
    if dh(t_lo) <= 0.0 {
        return Err(Error::NoMountainPassGeometry(format!(
            "fiber map has no positive maximum (h'({t_lo:.0e}) <= 0; quadratic coefficient dominated)"
        )));
    }
    let mut t_hi = t_lo;
    let mut guard = 0;
    while dh(t_hi) > 0.0 {
        t_hi *= 2.0;
        guard += 1;
        if guard > 400 {
            return Err(Error::NoMountainPassGeometry(
                "fiber map is unbounded along the ray (no sign change in h')".to_string(),
            ));
        }
    }
    let mut lo = t_hi / 2.0;
    let mut hi = t_hi;
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if dh(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // among multiple candidate roots pick the argmax of h; with a strictly
    // decreasing h'/t there is only this one, but the scan costs nothing
    let t_star = 0.5 * (lo + hi);
    Ok((t_star, h(t_star)))
}

/// Maximize the fiber map of a sampled function.
pub fn fiber_max(u: &RadialFunction, params: &ProblemParams, kernel: &KernelMatrix) -> Result<FiberProfile> {
    let a = dirichlet_norm_sq(u);
    let b = riesz_double_integral(u, params.p, kernel)?;
    let d = hardy_weighted_integral(u, params.q, params.s)?;
    fiber_profile_from_coeffs(a, b, d, params)
}

/// Fiber profile from precomputed raw integrals.
pub fn fiber_profile_from_coeffs(a: f64, b: f64, d: f64, params: &ProblemParams) -> Result<FiberProfile> {
    let (p, q) = (params.p, params.q);
    let (t_star, h_star) = fiber_max_from_coeffs(a, params.lambda * b, params.mu * d, p, q)?;
    let h = |t: f64| {
        0.5 * t * t * a - t.powf(2.0 * p) / (2.0 * p) * params.lambda * b - t.powf(q) / q * params.mu * d
    };
    let samples = (0..64)
        .map(|i| {
            let t = t_star * 100f64.powf(-1.0 + 2.0 * i as f64 / 63.0);
            (t, h(t))
        })
        .collect();
    Ok(FiberProfile {
        dirichlet: a,
        riesz: b,
        hardy: d,
        exponents: (2.0, 2.0 * p, q),
        t_star,
        h_star,
        samples,
    })
}

/// Mountain-pass geometry certificate.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MpGeometry {
    /// ring radius in the H^1_0 norm
    pub rho: f64,
    /// certified lower bound for I on the ring
    pub beta: f64,
    /// scale t with I(t probe) < 0
    pub e_scale: f64,
}

/// Certify the mountain-pass geometry.
///
/// The ring bound uses the inequality
///   I(u) >= ||u||^2/2 - λ/(2p) C_B ||u||^{2p} - μ/q C_H ||u||^q
/// with C_B, C_H assembled from the computed sharp constants (convolution
/// bound plus Holder on the ball; Hardy-Sobolev bound plus Holder for the
/// weighted term), then maximizes the right side with the fiber solver.
/// The negative-energy endpoint comes from scanning t along the probe.
pub fn mp_geometry_check(
    params: &ProblemParams,
    probe: &RadialFunction,
    kernel: &KernelMatrix,
) -> Result<MpGeometry> {
    let ops = DiscreteEnergy::new(params, kernel)?;
    let consts = SharpConstants::compute(params.dim, params.alpha, params.s)?;
    let n = f64::from(params.dim);
    let exps = params.exponents();
    let omega = sphere_area(params.dim);
    let ball_volume = omega * params.radius.powf(n) / n;

    // convolution term: ∫∫ <= C(N,α) ||u||_r^{2p}, r = 2Np/(2N-α), and
    // ||u||_r <= |B|^{1/r - 1/2*} S^{-1/2} ||u||
    let r_exp = 2.0 * n * params.p / (2.0 * n - params.alpha);
    let holder = ball_volume.powf((1.0 / r_exp - 1.0 / exps.sobolev).max(0.0));
    let c_b = consts.hls_constant
        * (holder / consts.sobolev_constant.sqrt()).powf(2.0 * params.p);

    // Hardy term
    let c_h = if nearly_equal(params.s, 2.0) {
        1.0 / exps.hardy_best
    } else {
        let mu_s = consts.hardy_sobolev_constant.expect("s < 2 has a Hardy-Sobolev constant");
        let weight_mass = omega * params.radius.powf(n - params.s) / (n - params.s);
        mu_s.powf(-params.q / 2.0) * weight_mass.powf(1.0 - params.q / exps.hardy_sobolev)
    };

    let (rho, beta) = fiber_max_from_coeffs(1.0, params.lambda * c_b, params.mu * c_h, params.p, params.q)
        .map_err(|_| {
            Error::NoMountainPassGeometry(format!(
                "no positive ring value found down to norm 1e-6 (mu = {} vs Hardy scale; the quadratic term is dominated)",
                params.mu
            ))
        })?;
    if !(beta > 0.0) {
        return Err(Error::NoMountainPassGeometry(format!(
            "certified ring value is not positive (beta = {beta:.3e})"
        )));
    }

    // scan along the probe for a negative-energy endpoint
    let fiber = fiber_max(probe, params, kernel)?;
    let mut t = fiber.t_star.max(1.0);
    let mut guard = 0;
    loop {
        let val = ops.total(&probe.scaled(t).values);
        if val < 0.0 {
            break;
        }
        t *= 2.0;
        guard += 1;
        if guard > 200 {
            return Err(Error::NoMountainPassGeometry(
                "no negative-energy scale found along the probe".to_string(),
            ));
        }
    }
    Ok(MpGeometry {
        rho,
        beta,
        e_scale: t,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bubble::{eval_bubble, BubbleFamily, BubbleSpec};
    use crate::radial::make_grid;
    use crate::riesz::assemble_riesz_matrix;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn case1_setup(m: usize) -> (ProblemParams, Arc<crate::radial::RadialGrid>, KernelMatrix) {
        let params = ProblemParams::new(3, 1.0, 0.0, 2.0, 4.0, 1.0, 1.0, 1.0).unwrap();
        let grid = make_grid(3, 1.0, m, 2.0).unwrap();
        let kernel = assemble_riesz_matrix(Arc::clone(&grid), params.alpha).unwrap();
        (params, grid, kernel)
    }

    #[test]
    fn zero_function_zero_energy() {
        let (params, grid, kernel) = case1_setup(64);
        let u = RadialFunction::zero(grid);
        let e = energy(&u, &params, &kernel).unwrap();
        assert_eq!(e.kinetic, 0.0);
        assert_eq!(e.nonlocal, 0.0);
        assert_eq!(e.hardy, 0.0);
        assert_eq!(e.total, 0.0);
        let g = energy_gradient(&u, &params, &kernel).unwrap();
        assert!(g.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn exact_homogeneity_of_terms() {
        let params = ProblemParams::new(3, 1.5, 1.0, 2.5, 3.0, 0.7, 1.3, 1.0).unwrap();
        let grid = make_grid(3, 1.0, 129, 2.0).unwrap();
        let kernel = assemble_riesz_matrix(Arc::clone(&grid), params.alpha).unwrap();
        let u = RadialFunction::from_profile(grid, |r| (1.0 - r) * (0.4 + r), true);
        let base = energy(&u, &params, &kernel).unwrap();
        let t = 1.7;
        let scaled = energy(&u.scaled(t), &params, &kernel).unwrap();
        assert_relative_eq!(scaled.kinetic, t.powi(2) * base.kinetic, max_relative = 1e-13);
        assert_relative_eq!(scaled.nonlocal, t.powf(2.0 * params.p) * base.nonlocal, max_relative = 1e-13);
        assert_relative_eq!(scaled.hardy, t.powf(params.q) * base.hardy, max_relative = 1e-13);
        assert_eq!(scaled.total, scaled.kinetic - scaled.nonlocal - scaled.hardy);
    }

    #[test]
    fn gradient_matches_central_differences_at_second_order() {
        // critical-exponent configuration: p = (2N-alpha)/(N-2) at alpha=2,
        // q = 2*(s) at s=1
        let params = ProblemParams::new(3, 2.0, 1.0, 4.0, 4.0, 1.0, 1.0, 1.0).unwrap();
        let grid = make_grid(3, 1.0, 97, 2.0).unwrap();
        let kernel = assemble_riesz_matrix(Arc::clone(&grid), params.alpha).unwrap();
        let ops = DiscreteEnergy::new(&params, &kernel).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut orders = Vec::new();
        for _ in 0..20 {
            let u: Vec<f64> = grid
                .nodes()
                .iter()
                .map(|&r| (1.0 - r) * rng.random_range(-1.0..1.5))
                .collect();
            let mut phi: Vec<f64> = grid
                .nodes()
                .iter()
                .map(|&r| (1.0 - r) * rng.random_range(-1.0..1.0))
                .collect();
            *phi.last_mut().unwrap() = 0.0;
            let g = ops.gradient(&u);
            let pairing: f64 = g.iter().zip(&phi).map(|(a, b)| a * b).sum();
            let mut errs = Vec::new();
            for delta in [1e-3, 1e-4] {
                let up: Vec<f64> = u.iter().zip(&phi).map(|(a, b)| a + delta * b).collect();
                let um: Vec<f64> = u.iter().zip(&phi).map(|(a, b)| a - delta * b).collect();
                let fd = (ops.total(&up) - ops.total(&um)) / (2.0 * delta);
                errs.push((fd - pairing).abs());
            }
            if errs[0] > 1e-12 && errs[1] > 1e-14 {
                orders.push((errs[0] / errs[1]).log10());
            }
        }
        assert!(!orders.is_empty());
        let mean = orders.iter().sum::<f64>() / orders.len() as f64;
        assert!((mean - 2.0).abs() < 0.3, "observed FD order {mean:.3}, orders {orders:?}");
    }

    #[test]
    fn fiber_max_closed_form_examples() {
        // A=1, λB=0, μD=1, q=4: h = t^2/2 - t^4/4 peaks at t=1, h=1/4
        let (t, h) = fiber_max_from_coeffs(1.0, 0.0, 1.0, 2.0, 4.0).unwrap();
        assert_relative_eq!(t, 1.0, epsilon = 1e-9);
        assert_relative_eq!(h, 0.25, epsilon = 1e-10);
        // A=1, μD=0, λB=1/2, p=2: same curve through the 2p slot
        let (t, h) = fiber_max_from_coeffs(1.0, 0.5, 0.0, 2.0, 4.0).unwrap();
        assert_relative_eq!(t, 1.0, epsilon = 1e-9);
        assert_relative_eq!(h, 0.25, epsilon = 1e-10);
    }

    #[test]
    fn fiber_rejects_zero_norm() {
        assert!(fiber_max_from_coeffs(0.0, 1.0, 1.0, 2.0, 4.0).is_err());
    }

    #[test]
    fn fiber_reparametrization_invariance() {
        let params = ProblemParams::new(3, 1.0, 0.5, 2.0, 3.0, 1.0, 1.0, 1.0).unwrap();
        let grid = make_grid(3, 1.0, 129, 2.0).unwrap();
        let kernel = assemble_riesz_matrix(Arc::clone(&grid), params.alpha).unwrap();
        let u = RadialFunction::from_profile(grid, |r| 1.0 - r * r, true);
        let f1 = fiber_max(&u, &params, &kernel).unwrap();
        let c = 3.7;
        let f2 = fiber_max(&u.scaled(c), &params, &kernel).unwrap();
        assert_relative_eq!(f2.t_star, f1.t_star / c, max_relative = 1e-8);
        assert_relative_eq!(f2.h_star, f1.h_star, max_relative = 1e-10);
    }

    #[test]
    fn fiber_value_dominates_log_grid() {
        let params = ProblemParams::new(3, 1.0, 0.5, 3.0, 4.0, 2.0, 0.5, 1.0).unwrap();
        let grid = make_grid(3, 1.0, 129, 2.0).unwrap();
        let kernel = assemble_riesz_matrix(Arc::clone(&grid), params.alpha).unwrap();
        let u = RadialFunction::from_profile(grid, |r| (1.0 - r) * (0.5 + r * r), true);
        let f = fiber_max(&u, &params, &kernel).unwrap();
        let h = |t: f64| {
            0.5 * t * t * f.dirichlet - t.powf(2.0 * params.p) / (2.0 * params.p) * params.lambda * f.riesz
                - t.powf(params.q) / params.q * params.mu * f.hardy
        };
        for i in 0..1000 {
            let t = f.t_star * 100f64.powf(-1.0 + 2.0 * i as f64 / 999.0);
            assert!(h(t) <= f.h_star + 1e-11 * f.h_star.abs().max(1.0));
        }
    }

    #[test]
    fn geometry_certificate_case1() {
        let (params, grid, kernel) = case1_setup(129);
        let probe = RadialFunction::from_profile(Arc::clone(&grid), |r| 1.0 - r * r, true);
        let geom = mp_geometry_check(&params, &probe, &kernel).unwrap();
        assert!(geom.beta > 0.0);
        assert!(geom.rho > 0.0);
        // the endpoint really has negative energy, and pushing further
        // stays negative
        let ops = DiscreteEnergy::new(&params, &kernel).unwrap();
        assert!(ops.total(&probe.scaled(geom.e_scale).values) < 0.0);
        assert!(ops.total(&probe.scaled(2.0 * geom.e_scale).values) < 0.0);
        // a small multiple of the probe has positive energy (ring side)
        let fiber = fiber_max(&probe, &params, &kernel).unwrap();
        let small = probe.scaled(0.05 * fiber.t_star);
        assert!(ops.total(&small.values) > 0.0);
    }

    #[test]
    fn geometry_fails_for_dominated_quadratic() {
        // s = 2, q = 2, mu = 2 mu_bar: I(t u) < 0 for small t along
        // origin-concentrated probes; the ring certificate must fail
        let params = ProblemParams::new(3, 1.0, 2.0, 2.0, 2.0, 1.0, 0.5, 1.0).unwrap();
        let grid = make_grid(3, 1.0, 129, 2.0).unwrap();
        let kernel = assemble_riesz_matrix(Arc::clone(&grid), params.alpha).unwrap();
        let probe = RadialFunction::from_profile(Arc::clone(&grid), |r| 1.0 - r * r, true);
        let err = mp_geometry_check(&params, &probe, &kernel);
        assert!(matches!(err, Err(Error::NoMountainPassGeometry(_))), "{err:?}");
    }

    #[test]
    fn bubble_fiber_bracket_is_eps_stable() {
        // critical q: t_star of the cutoff bubble stays in a fixed bracket
        let params = ProblemParams::new(3, 1.0, 0.0, 4.5, 6.0, 1.0, 1.0, 1.0).unwrap();
        let grid = make_grid(3, 1.0, 2049, 2.0).unwrap();
        let kernel = assemble_riesz_matrix(Arc::clone(&grid), params.alpha).unwrap();
        let mut tstars = Vec::new();
        for j in 3..=6 {
            let spec = BubbleSpec::new(BubbleFamily::HardySobolev { s: 0.0, k: 1.0 }, 2f64.powi(-j), 0.25);
            let u = eval_bubble(&spec, Arc::clone(&grid)).unwrap();
            let f = fiber_max(&u, &params, &kernel).unwrap();
            tstars.push(f.t_star);
        }
        for t in &tstars {
            assert!(*t > 0.5 && *t < 2.0, "t_star escaped the bracket: {tstars:?}");
        }
    }
}
