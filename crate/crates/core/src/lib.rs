//! Radial variational toolkit for the Dirichlet problem
//!     -Δu = λ (|x|^{-α} * |u|^p) |u|^{p-2} u + μ |u|^{q-2} u / |x|^s
//! on a ball, combining a Riesz convolution nonlinearity with a
//! Hardy-weighted power term.
//!
//! The crate computes the sharp constants and compactness thresholds of
//! the problem, evaluates the energy functional and its discrete gradient
//! on graded radial grids, locates mountain-pass critical points, and
//! runs the bubble-scaling sweeps that verify the asymptotic rates and
//! strict level bounds behind the existence theory.

pub mod bubble;
pub mod config;
pub mod constants;
pub mod energy;
pub mod error;
pub mod gamma;
pub mod hardy;
pub mod params;
pub mod quad;
pub mod radial;
pub mod report;
pub mod riesz;
pub mod solver;
pub mod sweep;

pub use bubble::{eval_bubble, BubbleFamily, BubbleSpec};
pub use constants::{
    hardy_sobolev_constant, hls_sharp_constant, ps_thresholds, sobolev_constant, SharpConstants,
    ThresholdApplicability, ThresholdReport,
};
pub use energy::{energy, energy_gradient, fiber_max, mp_geometry_check, EnergyBreakdown, FiberProfile};
pub use error::{Error, Result};
pub use params::{classify_regime, derive_exponents, CaseId, DerivedExponents, ProblemParams, RegimeCase};
pub use radial::{dirichlet_norm_sq, laplace_residual, make_grid, RadialFunction, RadialGrid};
pub use riesz::{assemble_riesz_matrix, riesz_angular_kernel, riesz_double_integral, KernelMatrix};
pub use solver::{mountain_pass_solve, ps_diagnostics, MountainPassResult, SolverConfig};
pub use sweep::{epsilon_sweep, fit_rate, verify_level_bound, RateFit, SweepConfig, SweepTable};
