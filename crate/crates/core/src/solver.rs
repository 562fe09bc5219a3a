//! Mountain-pass solver: path deformation toward the minimax level plus a
//! local first-order saddle polish, with concentration diagnostics.
//!
//! Phase 1 (path): start from the segment t -> t e, repeatedly take one
//! preconditioned descent step at the path maximum (step length capped by
//! the adjacent segment lengths so the discrete path cannot hop the
//! ridge), then re-interpolate the path through the moved point by arc
//! length in the energy norm.
//!
//! Phase 2 (polish): near the saddle the discrete path resolution caps
//! the attainable residual, so the maximal point is refined by reflected
//! preconditioned descent: the step component along the ray direction u
//! (an unstable direction, since t -> I(t u) has a strict maximum) is
//! reversed, which turns the index-1 saddle into an attractor. This stays
//! strictly first-order.

use serde::{Deserialize, Serialize};

use crate::constants::{ps_thresholds, SharpConstants, ThresholdApplicability};
use crate::energy::{fiber_max, mp_geometry_check, DiscreteEnergy};
use crate::error::{Error, Result};
use crate::params::ProblemParams;
use crate::radial::{dirichlet_fraction_within, RadialFunction, RadialGrid, RadialStiffness};
use crate::riesz::KernelMatrix;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// residual tolerance in the discrete dual norm sqrt(g^T L^{-1} g)
    pub tol: f64,
    pub max_iters: usize,
    pub path_points: usize,
    /// backtracking factor of the Armijo line search
    pub backtrack: f64,
    /// Armijo sufficient-decrease constant
    pub armijo: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: 1e-6,
            max_iters: 5000,
            path_points: 32,
            backtrack: 0.5,
            armijo: 1e-4,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParams {
                field: "tol",
                message: format!("tolerance must be positive, got {}", self.tol),
            });
        }
        if self.path_points < 8 {
            return Err(Error::InvalidParams {
                field: "path_points",
                message: format!("need at least 8 path points, got {}", self.path_points),
            });
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) || !(self.armijo > 0.0 && self.armijo < 1.0) {
            return Err(Error::InvalidParams {
                field: "backtrack",
                message: "line-search constants must lie in (0, 1)".to_string(),
            });
        }
        Ok(())
    }
}

/// One iteration of the solve: level, dual-norm residual, and the
/// Dirichlet-mass fractions in the balls B(0, R 2^{-j}), j = 0..5.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterRecord {
    pub level: f64,
    pub gradient_norm: f64,
    pub concentration: [f64; 6],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    /// iteration budget exhausted
    NonConvergence,
    /// path maximum collapsed to an endpoint
    DegeneratePath,
    /// converged to a numerically trivial function
    TrivialSolution,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MountainPassResult {
    #[serde(skip)]
    pub solution: Option<RadialFunction>,
    pub status: SolveStatus,
    /// I(u*) at the reported point
    pub level: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
    /// squared H^1_0 norm of the solution
    pub norm_sq: f64,
    /// certified ring value (lower level bound)
    pub beta: f64,
    /// fiber maximum along the initial segment (upper level bound)
    pub initial_path_max: f64,
    /// c compared against the binding compactness threshold; vacuously
    /// true when compactness holds at every level
    pub below_threshold: bool,
    /// Dirichlet-mass fraction inside B(0, R/10) at termination
    pub concentration_index: f64,
    pub trace: Vec<IterRecord>,
}

fn concentration_profile(u: &RadialFunction) -> [f64; 6] {
    let mut out = [0.0; 6];
    for (j, slot) in out.iter_mut().enumerate() {
        *slot = dirichlet_fraction_within(u, u.grid.radius * 2f64.powi(-(j as i32)));
    }
    out
}

struct PathOps<'a> {
    energy: &'a DiscreteEnergy<'a>,
    stiffness: &'a RadialStiffness,
}

impl PathOps<'_> {
    fn resample_side(&self, pts: &[Vec<f64>], count: usize) -> Vec<Vec<f64>> {
        let segs: Vec<f64> = pts
            .windows(2)
            .map(|w| {
                let d: Vec<f64> = w[1].iter().zip(&w[0]).map(|(a, b)| a - b).collect();
                self.stiffness.norm(&d).max(1e-300)
            })
            .collect();
        let mut cum = vec![0.0];
        for s in &segs {
            cum.push(cum.last().unwrap() + s);
        }
        let total = *cum.last().unwrap();
        let mut out = Vec::with_capacity(count);
        for idx in 0..count {
            let target = total * idx as f64 / (count - 1) as f64;
            let k = match cum.binary_search_by(|c| c.partial_cmp(&target).unwrap()) {
                Ok(k) => k.min(pts.len() - 2),
                Err(k) => (k - 1).min(pts.len() - 2),
            };
            let theta = ((target - cum[k]) / segs[k]).clamp(0.0, 1.0);
            let v: Vec<f64> = pts[k]
                .iter()
                .zip(&pts[k + 1])
                .map(|(a, b)| a + theta * (b - a))
                .collect();
            out.push(v);
        }
        out[0] = pts[0].clone();
        *out.last_mut().unwrap() = pts.last().unwrap().clone();
        out
    }
}

/// Find a mountain-pass critical point.
pub fn mountain_pass_solve(
    params: &ProblemParams,
    config: &SolverConfig,
    kernel: &KernelMatrix,
) -> Result<MountainPassResult> {
    config.validate()?;
    let ops = DiscreteEnergy::new(params, kernel)?;
    let grid = &kernel.grid;
    let stiffness = RadialStiffness::assemble(grid);

    // probe and endpoint from the geometry certificate
    let radius = grid.radius;
    let probe = RadialFunction::from_profile(
        grid_arc(kernel),
        |r| 1.0 - (r / radius) * (r / radius),
        true,
    );
    let geometry = mp_geometry_check(params, &probe, kernel)?;
    let initial_fiber = fiber_max(&probe, params, kernel)?;
    let e: Vec<f64> = probe.scaled(geometry.e_scale).values;

    let k_pts = config.path_points;
    let mut path: Vec<Vec<f64>> = (0..k_pts)
        .map(|k| {
            let t = k as f64 / (k_pts - 1) as f64;
            e.iter().map(|v| t * v).collect()
        })
        .collect();
    let mut energies: Vec<f64> = path.iter().map(|u| ops.total(u)).collect();

    let path_ops = PathOps {
        energy: &ops,
        stiffness: &stiffness,
    };
    let _ = path_ops.energy; // energies are evaluated through `ops` directly

    let mut trace: Vec<IterRecord> = Vec::new();
    let mut tau = 1.0;
    let mut iterations = 0usize;
    let mut status = SolveStatus::NonConvergence;
    let mut current: Vec<f64> = Vec::new();
    let mut plateau: usize = 0;
    let mut last_level = f64::INFINITY;

    let record = |u: &[f64], level: f64, gn: f64, trace: &mut Vec<IterRecord>| {
        let rf = RadialFunction {
            grid: grid_arc(kernel),
            values: u.to_vec(),
            h10: true,
        };
        trace.push(IterRecord {
            level,
            gradient_norm: gn,
            concentration: concentration_profile(&rf),
        });
    };

    // ---- phase 1: path deformation ----
    let path_budget = config.max_iters;
    let mut polish_seed: Option<Vec<f64>> = None;
    while iterations < path_budget {
        let ks = argmax(&energies);
        if ks == 0 || ks == k_pts - 1 {
            status = SolveStatus::DegeneratePath;
            current = path[ks].clone();
            break;
        }
        let u = path[ks].clone();
        let g = ops.gradient(&u);
        let z = stiffness.solve(&g);
        let gn = dual_norm(&g, &z);
        record(&u, energies[ks], gn, &mut trace);
        iterations += 1;
        if gn <= config.tol {
            status = SolveStatus::Converged;
            current = u;
            break;
        }

        // plateau detection hands over to the polish phase
        if (last_level - energies[ks]).abs() <= 1e-7 * energies[ks].abs().max(1.0) {
            plateau += 1;
        } else {
            plateau = 0;
        }
        last_level = energies[ks];
        if plateau >= 25 || iterations >= path_budget / 2 {
            polish_seed = Some(u);
            break;
        }

        // capped preconditioned descent at the maximum
        let seg_prev = seg_norm(&stiffness, &path[ks - 1], &path[ks]);
        let seg_next = seg_norm(&stiffness, &path[ks], &path[ks + 1]);
        let z_len = stiffness.norm(&z).max(1e-300);
        let mut step = tau.min(0.75 * seg_prev.min(seg_next) / z_len);
        let slope: f64 = g.iter().zip(&z).map(|(a, b)| a * b).sum();
        let mut accepted = false;
        for _ in 0..80 {
            let candidate: Vec<f64> = u.iter().zip(&z).map(|(a, b)| a - step * b).collect();
            let value = ops.total(&candidate);
            if value <= energies[ks] - config.armijo * step * slope {
                path[ks] = candidate;
                energies[ks] = value;
                tau = step / config.backtrack;
                accepted = true;
                break;
            }
            step *= config.backtrack;
        }
        if !accepted {
            polish_seed = Some(u);
            break;
        }

        // re-interpolate through the moved point by arc length
        let s_left: f64 = path[..=ks]
            .windows(2)
            .map(|w| seg_norm(&stiffness, &w[0], &w[1]))
            .sum();
        let s_right: f64 = path[ks..]
            .windows(2)
            .map(|w| seg_norm(&stiffness, &w[0], &w[1]))
            .sum();
        let n_left = ((k_pts as f64 * s_left / (s_left + s_right)).round() as usize).clamp(2, k_pts - 2);
        let n_right = k_pts + 1 - n_left;
        let moved = path[ks].clone();
        let left = path_ops.resample_side(&path[..=ks], n_left);
        let right = path_ops.resample_side(&path[ks..], n_right);
        path = left.into_iter().chain(right.into_iter().skip(1)).collect();
        path[n_left - 1] = moved;
        debug_assert_eq!(path.len(), k_pts);
        energies = path.iter().map(|u| ops.total(u)).collect();
    }

    // ---- phase 2: reflected-gradient polish ----
    if let Some(mut u) = polish_seed {
        let mut tau = 0.1;
        let mut g = ops.gradient(&u);
        let mut z = stiffness.solve(&g);
        let mut gn = dual_norm(&g, &z);
        while iterations < config.max_iters {
            record(&u, ops.total(&u), gn, &mut trace);
            iterations += 1;
            if gn <= config.tol {
                status = SolveStatus::Converged;
                break;
            }
            let u_len = stiffness.norm(&u).max(1e-300);
            let w: Vec<f64> = u.iter().map(|x| x / u_len).collect();
            let lw = stiffness.apply(&w);
            let along: f64 = z.iter().zip(&lw).map(|(a, b)| a * b).sum();
            let dir: Vec<f64> = z.iter().zip(&w).map(|(zi, wi)| zi - 2.0 * along * wi).collect();
            let mut progressed = false;
            while tau > 1e-14 {
                let cand: Vec<f64> = u.iter().zip(&dir).map(|(a, b)| a - tau * b).collect();
                let gc = ops.gradient(&cand);
                let zc = stiffness.solve(&gc);
                let gnc = dual_norm(&gc, &zc);
                if gnc < gn {
                    u = cand;
                    g = gc;
                    z = zc;
                    gn = gnc;
                    tau = (tau * 1.3).min(4.0);
                    progressed = true;
                    break;
                }
                tau *= 0.5;
            }
            if !progressed {
                break;
            }
        }
        let _ = g;
        current = u;
    }

    if current.is_empty() {
        // path phase terminated by budget without a polish switch
        let ks = argmax(&energies);
        current = path[ks].clone();
    }

    let solution = RadialFunction {
        grid: grid_arc(kernel),
        values: current,
        h10: true,
    };
    let g = ops.gradient(&solution.values);
    let z = stiffness.solve(&g);
    let gradient_norm = dual_norm(&g, &z);
    let level = ops.total(&solution.values);
    let norm_sq = ops.dirichlet_sq(&solution.values);
    if status == SolveStatus::Converged && norm_sq.sqrt() < 1e-4 {
        status = SolveStatus::TrivialSolution;
    }

    let consts = SharpConstants::compute(params.dim, params.alpha, params.s)?;
    let thresholds = ps_thresholds(params, &consts)?;
    let below_threshold = match thresholds.applicable {
        ThresholdApplicability::Neither => true,
        _ => thresholds.binding().map(|t| level < t).unwrap_or(false),
    };
    let concentration_index = dirichlet_fraction_within(&solution, solution.grid.radius / 10.0);

    Ok(MountainPassResult {
        status,
        level,
        gradient_norm,
        iterations,
        norm_sq,
        beta: geometry.beta,
        initial_path_max: initial_fiber.h_star,
        below_threshold,
        concentration_index,
        trace,
        solution: Some(solution),
    })
}

fn grid_arc(kernel: &KernelMatrix) -> std::sync::Arc<RadialGrid> {
    std::sync::Arc::clone(&kernel.grid)
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

fn seg_norm(l: &RadialStiffness, a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = b.iter().zip(a).map(|(x, y)| x - y).collect();
    l.norm(&d)
}

fn dual_norm(g: &[f64], z: &[f64]) -> f64 {
    g.iter().zip(z).map(|(a, b)| a * b).sum::<f64>().max(0.0).sqrt()
}

/// Palais-Smale style diagnostics over an iteration trace.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PsReport {
    pub rows: Vec<IterRecord>,
    pub concentration_suspected: bool,
}

/// Flag runs whose Dirichlet mass drifts monotonically into shrinking
/// balls around the origin while the residual stalls.
pub fn ps_diagnostics(trace: &[IterRecord], _grid: &RadialGrid) -> PsReport {
    let mut suspected = false;
    if trace.len() >= 12 {
        let window = (trace.len() / 5).max(10).min(trace.len());
        let recent = &trace[trace.len() - window..];
        let idx = |r: &IterRecord| r.concentration[5];
        let start = idx(&recent[0]);
        let end = idx(recent.last().unwrap());
        let monotone = recent.windows(2).all(|w| idx(&w[1]) >= idx(&w[0]) - 1e-3);
        let grew = end >= start + 0.02;
        let toward_one = end > 0.5;
        let g_max = recent.iter().map(|r| r.gradient_norm).fold(0.0f64, f64::max);
        let g_end = recent.last().unwrap().gradient_norm;
        let stalled = g_end >= 0.25 * g_max;
        suspected = monotone && grew && toward_one && stalled;
    }
    PsReport {
        rows: trace.to_vec(),
        concentration_suspected: suspected,
    }
}
