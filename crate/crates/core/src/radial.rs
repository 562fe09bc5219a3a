//! Graded radial grids, sampled radial functions, differentiation and the
//! weighted Dirichlet norm on B(0, R).

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gamma::sphere_area;

pub const MIN_GRID_POINTS: usize = 16;

/// Nodes 0 = r_0 < r_1 < ... < r_{M-1} = R with polynomial clustering
/// toward the origin: r_i = R (i / (M-1))^grading.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadialGrid {
    pub radius: f64,
    pub grading: f64,
    pub dim: u32,
    nodes: Vec<f64>,
}

impl RadialGrid {
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Composite trapezoid weights (cell half-widths).
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let m = self.nodes.len();
        let r = &self.nodes;
        let mut w = vec![0.0; m];
        w[0] = 0.5 * (r[1] - r[0]);
        w[m - 1] = 0.5 * (r[m - 1] - r[m - 2]);
        for i in 1..m - 1 {
            w[i] = 0.5 * (r[i + 1] - r[i - 1]);
        }
        w
    }

    /// A deterministic hash of (dim, radius, grading, nodes), used to key
    /// kernel caches.
    pub fn fingerprint(&self) -> u64 {
        // FNV-1a over the defining data
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |bytes: &[u8]| {
            for &b in bytes {
                h ^= u64::from(b);
                h = h.wrapping_mul(0x100_0000_01b3);
            }
        };
        eat(&self.dim.to_le_bytes());
        eat(&self.radius.to_bits().to_le_bytes());
        eat(&self.grading.to_bits().to_le_bytes());
        eat(&(self.nodes.len() as u64).to_le_bytes());
        for v in &self.nodes {
            eat(&v.to_bits().to_le_bytes());
        }
        h
    }
}

/// Build a graded grid on [0, R].
pub fn make_grid(dim: u32, radius: f64, points: usize, grading: f64) -> Result<Arc<RadialGrid>> {
    if dim < 3 {
        return Err(Error::InvalidParams {
            field: "N",
            message: format!("dimension must be >= 3, got {dim}"),
        });
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidParams {
            field: "radius",
            message: format!("radius must be positive, got {radius}"),
        });
    }
    if points < MIN_GRID_POINTS {
        return Err(Error::InvalidParams {
            field: "points",
            message: format!("grid needs at least {MIN_GRID_POINTS} nodes, got {points}"),
        });
    }
    if !(grading >= 1.0) {
        return Err(Error::InvalidParams {
            field: "grading",
            message: format!("grading exponent must be >= 1, got {grading}"),
        });
    }
    let m = points;
    let mut nodes = Vec::with_capacity(m);
    for i in 0..m {
        let t = i as f64 / (m - 1) as f64;
        nodes.push(radius * t.powf(grading));
    }
    nodes[0] = 0.0;
    nodes[m - 1] = radius;
    Ok(Arc::new(RadialGrid {
        radius,
        grading,
        dim,
        nodes,
    }))
}

/// A radial profile sampled on a grid. With `h10` set the value at R is
/// pinned to zero and the function represents an element of H^1_0.
#[derive(Debug, Clone)]
pub struct RadialFunction {
    pub grid: Arc<RadialGrid>,
    pub values: Vec<f64>,
    pub h10: bool,
}

impl RadialFunction {
    pub fn new(grid: Arc<RadialGrid>, mut values: Vec<f64>, h10: bool) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidParams {
                field: "values",
                message: format!("expected {} samples, got {}", grid.len(), values.len()),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams {
                field: "values",
                message: "samples must be finite".to_string(),
            });
        }
        if h10 {
            *values.last_mut().unwrap() = 0.0;
        }
        Ok(RadialFunction { grid, values, h10 })
    }

    pub fn zero(grid: Arc<RadialGrid>) -> Self {
        let n = grid.len();
        RadialFunction {
            grid,
            values: vec![0.0; n],
            h10: true,
        }
    }

    pub fn from_profile<F: Fn(f64) -> f64>(grid: Arc<RadialGrid>, f: F, h10: bool) -> Self {
        let values = grid.nodes().iter().map(|&r| f(r)).collect();
        RadialFunction { grid, values, h10 }
    }

    pub fn scaled(&self, c: f64) -> Self {
        RadialFunction {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().map(|v| c * v).collect(),
            h10: self.h10,
        }
    }

    /// Serialize as "r,u" CSV lines (the plotting interface).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,u\n");
        for (r, u) in self.grid.nodes().iter().zip(&self.values) {
            out.push_str(&format!("{:.16e},{:.16e}\n", r, u));
        }
        out
    }
}

/// Nodal first derivatives by second-order differences on the graded grid.
///
/// The derivative at r = 0 is zero by radial symmetry; the outer boundary
/// uses a one-sided second-order stencil.
pub fn derivative_values(grid: &RadialGrid, values: &[f64]) -> Vec<f64> {
    let r = grid.nodes();
    let m = r.len();
    let mut d = vec![0.0; m];
    for i in 1..m - 1 {
        let hm = r[i] - r[i - 1];
        let hp = r[i + 1] - r[i];
        d[i] = (-hp / (hm * (hm + hp))) * values[i - 1]
            + ((hp - hm) / (hm * hp)) * values[i]
            + (hm / (hp * (hm + hp))) * values[i + 1];
    }
    let h1 = r[m - 1] - r[m - 2];
    let h2 = r[m - 2] - r[m - 3];
    d[m - 1] = (h1 / (h2 * (h1 + h2))) * values[m - 3] - ((h1 + h2) / (h1 * h2)) * values[m - 2]
        + ((2.0 * h1 + h2) / (h1 * (h1 + h2))) * values[m - 1];
    d
}

/// Apply the transpose of the `derivative_values` stencil: given panel
/// coefficients c_i, accumulate dE/du_j for E = sum_i c_i u'(r_i).
pub fn derivative_transpose(grid: &RadialGrid, coeffs: &[f64]) -> Vec<f64> {
    let r = grid.nodes();
    let m = r.len();
    let mut out = vec![0.0; m];
    for i in 1..m - 1 {
        let hm = r[i] - r[i - 1];
        let hp = r[i + 1] - r[i];
        out[i - 1] += coeffs[i] * (-hp / (hm * (hm + hp)));
        out[i] += coeffs[i] * ((hp - hm) / (hm * hp));
        out[i + 1] += coeffs[i] * (hm / (hp * (hm + hp)));
    }
    let h1 = r[m - 1] - r[m - 2];
    let h2 = r[m - 2] - r[m - 3];
    out[m - 3] += coeffs[m - 1] * (h1 / (h2 * (h1 + h2)));
    out[m - 2] += coeffs[m - 1] * (-(h1 + h2) / (h1 * h2));
    out[m - 1] += coeffs[m - 1] * ((2.0 * h1 + h2) / (h1 * (h1 + h2)));
    out
}

/// Quadrature weights of the Dirichlet form: W_i = omega_{N-1} w_i r_i^{N-1},
/// so that  |∇u|_2^2  ~  sum_i W_i u'(r_i)^2.
pub fn dirichlet_weights(grid: &RadialGrid) -> Vec<f64> {
    let omega = sphere_area(grid.dim);
    let w = grid.trapezoid_weights();
    grid.nodes()
        .iter()
        .zip(w)
        .map(|(&r, wi)| omega * wi * r.powi(grid.dim as i32 - 1))
        .collect()
}

/// Squared Dirichlet norm of a sampled H^1_0 profile.
pub fn dirichlet_norm_sq(u: &RadialFunction) -> f64 {
    let d = derivative_values(&u.grid, &u.values);
    let weights = dirichlet_weights(&u.grid);
    d.iter().zip(weights).map(|(di, wi)| wi * di * di).sum()
}

/// Fraction of the squared Dirichlet norm carried by nodes inside radius
/// `ball_radius` (a concentration diagnostic; 1.0 for the whole ball).
pub fn dirichlet_fraction_within(u: &RadialFunction, ball_radius: f64) -> f64 {
    let d = derivative_values(&u.grid, &u.values);
    let weights = dirichlet_weights(&u.grid);
    let mut inside = 0.0;
    let mut total = 0.0;
    for ((di, wi), &r) in d.iter().zip(weights).zip(u.grid.nodes()) {
        let contrib = wi * di * di;
        total += contrib;
        if r <= ball_radius {
            inside += contrib;
        }
    }
    if total > 0.0 {
        inside / total
    } else {
        0.0
    }
}

/// Number of leading nodes excluded from the Laplacian residual: the
/// (N-1)/r u' term has a coordinate singularity at the origin.
pub const RESIDUAL_SKIP_NODES: usize = 2;

/// Max-norm residual of  u'' + (N-1)/r u' + rhs  over interior nodes,
/// skipping the near-origin zone and the boundary node.
pub fn laplace_residual(u: &RadialFunction, rhs: &RadialFunction) -> Result<f64> {
    if !std::ptr::eq(u.grid.as_ref(), rhs.grid.as_ref()) && u.grid.nodes() != rhs.grid.nodes() {
        return Err(Error::InvalidParams {
            field: "rhs",
            message: "rhs must be sampled on the same grid".to_string(),
        });
    }
    let r = u.grid.nodes();
    let m = r.len();
    let n = f64::from(u.grid.dim);
    let v = &u.values;
    let mut worst: f64 = 0.0;
    for i in RESIDUAL_SKIP_NODES.max(1)..m - 1 {
        let hm = r[i] - r[i - 1];
        let hp = r[i + 1] - r[i];
        let d1 = (-hp / (hm * (hm + hp))) * v[i - 1] + ((hp - hm) / (hm * hp)) * v[i]
            + (hm / (hp * (hm + hp))) * v[i + 1];
        let d2 = 2.0 * (hp * v[i - 1] - (hm + hp) * v[i] + hm * v[i + 1]) / (hm * hp * (hm + hp));
        let res = d2 + (n - 1.0) / r[i] * d1 + rhs.values[i];
        worst = worst.max(res.abs());
    }
    Ok(worst)
}

/// Tridiagonal stiffness matrix of the radial Dirichlet form on P1
/// elements, used as the H^1 preconditioner for gradient flows. Row/column
/// for the boundary node are dropped (homogeneous Dirichlet data).
#[derive(Debug, Clone)]
pub struct RadialStiffness {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
    m: usize,
}

impl RadialStiffness {
    pub fn assemble(grid: &RadialGrid) -> Self {
        let r = grid.nodes();
        let m = r.len();
        let omega = sphere_area(grid.dim);
        let n = grid.dim as i32;
        let mut diag = vec![0.0; m];
        let mut off = vec![0.0; m - 1];
        for k in 0..m - 1 {
            let h = r[k + 1] - r[k];
            // exact moment of r^{N-1} over the cell
            let mass = omega * (r[k + 1].powi(n) - r[k].powi(n)) / f64::from(n);
            let c = mass / (h * h);
            diag[k] += c;
            diag[k + 1] += c;
            off[k] -= c;
        }
        RadialStiffness { diag, off, m }
    }

    /// y = L x over all nodes (boundary row included).
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut y = vec![0.0; m];
        for i in 0..m {
            let mut acc = self.diag[i] * x[i];
            if i > 0 {
                acc += self.off[i - 1] * x[i - 1];
            }
            if i + 1 < m {
                acc += self.off[i] * x[i + 1];
            }
            y[i] = acc;
        }
        y
    }

    /// Energy norm sqrt(x^T L x).
    pub fn norm(&self, x: &[f64]) -> f64 {
        let y = self.apply(x);
        x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>().max(0.0).sqrt()
    }

    /// Solve L z = g on the constrained space (z, g zero at the boundary
    /// node) by the Thomas algorithm.
    pub fn solve(&self, g: &[f64]) -> Vec<f64> {
        let n = self.m - 1; // unknowns: nodes 0..m-2
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut z = vec![0.0; self.m];
        c[0] = self.off[0] / self.diag[0];
        d[0] = g[0] / self.diag[0];
        for i in 1..n {
            let denom = self.diag[i] - self.off[i - 1] * c[i - 1];
            if i < n - 1 {
                c[i] = self.off[i] / denom;
            }
            d[i] = (g[i] - self.off[i - 1] * d[i - 1]) / denom;
        }
        z[n - 1] = d[n - 1];
        for i in (0..n - 1).rev() {
            z[i] = d[i] - c[i] * z[i + 1];
        }
        z[self.m - 1] = 0.0;
        z
    }
}
