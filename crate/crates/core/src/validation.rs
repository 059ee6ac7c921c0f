//! Brute-force grid oracles for small instances and the closed-form
//! diagnostic constants of approximate stationarity.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::model::{MinimaxProblem, Sense};

pub const MAX_POINTS_PER_AXIS: usize = 201;
pub const MAX_GRID_SIZE: usize = 10_000_000;
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// Tensor grid with `points` equispaced values per axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub points: usize,
}

impl GridSpec {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, points: usize) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::Dimension {
                context: "grid bounds",
                expected: lo.len(),
                found: hi.len(),
            });
        }
        if points == 0 || points > MAX_POINTS_PER_AXIS {
            return Err(Error::GridTooLarge(format!(
                "points per axis must be in 1..={MAX_POINTS_PER_AXIS}, got {points}"
            )));
        }
        if lo.iter().zip(&hi).any(|(l, h)| !(l <= h) || !l.is_finite() || !h.is_finite()) {
            return Err(Error::InvalidParameter("grid bounds must be finite with lo <= hi".into()));
        }
        let g = GridSpec { lo, hi, points };
        if g.size() > MAX_GRID_SIZE {
            return Err(Error::GridTooLarge(format!("{} points exceed {MAX_GRID_SIZE}", g.size())));
        }
        Ok(g)
    }

    pub fn uniform(dim: usize, lo: f64, hi: f64, points: usize) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim], points)
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn size(&self) -> usize {
        self.points.saturating_pow(self.dim() as u32)
    }

    pub fn spacing(&self) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| if self.points > 1 { (h - l) / (self.points - 1) as f64 } else { 0.0 })
            .collect()
    }

    pub fn cell_diagonal(&self) -> f64 {
        self.spacing().iter().map(|s| s * s).sum::<f64>().sqrt()
    }

    /// All grid points in lexicographic order.
    pub fn points(&self) -> Vec<Vector> {
        let d = self.dim();
        let h = self.spacing();
        let mut out = Vec::with_capacity(self.size());
        let mut idx = vec![0usize; d];
        loop {
            out.push(Vector::from_fn(d, |i, _| self.lo[i] + h[i] * idx[i] as f64));
            let mut axis = 0;
            loop {
                if axis == d {
                    return out;
                }
                idx[axis] += 1;
                if idx[axis] < self.points {
                    break;
                }
                idx[axis] = 0;
                axis += 1;
            }
        }
    }
}

/// Grids for `x`, `y` and, for the dual, `λ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BruteGrid {
    pub x: GridSpec,
    pub y: GridSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BruteValue {
    pub value: f64,
    pub argmin_x: Vector,
    /// Grid `x` values without any feasible grid `y`.
    pub infeasible_x: usize,
}

fn projected_points(grid: &GridSpec, set: &crate::projections::ConvexSet) -> Result<Vec<Vector>> {
    if grid.dim() != set.dim() {
        return Err(Error::Dimension {
            context: "grid dimension",
            expected: set.dim(),
            found: grid.dim(),
        });
    }
    Ok(grid.points().iter().map(|p| set.project(p)).collect())
}

fn check_small(prob: &MinimaxProblem, grid: &BruteGrid) -> Result<()> {
    if prob.dim_x() + prob.dim_y() > 4 {
        return Err(Error::GridTooLarge("brute force limited to n + m <= 4".into()));
    }
    if grid.x.size().saturating_mul(grid.y.size()) > MAX_GRID_SIZE {
        return Err(Error::GridTooLarge("x-grid times y-grid exceeds the size guard".into()));
    }
    Ok(())
}

/// `min_x max_{y: Ax+By ⊴ c} f + h − g` over the grids.
pub fn brute_primal_value(prob: &MinimaxProblem, grid: &BruteGrid) -> Result<BruteValue> {
    check_small(prob, grid)?;
    let xs = projected_points(&grid.x, &prob.set_x)?;
    let ys = projected_points(&grid.y, &prob.set_y)?;
    let gy: Vec<f64> = ys.iter().map(|y| prob.g.value(y)).collect();
    let mut best = f64::INFINITY;
    let mut argmin = xs[0].clone();
    let mut infeasible = 0;
    for x in &xs {
        let hx = prob.h.value(x);
        let mut inner = f64::NEG_INFINITY;
        for (y, g) in ys.iter().zip(&gy) {
            if prob.constraints.violation(x, y).amax() <= FEASIBILITY_TOL {
                inner = inner.max(prob.f.value(x, y) + hx - g);
            }
        }
        if inner == f64::NEG_INFINITY {
            infeasible += 1;
            inner = f64::INFINITY;
        }
        if inner < best {
            best = inner;
            argmin = x.clone();
        }
    }
    if infeasible == xs.len() {
        return Err(Error::Infeasible("no grid x admits a feasible grid y".into()));
    }
    Ok(BruteValue {
        value: best,
        argmin_x: argmin,
        infeasible_x: infeasible,
    })
}

/// `min_λ min_x max_y L + h − g` over the grids. `lambda_grid` covers the
/// multiplier set; `LE` coordinates are clipped to `λ ≥ 0`.
pub fn brute_dual_value(prob: &MinimaxProblem, grid: &BruteGrid, lambda_grid: &GridSpec) -> Result<BruteValue> {
    check_small(prob, grid)?;
    if lambda_grid.dim() != prob.dim_lambda() {
        return Err(Error::Dimension {
            context: "lambda grid",
            expected: prob.dim_lambda(),
            found: lambda_grid.dim(),
        });
    }
    let total = grid.x.size().saturating_mul(grid.y.size()).saturating_mul(lambda_grid.size());
    if total > 50 * MAX_GRID_SIZE {
        return Err(Error::GridTooLarge(format!("dual scan of {total} evaluations is too large")));
    }
    let xs = projected_points(&grid.x, &prob.set_x)?;
    let ys = projected_points(&grid.y, &prob.set_y)?;
    let lambdas: Vec<Vector> = lambda_grid
        .points()
        .iter()
        .map(|l| prob.constraints.project_multiplier(l))
        .collect();
    let cons = &prob.constraints;
    // L = f − λ·(Ax − c) − λ·By: cache the pieces that do not depend on λ
    let fy: Vec<Vec<f64>> = xs
        .iter()
        .map(|x| ys.iter().map(|y| prob.f.value(x, y) - prob.g.value(y)).collect())
        .collect();
    let by: Vec<Vector> = ys.iter().map(|y| &cons.b * y).collect();
    let ax: Vec<Vector> = xs.iter().map(|x| &cons.a * x - &cons.c).collect();
    let mut best = f64::INFINITY;
    let mut argmin = xs[0].clone();
    for lambda in &lambdas {
        let lby: Vec<f64> = by.iter().map(|b| lambda.dot(b)).collect();
        for (i, x) in xs.iter().enumerate() {
            let base = prob.h.value(x) - lambda.dot(&ax[i]);
            let inner = fy[i]
                .iter()
                .zip(&lby)
                .map(|(f, l)| f - l)
                .fold(f64::NEG_INFINITY, f64::max);
            if base + inner < best {
                best = base + inner;
                argmin = x.clone();
            }
        }
    }
    Ok(BruteValue {
        value: best,
        argmin_x: argmin,
        infeasible_x: 0,
    })
}

/// Multiplier truncation for the dual scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaBound {
    pub lambda_max: f64,
    /// Smallest (over grid `x`) best slack of `LE` rows.
    pub slater_slack: f64,
    pub value_range: f64,
}

/// Bound on optimal multipliers from a Slater point: for each grid `x`,
/// `‖λ*‖₁ ≤ (max_y f − f(x, ŷ)) / slack(ŷ)`; the bound is doubled for
/// safety. Equality rows fall back to `1` when no slack information exists.
pub fn lambda_bound(prob: &MinimaxProblem, grid: &BruteGrid) -> Result<LambdaBound> {
    check_small(prob, grid)?;
    let xs = projected_points(&grid.x, &prob.set_x)?;
    let ys = projected_points(&grid.y, &prob.set_y)?;
    let cons = &prob.constraints;
    let le_rows: Vec<usize> = (0..cons.rows()).filter(|&i| cons.senses[i] == Sense::Le).collect();
    let mut worst_ratio: f64 = 0.0;
    let mut min_slack = f64::INFINITY;
    let mut range: f64 = 0.0;
    for x in &xs {
        let vals: Vec<f64> = ys.iter().map(|y| prob.f.value(x, y) - prob.g.value(y)).collect();
        let fmax = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let fmin = vals.iter().copied().fold(f64::INFINITY, f64::min);
        range = range.max(fmax - fmin);
        if le_rows.is_empty() {
            continue;
        }
        let mut best_ratio = f64::INFINITY;
        let mut best_slack: f64 = 0.0;
        for (y, v) in ys.iter().zip(&vals) {
            let r = cons.residual(x, y);
            let slack = le_rows.iter().map(|&i| -r[i]).fold(f64::INFINITY, f64::min);
            if slack > 0.0 {
                best_ratio = best_ratio.min((fmax - v) / slack);
                best_slack = best_slack.max(slack);
            }
        }
        if best_slack <= 0.0 {
            return Err(Error::Infeasible(format!(
                "no strictly feasible grid y for x = {:?}",
                x.as_slice()
            )));
        }
        worst_ratio = worst_ratio.max(best_ratio);
        min_slack = min_slack.min(best_slack);
    }
    let lambda_max = if le_rows.is_empty() { 1.0 } else { (2.0 * worst_ratio).max(1e-12) };
    Ok(LambdaBound {
        lambda_max,
        slater_slack: min_slack,
        value_range: range,
    })
}

/// Approximate-stationarity constants `(b₁, b₂)` for the strongly convex,
/// strongly concave diagnostic case.
pub fn strong_duality_constants(
    l: f64,
    mu_x: f64,
    mu_y: f64,
    alpha: f64,
    beta: f64,
    norm_a: f64,
    norm_b: f64,
) -> Result<(f64, f64)> {
    for (name, v) in [("L", l), ("mu_x", mu_x), ("mu_y", mu_y), ("alpha", alpha), ("beta", beta)] {
        if !(v > 0.0) {
            return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
        }
    }
    if !(norm_a >= 0.0) || !(norm_b >= 0.0) {
        return Err(Error::InvalidParameter("matrix norms must be nonnegative".into()));
    }
    let eta_y = (2.0 * beta + mu_y) * (beta + l) / (mu_y * beta);
    let l_phi = l + l * l / mu_y;
    let eta_x = (2.0 * beta + mu_x) * (beta + l_phi) / (mu_x * beta);
    let t = eta_y * eta_x * l / (alpha * beta) + eta_x / alpha;
    let b1 = 1.0 + eta_y * norm_b / beta + (norm_a + norm_b * l / mu_y) * t;
    let b2 = (t * t + (eta_y / beta + l / mu_y * t).powi(2)).sqrt();
    Ok((b1, b2))
}
