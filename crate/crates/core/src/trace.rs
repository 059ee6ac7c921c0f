//! Per-iteration logging shared by the solvers.

use serde::{Deserialize, Serialize};

use crate::model::{IterateState, Schedule};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iter: usize,
    pub norm_x: f64,
    pub norm_y: f64,
    pub norm_lambda: f64,
    /// Stationarity measure the stopping rule uses.
    pub grad_g: f64,
    /// ρ-augmented measure (equal to `grad_g` when ρ = 0).
    pub grad_g_aug: f64,
    pub max_violation: f64,
    pub potential: Option<f64>,
    pub potential_trusted: Option<bool>,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub rho: f64,
    pub q: f64,
    pub p: f64,
    pub certificate_ok: bool,
}

impl TraceRow {
    pub fn schedule(&self) -> Schedule {
        Schedule {
            alpha: self.alpha,
            beta: self.beta,
            gamma: self.gamma,
            rho: self.rho,
            q: self.q,
            p: self.p,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SolveTrace {
    pub rows: Vec<TraceRow>,
    /// `(x, y)` at every iteration when requested.
    pub iterates: Option<Vec<(Vec<f64>, Vec<f64>)>>,
}

impl SolveTrace {
    pub fn certificate_ok(&self) -> bool {
        self.rows.iter().all(|r| r.certificate_ok)
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub final_state: IterateState,
    pub trace: SolveTrace,
    pub converged: bool,
    pub iterations_used: usize,
    /// First iteration whose measure reached the target.
    pub first_hit: Option<usize>,
}

/// Receives every trace row as soon as it is produced.
pub type TraceSink<'a> = &'a mut dyn FnMut(&TraceRow);
