//! Primal-dual proximal gradient method for problems linear in `y` (PDPG-L).
//!
//! The `y`-subproblem is a strongly concave quadratic solved in closed form;
//! `x` and `λ` are then updated simultaneously from `(x_k, y_{k+1}, λ_k)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{operator_norm, Vector};
use crate::model::{lagrangian_grads, IterateState, MinimaxProblem, Schedule};
use crate::pdapg::{make_row, Driver};
use crate::stationarity::{grad_g, potential_v};
use crate::trace::{SolveResult, TraceRow};

/// Relative probe mismatch above which `f` is declared nonlinear in `y`.
pub const LINEARITY_TOL: f64 = 1e-8;

/// `coef · k^exponent`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLaw {
    pub coef: f64,
    pub exponent: f64,
}

impl PowerLaw {
    pub fn new(coef: f64, exponent: f64) -> Self {
        PowerLaw { coef, exponent }
    }

    pub fn at(&self, k: usize) -> f64 {
        self.coef * (k as f64).powf(self.exponent)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PdpgLSchedule {
    /// `q_k = L/(2k^{1/3})`, `p_k = q_k/4`, `ᾱ_k = 3L_A/2 + 14τL_B²/(5q_k)`, `γ̄_k = 1/ᾱ_k`.
    Theory,
    Manual {
        q: PowerLaw,
        p: PowerLaw,
        alpha: PowerLaw,
        gamma: PowerLaw,
    },
}

impl PdpgLSchedule {
    /// `q_k = k^{-1/3}`, `p_k = 0`, `ᾱ_k = k^{1/3}`, `γ̄_k = k^{-1/3}`.
    pub fn cube_root() -> Self {
        PdpgLSchedule::Manual {
            q: PowerLaw::new(1.0, -1.0 / 3.0),
            p: PowerLaw::new(0.0, 0.0),
            alpha: PowerLaw::new(1.0, 1.0 / 3.0),
            gamma: PowerLaw::new(1.0, -1.0 / 3.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdpgLParams {
    pub tau: f64,
    pub max_iter: usize,
    /// Non-finite disables the stopping test.
    pub target_eps: f64,
    pub schedule: PdpgLSchedule,
    pub record_potentials: bool,
    pub record_iterates: bool,
}

/// Constants entering the theory schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdpgLConstants {
    pub l: f64,
    pub l_a: f64,
    pub l_b: f64,
    pub tau: f64,
}

impl PdpgLConstants {
    pub fn for_problem(prob: &MinimaxProblem, tau: f64) -> Self {
        let l = prob.f.lipschitz();
        PdpgLConstants {
            l,
            l_a: l + operator_norm(&prob.constraints.a),
            l_b: l + operator_norm(&prob.constraints.b),
            tau,
        }
    }

    /// Weight `θ_k = 14(τ−1)L_B²/(5q_k)` of the primal-dual movement in the
    /// descent inequality of `V`.
    pub fn theta(&self, q: f64) -> f64 {
        14.0 * (self.tau - 1.0) * self.l_b * self.l_b / (5.0 * q)
    }
}

/// Schedule values `(q_k, p_k, ᾱ_k, γ̄_k)` for iteration `k ≥ 1`.
pub fn pdpg_l_schedule(schedule: &PdpgLSchedule, k: usize, consts: &PdpgLConstants) -> Result<Schedule> {
    if k < 1 {
        return Err(Error::InvalidParameter("iteration index starts at 1".into()));
    }
    let (q, p, alpha, gamma) = match schedule {
        PdpgLSchedule::Theory => {
            if !(consts.tau > 1.0) {
                return Err(Error::InvalidParameter(format!("tau must exceed 1, got {}", consts.tau)));
            }
            let q = consts.l / (2.0 * (k as f64).cbrt());
            let alpha = 1.5 * consts.l_a + 14.0 * consts.tau * consts.l_b.powi(2) / (5.0 * q);
            (q, q / 4.0, alpha, 1.0 / alpha)
        }
        PdpgLSchedule::Manual { q, p, alpha, gamma } => (q.at(k), p.at(k), alpha.at(k), gamma.at(k)),
    };
    if !(q > 0.0) || !(p >= 0.0) || !(alpha > 0.0) || !(gamma > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "schedule at k={k} gives q={q}, p={p}, alpha={alpha}, gamma={gamma}"
        )));
    }
    Ok(Schedule {
        alpha,
        beta: consts.l,
        gamma,
        rho: 0.0,
        q,
        p,
    })
}

fn require_linear(prob: &MinimaxProblem) -> Result<()> {
    if !prob.f.is_linear_in_y() {
        return Err(Error::Configuration("PDPG-L needs f declared linear in y".into()));
    }
    if !prob.g.is_zero() {
        return Err(Error::Configuration("PDPG-L needs g = 0".into()));
    }
    Ok(())
}

/// `d(x) = ∇_y f(x, ·)`, checked at two probe points.
pub fn linear_y_coefficient(prob: &MinimaxProblem, x: &Vector) -> Result<Vector> {
    if !prob.f.is_linear_in_y() {
        return Err(Error::Configuration("f is not declared linear in y".into()));
    }
    let m = prob.dim_y();
    let d0 = prob.f.grad_y(x, &Vector::zeros(m));
    let probe = Vector::from_fn(m, |i, _| 1.0 + 0.5 * (i % 3) as f64);
    let d1 = prob.f.grad_y(x, &probe);
    let mismatch = (&d0 - &d1).amax() / d0.amax().max(1.0);
    if mismatch > LINEARITY_TOL {
        return Err(Error::NotLinearInY { mismatch });
    }
    Ok(d0)
}

/// Exact maximizer of `L(x_k,y,λ_k) − (q/2)‖y‖² − (p/2)‖y − y_k‖²` over `Y`.
pub fn pdpg_l_y_step(prob: &MinimaxProblem, state: &IterateState, q: f64, p: f64) -> Result<Vector> {
    if !(q >= 0.0 && p >= 0.0 && q + p > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need q, p >= 0 with q + p > 0, got q={q}, p={p}"
        )));
    }
    prob.check_point(&state.x, &state.y, &state.lambda)?;
    let d = linear_y_coefficient(prob, &state.x)?;
    let w = (d - prob.constraints.b.tr_mul(&state.lambda) + &state.y * p) / (q + p);
    Ok(prob.set_y.project(&w))
}

/// One PDPG-L iteration.
pub fn pdpg_l_step(
    prob: &MinimaxProblem,
    state: &IterateState,
    q: f64,
    p: f64,
    alpha: f64,
    gamma: f64,
) -> Result<IterateState> {
    require_linear(prob)?;
    if !(alpha > 0.0) || !(gamma > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha and gamma must be positive, got {alpha}, {gamma}"
        )));
    }
    let y_next = pdpg_l_y_step(prob, state, q, p)?;
    let (gx, _, gl) = lagrangian_grads(prob, &state.x, &y_next, &state.lambda)?;
    let x_next = prob.h.prox(&(&state.x - gx / alpha), alpha, &prob.set_x);
    // ∇_λ L = −(Ax_k + By_{k+1} − c)
    let lambda_next = prob.constraints.project_multiplier(&(&state.lambda - gl * gamma));
    Ok(IterateState {
        x: x_next,
        y: y_next,
        lambda: lambda_next,
        k: state.k + 1,
        schedule: Schedule {
            alpha,
            beta: prob.f.lipschitz(),
            gamma,
            rho: 0.0,
            q,
            p,
        },
    })
}

/// Runs PDPG-L from `init` (projected first). Convergence uses the measure
/// with stepsizes `(ᾱ_k, L, γ̄_k)`.
pub fn pdpg_l_solve(
    prob: &MinimaxProblem,
    params: &PdpgLParams,
    init: &IterateState,
    sink: Option<&mut dyn FnMut(&TraceRow)>,
) -> Result<SolveResult> {
    require_linear(prob)?;
    if matches!(params.schedule, PdpgLSchedule::Theory) && !(params.tau > 1.0) {
        return Err(Error::InvalidParameter(format!("tau must exceed 1, got {}", params.tau)));
    }
    let consts = PdpgLConstants::for_problem(prob, params.tau);
    let mut driver = Driver::new(params.target_eps, params.max_iter, params.record_iterates, sink)?;
    let mut state = init.projected(prob)?;
    state.k = 1;
    let mut steps = 0;
    loop {
        let k = state.k;
        let sched = pdpg_l_schedule(&params.schedule, k, &consts)?;
        state.schedule = sched;
        let report = grad_g(prob, &state.x, &state.y, &state.lambda, sched.alpha, sched.beta, sched.gamma, 0.0)?;
        let potential = if params.record_potentials {
            Some(potential_v(prob, &state.x, &state.y, &state.lambda, sched.q, sched.p, &state.y)?)
        } else {
            None
        };
        let row = make_row(k, &state, &report, None, potential.as_ref(), sched);
        if driver.record(row, &state) || steps == params.max_iter {
            break;
        }
        state = pdpg_l_step(prob, &state, sched.q, sched.p, sched.alpha, sched.gamma)?;
        steps += 1;
    }
    Ok(driver.finish(state, steps))
}
