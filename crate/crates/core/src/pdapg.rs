//! Primal-dual alternating proximal gradient method (PDAPG).
//!
//! Each iteration performs a prox-gradient ascent step in `y`, a
//! prox-gradient descent step in `x` at the new `y`, and a projected ascent
//! step in `λ` at the new `(x, y)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::operator_norm;
use crate::model::{lagrangian_grads, IterateState, MinimaxProblem, Schedule};
use crate::stationarity::{grad_g, potential_m, potential_s, PotentialValue, StationarityReport};
use crate::trace::{SolveResult, SolveTrace, TraceRow};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Regime {
    /// Constant stepsizes, no regularization.
    StronglyConcave { alpha: f64, gamma: f64 },
    /// Decaying regularization `ρ_k = 2(L+β)/k^{1/4}` with matching stepsizes.
    Concave { tau: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamMode {
    /// Enforce the parameter conditions under which descent is guaranteed.
    Theory,
    /// Accept any positive parameters.
    Manual,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdapgParams {
    pub beta: f64,
    pub regime: Regime,
    pub mode: ParamMode,
    pub max_iter: usize,
    /// Non-finite disables the stopping test.
    pub target_eps: f64,
    pub record_potentials: bool,
    pub record_iterates: bool,
}

/// Quantities shared by the strongly concave parameter conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NcscConstants {
    pub l: f64,
    pub mu: f64,
    pub norm_a: f64,
    pub norm_b: f64,
    pub beta: f64,
    pub eta: f64,
    /// Lower bound that `α` must exceed.
    pub alpha_threshold: f64,
    /// Lower bound that `1/γ` must exceed.
    pub inv_gamma_threshold: f64,
}

impl NcscConstants {
    pub fn new(l: f64, mu: f64, norm_a: f64, norm_b: f64, beta: f64) -> Result<Self> {
        if !(mu > 0.0) {
            return Err(Error::InvalidParameter(
                "strongly concave regime needs mu > 0".into(),
            ));
        }
        let eta = (2.0 * beta + mu) * (beta + l) / (mu * beta);
        let lb = l + beta;
        let alpha_threshold = l.powi(3) / lb.powi(2)
            + l * lb.powi(2) * eta * eta / (beta * beta)
            + l * l / mu
            + 1.5 * l;
        let inv_gamma_threshold =
            2.0 * norm_b * norm_b * lb.powi(2) * eta * eta / (l * beta * beta) + l + l * l / mu;
        Ok(NcscConstants {
            l,
            mu,
            norm_a,
            norm_b,
            beta,
            eta,
            alpha_threshold,
            inv_gamma_threshold,
        })
    }

    pub fn for_problem(prob: &MinimaxProblem, beta: f64) -> Result<Self> {
        Self::new(
            prob.f.lipschitz(),
            prob.f.strong_concavity(),
            operator_norm(&prob.constraints.a),
            operator_norm(&prob.constraints.b),
            beta,
        )
    }

    /// Checks `β > 5L/2` and the lower bounds on `α` and `1/γ`.
    pub fn check(&self, alpha: f64, gamma: f64) -> Result<()> {
        if !(self.beta > 2.5 * self.l) {
            return Err(Error::InvalidParameter(format!(
                "theory mode needs beta > 5L/2 = {}, got {}",
                2.5 * self.l,
                self.beta
            )));
        }
        if !(alpha > self.alpha_threshold) {
            return Err(Error::InvalidParameter(format!(
                "theory mode needs alpha > {}, got {alpha}",
                self.alpha_threshold
            )));
        }
        if !(1.0 / gamma > self.inv_gamma_threshold) {
            return Err(Error::InvalidParameter(format!(
                "theory mode needs 1/gamma > {}, got {}",
                self.inv_gamma_threshold,
                1.0 / gamma
            )));
        }
        Ok(())
    }

    /// `(α, γ)` exceeding the thresholds by the relative `margin`.
    pub fn theory_stepsizes(&self, margin: f64) -> (f64, f64) {
        (
            self.alpha_threshold * (1.0 + margin),
            1.0 / (self.inv_gamma_threshold * (1.0 + margin)),
        )
    }

    /// Sufficient-decrease constant `d₁` of the potential `S`.
    pub fn d1(&self, alpha: f64, gamma: f64) -> f64 {
        let l = self.l;
        let num = (alpha - self.alpha_threshold)
            .min(self.beta - 2.5 * l)
            .min(1.0 / gamma - self.inv_gamma_threshold);
        let den = (self.beta * self.beta + 2.0 * l * l + 3.0 * self.norm_b.powi(2))
            .max(2.0 * alpha * alpha + 3.0 * self.norm_a.powi(2))
            .max(3.0 / (gamma * gamma));
        num / den
    }
}

/// Stepsizes of iteration `k ≥ 1`. `norm_b` is only used by the concave regime.
pub fn pdapg_schedule(regime: Regime, k: usize, l: f64, beta: f64, norm_b: f64) -> Result<Schedule> {
    if k < 1 {
        return Err(Error::InvalidParameter("iteration index starts at 1".into()));
    }
    match regime {
        Regime::StronglyConcave { alpha, gamma } => Ok(Schedule {
            alpha,
            beta,
            gamma,
            ..Schedule::default()
        }),
        Regime::Concave { tau } => {
            if !(tau > 1.0) {
                return Err(Error::InvalidParameter(format!("tau must exceed 1, got {tau}")));
            }
            let lb = l + beta;
            let rho = 2.0 * lb / (k as f64).powf(0.25);
            let common = lb.powi(4) * (2.0 * beta + rho).powi(2) / (beta.powi(4) * rho * rho);
            let alpha = l.powi(3) / (lb * lb) + l * tau * common + tau * l * l / rho + 1.5 * l;
            let inv_gamma =
                (2.0 * norm_b * norm_b + l * l * (tau - 1.0)) * common / l + l + l * l * tau / rho;
            Ok(Schedule {
                alpha,
                beta,
                gamma: 1.0 / inv_gamma,
                rho,
                ..Schedule::default()
            })
        }
    }
}

fn check_step_params(alpha: f64, beta: f64, gamma: f64, rho: f64) -> Result<()> {
    for (name, v) in [("alpha", alpha), ("beta", beta), ("gamma", gamma)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
        }
    }
    if !(rho >= 0.0) {
        return Err(Error::InvalidParameter(format!("rho must be >= 0, got {rho}")));
    }
    Ok(())
}

/// One PDAPG iteration.
pub fn pdapg_step(
    prob: &MinimaxProblem,
    state: &IterateState,
    alpha: f64,
    beta: f64,
    gamma: f64,
    rho: f64,
) -> Result<IterateState> {
    check_step_params(alpha, beta, gamma, rho)?;
    let (x, y, lambda) = (&state.x, &state.y, &state.lambda);
    let (_, gy, _) = lagrangian_grads(prob, x, y, lambda)?;
    let y_next = prob
        .g
        .prox(&(y + (gy - y * rho) / beta), beta, &prob.set_y);
    let (gx, _, _) = lagrangian_grads(prob, x, &y_next, lambda)?;
    let x_next = prob.h.prox(&(x - gx / alpha), alpha, &prob.set_x);
    let residual = prob.constraints.residual(&x_next, &y_next);
    let lambda_next = prob.constraints.project_multiplier(&(lambda + residual * gamma));
    Ok(IterateState {
        x: x_next,
        y: y_next,
        lambda: lambda_next,
        k: state.k + 1,
        schedule: Schedule {
            alpha,
            beta,
            gamma,
            rho,
            ..Schedule::default()
        },
    })
}

pub(crate) fn make_row(
    k: usize,
    state: &IterateState,
    plain: &StationarityReport,
    aug: Option<&StationarityReport>,
    potential: Option<&PotentialValue>,
    schedule: Schedule,
) -> TraceRow {
    TraceRow {
        iter: k,
        norm_x: state.x.norm(),
        norm_y: state.y.norm(),
        norm_lambda: state.lambda.norm(),
        grad_g: plain.norm_total,
        grad_g_aug: aug.map_or(plain.norm_total, |a| a.norm_total),
        max_violation: plain.max_violation(),
        potential: potential.map(|p| p.value),
        potential_trusted: potential.map(PotentialValue::trusted),
        alpha: schedule.alpha,
        beta: schedule.beta,
        gamma: schedule.gamma,
        rho: schedule.rho,
        q: schedule.q,
        p: schedule.p,
        certificate_ok: plain.certificate_ok(),
    }
}

/// Shared driver: evaluates the measure of state `k`, records it, and
/// either stops or advances.
pub(crate) struct Driver<'s> {
    pub target_eps: f64,
    pub sink: Option<&'s mut dyn FnMut(&TraceRow)>,
    pub trace: SolveTrace,
    pub first_hit: Option<usize>,
}

impl<'s> Driver<'s> {
    pub fn new(
        target_eps: f64,
        max_iter: usize,
        record_iterates: bool,
        sink: Option<&'s mut dyn FnMut(&TraceRow)>,
    ) -> Result<Self> {
        if !(target_eps > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "target_eps must be positive, got {target_eps}"
            )));
        }
        if max_iter == 0 {
            return Err(Error::InvalidParameter("max_iter must be positive".into()));
        }
        Ok(Driver {
            target_eps,
            sink,
            trace: SolveTrace {
                rows: Vec::new(),
                iterates: record_iterates.then(Vec::new),
            },
            first_hit: None,
        })
    }

    /// Records a row; returns true when the solve should stop.
    pub fn record(&mut self, row: TraceRow, state: &IterateState) -> bool {
        let k = row.iter;
        let hit = row.grad_g <= self.target_eps;
        if let Some(sink) = self.sink.as_mut() {
            sink(&row);
        }
        if let Some(it) = self.trace.iterates.as_mut() {
            it.push((state.x.iter().copied().collect(), state.y.iter().copied().collect()));
        }
        self.trace.rows.push(row);
        if hit && self.first_hit.is_none() {
            self.first_hit = Some(k);
        }
        hit && self.target_eps.is_finite()
    }

    pub fn finish(self, final_state: IterateState, steps: usize) -> SolveResult {
        SolveResult {
            final_state,
            trace: self.trace,
            converged: self.first_hit.is_some(),
            iterations_used: steps,
            first_hit: self.first_hit,
        }
    }
}

/// Runs PDAPG from `init` (projected onto `X × Y × Λ` first).
///
/// States are numbered from 1; state `k` is measured with the stepsizes of
/// iteration `k`. The solve stops at the first state whose measure is at
/// most `target_eps`, or after `max_iter` steps.
pub fn pdapg_solve(
    prob: &MinimaxProblem,
    params: &PdapgParams,
    init: &IterateState,
    sink: Option<&mut dyn FnMut(&TraceRow)>,
) -> Result<SolveResult> {
    let l = prob.f.lipschitz();
    let norm_b = operator_norm(&prob.constraints.b);
    if !(params.beta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "beta must be positive, got {}",
            params.beta
        )));
    }
    if params.mode == ParamMode::Theory {
        match params.regime {
            Regime::StronglyConcave { alpha, gamma } => {
                NcscConstants::for_problem(prob, params.beta)?.check(alpha, gamma)?;
            }
            Regime::Concave { tau } => {
                if !(tau > 1.0) {
                    return Err(Error::InvalidParameter(format!("tau must exceed 1, got {tau}")));
                }
                if !(params.beta > 2.5 * l) {
                    return Err(Error::InvalidParameter(format!(
                        "theory mode needs beta > 5L/2 = {}, got {}",
                        2.5 * l,
                        params.beta
                    )));
                }
            }
        }
    }
    let mut driver = Driver::new(params.target_eps, params.max_iter, params.record_iterates, sink)?;
    let mut state = init.projected(prob)?;
    state.k = 1;
    let concave = matches!(params.regime, Regime::Concave { .. });
    let mut steps = 0;
    loop {
        let k = state.k;
        let sched = pdapg_schedule(params.regime, k, l, params.beta, norm_b)?;
        state.schedule = sched;
        let plain = grad_g(prob, &state.x, &state.y, &state.lambda, sched.alpha, sched.beta, sched.gamma, 0.0)?;
        let aug = if concave {
            Some(grad_g(prob, &state.x, &state.y, &state.lambda, sched.alpha, sched.beta, sched.gamma, sched.rho)?)
        } else {
            None
        };
        let potential = if params.record_potentials {
            let p = if concave {
                potential_m(prob, &state.x, &state.y, &state.lambda, sched.rho)
            } else {
                potential_s(prob, &state.x, &state.y, &state.lambda)
            };
            match p {
                Ok(p) => Some(p),
                Err(Error::UntrustedPotential(msg)) => {
                    log::debug!("potential skipped: {msg}");
                    None
                }
                Err(e) => return Err(e),
            }
        } else {
            None
        };
        let row = make_row(k, &state, &plain, aug.as_ref(), potential.as_ref(), sched);
        if driver.record(row, &state) || steps == params.max_iter {
            break;
        }
        state = pdapg_step(prob, &state, sched.alpha, sched.beta, sched.gamma, sched.rho)?;
        steps += 1;
    }
    Ok(driver.finish(state, steps))
}
