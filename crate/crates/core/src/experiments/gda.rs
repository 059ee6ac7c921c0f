//! Simultaneous projected gradient descent-ascent with a multiplier, used as
//! the non-convergent reference on bilinear games.

use crate::error::{Error, Result};
use crate::model::{lagrangian_grads, IterateState, MinimaxProblem, Schedule};
use crate::pdapg::{make_row, Driver};
use crate::stationarity::grad_g;
use crate::trace::{SolveResult, TraceRow};

/// All three blocks are updated from the same `(x_k, y_k, λ_k)`:
/// `x⁺ = P_X(x − s∇_xL)`, `y⁺ = P_Y(y + s∇_yL)`, `λ⁺ = P_Λ(λ + s(Ax + By − c))`.
pub fn baseline_sim_gda(
    prob: &MinimaxProblem,
    stepsize: f64,
    max_iter: usize,
    init: &IterateState,
    sink: Option<&mut dyn FnMut(&TraceRow)>,
) -> Result<SolveResult> {
    if !(stepsize > 0.0) {
        return Err(Error::InvalidParameter(format!("stepsize must be positive, got {stepsize}")));
    }
    let sched = Schedule {
        alpha: 1.0 / stepsize,
        beta: 1.0 / stepsize,
        gamma: stepsize,
        ..Schedule::default()
    };
    let mut driver = Driver::new(f64::INFINITY, max_iter, true, sink)?;
    let mut state = init.projected(prob)?;
    state.k = 1;
    state.schedule = sched;
    let mut steps = 0;
    loop {
        let report = grad_g(prob, &state.x, &state.y, &state.lambda, sched.alpha, sched.beta, sched.gamma, 0.0)?;
        let row = make_row(state.k, &state, &report, None, None, sched);
        driver.record(row, &state);
        if steps == max_iter {
            break;
        }
        let (gx, gy, gl) = lagrangian_grads(prob, &state.x, &state.y, &state.lambda)?;
        state = IterateState {
            x: prob.set_x.project(&(&state.x - gx * stepsize)),
            y: prob.set_y.project(&(&state.y + gy * stepsize)),
            lambda: prob.constraints.project_multiplier(&(&state.lambda - gl * stepsize)),
            k: state.k + 1,
            schedule: sched,
        };
        steps += 1;
    }
    Ok(driver.finish(state, steps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::gen_bilinear;
    use crate::linalg::Vector;

    #[test]
    fn stationary_start_is_fixed() {
        let (p, _) = gen_bilinear(1).unwrap();
        let z = Vector::zeros(1);
        let r = baseline_sim_gda(&p, 0.3, 50, &IterateState::new(z.clone(), z.clone(), z.clone()), None).unwrap();
        assert_eq!(r.final_state.x[0], 0.0);
        assert_eq!(r.final_state.y[0], 0.0);
    }

    #[test]
    fn bilinear_orbit_stays_bounded_and_away() {
        let (p, _) = gen_bilinear(2).unwrap();
        let one = Vector::from_element(1, 1.0);
        let init = IterateState::new(one.clone(), one, Vector::zeros(1));
        let r = baseline_sim_gda(&p, 0.3, 10_000, &init, None).unwrap();
        let its = r.trace.iterates.unwrap();
        let tail_min = its[its.len() - 5000..]
            .iter()
            .map(|(x, y)| (x[0] * x[0] + y[0] * y[0]).sqrt())
            .fold(f64::INFINITY, f64::min);
        assert!(tail_min >= 0.1);
        assert!(its.iter().all(|(x, y)| x[0].abs() <= 2.0 + 1e-12 && y[0].abs() <= 2.0 + 1e-12));
    }
}
