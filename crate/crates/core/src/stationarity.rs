//! Stationarity measure, constraint-violation certificate and potential
//! functions used to monitor the solvers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::model::{lagrangian_grads, lagrangian_value, MinimaxProblem};

/// Inner maximizations are trusted only below this residual.
pub const INNER_TRUST_TOL: f64 = 1e-9;
pub const INNER_MAX_ITER: usize = 200_000;
/// Slack allowed when comparing violations with the measure.
pub const CERTIFICATE_SLACK: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationarityReport {
    pub block_x: Vector,
    pub block_y: Vector,
    pub block_lambda: Vector,
    pub norm_x: f64,
    pub norm_y: f64,
    pub norm_lambda: f64,
    pub norm_total: f64,
    pub per_row_violation: Vector,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub rho: f64,
}

impl StationarityReport {
    pub fn max_violation(&self) -> f64 {
        self.per_row_violation.iter().copied().fold(0.0, f64::max)
    }

    /// Every row violation is bounded by the measure. Holds exactly
    /// whenever the multiplier lies in its cone.
    pub fn certificate_ok(&self) -> bool {
        self.max_violation() <= self.norm_total + CERTIFICATE_SLACK
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")))
    }
}

/// The prox-gradient residual map `∇G^{α,β,γ}` at `(x, y, λ)`.
///
/// With `ρ > 0` the y-block uses `∇_y L − ρy`.
#[allow(clippy::too_many_arguments)]
pub fn grad_g(
    prob: &MinimaxProblem,
    x: &Vector,
    y: &Vector,
    lambda: &Vector,
    alpha: f64,
    beta: f64,
    gamma: f64,
    rho: f64,
) -> Result<StationarityReport> {
    check_positive("alpha", alpha)?;
    check_positive("beta", beta)?;
    check_positive("gamma", gamma)?;
    if !(rho >= 0.0) {
        return Err(Error::InvalidParameter(format!("rho must be >= 0, got {rho}")));
    }
    let (gx, gy, gl) = lagrangian_grads(prob, x, y, lambda)?;
    let px = prob.h.prox(&(x - &gx / alpha), alpha, &prob.set_x);
    let block_x = (x - px) * alpha;
    let ascent = (&gy - y * rho) / beta;
    let py = prob.g.prox(&(y + ascent), beta, &prob.set_y);
    let block_y = (y - py) * beta;
    let pl = prob.constraints.project_multiplier(&(lambda - &gl * gamma));
    let block_lambda = (lambda - pl) / gamma;
    let (norm_x, norm_y, norm_lambda) = (block_x.norm(), block_y.norm(), block_lambda.norm());
    Ok(StationarityReport {
        norm_total: (norm_x * norm_x + norm_y * norm_y + norm_lambda * norm_lambda).sqrt(),
        norm_x,
        norm_y,
        norm_lambda,
        block_x,
        block_y,
        block_lambda,
        per_row_violation: prob.constraints.violation(x, y),
        alpha,
        beta,
        gamma,
        rho,
    })
}

pub fn constraint_violation(prob: &MinimaxProblem, x: &Vector, y: &Vector) -> Vector {
    prob.constraints.violation(x, y)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PotentialValue {
    pub value: f64,
    pub inner_max_residual: f64,
    pub maximizer: Vector,
}

impl PotentialValue {
    pub fn trusted(&self) -> bool {
        self.inner_max_residual <= INNER_TRUST_TOL
    }
}

/// `max_{y ∈ Y} L(x,y,λ) − (ρ/2)‖y‖² − (p/2)‖y − y₀‖² − g(y)`.
///
/// Uses the closed form when `f` is linear in `y` and `g = 0`, accelerated
/// prox-gradient ascent with restarts otherwise.
pub fn inner_max_value(
    prob: &MinimaxProblem,
    x: &Vector,
    lambda: &Vector,
    rho: f64,
    prox_center: Option<(&Vector, f64)>,
) -> Result<PotentialValue> {
    let (y0, p) = match prox_center {
        Some((y0, p)) => (y0.clone(), p),
        None => (Vector::zeros(prob.dim_y()), 0.0),
    };
    if !(rho >= 0.0) || !(p >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "regularization weights must be >= 0, got rho={rho}, p={p}"
        )));
    }
    let mu = prob.f.strong_concavity() + rho + p;
    if !(mu > 0.0) {
        return Err(Error::UntrustedPotential(
            "inner maximization is not strongly concave (mu = rho = p = 0)".into(),
        ));
    }
    let b = &prob.constraints.b;
    let grad = |y: &Vector| -> Result<Vector> {
        let (_, gy, _) = lagrangian_grads(prob, x, y, lambda)?;
        Ok(gy - y * rho - (y - &y0) * p)
    };
    let objective = |y: &Vector| -> Result<f64> {
        Ok(lagrangian_value(prob, x, y, lambda)?
            - 0.5 * rho * y.norm_squared()
            - 0.5 * p * (y - &y0).norm_squared()
            - prob.g.value(y))
    };
    let ly = prob.f.lipschitz() + rho + p;
    let residual = |y: &Vector| -> Result<f64> {
        let gy = grad(y)?;
        let step = prob.g.prox(&(y + &gy / ly), ly, &prob.set_y);
        Ok(ly * (y - step).norm())
    };

    if prob.f.is_linear_in_y() && prob.g.is_zero() {
        let d = prob.f.grad_y(x, &Vector::zeros(prob.dim_y()));
        let w = (d - b.tr_mul(lambda) + &y0 * p) / (rho + p);
        let y = prob.set_y.project(&w);
        return Ok(PotentialValue {
            value: objective(&y)?,
            inner_max_residual: residual(&y)?,
            maximizer: y,
        });
    }

    let mut y = prob.set_y.project(&y0);
    let mut z = y.clone();
    let mut t: f64 = 1.0;
    let mut fy = objective(&y)?;
    let mut res = f64::INFINITY;
    for _ in 0..INNER_MAX_ITER {
        let gz = grad(&z)?;
        let y_next = prob.g.prox(&(&z + &gz / ly), ly, &prob.set_y);
        let f_next = objective(&y_next)?;
        if f_next < fy && t > 1.0 {
            // objective went down: restart momentum from the last iterate
            t = 1.0;
            z = y.clone();
            continue;
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        z = &y_next + (&y_next - &y) * ((t - 1.0) / t_next);
        t = t_next;
        y = y_next;
        fy = f_next;
        res = residual(&y)?;
        if res <= 0.1 * INNER_TRUST_TOL {
            break;
        }
    }
    Ok(PotentialValue {
        value: fy,
        inner_max_residual: res,
        maximizer: y,
    })
}

/// `S = 2Φ(x,λ) − L(x,y,λ) + h(x) + g(y)`
pub fn potential_s(prob: &MinimaxProblem, x: &Vector, y: &Vector, lambda: &Vector) -> Result<PotentialValue> {
    potential_m(prob, x, y, lambda, 0.0)
}

/// `M = 2Ψ(x,λ) − L_ρ(x,y,λ) + h(x) + g(y)`
pub fn potential_m(
    prob: &MinimaxProblem,
    x: &Vector,
    y: &Vector,
    lambda: &Vector,
    rho: f64,
) -> Result<PotentialValue> {
    let inner = inner_max_value(prob, x, lambda, rho, None)?;
    let l = lagrangian_value(prob, x, y, lambda)? - 0.5 * rho * y.norm_squared();
    Ok(PotentialValue {
        value: 2.0 * inner.value - l + prob.h.value(x) + prob.g.value(y),
        ..inner
    })
}

/// `V = 2Φ_{q,p}(x,λ) − L(x,y,λ) + h(x)` with the inner problem centred at `y_center`.
#[allow(clippy::too_many_arguments)]
pub fn potential_v(
    prob: &MinimaxProblem,
    x: &Vector,
    y: &Vector,
    lambda: &Vector,
    q: f64,
    p: f64,
    y_center: &Vector,
) -> Result<PotentialValue> {
    let inner = inner_max_value(prob, x, lambda, q, Some((y_center, p)))?;
    let l = lagrangian_value(prob, x, y, lambda)?;
    Ok(PotentialValue {
        value: 2.0 * inner.value - l + prob.h.value(x),
        ..inner
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::model::{CouplingConstraints, Sense, SmoothFunction};
    use crate::projections::ConvexSet;
    use approx::assert_abs_diff_eq;

    fn s(v: f64) -> Vector {
        Vector::from_element(1, v)
    }

    fn scalar_bilinear(c: f64) -> MinimaxProblem {
        let f = SmoothFunction::new(|x, y| x[0] * y[0], |_, y| y.clone(), |x, _| x.clone(), 1.0)
            .unwrap()
            .linear_in_y();
        let cons = CouplingConstraints::uniform(
            Matrix::from_element(1, 1, 1.0),
            Matrix::from_element(1, 1, 1.0),
            s(c),
            Sense::Le,
        )
        .unwrap();
        let set = ConvexSet::centered_ball(1, 2.0).unwrap();
        MinimaxProblem::builder(f, cons, set.clone(), set).build().unwrap()
    }

    #[test]
    fn stationary_point_has_zero_measure() {
        let p = scalar_bilinear(4.0);
        let r = grad_g(&p, &s(0.0), &s(0.0), &s(0.0), 1.0, 1.0, 1.0, 0.0).unwrap();
        assert_eq!(r.norm_total, 0.0);
        assert!(r.certificate_ok());
    }

    #[test]
    fn unconstrained_blocks_are_raw_gradients() {
        let f = SmoothFunction::new(
            |x, y| x[0] * x[0] * y[0] + x[1] * y[0] * y[0],
            |x, y| Vector::from_column_slice(&[2.0 * x[0] * y[0], y[0] * y[0]]),
            |x, y| Vector::from_element(1, x[0] * x[0] + 2.0 * x[1] * y[0]),
            10.0,
        )
        .unwrap();
        let cons = CouplingConstraints::new(
            Matrix::from_row_slice(2, 2, &[1.0, 2.0, 0.5, -1.0]),
            Matrix::from_row_slice(2, 1, &[1.0, 3.0]),
            Vector::from_column_slice(&[0.3, -0.2]),
            vec![Sense::Eq, Sense::Eq],
        )
        .unwrap();
        let p = MinimaxProblem::builder(f, cons, ConvexSet::full_space(2), ConvexSet::full_space(1))
            .allow_unbounded()
            .build()
            .unwrap();
        let (x, y, l) = (Vector::from_column_slice(&[0.4, -1.1]), s(0.7), Vector::from_column_slice(&[0.2, -0.5]));
        let r = grad_g(&p, &x, &y, &l, 1.0, 1.0, 1.0, 0.0).unwrap();
        let (gx, gy, gl) = lagrangian_grads(&p, &x, &y, &l).unwrap();
        assert_abs_diff_eq!(r.block_x, gx, epsilon = 1e-12);
        assert_abs_diff_eq!(r.block_y, -gy, epsilon = 1e-12);
        assert_abs_diff_eq!(r.block_lambda, gl, epsilon = 1e-12);
        let total = (r.norm_x.powi(2) + r.norm_y.powi(2) + r.norm_lambda.powi(2)).sqrt();
        assert_abs_diff_eq!(r.norm_total, total, epsilon = 1e-12 * total);
    }

    #[test]
    fn nonpositive_stepsizes_rejected() {
        let p = scalar_bilinear(4.0);
        assert!(grad_g(&p, &s(0.0), &s(0.0), &s(0.0), 0.0, 1.0, 1.0, 0.0).is_err());
        assert!(grad_g(&p, &s(0.0), &s(0.0), &s(0.0), 1.0, -1.0, 1.0, 0.0).is_err());
        assert!(grad_g(&p, &s(0.0), &s(0.0), &s(0.0), 1.0, 1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn violation_examples() {
        let p = scalar_bilinear(4.0);
        assert_eq!(constraint_violation(&p, &s(1.0), &s(1.0)), s(0.0));
        assert_eq!(constraint_violation(&p, &s(3.0), &s(3.0)), s(2.0));
    }

    #[test]
    fn certificate_identity_on_violated_row() {
        let p = scalar_bilinear(1.0);
        let r = grad_g(&p, &s(1.5), &s(1.0), &s(0.3), 2.0, 2.0, 0.7, 0.0).unwrap();
        assert_abs_diff_eq!(r.block_lambda[0].abs(), 1.5, epsilon = 1e-14);
        assert_abs_diff_eq!(r.max_violation(), 1.5, epsilon = 1e-14);
        assert!(r.certificate_ok());
    }

    #[test]
    fn inner_max_examples() {
        let p = scalar_bilinear(4.0);
        let v = inner_max_value(&p, &s(1.0), &s(0.0), 1.0, None).unwrap();
        assert_abs_diff_eq!(v.value, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(v.maximizer[0], 1.0, epsilon = 1e-12);
        assert!(v.trusted());
        assert!(matches!(
            inner_max_value(&p, &s(1.0), &s(0.0), 0.0, None),
            Err(Error::UntrustedPotential(_))
        ));
    }

    #[test]
    fn inner_max_iterative_matches_closed_form() {
        // f = xy − y², maximizer of xy − y² − ρy²/2 is x/(2 + ρ)
        let f = SmoothFunction::new(
            |x, y| x[0] * y[0] - y[0] * y[0],
            |_, y| y.clone(),
            |x, y| Vector::from_element(1, x[0] - 2.0 * y[0]),
            2.0,
        )
        .unwrap()
        .with_strong_concavity(2.0)
        .unwrap();
        let cons = CouplingConstraints::uniform(
            Matrix::from_element(1, 1, 1.0),
            Matrix::from_element(1, 1, 1.0),
            s(4.0),
            Sense::Le,
        )
        .unwrap();
        let set = ConvexSet::centered_ball(1, 2.0).unwrap();
        let p = MinimaxProblem::builder(f, cons, set.clone(), set).build().unwrap();
        let v = inner_max_value(&p, &s(1.5), &s(0.0), 0.5, None).unwrap();
        let ystar = 1.5 / 2.5;
        assert_abs_diff_eq!(v.maximizer[0], ystar, epsilon = 1e-9);
        assert_abs_diff_eq!(v.value, 1.5 * ystar - 1.25 * ystar * ystar + 4.0 * 0.0, epsilon = 1e-12);
        assert!(v.trusted());
        let sv = potential_s(&p, &s(1.5), &s(1.5 / 2.0), &s(0.0)).unwrap();
        assert_abs_diff_eq!(sv.value, 1.5 * 1.5 / 4.0, epsilon = 1e-12);
    }

    #[test]
    fn potential_v_closed_form() {
        let p = scalar_bilinear(4.0);
        // max_y xy − q/2 y² − p/2 (y − y0)² at x=0.5, q=1, p=1, y0=0.2: y* = 0.35
        let v = potential_v(&p, &s(0.5), &s(0.1), &s(0.0), 1.0, 1.0, &s(0.2)).unwrap();
        let phi = 0.5 * 0.35 - 0.5 * 0.35 * 0.35 - 0.5 * 0.15 * 0.15;
        assert_abs_diff_eq!(v.value, 2.0 * phi - 0.05, epsilon = 1e-14);
    }
}
