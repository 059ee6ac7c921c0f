//! Problem instances `min_x max_y f(x,y) + h(x) − g(y)` subject to
//! `Ax + By ⊴ c`, and their Lagrangian evaluations.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::projections::{project_multiplier_cone, ConvexSet};
use crate::prox::ProxTerm;

pub type ValueOracle = Arc<dyn Fn(&Vector, &Vector) -> f64 + Send + Sync>;
pub type GradOracle = Arc<dyn Fn(&Vector, &Vector) -> Vector + Send + Sync>;

/// Smooth coupling term with first-order oracles and curvature metadata.
#[derive(Clone)]
pub struct SmoothFunction {
    value: ValueOracle,
    grad_x: GradOracle,
    grad_y: GradOracle,
    lipschitz: f64,
    strong_concavity: f64,
    linear_in_y: bool,
}

impl fmt::Debug for SmoothFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SmoothFunction")
            .field("lipschitz", &self.lipschitz)
            .field("strong_concavity", &self.strong_concavity)
            .field("linear_in_y", &self.linear_in_y)
            .finish()
    }
}

impl SmoothFunction {
    pub fn new<V, GX, GY>(value: V, grad_x: GX, grad_y: GY, lipschitz: f64) -> Result<Self>
    where
        V: Fn(&Vector, &Vector) -> f64 + Send + Sync + 'static,
        GX: Fn(&Vector, &Vector) -> Vector + Send + Sync + 'static,
        GY: Fn(&Vector, &Vector) -> Vector + Send + Sync + 'static,
    {
        if !(lipschitz > 0.0 && lipschitz.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "Lipschitz constant must be positive and finite, got {lipschitz}"
            )));
        }
        Ok(SmoothFunction {
            value: Arc::new(value),
            grad_x: Arc::new(grad_x),
            grad_y: Arc::new(grad_y),
            lipschitz,
            strong_concavity: 0.0,
            linear_in_y: false,
        })
    }

    pub fn with_strong_concavity(mut self, mu: f64) -> Result<Self> {
        if !(mu >= 0.0 && mu.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "strong concavity modulus must be >= 0, got {mu}"
            )));
        }
        self.strong_concavity = mu;
        Ok(self)
    }

    /// Declares `f` affine in `y`.
    pub fn linear_in_y(mut self) -> Self {
        self.linear_in_y = true;
        self
    }

    pub fn value(&self, x: &Vector, y: &Vector) -> f64 {
        (self.value)(x, y)
    }

    pub fn grad_x(&self, x: &Vector, y: &Vector) -> Vector {
        (self.grad_x)(x, y)
    }

    pub fn grad_y(&self, x: &Vector, y: &Vector) -> Vector {
        (self.grad_y)(x, y)
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn strong_concavity(&self) -> f64 {
        self.strong_concavity
    }

    pub fn is_linear_in_y(&self) -> bool {
        self.linear_in_y
    }
}

/// Largest relative error between the analytic gradients and central
/// differences of the value oracle at `(x, y)`.
pub fn gradient_fd_error(f: &SmoothFunction, x: &Vector, y: &Vector, step: f64) -> f64 {
    let fd = |point: &Vector, other: &Vector, in_x: bool| -> Vector {
        Vector::from_fn(point.len(), |i, _| {
            let mut plus = point.clone();
            let mut minus = point.clone();
            plus[i] += step;
            minus[i] -= step;
            let (fp, fm) = if in_x {
                (f.value(&plus, other), f.value(&minus, other))
            } else {
                (f.value(other, &plus), f.value(other, &minus))
            };
            (fp - fm) / (2.0 * step)
        })
    };
    let rel = |a: &Vector, b: &Vector| (a - b).norm() / a.norm().max(b.norm()).max(1.0);
    let ex = rel(&f.grad_x(x, y), &fd(x, y, true));
    let ey = rel(&f.grad_y(x, y), &fd(y, x, false));
    ex.max(ey)
}

/// Empirical Lipschitz estimate of the joint gradient: the largest observed
/// `‖∇f(u) − ∇f(v)‖/‖u − v‖` over random pairs near the sets. Not a
/// certified upper bound.
pub fn estimate_lipschitz<R: Rng>(
    f: &SmoothFunction,
    set_x: &ConvexSet,
    set_y: &ConvexSet,
    samples: usize,
    rng: &mut R,
) -> f64 {
    let sample = |set: &ConvexSet, rng: &mut R| -> Vector {
        let r = set.radius_bound();
        let scale = if r.is_finite() { r.max(1e-3) } else { 1.0 };
        let raw = Vector::from_fn(set.dim(), |_, _| rng.gen_range(-1.0..1.0) * scale);
        set.project(&raw)
    };
    let grad = |x: &Vector, y: &Vector| -> Vector {
        let gx = f.grad_x(x, y);
        let gy = f.grad_y(x, y);
        Vector::from_iterator(gx.len() + gy.len(), gx.iter().chain(gy.iter()).copied())
    };
    let mut best: f64 = 0.0;
    for _ in 0..samples {
        let (x1, y1) = (sample(set_x, rng), sample(set_y, rng));
        let (x2, y2) = (sample(set_x, rng), sample(set_y, rng));
        let dist = ((&x1 - &x2).norm_squared() + (&y1 - &y2).norm_squared()).sqrt();
        if dist < 1e-12 {
            continue;
        }
        best = best.max((grad(&x1, &y1) - grad(&x2, &y2)).norm() / dist);
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Le,
    Eq,
}

/// `Ax + By ⊴ c` with a relation per row.
#[derive(Debug, Clone)]
pub struct CouplingConstraints {
    pub a: Matrix,
    pub b: Matrix,
    pub c: Vector,
    pub senses: Vec<Sense>,
}

impl CouplingConstraints {
    pub fn new(a: Matrix, b: Matrix, c: Vector, senses: Vec<Sense>) -> Result<Self> {
        let p = c.len();
        check_dim("rows of A", p, a.nrows())?;
        check_dim("rows of B", p, b.nrows())?;
        check_dim("constraint senses", p, senses.len())?;
        Ok(CouplingConstraints { a, b, c, senses })
    }

    pub fn uniform(a: Matrix, b: Matrix, c: Vector, sense: Sense) -> Result<Self> {
        let p = c.len();
        Self::new(a, b, c, vec![sense; p])
    }

    pub fn rows(&self) -> usize {
        self.c.len()
    }

    /// `Ax + By − c`
    pub fn residual(&self, x: &Vector, y: &Vector) -> Vector {
        &self.a * x + &self.b * y - &self.c
    }

    /// `max{0, r_i}` for `LE` rows and `|r_i|` for `EQ` rows.
    pub fn violation(&self, x: &Vector, y: &Vector) -> Vector {
        let r = self.residual(x, y);
        Vector::from_fn(r.len(), |i, _| match self.senses[i] {
            Sense::Le => r[i].max(0.0),
            Sense::Eq => r[i].abs(),
        })
    }

    pub fn project_multiplier(&self, lambda: &Vector) -> Vector {
        project_multiplier_cone(lambda, &self.senses)
    }

    pub fn multiplier_feasible(&self, lambda: &Vector, tol: f64) -> bool {
        lambda.len() == self.rows()
            && (0..lambda.len()).all(|i| self.senses[i] == Sense::Eq || lambda[i] >= -tol)
    }
}

/// An immutable problem instance.
#[derive(Debug, Clone)]
pub struct MinimaxProblem {
    pub f: SmoothFunction,
    pub h: ProxTerm,
    pub g: ProxTerm,
    pub constraints: CouplingConstraints,
    pub set_x: ConvexSet,
    pub set_y: ConvexSet,
}

pub struct MinimaxProblemBuilder {
    f: SmoothFunction,
    constraints: CouplingConstraints,
    set_x: ConvexSet,
    set_y: ConvexSet,
    h: ProxTerm,
    g: ProxTerm,
    allow_unbounded: bool,
}

impl MinimaxProblemBuilder {
    pub fn h(mut self, h: ProxTerm) -> Self {
        self.h = h;
        self
    }

    pub fn g(mut self, g: ProxTerm) -> Self {
        self.g = g;
        self
    }

    /// Skip the compactness check on `X` and `Y`.
    pub fn allow_unbounded(mut self) -> Self {
        self.allow_unbounded = true;
        self
    }

    pub fn build(self) -> Result<MinimaxProblem> {
        let n = self.set_x.dim();
        let m = self.set_y.dim();
        check_dim("columns of A", n, self.constraints.a.ncols())?;
        check_dim("columns of B", m, self.constraints.b.ncols())?;
        if !self.allow_unbounded {
            for (name, set) in [("X", &self.set_x), ("Y", &self.set_y)] {
                if !set.radius_bound().is_finite() {
                    return Err(Error::Configuration(format!(
                        "set {name} must be bounded (finite radius bound)"
                    )));
                }
            }
        }
        Ok(MinimaxProblem {
            f: self.f,
            h: self.h,
            g: self.g,
            constraints: self.constraints,
            set_x: self.set_x,
            set_y: self.set_y,
        })
    }
}

impl MinimaxProblem {
    pub fn builder(
        f: SmoothFunction,
        constraints: CouplingConstraints,
        set_x: ConvexSet,
        set_y: ConvexSet,
    ) -> MinimaxProblemBuilder {
        MinimaxProblemBuilder {
            f,
            constraints,
            set_x,
            set_y,
            h: ProxTerm::Zero,
            g: ProxTerm::Zero,
            allow_unbounded: false,
        }
    }

    pub fn dim_x(&self) -> usize {
        self.set_x.dim()
    }

    pub fn dim_y(&self) -> usize {
        self.set_y.dim()
    }

    pub fn dim_lambda(&self) -> usize {
        self.constraints.rows()
    }

    pub fn check_point(&self, x: &Vector, y: &Vector, lambda: &Vector) -> Result<()> {
        check_dim("x", self.dim_x(), x.len())?;
        check_dim("y", self.dim_y(), y.len())?;
        check_dim("lambda", self.dim_lambda(), lambda.len())
    }
}

/// Current schedule values attached to an iterate. Entries that a solver
/// does not use are zero.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub rho: f64,
    pub q: f64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterateState {
    pub x: Vector,
    pub y: Vector,
    pub lambda: Vector,
    pub k: usize,
    pub schedule: Schedule,
}

impl IterateState {
    pub fn new(x: Vector, y: Vector, lambda: Vector) -> Self {
        IterateState {
            x,
            y,
            lambda,
            k: 0,
            schedule: Schedule::default(),
        }
    }

    pub fn zeros(prob: &MinimaxProblem) -> Self {
        Self::new(
            Vector::zeros(prob.dim_x()),
            Vector::zeros(prob.dim_y()),
            Vector::zeros(prob.dim_lambda()),
        )
    }

    /// Projects each block onto `X`, `Y` and the multiplier set.
    pub fn projected(&self, prob: &MinimaxProblem) -> Result<Self> {
        prob.check_point(&self.x, &self.y, &self.lambda)?;
        Ok(IterateState {
            x: prob.set_x.project(&self.x),
            y: prob.set_y.project(&self.y),
            lambda: prob.constraints.project_multiplier(&self.lambda),
            k: self.k,
            schedule: self.schedule,
        })
    }
}

pub fn lagrangian_value(prob: &MinimaxProblem, x: &Vector, y: &Vector, lambda: &Vector) -> Result<f64> {
    prob.check_point(x, y, lambda)?;
    Ok(prob.f.value(x, y) - lambda.dot(&prob.constraints.residual(x, y)))
}

/// `(∇_x L, ∇_y L, ∇_λ L)`
pub fn lagrangian_grads(
    prob: &MinimaxProblem,
    x: &Vector,
    y: &Vector,
    lambda: &Vector,
) -> Result<(Vector, Vector, Vector)> {
    prob.check_point(x, y, lambda)?;
    let cons = &prob.constraints;
    let gx = prob.f.grad_x(x, y) - cons.a.tr_mul(lambda);
    let gy = prob.f.grad_y(x, y) - cons.b.tr_mul(lambda);
    let gl = -cons.residual(x, y);
    Ok((gx, gy, gl))
}

pub fn regularized_lagrangian_value(
    prob: &MinimaxProblem,
    x: &Vector,
    y: &Vector,
    lambda: &Vector,
    rho: f64,
) -> Result<f64> {
    if !(rho >= 0.0) {
        return Err(Error::InvalidParameter(format!("rho must be >= 0, got {rho}")));
    }
    Ok(lagrangian_value(prob, x, y, lambda)? - 0.5 * rho * y.norm_squared())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn s(v: f64) -> Vector {
        Vector::from_element(1, v)
    }

    fn scalar_bilinear() -> MinimaxProblem {
        let f = SmoothFunction::new(
            |x, y| x[0] * y[0],
            |_, y| y.clone(),
            |x, _| x.clone(),
            1.0,
        )
        .unwrap()
        .linear_in_y();
        let cons = CouplingConstraints::uniform(
            Matrix::from_element(1, 1, 1.0),
            Matrix::from_element(1, 1, 1.0),
            s(4.0),
            Sense::Le,
        )
        .unwrap();
        let set = ConvexSet::centered_ball(1, 2.0).unwrap();
        MinimaxProblem::builder(f, cons, set.clone(), set).build().unwrap()
    }

    #[test]
    fn lagrangian_value_examples() {
        let p = scalar_bilinear();
        assert_eq!(lagrangian_value(&p, &s(1.0), &s(1.0), &s(0.0)).unwrap(), 1.0);
        assert_eq!(lagrangian_value(&p, &s(1.0), &s(1.0), &s(1.0)).unwrap(), 3.0);
        assert_eq!(lagrangian_value(&p, &s(0.0), &s(0.0), &s(2.5)).unwrap(), 10.0);
        assert!(matches!(
            lagrangian_value(&p, &Vector::zeros(2), &s(0.0), &s(0.0)),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn lagrangian_grads_examples() {
        let p = scalar_bilinear();
        let (gx, gy, gl) = lagrangian_grads(&p, &s(1.0), &s(1.0), &s(0.0)).unwrap();
        assert_eq!((gx[0], gy[0], gl[0]), (1.0, 1.0, 2.0));
        let (_, _, gl) = lagrangian_grads(&p, &s(1.5), &s(2.5), &s(0.3)).unwrap();
        assert_eq!(gl[0], 0.0);
    }

    #[test]
    fn lagrangian_grads_match_finite_differences() {
        let p = scalar_bilinear();
        let (x, y, l) = (s(0.7), s(-1.3), s(0.4));
        let (gx, gy, _) = lagrangian_grads(&p, &x, &y, &l).unwrap();
        let h = 1e-5;
        let fdx = (lagrangian_value(&p, &s(0.7 + h), &y, &l).unwrap()
            - lagrangian_value(&p, &s(0.7 - h), &y, &l).unwrap())
            / (2.0 * h);
        let fdy = (lagrangian_value(&p, &x, &s(-1.3 + h), &l).unwrap()
            - lagrangian_value(&p, &x, &s(-1.3 - h), &l).unwrap())
            / (2.0 * h);
        assert_abs_diff_eq!(gx[0], fdx, epsilon = 1e-8);
        assert_abs_diff_eq!(gy[0], fdy, epsilon = 1e-8);
    }

    #[test]
    fn regularized_examples() {
        let p = scalar_bilinear();
        let (x, y, l) = (s(0.3), s(1.1), s(0.2));
        assert_eq!(
            regularized_lagrangian_value(&p, &x, &y, &l, 0.0).unwrap(),
            lagrangian_value(&p, &x, &y, &l).unwrap()
        );
        assert_eq!(
            regularized_lagrangian_value(&p, &x, &s(0.0), &l, 5.0).unwrap(),
            lagrangian_value(&p, &x, &s(0.0), &l).unwrap()
        );
        let v = regularized_lagrangian_value(&p, &s(0.0), &s(2.0), &s(0.0), 1.0).unwrap();
        assert_eq!(v, -2.0);
        assert!(regularized_lagrangian_value(&p, &x, &y, &l, -1.0).is_err());
    }

    #[test]
    fn builder_rejects_unbounded_and_bad_dims() {
        let p = scalar_bilinear();
        let r = MinimaxProblem::builder(
            p.f.clone(),
            p.constraints.clone(),
            ConvexSet::full_space(1),
            p.set_y.clone(),
        )
        .build();
        assert!(matches!(r, Err(Error::Configuration(_))));
        let r = MinimaxProblem::builder(
            p.f.clone(),
            p.constraints.clone(),
            ConvexSet::full_space(1),
            p.set_y.clone(),
        )
        .allow_unbounded()
        .build();
        assert!(r.is_ok());
        let r = MinimaxProblem::builder(
            p.f.clone(),
            p.constraints.clone(),
            ConvexSet::centered_ball(2, 1.0).unwrap(),
            p.set_y.clone(),
        )
        .build();
        assert!(matches!(r, Err(Error::Dimension { .. })));
        assert!(CouplingConstraints::new(
            Matrix::zeros(2, 1),
            Matrix::zeros(1, 1),
            s(1.0),
            vec![Sense::Le]
        )
        .is_err());
    }

    #[test]
    fn violation_and_multiplier_set() {
        let cons = CouplingConstraints::new(
            Matrix::identity(2, 2),
            Matrix::zeros(2, 1),
            Vector::from_column_slice(&[1.0, 1.0]),
            vec![Sense::Le, Sense::Eq],
        )
        .unwrap();
        let v = cons.violation(&Vector::from_column_slice(&[3.0, 0.7]), &s(0.0));
        assert_abs_diff_eq!(v, Vector::from_column_slice(&[2.0, 0.3]), epsilon = 1e-15);
        assert!(cons.multiplier_feasible(&Vector::from_column_slice(&[0.0, -4.0]), 0.0));
        assert!(!cons.multiplier_feasible(&Vector::from_column_slice(&[-1e-3, 0.0]), 0.0));
    }

    #[test]
    fn lipschitz_estimator_is_close_for_bilinear() {
        let p = scalar_bilinear();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let est = estimate_lipschitz(&p.f, &p.set_x, &p.set_y, 500, &mut rng);
        assert!(est <= 1.0 + 1e-12 && est > 0.9);
    }

    #[test]
    fn fd_error_small_for_bilinear() {
        let p = scalar_bilinear();
        assert!(gradient_fd_error(&p.f, &s(0.4), &s(-0.9), 1e-5) < 1e-9);
    }
}
