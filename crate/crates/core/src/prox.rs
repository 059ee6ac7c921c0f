//! Proximal operators `argmin_{z ∈ set} φ(z) + (α/2)‖z − v‖²` for the
//! nonsmooth terms `h` and `g`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::projections::ConvexSet;

pub const PROX_TOL: f64 = 1e-10;
pub const PROX_MAX_ITER: usize = 200_000;

pub type ValueFn = Arc<dyn Fn(&Vector) -> f64 + Send + Sync>;
pub type SubgradFn = Arc<dyn Fn(&Vector) -> Vector + Send + Sync>;
pub type ProxFn = Arc<dyn Fn(&Vector, f64, &ConvexSet) -> Vector + Send + Sync>;

/// A user-supplied convex term. Without an explicit prox the generic
/// iterative solver is used.
#[derive(Clone)]
pub struct CustomProx {
    pub value: ValueFn,
    pub subgradient: SubgradFn,
    pub prox: Option<ProxFn>,
}

/// Catalog of convex terms with their prox operators.
#[derive(Clone)]
pub enum ProxTerm {
    Zero,
    /// `weight·‖z‖₁`
    L1 { weight: f64 },
    /// `½‖z − center‖²`
    Quadratic { center: Vector },
    Custom(CustomProx),
}

impl fmt::Debug for ProxTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProxTerm::Zero => write!(f, "Zero"),
            ProxTerm::L1 { weight } => write!(f, "L1 {{ weight: {weight} }}"),
            ProxTerm::Quadratic { center } => write!(f, "Quadratic {{ dim: {} }}", center.len()),
            ProxTerm::Custom(c) => write!(f, "Custom {{ explicit_prox: {} }}", c.prox.is_some()),
        }
    }
}

impl ProxTerm {
    pub fn l1(weight: f64) -> Result<Self> {
        if !(weight >= 0.0) {
            return Err(Error::InvalidParameter(format!("l1 weight must be >= 0, got {weight}")));
        }
        Ok(ProxTerm::L1 { weight })
    }

    pub fn is_zero(&self) -> bool {
        match self {
            ProxTerm::Zero => true,
            ProxTerm::L1 { weight } => *weight == 0.0,
            _ => false,
        }
    }

    pub fn value(&self, z: &Vector) -> f64 {
        match self {
            ProxTerm::Zero => 0.0,
            ProxTerm::L1 { weight } => weight * z.lp_norm(1),
            ProxTerm::Quadratic { center } => 0.5 * (z - center).norm_squared(),
            ProxTerm::Custom(c) => (c.value)(z),
        }
    }

    pub fn subgradient(&self, z: &Vector) -> Vector {
        match self {
            ProxTerm::Zero => Vector::zeros(z.len()),
            ProxTerm::L1 { weight } => z.map(|t| weight * sign(t)),
            ProxTerm::Quadratic { center } => z - center,
            ProxTerm::Custom(c) => (c.subgradient)(z),
        }
    }

    /// `argmin_{z ∈ set} φ(z) + (α/2)‖z − v‖²`. Falls back to the iterative
    /// solver when no closed form applies.
    pub fn prox(&self, v: &Vector, alpha: f64, set: &ConvexSet) -> Vector {
        match self {
            ProxTerm::Zero => prox_zero(v, alpha, set),
            ProxTerm::L1 { weight } => match (prox_l1(v, *weight, alpha, set), set) {
                (Ok(z), _) => z,
                (Err(_), ConvexSet::Ball { center, .. }) if center.iter().all(|&c| c == 0.0) => {
                    set.project(&soft_threshold(v, weight / alpha))
                }
                _ => self.iterative(v, alpha, set),
            },
            ProxTerm::Quadratic { center } => prox_quadratic(v, center, alpha, set),
            ProxTerm::Custom(c) => match &c.prox {
                Some(p) => p(v, alpha, set),
                None => self.iterative(v, alpha, set),
            },
        }
    }

    fn iterative(&self, v: &Vector, alpha: f64, set: &ConvexSet) -> Vector {
        let out = prox_iterative(
            |z| self.value(z),
            |z| self.subgradient(z),
            v,
            alpha,
            set,
            PROX_TOL,
        );
        if !out.converged {
            log::warn!(
                "iterative prox stopped after {} iterations with step {:e}",
                out.iterations,
                out.last_step
            );
        }
        out.point
    }
}

fn sign(t: f64) -> f64 {
    if t > 0.0 {
        1.0
    } else if t < 0.0 {
        -1.0
    } else {
        0.0
    }
}

pub fn prox_zero(v: &Vector, _alpha: f64, set: &ConvexSet) -> Vector {
    set.project(v)
}

/// Soft-threshold at `w/α`, then clamp to the set's coordinate bounds.
pub fn prox_l1(v: &Vector, w: f64, alpha: f64, set: &ConvexSet) -> Result<Vector> {
    if !(w >= 0.0) || !(alpha > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "prox_l1 needs w >= 0 and alpha > 0, got w={w}, alpha={alpha}"
        )));
    }
    let (lo, hi) = set.coordinate_bounds().ok_or_else(|| {
        Error::NonSeparableSet(format!(
            "{:?} is not coordinate-wise; use prox_iterative",
            set.kind()
        ))
    })?;
    let s = soft_threshold(v, w / alpha);
    Ok(Vector::from_fn(v.len(), |i, _| s[i].max(lo[i]).min(hi[i])))
}

fn soft_threshold(v: &Vector, t: f64) -> Vector {
    v.map(|c| sign(c) * (c.abs() - t).max(0.0))
}

/// Prox of `½‖z − center‖²`: the projection of `(αv + center)/(α + 1)`.
pub fn prox_quadratic(v: &Vector, center: &Vector, alpha: f64, set: &ConvexSet) -> Vector {
    set.project(&((v * alpha + center) / (alpha + 1.0)))
}

#[derive(Debug, Clone)]
pub struct ProxOutcome {
    pub point: Vector,
    pub converged: bool,
    pub iterations: usize,
    pub last_step: f64,
}

/// Generic prox by projected (sub)gradient descent on the strongly convex
/// objective. Each iteration starts from the step `1/α`, which solves the
/// quadratic part exactly, and backtracks until a sufficient decrease.
///
/// Terminates when an accepted step moves the iterate by at most `tol`.
/// Kinks of `φ` that are not aligned with the moving coordinates can stall
/// the method; the outcome then reports `converged = false`.
pub fn prox_iterative<V, S>(
    value: V,
    subgrad: S,
    v: &Vector,
    alpha: f64,
    set: &ConvexSet,
    tol: f64,
) -> ProxOutcome
where
    V: Fn(&Vector) -> f64,
    S: Fn(&Vector) -> Vector,
{
    let obj = |z: &Vector| value(z) + 0.5 * alpha * (z - v).norm_squared();
    let mut z = set.project(v);
    let mut fz = obj(&z);
    let mut last = f64::INFINITY;
    for it in 1..=PROX_MAX_ITER {
        let g = subgrad(&z) + (&z - v) * alpha;
        let mut step = 1.0 / alpha;
        let mut accepted = None;
        for _ in 0..80 {
            let cand = set.project(&(&z - &g * step));
            let d = &cand - &z;
            let fc = obj(&cand);
            if fc <= fz - 1e-4 * d.norm_squared() / step || d.norm() <= tol {
                accepted = Some((cand, fc, d.norm()));
                break;
            }
            step *= 0.5;
        }
        let Some((cand, fc, moved)) = accepted else {
            break;
        };
        z = cand;
        fz = fc;
        last = moved;
        if moved <= tol {
            return ProxOutcome {
                point: z,
                converged: true,
                iterations: it,
                last_step: moved,
            };
        }
    }
    ProxOutcome {
        point: z,
        converged: false,
        iterations: PROX_MAX_ITER,
        last_step: last,
    }
}
