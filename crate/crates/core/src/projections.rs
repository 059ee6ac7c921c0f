//! Euclidean projection oracles for the feasible sets used by the solvers.
//!
//! Every set is described by an immutable value; projections are pure
//! functions of that description and the input point, so a set can be shared
//! across threads freely.

use nalgebra::SVD;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::model::Sense;

/// Dykstra defaults: projection error feeds the stationarity measure, so it
/// has to sit well below any solver tolerance.
pub const DYKSTRA_TOL: f64 = 1e-10;
pub const DYKSTRA_MAX_ITER: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SetKind {
    Ball,
    Box,
    Simplex,
    AffineSubspace,
    Halfspace,
    NonnegOrthant,
    FullSpace,
    ProductSet,
    DykstraIntersection,
    BoxAffine,
}

/// `{x : Mx = d}` with a precomputed pseudo-inverse of `M`.
#[derive(Debug, Clone)]
pub struct AffineSubspace {
    m: Matrix,
    d: Vector,
    pinv: Matrix,
    rank: usize,
}

impl AffineSubspace {
    pub fn new(m: Matrix, d: Vector) -> Result<Self> {
        check_dim("affine right-hand side", m.nrows(), d.len())?;
        let (pinv, rank) = pseudo_inverse(&m);
        Ok(AffineSubspace { m, d, pinv, rank })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.m
    }

    pub fn rhs(&self) -> &Vector {
        &self.d
    }

    /// True when `M` does not have full row rank and the projection falls
    /// back to least squares.
    pub fn rank_deficient(&self) -> bool {
        self.rank < self.m.nrows()
    }

    pub fn project(&self, v: &Vector) -> Vector {
        let r = &self.m * v - &self.d;
        v - &self.pinv * r
    }

    pub fn residual(&self, v: &Vector) -> f64 {
        (&self.m * v - &self.d).amax()
    }
}

fn pseudo_inverse(m: &Matrix) -> (Matrix, usize) {
    if m.nrows() == 0 {
        return (Matrix::zeros(m.ncols(), 0), 0);
    }
    let svd = SVD::new(m.clone(), true, true);
    let smax = svd.singular_values.max();
    let cutoff = 1e-12 * smax.max(1.0) * (m.nrows().max(m.ncols()) as f64);
    let rank = svd.singular_values.iter().filter(|&&s| s > cutoff).count();
    let pinv = svd
        .pseudo_inverse(cutoff)
        .expect("svd computed with both factors");
    (pinv, rank)
}

/// Result of a Dykstra run.
#[derive(Debug, Clone)]
pub struct DykstraOutcome {
    pub point: Vector,
    pub converged: bool,
    pub iterations: usize,
    pub last_displacement: f64,
}

/// Intersection of convex sets, projected onto with Dykstra's algorithm.
#[derive(Debug, Clone)]
pub struct DykstraIntersection {
    sets: Vec<ConvexSet>,
    max_iter: usize,
    tol: f64,
}

impl DykstraIntersection {
    pub fn members(&self) -> &[ConvexSet] {
        &self.sets
    }

    pub fn tolerance(&self) -> f64 {
        self.tol
    }

    pub fn project_detailed(&self, v: &Vector) -> DykstraOutcome {
        project_dykstra(v, &self.sets, self.max_iter, self.tol)
    }
}

/// A closed convex set exposed through its projection and membership test.
#[derive(Debug, Clone)]
pub enum ConvexSet {
    FullSpace { dim: usize },
    Ball { center: Vector, radius: f64 },
    Box { lo: Vector, hi: Vector },
    /// `{x ≥ 0, Σx = total}`
    Simplex { dim: usize, total: f64 },
    Affine(AffineSubspace),
    /// `{x : ⟨normal, x⟩ ≤ offset}`
    Halfspace { normal: Vector, offset: f64 },
    NonnegOrthant { dim: usize },
    /// Cartesian product; blocks are laid out consecutively.
    Product(Vec<ConvexSet>),
    Intersection(DykstraIntersection),
    /// `{lo ≤ x ≤ hi, Mx = d}` with an exact dual Newton projector.
    BoxAffine(BoxAffineSet),
}

impl ConvexSet {
    pub fn full_space(dim: usize) -> Self {
        ConvexSet::FullSpace { dim }
    }

    pub fn ball(center: Vector, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "ball radius must be positive, got {radius}"
            )));
        }
        Ok(ConvexSet::Ball { center, radius })
    }

    pub fn centered_ball(dim: usize, radius: f64) -> Result<Self> {
        Self::ball(Vector::zeros(dim), radius)
    }

    pub fn boxed(lo: Vector, hi: Vector) -> Result<Self> {
        check_dim("box bounds", lo.len(), hi.len())?;
        if let Some(i) = (0..lo.len()).find(|&i| !(lo[i] <= hi[i])) {
            return Err(Error::InvalidParameter(format!(
                "box lower bound exceeds upper bound at coordinate {i}: {} > {}",
                lo[i], hi[i]
            )));
        }
        Ok(ConvexSet::Box { lo, hi })
    }

    pub fn simplex(dim: usize, total: f64) -> Result<Self> {
        if !(total >= 0.0) || dim == 0 {
            return Err(Error::InvalidParameter(format!(
                "simplex needs dim > 0 and total >= 0, got dim {dim}, total {total}"
            )));
        }
        Ok(ConvexSet::Simplex { dim, total })
    }

    pub fn affine(m: Matrix, d: Vector) -> Result<Self> {
        Ok(ConvexSet::Affine(AffineSubspace::new(m, d)?))
    }

    pub fn halfspace(normal: Vector, offset: f64) -> Result<Self> {
        if normal.norm() == 0.0 {
            return Err(Error::InvalidParameter("halfspace normal is zero".into()));
        }
        Ok(ConvexSet::Halfspace { normal, offset })
    }

    pub fn nonneg_orthant(dim: usize) -> Self {
        ConvexSet::NonnegOrthant { dim }
    }

    pub fn product(blocks: Vec<ConvexSet>) -> Self {
        ConvexSet::Product(blocks)
    }

    pub fn intersection(sets: Vec<ConvexSet>) -> Result<Self> {
        Self::intersection_with(sets, DYKSTRA_MAX_ITER, DYKSTRA_TOL)
    }

    pub fn intersection_with(sets: Vec<ConvexSet>, max_iter: usize, tol: f64) -> Result<Self> {
        let first = sets
            .first()
            .ok_or_else(|| Error::InvalidParameter("empty intersection".into()))?;
        let dim = first.dim();
        for s in &sets {
            check_dim("intersection member", dim, s.dim())?;
        }
        if max_iter == 0 || !(tol > 0.0) {
            return Err(Error::InvalidParameter(
                "dykstra needs max_iter > 0 and tol > 0".into(),
            ));
        }
        Ok(ConvexSet::Intersection(DykstraIntersection {
            sets,
            max_iter,
            tol,
        }))
    }

    pub fn box_affine(lo: Vector, hi: Vector, m: Matrix, d: Vector) -> Result<Self> {
        Ok(ConvexSet::BoxAffine(BoxAffineSet::new(lo, hi, m, d)?))
    }

    pub fn kind(&self) -> SetKind {
        match self {
            ConvexSet::FullSpace { .. } => SetKind::FullSpace,
            ConvexSet::Ball { .. } => SetKind::Ball,
            ConvexSet::Box { .. } => SetKind::Box,
            ConvexSet::Simplex { .. } => SetKind::Simplex,
            ConvexSet::Affine(_) => SetKind::AffineSubspace,
            ConvexSet::Halfspace { .. } => SetKind::Halfspace,
            ConvexSet::NonnegOrthant { .. } => SetKind::NonnegOrthant,
            ConvexSet::Product(_) => SetKind::ProductSet,
            ConvexSet::Intersection(_) => SetKind::DykstraIntersection,
            ConvexSet::BoxAffine(_) => SetKind::BoxAffine,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexSet::FullSpace { dim } => *dim,
            ConvexSet::Ball { center, .. } => center.len(),
            ConvexSet::Box { lo, .. } => lo.len(),
            ConvexSet::Simplex { dim, .. } => *dim,
            ConvexSet::Affine(a) => a.m.ncols(),
            ConvexSet::Halfspace { normal, .. } => normal.len(),
            ConvexSet::NonnegOrthant { dim } => *dim,
            ConvexSet::Product(blocks) => blocks.iter().map(ConvexSet::dim).sum(),
            ConvexSet::Intersection(i) => i.sets[0].dim(),
            ConvexSet::BoxAffine(b) => b.lo.len(),
        }
    }

    /// Coordinate-wise sets, for which separable prox operators may be
    /// composed with the projection.
    pub fn is_separable(&self) -> bool {
        match self {
            ConvexSet::FullSpace { .. } | ConvexSet::Box { .. } | ConvexSet::NonnegOrthant { .. } => {
                true
            }
            ConvexSet::Ball { center, .. } => center.len() == 1,
            ConvexSet::Product(blocks) => blocks.iter().all(ConvexSet::is_separable),
            _ => false,
        }
    }

    /// Coordinate-wise bounds of a separable set (`None` otherwise).
    pub fn coordinate_bounds(&self) -> Option<(Vector, Vector)> {
        match self {
            ConvexSet::FullSpace { dim } => Some((
                Vector::from_element(*dim, f64::NEG_INFINITY),
                Vector::from_element(*dim, f64::INFINITY),
            )),
            ConvexSet::Box { lo, hi } => Some((lo.clone(), hi.clone())),
            ConvexSet::NonnegOrthant { dim } => Some((
                Vector::zeros(*dim),
                Vector::from_element(*dim, f64::INFINITY),
            )),
            ConvexSet::Ball { center, radius } if center.len() == 1 => Some((
                Vector::from_element(1, center[0] - radius),
                Vector::from_element(1, center[0] + radius),
            )),
            ConvexSet::Product(blocks) => {
                let mut lo = Vec::new();
                let mut hi = Vec::new();
                for b in blocks {
                    let (l, h) = b.coordinate_bounds()?;
                    lo.extend(l.iter());
                    hi.extend(h.iter());
                }
                Some((Vector::from_vec(lo), Vector::from_vec(hi)))
            }
            _ => None,
        }
    }

    /// Upper bound on `max{‖x‖ : x in set}`; infinite for unbounded sets.
    pub fn radius_bound(&self) -> f64 {
        match self {
            ConvexSet::FullSpace { .. }
            | ConvexSet::Halfspace { .. }
            | ConvexSet::NonnegOrthant { .. } => f64::INFINITY,
            ConvexSet::Ball { center, radius } => center.norm() + radius,
            ConvexSet::Box { lo, hi } => lo
                .iter()
                .zip(hi.iter())
                .map(|(l, h)| {
                    let a = l.abs().max(h.abs());
                    a * a
                })
                .sum::<f64>()
                .sqrt(),
            ConvexSet::Simplex { total, .. } => *total,
            ConvexSet::Affine(a) => {
                if a.rank == a.m.ncols() {
                    (&a.pinv * &a.d).norm()
                } else {
                    f64::INFINITY
                }
            }
            ConvexSet::Product(blocks) => blocks
                .iter()
                .map(|b| b.radius_bound().powi(2))
                .sum::<f64>()
                .sqrt(),
            ConvexSet::BoxAffine(b) => ConvexSet::Box {
                lo: b.lo.clone(),
                hi: b.hi.clone(),
            }
            .radius_bound(),
            ConvexSet::Intersection(i) => i
                .sets
                .iter()
                .map(ConvexSet::radius_bound)
                .fold(f64::INFINITY, f64::min),
        }
    }

    pub fn project(&self, v: &Vector) -> Vector {
        debug_assert_eq!(v.len(), self.dim());
        match self {
            ConvexSet::FullSpace { .. } => v.clone(),
            ConvexSet::Ball { center, radius } => project_ball(v, center, *radius),
            ConvexSet::Box { lo, hi } => clamp(v, lo, hi),
            ConvexSet::Simplex { total, .. } => project_simplex(v, *total),
            ConvexSet::Affine(a) => a.project(v),
            ConvexSet::Halfspace { normal, offset } => {
                let excess = normal.dot(v) - offset;
                if excess <= 0.0 {
                    v.clone()
                } else {
                    v - normal * (excess / normal.norm_squared())
                }
            }
            ConvexSet::NonnegOrthant { .. } => v.map(|x| x.max(0.0)),
            ConvexSet::Product(blocks) => {
                let mut out = Vector::zeros(v.len());
                let mut offset = 0;
                for b in blocks {
                    let d = b.dim();
                    let part = b.project(&v.rows(offset, d).into_owned());
                    out.rows_mut(offset, d).copy_from(&part);
                    offset += d;
                }
                out
            }
            ConvexSet::Intersection(i) => i.project_detailed(v).point,
            ConvexSet::BoxAffine(b) => b.project(v),
        }
    }

    pub fn contains(&self, v: &Vector, tol: f64) -> bool {
        if v.len() != self.dim() {
            return false;
        }
        match self {
            ConvexSet::FullSpace { .. } => v.iter().all(|x| x.is_finite()),
            ConvexSet::Ball { center, radius } => (v - center).norm() <= radius + tol,
            ConvexSet::Box { lo, hi } => (0..v.len()).all(|i| v[i] >= lo[i] - tol && v[i] <= hi[i] + tol),
            ConvexSet::Simplex { total, .. } => {
                v.iter().all(|&x| x >= -tol) && (v.sum() - total).abs() <= tol
            }
            ConvexSet::Affine(a) => a.residual(v) <= tol,
            ConvexSet::Halfspace { normal, offset } => normal.dot(v) <= offset + tol,
            ConvexSet::NonnegOrthant { .. } => v.iter().all(|&x| x >= -tol),
            ConvexSet::Product(blocks) => {
                let mut offset = 0;
                blocks.iter().all(|b| {
                    let d = b.dim();
                    let ok = b.contains(&v.rows(offset, d).into_owned(), tol);
                    offset += d;
                    ok
                })
            }
            ConvexSet::Intersection(i) => i.sets.iter().all(|s| s.contains(v, tol)),
            ConvexSet::BoxAffine(b) => {
                (0..v.len()).all(|i| v[i] >= b.lo[i] - tol && v[i] <= b.hi[i] + tol)
                    && (&b.m * v - &b.d).amax() <= tol
            }
        }
    }
}

fn clamp(v: &Vector, lo: &Vector, hi: &Vector) -> Vector {
    Vector::from_fn(v.len(), |i, _| v[i].max(lo[i]).min(hi[i]))
}

pub fn project_ball(v: &Vector, center: &Vector, radius: f64) -> Vector {
    let diff = v - center;
    let dist = diff.norm();
    if dist <= radius {
        v.clone()
    } else {
        center + diff * (radius / dist)
    }
}

pub fn project_box(v: &Vector, lo: &Vector, hi: &Vector) -> Result<Vector> {
    check_dim("box projection", v.len(), lo.len())?;
    check_dim("box projection", v.len(), hi.len())?;
    if let Some(i) = (0..lo.len()).find(|&i| !(lo[i] <= hi[i])) {
        return Err(Error::InvalidParameter(format!(
            "box lower bound exceeds upper bound at coordinate {i}"
        )));
    }
    Ok(clamp(v, lo, hi))
}

/// Projection onto the multiplier set: `LE` rows onto `[0, ∞)`, `EQ` rows untouched.
pub fn project_multiplier_cone(v: &Vector, senses: &[Sense]) -> Vector {
    debug_assert_eq!(v.len(), senses.len());
    Vector::from_fn(v.len(), |i, _| match senses[i] {
        Sense::Le => v[i].max(0.0),
        Sense::Eq => v[i],
    })
}

/// Projection of `v` onto `{x : Mx = d}`.
#[derive(Debug, Clone)]
pub struct AffineProjection {
    pub point: Vector,
    pub rank_deficient: bool,
}

pub fn project_affine(v: &Vector, m: &Matrix, d: &Vector) -> Result<AffineProjection> {
    check_dim("affine projection", m.ncols(), v.len())?;
    let sub = AffineSubspace::new(m.clone(), d.clone())?;
    if sub.rank_deficient() {
        log::warn!(
            "affine projection: constraint matrix has rank {} < {} rows, using least squares",
            sub.rank,
            m.nrows()
        );
    }
    Ok(AffineProjection {
        point: sub.project(v),
        rank_deficient: sub.rank_deficient(),
    })
}

/// Exact projection onto `{x ≥ 0, Σx = total}` by sorting.
pub fn project_simplex(v: &Vector, total: f64) -> Vector {
    let mut u: Vec<f64> = v.iter().copied().collect();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cumsum += uj;
        let t = (cumsum - total) / (j as f64 + 1.0);
        if uj - t > 0.0 {
            theta = t;
        }
    }
    v.map(|x| (x - theta).max(0.0))
}

/// Dykstra's alternating projections with correction terms.
///
/// Converges to the Euclidean projection onto the intersection (assumed
/// nonempty). Stops once a full cycle moves both the iterate and the
/// correction terms by at most `tol`.
pub fn project_dykstra(v: &Vector, sets: &[ConvexSet], max_iter: usize, tol: f64) -> DykstraOutcome {
    let k = sets.len();
    let mut x = v.clone();
    if k == 0 {
        return DykstraOutcome {
            point: x,
            converged: true,
            iterations: 0,
            last_displacement: 0.0,
        };
    }
    let mut corrections = vec![Vector::zeros(v.len()); k];
    let mut displacement = f64::INFINITY;
    for it in 1..=max_iter {
        let start = x.clone();
        let mut corr_change: f64 = 0.0;
        for (set, corr) in sets.iter().zip(corrections.iter_mut()) {
            let shifted = &x + &*corr;
            let p = set.project(&shifted);
            let next = shifted - &p;
            corr_change = corr_change.max((&next - &*corr).norm());
            *corr = next;
            x = p;
        }
        displacement = (&x - &start).norm().max(corr_change);
        if displacement <= tol {
            return DykstraOutcome {
                point: x,
                converged: true,
                iterations: it,
                last_displacement: displacement,
            };
        }
    }
    log::debug!("dykstra did not converge: last displacement {displacement:e}");
    DykstraOutcome {
        point: x,
        converged: false,
        iterations: max_iter,
        last_displacement: displacement,
    }
}

/// `{lo ≤ x ≤ hi, Mx = d}`.
#[derive(Debug, Clone)]
pub struct BoxAffineSet {
    lo: Vector,
    hi: Vector,
    m: Matrix,
    d: Vector,
}

impl BoxAffineSet {
    pub fn new(lo: Vector, hi: Vector, m: Matrix, d: Vector) -> Result<Self> {
        check_dim("box bounds", lo.len(), hi.len())?;
        check_dim("columns of M", lo.len(), m.ncols())?;
        check_dim("affine right-hand side", m.nrows(), d.len())?;
        if let Some(i) = (0..lo.len()).find(|&i| !(lo[i] <= hi[i])) {
            return Err(Error::InvalidParameter(format!(
                "box lower bound exceeds upper bound at coordinate {i}"
            )));
        }
        Ok(BoxAffineSet { lo, hi, m, d })
    }

    pub fn lo(&self) -> &Vector {
        &self.lo
    }

    pub fn hi(&self) -> &Vector {
        &self.hi
    }

    pub fn matrix(&self) -> &Matrix {
        &self.m
    }

    pub fn rhs(&self) -> &Vector {
        &self.d
    }

    /// Exact projection; falls back to Dykstra if the dual Newton method
    /// stalls (for instance when the set is empty).
    pub fn project(&self, v: &Vector) -> Vector {
        let w = Vector::from_element(v.len(), 1.0);
        let out = solve_separable_qp(&w, v, &self.lo, &self.hi, &self.m, &self.d);
        if out.converged {
            return out.point;
        }
        log::warn!(
            "box-affine projection: dual Newton stalled at residual {:e}, using Dykstra",
            out.residual
        );
        let members = [
            ConvexSet::Box {
                lo: self.lo.clone(),
                hi: self.hi.clone(),
            },
            ConvexSet::Affine(
                AffineSubspace::new(self.m.clone(), self.d.clone()).expect("dimensions checked"),
            ),
        ];
        project_dykstra(v, &members, DYKSTRA_MAX_ITER, DYKSTRA_TOL).point
    }
}

#[derive(Debug, Clone)]
pub struct QpOutcome {
    pub point: Vector,
    pub multipliers: Vector,
    pub converged: bool,
    pub iterations: usize,
    /// `‖Mx − d‖∞` at the returned point.
    pub residual: f64,
}

/// Minimizes `Σ ½wᵢxᵢ² − gᵢxᵢ` over `{lo ≤ x ≤ hi, Mx = d}` (`w > 0`) by a
/// semismooth Newton method on the multipliers of `Mx = d`.
///
/// For fixed multipliers `ν` the minimizer is `clamp((g − Mᵀν)/w)`, so the
/// returned point always satisfies the bounds exactly.
pub fn solve_separable_qp(
    w: &Vector,
    g: &Vector,
    lo: &Vector,
    hi: &Vector,
    m: &Matrix,
    d: &Vector,
) -> QpOutcome {
    let rows = m.nrows();
    let primal = |nu: &Vector| -> Vector {
        let mt = m.tr_mul(nu);
        Vector::from_fn(g.len(), |i, _| ((g[i] - mt[i]) / w[i]).max(lo[i]).min(hi[i]))
    };
    let dual = |x: &Vector, nu: &Vector| -> f64 {
        let quad: f64 = (0..x.len()).map(|i| 0.5 * w[i] * x[i] * x[i] - g[i] * x[i]).sum();
        quad + nu.dot(&(m * x - d))
    };
    let tol = 1e-12 * d.amax().max(1.0);
    let mut nu = Vector::zeros(rows);
    let mut x = primal(&nu);
    let mut f = m * &x - d;
    let mut theta = dual(&x, &nu);
    let mut iterations = 0;
    while iterations < 500 {
        if rows == 0 || f.amax() <= tol {
            return QpOutcome {
                residual: if rows == 0 { 0.0 } else { f.amax() },
                point: x,
                multipliers: nu,
                converged: true,
                iterations,
            };
        }
        iterations += 1;
        let free = Vector::from_fn(x.len(), |i, _| {
            let z = (g[i] - m.column(i).dot(&nu)) / w[i];
            if z > lo[i] && z < hi[i] {
                1.0 / w[i]
            } else {
                0.0
            }
        });
        let mut h = m * Matrix::from_diagonal(&free) * m.transpose();
        let shift = 1e-10 * (1.0 + h.diagonal().amax());
        for r in 0..rows {
            h[(r, r)] += shift;
        }
        let Some(chol) = h.cholesky() else {
            break;
        };
        let delta = chol.solve(&f);
        let slope = f.dot(&delta);
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let cand = &nu + &delta * t;
            let xc = primal(&cand);
            let tc = dual(&xc, &cand);
            let fc = m * &xc - d;
            if tc >= theta + 1e-4 * t * slope || (t == 1.0 && fc.amax() < 0.5 * f.amax()) {
                nu = cand;
                x = xc;
                theta = tc;
                f = fc;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    QpOutcome {
        residual: f.amax(),
        point: x,
        multipliers: nu,
        converged: false,
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    #[test]
    fn ball_examples() {
        let z = Vector::zeros(2);
        assert_abs_diff_eq!(project_ball(&v(&[3.0, 4.0]), &z, 2.0), v(&[1.2, 1.6]), epsilon = 1e-15);
        assert_eq!(project_ball(&v(&[0.5, 0.0]), &z, 2.0), v(&[0.5, 0.0]));
        assert_eq!(project_ball(&z, &z, 0.3), z);
        assert!(ConvexSet::centered_ball(2, 0.0).is_err());
    }

    #[test]
    fn box_examples() {
        let lo = v(&[0.0]);
        let hi = v(&[1.0]);
        assert_eq!(project_box(&v(&[1.5]), &lo, &hi).unwrap(), v(&[1.0]));
        assert_eq!(project_box(&v(&[-0.2]), &lo, &hi).unwrap(), v(&[0.0]));
        assert_eq!(project_box(&v(&[0.7]), &lo, &hi).unwrap(), v(&[0.7]));
        assert!(project_box(&v(&[0.7]), &hi, &lo).is_err());
        assert!(ConvexSet::boxed(v(&[1.0, 0.0]), v(&[0.0, 1.0])).is_err());
    }

    #[test]
    fn multiplier_cone_examples() {
        assert_eq!(
            project_multiplier_cone(&v(&[-1.0, -1.0]), &[Sense::Le, Sense::Eq]),
            v(&[0.0, -1.0])
        );
        assert_eq!(
            project_multiplier_cone(&v(&[2.0, 3.0]), &[Sense::Le, Sense::Le]),
            v(&[2.0, 3.0])
        );
        assert_eq!(
            project_multiplier_cone(&Vector::zeros(2), &[Sense::Le, Sense::Eq]),
            Vector::zeros(2)
        );
    }

    #[test]
    fn affine_examples() {
        let m = Matrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let p = project_affine(&v(&[2.0, 2.0]), &m, &v(&[1.0])).unwrap();
        assert_abs_diff_eq!(p.point, v(&[0.5, 0.5]), epsilon = 1e-14);
        assert!(!p.rank_deficient);
        let on = v(&[0.25, 0.75]);
        assert_abs_diff_eq!(project_affine(&on, &m, &v(&[1.0])).unwrap().point, on, epsilon = 1e-14);
    }

    #[test]
    fn affine_rank_deficient_is_flagged() {
        let m = Matrix::from_row_slice(2, 2, &[1.0, 1.0, 2.0, 2.0]);
        let p = project_affine(&v(&[2.0, 2.0]), &m, &v(&[1.0, 2.0])).unwrap();
        assert!(p.rank_deficient);
        assert_abs_diff_eq!(p.point, v(&[0.5, 0.5]), epsilon = 1e-12);
    }

    #[test]
    fn dykstra_symmetric_example() {
        let b = ConvexSet::boxed(Vector::zeros(2), v(&[1.0, 1.0])).unwrap();
        let a = ConvexSet::affine(Matrix::from_row_slice(1, 2, &[1.0, 1.0]), v(&[1.0])).unwrap();
        let out = project_dykstra(&v(&[2.0, 2.0]), &[b.clone(), a.clone()], DYKSTRA_MAX_ITER, DYKSTRA_TOL);
        assert!(out.converged);
        assert_abs_diff_eq!(out.point, v(&[0.5, 0.5]), epsilon = 1e-9);
        let inside = v(&[0.3, 0.7]);
        let out = project_dykstra(&inside, &[b, a], DYKSTRA_MAX_ITER, DYKSTRA_TOL);
        assert_abs_diff_eq!(out.point, inside, epsilon = 1e-12);
    }

    #[test]
    fn dykstra_nonconvergence_is_flagged() {
        let b = ConvexSet::boxed(Vector::zeros(3), Vector::from_element(3, 1.0)).unwrap();
        let a = ConvexSet::affine(Matrix::from_row_slice(1, 3, &[1.0, 2.0, 3.0]), v(&[2.5])).unwrap();
        let out = project_dykstra(&v(&[5.0, -3.0, 4.0]), &[b, a], 1, 1e-14);
        assert!(!out.converged);
        assert_eq!(out.iterations, 1);
    }

    #[test]
    fn simplex_projection() {
        let p = project_simplex(&v(&[0.5, 0.5, 2.0]), 1.0);
        assert_abs_diff_eq!(p, v(&[0.0, 0.0, 1.0]), epsilon = 1e-15);
        let p = project_simplex(&v(&[0.2, 0.2]), 1.0);
        assert_abs_diff_eq!(p, v(&[0.5, 0.5]), epsilon = 1e-15);
    }

    #[test]
    fn radius_bounds() {
        let b = ConvexSet::boxed(v(&[-1.0, 0.0]), v(&[2.0, 2.0])).unwrap();
        assert_abs_diff_eq!(b.radius_bound(), 8.0_f64.sqrt(), epsilon = 1e-15);
        let ball = ConvexSet::centered_ball(2, 5.0).unwrap();
        let i = ConvexSet::intersection(vec![b, ball]).unwrap();
        assert_abs_diff_eq!(i.radius_bound(), 8.0_f64.sqrt(), epsilon = 1e-15);
        assert!(ConvexSet::full_space(2).radius_bound().is_infinite());
    }

    #[test]
    fn box_affine_matches_dykstra() {
        let lo = Vector::zeros(4);
        let hi = v(&[1.0, 0.5, 2.0, 1.5]);
        let m = Matrix::from_row_slice(2, 4, &[1.0, 1.0, 0.0, 0.0, 0.0, 1.0, -1.0, 1.0]);
        let d = v(&[1.0, 0.25]);
        let set = ConvexSet::box_affine(lo.clone(), hi.clone(), m.clone(), d.clone()).unwrap();
        let members = [
            ConvexSet::boxed(lo, hi).unwrap(),
            ConvexSet::affine(m, d).unwrap(),
        ];
        for p in [v(&[3.0, -1.0, 0.2, 5.0]), v(&[0.1, 0.1, 0.1, 0.1]), v(&[-2.0, 4.0, 1.0, -1.0])] {
            let exact = set.project(&p);
            let dyk = project_dykstra(&p, &members, 100_000, 1e-13);
            assert!(set.contains(&exact, 1e-10));
            assert_abs_diff_eq!(exact, dyk.point, epsilon = 1e-8);
        }
    }

    #[test]
    fn capped_simplex_with_zero_total_is_origin() {
        let set = ConvexSet::box_affine(
            Vector::zeros(3),
            Vector::from_element(3, 2.0),
            Matrix::from_element(1, 3, 1.0),
            v(&[0.0]),
        )
        .unwrap();
        assert_eq!(set.project(&v(&[0.4, -1.0, 3.0])), Vector::zeros(3));
    }

    #[test]
    fn separable_qp_weighted() {
        // min x₁² + 2x₂² s.t. x₁ + x₂ = 3, 0 ≤ x ≤ 10: x = (2, 1)
        let out = solve_separable_qp(
            &v(&[2.0, 4.0]),
            &Vector::zeros(2),
            &Vector::zeros(2),
            &v(&[10.0, 10.0]),
            &Matrix::from_row_slice(1, 2, &[1.0, 1.0]),
            &v(&[3.0]),
        );
        assert!(out.converged);
        assert_abs_diff_eq!(out.point, v(&[2.0, 1.0]), epsilon = 1e-12);
    }

    #[test]
    fn product_projects_blockwise() {
        let p = ConvexSet::product(vec![
            ConvexSet::centered_ball(2, 1.0).unwrap(),
            ConvexSet::nonneg_orthant(1),
        ]);
        let out = p.project(&v(&[3.0, 4.0, -2.0]));
        assert_abs_diff_eq!(out, v(&[0.6, 0.8, 0.0]), epsilon = 1e-15);
        assert!(p.contains(&out, 1e-12));
        assert_eq!(p.dim(), 3);
    }
}
