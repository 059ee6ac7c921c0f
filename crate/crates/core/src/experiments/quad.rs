//! Nonconvex-strongly-concave quadratic benchmark
//! `f = ½xᵀQx + xᵀCy − ½yᵀDy + eᵀy` with indefinite `Q`, `D ≻ 0`, unit balls
//! for `X` and `Y`, and inequality rows pushed towards activity by `e`.

use nalgebra::SymmetricEigen;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::{operator_norm, Matrix, Vector};
use crate::model::{CouplingConstraints, MinimaxProblem, Sense, SmoothFunction};
use crate::projections::ConvexSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadSpec {
    pub n: usize,
    pub m: usize,
    pub p: usize,
    pub seed: u64,
}

impl Default for QuadSpec {
    fn default() -> Self {
        QuadSpec { n: 4, m: 3, p: 2, seed: 7 }
    }
}

fn random_orthogonal(k: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let g = Matrix::from_fn(k, k, |_, _| rng.gen_range(-1.0..1.0));
    g.qr().q()
}

fn spectral(eigs: &[f64], rng: &mut ChaCha8Rng) -> Matrix {
    let u = random_orthogonal(eigs.len(), rng);
    &u * Matrix::from_diagonal(&Vector::from_column_slice(eigs)) * u.transpose()
}

pub fn ncsc_quad(spec: QuadSpec) -> Result<MinimaxProblem> {
    let QuadSpec { n, m, p, seed } = spec;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q_eigs: Vec<f64> = (0..n)
        .map(|i| if n == 1 { -1.0 } else { -1.0 + 2.0 * i as f64 / (n - 1) as f64 })
        .collect();
    let q = spectral(&q_eigs, &mut rng);
    let d_eigs: Vec<f64> = (0..m).map(|i| 1.0 + i as f64 / m.max(1) as f64).collect();
    let d = spectral(&d_eigs, &mut rng);
    let c = Matrix::from_fn(n, m, |_, _| rng.gen_range(-0.5..0.5));
    let a = Matrix::from_fn(p, n, |_, _| rng.gen_range(-0.5..0.5));
    let mut b = Matrix::from_fn(p, m, |_, _| rng.gen_range(-1.0..1.0));

    let mut h = Matrix::zeros(n + m, n + m);
    h.view_mut((0, 0), (n, n)).copy_from(&q);
    h.view_mut((0, n), (n, m)).copy_from(&c);
    h.view_mut((n, 0), (m, n)).copy_from(&c.transpose());
    h.view_mut((n, n), (m, m)).copy_from(&(-&d));
    let l_hess = SymmetricEigen::new(h).eigenvalues.amax();
    let nb = operator_norm(&b);
    if nb > l_hess {
        b *= l_hess / nb;
    }
    let l = l_hess * (1.0 + 1e-9);
    let mu = d_eigs[0];
    let e = b.row_sum().transpose() * 2.0;
    let rhs = Vector::from_fn(p, |i, _| a.row(i).norm() + 0.1);

    let (q1, c1, d1, e1) = (q.clone(), c.clone(), d.clone(), e.clone());
    let (q2, c2) = (q.clone(), c.clone());
    let (c3, d3, e3) = (c, d, e);
    let f = SmoothFunction::new(
        move |x: &Vector, y: &Vector| {
            0.5 * x.dot(&(&q1 * x)) + x.dot(&(&c1 * y)) - 0.5 * y.dot(&(&d1 * y)) + e1.dot(y)
        },
        move |x: &Vector, y: &Vector| &q2 * x + &c2 * y,
        move |x: &Vector, y: &Vector| c3.tr_mul(x) - &d3 * y + &e3,
        l,
    )?
    .with_strong_concavity(mu)?;
    let cons = CouplingConstraints::uniform(a, b, rhs, Sense::Le)?;
    MinimaxProblem::builder(
        f,
        cons,
        ConvexSet::centered_ball(n, 1.0)?,
        ConvexSet::centered_ball(m, 1.0)?,
    )
    .build()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::gradient_fd_error;

    #[test]
    fn oracles_and_metadata() {
        let p = ncsc_quad(QuadSpec::default()).unwrap();
        assert!(operator_norm(&p.constraints.b) <= p.f.lipschitz());
        assert!(p.f.strong_concavity() > 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..20 {
            let x = p.set_x.project(&Vector::from_fn(4, |_, _| rng.gen_range(-0.5..0.5)));
            let y = p.set_y.project(&Vector::from_fn(3, |_, _| rng.gen_range(-0.5..0.5)));
            assert!(gradient_fd_error(&p.f, &x, &y, 1e-5) <= 1e-6);
        }
    }
}
