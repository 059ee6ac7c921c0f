//! `min_x max_y xy` on radius-2 balls with one coupled row `Ax + By ≤ 2A + 2B`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::{Matrix, Vector};
use crate::model::{CouplingConstraints, MinimaxProblem, Sense, SmoothFunction};
use crate::projections::ConvexSet;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BilinearInstance {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl BilinearInstance {
    pub fn draw(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        loop {
            let a: f64 = rng.gen_range(0.0..2.0);
            let b: f64 = rng.gen_range(0.0..2.0);
            if a > 0.0 || b > 0.0 {
                return BilinearInstance { a, b, c: 2.0 * a + 2.0 * b };
            }
        }
    }

    pub fn problem(&self) -> Result<MinimaxProblem> {
        let f = SmoothFunction::new(
            |x: &Vector, y: &Vector| x[0] * y[0],
            |_: &Vector, y: &Vector| y.clone(),
            |x: &Vector, _: &Vector| x.clone(),
            1.0,
        )?
        .linear_in_y();
        let cons = CouplingConstraints::uniform(
            Matrix::from_element(1, 1, self.a),
            Matrix::from_element(1, 1, self.b),
            Vector::from_element(1, self.c),
            Sense::Le,
        )?;
        let ball = ConvexSet::centered_ball(1, 2.0)?;
        MinimaxProblem::builder(f, cons, ball.clone(), ball).build()
    }
}

pub fn gen_bilinear(seed: u64) -> Result<(MinimaxProblem, BilinearInstance)> {
    let inst = BilinearInstance::draw(seed);
    Ok((inst.problem()?, inst))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stationarity::grad_g;

    #[test]
    fn deterministic_and_stationary_at_origin() {
        for seed in 0..20 {
            let (p, inst) = gen_bilinear(seed).unwrap();
            assert_eq!(inst, gen_bilinear(seed).unwrap().1);
            assert_eq!(inst.c, 2.0 * inst.a + 2.0 * inst.b);
            assert!(inst.c > 0.0);
            let z = Vector::zeros(1);
            let r = grad_g(&p, &z, &z, &z, 1.0, 1.0, 1.0, 0.0).unwrap();
            assert_eq!(r.norm_total, 0.0);
        }
    }
}
