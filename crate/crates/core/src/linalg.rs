//! Small dense helpers shared across modules.

use nalgebra::{DMatrix, DVector};

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// Spectral norm (largest singular value) by power iteration on `MᵀM`.
///
/// Stops when the relative change of the estimate drops below `tol` or after
/// `max_iter` rounds. Returns 0 for an empty or zero matrix.
pub fn spectral_norm(m: &Matrix, tol: f64, max_iter: usize) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    // deterministic, non-degenerate start
    let mut v = Vector::from_fn(m.ncols(), |i, _| 1.0 + 0.1 * (i as f64 + 1.0).sqrt());
    let n0 = v.norm();
    v /= n0;
    let mut sigma = 0.0;
    for _ in 0..max_iter {
        let mv = m * &v;
        let w = m.transpose() * &mv;
        let wn = w.norm();
        if wn == 0.0 {
            return 0.0;
        }
        let next = mv.norm();
        v = w / wn;
        if (next - sigma).abs() <= tol * next.max(1e-300) {
            sigma = next;
            break;
        }
        sigma = next;
    }
    // one final Rayleigh evaluation at the converged vector
    (m * &v).norm().max(sigma)
}

/// Default operator-norm routine used by the schedules.
pub fn operator_norm(m: &Matrix) -> f64 {
    spectral_norm(m, 1e-10, 1000)
}

pub fn inf_norm(v: &Vector) -> f64 {
    v.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}
