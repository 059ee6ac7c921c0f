//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use minimax_core::experiments::FlowGraph;
use minimax_core::model::{CouplingConstraints, MinimaxProblem, Sense, SmoothFunction};
use minimax_core::projections::ConvexSet;
use minimax_core::{Matrix, Vector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rand_vec(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vector {
    Vector::from_fn(n, |_, _| rng.gen_range(lo..hi))
}

/// Relative error of both partial gradients against central differences.
pub fn central_diff_rel_err(f: &SmoothFunction, x: &Vector, y: &Vector) -> f64 {
    let diff = |grad: Vector, point: &Vector, eval: &dyn Fn(&Vector) -> f64| {
        let fd = Vector::from_fn(point.len(), |i, _| {
            let h = 1e-6 * point[i].abs().max(1.0);
            let mut a = point.clone();
            let mut b = point.clone();
            a[i] += h;
            b[i] -= h;
            (eval(&a) - eval(&b)) / (2.0 * h)
        });
        (&grad - fd).norm() / grad.norm().max(1.0)
    };
    let ex = diff(f.grad_x(x, y), x, &|p| f.value(p, y));
    let ey = diff(f.grad_y(x, y), y, &|p| f.value(x, p));
    ex.max(ey)
}

/// Projection onto `{lo ≤ x ≤ hi, Mx = d}` by enumerating every face
/// (each coordinate at its lower bound, upper bound, or free).
pub fn face_enum_projection(v: &Vector, lo: &Vector, hi: &Vector, m: &Matrix, d: &Vector) -> Option<Vector> {
    let n = v.len();
    let mut best: Option<(f64, Vector)> = None;
    let mut code = vec![0u8; n];
    loop {
        let free: Vec<usize> = (0..n).filter(|&i| code[i] == 2).collect();
        let mut x = Vector::from_fn(n, |i, _| match code[i] {
            0 => lo[i],
            1 => hi[i],
            _ => v[i],
        });
        let mut ok = true;
        if !free.is_empty() {
            let fixed_part = m * Vector::from_fn(n, |i, _| if code[i] == 2 { 0.0 } else { x[i] });
            let rhs = d - fixed_part;
            let mf = Matrix::from_fn(m.nrows(), free.len(), |r, c| m[(r, free[c])]);
            let vf = Vector::from_fn(free.len(), |i, _| v[free[i]]);
            let gram = &mf * mf.transpose();
            let pinv = gram.pseudo_inverse(1e-12).expect("pseudo-inverse");
            let xf = &vf + mf.transpose() * (pinv * (&rhs - &mf * &vf));
            for (k, &i) in free.iter().enumerate() {
                x[i] = xf[k];
                if xf[k] < lo[i] - 1e-12 || xf[k] > hi[i] + 1e-12 {
                    ok = false;
                }
            }
        }
        if ok && (m * &x - d).amax() <= 1e-9 {
            let dist = (&x - v).norm();
            if best.as_ref().map_or(true, |(b, _)| dist < *b) {
                best = Some((dist, x));
            }
        }
        let mut i = 0;
        while i < n && code[i] == 2 {
            code[i] = 0;
            i += 1;
        }
        if i == n {
            break;
        }
        code[i] += 1;
    }
    best.map(|(_, x)| x)
}

/// Dense two-phase simplex with Bland's rule for `min cᵀx, Ax = b, x ≥ 0`.
pub fn simplex_min(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> Option<(f64, Vec<f64>)> {
    let n = c.len();
    let m = a.len();
    let cols = n + m;
    let mut t: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            let sign = if b[i] < 0.0 { -1.0 } else { 1.0 };
            let mut row: Vec<f64> = a[i].iter().map(|v| v * sign).collect();
            row.extend((0..m).map(|j| if j == i { 1.0 } else { 0.0 }));
            row.push(b[i] * sign);
            row
        })
        .collect();
    let mut basis: Vec<usize> = (n..cols).collect();
    let tol = 1e-10;

    fn pivot(t: &mut [Vec<f64>], r: usize, c: usize) {
        let p = t[r][c];
        for v in t[r].iter_mut() {
            *v /= p;
        }
        let pr = t[r].clone();
        for (i, row) in t.iter_mut().enumerate() {
            if i != r && row[c] != 0.0 {
                let f = row[c];
                for (v, q) in row.iter_mut().zip(&pr) {
                    *v -= f * q;
                }
            }
        }
    }

    let run = |t: &mut Vec<Vec<f64>>, basis: &mut Vec<usize>, cost: &[f64], allowed: usize| -> bool {
        loop {
            let entering = (0..allowed).find(|&j| {
                let z: f64 = cost[j] - (0..t.len()).map(|i| cost[basis[i]] * t[i][j]).sum::<f64>();
                z < -tol && !basis.contains(&j)
            });
            let Some(j) = entering else { return true };
            let mut leave: Option<(f64, usize, usize)> = None;
            for i in 0..t.len() {
                if t[i][j] > tol {
                    let ratio = t[i][cols] / t[i][j];
                    let better = match leave {
                        None => true,
                        Some((r, _, bi)) => ratio < r - tol || (ratio <= r + tol && basis[i] < bi),
                    };
                    if better {
                        leave = Some((ratio, i, basis[i]));
                    }
                }
            }
            let Some((_, r, _)) = leave else { return false };
            pivot(t, r, j);
            basis[r] = j;
        }
    };

    let phase1: Vec<f64> = (0..cols).map(|j| if j >= n { 1.0 } else { 0.0 }).collect();
    run(&mut t, &mut basis, &phase1, cols);
    let infeas: f64 = (0..m).filter(|&i| basis[i] >= n).map(|i| t[i][cols]).sum();
    if infeas > 1e-8 {
        return None;
    }
    let mut i = 0;
    while i < t.len() {
        if basis[i] >= n {
            if let Some(j) = (0..n).find(|&j| t[i][j].abs() > 1e-9) {
                pivot(&mut t, i, j);
                basis[i] = j;
            } else {
                t.remove(i);
                basis.remove(i);
                continue;
            }
        }
        i += 1;
    }
    let mut cost = c.to_vec();
    cost.extend(std::iter::repeat(0.0).take(m));
    if !run(&mut t, &mut basis, &cost, n) {
        return None;
    }
    let mut x = vec![0.0; n];
    for (i, &bi) in basis.iter().enumerate() {
        if bi < n {
            x[bi] = t[i][cols];
        }
    }
    Some((c.iter().zip(&x).map(|(a, b)| a * b).sum(), x))
}

/// Linear min-cost flow as a dense LP: variables `x_e` and slacks `s_e`
/// with `x_e + s_e = p_e`, conservation at every node except `s` and `t`,
/// and inflow into `t` equal to the demand.
pub fn min_cost_flow_simplex(g: &FlowGraph, demand: f64) -> Option<f64> {
    let e = g.edges.len();
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for node in 0..g.nodes {
        if node == g.source {
            continue;
        }
        let mut row = vec![0.0; 2 * e];
        for (k, &(u, v)) in g.edges.iter().enumerate() {
            if v == node {
                row[k] += 1.0;
            }
            if u == node && node != g.sink {
                row[k] -= 1.0;
            }
        }
        rows.push(row);
        rhs.push(if node == g.sink { demand } else { 0.0 });
    }
    for k in 0..e {
        let mut row = vec![0.0; 2 * e];
        row[k] = 1.0;
        row[e + k] = 1.0;
        rows.push(row);
        rhs.push(g.capacity[k]);
    }
    let mut c = g.cost.clone();
    c.extend(std::iter::repeat(0.0).take(e));
    simplex_min(&c, &rows, &rhs).map(|(v, _)| v)
}

/// One-dimensional concave-in-y instance
/// `f = a₁xy − a₂y² + a₃x² + a₄y` on `[−1, 1]²` with `a·x + y ≤ c` and a
/// Slater slack of at least `0.2` at `y = −1`. Returns the problem and a bound on
/// `‖∇f‖` over the box.
pub fn duality_instance(seed: u64) -> (MinimaxProblem, f64) {
    let mut r = rng(1000 + seed);
    let a1: f64 = r.gen_range(-1.0..1.0);
    let a2 = r.gen_range(0.2..1.0);
    let a3: f64 = r.gen_range(-0.5..0.5);
    let a4: f64 = r.gen_range(-0.5..0.5);
    let a = r.gen_range(-0.5..0.5);
    let c = r.gen_range(-0.3..0.3);
    let gx = a1.abs() + 2.0 * a3.abs();
    let gy = a1.abs() + 2.0 * a2 + a4.abs();
    let lip = (gx * gx + gy * gy).sqrt();
    let hess = Matrix::from_row_slice(2, 2, &[2.0 * a3, a1, a1, -2.0 * a2]);
    let l = hess.symmetric_eigen().eigenvalues.amax().max(1e-3);
    let f = SmoothFunction::new(
        move |x: &Vector, y: &Vector| a1 * x[0] * y[0] - a2 * y[0] * y[0] + a3 * x[0] * x[0] + a4 * y[0],
        move |x: &Vector, y: &Vector| Vector::from_element(1, a1 * y[0] + 2.0 * a3 * x[0]),
        move |x: &Vector, y: &Vector| Vector::from_element(1, a1 * x[0] - 2.0 * a2 * y[0] + a4),
        l,
    )
    .unwrap()
    .with_strong_concavity(2.0 * a2)
    .unwrap();
    let cons = CouplingConstraints::uniform(
        Matrix::from_element(1, 1, a),
        Matrix::from_element(1, 1, 1.0),
        Vector::from_element(1, c),
        Sense::Le,
    )
    .unwrap();
    let unit = ConvexSet::boxed(Vector::from_element(1, -1.0), Vector::from_element(1, 1.0)).unwrap();
    (MinimaxProblem::builder(f, cons, unit.clone(), unit).build().unwrap(), lip)
}

/// `max_{y ∈ Y} L(x, y, λ) − g(y)` for the y-quadratic with an explicit
/// ball constraint, found by bisection on the ball multiplier. The quadratic
/// model is read off the gradient oracle (exact for quadratics).
pub fn ball_inner_max(prob: &MinimaxProblem, x: &Vector, lambda: &Vector, radius: f64) -> f64 {
    let m = prob.dim_y();
    let zero = Vector::zeros(m);
    let lin = prob.f.grad_y(x, &zero) - prob.constraints.b.tr_mul(lambda);
    let neg_h = Matrix::from_fn(m, m, |i, j| {
        let mut e = Vector::zeros(m);
        e[j] = 1.0;
        -(prob.f.grad_y(x, &e)[i] - prob.f.grad_y(x, &zero)[i])
    });
    let sym = (&neg_h + neg_h.transpose()) * 0.5;
    let solve = |nu: f64| {
        let mut k = sym.clone();
        for i in 0..m {
            k[(i, i)] += nu;
        }
        k.cholesky().expect("positive definite").solve(&lin)
    };
    let mut y = solve(0.0);
    if y.norm() > radius {
        let (mut lo, mut hi) = (0.0, 1.0);
        while solve(hi).norm() > radius {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if solve(mid).norm() > radius {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        y = solve(hi);
    }
    let cons = &prob.constraints;
    prob.f.value(x, &y) - lambda.dot(&(&cons.a * x + &cons.b * &y - &cons.c))
}

/// Box ∩ affine projection instance `(v, lo, hi, M, d)` with an interior point.
pub fn qp_instance(k: u64) -> (Vector, Vector, Vector, Matrix, Vector) {
    let mut r = rng(500 + k);
    let n = 2 + (k as usize % 11);
    let rows = 1 + (k as usize % 3).min(n - 1);
    let lo = rand_vec(&mut r, n, -1.5, -0.2);
    let hi = rand_vec(&mut r, n, 0.2, 1.5);
    let m = Matrix::from_fn(rows, n, |_, _| r.gen_range(-1.0..1.0));
    let interior = Vector::from_fn(n, |i, _| lo[i] + (hi[i] - lo[i]) * r.gen_range(0.1..0.9));
    let d = &m * interior;
    let v = rand_vec(&mut r, n, -3.0, 3.0);
    (v, lo, hi, m, d)
}

/// Random problem linear in `y`: `f = xᵀCy + eᵀy + ½xᵀQx`.
pub fn linear_instance(k: u64) -> MinimaxProblem {
    let mut r = rng(900 + k);
    let n = 1 + (k as usize % 4);
    let m = 1 + (k as usize % 5);
    let rows = 1 + (k as usize % 3);
    let c = Matrix::from_fn(n, m, |_, _| r.gen_range(-1.0..1.0));
    let e = rand_vec(&mut r, m, -1.0, 1.0);
    let q = Matrix::from_fn(n, n, |_, _| r.gen_range(-1.0..1.0));
    let q = (&q + q.transpose()) * 0.5;
    let l = 1.0 + c.norm() + q.norm();
    let (c1, e1, q1, c2, q2, c3, e3) = (c.clone(), e.clone(), q.clone(), c.clone(), q, c, e);
    let f = SmoothFunction::new(
        move |x: &Vector, y: &Vector| x.dot(&(&c1 * y)) + e1.dot(y) + 0.5 * x.dot(&(&q1 * x)),
        move |x: &Vector, y: &Vector| &c2 * y + &q2 * x,
        move |x: &Vector, _: &Vector| c3.tr_mul(x) + &e3,
        l,
    )
    .unwrap()
    .linear_in_y();
    let cons = CouplingConstraints::uniform(
        Matrix::from_fn(rows, n, |_, _| r.gen_range(-1.0..1.0)),
        Matrix::from_fn(rows, m, |_, _| r.gen_range(-1.0..1.0)),
        rand_vec(&mut r, rows, 0.5, 2.0),
        Sense::Le,
    )
    .unwrap();
    let set_y = match k % 4 {
        0 => ConvexSet::centered_ball(m, 1.5).unwrap(),
        1 => ConvexSet::boxed(Vector::from_element(m, -1.0), Vector::from_element(m, 0.5)).unwrap(),
        2 => ConvexSet::simplex(m, 2.0).unwrap(),
        _ => ConvexSet::box_affine(
            Vector::zeros(m),
            Vector::from_element(m, 1.0),
            Matrix::from_element(1, m, 1.0),
            Vector::from_element(1, 0.5 * m as f64),
        )
        .unwrap(),
    };
    MinimaxProblem::builder(f, cons, ConvexSet::centered_ball(n, 2.0).unwrap(), set_y)
        .build()
        .unwrap()
}

/// Maximizer of `L(x, y, λ) − (q/2)‖y‖² − (p/2)‖y − y_k‖²` over `Y` for `f`
/// linear in `y`, by projected gradient ascent.
pub fn y_step_by_projected_gradient(
    p: &MinimaxProblem,
    x: &Vector,
    yk: &Vector,
    lambda: &Vector,
    q: f64,
    pk: f64,
) -> Vector {
    let coef = p.f.grad_y(x, &Vector::zeros(p.dim_y())) - p.constraints.b.tr_mul(lambda);
    let step = 0.5 / (q + pk);
    let mut y = yk.clone();
    for _ in 0..200 {
        let grad = &coef - &y * q - (&y - yk) * pk;
        y = p.set_y.project(&(&y + grad * step));
    }
    y
}
