//! Adversarial attack on a min-cost network flow.
//!
//! The game is `max_y min_x Σ q_e (x_e + y_e) x_e − (η/2)‖y‖²` where `x` is
//! the operator's flow, `y` the adversary's capacity consumption and
//! `x + y ≤ p` couples them. The library solves `min_x' max_y'`, so the
//! adversary becomes the min variable `x'`, the flow becomes the max variable
//! `y'`, and the objective is negated:
//! `f(x', y') = −Σ q_e (y'_e + x'_e) y'_e + (η/2)‖x'‖²`.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::model::{CouplingConstraints, MinimaxProblem, Sense, SmoothFunction};
use crate::projections::{solve_separable_qp, ConvexSet};

pub const DEFAULT_ETA: f64 = 0.05;
pub const MAX_GRAPH_ATTEMPTS: usize = 50;
const FLOW_TOL: f64 = 1e-12;
const QP_ACCEPT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowGraph {
    pub nodes: usize,
    pub source: usize,
    pub sink: usize,
    pub edges: Vec<(usize, usize)>,
    pub capacity: Vec<f64>,
    pub cost: Vec<f64>,
}

impl FlowGraph {
    pub fn new(
        nodes: usize,
        source: usize,
        sink: usize,
        edges: Vec<(usize, usize)>,
        capacity: Vec<f64>,
        cost: Vec<f64>,
    ) -> Result<Self> {
        if source >= nodes || sink >= nodes || source == sink {
            return Err(Error::InvalidParameter("source and sink must be distinct nodes".into()));
        }
        check_dim("edge capacities", edges.len(), capacity.len())?;
        check_dim("edge costs", edges.len(), cost.len())?;
        if let Some(&(u, v)) = edges.iter().find(|&&(u, v)| u >= nodes || v >= nodes || u == v) {
            return Err(Error::InvalidParameter(format!("bad edge ({u}, {v})")));
        }
        if capacity.iter().chain(&cost).any(|&c| !(c > 0.0) || !c.is_finite()) {
            return Err(Error::InvalidParameter("capacities and costs must be positive".into()));
        }
        Ok(FlowGraph { nodes, source, sink, edges, capacity, cost })
    }

    /// Random directed graph with `s = 0`, `t = n − 1`; each ordered pair is an
    /// edge with probability `edge_prob`, except edges into `s` or out of `t`.
    /// A direct `s → t` edge is added when `t` is unreachable.
    pub fn random<R: Rng>(nodes: usize, edge_prob: f64, rng: &mut R) -> Result<Self> {
        if nodes < 2 {
            return Err(Error::InvalidParameter("a flow graph needs at least 2 nodes".into()));
        }
        if !(0.0..=1.0).contains(&edge_prob) {
            return Err(Error::InvalidParameter(format!("edge probability {edge_prob} outside [0, 1]")));
        }
        let (s, t) = (0, nodes - 1);
        let mut edges = Vec::new();
        for u in 0..nodes {
            for v in 0..nodes {
                if u == v || v == s || u == t {
                    continue;
                }
                if rng.gen::<f64>() < edge_prob {
                    edges.push((u, v));
                }
            }
        }
        if !reachable(nodes, &edges, s, t) {
            edges.push((s, t));
        }
        let capacity = (0..edges.len()).map(|_| rng.gen_range(1.0..2.0)).collect();
        let cost = (0..edges.len()).map(|_| rng.gen_range(1.0..2.0)).collect();
        FlowGraph::new(nodes, s, t, edges, capacity, cost)
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn source_exit_capacity(&self) -> f64 {
        self.edges
            .iter()
            .zip(&self.capacity)
            .filter(|((u, _), _)| *u == self.source)
            .map(|(_, c)| c)
            .sum()
    }

    /// Conservation rows for every node other than `s` and `t` that touches
    /// an edge, followed by the sink-inflow row.
    pub fn flow_constraints(&self, demand: f64) -> (Matrix, Vector) {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for node in 0..self.nodes {
            if node == self.source || node == self.sink {
                continue;
            }
            let row: Vec<f64> = self
                .edges
                .iter()
                .map(|&(u, v)| if v == node { 1.0 } else if u == node { -1.0 } else { 0.0 })
                .collect();
            if row.iter().any(|&a| a != 0.0) {
                rows.push(row);
            }
        }
        rows.push(self.edges.iter().map(|&(_, v)| if v == self.sink { 1.0 } else { 0.0 }).collect());
        let mut rhs = vec![0.0; rows.len()];
        *rhs.last_mut().expect("sink row") = demand;
        let m = Matrix::from_fn(rows.len(), self.num_edges(), |i, j| rows[i][j]);
        (m, Vector::from_vec(rhs))
    }

    /// Maximum `s → t` flow under `capacity` (Edmonds-Karp).
    pub fn max_flow(&self, capacity: &[f64]) -> f64 {
        let mut res = Residual::new(self, capacity);
        let mut total = 0.0;
        while let Some(path) = res.bfs_path(self.source, self.sink) {
            let push = path.iter().map(|&a| res.cap[a]).fold(f64::INFINITY, f64::min);
            for &a in &path {
                res.cap[a] -= push;
                res.cap[a ^ 1] += push;
            }
            total += push;
        }
        total
    }
}

fn reachable(nodes: usize, edges: &[(usize, usize)], s: usize, t: usize) -> bool {
    let mut seen = vec![false; nodes];
    let mut queue = VecDeque::from([s]);
    seen[s] = true;
    while let Some(u) = queue.pop_front() {
        for &(a, b) in edges {
            if a == u && !seen[b] {
                seen[b] = true;
                queue.push_back(b);
            }
        }
    }
    seen[t]
}

/// Residual network; arc `2e` is edge `e` forward, arc `2e + 1` its reverse.
struct Residual {
    head: Vec<usize>,
    tail: Vec<usize>,
    cap: Vec<f64>,
    cost: Vec<f64>,
    out: Vec<Vec<usize>>,
}

impl Residual {
    fn new(g: &FlowGraph, capacity: &[f64]) -> Self {
        let mut r = Residual {
            head: Vec::new(),
            tail: Vec::new(),
            cap: Vec::new(),
            cost: Vec::new(),
            out: vec![Vec::new(); g.nodes],
        };
        for (e, &(u, v)) in g.edges.iter().enumerate() {
            for (a, b, c, q) in [(u, v, capacity[e], g.cost[e]), (v, u, 0.0, -g.cost[e])] {
                r.out[a].push(r.head.len());
                r.tail.push(a);
                r.head.push(b);
                r.cap.push(c);
                r.cost.push(q);
            }
        }
        r
    }

    fn bfs_path(&self, s: usize, t: usize) -> Option<Vec<usize>> {
        let mut pred = vec![usize::MAX; self.out.len()];
        let mut seen = vec![false; self.out.len()];
        seen[s] = true;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &a in &self.out[u] {
                let v = self.head[a];
                if !seen[v] && self.cap[a] > FLOW_TOL {
                    seen[v] = true;
                    pred[v] = a;
                    queue.push_back(v);
                }
            }
        }
        seen[t].then(|| self.trace(&pred, s, t))
    }

    fn shortest_path(&self, s: usize, t: usize) -> Option<Vec<usize>> {
        let n = self.out.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut pred = vec![usize::MAX; n];
        dist[s] = 0.0;
        for _ in 0..n {
            let mut changed = false;
            for a in 0..self.head.len() {
                let (u, v) = (self.tail[a], self.head[a]);
                if self.cap[a] > FLOW_TOL && dist[u] + self.cost[a] < dist[v] - 1e-14 {
                    dist[v] = dist[u] + self.cost[a];
                    pred[v] = a;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        dist[t].is_finite().then(|| self.trace(&pred, s, t))
    }

    fn trace(&self, pred: &[usize], s: usize, t: usize) -> Vec<usize> {
        let mut path = Vec::new();
        let mut v = t;
        while v != s {
            let a = pred[v];
            path.push(a);
            v = self.tail[a];
        }
        path.reverse();
        path
    }
}

/// Minimum of `Σ q_e x_e` over flows of value `demand` by successive shortest
/// paths. Returns the cost and the optimal edge flows.
pub fn min_cost_flow_lp(graph: &FlowGraph, capacity: &[f64], demand: f64) -> Result<(f64, Vector)> {
    check_dim("capacities", graph.num_edges(), capacity.len())?;
    let mut res = Residual::new(graph, capacity);
    let mut left = demand;
    let scale = demand.abs().max(1.0);
    while left > FLOW_TOL * scale {
        let Some(path) = res.shortest_path(graph.source, graph.sink) else {
            return Err(Error::Infeasible(format!(
                "demand {demand} exceeds the maximum flow by {left}"
            )));
        };
        let push = path.iter().map(|&a| res.cap[a]).fold(left, f64::min);
        for &a in &path {
            res.cap[a] -= push;
            res.cap[a ^ 1] += push;
        }
        left -= push;
    }
    let flow = Vector::from_fn(graph.num_edges(), |e, _| res.cap[2 * e + 1]);
    let cost = flow.iter().zip(&graph.cost).map(|(x, q)| x * q).sum();
    Ok((cost, flow))
}

/// Minimum over the flow polytope (with capacities `p − y`) of
/// `Σ q_e (x_e + y_e) x_e` for a fixed adversary `y`. Returns the value and
/// the minimizing flow.
pub fn attacked_min_cost(graph: &FlowGraph, demand: f64, y: &Vector) -> Result<(f64, Vector)> {
    let e = graph.num_edges();
    check_dim("adversary", e, y.len())?;
    if (0..e).any(|i| y[i] < -QP_ACCEPT_TOL || y[i] > graph.capacity[i] + QP_ACCEPT_TOL) {
        return Err(Error::InvalidParameter("adversary must satisfy 0 ≤ y ≤ p".into()));
    }
    let hi = Vector::from_fn(e, |i, _| (graph.capacity[i] - y[i]).max(0.0));
    if graph.max_flow(hi.as_slice()) < demand * (1.0 - 1e-12) {
        return Err(Error::Infeasible("attack leaves less capacity than the demand".into()));
    }
    let q = Vector::from_column_slice(&graph.cost);
    let w = &q * 2.0;
    let g = -q.component_mul(y);
    let (m, d) = graph.flow_constraints(demand);
    let out = solve_separable_qp(&w, &g, &Vector::zeros(e), &hi, &m, &d);
    if out.residual > QP_ACCEPT_TOL * demand.max(1.0) {
        return Err(Error::Infeasible(format!(
            "attacked flow problem not solved (residual {:e})",
            out.residual
        )));
    }
    let x = out.point;
    let value = (0..e).map(|i| q[i] * (x[i] + y[i]) * x[i]).sum();
    Ok((value, x))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowAttackInstance {
    pub graph: FlowGraph,
    pub demand: f64,
    pub budget: f64,
    pub eta: f64,
    /// Number of graph draws needed to obtain a feasible demand.
    pub attempts: usize,
    pub orientation: String,
}

impl FlowAttackInstance {
    /// The game objective in its native `max_y min_x` orientation.
    pub fn game_value(&self, flow: &Vector, attack: &Vector) -> f64 {
        let q = &self.graph.cost;
        let cost: f64 = (0..q.len()).map(|i| q[i] * (flow[i] + attack[i]) * flow[i]).sum();
        cost - 0.5 * self.eta * attack.norm_squared()
    }

    /// Library variables `(x', y')` from `(flow, attack)`.
    pub fn to_library(flow: &Vector, attack: &Vector) -> (Vector, Vector) {
        (attack.clone(), flow.clone())
    }

    /// `(flow, attack)` from library variables `(x', y')`.
    pub fn from_library(x: &Vector, y: &Vector) -> (Vector, Vector) {
        (y.clone(), x.clone())
    }
}

pub struct FlowAttack {
    pub instance: FlowAttackInstance,
    pub problem: MinimaxProblem,
}

/// Draws a feasible instance; the flow set is `{0 ≤ x ≤ p, conservation,
/// sink inflow = r_t}` and the adversary set `{0 ≤ y ≤ p, Σy = b}`.
pub fn gen_flow_attack(nodes: usize, edge_prob: f64, d_percent: f64, budget: f64, seed: u64) -> Result<FlowAttack> {
    gen_flow_attack_with_eta(nodes, edge_prob, d_percent, budget, DEFAULT_ETA, seed)
}

pub fn gen_flow_attack_with_eta(
    nodes: usize,
    edge_prob: f64,
    d_percent: f64,
    budget: f64,
    eta: f64,
    seed: u64,
) -> Result<FlowAttack> {
    if !(d_percent > 0.0 && d_percent <= 100.0) {
        return Err(Error::InvalidParameter(format!("demand percent {d_percent} outside (0, 100]")));
    }
    if !(budget >= 0.0) || !(eta > 0.0) {
        return Err(Error::InvalidParameter("budget must be nonnegative and eta positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for attempt in 1..=MAX_GRAPH_ATTEMPTS {
        let graph = FlowGraph::random(nodes, edge_prob, &mut rng)?;
        let demand = d_percent / 100.0 * graph.source_exit_capacity();
        if graph.max_flow(&graph.capacity) < demand * (1.0 - 1e-12) {
            continue;
        }
        let total: f64 = graph.capacity.iter().sum();
        if budget > total {
            return Err(Error::InvalidParameter(format!("budget {budget} exceeds total capacity {total}")));
        }
        let instance = FlowAttackInstance {
            graph,
            demand,
            budget,
            eta,
            attempts: attempt,
            orientation: "library x = adversary y, library y = flow x, f = -(game objective)".into(),
        };
        let problem = flow_problem(&instance)?;
        return Ok(FlowAttack { instance, problem });
    }
    Err(Error::Infeasible(format!(
        "no feasible graph after {MAX_GRAPH_ATTEMPTS} draws"
    )))
}

fn flow_problem(inst: &FlowAttackInstance) -> Result<MinimaxProblem> {
    let g = &inst.graph;
    let e = g.num_edges();
    let q = Vector::from_column_slice(&g.cost);
    let p = Vector::from_column_slice(&g.capacity);
    let eta = inst.eta;
    let l = g
        .cost
        .iter()
        .map(|&qe| {
            let (a, b, c) = (eta, -qe, -2.0 * qe);
            let mid = 0.5 * (a + c);
            let rad = (0.25 * (a - c) * (a - c) + b * b).sqrt();
            (mid.abs() + rad).max(2.0 * qe)
        })
        .fold(0.0, f64::max);
    let mu = 2.0 * g.cost.iter().copied().fold(f64::INFINITY, f64::min);
    let (q1, q2, q3) = (q.clone(), q.clone(), q);
    let f = SmoothFunction::new(
        move |x: &Vector, y: &Vector| -q1.dot(&(y + x).component_mul(y)) + 0.5 * eta * x.norm_squared(),
        move |x: &Vector, y: &Vector| -q2.component_mul(y) + x * eta,
        move |x: &Vector, y: &Vector| -q3.component_mul(&(y * 2.0 + x)),
        l,
    )?
    .with_strong_concavity(mu)?;
    let cons = CouplingConstraints::uniform(Matrix::identity(e, e), Matrix::identity(e, e), p.clone(), Sense::Le)?;
    let attack = ConvexSet::box_affine(
        Vector::zeros(e),
        p.clone(),
        Matrix::from_element(1, e, 1.0),
        Vector::from_element(1, inst.budget),
    )?;
    let (m, d) = g.flow_constraints(inst.demand);
    let flow = ConvexSet::box_affine(Vector::zeros(e), p, m, d)?;
    MinimaxProblem::builder(f, cons, attack, flow).build()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn parallel() -> FlowGraph {
        FlowGraph::new(2, 0, 1, vec![(0, 1), (0, 1)], vec![1.0, 1.0], vec![1.0, 2.0]).unwrap()
    }

    #[test]
    fn ssp_examples() {
        let g = parallel();
        let (c, x) = min_cost_flow_lp(&g, &g.capacity, 1.5).unwrap();
        assert_abs_diff_eq!(c, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(x[0], 1.0, epsilon = 1e-12);
        let path = FlowGraph::new(3, 0, 2, vec![(0, 1), (1, 2)], vec![1.0, 1.0], vec![1.0, 1.0]).unwrap();
        assert_abs_diff_eq!(min_cost_flow_lp(&path, &path.capacity, 0.5).unwrap().0, 1.0, epsilon = 1e-12);
        assert!(matches!(min_cost_flow_lp(&g, &g.capacity, 2.5), Err(Error::Infeasible(_))));
    }

    #[test]
    fn forced_two_node_instance() {
        let fa = gen_flow_attack(2, 1.0, 100.0, 0.0, 3).unwrap();
        let g = &fa.instance.graph;
        assert_eq!(g.edges, vec![(0, 1)]);
        assert_eq!(fa.instance.demand, g.capacity[0]);
        let pt = fa.problem.set_y.project(&Vector::zeros(1));
        assert_abs_diff_eq!(pt[0], g.capacity[0], epsilon = 1e-12);
        let (v, _) = attacked_min_cost(g, fa.instance.demand, &Vector::zeros(1)).unwrap();
        assert_abs_diff_eq!(v, g.cost[0] * g.capacity[0].powi(2), epsilon = 1e-10);
    }

    #[test]
    fn adapter_round_trip() {
        let fa = gen_flow_attack(6, 0.75, 20.0, 1.0, 4).unwrap();
        let e = fa.instance.graph.num_edges();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10 {
            let flow = Vector::from_fn(e, |_, _| rng.gen_range(0.0..1.0));
            let attack = Vector::from_fn(e, |_, _| rng.gen_range(0.0..1.0));
            let (x, y) = FlowAttackInstance::to_library(&flow, &attack);
            assert_abs_diff_eq!(fa.problem.f.value(&x, &y), -fa.instance.game_value(&flow, &attack), epsilon = 1e-12);
            let (f2, a2) = FlowAttackInstance::from_library(&x, &y);
            assert_eq!((f2, a2), (flow, attack));
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let a = gen_flow_attack(8, 0.5, 10.0, 1.0, 11).unwrap().instance;
        let b = gen_flow_attack(8, 0.5, 10.0, 1.0, 11).unwrap().instance;
        assert_eq!(a, b);
    }
}
