//! Instance construction and solver parameter resolution.

use anyhow::{anyhow, bail, Context, Result};
use minimax_core::experiments::{gen_bilinear, ncsc_quad, AttackStudyConfig, QuadSpec};
use minimax_core::linalg::operator_norm;
use minimax_core::model::{CouplingConstraints, IterateState, MinimaxProblem, Sense, SmoothFunction};
use minimax_core::pdapg::{NcscConstants, ParamMode, PdapgParams, Regime};
use minimax_core::pdpg_l::{linear_y_coefficient, PdpgLParams, PdpgLSchedule};
use minimax_core::projections::ConvexSet;
use minimax_core::prox::ProxTerm;
use minimax_core::{Matrix, Vector};

use crate::config::{CustomConfig, Experiment, RunConfig, ScheduleKind, SetConfig, SolverKind};

#[derive(Debug, Clone)]
pub enum SolverSpec {
    Pdapg(PdapgParams),
    PdpgL(PdpgLParams),
    Gda { stepsize: f64, max_iter: usize },
}

pub fn build_problem(cfg: &RunConfig, seed: u64) -> Result<MinimaxProblem> {
    let prob = match cfg.experiment {
        Experiment::Bilinear => gen_bilinear(seed)?.0,
        Experiment::NcscQuad => ncsc_quad(QuadSpec {
            n: cfg.quad.n,
            m: cfg.quad.m,
            p: cfg.quad.p,
            seed,
        })?,
        Experiment::Custom => {
            let c = cfg.custom.as_ref().ok_or_else(|| anyhow!("missing [custom] table"))?;
            custom_problem(c)?
        }
        Experiment::FlowAttack => bail!("flow_attack instances are built per budget by the study"),
    };
    Ok(prob)
}

pub fn study_config(cfg: &RunConfig) -> AttackStudyConfig {
    let f = &cfg.flow;
    AttackStudyConfig {
        nodes: f.nodes,
        edge_prob: f.edge_prob,
        d_percent: f.d_percent,
        eta: f.eta,
        budgets: f.budgets.clone(),
        seeds: cfg.seeds.clone(),
        alpha: f.alpha,
        beta: f.beta,
        gamma: f.gamma,
        max_iter: cfg.max_iter,
        target_eps: cfg.target_eps,
    }
}

pub fn initial_state(cfg: &RunConfig, prob: &MinimaxProblem) -> Result<IterateState> {
    let pick = |v: &Option<Vec<f64>>, n: usize, name: &str| -> Result<Vector> {
        match v {
            None => Ok(Vector::zeros(n)),
            Some(v) if v.len() == n => Ok(Vector::from_column_slice(v)),
            Some(v) => bail!("init.{name} has {} entries, the problem needs {n}", v.len()),
        }
    };
    Ok(IterateState::new(
        pick(&cfg.init.x, prob.dim_x(), "x")?,
        pick(&cfg.init.y, prob.dim_y(), "y")?,
        pick(&cfg.init.lambda, prob.dim_lambda(), "lambda")?,
    ))
}

pub fn default_beta(prob: &MinimaxProblem) -> f64 {
    3.0 * prob.f.lipschitz()
}

/// Resolves stepsizes and checks theory-mode admissibility up front.
pub fn solver_spec(cfg: &RunConfig, prob: &MinimaxProblem) -> Result<SolverSpec> {
    let record_potentials = cfg.record_potentials || cfg.check.is_some();
    let pd = &cfg.pdapg;
    let beta = pd.beta.unwrap_or_else(|| default_beta(prob));
    match cfg.solver {
        SolverKind::PdapgNcsc => {
            let (alpha, gamma) = match (pd.alpha, pd.gamma) {
                (Some(a), Some(g)) => (a, g),
                (a, g) => {
                    let (ta, tg) = NcscConstants::for_problem(prob, beta)
                        .context("theory stepsizes need a strongly concave f; set pdapg.alpha and pdapg.gamma")?
                        .theory_stepsizes(pd.margin);
                    (a.unwrap_or(ta), g.unwrap_or(tg))
                }
            };
            if pd.mode == ParamMode::Theory {
                NcscConstants::for_problem(prob, beta)?.check(alpha, gamma)?;
            }
            Ok(SolverSpec::Pdapg(PdapgParams {
                beta,
                regime: Regime::StronglyConcave { alpha, gamma },
                mode: pd.mode,
                max_iter: cfg.max_iter,
                target_eps: cfg.target_eps,
                record_potentials,
                record_iterates: true,
            }))
        }
        SolverKind::PdapgNcc => {
            let l = prob.f.lipschitz();
            if pd.mode == ParamMode::Theory && !(beta > 2.5 * l) {
                bail!("theory mode needs beta > 5L/2 = {}, got {beta}", 2.5 * l);
            }
            if !(pd.tau > 1.0) {
                bail!("pdapg.tau must exceed 1, got {}", pd.tau);
            }
            Ok(SolverSpec::Pdapg(PdapgParams {
                beta,
                regime: Regime::Concave { tau: pd.tau },
                mode: pd.mode,
                max_iter: cfg.max_iter,
                target_eps: cfg.target_eps,
                record_potentials,
                record_iterates: true,
            }))
        }
        SolverKind::PdpgL => {
            linear_y_coefficient(prob, &Vector::zeros(prob.dim_x())).context("pdpg_l needs f linear in y")?;
            if !prob.g.is_zero() {
                bail!("pdpg_l needs g = 0");
            }
            let l = &cfg.pdpg_l;
            let schedule = match l.schedule {
                ScheduleKind::Theory => PdpgLSchedule::Theory,
                ScheduleKind::CubeRoot => PdpgLSchedule::cube_root(),
                ScheduleKind::Manual => PdpgLSchedule::Manual {
                    q: l.q.expect("validated"),
                    p: l.p.expect("validated"),
                    alpha: l.alpha.expect("validated"),
                    gamma: l.gamma.expect("validated"),
                },
            };
            if matches!(schedule, PdpgLSchedule::Theory) && !(l.tau > 1.0) {
                bail!("pdpg_l.tau must exceed 1, got {}", l.tau);
            }
            Ok(SolverSpec::PdpgL(PdpgLParams {
                tau: l.tau,
                max_iter: cfg.max_iter,
                target_eps: cfg.target_eps,
                schedule,
                record_potentials,
                record_iterates: true,
            }))
        }
        SolverKind::BaselineGda => Ok(SolverSpec::Gda {
            stepsize: cfg.gda.stepsize,
            max_iter: cfg.max_iter,
        }),
    }
}

fn matrix(rows: &[Vec<f64>], nrows: usize, ncols: usize, name: &str) -> Result<Matrix> {
    if rows.len() != nrows || rows.iter().any(|r| r.len() != ncols) {
        bail!("custom.{name} must be {nrows}x{ncols}");
    }
    Ok(Matrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

fn set(cfg: &SetConfig, dim: usize, name: &str) -> Result<ConvexSet> {
    let s = match cfg {
        SetConfig::Box { lo, hi } => {
            if lo.len() != dim || hi.len() != dim {
                bail!("custom.{name} box needs {dim} bounds");
            }
            ConvexSet::boxed(Vector::from_column_slice(lo), Vector::from_column_slice(hi))?
        }
        SetConfig::Ball { center, radius } => {
            if center.len() != dim {
                bail!("custom.{name} ball centre needs {dim} entries");
            }
            ConvexSet::ball(Vector::from_column_slice(center), *radius)?
        }
    };
    Ok(s)
}

pub fn custom_problem(c: &CustomConfig) -> Result<MinimaxProblem> {
    let n = c.q.len();
    let m = c.d.len();
    let p = c.c.len();
    if n == 0 || m == 0 {
        bail!("custom.q and custom.d must be nonempty");
    }
    let q = matrix(&c.q, n, n, "q")?;
    let q = (&q + q.transpose()) * 0.5;
    let cxy = matrix(&c.c_xy, n, m, "c_xy")?;
    let d = matrix(&c.d, m, m, "d")?;
    let d = (&d + d.transpose()) * 0.5;
    let a = matrix(&c.a, p, n, "a")?;
    let b = matrix(&c.b, p, m, "b")?;
    let lx = Vector::from_column_slice(c.lin_x.as_deref().unwrap_or(&vec![0.0; n]));
    let ly = Vector::from_column_slice(c.lin_y.as_deref().unwrap_or(&vec![0.0; m]));
    if lx.len() != n || ly.len() != m {
        bail!("custom.lin_x / lin_y have the wrong length");
    }
    let mut h = Matrix::zeros(n + m, n + m);
    h.view_mut((0, 0), (n, n)).copy_from(&q);
    h.view_mut((0, n), (n, m)).copy_from(&cxy);
    h.view_mut((n, 0), (m, n)).copy_from(&cxy.transpose());
    h.view_mut((n, n), (m, m)).copy_from(&(-&d));
    let l = operator_norm(&h).max(1e-12) * (1.0 + 1e-9);
    let d_eigs = d.clone().symmetric_eigen().eigenvalues;
    let mu = d_eigs.min();
    if mu < -1e-12 {
        bail!("custom.d must be positive semidefinite so that f is concave in y");
    }
    let linear = d.amax() == 0.0;

    let (q1, c1, d1, lx1, ly1) = (q.clone(), cxy.clone(), d.clone(), lx.clone(), ly.clone());
    let (c2, d2) = (cxy.clone(), d.clone());
    let mut f = SmoothFunction::new(
        move |x: &Vector, y: &Vector| {
            0.5 * x.dot(&(&q1 * x)) + x.dot(&(&c1 * y)) - 0.5 * y.dot(&(&d1 * y)) + lx1.dot(x) + ly1.dot(y)
        },
        move |x: &Vector, y: &Vector| &q * x + &cxy * y + &lx,
        move |x: &Vector, y: &Vector| c2.tr_mul(x) - &d2 * y + &ly,
        l,
    )?;
    if mu > 0.0 {
        f = f.with_strong_concavity(mu)?;
    }
    if linear {
        f = f.linear_in_y();
    }
    let senses = c.senses.clone().unwrap_or_else(|| vec![Sense::Le; p]);
    let cons = CouplingConstraints::new(a, b, Vector::from_column_slice(&c.c), senses)?;
    let mut builder = MinimaxProblem::builder(f, cons, set(&c.set_x, n, "set_x")?, set(&c.set_y, m, "set_y")?);
    if c.l1_x > 0.0 {
        builder = builder.h(ProxTerm::l1(c.l1_x)?);
    }
    Ok(builder.build()?)
}
