//! Executes a resolved configuration and writes its artifacts.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, Context, Result};
use minimax_core::experiments::{baseline_sim_gda, run_attack_study, BudgetSummary, StudyRow};
use minimax_core::model::{IterateState, MinimaxProblem};
use minimax_core::pdapg::{pdapg_solve, NcscConstants, Regime};
use minimax_core::pdpg_l::{pdpg_l_schedule, pdpg_l_solve, pdpg_l_step, PdpgLConstants, PdpgLSchedule};
use minimax_core::stationarity::potential_v;
use minimax_core::trace::{SolveResult, TraceRow};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Experiment, Monitor, RunConfig, SolverKind};
use crate::instance::{build_problem, initial_state, solver_spec, study_config, SolverSpec};

/// Slack of the descent monitors, relative to `1 + |potential|`.
pub const DESCENT_TOL: f64 = 1e-7;

#[derive(Debug)]
pub enum CliError {
    Config(anyhow::Error),
    Solver(anyhow::Error),
    Check(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Solver(_) => 2,
            CliError::Check(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "configuration error: {e:#}"),
            CliError::Solver(e) => write!(f, "solver error: {e:#}"),
            CliError::Check(s) => write!(f, "check failed: {s}"),
        }
    }
}

pub const TRACE_HEADER: [&str; 16] = [
    "iter",
    "x_norm",
    "y_norm",
    "lambda_norm",
    "gradG_norm",
    "gradG_aug_norm",
    "max_violation",
    "potential",
    "potential_trusted",
    "q_k",
    "p_k",
    "rho_k",
    "alpha_k",
    "beta_k",
    "gamma_k",
    "certificate_ok",
];

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn trace_record(r: &TraceRow) -> [String; 16] {
    [
        r.iter.to_string(),
        r.norm_x.to_string(),
        r.norm_y.to_string(),
        r.norm_lambda.to_string(),
        r.grad_g.to_string(),
        r.grad_g_aug.to_string(),
        r.max_violation.to_string(),
        opt(r.potential),
        opt(r.potential_trusted),
        r.q.to_string(),
        r.p.to_string(),
        r.rho.to_string(),
        r.alpha.to_string(),
        r.beta.to_string(),
        r.gamma.to_string(),
        r.certificate_ok.to_string(),
    ]
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub monitor: Monitor,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub seed: u64,
    pub converged: bool,
    #[serde(rename = "T_eps")]
    pub t_eps: Option<usize>,
    pub iterations: usize,
    pub final_grad_g: f64,
    pub final_max_violation: f64,
    pub final_xy_norm: f64,
    pub certificate_ok: bool,
    pub wall_time_s: f64,
    pub trace_csv: String,
    pub trajectory_csv: String,
    pub check: Option<CheckOutcome>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
struct Summary<'a> {
    experiment: Experiment,
    solver: SolverKind,
    target_eps: f64,
    max_iter: usize,
    converged: bool,
    wall_time_s: f64,
    runs: &'a [RunSummary],
}

#[derive(Debug, Clone, Serialize)]
struct StudySummary<'a> {
    experiment: Experiment,
    solver: SolverKind,
    target_eps: f64,
    max_iter: usize,
    converged: bool,
    wall_time_s: f64,
    failures: usize,
    budgets: &'a [BudgetSummary],
}

struct SeedJob {
    seed: u64,
    problem: MinimaxProblem,
    init: IterateState,
    spec: SolverSpec,
}

fn prepare(cfg: &RunConfig) -> Result<Vec<SeedJob>> {
    cfg.seeds
        .iter()
        .map(|&seed| {
            let problem = build_problem(cfg, seed).with_context(|| format!("seed {seed}"))?;
            let init = initial_state(cfg, &problem)?;
            let spec = solver_spec(cfg, &problem).with_context(|| format!("seed {seed}"))?;
            Ok(SeedJob {
                seed,
                problem,
                init,
                spec,
            })
        })
        .collect()
}

fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| anyhow!("thread pool: {e}"))
}

/// Runs the configuration; every check on the configuration happens before
/// the output directory is touched.
pub fn execute(cfg: &RunConfig) -> std::result::Result<(), CliError> {
    if cfg.experiment == Experiment::FlowAttack {
        return execute_study(cfg);
    }
    let jobs = prepare(cfg).map_err(CliError::Config)?;
    let pool = thread_pool(cfg.jobs).map_err(CliError::Config)?;
    std::fs::create_dir_all(&cfg.out_dir)
        .with_context(|| format!("creating {}", cfg.out_dir.display()))
        .map_err(CliError::Config)?;
    let start = Instant::now();
    let runs: Vec<RunSummary> = pool.install(|| jobs.par_iter().map(|j| run_seed(cfg, j)).collect());
    let summary = Summary {
        experiment: cfg.experiment,
        solver: cfg.solver,
        target_eps: cfg.target_eps,
        max_iter: cfg.max_iter,
        converged: runs.iter().all(|r| r.converged),
        wall_time_s: start.elapsed().as_secs_f64(),
        runs: &runs,
    };
    write_json(&cfg.out_dir.join("summary.json"), &summary).map_err(CliError::Solver)?;
    if let Some(r) = runs.iter().find(|r| r.error.is_some()) {
        return Err(CliError::Solver(anyhow!(
            "seed {}: {}",
            r.seed,
            r.error.as_deref().unwrap_or_default()
        )));
    }
    let failed: Vec<String> = runs
        .iter()
        .filter_map(|r| r.check.as_ref().filter(|c| !c.passed).map(|c| format!("seed {}: {}", r.seed, c.detail)))
        .collect();
    if !failed.is_empty() {
        return Err(CliError::Check(failed.join("; ")));
    }
    Ok(())
}

fn run_seed(cfg: &RunConfig, job: &SeedJob) -> RunSummary {
    let trace_path = cfg.out_dir.join(format!("trace_seed{}.csv", job.seed));
    let traj_path = cfg.out_dir.join(format!("trajectory_seed{}.csv", job.seed));
    let t0 = Instant::now();
    let outcome = solve_with_trace(job, &trace_path).and_then(|res| {
        write_trajectory(&traj_path, &res, job.problem.dim_x(), job.problem.dim_y())?;
        Ok(res)
    });
    let wall = t0.elapsed().as_secs_f64();
    let mut summary = RunSummary {
        seed: job.seed,
        converged: false,
        t_eps: None,
        iterations: 0,
        final_grad_g: f64::NAN,
        final_max_violation: f64::NAN,
        final_xy_norm: f64::NAN,
        certificate_ok: false,
        wall_time_s: wall,
        trace_csv: file_name(&trace_path),
        trajectory_csv: file_name(&traj_path),
        check: None,
        error: None,
    };
    match outcome {
        Ok(res) => {
            let last = res.trace.rows.last();
            summary.converged = res.converged;
            summary.t_eps = res.first_hit;
            summary.iterations = res.iterations_used;
            summary.final_grad_g = last.map_or(f64::NAN, |r| r.grad_g);
            summary.final_max_violation = last.map_or(f64::NAN, |r| r.max_violation);
            summary.final_xy_norm = (res.final_state.x.norm_squared() + res.final_state.y.norm_squared()).sqrt();
            summary.certificate_ok = res.trace.certificate_ok();
            if let Some(m) = cfg.check {
                match evaluate_check(m, job, &res) {
                    Ok(c) => summary.check = Some(c),
                    Err(e) => summary.error = Some(format!("{e:#}")),
                }
            }
            log::info!(
                "seed {}: {} iterations, measure {:.3e}, converged {}",
                job.seed,
                res.iterations_used,
                summary.final_grad_g,
                res.converged
            );
        }
        Err(e) => summary.error = Some(format!("{e:#}")),
    }
    summary
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn solve_with_trace(job: &SeedJob, path: &Path) -> Result<SolveResult> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(TRACE_HEADER)?;
    w.flush()?;
    let mut io_err: Option<csv::Error> = None;
    let mut sink = |row: &TraceRow| {
        if io_err.is_none() {
            let r = w.write_record(trace_record(row)).and_then(|_| w.flush().map_err(csv::Error::from));
            if let Err(e) = r {
                io_err = Some(e);
            }
        }
    };
    let (p, init) = (&job.problem, &job.init);
    let res = match &job.spec {
        SolverSpec::Pdapg(params) => pdapg_solve(p, params, init, Some(&mut sink)),
        SolverSpec::PdpgL(params) => pdpg_l_solve(p, params, init, Some(&mut sink)),
        SolverSpec::Gda { stepsize, max_iter } => baseline_sim_gda(p, *stepsize, *max_iter, init, Some(&mut sink)),
    };
    if let Some(e) = io_err {
        return Err(anyhow!(e).context(format!("writing {}", path.display())));
    }
    Ok(res?)
}

fn write_trajectory(path: &Path, res: &SolveResult, n: usize, m: usize) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    let mut header = vec!["iter".to_string()];
    header.extend((0..n).map(|i| format!("x_{i}")));
    header.extend((0..m).map(|i| format!("y_{i}")));
    w.write_record(&header)?;
    if let Some(its) = &res.trace.iterates {
        for (row, (x, y)) in res.trace.rows.iter().zip(its) {
            let mut rec = vec![row.iter.to_string()];
            rec.extend(x.iter().map(|v| v.to_string()));
            rec.extend(y.iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok(())
}

fn evaluate_check(monitor: Monitor, job: &SeedJob, res: &SolveResult) -> Result<CheckOutcome> {
    let (passed, detail) = match monitor {
        Monitor::Certificate => {
            let bad = res.trace.rows.iter().filter(|r| !r.certificate_ok).count();
            (bad == 0, format!("{bad} of {} iterates violate the certificate", res.trace.rows.len()))
        }
        Monitor::Descent => match &job.spec {
            SolverSpec::Pdapg(params) => match params.regime {
                Regime::StronglyConcave { alpha, gamma } => {
                    let d1 = NcscConstants::for_problem(&job.problem, params.beta)?.d1(alpha, gamma);
                    descent_s(&res.trace.rows, d1)
                }
                Regime::Concave { .. } => return Err(anyhow!("no descent monitor for the concave regime")),
            },
            SolverSpec::PdpgL(params) => descent_v(job, params.tau, res.iterations_used)?,
            SolverSpec::Gda { .. } => return Err(anyhow!("no descent monitor for the baseline")),
        },
    };
    Ok(CheckOutcome {
        monitor,
        passed,
        detail,
    })
}

/// `d₁‖∇G_k‖² ≤ S_k − S_{k+1} + tol(1 + |S_k|)` for every recorded pair,
/// with `d₁` clamped at zero so the check never asks for less than monotonicity.
pub fn descent_s(rows: &[TraceRow], d1: f64) -> (bool, String) {
    let d1 = d1.max(0.0);
    let mut worst = f64::INFINITY;
    for w in rows.windows(2) {
        let (Some(s0), Some(s1)) = (w[0].potential, w[1].potential) else {
            return (false, format!("missing potential at iteration {}", w[0].iter));
        };
        if w[0].potential_trusted == Some(false) {
            return (false, format!("untrusted potential at iteration {}", w[0].iter));
        }
        let slack = s0 - s1 + DESCENT_TOL * (1.0 + s0.abs()) - d1 * w[0].grad_g * w[0].grad_g;
        if slack < 0.0 {
            return (false, format!("descent fails at iteration {} by {:.3e}", w[0].iter, -slack));
        }
        worst = worst.min(slack);
    }
    (true, format!("{} steps, minimum slack {worst:.3e}, d1 = {d1:.3e}", rows.len().saturating_sub(1)))
}

/// Replays the theory schedule and checks the potential inequality for `V_k`.
fn descent_v(job: &SeedJob, tau: f64, steps: usize) -> Result<(bool, String)> {
    let p = &job.problem;
    let consts = PdpgLConstants::for_problem(p, tau);
    let mut states = vec![job.init.projected(p)?];
    let mut scheds = Vec::new();
    for k in 1..=steps + 1 {
        let sc = pdpg_l_schedule(&PdpgLSchedule::Theory, k, &consts)?;
        let next = pdpg_l_step(p, states.last().expect("nonempty"), sc.q, sc.p, sc.alpha, sc.gamma)?;
        scheds.push(sc);
        states.push(next);
    }
    let mut v = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        let (st, sc) = (&states[k], &scheds[k]);
        v.push(potential_v(p, &st.x, &st.y, &st.lambda, sc.q, sc.p, &st.y)?.value);
    }
    let mut worst = f64::INFINITY;
    for k in 0..steps.saturating_sub(1) {
        let (cur, nxt, after) = (&states[k], &states[k + 1], &states[k + 2]);
        let (qk, qk1) = (scheds[k].q, scheds[k + 1].q);
        let theta = consts.theta(qk);
        let lhs = theta * (&nxt.x - &cur.x).norm_squared()
            + theta * (&nxt.lambda - &cur.lambda).norm_squared()
            + qk / 4.0 * (&nxt.y - &cur.y).norm_squared();
        let rhs = (v[k] + qk / 2.0 * cur.y.norm_squared()) - (v[k + 1] + qk1 / 2.0 * nxt.y.norm_squared())
            + (qk - qk1) * (0.25 * (&after.y - &nxt.y).norm_squared() + after.y.norm_squared())
            + 1e-6 * (1.0 + v[k].abs());
        if lhs > rhs {
            return Ok((false, format!("descent fails at iteration {} by {:.3e}", k + 1, lhs - rhs)));
        }
        worst = worst.min(rhs - lhs);
    }
    Ok((true, format!("{} steps, minimum slack {worst:.3e}", steps.saturating_sub(1))))
}

fn execute_study(cfg: &RunConfig) -> std::result::Result<(), CliError> {
    let study = study_config(cfg);
    thread_pool(cfg.jobs).map_err(CliError::Config)?;
    std::fs::create_dir_all(&cfg.out_dir)
        .with_context(|| format!("creating {}", cfg.out_dir.display()))
        .map_err(CliError::Config)?;
    let start = Instant::now();
    let (rows, budgets) = run_attack_study(&study, cfg.jobs).map_err(|e| CliError::Solver(e.into()))?;
    let failures = rows.iter().filter(|r| r.error.is_some()).count();
    write_study(&cfg.out_dir, &rows, &budgets).map_err(CliError::Solver)?;
    let summary = StudySummary {
        experiment: cfg.experiment,
        solver: cfg.solver,
        target_eps: cfg.target_eps,
        max_iter: cfg.max_iter,
        converged: rows.iter().all(|r| r.error.is_none() && r.final_eps <= cfg.target_eps),
        wall_time_s: start.elapsed().as_secs_f64(),
        failures,
        budgets: &budgets,
    };
    write_json(&cfg.out_dir.join("summary.json"), &summary).map_err(CliError::Solver)?;
    for b in &budgets {
        log::info!("budget {}: mean rho {:.4} (std {:.4}, {} runs)", b.budget, b.mean_rho, b.std_rho, b.runs);
    }
    if failures > 0 {
        let first = rows.iter().find(|r| r.error.is_some()).expect("counted");
        return Err(CliError::Solver(anyhow!(
            "{failures} study cells failed, first at budget {} seed {}: {}",
            first.budget,
            first.seed,
            first.error.as_deref().unwrap_or_default()
        )));
    }
    Ok(())
}

fn write_study(dir: &Path, rows: &[StudyRow], budgets: &[BudgetSummary]) -> Result<()> {
    let path: PathBuf = dir.join("study.csv");
    let mut w = csv::Writer::from_path(&path).with_context(|| format!("creating {}", path.display()))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    let path = dir.join("study_summary.csv");
    let mut w = csv::Writer::from_path(&path).with_context(|| format!("creating {}", path.display()))?;
    for b in budgets {
        w.serialize(b)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(iter: usize, s: f64, g: f64) -> TraceRow {
        TraceRow {
            iter,
            norm_x: 0.0,
            norm_y: 0.0,
            norm_lambda: 0.0,
            grad_g: g,
            grad_g_aug: g,
            max_violation: 0.0,
            potential: Some(s),
            potential_trusted: Some(true),
            alpha: 1.0,
            beta: 1.0,
            gamma: 1.0,
            rho: 0.0,
            q: 0.0,
            p: 0.0,
            certificate_ok: true,
        }
    }

    #[test]
    fn descent_monitor_examples() {
        let ok = [row(1, 3.0, 1.0), row(2, 2.0, 1.0), row(3, 1.0, 0.0)];
        assert!(descent_s(&ok, 0.5).0);
        assert!(!descent_s(&ok, 2.0).0);
        let up = [row(1, 1.0, 1.0), row(2, 2.0, 1.0)];
        assert!(!descent_s(&up, -5.0).0);
        let mut missing = ok.clone();
        missing[1].potential = None;
        assert!(!descent_s(&missing, 0.5).0);
    }

    #[test]
    fn trace_record_leaves_missing_potential_blank() {
        let mut r = row(1, 0.0, 0.5);
        r.potential = None;
        r.potential_trusted = None;
        let rec = trace_record(&r);
        assert_eq!(rec.len(), TRACE_HEADER.len());
        assert_eq!(rec[7], "");
        assert_eq!(rec[4], "0.5");
    }
}
