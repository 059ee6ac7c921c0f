//! Budget sweep for the flow attack: relative cost increase
//! `ρ = (q_att − q_cl)/q_cl` per budget, averaged over graph seeds.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::flow::{attacked_min_cost, gen_flow_attack_with_eta, min_cost_flow_lp, DEFAULT_ETA};
use crate::linalg::Vector;
use crate::model::IterateState;
use crate::pdapg::{pdapg_solve, ParamMode, PdapgParams, Regime};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AttackStudyConfig {
    pub nodes: usize,
    pub edge_prob: f64,
    pub d_percent: f64,
    pub eta: f64,
    pub budgets: Vec<f64>,
    pub seeds: Vec<u64>,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub max_iter: usize,
    pub target_eps: f64,
}

impl Default for AttackStudyConfig {
    fn default() -> Self {
        AttackStudyConfig {
            nodes: 15,
            edge_prob: 0.75,
            d_percent: 10.0,
            eta: DEFAULT_ETA,
            budgets: vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0],
            seeds: (1..=15).collect(),
            alpha: 1.0 / 0.8,
            beta: 4.0,
            gamma: 0.5,
            max_iter: 1000,
            target_eps: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub budget: f64,
    pub seed: u64,
    pub q_cl: f64,
    /// Linear min-cost value `min Σ q x` for reference.
    pub q_lin: f64,
    pub q_att: f64,
    pub rho: f64,
    pub iters: usize,
    pub final_eps: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetSummary {
    pub budget: f64,
    pub mean_rho: f64,
    pub std_rho: f64,
    pub runs: usize,
    pub failures: usize,
}

fn failed(budget: f64, seed: u64, e: Error) -> StudyRow {
    StudyRow {
        budget,
        seed,
        q_cl: f64::NAN,
        q_lin: f64::NAN,
        q_att: f64::NAN,
        rho: f64::NAN,
        iters: 0,
        final_eps: f64::NAN,
        error: Some(e.to_string()),
    }
}

/// Solves one `(budget, seed)` cell; the graph depends only on the seed.
pub fn run_attack_seed(cfg: &AttackStudyConfig, budget: f64, seed: u64) -> StudyRow {
    attack_seed(cfg, budget, seed).unwrap_or_else(|e| failed(budget, seed, e))
}

fn attack_seed(cfg: &AttackStudyConfig, budget: f64, seed: u64) -> Result<StudyRow> {
    let fa = gen_flow_attack_with_eta(cfg.nodes, cfg.edge_prob, cfg.d_percent, budget, cfg.eta, seed)?;
    let inst = &fa.instance;
    let e = inst.graph.num_edges();
    let (q_cl, _) = attacked_min_cost(&inst.graph, inst.demand, &Vector::zeros(e))?;
    let (q_lin, _) = min_cost_flow_lp(&inst.graph, &inst.graph.capacity, inst.demand)?;
    let params = PdapgParams {
        beta: cfg.beta,
        regime: Regime::StronglyConcave { alpha: cfg.alpha, gamma: cfg.gamma },
        mode: ParamMode::Manual,
        max_iter: cfg.max_iter,
        target_eps: cfg.target_eps,
        record_potentials: false,
        record_iterates: false,
    };
    let init = IterateState::zeros(&fa.problem);
    let res = pdapg_solve(&fa.problem, &params, &init, None)?;
    let attack = if budget == 0.0 { Vector::zeros(e) } else { res.final_state.x.clone() };
    let (q_att, _) = attacked_min_cost(&inst.graph, inst.demand, &attack)?;
    let final_eps = res.trace.rows.last().map_or(f64::NAN, |r| r.grad_g);
    Ok(StudyRow {
        budget,
        seed,
        q_cl,
        q_lin,
        q_att,
        rho: (q_att - q_cl) / q_cl,
        iters: res.iterations_used,
        final_eps,
        error: None,
    })
}

/// Runs every `(budget, seed)` pair on `jobs` threads (0 = all cores). Rows
/// come back ordered by budget then seed regardless of scheduling.
pub fn run_attack_study(cfg: &AttackStudyConfig, jobs: usize) -> Result<(Vec<StudyRow>, Vec<BudgetSummary>)> {
    if cfg.budgets.is_empty() || cfg.seeds.is_empty() {
        return Err(Error::Configuration("study needs at least one budget and one seed".into()));
    }
    let cells: Vec<(f64, u64)> = cfg
        .budgets
        .iter()
        .flat_map(|&b| cfg.seeds.iter().map(move |&s| (b, s)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Configuration(e.to_string()))?;
    let rows: Vec<StudyRow> = pool.install(|| cells.par_iter().map(|&(b, s)| run_attack_seed(cfg, b, s)).collect());
    let summaries = cfg.budgets.iter().map(|&b| summarize(b, &rows)).collect();
    Ok((rows, summaries))
}

fn summarize(budget: f64, rows: &[StudyRow]) -> BudgetSummary {
    let cell: Vec<&StudyRow> = rows.iter().filter(|r| r.budget == budget).collect();
    let ok: Vec<f64> = cell.iter().filter(|r| r.error.is_none()).map(|r| r.rho).collect();
    let n = ok.len() as f64;
    let mean = if ok.is_empty() { f64::NAN } else { ok.iter().sum::<f64>() / n };
    let var = if ok.len() > 1 { ok.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    BudgetSummary {
        budget,
        mean_rho: mean,
        std_rho: var.sqrt(),
        runs: ok.len(),
        failures: cell.len() - ok.len(),
    }
}
