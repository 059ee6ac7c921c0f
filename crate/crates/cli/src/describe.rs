//! Human-readable instance report.

use std::fmt::Write;

use anyhow::Result;
use minimax_core::experiments::flow::gen_flow_attack_with_eta;
use minimax_core::linalg::operator_norm;
use minimax_core::model::{MinimaxProblem, Sense};
use minimax_core::pdapg::{pdapg_schedule, NcscConstants, Regime};
use minimax_core::pdpg_l::{linear_y_coefficient, pdpg_l_schedule, PdpgLConstants, PdpgLSchedule};
use minimax_core::Vector;

use crate::config::{Experiment, RunConfig, ScheduleKind};
use crate::instance::{build_problem, default_beta};

const PREVIEW_K: [usize; 3] = [1, 10, 100];

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

/// Describes the first seed of `cfg`. For `flow_attack`, `budget` picks the
/// adversary budget (the largest configured one by default).
pub fn describe(cfg: &RunConfig, budget: Option<f64>) -> Result<String> {
    let seed = cfg.seeds[0];
    let mut out = String::new();
    writeln!(out, "instance: {} (seed {seed})", cfg.experiment.name())?;
    let mut cfg = cfg.clone();
    let prob = if cfg.experiment == Experiment::FlowAttack {
        let f = cfg.flow.clone();
        let pd = &mut cfg.pdapg;
        pd.beta = pd.beta.or(Some(f.beta));
        pd.alpha = pd.alpha.or(Some(f.alpha));
        pd.gamma = pd.gamma.or(Some(f.gamma));
        let b = budget.unwrap_or_else(|| f.budgets.iter().cloned().fold(0.0, f64::max));
        let fa = gen_flow_attack_with_eta(f.nodes, f.edge_prob, f.d_percent, b, f.eta, seed)?;
        let g = &fa.instance.graph;
        let (rows, _) = g.flow_constraints(fa.instance.demand);
        writeln!(out, "graph: {} nodes, |E| = {}, source {}, sink {}", g.nodes, g.num_edges(), g.source, g.sink)?;
        writeln!(out, "demand: {} (graph attempts {})", fa.instance.demand, fa.instance.attempts)?;
        writeln!(out, "budget: {b}, eta: {}", fa.instance.eta)?;
        writeln!(
            out,
            "flow polytope: dimension {}, box [0, capacity], {} equality rows",
            g.num_edges(),
            rows.nrows()
        )?;
        writeln!(out, "adversary polytope: dimension {}, box [0, capacity], 1 equality row", g.num_edges())?;
        fa.problem
    } else {
        build_problem(&cfg, seed)?
    };
    write_problem(&mut out, &cfg, &prob)?;
    Ok(out)
}

fn write_problem(out: &mut String, cfg: &RunConfig, prob: &MinimaxProblem) -> Result<()> {
    let c = &prob.constraints;
    let senses: Vec<&str> = c
        .senses
        .iter()
        .map(|s| match s {
            Sense::Le => "LE",
            Sense::Eq => "EQ",
        })
        .collect();
    let sense_text = if senses.len() <= 8 {
        senses.join(" ")
    } else {
        let le = senses.iter().filter(|s| **s == "LE").count();
        format!("{le} LE, {} EQ", senses.len() - le)
    };
    let l = prob.f.lipschitz();
    let mu = prob.f.strong_concavity();
    let (na, nb) = (operator_norm(&c.a), operator_norm(&c.b));
    let linear = linear_y_coefficient(prob, &Vector::zeros(prob.dim_x())).is_ok();
    writeln!(out, "dimensions: n = {}, m = {}, p = {}", prob.dim_x(), prob.dim_y(), prob.dim_lambda())?;
    writeln!(out, "sense: {sense_text}")?;
    writeln!(out, "L = {l:.6e}, mu = {mu:.6e}, ||A|| = {na:.6e}, ||B|| = {nb:.6e}")?;
    writeln!(out, "linear in y: {}", yes_no(linear))?;

    let pd = &cfg.pdapg;
    let beta = pd.beta.unwrap_or_else(|| default_beta(prob));
    writeln!(out, "theory admissibility (beta = {beta:.6e}):")?;
    writeln!(out, "  beta > 5L/2 = {:.6e}: {}", 2.5 * l, yes_no(beta > 2.5 * l))?;
    let ncsc = if mu > 0.0 { NcscConstants::for_problem(prob, beta).ok() } else { None };
    match ncsc {
        Some(k) => {
            let (ta, tg) = k.theory_stepsizes(pd.margin);
            let alpha = pd.alpha.unwrap_or(ta);
            let gamma = pd.gamma.unwrap_or(tg);
            writeln!(
                out,
                "  alpha = {alpha:.6e} > {:.6e}: {}",
                k.alpha_threshold,
                yes_no(alpha > k.alpha_threshold)
            )?;
            writeln!(
                out,
                "  1/gamma = {:.6e} > {:.6e}: {}",
                1.0 / gamma,
                k.inv_gamma_threshold,
                yes_no(1.0 / gamma > k.inv_gamma_threshold)
            )?;
            writeln!(out, "  d1 = {:.6e}", k.d1(alpha, gamma))?;
            writeln!(out, "schedule preview pdapg_ncsc:")?;
            for kk in PREVIEW_K {
                let s = pdapg_schedule(Regime::StronglyConcave { alpha, gamma }, kk, l, beta, nb)?;
                writeln!(out, "  k = {kk}: alpha {:.6e} beta {:.6e} gamma {:.6e}", s.alpha, s.beta, s.gamma)?;
            }
        }
        None => writeln!(out, "  mu = 0: strongly concave conditions do not apply")?,
    }
    writeln!(out, "schedule preview pdapg_ncc (tau = {}):", pd.tau)?;
    for kk in PREVIEW_K {
        match pdapg_schedule(Regime::Concave { tau: pd.tau }, kk, l, beta, nb) {
            Ok(s) => writeln!(
                out,
                "  k = {kk}: alpha {:.6e} beta {:.6e} gamma {:.6e} rho {:.6e}",
                s.alpha, s.beta, s.gamma, s.rho
            )?,
            Err(e) => writeln!(out, "  k = {kk}: {e}")?,
        }
    }
    if linear {
        let lc = &cfg.pdpg_l;
        let schedule = match lc.schedule {
            ScheduleKind::CubeRoot => PdpgLSchedule::cube_root(),
            _ => PdpgLSchedule::Theory,
        };
        let label = if lc.schedule == ScheduleKind::CubeRoot { "cube_root" } else { "theory" };
        let consts = PdpgLConstants::for_problem(prob, lc.tau);
        writeln!(out, "schedule preview pdpg_l ({label}, tau = {}):", lc.tau)?;
        for kk in PREVIEW_K {
            match pdpg_l_schedule(&schedule, kk, &consts) {
                Ok(s) => writeln!(
                    out,
                    "  k = {kk}: q {:.6e} p {:.6e} alpha {:.6e} gamma {:.6e}",
                    s.q, s.p, s.alpha, s.gamma
                )?,
                Err(e) => writeln!(out, "  k = {kk}: {e}")?,
            }
        }
    }
    Ok(())
}
