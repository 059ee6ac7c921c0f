//! Instance generators, baselines and studies.

pub mod bilinear;
pub mod flow;
pub mod gda;
pub mod quad;
pub mod study;

pub use bilinear::{gen_bilinear, BilinearInstance};
pub use flow::{
    attacked_min_cost, gen_flow_attack, min_cost_flow_lp, FlowAttack, FlowAttackInstance, FlowGraph,
};
pub use gda::baseline_sim_gda;
pub use quad::{ncsc_quad, QuadSpec};
pub use study::{run_attack_seed, run_attack_study, AttackStudyConfig, BudgetSummary, StudyRow};
