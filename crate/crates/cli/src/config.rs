//! Run configuration: strict TOML, named presets and flag overrides.
//!
//! Layers are merged key by key in the order
//! experiment defaults < preset < config file < command-line flags,
//! and the merged table is then parsed with unknown keys rejected.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::ValueEnum;
use minimax_core::pdapg::ParamMode;
use minimax_core::pdpg_l::PowerLaw;
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Experiment {
    Bilinear,
    FlowAttack,
    NcscQuad,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum SolverKind {
    PdapgNcsc,
    PdapgNcc,
    PdpgL,
    BaselineGda,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Monitor {
    Descent,
    Certificate,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Bilinear => "bilinear",
            Experiment::FlowAttack => "flow_attack",
            Experiment::NcscQuad => "ncsc_quad",
            Experiment::Custom => "custom",
        }
    }
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::PdapgNcsc => "pdapg_ncsc",
            SolverKind::PdapgNcc => "pdapg_ncc",
            SolverKind::PdpgL => "pdpg_l",
            SolverKind::BaselineGda => "baseline_gda",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub solver: SolverKind,
    pub seeds: Vec<u64>,
    /// Worker threads for per-seed runs, 0 = all cores.
    pub jobs: usize,
    pub max_iter: usize,
    pub target_eps: f64,
    pub out_dir: PathBuf,
    #[serde(default)]
    pub check: Option<Monitor>,
    #[serde(default)]
    pub record_potentials: bool,
    #[serde(default)]
    pub init: InitConfig,
    #[serde(default)]
    pub pdapg: PdapgConfig,
    #[serde(default)]
    pub pdpg_l: PdpgLConfig,
    #[serde(default)]
    pub gda: GdaConfig,
    #[serde(default)]
    pub flow: FlowConfig,
    #[serde(default)]
    pub quad: QuadConfig,
    #[serde(default)]
    pub custom: Option<CustomConfig>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitConfig {
    pub x: Option<Vec<f64>>,
    pub y: Option<Vec<f64>>,
    pub lambda: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PdapgConfig {
    pub mode: ParamMode,
    /// Defaults to `3L`.
    pub beta: Option<f64>,
    /// Defaults to the theory thresholds times `1 + margin`.
    pub alpha: Option<f64>,
    pub gamma: Option<f64>,
    pub margin: f64,
    pub tau: f64,
}

impl Default for PdapgConfig {
    fn default() -> Self {
        PdapgConfig {
            mode: ParamMode::Theory,
            beta: None,
            alpha: None,
            gamma: None,
            margin: 0.05,
            tau: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    Theory,
    CubeRoot,
    Manual,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PdpgLConfig {
    pub schedule: ScheduleKind,
    pub tau: f64,
    pub q: Option<PowerLaw>,
    pub p: Option<PowerLaw>,
    pub alpha: Option<PowerLaw>,
    pub gamma: Option<PowerLaw>,
}

impl Default for PdpgLConfig {
    fn default() -> Self {
        PdpgLConfig {
            schedule: ScheduleKind::Theory,
            tau: 2.0,
            q: None,
            p: None,
            alpha: None,
            gamma: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GdaConfig {
    pub stepsize: f64,
}

impl Default for GdaConfig {
    fn default() -> Self {
        GdaConfig { stepsize: 0.3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlowConfig {
    pub nodes: usize,
    pub edge_prob: f64,
    pub d_percent: f64,
    pub eta: f64,
    pub budgets: Vec<f64>,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        let d = minimax_core::experiments::AttackStudyConfig::default();
        FlowConfig {
            nodes: d.nodes,
            edge_prob: d.edge_prob,
            d_percent: d.d_percent,
            eta: d.eta,
            budgets: d.budgets,
            alpha: d.alpha,
            beta: d.beta,
            gamma: d.gamma,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadConfig {
    pub n: usize,
    pub m: usize,
    pub p: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        let d = minimax_core::experiments::QuadSpec::default();
        QuadConfig { n: d.n, m: d.m, p: d.p }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "snake_case")]
pub enum SetConfig {
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
}

/// `f = ½xᵀQx + xᵀCy − ½yᵀDy + d_xᵀx + d_yᵀy` with explicit constraints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomConfig {
    pub q: Vec<Vec<f64>>,
    pub c_xy: Vec<Vec<f64>>,
    pub d: Vec<Vec<f64>>,
    #[serde(default)]
    pub lin_x: Option<Vec<f64>>,
    #[serde(default)]
    pub lin_y: Option<Vec<f64>>,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub c: Vec<f64>,
    #[serde(default)]
    pub senses: Option<Vec<minimax_core::model::Sense>>,
    pub set_x: SetConfig,
    pub set_y: SetConfig,
    /// Weight of `‖x‖₁` added as `h`.
    #[serde(default)]
    pub l1_x: f64,
}

pub const PRESETS: &[(&str, &str)] = &[
    (
        "bilinear_fig1",
        r#"
experiment = "bilinear"
solver = "pdpg_l"
seeds = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10]
max_iter = 10000
target_eps = 1e-6
[pdpg_l]
schedule = "cube_root"
[init]
x = [1.0]
y = [1.0]
lambda = [0.0]
"#,
    ),
    (
        "bilinear_fig1_gda",
        r#"
experiment = "bilinear"
solver = "baseline_gda"
seeds = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10]
max_iter = 10000
[gda]
stepsize = 0.3
[init]
x = [1.0]
y = [1.0]
lambda = [0.0]
"#,
    ),
    (
        "ncsc_quad",
        r#"
experiment = "ncsc_quad"
solver = "pdapg_ncsc"
seeds = [7]
max_iter = 5000
target_eps = 1e-2
[pdapg]
mode = "theory"
margin = 0.05
"#,
    ),
    ("flow_attack_fig2_n15_p075_d10", "[flow]\nnodes = 15\nedge_prob = 0.75\nd_percent = 10.0\n"),
    ("flow_attack_fig2_n15_p1_d10", "[flow]\nnodes = 15\nedge_prob = 1.0\nd_percent = 10.0\n"),
    ("flow_attack_fig2_n15_p075_d20", "[flow]\nnodes = 15\nedge_prob = 0.75\nd_percent = 20.0\n"),
    ("flow_attack_fig2_n15_p1_d20", "[flow]\nnodes = 15\nedge_prob = 1.0\nd_percent = 20.0\n"),
    ("flow_attack_fig2_n20_p075_d30", "[flow]\nnodes = 20\nedge_prob = 0.75\nd_percent = 30.0\n"),
    ("flow_attack_fig2_n20_p1_d30", "[flow]\nnodes = 20\nedge_prob = 1.0\nd_percent = 30.0\n"),
    ("flow_attack_fig2_n20_p075_d40", "[flow]\nnodes = 20\nedge_prob = 0.75\nd_percent = 40.0\n"),
    ("flow_attack_fig2_n20_p1_d40", "[flow]\nnodes = 20\nedge_prob = 1.0\nd_percent = 40.0\n"),
];

const FLOW_PRESET_COMMON: &str = r#"
experiment = "flow_attack"
solver = "pdapg_ncsc"
seeds = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15]
max_iter = 1000
target_eps = 1e-6
"#;

pub fn preset_table(name: &str) -> Result<Table> {
    let (_, body) = PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| anyhow!("unknown preset '{name}' (known: {})", preset_names().join(", ")))?;
    let mut table: Table = body.parse().expect("preset parses");
    if name.starts_with("flow_attack") {
        let common: Table = FLOW_PRESET_COMMON.parse().expect("preset parses");
        table = merged(common, table);
    }
    Ok(table)
}

pub fn preset_names() -> Vec<&'static str> {
    PRESETS.iter().map(|(n, _)| *n).collect()
}

fn experiment_defaults(exp: Experiment) -> Table {
    let body = match exp {
        Experiment::Bilinear => {
            "solver = \"pdpg_l\"\nseeds = [1]\nmax_iter = 10000\ntarget_eps = 1e-6\n[init]\nx = [1.0]\ny = [1.0]\nlambda = [0.0]\n"
        }
        Experiment::NcscQuad => "solver = \"pdapg_ncsc\"\nseeds = [7]\nmax_iter = 5000\ntarget_eps = 1e-2\n",
        Experiment::FlowAttack => FLOW_PRESET_COMMON,
        Experiment::Custom => "solver = \"pdapg_ncsc\"\nseeds = [0]\nmax_iter = 1000\ntarget_eps = 1e-6\n",
    };
    let mut t: Table = body.parse().expect("defaults parse");
    t.insert("experiment".into(), Value::String(exp.name().into()));
    t.insert("jobs".into(), Value::Integer(1));
    t.insert("out_dir".into(), Value::String("out".into()));
    t
}

/// Recursive merge; values in `top` win, tables are merged key by key.
pub fn merged(mut base: Table, top: Table) -> Table {
    for (k, v) in top {
        match (base.remove(&k), v) {
            (Some(Value::Table(b)), Value::Table(t)) => {
                base.insert(k, Value::Table(merged(b, t)));
            }
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
    base
}

/// Overrides supplied on the command line.
#[derive(Debug, Clone, Default)]
pub struct FlagOverrides {
    pub experiment: Option<Experiment>,
    pub solver: Option<SolverKind>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub max_iter: Option<usize>,
    pub eps: Option<f64>,
    pub out_dir: Option<PathBuf>,
    pub check: Option<Monitor>,
    pub extra: Table,
}

impl FlagOverrides {
    fn table(&self) -> Result<Table> {
        let mut t = self.extra.clone();
        if let Some(e) = self.experiment {
            t.insert("experiment".into(), Value::String(e.name().into()));
        }
        if let Some(s) = self.solver {
            t.insert("solver".into(), Value::String(s.name().into()));
        }
        if let Some(s) = self.seed {
            t.insert("seeds".into(), Value::Array(vec![Value::Integer(to_i64(s)?)]));
        }
        if let Some(j) = self.jobs {
            t.insert("jobs".into(), Value::Integer(to_i64(j as u64)?));
        }
        if let Some(m) = self.max_iter {
            t.insert("max_iter".into(), Value::Integer(to_i64(m as u64)?));
        }
        if let Some(e) = self.eps {
            t.insert("target_eps".into(), Value::Float(e));
        }
        if let Some(d) = &self.out_dir {
            let s = d.to_str().ok_or_else(|| anyhow!("output directory is not valid UTF-8"))?;
            t.insert("out_dir".into(), Value::String(s.into()));
        }
        if let Some(c) = self.check {
            let name = c.to_possible_value().expect("named").get_name().to_string();
            t.insert("check".into(), Value::String(name));
        }
        Ok(t)
    }
}

fn to_i64(v: u64) -> Result<i64> {
    i64::try_from(v).map_err(|_| anyhow!("value {v} is too large"))
}

pub fn read_config_file(path: &Path) -> Result<Table> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.parse::<Table>().with_context(|| format!("parsing {}", path.display()))
}

/// Merges every layer and parses the result strictly.
pub fn resolve(preset: Option<&str>, file: Option<&Path>, flags: &FlagOverrides) -> Result<RunConfig> {
    let mut layered = Table::new();
    let mut file_table = match file {
        Some(p) => read_config_file(p)?,
        None => Table::new(),
    };
    let file_preset = match file_table.remove("preset") {
        Some(Value::String(s)) => Some(s),
        Some(other) => bail!("'preset' must be a string, got {other}"),
        None => None,
    };
    if let Some(name) = preset.map(str::to_string).or(file_preset) {
        layered = merged(layered, preset_table(&name)?);
    }
    layered = merged(layered, file_table);
    layered = merged(layered, flags.table()?);
    let exp = match layered.get("experiment") {
        Some(v) => Experiment::deserialize(v.clone()).context("invalid 'experiment'")?,
        None => Experiment::Bilinear,
    };
    let full = merged(experiment_defaults(exp), layered);
    let cfg = RunConfig::deserialize(Value::Table(full)).context("invalid configuration")?;
    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            bail!("at least one seed is required");
        }
        let mut seen = std::collections::BTreeSet::new();
        if let Some(s) = self.seeds.iter().find(|s| !seen.insert(**s)) {
            bail!("seed {s} is listed twice");
        }
        if self.max_iter == 0 {
            bail!("max_iter must be at least 1");
        }
        if !(self.target_eps > 0.0) {
            bail!("target_eps must be positive (inf disables stopping), got {}", self.target_eps);
        }
        if self.out_dir.exists() && !self.out_dir.is_dir() {
            bail!("{} exists and is not a directory", self.out_dir.display());
        }
        if self.experiment == Experiment::FlowAttack && self.solver != SolverKind::PdapgNcsc {
            bail!("flow_attack runs PDAPG with constant stepsizes; use solver pdapg_ncsc");
        }
        if self.experiment == Experiment::FlowAttack && self.check.is_some() {
            bail!("--check is not available for the flow_attack study");
        }
        if self.experiment == Experiment::Custom && self.custom.is_none() {
            bail!("experiment 'custom' needs a [custom] table");
        }
        if self.check == Some(Monitor::Descent) {
            match self.solver {
                SolverKind::PdapgNcsc => {}
                SolverKind::PdpgL if self.pdpg_l.schedule == ScheduleKind::Theory => {}
                SolverKind::PdpgL => bail!("the descent monitor needs the theory schedule for pdpg_l"),
                s => bail!("the descent monitor is not available for {}", s.name()),
            }
        }
        if self.pdpg_l.schedule == ScheduleKind::Manual {
            let l = &self.pdpg_l;
            if l.q.is_none() || l.p.is_none() || l.alpha.is_none() || l.gamma.is_none() {
                bail!("manual pdpg_l schedule needs q, p, alpha and gamma");
            }
        }
        if !(self.gda.stepsize > 0.0) {
            bail!("gda stepsize must be positive");
        }
        let f = &self.flow;
        if f.budgets.is_empty() {
            bail!("flow budgets must not be empty");
        }
        if !(f.eta >= 0.0) {
            bail!("flow eta must be nonnegative");
        }
        if f.budgets.iter().any(|b| !(*b >= 0.0)) {
            bail!("flow budgets must be nonnegative");
        }
        Ok(())
    }
}
