//! JSON configuration for the command-line driver.
//!
//! The schema is generative: the grid is described by kind and size rather
//! than by its nodes, and the source and initial profile by label, so a
//! config file stays a few lines. Unknown fields are rejected everywhere to
//! catch typos; see the crate README for the full schema.

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::harness::studies::GridFamily;
use crate::model::{
    initial_by_label, nonlinearity_by_label, ProblemSpec, DEFAULT_QUENCH_THRESHOLD,
};
use crate::splitting::RunPolicy;

/// Top-level config: the problem plus optional per-mode sections. Modes read
/// their own section and ignore the others, so one file can drive several
/// subcommands.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    /// Nonlinear-solve tolerance for the splitting scheme.
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub run: RunSection,
    pub converge_time: Option<ConvergeTimeSection>,
    pub converge_space: Option<ConvergeSpaceSection>,
    pub critical_a: Option<CriticalASection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    /// Half-width of the domain `[-a, a]`.
    pub a: f64,
    /// Interior node count.
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default = "default_nonlinearity")]
    pub nonlinearity: String,
    #[serde(default = "default_initial")]
    pub initial: String,
    pub delta: f64,
    #[serde(default = "default_threshold")]
    pub quench_threshold: f64,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    /// "uniform" or "graded".
    #[serde(default = "default_grid_kind")]
    pub kind: String,
    /// Center-clustering exponent; required for (and only for) graded grids.
    pub grading: Option<f64>,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            kind: default_grid_kind(),
            grading: None,
        }
    }
}

/// Controls for the `run` subcommand.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub stop_at_time: Option<f64>,
    pub budget_time: Option<f64>,
    #[serde(default = "default_true")]
    pub keep_states: bool,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            stop_at_time: None,
            budget_time: None,
            keep_states: true,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergeTimeSection {
    /// Comparison time; must stay below the reference quench time.
    pub t_star: f64,
    /// Number of step-control halvings to measure.
    pub levels: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergeSpaceSection {
    pub t_star: f64,
    /// Number of grid doublings to measure, starting from `problem.N`.
    pub levels: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriticalASection {
    /// Half-widths `[a_lo, a_hi]` with steady behavior at the low end and
    /// quenching at the high end.
    pub bracket: [f64; 2],
    /// Simulated-time budget per classification run.
    #[serde(default = "default_budget_time")]
    pub budget_time: f64,
    /// Bisection stops when the bracket is this narrow.
    #[serde(default = "default_tol_a")]
    pub tol_a: f64,
}

fn default_tol() -> f64 {
    1e-10
}

fn default_nonlinearity() -> String {
    "kawarada".to_string()
}

fn default_initial() -> String {
    "zero".to_string()
}

fn default_threshold() -> f64 {
    DEFAULT_QUENCH_THRESHOLD
}

fn default_max_steps() -> usize {
    200_000
}

fn default_grid_kind() -> String {
    "uniform".to_string()
}

fn default_true() -> bool {
    true
}

fn default_budget_time() -> f64 {
    1000.0
}

fn default_tol_a() -> f64 {
    0.005
}

impl GridSection {
    /// The refinement family this section describes.
    pub fn family(&self) -> Result<GridFamily> {
        match (self.kind.as_str(), self.grading) {
            ("uniform", None) => Ok(GridFamily::Uniform),
            ("uniform", Some(g)) => Err(Error::Config(format!(
                "uniform grids take no grading exponent (got {g})"
            ))),
            ("graded", Some(g)) => Ok(GridFamily::Graded { grading: g }),
            ("graded", None) => Err(Error::Config(
                "graded grids need a grading exponent".to_string(),
            )),
            (other, _) => Err(Error::Config(format!(
                "unknown grid kind '{other}' (expected uniform or graded)"
            ))),
        }
    }
}

impl ProblemConfig {
    pub fn build_grid(&self) -> Result<Grid> {
        self.grid.family()?.build(self.a, self.n)
    }

    pub fn build_spec(&self) -> Result<ProblemSpec> {
        let grid = self.build_grid()?;
        let f = nonlinearity_by_label(&self.nonlinearity)?;
        let u0 = initial_by_label(&self.initial, self.a)?;
        ProblemSpec::new(
            grid,
            f,
            u0,
            self.delta,
            self.quench_threshold,
            self.max_steps,
        )
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<RunConfig> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn run_policy(&self) -> RunPolicy {
        RunPolicy {
            stop_at_time: self.run.stop_at_time,
            budget_time: self.run.budget_time,
            keep_states: self.run.keep_states,
            ..RunPolicy::to_quench()
        }
    }
}
