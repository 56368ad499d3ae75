//! Problem data: singular source terms, initial conditions, admissibility.
//!
//! A source term `f` drives quenching when it is positive, increasing, and
//! convex on `[0, 1)` and blows up as `u -> 1^-`. The canonical example is
//! [`kawarada`], `f(u) = 1/(1-u)`. Alongside point evaluation a source
//! carries the extra maps the solver and its a-priori bounds need: the
//! derivative, a two-point Lipschitz envelope, and the layer integral
//! `s -> integral_0^s dz / f(1-z)` that prices the time spent near the
//! singular level.
//!
//! These hypotheses cannot be proven for opaque closures, so
//! [`check_admissible`] verifies them on fixed deterministic samples and
//! returns a description of every failure it finds.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::linalg::TridiagonalOperator;

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type PairFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Default numerical-quench cutoff: a run is declared quenched when the
/// solution maximum reaches `1 - 1e-3`.
pub const DEFAULT_QUENCH_THRESHOLD: f64 = 1.0 - 1e-3;

/// Source term together with the derived maps used by step control,
/// admissibility checks, and the quench-time budget.
#[derive(Clone)]
pub struct Nonlinearity {
    eval: ScalarFn,
    deriv: ScalarFn,
    lipschitz: PairFn,
    quench_integral: ScalarFn,
    label: String,
}

impl fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Nonlinearity")
            .field("label", &self.label)
            .finish()
    }
}

impl Nonlinearity {
    pub fn new(
        label: impl Into<String>,
        eval: impl Fn(f64) -> f64 + Send + Sync + 'static,
        deriv: impl Fn(f64) -> f64 + Send + Sync + 'static,
        lipschitz: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        quench_integral: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Nonlinearity {
            eval: Arc::new(eval),
            deriv: Arc::new(deriv),
            lipschitz: Arc::new(lipschitz),
            quench_integral: Arc::new(quench_integral),
            label: label.into(),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.eval)(x)
    }

    pub fn deriv(&self, x: f64) -> f64 {
        (self.deriv)(x)
    }

    /// Envelope `L(x, y)` with `|f(x) - f(y)| <= L(x, y) |x - y|`.
    pub fn lipschitz(&self, x: f64, y: f64) -> f64 {
        (self.lipschitz)(x, y)
    }

    /// `integral_0^s dz / f(1 - z)`; at `s = 1` this is the total layer
    /// budget entering the quench-time bound.
    pub fn quench_integral(&self, s: f64) -> f64 {
        (self.quench_integral)(s)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Componentwise application `F(u)`.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        u.iter().map(|&x| self.eval(x)).collect()
    }

    pub fn max_deriv(&self, u: &[f64]) -> f64 {
        u.iter()
            .map(|&x| self.deriv(x))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `f(u) = 1 / (1 - u)`: the canonical quenching source. The derivative is
/// `1/(1-u)^2`, the sharpest Lipschitz constant on `[min(x,y), max(x,y)]` is
/// `1/(1 - max(x,y))^2`, and since `f(1-z) = 1/z` the layer integral is
/// `s^2 / 2`.
pub fn kawarada() -> Nonlinearity {
    Nonlinearity::new(
        "kawarada",
        |x| 1.0 / (1.0 - x),
        |x| 1.0 / ((1.0 - x) * (1.0 - x)),
        |x, y| {
            let m = x.max(y);
            1.0 / ((1.0 - m) * (1.0 - m))
        },
        |s| 0.5 * s * s,
    )
}

/// Look a source up by its serialized label.
pub fn nonlinearity_by_label(label: &str) -> Result<Nonlinearity> {
    match label {
        "kawarada" => Ok(kawarada()),
        other => Err(Error::Config(format!(
            "unknown nonlinearity label '{other}'"
        ))),
    }
}

/// Initial profile with the second derivative needed by compatibility checks.
#[derive(Clone)]
pub struct InitialCondition {
    eval: ScalarFn,
    second_deriv: ScalarFn,
    label: String,
}

impl fmt::Debug for InitialCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("InitialCondition")
            .field("label", &self.label)
            .finish()
    }
}

impl InitialCondition {
    pub fn new(
        label: impl Into<String>,
        eval: impl Fn(f64) -> f64 + Send + Sync + 'static,
        second_deriv: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        InitialCondition {
            eval: Arc::new(eval),
            second_deriv: Arc::new(second_deriv),
            label: label.into(),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.eval)(x)
    }

    pub fn second_deriv(&self, x: f64) -> f64 {
        (self.second_deriv)(x)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Values at the interior nodes of `grid`.
    pub fn sample(&self, grid: &Grid) -> Vec<f64> {
        grid.interior().iter().map(|&x| self.eval(x)).collect()
    }
}

/// The identically-zero start on `[-a, a]`.
pub fn zero_initial(a: f64) -> Result<InitialCondition> {
    if !(a.is_finite() && a > 0.0) {
        return Err(Error::invalid(format!(
            "half-width a must be positive and finite, got {a}"
        )));
    }
    Ok(InitialCondition::new("zero", |_| 0.0, |_| 0.0))
}

pub fn initial_by_label(label: &str, a: f64) -> Result<InitialCondition> {
    match label {
        "zero" => zero_initial(a),
        other => Err(Error::Config(format!(
            "unknown initial-condition label '{other}'"
        ))),
    }
}

/// Number of single-variable samples used by the admissibility checks.
const SAMPLES_1D: usize = 1000;
/// Pair samples are a `PAIR_GRID x PAIR_GRID` enumeration (10^4 pairs).
const PAIR_GRID: usize = 100;
/// The sampled sub-interval of `[0, 1)` stops this far short of 1.
const EDGE_GAP: f64 = 1e-6;

/// Verify the solvability hypotheses on fixed deterministic samples: source
/// positivity, monotonicity, the Lipschitz envelope, midpoint convexity, and
/// blow-up toward `u = 1`; boundary and range conditions on the initial
/// profile; and strict positivity of `A u0 + F(u0)` on the grid, which is
/// what makes the discrete solution increase from the first step on.
///
/// Returns one message per violated hypothesis (empty means admissible).
pub fn check_admissible(f: &Nonlinearity, u0: &InitialCondition, grid: &Grid) -> Vec<String> {
    let mut bad = Vec::new();

    let f0 = f.eval(0.0);
    if !(f0 > 0.0) {
        bad.push(format!("f(0) = {f0} but the source must be positive at 0"));
    }

    let span = 1.0 - EDGE_GAP;
    let sample = |i: usize, count: usize| span * i as f64 / (count - 1) as f64;

    let mut non_positive = 0usize;
    let mut non_increasing = 0usize;
    let mut first_bad_x = f64::NAN;
    for i in 0..SAMPLES_1D {
        let x = sample(i, SAMPLES_1D);
        let fx = f.eval(x);
        let dfx = f.deriv(x);
        if !(fx.is_finite() && fx > 0.0) {
            if non_positive == 0 {
                first_bad_x = x;
            }
            non_positive += 1;
        }
        if !(dfx.is_finite() && dfx > 0.0) {
            non_increasing += 1;
        }
    }
    if non_positive > 0 {
        bad.push(format!(
            "source not positive at {non_positive} of {SAMPLES_1D} samples on [0, {span}] (first at x = {first_bad_x})"
        ));
    }
    if non_increasing > 0 {
        bad.push(format!(
            "source derivative not positive at {non_increasing} of {SAMPLES_1D} samples on [0, {span}]"
        ));
    }

    let mut lipschitz_bad = 0usize;
    let mut convexity_bad = 0usize;
    for i in 0..PAIR_GRID {
        let x = sample(i, PAIR_GRID);
        let fx = f.eval(x);
        for j in 0..PAIR_GRID {
            let y = sample(j, PAIR_GRID);
            let fy = f.eval(y);
            let envelope = f.lipschitz(x, y);
            if !(envelope.is_finite() && envelope >= 0.0)
                || (fx - fy).abs() > envelope * (x - y).abs()
            {
                lipschitz_bad += 1;
            }
            if f.eval(0.5 * (x + y)) > 0.5 * (fx + fy) {
                convexity_bad += 1;
            }
        }
    }
    if lipschitz_bad > 0 {
        bad.push(format!(
            "Lipschitz envelope violated on {lipschitz_bad} of {} sampled pairs",
            PAIR_GRID * PAIR_GRID
        ));
    }
    if convexity_bad > 0 {
        bad.push(format!(
            "midpoint convexity violated on {convexity_bad} of {} sampled pairs",
            PAIR_GRID * PAIR_GRID
        ));
    }

    // Blow-up ladder toward the singular level.
    let ladder: Vec<f64> = (1..=6).map(|k| f.eval(1.0 - 10f64.powi(-k))).collect();
    let grows = ladder.windows(2).all(|w| w[1] > w[0]) && ladder.iter().all(|v| v.is_finite());
    if !grows {
        bad.push(format!(
            "source does not grow monotonically toward u = 1 (ladder f(1 - 10^-k) = {ladder:?})"
        ));
    }

    // Initial profile: pinned at the boundary, inside [0, 1) across the bar.
    let a = grid.a;
    for (side, xb) in [("left", -a), ("right", a)] {
        let v = u0.eval(xb);
        if v.abs() > 1e-12 {
            bad.push(format!(
                "initial profile at the {side} boundary x = {xb} is {v}, not 0"
            ));
        }
    }
    let mut range_bad = 0usize;
    for i in 0..SAMPLES_1D {
        let x = -a + 2.0 * a * i as f64 / (SAMPLES_1D - 1) as f64;
        let v = u0.eval(x);
        if !(v.is_finite() && (0.0..1.0).contains(&v)) {
            range_bad += 1;
        }
        if !u0.second_deriv(x).is_finite() {
            range_bad += 1;
        }
    }
    if range_bad > 0 {
        bad.push(format!(
            "initial profile leaves [0, 1) or has a non-finite second derivative at {range_bad} of {SAMPLES_1D} samples"
        ));
    }

    // Discrete compatibility: the very first update moves up everywhere.
    let u = u0.sample(grid);
    if u.iter().any(|v| !(v.is_finite() && *v < 1.0)) {
        bad.push("initial profile reaches the singular level on the grid".to_string());
    } else {
        let a_op = TridiagonalOperator::laplacian(grid);
        let au = a_op.apply(&u);
        let fu = f.apply(&u);
        for (i, (x, y)) in au.iter().zip(&fu).enumerate() {
            if !(x + y > 0.0) {
                bad.push(format!(
                    "A u0 + f(u0) = {} at interior node {i}: the profile would not move up",
                    x + y
                ));
            }
        }
    }

    bad
}

/// A fully assembled problem: geometry, source, start, and the run controls
/// every driver shares.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "ProblemSpecJson", into = "ProblemSpecJson")]
pub struct ProblemSpec {
    pub grid: Grid,
    pub f: Nonlinearity,
    pub u0: InitialCondition,
    /// Step-control aggressiveness; the first step is at most `delta` and
    /// steps stay proportional to it.
    pub delta: f64,
    /// Numerical-quench cutoff in `(0.9, 1)`.
    pub quench_threshold: f64,
    /// Hard cap on accepted steps per run.
    pub max_steps: usize,
}

#[derive(Serialize, Deserialize)]
struct ProblemSpecJson {
    grid: Grid,
    nonlinearity: String,
    initial: String,
    delta: f64,
    quench_threshold: f64,
    max_steps: usize,
}

impl From<ProblemSpec> for ProblemSpecJson {
    fn from(p: ProblemSpec) -> Self {
        ProblemSpecJson {
            grid: p.grid,
            nonlinearity: p.f.label().to_string(),
            initial: p.u0.label().to_string(),
            delta: p.delta,
            quench_threshold: p.quench_threshold,
            max_steps: p.max_steps,
        }
    }
}

impl TryFrom<ProblemSpecJson> for ProblemSpec {
    type Error = Error;

    fn try_from(j: ProblemSpecJson) -> Result<Self> {
        let f = nonlinearity_by_label(&j.nonlinearity)?;
        let u0 = initial_by_label(&j.initial, j.grid.a)?;
        ProblemSpec::new(j.grid, f, u0, j.delta, j.quench_threshold, j.max_steps)
    }
}

impl ProblemSpec {
    pub fn new(
        grid: Grid,
        f: Nonlinearity,
        u0: InitialCondition,
        delta: f64,
        quench_threshold: f64,
        max_steps: usize,
    ) -> Result<Self> {
        let grid_issues = grid.validate();
        if !grid_issues.is_empty() {
            return Err(Error::invalid(format!(
                "grid is not sound: {grid_issues:?}"
            )));
        }
        if !(delta.is_finite() && delta > 0.0 && delta < 1.0) {
            return Err(Error::invalid(format!(
                "step-control parameter delta must lie in (0, 1), got {delta}"
            )));
        }
        if !(quench_threshold > 0.9 && quench_threshold < 1.0) {
            return Err(Error::invalid(format!(
                "quench threshold must lie in (0.9, 1), got {quench_threshold}"
            )));
        }
        Ok(ProblemSpec {
            grid,
            f,
            u0,
            delta,
            quench_threshold,
            max_steps,
        })
    }

    /// Canonical quenching setup: the [`kawarada`] source from the zero
    /// start, default threshold, generous step budget.
    pub fn kawarada(grid: Grid, delta: f64) -> Result<Self> {
        let u0 = zero_initial(grid.a)?;
        ProblemSpec::new(
            grid,
            kawarada(),
            u0,
            delta,
            DEFAULT_QUENCH_THRESHOLD,
            200_000,
        )
    }

    /// Same problem with a different step-control parameter.
    pub fn with_delta(&self, delta: f64) -> Result<Self> {
        let mut copy = self.clone();
        if !(delta.is_finite() && delta > 0.0 && delta < 1.0) {
            return Err(Error::invalid(format!(
                "step-control parameter delta must lie in (0, 1), got {delta}"
            )));
        }
        copy.delta = delta;
        Ok(copy)
    }

    /// Initial values at the interior nodes.
    pub fn initial_vector(&self) -> Vec<f64> {
        self.u0.sample(&self.grid)
    }
}
