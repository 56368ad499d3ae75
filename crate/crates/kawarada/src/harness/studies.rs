//! Convergence studies against the method-of-lines reference, and the
//! bisection for the critical half-width.
//!
//! Temporal study: halve the step-control parameter level by level on one
//! grid and compare each run to a high-resolution explicit reference at the
//! same comparison time; the scheme is first order in the step scale.
//!
//! Spatial study: fix a step scale small enough that temporal error is
//! invisible, double the grid level by level, and compare at coincident
//! nodes against the reference on one further doubling; second order on
//! uniform grids, at least first on graded ones.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::linalg::weighted_norm_2;
use crate::model::{zero_initial, Nonlinearity, ProblemSpec};
use crate::semidiscrete::{integrate_oracle, OracleConfig, OracleTrajectory};
use crate::splitting::{run_with_policy, RunPolicy, Termination};

/// Step scale for spatial studies; small enough that the O(tau) term sits
/// far below every spatial error measured here.
const SPACE_DELTA: f64 = 1e-5;

/// Solver tolerance used inside studies.
const STUDY_TOL: f64 = 1e-10;

/// Reference-integrator safety factor for the temporal study.
const TIME_ORACLE_SAFETY: f64 = 0.05;

/// Reference-integrator safety factor for the spatial study; the reference
/// grid is one doubling finer than the finest measured level, so the stable
/// step is already tiny and a larger factor keeps the run affordable while
/// the fourth-order error stays negligible.
const SPACE_ORACLE_SAFETY: f64 = 0.4;

/// Step-control parameter and quench threshold for half-width
/// classification runs. The splitting shifts the apparent threshold by
/// O(delta), so classification runs use a finer delta than solution runs.
const CLASSIFY_DELTA: f64 = 0.0125;
const CLASSIFY_THRESHOLD: f64 = 0.999;
const CLASSIFY_MAX_STEPS: usize = 2_000_000;

/// One measured refinement level.
#[derive(Debug, Clone, Serialize)]
pub struct LevelError {
    /// The quantity being refined: step scale delta (temporal study) or
    /// largest grid spacing (spatial study).
    pub resolution: f64,
    /// Distance to the reference at the comparison time, weighted 2-norm.
    pub error: f64,
}

/// Observed convergence orders over a refinement ladder.
#[derive(Debug, Clone, Serialize)]
pub struct OrderReport {
    pub levels: Vec<LevelError>,
    /// Order between consecutive levels, `log(e_i/e_{i+1}) / log(r_i/r_{i+1})`;
    /// absent where the ratio degenerates (equal resolutions, vanishing or
    /// non-finite errors).
    pub observed_orders: Vec<Option<f64>>,
    /// Least-squares slope of log error against log resolution; absent when
    /// any pairwise ratio degenerates.
    pub summary_order: Option<f64>,
}

impl OrderReport {
    /// Assemble a report from measured levels, flagging degenerate ratios
    /// instead of producing spurious orders.
    pub fn from_levels(levels: Vec<LevelError>) -> OrderReport {
        let usable =
            |l: &LevelError| l.error.is_finite() && l.error > 0.0 && l.resolution.is_finite();
        let observed_orders: Vec<Option<f64>> = levels
            .windows(2)
            .map(|pair| {
                let (c, f) = (&pair[0], &pair[1]);
                if !usable(c) || !usable(f) || c.resolution == f.resolution {
                    return None;
                }
                Some((c.error / f.error).ln() / (c.resolution / f.resolution).ln())
            })
            .collect();
        let summary_order =
            if observed_orders.is_empty() || observed_orders.iter().any(Option::is_none) {
                None
            } else {
                least_squares_slope(&levels)
            };
        OrderReport {
            levels,
            observed_orders,
            summary_order,
        }
    }
}

/// Slope of log error vs log resolution.
fn least_squares_slope(levels: &[LevelError]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = levels
        .iter()
        .map(|l| (l.resolution.ln(), l.error.ln()))
        .collect();
    let n = pts.len() as f64;
    let (sx, sy): (f64, f64) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (sxx, sxy): (f64, f64) = pts
        .iter()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + x * x, b + x * y));
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-30 {
        return None;
    }
    Some((n * sxy - sx * sy) / denom)
}

/// Uniform or center-clustered grid construction at any size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridFamily {
    Uniform,
    Graded { grading: f64 },
}

impl GridFamily {
    pub fn build(&self, a: f64, n: usize) -> Result<Grid> {
        match self {
            GridFamily::Uniform => Grid::uniform(a, n),
            GridFamily::Graded { grading } => Grid::graded(a, n, *grading),
        }
    }
}

/// Reference solution from the explicit method-of-lines integrator, checked
/// to still be regular at the comparison time.
fn reference_at(spec: &ProblemSpec, t_star: f64, dt_safety: f64) -> Result<OracleTrajectory> {
    let cfg = OracleConfig {
        dt_safety,
        stop_time: t_star * 1.001,
        quench_threshold: spec.quench_threshold,
    };
    let oracle = integrate_oracle(spec, &cfg)?;
    if oracle.quenched {
        let t_q = oracle.quench_time_estimate.unwrap_or(f64::NAN);
        if !(t_q > t_star) {
            return Err(Error::invalid(format!(
                "comparison time {t_star} is not below the reference quench time {t_q}"
            )));
        }
    }
    Ok(oracle)
}

/// Temporal-order study: run the scheme at `delta, delta/2, ...` on the
/// problem's own grid and measure the distance to the explicit reference at
/// `t_star`, both sides interpolated to the common time.
pub fn converge_time(spec: &ProblemSpec, t_star: f64, levels: usize) -> Result<OrderReport> {
    if levels < 3 {
        return Err(Error::invalid(format!(
            "order estimation needs at least 3 refinement levels, got {levels}"
        )));
    }
    if !(t_star > 0.0 && t_star.is_finite()) {
        return Err(Error::invalid(format!(
            "comparison time must be positive, got {t_star}"
        )));
    }
    let oracle = reference_at(spec, t_star, TIME_ORACLE_SAFETY)?;
    let reference = oracle.at(t_star)?;
    let weights = &spec.grid.weights;

    let policy = RunPolicy {
        stop_at_time: Some(t_star),
        ..RunPolicy::to_quench()
    };
    let mut measured = Vec::with_capacity(levels);
    for level in 0..levels {
        let delta = spec.delta * 0.5f64.powi(level as i32);
        let run = run_with_policy(&spec.with_delta(delta)?, STUDY_TOL, &policy)?;
        if run.termination != Termination::TimeReached {
            return Err(Error::invalid(format!(
                "run at delta {delta} ended {:?} before reaching the comparison time {t_star}",
                run.termination
            )));
        }
        let u = run.state_at(t_star)?;
        let diff: Vec<f64> = u.iter().zip(&reference).map(|(a, b)| a - b).collect();
        measured.push(LevelError {
            resolution: delta,
            error: weighted_norm_2(weights, &diff),
        });
    }
    Ok(OrderReport::from_levels(measured))
}

/// Spatial-order study: starting from the problem's grid size, double the
/// grid `levels` times within `family` (interval doubling, `N -> 2N + 1`,
/// keeps coarse nodes coincident with fine ones), run the scheme at a tiny
/// fixed step scale, and compare at coincident nodes with the explicit
/// reference on one further doubling.
pub fn converge_space(
    spec: &ProblemSpec,
    t_star: f64,
    levels: usize,
    family: GridFamily,
) -> Result<OrderReport> {
    if levels < 3 {
        return Err(Error::invalid(format!(
            "order estimation needs at least 3 refinement levels, got {levels}"
        )));
    }
    if !(t_star > 0.0 && t_star.is_finite()) {
        return Err(Error::invalid(format!(
            "comparison time must be positive, got {t_star}"
        )));
    }
    let mut sizes = Vec::with_capacity(levels + 1);
    let mut n = spec.grid.n();
    for _ in 0..=levels {
        sizes.push(n);
        n = 2 * n + 1;
    }
    let fine_n = *sizes.last().expect("at least one size");
    let fine_spec = respec(spec, family.build(spec.grid.a, fine_n)?)?;
    let oracle = reference_at(&fine_spec, t_star, SPACE_ORACLE_SAFETY)?;
    let reference = oracle.at(t_star)?;

    let policy = RunPolicy {
        stop_at_time: Some(t_star),
        ..RunPolicy::to_quench()
    };
    let mut measured = Vec::with_capacity(levels);
    for (level, &n_level) in sizes[..levels].iter().enumerate() {
        let grid = family.build(spec.grid.a, n_level)?;
        let level_spec = respec(spec, grid)?.with_delta(SPACE_DELTA)?;
        let run = run_with_policy(&level_spec, STUDY_TOL, &policy)?;
        if run.termination != Termination::TimeReached {
            return Err(Error::invalid(format!(
                "run at N = {n_level} ended {:?} before reaching the comparison time {t_star}",
                run.termination
            )));
        }
        let u = run.state_at(t_star)?;
        // Coarse interior node j sits at fine interior index
        // (j + 1) * 2^(levels - level) - 1 under interval doubling.
        let stride = 1usize << (levels - level);
        let restricted: Vec<f64> = (0..n_level)
            .map(|j| reference[(j + 1) * stride - 1])
            .collect();
        let diff: Vec<f64> = u.iter().zip(&restricted).map(|(a, b)| a - b).collect();
        measured.push(LevelError {
            resolution: max_spacing(&level_spec.grid),
            error: weighted_norm_2(&level_spec.grid.weights, &diff),
        });
    }
    Ok(OrderReport::from_levels(measured))
}

fn max_spacing(grid: &Grid) -> f64 {
    grid.h.iter().copied().fold(0.0, f64::max)
}

/// The same problem posed on a different grid.
fn respec(spec: &ProblemSpec, grid: Grid) -> Result<ProblemSpec> {
    ProblemSpec::new(
        grid,
        spec.f.clone(),
        spec.u0.clone(),
        spec.delta,
        spec.quench_threshold,
        spec.max_steps,
    )
}

/// How a classification run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Behavior {
    Quench,
    Steady,
    Ambiguous,
}

fn classify(f: &Nonlinearity, a: f64, n: usize, budget_time: f64) -> Result<Behavior> {
    let grid = Grid::uniform(a, n)?;
    let spec = ProblemSpec::new(
        grid,
        f.clone(),
        zero_initial(a)?,
        CLASSIFY_DELTA,
        CLASSIFY_THRESHOLD,
        CLASSIFY_MAX_STEPS,
    )?;
    let policy = RunPolicy {
        budget_time: Some(budget_time),
        keep_states: false,
        ..RunPolicy::to_quench()
    };
    let run = run_with_policy(&spec, STUDY_TOL, &policy)?;
    Ok(match run.termination {
        Termination::Quenched => Behavior::Quench,
        Termination::Steady => Behavior::Steady,
        Termination::TimeBudget | Termination::StepBudget | Termination::TimeReached => {
            Behavior::Ambiguous
        }
    })
}

/// Bisect the half-width separating steady behavior from quenching, on
/// uniform grids with `n` interior nodes and the zero start. Each run is
/// classified as quenching (threshold or singularity contact) or steady
/// (stagnating increments) within `budget_time` of simulated time.
pub fn find_critical_a(
    f: &Nonlinearity,
    bracket: (f64, f64),
    n: usize,
    budget_time: f64,
    tol_a: f64,
) -> Result<f64> {
    let (mut lo, mut hi) = bracket;
    if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && hi > lo) {
        return Err(Error::InvalidBracket(format!(
            "bracket must satisfy 0 < lo < hi, got ({lo}, {hi})"
        )));
    }
    if !(tol_a > 0.0 && budget_time > 0.0) {
        return Err(Error::invalid(format!(
            "tolerance and budget must be positive, got tol_a = {tol_a}, budget_time = {budget_time}"
        )));
    }

    match classify(f, lo, n, budget_time)? {
        Behavior::Steady => {}
        Behavior::Quench => {
            return Err(Error::InvalidBracket(format!(
                "lower endpoint a = {lo} quenches; the bracket must straddle the behavior change"
            )))
        }
        Behavior::Ambiguous => return Err(Error::Inconclusive { a: lo }),
    }
    match classify(f, hi, n, budget_time)? {
        Behavior::Quench => {}
        Behavior::Steady => {
            return Err(Error::InvalidBracket(format!(
            "upper endpoint a = {hi} stays steady; the bracket must straddle the behavior change"
        )))
        }
        Behavior::Ambiguous => return Err(Error::Inconclusive { a: hi }),
    }

    while hi - lo > tol_a {
        let mid = 0.5 * (lo + hi);
        match classify(f, mid, n, budget_time)? {
            Behavior::Quench => hi = mid,
            Behavior::Steady => lo = mid,
            Behavior::Ambiguous => return Err(Error::Inconclusive { a: mid }),
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::kawarada;

    fn sqrt2() -> f64 {
        2.0_f64.sqrt()
    }

    #[test]
    fn order_report_on_clean_second_order_data() {
        let levels = vec![
            LevelError {
                resolution: 0.1,
                error: 4e-2,
            },
            LevelError {
                resolution: 0.05,
                error: 1e-2,
            },
            LevelError {
                resolution: 0.025,
                error: 2.5e-3,
            },
        ];
        let report = OrderReport::from_levels(levels);
        for order in &report.observed_orders {
            assert!((order.unwrap() - 2.0).abs() < 1e-12);
        }
        assert!((report.summary_order.unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn order_report_flags_degenerate_ratios() {
        let dup = OrderReport::from_levels(vec![
            LevelError {
                resolution: 0.1,
                error: 1e-2,
            },
            LevelError {
                resolution: 0.1,
                error: 1e-2,
            },
        ]);
        assert_eq!(dup.observed_orders, vec![None]);
        assert_eq!(dup.summary_order, None);

        let zero = OrderReport::from_levels(vec![
            LevelError {
                resolution: 0.1,
                error: 1e-2,
            },
            LevelError {
                resolution: 0.05,
                error: 0.0,
            },
        ]);
        assert_eq!(zero.observed_orders, vec![None]);
        assert_eq!(zero.summary_order, None);
    }

    #[test]
    fn temporal_study_rejects_bad_arguments() {
        let spec = ProblemSpec::kawarada(Grid::uniform(sqrt2(), 9).unwrap(), 0.1).unwrap();
        assert!(converge_time(&spec, 0.2, 2).is_err());
        assert!(converge_time(&spec, -0.5, 3).is_err());
        // Far beyond quench (reference quenches near 0.56).
        assert!(converge_time(&spec, 5.0, 3).is_err());
    }

    #[test]
    fn temporal_study_sees_first_order() {
        let spec = ProblemSpec::kawarada(Grid::uniform(sqrt2(), 9).unwrap(), 0.1).unwrap();
        let report = converge_time(&spec, 0.2, 3).unwrap();
        assert_eq!(report.levels.len(), 3);
        assert!(report.levels.windows(2).all(|w| w[1].error < w[0].error));
        let order = report.summary_order.unwrap();
        assert!((0.6..=1.4).contains(&order), "summary order {order}");
    }

    #[test]
    fn spatial_study_sees_second_order_on_uniform_grids() {
        let spec = ProblemSpec::kawarada(Grid::uniform(sqrt2(), 5).unwrap(), 0.1).unwrap();
        let report = converge_space(&spec, 0.2, 3, GridFamily::Uniform).unwrap();
        assert_eq!(report.levels.len(), 3);
        // Resolutions are the spacings of N = 5, 11, 23.
        assert!((report.levels[0].resolution - 2.0 * sqrt2() / 6.0).abs() < 1e-15);
        let order = report.summary_order.unwrap();
        assert!(order >= 1.5, "summary order {order}");
    }

    #[test]
    fn critical_half_width_brackets_shrink_to_the_threshold() {
        let f = kawarada();
        let a = find_critical_a(&f, (0.5, 1.2), 9, 300.0, 0.2).unwrap();
        assert!((0.7..=0.8).contains(&a), "critical half-width {a}");
    }

    #[test]
    fn critical_half_width_rejects_one_sided_brackets() {
        let f = kawarada();
        let err = find_critical_a(&f, (1.0, 1.2), 5, 300.0, 0.1).unwrap_err();
        assert!(matches!(err, Error::InvalidBracket(_)), "{err}");
        let err = find_critical_a(&f, (0.2, 0.4), 5, 300.0, 0.1).unwrap_err();
        assert!(matches!(err, Error::InvalidBracket(_)), "{err}");
        let err = find_critical_a(&f, (1.2, 0.5), 5, 300.0, 0.1).unwrap_err();
        assert!(matches!(err, Error::InvalidBracket(_)), "{err}");
    }

    #[test]
    fn wide_tolerance_returns_the_midpoint_after_endpoint_checks() {
        let f = kawarada();
        let a = find_critical_a(&f, (0.5, 1.2), 5, 300.0, 1.0).unwrap();
        assert!((a - 0.85).abs() < 1e-12, "{a}");
    }
}
