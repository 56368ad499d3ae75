//! Method-of-lines reference integrator.
//!
//! The spatially discretized problem is the stiff ODE system
//! `dU/dt = A U + F(U)` on the interior nodes. This module integrates it
//! with classical RK4 under the parabolic step restriction, producing the
//! high-accuracy trajectories the splitting scheme is measured against. The
//! oracle deliberately shares no machinery with the splitting scheme beyond
//! the operator itself: no resolvent, no implicit solve, no adaptive rule.
//!
//! Checkpoints are stored sparsely once a run grows long; interpolation
//! between them is cubic Hermite using the ODE right-hand side as the exact
//! derivative, so interpolated queries keep the integrator's order.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::harness::io::write_csv_row;
use crate::linalg::TridiagonalOperator;
use crate::model::{check_admissible, Nonlinearity, ProblemSpec};

/// Per-step growth of any component beyond this triggers step halving; it
/// keeps the integrator from jumping across the singular level between
/// checkpoints.
const GROWTH_CAP: f64 = 1e-2;

/// Stored-checkpoint cap; hitting it drops every other checkpoint and
/// doubles the storage cadence, bounding memory on long runs.
const CHECKPOINT_CAP: usize = 16_384;

/// Components this far below zero are integrator rounding and snap to zero;
/// anything lower is a genuine escape from the state region.
const NEGATIVE_SNAP: f64 = 1e-9;

/// Controls for one oracle run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleConfig {
    /// Fraction of the explicit stability step `min(h_i h_{i+1}) / 4`.
    pub dt_safety: f64,
    /// Horizon; the run ends here unless quenching ends it first.
    pub stop_time: f64,
    /// Max-component level that declares numerical quenching.
    pub quench_threshold: f64,
}

impl OracleConfig {
    fn validate(&self) -> Result<()> {
        if !(self.dt_safety > 0.0 && self.dt_safety <= 1.0) {
            return Err(Error::invalid(format!(
                "dt_safety must lie in (0, 1], got {}",
                self.dt_safety
            )));
        }
        if !(self.stop_time.is_finite() && self.stop_time > 0.0) {
            return Err(Error::invalid(format!(
                "stop_time must be positive and finite, got {}",
                self.stop_time
            )));
        }
        if !(self.quench_threshold > 0.0 && self.quench_threshold < 1.0) {
            return Err(Error::invalid(format!(
                "quench_threshold must lie in (0, 1), got {}",
                self.quench_threshold
            )));
        }
        Ok(())
    }
}

/// Stored checkpoints of one oracle run, plus what is needed to evaluate the
/// trajectory between them.
#[derive(Debug, Clone)]
pub struct OracleTrajectory {
    /// Checkpoint times, strictly increasing, starting at 0.
    pub times: Vec<f64>,
    /// States at the checkpoint times, componentwise in `[0, 1)`.
    pub states: Vec<Vec<f64>>,
    /// Whether the run ended by reaching the quench threshold.
    pub quenched: bool,
    /// Threshold-crossing time, refined on the final interpolant.
    pub quench_time_estimate: Option<f64>,
    operator: TridiagonalOperator,
    f: Nonlinearity,
}

impl OracleTrajectory {
    /// The ODE right-hand side `A u + F(u)`.
    pub fn derivative(&self, u: &[f64]) -> Vec<f64> {
        let mut g = self.operator.apply(u);
        for (gi, &ui) in g.iter_mut().zip(u) {
            *gi += self.f.eval(ui);
        }
        g
    }

    /// State at time `t` by cubic Hermite interpolation between the bracketing
    /// checkpoints, with endpoint derivatives from the ODE itself.
    pub fn at(&self, t: f64) -> Result<Vec<f64>> {
        let (first, last) = (self.times[0], *self.times.last().unwrap());
        if !(t >= first && t <= last) {
            return Err(Error::invalid(format!(
                "time {t} outside the stored range [{first}, {last}]"
            )));
        }
        let j = match self
            .times
            .binary_search_by(|probe| probe.partial_cmp(&t).unwrap())
        {
            Ok(j) => return Ok(self.states[j].clone()),
            Err(j) => j,
        };
        let (t0, t1) = (self.times[j - 1], self.times[j]);
        let (y0, y1) = (&self.states[j - 1], &self.states[j]);
        let d0 = self.derivative(y0);
        let d1 = self.derivative(y1);
        let dt = t1 - t0;
        let s = (t - t0) / dt;
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        Ok((0..y0.len())
            .map(|i| h00 * y0[i] + h10 * dt * d0[i] + h01 * y1[i] + h11 * dt * d1[i])
            .collect())
    }

    /// Rows `t, U_1..U_N, max_U`, floats in round-trip-exact form.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        let n = self.states[0].len();
        let header: Vec<String> = std::iter::once("t".to_string())
            .chain((1..=n).map(|i| format!("U_{i}")))
            .chain(std::iter::once("max_U".to_string()))
            .collect();
        writeln!(out, "{}", header.join(","))?;
        for (t, u) in self.times.iter().zip(&self.states) {
            let mut row = Vec::with_capacity(n + 2);
            row.push(*t);
            row.extend_from_slice(u);
            row.push(u.iter().copied().fold(f64::NEG_INFINITY, f64::max));
            write_csv_row(out, &[], &row)?;
        }
        Ok(())
    }
}

/// Integrate the semidiscrete system from the problem's initial data until
/// `cfg.stop_time` or numerical quenching.
pub fn integrate_oracle(spec: &ProblemSpec, cfg: &OracleConfig) -> Result<OracleTrajectory> {
    cfg.validate()?;
    let issues = check_admissible(&spec.f, &spec.u0, &spec.grid);
    if !issues.is_empty() {
        return Err(Error::invalid(format!(
            "problem data inadmissible: {issues:?}"
        )));
    }

    let operator = TridiagonalOperator::laplacian(&spec.grid);
    let mut u = spec.initial_vector();
    let mut t = 0.0_f64;
    let dt0 = cfg.dt_safety * spec.grid.min_adjacent_spacing_product() / 4.0;
    let mut dt = dt0;
    let dt_floor = dt0 * 2.0_f64.powi(-60);

    let mut times = vec![0.0];
    let mut states = vec![u.clone()];
    let mut cadence = 1usize;
    let mut since_stored = 0usize;
    let mut quenched = false;

    while t < cfg.stop_time {
        let dt_eff = dt.min(cfg.stop_time - t);
        if dt_eff <= cfg.stop_time * f64::EPSILON {
            break;
        }
        let step = rk4_step(&operator, &spec.f, &u, dt_eff);
        let next = match step {
            Some(v)
                if max_component(&v) < 1.0
                    && v.iter().zip(&u).all(|(a, b)| a - b <= GROWTH_CAP) =>
            {
                v
            }
            _ => {
                dt *= 0.5;
                if dt < dt_floor {
                    return Err(Error::IntegrationFailure(format!(
                        "step size collapsed below {dt_floor:.3e} at t = {t}"
                    )));
                }
                continue;
            }
        };
        let mut next = next;
        for (i, x) in next.iter_mut().enumerate() {
            if *x < 0.0 {
                if *x < -NEGATIVE_SNAP {
                    return Err(Error::IntegrationFailure(format!(
                        "component {i} fell to {x} at t = {t}, beyond rounding"
                    )));
                }
                *x = 0.0;
            }
        }

        let t_prev = t;
        t += dt_eff;
        since_stored += 1;
        if max_component(&next) >= cfg.quench_threshold {
            quenched = true;
            // Keep the immediate predecessor so the crossing interval is one
            // integrator step wide for the refinement below.
            store(&mut times, &mut states, t_prev, &u);
            u = next;
            store(&mut times, &mut states, t, &u);
            break;
        }
        u = next;
        if since_stored >= cadence {
            since_stored = 0;
            store(&mut times, &mut states, t, &u);
            if states.len() >= CHECKPOINT_CAP {
                thin(&mut times, &mut states);
                cadence *= 2;
            }
        }
    }
    store(&mut times, &mut states, t, &u);

    let mut traj = OracleTrajectory {
        times,
        states,
        quenched,
        quench_time_estimate: None,
        operator,
        f: spec.f.clone(),
    };
    if quenched {
        traj.quench_time_estimate = Some(refine_crossing(&traj, cfg.quench_threshold));
    }
    Ok(traj)
}

/// Central-difference residual of a smooth function: the discrete second
/// difference over all nodes (boundaries included) minus the supplied exact
/// second derivative, at each interior node.
pub fn truncation_probe(
    u: impl Fn(f64, f64) -> f64,
    u_xx: impl Fn(f64, f64) -> f64,
    grid: &Grid,
    t: f64,
) -> Vec<f64> {
    (1..=grid.n())
        .map(|j| {
            let (hl, hr) = (grid.h[j - 1], grid.h[j]);
            let second = 2.0 * u(t, grid.x[j - 1]) / (hl * (hl + hr))
                - 2.0 * u(t, grid.x[j]) / (hl * hr)
                + 2.0 * u(t, grid.x[j + 1]) / (hr * (hl + hr));
            second - u_xx(t, grid.x[j])
        })
        .collect()
}

fn max_component(u: &[f64]) -> f64 {
    u.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// One RK4 stage evaluation; `None` when a stage state has already crossed
/// the singular level or produced non-finite values, which tells the caller
/// to halve the step.
fn stage(a: &TridiagonalOperator, f: &Nonlinearity, u: &[f64]) -> Option<Vec<f64>> {
    if u.iter().any(|&x| !x.is_finite() || x >= 1.0) {
        return None;
    }
    let mut g = a.apply(u);
    for (gi, &ui) in g.iter_mut().zip(u) {
        *gi += f.eval(ui);
    }
    if g.iter().any(|x| !x.is_finite()) {
        return None;
    }
    Some(g)
}

fn rk4_step(a: &TridiagonalOperator, f: &Nonlinearity, u: &[f64], dt: f64) -> Option<Vec<f64>> {
    let k1 = stage(a, f, u)?;
    let u2: Vec<f64> = u.iter().zip(&k1).map(|(x, k)| x + 0.5 * dt * k).collect();
    let k2 = stage(a, f, &u2)?;
    let u3: Vec<f64> = u.iter().zip(&k2).map(|(x, k)| x + 0.5 * dt * k).collect();
    let k3 = stage(a, f, &u3)?;
    let u4: Vec<f64> = u.iter().zip(&k3).map(|(x, k)| x + dt * k).collect();
    let k4 = stage(a, f, &u4)?;
    let next: Vec<f64> = (0..u.len())
        .map(|i| u[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect();
    next.iter().all(|x| x.is_finite()).then_some(next)
}

/// Append a checkpoint unless the stored history already reaches that time.
fn store(times: &mut Vec<f64>, states: &mut Vec<Vec<f64>>, t: f64, u: &[f64]) {
    if *times.last().unwrap() < t {
        times.push(t);
        states.push(u.to_vec());
    }
}

fn thin(times: &mut Vec<f64>, states: &mut Vec<Vec<f64>>) {
    let keep = |i: &usize| i.is_multiple_of(2);
    let t: Vec<f64> = times
        .iter()
        .enumerate()
        .filter(|(i, _)| keep(i))
        .map(|(_, v)| *v)
        .collect();
    let s: Vec<Vec<f64>> = states
        .iter()
        .enumerate()
        .filter(|(i, _)| keep(i))
        .map(|(_, v)| v.clone())
        .collect();
    *times = t;
    *states = s;
}

/// Bisect the interpolated max component against the threshold inside the
/// final checkpoint interval.
fn refine_crossing(traj: &OracleTrajectory, threshold: f64) -> f64 {
    let m = traj.times.len();
    let (mut lo, mut hi) = (traj.times[m - 2], traj.times[m - 1]);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let u = traj.at(mid).expect("mid lies inside the stored range");
        if max_component(&u) >= threshold {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}
