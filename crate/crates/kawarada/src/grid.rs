//! Symmetric meshes on `[-a, a]`.
//!
//! A grid holds `N` interior nodes `x_1 < ... < x_N` plus the two boundary
//! nodes `x_0 = -a` and `x_{N+1} = a`. Spacings are `h_i = x_{i+1} - x_i`
//! (0-based, `N + 1` of them) and each interior node carries the trapezoidal
//! weight `w_k = (h_k + h_{k+1}) / 2` used by the weighted norms.
//!
//! Nodes are the source of truth: spacings and weights are always derived
//! from `x`, and [`Grid::validate`] re-derives them to flag tampering.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridJson", into = "GridJson")]
pub struct Grid {
    /// Half-width of the domain `[-a, a]`.
    pub a: f64,
    /// All nodes including boundaries; length `N + 2`.
    pub x: Vec<f64>,
    /// Spacings `h_i = x_{i+1} - x_i`; length `N + 1`.
    pub h: Vec<f64>,
    /// Trapezoidal weights of the interior nodes; length `N`.
    pub weights: Vec<f64>,
}

/// Wire format: nodes only, metadata derived on read.
#[derive(Serialize, Deserialize)]
struct GridJson {
    a: f64,
    #[serde(rename = "N")]
    n: usize,
    x: Vec<f64>,
}

impl From<Grid> for GridJson {
    fn from(g: Grid) -> Self {
        GridJson {
            a: g.a,
            n: g.n(),
            x: g.x,
        }
    }
}

impl TryFrom<GridJson> for Grid {
    type Error = Error;

    fn try_from(j: GridJson) -> Result<Self> {
        if j.x.len() != j.n + 2 {
            return Err(Error::invalid(format!(
                "grid JSON declares N = {} but carries {} nodes (want N + 2)",
                j.n,
                j.x.len()
            )));
        }
        Grid::from_nodes(j.a, j.x)
    }
}

impl Grid {
    /// Number of interior nodes.
    pub fn n(&self) -> usize {
        self.x.len() - 2
    }

    /// Uniform grid with `n` interior nodes, spacing `2a / (n + 1)`.
    pub fn uniform(a: f64, n: usize) -> Result<Grid> {
        check_params(a, n)?;
        Grid::from_nodes(a, mirrored_nodes(n, |s| a * s))
    }

    /// Graded grid clustering nodes toward the center, where quenching
    /// concentrates. The uniform reference points `s_i = -1 + 2i/(n+1)` are
    /// mapped through `x = a * sign(s) * |s|^grading`; `grading = 1` is the
    /// uniform grid and larger exponents cluster harder.
    pub fn graded(a: f64, n: usize, grading: f64) -> Result<Grid> {
        check_params(a, n)?;
        if !grading.is_finite() || grading < 1.0 {
            return Err(Error::invalid(format!(
                "grading must be finite and >= 1, got {grading}"
            )));
        }
        Grid::from_nodes(a, mirrored_nodes(n, |s| -a * (-s).powf(grading)))
    }

    /// Build a grid from explicit nodes (boundaries included). Only the node
    /// count is enforced here; questionable geometry is left for `validate`
    /// so that diagnostics can inspect broken grids.
    pub fn from_nodes(a: f64, x: Vec<f64>) -> Result<Grid> {
        if x.len() < 3 {
            return Err(Error::invalid(format!(
                "a grid needs at least one interior node (3 nodes total), got {}",
                x.len()
            )));
        }
        let h: Vec<f64> = x.windows(2).map(|p| p[1] - p[0]).collect();
        let weights = h.windows(2).map(|p| 0.5 * (p[0] + p[1])).collect();
        Ok(Grid { a, x, h, weights })
    }

    /// Check every structural invariant, returning one description per
    /// violation (empty means the grid is sound).
    pub fn validate(&self) -> Vec<String> {
        let mut bad = Vec::new();
        let n = self.x.len().saturating_sub(2);

        if !(self.a.is_finite() && self.a > 0.0) {
            bad.push(format!("half-width a = {} must be positive", self.a));
        }
        if self.h.len() != n + 1 {
            bad.push(format!(
                "{} spacings stored but {} nodes imply {}",
                self.h.len(),
                n + 2,
                n + 1
            ));
        }
        if self.weights.len() != n {
            bad.push(format!(
                "{} weights stored but {} interior nodes",
                self.weights.len(),
                n
            ));
        }
        for (i, &v) in self.x.iter().enumerate() {
            if !v.is_finite() {
                bad.push(format!("x_{i} = {v} is not finite"));
            }
        }
        if let (Some(&first), Some(&last)) = (self.x.first(), self.x.last()) {
            if first != -self.a {
                bad.push(format!(
                    "x_0 = {} but the left endpoint must be {}",
                    first, -self.a
                ));
            }
            if last != self.a {
                bad.push(format!(
                    "x_{} = {} but the right endpoint must be {}",
                    self.x.len() - 1,
                    last,
                    self.a
                ));
            }
        }
        for (i, w) in self.x.windows(2).enumerate() {
            let gap = w[1] - w[0];
            if !(gap > 0.0) {
                bad.push(format!("h_{i} = {gap} at index {i}"));
            }
            if let Some(&stored) = self.h.get(i) {
                if stored != gap {
                    bad.push(format!(
                        "stored h_{i} = {stored} but nodes give {gap} at index {i}"
                    ));
                }
            }
        }
        let total: f64 = self.h.iter().sum();
        if (total - 2.0 * self.a).abs() > 1e-12 * (1.0 + 2.0 * self.a.abs()) {
            bad.push(format!(
                "spacings sum to {} but 2a = {}",
                total,
                2.0 * self.a
            ));
        }
        for k in 0..self.weights.len().min(self.h.len().saturating_sub(1)) {
            let derived = 0.5 * (self.h[k] + self.h[k + 1]);
            if self.weights[k] != derived {
                bad.push(format!(
                    "stored weight_{k} = {} but spacings give {derived} at index {k}",
                    self.weights[k]
                ));
            }
        }
        bad
    }

    /// Interior nodes only (`x_1 ..= x_N`).
    pub fn interior(&self) -> &[f64] {
        &self.x[1..self.x.len() - 1]
    }

    /// Smallest product `h_{i} * h_{i+1}` of adjacent spacings; governs the
    /// explicit integrator's stable step size.
    pub fn min_adjacent_spacing_product(&self) -> f64 {
        self.h
            .windows(2)
            .map(|p| p[0] * p[1])
            .fold(f64::INFINITY, f64::min)
    }
}

/// Nodes for `n` interior points, built left-half-first on the reference
/// coordinates `s_i = 2i/(n+1) - 1` and mirrored so `x_i == -x_{n+1-i}`
/// exactly. Mirroring is what makes the palindromic-spacing invariant hold
/// in floating point; evaluating `left` on both halves can differ by an ulp.
fn mirrored_nodes(n: usize, left: impl Fn(f64) -> f64) -> Vec<f64> {
    let m = n + 1;
    let mut x = vec![0.0_f64; n + 2];
    for i in 0..=m / 2 {
        if 2 * i == m {
            break;
        }
        let s = 2.0 * i as f64 / m as f64 - 1.0;
        x[i] = left(s);
        x[m - i] = -x[i];
    }
    x
}

fn check_params(a: f64, n: usize) -> Result<()> {
    if !(a.is_finite() && a > 0.0) {
        return Err(Error::invalid(format!(
            "half-width a must be positive and finite, got {a}"
        )));
    }
    if n == 0 {
        return Err(Error::invalid("need at least one interior node"));
    }
    Ok(())
}
