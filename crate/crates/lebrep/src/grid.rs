//! Graded time discretization of `[0, T]`.
//!
//! The singular kernels `(T−t)^{−1}` and `(T−t)^{2α−2}` concentrate
//! quadrature error near the horizon `T`. A power-graded mesh
//!
//! ```text
//! t_i = T · (1 − (1 − i/N)^q),      q ≥ 1,
//! ```
//!
//! equidistributes that error; `q = 1` recovers the uniform grid. Nodes are
//! stored in absolute time, and the time-to-go `T − t_i = T (1 − i/N)^q` is
//! computed from the closed form rather than by subtraction, so it carries
//! full relative precision even when `T − t_i` is tiny.

use crate::error::{Error, Result};

/// Graded discretization of `[0, T]` with `N + 1` nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    horizon: f64,
    grading_exponent: f64,
    nodes: Vec<f64>,
    /// `T − t_i` from the closed form, one entry per node.
    time_to_go: Vec<f64>,
    /// `Δt_i = t_{i+1} − t_i`, computed as a difference of time-to-go values.
    dt: Vec<f64>,
}

/// Build a graded grid; `q = 1` yields uniform spacing.
pub fn build_grid(horizon: f64, n_steps: usize, q: f64) -> Result<TimeGrid> {
    if n_steps < 2 {
        return Err(Error::InvalidGrid(format!("need N >= 2 steps, got {n_steps}")));
    }
    if !(horizon > 0.0) {
        return Err(Error::InvalidGrid(format!("need T > 0, got {horizon}")));
    }
    if !(q >= 1.0) {
        return Err(Error::InvalidGrid(format!("need grading exponent q >= 1, got {q}")));
    }
    let n = n_steps as f64;
    let time_to_go: Vec<f64> = (0..=n_steps)
        .map(|i| horizon * ((n_steps - i) as f64 / n).powf(q))
        .collect();
    let nodes: Vec<f64> = (0..=n_steps)
        .map(|i| horizon * (1.0 - ((n_steps - i) as f64 / n).powf(q)))
        .collect();
    for i in 0..n_steps {
        if !(nodes[i] < nodes[i + 1]) {
            return Err(Error::InvalidGrid(format!(
                "nodes not strictly increasing at index {i} (N too large for q = {q}?)"
            )));
        }
    }
    let dt: Vec<f64> = (0..n_steps).map(|i| time_to_go[i] - time_to_go[i + 1]).collect();
    Ok(TimeGrid { horizon, grading_exponent: q, nodes, time_to_go, dt })
}

impl TimeGrid {
    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn grading_exponent(&self) -> f64 {
        self.grading_exponent
    }

    /// Number of steps `N` (one less than the number of nodes).
    pub fn n_steps(&self) -> usize {
        self.dt.len()
    }

    /// All nodes `t_0 … t_N`.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Left nodes `t_0 … t_{N−1}` (the only points where singular kernels
    /// are evaluated; every one is strictly below `T`).
    pub fn left_nodes(&self) -> &[f64] {
        &self.nodes[..self.dt.len()]
    }

    /// `T − t_i` for every node, from the closed form.
    pub fn time_to_go(&self) -> &[f64] {
        &self.time_to_go
    }

    /// Step lengths `Δt_i`.
    pub fn dt(&self) -> &[f64] {
        &self.dt
    }

    /// Index of the first node `>= t` (nodes are sorted).
    pub fn search_node(&self, t: f64) -> usize {
        self.nodes.partition_point(|&x| x < t)
    }
}
