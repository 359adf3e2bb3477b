//! Reproducible Brownian path ensembles.
//!
//! A [`PathBundle`] is a lazy, seeded description of an ensemble: each path
//! is materialized on demand from the counter-based generator, so ensembles
//! of 10⁴ paths on 2¹⁴-step grids never hold the full increment matrix in
//! memory. Per-path results are collected into a path-indexed `Vec` (rayon's
//! indexed `collect` preserves order), and all cross-path reductions go
//! through the deterministic pairwise summation in [`crate::sum`], so
//! numeric output is independent of the worker count.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::rng::PathRng;

/// One discrete Brownian path on a grid.
#[derive(Debug, Clone)]
pub struct BrownianPath {
    /// `ΔW_i` for each step, variance `Δt_i`.
    pub increments: Vec<f64>,
    /// `W_{t_i}` at every node; `values[0] = 0` and
    /// `values[i+1] − values[i] = increments[i]` exactly.
    pub values: Vec<f64>,
}

impl BrownianPath {
    /// Build the running values from raw increments, then re-derive the
    /// stored increments as exact node differences so that
    /// `values[i+1] − values[i] = increments[i]` holds bitwise (the raw and
    /// stored increments differ by at most one rounding of the cumsum).
    pub fn from_increments(raw: Vec<f64>) -> Self {
        let mut values = Vec::with_capacity(raw.len() + 1);
        let mut w = 0.0;
        values.push(w);
        for &dw in &raw {
            w += dw;
            values.push(w);
        }
        let increments = (0..raw.len()).map(|i| values[i + 1] - values[i]).collect();
        Self { increments, values }
    }
}

/// Seeded ensemble of Brownian paths on a shared grid.
#[derive(Debug, Clone)]
pub struct PathBundle {
    grid: TimeGrid,
    n_paths: usize,
    seed: u64,
    sqrt_dt: Vec<f64>,
}

/// Build a path ensemble description (paths are generated lazily).
pub fn generate_paths(grid: TimeGrid, n_paths: usize, seed: u64) -> Result<PathBundle> {
    if n_paths < 1 {
        return Err(Error::InvalidParameter("need n_paths >= 1".into()));
    }
    let sqrt_dt = grid.dt().iter().map(|&d| d.sqrt()).collect();
    Ok(PathBundle { grid, n_paths, seed, sqrt_dt })
}

impl PathBundle {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Materialize path `p`. Depends only on `(seed, p, step)`, never on
    /// which other paths have been generated.
    pub fn path(&self, p: usize) -> BrownianPath {
        assert!(p < self.n_paths, "path index {p} out of range");
        let mut rng = PathRng::new(self.seed, p as u64);
        let increments: Vec<f64> =
            self.sqrt_dt.iter().map(|&s| s * rng.next_normal()).collect();
        BrownianPath::from_increments(increments)
    }

    /// Map a closure over all paths in parallel, collecting results in path
    /// order. The returned `Vec` is safe to reduce with pairwise summation.
    pub fn map_paths<T, F>(&self, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize, &BrownianPath) -> T + Sync,
    {
        (0..self.n_paths)
            .into_par_iter()
            .map(|p| {
                let path = self.path(p);
                f(p, &path)
            })
            .collect()
    }
}
