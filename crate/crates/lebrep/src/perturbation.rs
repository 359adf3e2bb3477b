//! Admissible perturbations for the variational (first-order) checks.
//!
//! Given pivot times `t < s` in `[0, T)`, the perturbation direction on a
//! path is `γ_u = χ · g(u)` where `χ = tanh(W_t)` is bounded and depends on
//! information up to `t` only, and `g` is the deterministic profile that is
//! `+1/(s−t)` on `[t, s)` and `−1/(T−s)` on `[s, T)`. On the grid, `g` is
//! renormalized by subtracting its (Δt-weighted) average over the support
//! `[t, T)` so that `Σ γ_i Δt_i = 0` holds exactly; renormalizing over the
//! support only (not all of `[0, T)`) keeps `γ` adapted, since the
//! χ-dependent constant is only applied after time `t`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::TimeGrid;

/// Pivot pair defining one perturbation direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    pub t_pivot: f64,
    pub s_pivot: f64,
}

/// Deterministic part of the perturbation, precomputed on a grid.
#[derive(Debug, Clone)]
pub struct PerturbationProfile {
    pub spec: PerturbationSpec,
    /// Node index at which the support `[t, T)` starts (χ is read there).
    pub pivot_index: usize,
    /// Profile `g` on all left nodes; zero before the support, and with
    /// `Σ g_i Δt_i = 0` exactly over the grid.
    pub profile: Vec<f64>,
}

impl PerturbationProfile {
    pub fn build(spec: PerturbationSpec, grid: &TimeGrid) -> Result<Self> {
        let t_max = grid.horizon();
        if !(spec.t_pivot >= 0.0 && spec.t_pivot < spec.s_pivot && spec.s_pivot < t_max) {
            return Err(Error::InvalidParameter(format!(
                "need 0 <= t < s < T, got t = {}, s = {}",
                spec.t_pivot, spec.s_pivot
            )));
        }
        let n = grid.n_steps();
        let ip = grid.search_node(spec.t_pivot);
        let is = grid.search_node(spec.s_pivot);
        if ip >= is || is >= n {
            return Err(Error::InvalidParameter(
                "pivot times too close together for this grid".into(),
            ));
        }
        let mut profile = vec![0.0; n];
        for g in profile.iter_mut().take(is).skip(ip) {
            *g = 1.0 / (spec.s_pivot - spec.t_pivot);
        }
        for g in profile.iter_mut().take(n).skip(is) {
            *g = -1.0 / (t_max - spec.s_pivot);
        }
        // Exact discrete renormalization over the support.
        let dt = grid.dt();
        let mass: f64 = dt[ip..].iter().sum();
        let avg: f64 =
            profile[ip..].iter().zip(&dt[ip..]).map(|(&g, &d)| g * d).sum::<f64>() / mass;
        for g in profile.iter_mut().skip(ip) {
            *g -= avg;
        }
        Ok(Self { spec, pivot_index: ip, profile })
    }
}

/// The ten default pivot pairs used by the acceptance checks (all well
/// inside `[0, T)` so both support pieces are resolved by graded grids).
pub fn default_pivots(horizon: f64) -> Vec<PerturbationSpec> {
    let t = horizon;
    [
        (0.125, 0.25),
        (0.125, 0.5),
        (0.125, 0.75),
        (0.25, 0.5),
        (0.25, 0.625),
        (0.25, 0.75),
        (0.375, 0.5),
        (0.375, 0.75),
        (0.5, 0.625),
        (0.5, 0.75),
    ]
    .iter()
    .map(|&(a, b)| PerturbationSpec { t_pivot: a * t, s_pivot: b * t })
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;

    #[test]
    fn profile_integrates_to_zero_exactly() {
        let grid = build_grid(1.0, 1 << 10, 2.0).unwrap();
        for spec in default_pivots(1.0) {
            let prof = PerturbationProfile::build(spec, &grid).unwrap();
            let total: f64 =
                prof.profile.iter().zip(grid.dt()).map(|(&g, &d)| g * d).sum();
            assert!(total.abs() < 1e-12, "pivot {spec:?}: {total}");
            // Zero before the support.
            for i in 0..prof.pivot_index {
                assert_eq!(prof.profile[i], 0.0);
            }
        }
    }

    #[test]
    fn rejects_bad_pivots() {
        let grid = build_grid(1.0, 64, 2.0).unwrap();
        assert!(PerturbationProfile::build(
            PerturbationSpec { t_pivot: 0.5, s_pivot: 0.25 },
            &grid
        )
        .is_err());
        assert!(PerturbationProfile::build(
            PerturbationSpec { t_pivot: 0.25, s_pivot: 1.0 },
            &grid
        )
        .is_err());
    }
}
