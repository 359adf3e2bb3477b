//! The three constructions of a rate process β with ξ = ∫₀ᵀ β_u du.
//!
//! For a strongly representable ξ with closing martingale `M` (and
//! `dM = σᴹ dW`), the canonical minimal-norm rate is the martingale
//!
//! ```text
//! β̂_t = M₀/T + ∫₀ᵗ (T−u)^{−1} dM_u .
//! ```
//!
//! Integrating `∫ (T−u)^{−1} dM_u` by parts once more gives the Lebesgue
//! form
//!
//! ```text
//! β_t = M_t/(T−t) − ∫₀ᵗ M_s (T−s)^{−2} ds ,
//! ```
//!
//! (the sign of the correction integral follows from
//! d[(T−u)^{−1}] = (T−u)^{−2} du; the constant-ξ case M ≡ c, where both
//! sides must equal c/T, pins it). Finally, the defining identity
//! `M_t = (T−t) β_t + ∫₀ᵗ β_s ds` is a pathwise Volterra equation of the
//! second kind with bounded kernel −(T−t)^{−1} on any truncated grid, solved
//! here by the explicit forward recursion. All three agree on [0, T) up to
//! discretization error; near T every form amplifies noise by (T−t)^{−1}, so
//! agreement is measured on nodes t ≤ T(1 − 2^{−6}) only.

use std::io::Write;

use crate::error::Result;
use crate::grid::TimeGrid;
use crate::paths::{BrownianPath, PathBundle};
use crate::payoff::{evaluate_payoff_path, MartingalePath, PayoffSpec};

/// Canonical rate on one path: `β̂_i = M₀/T + Σ_{j<i} (T−t_j)^{−1} σᴹ_j ΔW_j`
/// at every left node `t_i < T`.
pub fn canonical_rate_path(
    m: &MartingalePath,
    grid: &TimeGrid,
    path: &BrownianPath,
) -> Vec<f64> {
    let n = grid.n_steps();
    let ttg = grid.time_to_go();
    let mut out = Vec::with_capacity(n);
    let mut acc = m.values[0] / grid.horizon();
    for i in 0..n {
        out.push(acc);
        acc += m.integrand[i] * path.increments[i] / ttg[i];
    }
    out
}

/// Lebesgue form on one path:
/// `β_i = M_i/(T−t_i) − Σ_{j<i} M_j (T−t_j)^{−2} Δt_j`.
pub fn lebesgue_form_rate_path(m: &MartingalePath, grid: &TimeGrid) -> Vec<f64> {
    let n = grid.n_steps();
    let ttg = grid.time_to_go();
    let dt = grid.dt();
    let mut out = Vec::with_capacity(n);
    let mut acc = 0.0;
    for i in 0..n {
        out.push(m.values[i] / ttg[i] - acc);
        acc += m.values[i] / (ttg[i] * ttg[i]) * dt[i];
    }
    out
}

/// Forward (explicit) discrete solve of the pathwise Volterra equation:
/// `β_i = (M_i − Σ_{j<i} β_j Δt_j) / (T−t_i)`.
pub fn volterra_rate_path(m: &MartingalePath, grid: &TimeGrid) -> Vec<f64> {
    let n = grid.n_steps();
    let ttg = grid.time_to_go();
    let dt = grid.dt();
    let mut out = Vec::with_capacity(n);
    let mut acc = 0.0;
    for i in 0..n {
        let b = (m.values[i] - acc) / ttg[i];
        out.push(b);
        acc += b * dt[i];
    }
    out
}

/// Left-point quadrature of the represented value: `Σ_i β_i Δt_i` over all
/// nodes below T.
pub fn integrate_rate_path(beta: &[f64], grid: &TimeGrid) -> f64 {
    beta.iter().zip(grid.dt()).map(|(&b, &d)| b * d).sum()
}

/// Which of the strong-case constructions to materialize.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateConstruction {
    Canonical,
    LebesgueForm,
    Volterra,
}

/// Per-path adapted rate values on the left grid nodes, materialized for a
/// (small) ensemble — used for CSV emission and the agreement diagnostics.
#[derive(Debug, Clone)]
pub struct RateProcess {
    pub grid: TimeGrid,
    /// `values[path][i]` at left node `t_i < T`.
    pub values: Vec<Vec<f64>>,
}

impl RateProcess {
    /// Build a rate ensemble for a catalog payoff.
    pub fn build(
        construction: RateConstruction,
        spec: &PayoffSpec,
        bundle: &PathBundle,
    ) -> Result<Self> {
        spec.validate()?;
        let grid = bundle.grid().clone();
        let values = bundle.map_paths(|_, path| {
            let (_, m) = evaluate_payoff_path(spec, &grid, path).expect("validated spec");
            match construction {
                RateConstruction::Canonical => canonical_rate_path(&m, &grid, path),
                RateConstruction::LebesgueForm => lebesgue_form_rate_path(&m, &grid),
                RateConstruction::Volterra => volterra_rate_path(&m, &grid),
            }
        });
        Ok(Self { grid, values })
    }

    /// Write `(path, t, beta)` rows, thinning to at most `max_paths` paths
    /// and a node stride keeping at most `max_nodes` rows per path.
    pub fn write_csv<W: Write>(
        &self,
        out: &mut W,
        max_paths: usize,
        max_nodes: usize,
    ) -> Result<()> {
        writeln!(out, "path,t,beta")?;
        let stride = (self.grid.n_steps() + max_nodes - 1) / max_nodes.max(1);
        let stride = stride.max(1);
        for (p, beta) in self.values.iter().enumerate().take(max_paths) {
            for i in (0..beta.len()).step_by(stride) {
                writeln!(
                    out,
                    "{p},{:.16e},{:.16e}",
                    self.grid.left_nodes()[i],
                    beta[i]
                )?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;
    use crate::paths::generate_paths;
    use crate::payoff::PayoffSpec;
    use crate::sum::{mean_and_se, pairwise_sum};

    fn constant_martingale(c: f64, n: usize) -> MartingalePath {
        MartingalePath { values: vec![c; n + 1], integrand: vec![0.0; n] }
    }

    #[test]
    fn canonical_rate_of_constant_payoff_is_c_over_t() {
        let grid = build_grid(2.0, 64, 2.0).unwrap();
        let bundle = generate_paths(grid.clone(), 1, 5).unwrap();
        let path = bundle.path(0);
        let m = constant_martingale(3.0, 64);
        let beta = canonical_rate_path(&m, &grid, &path);
        for b in beta {
            assert!((b - 1.5).abs() < 1e-14);
        }
    }

    #[test]
    fn canonical_rate_for_time_average_is_w_exactly() {
        // σᴹ = (T−u) cancels the kernel (T−u)^{−1}: β̂ = W on the nose.
        let grid = build_grid(1.0, 512, 2.0).unwrap();
        let bundle = generate_paths(grid.clone(), 4, 12).unwrap();
        for p in 0..4 {
            let path = bundle.path(p);
            let (_, m) = evaluate_payoff_path(&PayoffSpec::TimeAverage, &grid, &path).unwrap();
            let beta = canonical_rate_path(&m, &grid, &path);
            for i in 0..512 {
                assert!(
                    (beta[i] - path.values[i]).abs() <= 1e-12 * (1.0 + path.values[i].abs()),
                    "node {i}"
                );
            }
        }
    }

    #[test]
    fn canonical_rate_variance_for_terminal_identity() {
        // ξ = W_T: β̂_t has variance (T−t)^{−1} − T^{−1}; at t = T/2, T = 1
        // this is 1.
        let grid = build_grid(1.0, 1 << 10, 2.0).unwrap();
        let bundle = generate_paths(grid.clone(), 10_000, 14).unwrap();
        let idx = grid.search_node(0.5);
        let spec = PayoffSpec::TerminalFunction { g: crate::payoff::TerminalFn::Identity };
        let vals = bundle.map_paths(|_, path| {
            let (_, m) = evaluate_payoff_path(&spec, &grid, path).unwrap();
            canonical_rate_path(&m, &grid, path)[idx]
        });
        let (mu, _) = mean_and_se(&vals);
        let sq: Vec<f64> = vals.iter().map(|x| (x - mu) * (x - mu)).collect();
        let v = pairwise_sum(&sq) / (vals.len() - 1) as f64;
        let t = grid.left_nodes()[idx];
        let target = 1.0 / (1.0 - t) - 1.0;
        assert!((v - target).abs() < 0.05 * target.max(1.0), "var {v} vs {target}");
    }

    #[test]
    fn lebesgue_form_of_constant_matches_continuum_value() {
        // M ≡ c: the continuum identity c/(T−t) − c(1/(T−t) − 1/T) = c/T;
        // the discrete left-point quadrature differs by O(Δt) only.
        let grid = build_grid(1.0, 1 << 10, 1.0).unwrap();
        let m = constant_martingale(2.0, 1 << 10);
        let beta = lebesgue_form_rate_path(&m, &grid);
        let half = grid.search_node(0.5);
        for i in 0..half {
            assert!((beta[i] - 2.0).abs() < 5e-3 * 2.0, "node {i}: {}", beta[i]);
        }
    }

    #[test]
    fn lebesgue_form_of_zero_is_zero() {
        let grid = build_grid(1.0, 64, 2.0).unwrap();
        let m = constant_martingale(0.0, 64);
        assert!(lebesgue_form_rate_path(&m, &grid).iter().all(|&b| b == 0.0));
        assert!(volterra_rate_path(&m, &grid).iter().all(|&b| b == 0.0));
    }

    #[test]
    fn volterra_rate_of_constant_stays_c_over_t_on_uniform_grid() {
        // Induction: if all previous β = c/T then (c − (c/T)t_i)/(T−t_i) = c/T.
        let grid = build_grid(1.0, 256, 1.0).unwrap();
        let m = constant_martingale(4.0, 256);
        let beta = volterra_rate_path(&m, &grid);
        assert!((beta[0] - 4.0).abs() < 1e-14);
        for (i, b) in beta.iter().enumerate() {
            assert!((b - 4.0).abs() < 1e-9, "node {i}: {b}");
        }
    }

    #[test]
    fn integrate_constant_rate_recovers_constant() {
        let grid = build_grid(1.0, 128, 2.0).unwrap();
        let beta = vec![3.0; 128];
        let v = integrate_rate_path(&beta, &grid);
        assert!((v - 3.0).abs() < 1e-12);
    }

    #[test]
    fn integrated_canonical_time_average_rate_reproduces_xi() {
        let grid = build_grid(1.0, 1 << 10, 2.0).unwrap();
        let bundle = generate_paths(grid.clone(), 256, 20).unwrap();
        let errs = bundle.map_paths(|_, path| {
            let (xi, m) = evaluate_payoff_path(&PayoffSpec::TimeAverage, &grid, path).unwrap();
            let beta = canonical_rate_path(&m, &grid, path);
            integrate_rate_path(&beta, &grid) - xi
        });
        let rms = crate::sum::rms(&errs);
        // O(Δt^{1/2})-scale RMS: generous fixed bound for N = 2^10.
        assert!(rms < 1e-2, "rms {rms}");
    }

    #[test]
    fn beta_is_adapted_bitwise() {
        // Perturbing increments with index >= i changes no β value at
        // nodes <= i, for each construction.
        let grid = build_grid(1.0, 128, 2.0).unwrap();
        let bundle = generate_paths(grid.clone(), 1, 31).unwrap();
        let path = bundle.path(0);
        let cut = 64;
        let mut perturbed_inc = path.increments.clone();
        for d in perturbed_inc.iter_mut().skip(cut) {
            *d = -*d + 0.25;
        }
        let perturbed = crate::paths::BrownianPath::from_increments(perturbed_inc);
        for spec in [
            PayoffSpec::TimeAverage,
            PayoffSpec::PowerSigma { gamma: 0.5 },
            PayoffSpec::TerminalFunction { g: crate::payoff::TerminalFn::SquareMinusHorizon },
        ] {
            let (_, m1) = evaluate_payoff_path(&spec, &grid, &path).unwrap();
            let (_, m2) = evaluate_payoff_path(&spec, &grid, &perturbed).unwrap();
            let pairs = [
                (canonical_rate_path(&m1, &grid, &path), canonical_rate_path(&m2, &grid, &perturbed)),
                (lebesgue_form_rate_path(&m1, &grid), lebesgue_form_rate_path(&m2, &grid)),
                (volterra_rate_path(&m1, &grid), volterra_rate_path(&m2, &grid)),
            ];
            for (a, b) in pairs {
                for i in 0..=cut {
                    assert_eq!(a[i].to_bits(), b[i].to_bits(), "{spec:?} node {i}");
                }
            }
        }
    }

    #[test]
    fn canonical_rate_sample_mean_is_flat() {
        // β̂ is a martingale on [0, T).
        let grid = build_grid(1.0, 256, 2.0).unwrap();
        let bundle = generate_paths(grid.clone(), 20_000, 40).unwrap();
        let spec = PayoffSpec::PowerSigma { gamma: 0.5 };
        for idx in [32, 128, 224] {
            let vals = bundle.map_paths(|_, path| {
                let (_, m) = evaluate_payoff_path(&spec, &grid, path).unwrap();
                canonical_rate_path(&m, &grid, path)[idx]
            });
            let (mu, se) = mean_and_se(&vals);
            assert!(mu.abs() <= 4.0 * se, "node {idx}: mean {mu}, se {se}");
        }
    }

    #[test]
    fn rate_csv_has_header_and_thinned_rows() {
        let grid = build_grid(1.0, 64, 2.0).unwrap();
        let bundle = generate_paths(grid, 4, 1).unwrap();
        let rp =
            RateProcess::build(RateConstruction::Canonical, &PayoffSpec::TimeAverage, &bundle)
                .unwrap();
        let mut buf = Vec::new();
        rp.write_csv(&mut buf, 2, 32).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "path,t,beta");
        // 2 paths × 32 nodes (stride 2 over 64).
        assert_eq!(lines.count(), 64);
    }
}
