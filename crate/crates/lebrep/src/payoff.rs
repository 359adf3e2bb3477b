//! Catalog of terminal variables ξ with closed-form closing martingales.
//!
//! Every catalog entry exposes, pathwise on a grid: the terminal value ξ,
//! the closing martingale `M_t = E[ξ | F_t]` on all nodes, and the
//! martingale integrand `σᴹ` (with `dM = σᴹ dW`) on the left nodes. All
//! stochastic integrals are left-point (Itô) sums, which preserve
//! adaptedness; no Stratonovich option exists.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::paths::BrownianPath;

/// Deterministic-in-time or adapted integrand choices for `SigmaIntegral`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SigmaKind {
    /// `σ ≡ value`.
    Constant { value: f64 },
    /// `σ_u = (T − u)^exponent` (deterministic function of time-to-go).
    PowerTimeToGo { exponent: f64 },
    /// The adapted bounded choice `σ_t = cos(W_t)`.
    CosBrownian,
}

/// Terminal functions with closed-form heat-semigroup martingales.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminalFn {
    /// `g(x) = x`, i.e. ξ = W_T.
    Identity,
    /// `g(x) = x² − T`.
    SquareMinusHorizon,
}

/// A target terminal variable ξ together with its closed forms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum PayoffSpec {
    /// ξ = ∫₀ᵀ σ dW with σ from [`SigmaKind`]; M is the running Itô sum.
    SigmaIntegral { sigma: SigmaKind },
    /// ξ = ∫₀ᵀ (T−u)^γ dW, γ > −1/2.
    PowerSigma { gamma: f64 },
    /// ξ = ∫₀ᵀ W_t dt, with M_t = ∫₀ᵗ W ds + W_t (T−t) and σᴹ = T−t.
    TimeAverage,
    /// ξ = g(W_T) for `g` in the closed-form catalog.
    TerminalFunction { g: TerminalFn },
}

/// Closing martingale of one path: `values` on all `N+1` nodes, `integrand`
/// (σᴹ) on the `N` left nodes.
#[derive(Debug, Clone)]
pub struct MartingalePath {
    pub values: Vec<f64>,
    pub integrand: Vec<f64>,
}

impl MartingalePath {
    /// Quadratic-variation increments `d⟨M⟩_i = (σᴹ_i)² Δt_i`.
    pub fn qv_increments(&self, grid: &TimeGrid) -> Vec<f64> {
        self.integrand
            .iter()
            .zip(grid.dt())
            .map(|(&s, &dt)| s * s * dt)
            .collect()
    }
}

impl PayoffSpec {
    /// Validate catalog parameters (PowerSigma needs γ > −1/2 for ξ ∈ L²).
    pub fn validate(&self) -> Result<()> {
        if let PayoffSpec::PowerSigma { gamma } = self {
            if !(*gamma > -0.5) {
                return Err(Error::InvalidParameter(format!(
                    "power_sigma exponent must satisfy gamma > -1/2, got {gamma}"
                )));
            }
        }
        Ok(())
    }

    /// True when ξ has the form ∫σdW with `M₀ = 0` (the shape required by
    /// the fractional factorization).
    pub fn is_sigma_integral_form(&self) -> bool {
        matches!(
            self,
            PayoffSpec::SigmaIntegral { .. }
                | PayoffSpec::PowerSigma { .. }
                | PayoffSpec::TerminalFunction { g: TerminalFn::Identity }
        )
    }
}

/// Evaluate a catalog payoff on one path: returns `(ξ, MartingalePath)`.
pub fn evaluate_payoff_path(
    spec: &PayoffSpec,
    grid: &TimeGrid,
    path: &BrownianPath,
) -> Result<(f64, MartingalePath)> {
    spec.validate()?;
    let n = grid.n_steps();
    let ttg = grid.time_to_go();
    let dt = grid.dt();
    let w = &path.values;
    let dw = &path.increments;
    match spec {
        PayoffSpec::SigmaIntegral { sigma } => {
            let integrand: Vec<f64> = match sigma {
                SigmaKind::Constant { value } => vec![*value; n],
                SigmaKind::PowerTimeToGo { exponent } => {
                    ttg[..n].iter().map(|&x| x.powf(*exponent)).collect()
                }
                SigmaKind::CosBrownian => w[..n].iter().map(|&x| x.cos()).collect(),
            };
            let values = ito_cumsum(&integrand, dw);
            let xi = *values.last().unwrap();
            Ok((xi, MartingalePath { values, integrand }))
        }
        PayoffSpec::PowerSigma { gamma } => {
            let integrand: Vec<f64> = ttg[..n].iter().map(|&x| x.powf(*gamma)).collect();
            let values = ito_cumsum(&integrand, dw);
            let xi = *values.last().unwrap();
            Ok((xi, MartingalePath { values, integrand }))
        }
        PayoffSpec::TimeAverage => {
            // M_t = ∫₀ᵗ W ds (trapezoid) + W_t (T − t); σᴹ_t = T − t.
            let mut values = Vec::with_capacity(n + 1);
            let mut acc = 0.0;
            values.push(0.0);
            for i in 0..n {
                acc += 0.5 * (w[i] + w[i + 1]) * dt[i];
                values.push(acc + w[i + 1] * ttg[i + 1]);
            }
            let xi = *values.last().unwrap();
            let integrand = ttg[..n].to_vec();
            Ok((xi, MartingalePath { values, integrand }))
        }
        PayoffSpec::TerminalFunction { g } => match g {
            TerminalFn::Identity => {
                let values = w.clone();
                let xi = *values.last().unwrap();
                Ok((xi, MartingalePath { values, integrand: vec![1.0; n] }))
            }
            TerminalFn::SquareMinusHorizon => {
                let nodes = grid.nodes();
                let values: Vec<f64> =
                    w.iter().zip(nodes).map(|(&x, &t)| x * x - t).collect();
                let xi = *values.last().unwrap();
                let integrand = w[..n].iter().map(|&x| 2.0 * x).collect();
                Ok((xi, MartingalePath { values, integrand }))
            }
        },
    }
}

/// Left-point Itô integral of an adapted integrand along one path:
/// returns the running sums `Σ_{j<k} f(t_j) ΔW_j` on all `N+1` nodes.
/// The integrand is never evaluated at `t_N = T`.
pub fn ito_integral(integrand: &[f64], path: &BrownianPath) -> Vec<f64> {
    assert_eq!(integrand.len(), path.increments.len());
    ito_cumsum(integrand, &path.increments)
}

fn ito_cumsum(integrand: &[f64], dw: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(integrand.len() + 1);
    let mut acc = 0.0;
    out.push(acc);
    for (&f, &d) in integrand.iter().zip(dw) {
        acc += f * d;
        out.push(acc);
    }
    out
}
