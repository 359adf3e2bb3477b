//! Representation of terminal random variables as adapted Lebesgue
//! integrals, ξ = ∫₀ᵀ β_u du, with Monte Carlo verification at desk scale.
//!
//! The crate provides:
//!
//! * [`grid`] / [`paths`] — graded time meshes resolving the `(T−t)^{−1}`
//!   singularity, and reproducible counter-based Brownian ensembles;
//! * [`payoff`] — a catalog of targets ξ with closed-form closing
//!   martingales `M_t = E[ξ|F_t]` and integrands `σᴹ` (`dM = σᴹ dW`);
//! * [`rates`] — the canonical minimal-norm rate
//!   `β̂_t = M₀/T + ∫₀ᵗ (T−u)^{−1} dM_u`, its Lebesgue (integration-by-parts)
//!   form, and the explicit pathwise Volterra solve, which agree on `[0, T)`;
//! * [`resolvent`] — the Neumann series of the Volterra kernel
//!   `−(T−t)^{−1}`, with closed-form composition powers cross-checked by
//!   numeric composition;
//! * [`fractional`] — the factorization representation
//!   `β_t = sin(απ)/π (T−t)^{α−1} R_t` through a Riemann–Liouville
//!   fractional integral of the noise, with singular-kernel product
//!   integration;
//! * [`diagnostics`] — truncation-ladder estimates of the regularity
//!   functionals `∫(T−t)^{−1} d⟨M⟩_t`, `L^{2,1}`/`L^{p,1}` norms with
//!   divergence verdicts, minimality/orthogonality checks, the Veraar
//!   quadrature, and a deterministic-drift change-of-measure invariance
//!   check;
//! * [`config`] / [`runner`] — a JSON-configured experiment front end with
//!   bundled presets, CSV/JSON emission, and manifest-based bit-exact
//!   replay.

pub mod config;
pub mod diagnostics;
pub mod error;
pub mod fractional;
pub mod grid;
pub mod ladder;
pub mod paths;
pub mod payoff;
pub mod perturbation;
pub mod rates;
pub mod resolvent;
pub mod rng;
pub mod runner;
pub mod sum;

pub use error::{Error, Result};
