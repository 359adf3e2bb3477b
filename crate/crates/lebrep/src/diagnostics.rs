//! Monte Carlo estimators for the regularity functionals, divergence
//! detection, minimality/orthogonality checks, the Veraar condition, and
//! the deterministic-drift change-of-measure invariance check.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::ladder::{classify, EpsilonLadder, LadderFit, Verdict};
use crate::paths::{BrownianPath, PathBundle};
use crate::payoff::{evaluate_payoff_path, PayoffSpec, SigmaKind, TerminalFn};
use crate::perturbation::{PerturbationProfile, PerturbationSpec};
use crate::rates::{
    canonical_rate_path, integrate_rate_path, lebesgue_form_rate_path, volterra_rate_path,
};
use crate::sum::{mean_and_se, transpose_mean_se};

/// Point estimate with Monte Carlo standard error.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

/// One truncation rung of a reported ladder.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Rung {
    pub epsilon: f64,
    pub value: f64,
    pub se: f64,
}

/// Norm estimates attached to a report.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Norms {
    pub l21: Option<Estimate>,
    pub lp1: Option<LpNorm>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LpNorm {
    pub p: f64,
    pub value: f64,
    pub se: f64,
}

/// Truncated singular-functional estimates with a divergence verdict.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegularityReport {
    pub functional: String,
    pub ladder: Vec<Rung>,
    /// Least-squares slope of the ladder means against log(1/ε), all rungs.
    pub slope: f64,
    pub slope_last3: f64,
    pub relative_increment: f64,
    pub increment_ratio: Option<f64>,
    pub verdict: Verdict,
    pub norms: Norms,
    /// Untruncated quadrature over all nodes below T, when meaningful.
    pub untruncated: Option<Estimate>,
}

/// Assemble a report from per-path ladders (`rows[path][rung]`).
pub fn report_from_path_ladders(
    functional: &str,
    ladder: &EpsilonLadder,
    rows: &[Vec<f64>],
    untruncated: Option<Estimate>,
) -> (RegularityReport, LadderFit) {
    let (means, ses) = transpose_mean_se(rows);
    let fit = classify(ladder, &means);
    let rungs = ladder
        .epsilons
        .iter()
        .zip(means.iter().zip(&ses))
        .map(|(&epsilon, (&value, &se))| Rung { epsilon, value, se })
        .collect();
    let report = RegularityReport {
        functional: functional.to_string(),
        ladder: rungs,
        slope: fit.slope_all,
        slope_last3: fit.slope_last3,
        relative_increment: fit.relative_increment,
        increment_ratio: fit.increment_ratio,
        verdict: fit.verdict,
        norms: Norms::default(),
        untruncated,
    };
    (report, fit)
}

/// Per-path ladder + untruncated total from per-node contributions
/// (`contrib[i]` is the node-i term of the quadrature, Δt included).
fn ladder_and_total(
    grid: &TimeGrid,
    ladder: &EpsilonLadder,
    contrib: impl Iterator<Item = f64>,
) -> (Vec<f64>, f64) {
    let ttg = grid.time_to_go();
    let mut buckets = vec![0.0; ladder.len()];
    let mut total = 0.0;
    for (i, c) in contrib.enumerate() {
        total += c;
        if let Some(k) = ladder.first_rung(ttg[i]) {
            buckets[k] += c;
        }
    }
    (ladder.cumulative(&buckets), total)
}

/// Truncated estimates of `∫₀ᵀ (T−t)^{−1} d⟨M⟩_t` with divergence verdict.
pub fn singular_functional(spec: &PayoffSpec, bundle: &PathBundle) -> Result<RegularityReport> {
    spec.validate()?;
    let grid = bundle.grid();
    let ladder = EpsilonLadder::default_for(grid.horizon());
    let ttg = grid.time_to_go();
    let dt = grid.dt();
    let per_path = bundle.map_paths(|_, path| {
        let (_, m) = evaluate_payoff_path(spec, grid, path).expect("validated spec");
        ladder_and_total(
            grid,
            &ladder,
            m.integrand
                .iter()
                .enumerate()
                .map(|(i, &s)| s * s / ttg[i] * dt[i]),
        )
    });
    let (rows, totals): (Vec<_>, Vec<_>) = per_path.into_iter().unzip();
    let (tv, tse) = mean_and_se(&totals);
    let (mut report, _) = report_from_path_ladders(
        "singular_functional",
        &ladder,
        &rows,
        Some(Estimate { value: tv, se: tse }),
    );
    // σᴹ ≡ 0 edge: a ladder that is identically zero is trivially finite.
    if rows.iter().all(|r| r.iter().all(|&v| v == 0.0)) {
        report.verdict = Verdict::Finite;
    }
    Ok(report)
}

/// How a rate process is produced inside a diagnostic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateSource {
    Canonical,
    LebesgueForm,
    Volterra,
}

fn rate_for(source: RateSource, spec: &PayoffSpec, grid: &TimeGrid, path: &BrownianPath) -> Vec<f64> {
    let (_, m) = evaluate_payoff_path(spec, grid, path).expect("validated spec");
    match source {
        RateSource::Canonical => canonical_rate_path(&m, grid, path),
        RateSource::LebesgueForm => lebesgue_form_rate_path(&m, grid),
        RateSource::Volterra => volterra_rate_path(&m, grid),
    }
}

/// `L^{2,1}`-norm estimate `E ∫ β² dt` with truncation ladder.
pub fn l21_norm(source: RateSource, spec: &PayoffSpec, bundle: &PathBundle) -> Result<RegularityReport> {
    norm_report(source, spec, bundle, 2.0, "l21")
}

/// `L^{p,1}`-norm estimate `E ∫ |β|^p dt`, `p ∈ [1, 2)`, with ladder.
pub fn lp1_norm(
    source: RateSource,
    spec: &PayoffSpec,
    bundle: &PathBundle,
    p: f64,
) -> Result<RegularityReport> {
    if !(1.0..2.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("need p in [1, 2), got {p}")));
    }
    norm_report(source, spec, bundle, p, "lp1")
}

fn norm_report(
    source: RateSource,
    spec: &PayoffSpec,
    bundle: &PathBundle,
    p: f64,
    name: &str,
) -> Result<RegularityReport> {
    spec.validate()?;
    let grid = bundle.grid();
    let ladder = EpsilonLadder::default_for(grid.horizon());
    let dt = grid.dt();
    let per_path = bundle.map_paths(|_, path| {
        let beta = rate_for(source, spec, grid, path);
        ladder_and_total(
            grid,
            &ladder,
            beta.iter().enumerate().map(|(i, &b)| {
                let v = if p == 2.0 { b * b } else { b.abs().powf(p) };
                v * dt[i]
            }),
        )
    });
    let (rows, totals): (Vec<_>, Vec<_>) = per_path.into_iter().unzip();
    let (tv, tse) = mean_and_se(&totals);
    let (mut report, _) = report_from_path_ladders(name, &ladder, &rows, None);
    if p == 2.0 {
        report.norms.l21 = Some(Estimate { value: tv, se: tse });
    } else {
        report.norms.lp1 = Some(LpNorm { p, value: tv, se: tse });
    }
    Ok(report)
}

/// Attach norm fields and classify ladders produced elsewhere (used by the
/// fractional ensemble, whose ladders are accumulated during its own pass).
pub fn report_for_external_ladders(
    name: &str,
    ladder: &EpsilonLadder,
    rows: &[Vec<f64>],
    p: f64,
) -> RegularityReport {
    let (mut report, _) = report_from_path_ladders(name, ladder, rows, None);
    let last: Vec<f64> = rows.iter().map(|r| *r.last().unwrap()).collect();
    let (v, se) = mean_and_se(&last);
    if p == 2.0 {
        report.norms.l21 = Some(Estimate { value: v, se });
    } else {
        report.norms.lp1 = Some(LpNorm { p, value: v, se });
    }
    report
}

/// Orthogonality statistic for one perturbation direction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrthogonalityResult {
    pub perturbation: PerturbationSpec,
    pub estimate: f64,
    pub se: f64,
    /// estimate / SE (0 when the estimate is exactly 0).
    pub statistic: f64,
}

/// Norm-gap estimates `‖β̂+εγ‖² − ‖β̂‖²` for one direction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MinimalityResult {
    pub perturbation: PerturbationSpec,
    pub gaps: Vec<GapEstimate>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GapEstimate {
    pub epsilon: f64,
    pub value: f64,
    pub se: f64,
}

/// Step sizes used for the norm-gap expansion.
pub const GAP_EPSILONS: [f64; 3] = [0.5, 1.0, 2.0];

/// One pass over the ensemble computing, with common random numbers, the
/// orthogonality statistics `E ∫ β̂ γ du / SE` and the norm gaps for every
/// perturbation. `β̂` is the canonical rate of `spec`.
pub fn variational_checks(
    spec: &PayoffSpec,
    bundle: &PathBundle,
    perturbations: &[PerturbationSpec],
) -> Result<(Vec<OrthogonalityResult>, Vec<MinimalityResult>)> {
    spec.validate()?;
    let grid = bundle.grid();
    let profiles: Vec<PerturbationProfile> = perturbations
        .iter()
        .map(|&p| PerturbationProfile::build(p, grid))
        .collect::<Result<_>>()?;
    let dt = grid.dt();
    let n = grid.n_steps();
    // Per path and perturbation: [∫β̂γ, gap(0.5), gap(1), gap(2)].
    let per_path: Vec<Vec<[f64; 4]>> = bundle.map_paths(|_, path| {
        let beta = rate_for(RateSource::Canonical, spec, grid, path);
        profiles
            .iter()
            .map(|prof| {
                let chi = path.values[prof.pivot_index].tanh();
                let mut cross = 0.0;
                let mut gamma_sq = 0.0;
                for i in prof.pivot_index..n {
                    let g = chi * prof.profile[i];
                    cross += beta[i] * g * dt[i];
                    gamma_sq += g * g * dt[i];
                }
                let mut out = [cross, 0.0, 0.0, 0.0];
                for (k, &eps) in GAP_EPSILONS.iter().enumerate() {
                    // (β+εγ)² − β² = 2εβγ + ε²γ², integrated.
                    out[k + 1] = 2.0 * eps * cross + eps * eps * gamma_sq;
                }
                out
            })
            .collect()
    });
    let mut orth = Vec::with_capacity(profiles.len());
    let mut min = Vec::with_capacity(profiles.len());
    for (j, prof) in profiles.iter().enumerate() {
        let col = |k: usize| -> Vec<f64> { per_path.iter().map(|row| row[j][k]).collect() };
        let (est, se) = mean_and_se(&col(0));
        let statistic = if est == 0.0 { 0.0 } else { est / se };
        orth.push(OrthogonalityResult { perturbation: prof.spec, estimate: est, se, statistic });
        let gaps = GAP_EPSILONS
            .iter()
            .enumerate()
            .map(|(k, &epsilon)| {
                let (value, se) = mean_and_se(&col(k + 1));
                GapEstimate { epsilon, value, se }
            })
            .collect();
        min.push(MinimalityResult { perturbation: prof.spec, gaps });
    }
    Ok((orth, min))
}

/// Per-path quadrature of the Veraar condition
/// `∫₀ᵀ (∫₀ˢ (T−t)^{−2} d⟨M⟩_t)^{1/2} ds` (left-point outer integral),
/// reported with a truncation ladder and verdict.
pub fn veraar_condition(spec: &PayoffSpec, bundle: &PathBundle) -> Result<RegularityReport> {
    spec.validate()?;
    let grid = bundle.grid();
    let ladder = EpsilonLadder::default_for(grid.horizon());
    let ttg = grid.time_to_go();
    let dt = grid.dt();
    let n = grid.n_steps();
    let per_path = bundle.map_paths(|_, path| {
        let (_, m) = evaluate_payoff_path(spec, grid, path).expect("validated spec");
        let mut inner: f64 = 0.0;
        let contributions = (0..n).map(|i| {
            let c = inner.max(0.0).sqrt() * dt[i];
            inner += m.integrand[i] * m.integrand[i] / (ttg[i] * ttg[i]) * dt[i];
            c
        });
        ladder_and_total(grid, &ladder, contributions)
    });
    let (rows, totals): (Vec<_>, Vec<_>) = per_path.into_iter().unzip();
    let (tv, tse) = mean_and_se(&totals);
    let (mut report, _) = report_from_path_ladders(
        "veraar_condition",
        &ladder,
        &rows,
        Some(Estimate { value: tv, se: tse }),
    );
    if rows.iter().all(|r| r.iter().all(|&v| v == 0.0)) {
        report.verdict = Verdict::Finite;
    }
    Ok(report)
}

/// Dense deterministic reference for the Veraar quadrature of ξ = W_T:
/// `∫₀ᵀ ((T−s)^{−1} − T^{−1})^{1/2} ds` via midpoint quadrature with the
/// substitution `T−s = T v²` that removes the endpoint singularity.
pub fn veraar_reference_terminal_identity(horizon: f64, panels: usize) -> f64 {
    // With T−s = T v², ds = 2T v dv and the integrand becomes
    // √(1−v²)/v · √(1/T); the integral is ∫₀¹ 2√T √(1−v²) dv.
    let mut sum = 0.0;
    let h = 1.0 / panels as f64;
    for k in 0..panels {
        let v = (k as f64 + 0.5) * h;
        sum += 2.0 * horizon.sqrt() * (1.0 - v * v).sqrt() * h;
    }
    sum
}

/// Regression diagnostic for the divergence mechanism of ξ = g(W_T).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GprimeReport {
    pub g: TerminalFn,
    pub ladder: Vec<Rung>,
    /// Slope of the ensemble-mean truncated integral against log(1/ε).
    pub slope: f64,
    /// Monte Carlo estimate of `E[(g′(W_T))²]` (the predicted slope).
    pub gprime_sq_terminal: Estimate,
}

/// Truncated values `G(ε) = Σ_{t_i ≤ T−ε} (g′(W_{t_i}))² (T−t_i)^{−1} Δt_i`,
/// fitted against log(1/ε); the slope estimates `E[(g′(W_T))²]`.
pub fn gprime_divergence(g: TerminalFn, bundle: &PathBundle) -> Result<GprimeReport> {
    let grid = bundle.grid();
    let ladder = EpsilonLadder::default_for(grid.horizon());
    let ttg = grid.time_to_go();
    let dt = grid.dt();
    let n = grid.n_steps();
    let gprime = |x: f64| -> f64 {
        match g {
            TerminalFn::Identity => 1.0,
            TerminalFn::SquareMinusHorizon => 2.0 * x,
        }
    };
    let per_path = bundle.map_paths(|_, path| {
        let (rows, _) = ladder_and_total(
            grid,
            &ladder,
            (0..n).map(|i| {
                let gp = gprime(path.values[i]);
                gp * gp / ttg[i] * dt[i]
            }),
        );
        let gpt = gprime(path.values[n]);
        (rows, gpt * gpt)
    });
    let (rows, terminal): (Vec<_>, Vec<_>) = per_path.into_iter().unzip();
    let (means, ses) = transpose_mean_se(&rows);
    let slope = crate::sum::ls_slope(&ladder.log_inv_eps(), &means);
    let (tv, tse) = mean_and_se(&terminal);
    let rungs = ladder
        .epsilons
        .iter()
        .zip(means.iter().zip(&ses))
        .map(|(&epsilon, (&value, &se))| Rung { epsilon, value, se })
        .collect();
    Ok(GprimeReport {
        g,
        ladder: rungs,
        slope,
        gprime_sq_terminal: Estimate { value: tv, se: tse },
    })
}

/// Invariance of the singular functional under a deterministic drift change.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GirsanovResult {
    pub theta: f64,
    pub unweighted: Estimate,
    pub weighted: Estimate,
    pub weight_mean: Estimate,
}

/// For ξ = ∫σdW with deterministic σ: the quadratic variation of the
/// closing martingale is σ²dt under both the reference measure and the
/// measure tilted by a deterministic drift θ, so the singular-functional
/// estimate must agree between plain and importance-weighted paths, with
/// weights `exp(−θ W_T − ½θ²T)`.
pub fn girsanov_invariance(
    sigma: SigmaKind,
    theta: f64,
    bundle: &PathBundle,
) -> Result<GirsanovResult> {
    if matches!(sigma, SigmaKind::CosBrownian) {
        return Err(Error::UnsupportedCombination(
            "girsanov invariance check requires a deterministic sigma".into(),
        ));
    }
    let grid = bundle.grid();
    let spec = PayoffSpec::SigmaIntegral { sigma };
    let ttg = grid.time_to_go();
    let dt = grid.dt();
    let horizon = grid.horizon();
    let per_path = bundle.map_paths(|_, path| {
        let (_, m) = evaluate_payoff_path(&spec, grid, path).expect("validated spec");
        let f: f64 = m
            .integrand
            .iter()
            .enumerate()
            .map(|(i, &s)| s * s / ttg[i] * dt[i])
            .sum();
        let w_t = *path.values.last().unwrap();
        let weight = (-theta * w_t - 0.5 * theta * theta * horizon).exp();
        (f, weight)
    });
    let (fs, ws): (Vec<f64>, Vec<f64>) = per_path.into_iter().unzip();
    let wf: Vec<f64> = fs.iter().zip(&ws).map(|(&f, &w)| f * w).collect();
    let (uv, use_) = mean_and_se(&fs);
    let (wv, wse) = mean_and_se(&wf);
    let (wm, wmse) = mean_and_se(&ws);
    Ok(GirsanovResult {
        theta,
        unweighted: Estimate { value: uv, se: use_ },
        weighted: Estimate { value: wv, se: wse },
        weight_mean: Estimate { value: wm, se: wmse },
    })
}

/// RMS of `∫βdt − ξ` over an ensemble, absolute and relative to sd(ξ).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ReproductionError {
    pub rms_abs: f64,
    pub rms_relative: f64,
    pub sd_xi: f64,
    /// Standard error of the squared-error mean (for refinement ratios).
    pub se_mean_sq: f64,
}

/// Reproduction error of a strong-case construction over an ensemble.
pub fn reproduction_error(
    source: RateSource,
    spec: &PayoffSpec,
    bundle: &PathBundle,
) -> Result<ReproductionError> {
    spec.validate()?;
    let grid = bundle.grid();
    let per_path = bundle.map_paths(|_, path| {
        let (xi, m) = evaluate_payoff_path(spec, grid, path).expect("validated spec");
        let beta = match source {
            RateSource::Canonical => canonical_rate_path(&m, grid, path),
            RateSource::LebesgueForm => lebesgue_form_rate_path(&m, grid),
            RateSource::Volterra => volterra_rate_path(&m, grid),
        };
        (integrate_rate_path(&beta, grid) - xi, xi)
    });
    let (errs, xis): (Vec<f64>, Vec<f64>) = per_path.into_iter().unzip();
    Ok(reproduction_from_samples(&errs, &xis))
}

/// Assemble reproduction statistics from raw per-path errors and ξ values.
pub fn reproduction_from_samples(errs: &[f64], xis: &[f64]) -> ReproductionError {
    let sq: Vec<f64> = errs.iter().map(|&e| e * e).collect();
    let (msq, se_mean_sq) = mean_and_se(&sq);
    let rms_abs = msq.sqrt();
    let sd_xi = crate::sum::std_dev(xis);
    ReproductionError { rms_abs, rms_relative: rms_abs / sd_xi, sd_xi, se_mean_sq }
}
