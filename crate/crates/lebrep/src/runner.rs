//! Experiment orchestration: represent / diagnose / sweep runs, file
//! emission, and manifest-based bit-exact replay.
//!
//! Every run writes a `manifest.json` capturing the full configuration
//! (plus preset name, sweep parameters, the resolved fractional order, a
//! SHA-256 of the canonical config serialization, and the headline results).
//! Replaying a manifest re-executes the run from the embedded config and
//! reproduces every output file byte for byte, independent of worker count:
//! the path generator is counter-based and all reductions are order-fixed.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{DiagnosticCheck, ExperimentConfig, RepresentationConfig, SweepConfig};
use crate::diagnostics::{
    self, girsanov_invariance, gprime_divergence, l21_norm, lp1_norm, reproduction_error,
    reproduction_from_samples, singular_functional, variational_checks, veraar_condition,
    RateSource, RegularityReport, ReproductionError,
};
use crate::error::{Error, Result};
use crate::fractional::{fractional_ensemble, weight_row, FractionalEnsemble};
use crate::grid::{build_grid, TimeGrid};
use crate::ladder::Verdict;
use crate::paths::{generate_paths, PathBundle};
use crate::payoff::{evaluate_payoff_path, PayoffSpec, SigmaKind};
use crate::perturbation::default_pivots;
use crate::rates::{RateConstruction, RateProcess};
use crate::resolvent::resolvent_table;

/// Maximum paths / nodes-per-path emitted to the rate CSV (the full
/// ensembles are far too large to dump; the thinned CSV is for plotting).
const CSV_MAX_PATHS: usize = 16;
const CSV_MAX_NODES: usize = 1024;
/// Numeric composition orders cross-checked in the resolvent table.
const RESOLVENT_NUMERIC_ORDERS: usize = 4;

/// Run manifest for bit-exact replay.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parameter: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_resolved: Option<f64>,
    pub config: ExperimentConfig,
    pub results: serde_json::Value,
    pub config_sha256: String,
}

fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn check_out_dir(dir: &Path) -> Result<()> {
    if !dir.is_dir() {
        return Err(Error::InvalidParameter(format!(
            "output directory does not exist: {}",
            dir.display()
        )));
    }
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn write_manifest(
    dir: &Path,
    command: &str,
    preset: Option<&str>,
    sweep: Option<&SweepConfig>,
    alpha: Option<f64>,
    config: &ExperimentConfig,
    results: serde_json::Value,
) -> Result<PathBuf> {
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        command: command.to_string(),
        preset: preset.map(str::to_string),
        parameter: sweep.map(|s| s.parameter.clone()),
        values: sweep.map(|s| s.values.clone()),
        alpha_resolved: alpha,
        config: config.clone(),
        results,
        config_sha256: sha256_hex(&serde_json::to_vec(config)?),
    };
    let path = dir.join("manifest.json");
    write_json(&path, &manifest)?;
    Ok(path)
}

fn build_bundle(config: &ExperimentConfig) -> Result<(TimeGrid, PathBundle)> {
    let grid = build_grid(config.grid.t, config.grid.n, config.grid.q)?;
    let bundle = generate_paths(grid.clone(), config.mc.n_paths, config.mc.seed)?;
    Ok((grid, bundle))
}

fn rate_source_for(rep: &RepresentationConfig) -> Option<RateSource> {
    match rep {
        RepresentationConfig::Canonical => Some(RateSource::Canonical),
        RepresentationConfig::Lebesgue => Some(RateSource::LebesgueForm),
        RepresentationConfig::Volterra => Some(RateSource::Volterra),
        RepresentationConfig::Fractional { .. } => None,
    }
}

/// Lazily computed fractional ensemble shared between the reproduction
/// summary and the norm diagnostics of a single run.
struct FracCache {
    ens: Option<FractionalEnsemble>,
}

impl FracCache {
    fn get(
        &mut self,
        config: &ExperimentConfig,
        bundle: &PathBundle,
        alpha: f64,
    ) -> Result<&FractionalEnsemble> {
        if self.ens.is_none() {
            let p = config
                .diagnostics
                .iter()
                .find_map(|c| match c {
                    DiagnosticCheck::Lp1 { p } => Some(*p),
                    _ => None,
                })
                .unwrap_or(1.5);
            self.ens = Some(fractional_ensemble(&config.payoff, bundle, alpha, p)?);
        }
        Ok(self.ens.as_ref().unwrap())
    }
}

fn write_fractional_rate_csv(
    path: &Path,
    config: &ExperimentConfig,
    grid: &TimeGrid,
    alpha: f64,
) -> Result<()> {
    let csv_paths = config.mc.n_paths.min(CSV_MAX_PATHS);
    let bundle = generate_paths(grid.clone(), csv_paths, config.mc.seed)?;
    let n = grid.n_steps();
    let stride = (n / CSV_MAX_NODES).max(1);
    let c = (alpha * std::f64::consts::PI).sin() / std::f64::consts::PI;
    let d_rows: Vec<Vec<f64>> = bundle.map_paths(|_, p| {
        let (_, m) = evaluate_payoff_path(&config.payoff, grid, p).expect("validated spec");
        m.integrand.iter().zip(&p.increments).map(|(&s, &dw)| s * dw).collect()
    });
    let mut out = fs::File::create(path)?;
    writeln!(out, "path,t,beta")?;
    let mut rows: Vec<(usize, f64)> = Vec::new();
    for i in (0..n).step_by(stride) {
        let w = weight_row(grid, alpha, i);
        let pre = c * grid.time_to_go()[i].powf(alpha - 1.0);
        for (p, d) in d_rows.iter().enumerate() {
            rows.push((p, pre * crate::fractional::dot(&d[..i], &w)));
        }
        for (p, beta) in rows.drain(..) {
            writeln!(out, "{p},{:.16e},{:.16e}", grid.left_nodes()[i], beta)?;
        }
    }
    Ok(())
}

/// Execute one diagnostic check, writing its report file(s). Returns a
/// short summary value for the manifest.
fn run_check(
    check: &DiagnosticCheck,
    config: &ExperimentConfig,
    grid: &TimeGrid,
    bundle: &PathBundle,
    frac: &mut FracCache,
    alpha: Option<f64>,
    dir: &Path,
) -> Result<serde_json::Value> {
    let wants_json = config.wants_json();
    let emit = |name: String, value: &dyn erased_report::ErasedSerialize| -> Result<()> {
        if wants_json {
            let path = dir.join(format!("report_{name}.json"));
            let mut text = value.to_pretty()?;
            text.push('\n');
            fs::write(path, text)?;
        }
        Ok(())
    };
    let brief_report = |r: &RegularityReport| {
        serde_json::json!({"verdict": r.verdict, "slope": r.slope, "slope_last3": r.slope_last3})
    };
    match check {
        DiagnosticCheck::SingularFunctional => {
            let report = singular_functional(&config.payoff, bundle)?;
            let brief = brief_report(&report);
            emit("singular_functional".into(), &report)?;
            Ok(brief)
        }
        DiagnosticCheck::L21 => {
            let report = match alpha {
                Some(a) => {
                    let ens = frac.get(config, bundle, a)?;
                    diagnostics::report_for_external_ladders("l21", &ens.ladder, &ens.l21, 2.0)
                }
                None => {
                    let source = rate_source_for(&config.representation).unwrap();
                    l21_norm(source, &config.payoff, bundle)?
                }
            };
            let brief = brief_report(&report);
            emit("l21".into(), &report)?;
            Ok(brief)
        }
        DiagnosticCheck::Lp1 { p } => {
            let report = match alpha {
                Some(a) => {
                    let ens = frac.get(config, bundle, a)?;
                    if (ens.p - p).abs() > 1e-12 {
                        return Err(Error::InvalidParameter(format!(
                            "lp1 exponent {p} does not match the ensemble exponent {}",
                            ens.p
                        )));
                    }
                    diagnostics::report_for_external_ladders("lp1", &ens.ladder, &ens.lp1, *p)
                }
                None => {
                    let source = rate_source_for(&config.representation).unwrap();
                    lp1_norm(source, &config.payoff, bundle, *p)?
                }
            };
            let brief = brief_report(&report);
            emit(format!("lp1_p{p}"), &report)?;
            Ok(brief)
        }
        DiagnosticCheck::Orthogonality | DiagnosticCheck::Minimality => {
            let pivots = default_pivots(grid.horizon());
            let (orth, min) = variational_checks(&config.payoff, bundle, &pivots)?;
            match check {
                DiagnosticCheck::Orthogonality => {
                    let max_stat =
                        orth.iter().map(|o| o.statistic.abs()).fold(0.0f64, f64::max);
                    emit("orthogonality".into(), &orth)?;
                    Ok(serde_json::json!({"max_abs_statistic": max_stat}))
                }
                _ => {
                    emit("minimality".into(), &min)?;
                    let min_gap = min
                        .iter()
                        .flat_map(|m| m.gaps.iter().map(|g| g.value))
                        .fold(f64::INFINITY, f64::min);
                    Ok(serde_json::json!({"min_gap": min_gap}))
                }
            }
        }
        DiagnosticCheck::Veraar => {
            let report = veraar_condition(&config.payoff, bundle)?;
            let brief = serde_json::json!({
                "verdict": report.verdict,
                "value": report.untruncated.map(|e| e.value),
            });
            emit("veraar".into(), &report)?;
            Ok(brief)
        }
        DiagnosticCheck::Gprime => {
            let g = match &config.payoff {
                PayoffSpec::TerminalFunction { g } => *g,
                other => {
                    return Err(Error::UnsupportedCombination(format!(
                        "gprime check needs a terminal_function payoff, got {other:?}"
                    )))
                }
            };
            let report = gprime_divergence(g, bundle)?;
            let brief = serde_json::json!({"slope": report.slope});
            emit("gprime".into(), &report)?;
            Ok(brief)
        }
        DiagnosticCheck::Girsanov { theta } => {
            let sigma = match &config.payoff {
                PayoffSpec::SigmaIntegral { sigma } => *sigma,
                PayoffSpec::PowerSigma { gamma } => SigmaKind::PowerTimeToGo { exponent: *gamma },
                other => {
                    return Err(Error::UnsupportedCombination(format!(
                        "girsanov check needs a deterministic sigma payoff, got {other:?}"
                    )))
                }
            };
            let res = girsanov_invariance(sigma, *theta, bundle)?;
            let brief = serde_json::json!({
                "unweighted": res.unweighted.value,
                "weighted": res.weighted.value,
                "weight_mean": res.weight_mean.value,
            });
            emit("girsanov".into(), &res)?;
            Ok(brief)
        }
        DiagnosticCheck::Resolvent { m } => {
            let table = resolvent_table(grid, *m, RESOLVENT_NUMERIC_ORDERS)?;
            if config.wants_csv() {
                let mut out = fs::File::create(dir.join("resolvent.csv"))?;
                table.write_csv(&mut out)?;
            }
            let brief = serde_json::json!({
                "m": m,
                "max_resolvent_error": table.max_resolvent_error(),
                "max_composition_error": table.max_composition_error(),
            });
            if wants_json {
                let path = dir.join("report_resolvent.json");
                let mut text = serde_json::to_string_pretty(&brief)?;
                text.push('\n');
                fs::write(path, text)?;
            }
            Ok(brief)
        }
    }
}

/// Tiny helper so `run_check` can emit heterogeneous report types through
/// one closure without boxing serde generics at every call site.
mod erased_report {
    use serde::Serialize;

    pub trait ErasedSerialize {
        fn to_pretty(&self) -> serde_json::Result<String>;
    }

    impl<T: Serialize> ErasedSerialize for T {
        fn to_pretty(&self) -> serde_json::Result<String> {
            serde_json::to_string_pretty(self)
        }
    }
}

/// Construct the rate ensemble, write the (thinned) rate CSV and the
/// reproduction summary, run any configured diagnostics, and write the
/// manifest. Returns the reproduction summary.
pub fn run_represent(
    config: &ExperimentConfig,
    out_dir: &Path,
    preset: Option<&str>,
) -> Result<ReproductionError> {
    check_out_dir(out_dir)?;
    config.payoff.validate()?;
    let alpha = config.representation.resolve_alpha()?;
    let (grid, bundle) = build_bundle(config)?;

    let mut frac = FracCache { ens: None };
    let repro = match alpha {
        None => {
            let source = rate_source_for(&config.representation).unwrap();
            let r = reproduction_error(source, &config.payoff, &bundle)?;
            if config.wants_csv() {
                let construction = match source {
                    RateSource::Canonical => RateConstruction::Canonical,
                    RateSource::LebesgueForm => RateConstruction::LebesgueForm,
                    RateSource::Volterra => RateConstruction::Volterra,
                };
                let csv_bundle = generate_paths(
                    grid.clone(),
                    config.mc.n_paths.min(CSV_MAX_PATHS),
                    config.mc.seed,
                )?;
                let rp = RateProcess::build(construction, &config.payoff, &csv_bundle)?;
                let mut out = fs::File::create(out_dir.join("rate.csv"))?;
                rp.write_csv(&mut out, CSV_MAX_PATHS, CSV_MAX_NODES)?;
            }
            r
        }
        Some(a) => {
            if !config.payoff.is_sigma_integral_form() {
                return Err(Error::UnsupportedCombination(
                    "the fractional representation requires a payoff of the form xi = \
                     \u{222b}\u{3c3} dW"
                        .into(),
                ));
            }
            let ens = frac.get(config, &bundle, a)?;
            let errs: Vec<f64> =
                ens.reproduction.iter().zip(&ens.xi).map(|(&r, &x)| r - x).collect();
            let r = reproduction_from_samples(&errs, &ens.xi);
            if config.wants_csv() {
                write_fractional_rate_csv(&out_dir.join("rate.csv"), config, &grid, a)?;
            }
            r
        }
    };

    let mut check_results = serde_json::Map::new();
    for check in &config.diagnostics {
        let brief = run_check(check, config, &grid, &bundle, &mut frac, alpha, out_dir)?;
        check_results.insert(check.name().to_string(), brief);
    }

    let results = serde_json::json!({
        "reproduction": repro,
        "checks": serde_json::Value::Object(check_results),
    });
    write_manifest(out_dir, "represent", preset, None, alpha, config, results)?;
    Ok(repro)
}

/// Run every configured diagnostic, writing one report per check plus the
/// manifest.
pub fn run_diagnose(config: &ExperimentConfig, out_dir: &Path, preset: Option<&str>) -> Result<()> {
    check_out_dir(out_dir)?;
    config.payoff.validate()?;
    let alpha = config.representation.resolve_alpha()?;
    let (grid, bundle) = build_bundle(config)?;
    let mut frac = FracCache { ens: None };
    let mut check_results = serde_json::Map::new();
    for check in &config.diagnostics {
        let brief = run_check(check, config, &grid, &bundle, &mut frac, alpha, out_dir)?;
        check_results.insert(check.name().to_string(), brief);
    }
    let results = serde_json::json!({ "checks": serde_json::Value::Object(check_results) });
    write_manifest(out_dir, "diagnose", preset, None, alpha, config, results)?;
    Ok(())
}

/// One row of a parameter sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub parameter: String,
    pub value: f64,
    pub p: Option<f64>,
    pub rms_abs: f64,
    pub rms_relative: f64,
    pub slope: f64,
    pub verdict: Verdict,
    pub norm_value: Option<f64>,
    pub norm_se: Option<f64>,
}

fn sweep_row(parameter: &str, value: f64, base: &ExperimentConfig) -> Result<SweepRow> {
    let mut config = base.clone();
    config.sweep = None;
    let mut p_used: Option<f64> = None;
    match parameter {
        "gamma" => config.payoff = PayoffSpec::PowerSigma { gamma: value },
        "alpha" => {
            config.representation =
                RepresentationConfig::Fractional { alpha: Some(value), auto_from_p: None };
            // Report an exponent inside the finiteness window α ∈ (1−1/p, 1/2),
            // i.e. p < 1/(1−α): take the midpoint of (1, 1/(1−α)).
            p_used = Some(0.5 * (1.0 + 1.0 / (1.0 - value)));
        }
        "p" => {
            config.representation =
                RepresentationConfig::Fractional { alpha: None, auto_from_p: Some(value) };
            p_used = Some(value);
        }
        "N" => {
            if value <= 0.0 || value.fract() != 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "N sweep values must be positive integers, got {value}"
                )));
            }
            config.grid.n = value as usize;
        }
        other => {
            return Err(Error::InvalidParameter(format!("unsupported sweep parameter: {other}")))
        }
    }
    config.payoff.validate()?;
    let alpha = config.representation.resolve_alpha()?;
    let (_, bundle) = build_bundle(&config)?;
    match alpha {
        None => {
            let source = rate_source_for(&config.representation).unwrap();
            let repro = reproduction_error(source, &config.payoff, &bundle)?;
            let report = singular_functional(&config.payoff, &bundle)?;
            let norm = report.untruncated;
            Ok(SweepRow {
                parameter: parameter.to_string(),
                value,
                p: None,
                rms_abs: repro.rms_abs,
                rms_relative: repro.rms_relative,
                slope: report.slope,
                verdict: report.verdict,
                norm_value: norm.map(|e| e.value),
                norm_se: norm.map(|e| e.se),
            })
        }
        Some(a) => {
            let p = p_used.unwrap();
            let ens = fractional_ensemble(&config.payoff, &bundle, a, p)?;
            let errs: Vec<f64> =
                ens.reproduction.iter().zip(&ens.xi).map(|(&r, &x)| r - x).collect();
            let repro = reproduction_from_samples(&errs, &ens.xi);
            let report = diagnostics::report_for_external_ladders("lp1", &ens.ladder, &ens.lp1, p);
            let norm = report.norms.lp1;
            Ok(SweepRow {
                parameter: parameter.to_string(),
                value,
                p: Some(p),
                rms_abs: repro.rms_abs,
                rms_relative: repro.rms_relative,
                slope: report.slope,
                verdict: report.verdict,
                norm_value: norm.map(|e| e.value),
                norm_se: norm.map(|e| e.se),
            })
        }
    }
}

/// Sweep one parameter over a list of values; one CSV row per value.
pub fn run_sweep(
    config: &ExperimentConfig,
    out_dir: &Path,
    preset: Option<&str>,
    sweep: &SweepConfig,
) -> Result<Vec<SweepRow>> {
    check_out_dir(out_dir)?;
    let rows: Vec<SweepRow> = sweep
        .values
        .iter()
        .map(|&v| sweep_row(&sweep.parameter, v, config))
        .collect::<Result<_>>()?;
    if config.wants_csv() {
        let mut out = fs::File::create(out_dir.join("sweep.csv"))?;
        writeln!(
            out,
            "parameter,value,p,rms_abs,rms_relative,slope,verdict,norm_value,norm_se"
        )?;
        for r in &rows {
            let opt = |o: Option<f64>| o.map(|x| format!("{x:.16e}")).unwrap_or_default();
            writeln!(
                out,
                "{},{:.16e},{},{:.16e},{:.16e},{:.16e},{:?},{},{}",
                r.parameter,
                r.value,
                opt(r.p),
                r.rms_abs,
                r.rms_relative,
                r.slope,
                r.verdict,
                opt(r.norm_value),
                opt(r.norm_se),
            )?;
        }
    }
    if config.wants_json() {
        write_json(&out_dir.join("sweep.json"), &rows)?;
    }
    let results = serde_json::json!({ "rows": rows });
    write_manifest(out_dir, "sweep", preset, Some(sweep), None, config, results)?;
    Ok(rows)
}

/// Re-execute a run from its manifest, reproducing all outputs bitwise.
pub fn replay(manifest_path: &Path, out_dir: &Path) -> Result<()> {
    let text = fs::read_to_string(manifest_path)?;
    let manifest: Manifest = serde_json::from_str(&text)?;
    let preset = manifest.preset.as_deref();
    match manifest.command.as_str() {
        "represent" => {
            run_represent(&manifest.config, out_dir, preset)?;
        }
        "diagnose" => run_diagnose(&manifest.config, out_dir, preset)?,
        "sweep" => {
            let sweep = match (&manifest.parameter, &manifest.values) {
                (Some(p), Some(v)) => {
                    SweepConfig { parameter: p.clone(), values: v.clone() }
                }
                _ => manifest.config.sweep.clone().ok_or_else(|| {
                    Error::InvalidParameter("sweep manifest lacks parameter/values".into())
                })?,
            };
            run_sweep(&manifest.config, out_dir, preset, &sweep)?;
        }
        other => {
            return Err(Error::InvalidParameter(format!("unknown manifest command: {other}")))
        }
    }
    Ok(())
}
