//! Subcommand implementations: run the library computation on a resolved
//! configuration and persist the results.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use mzmetry::estimation::{variance_error_propagation, Target};
use mzmetry::experiments::{
    diameter_scaling, diameter_slopes, log_spaced_photon_numbers, mc_campaign,
    probability_surface, DeltaRule, GridSpec, ScalingStudy, SlopeFit,
};
use mzmetry::phase_space::Channel;
use mzmetry::protocol::ProtocolConfig;
use mzmetry::verify::{run_group, VerifyGroup, ALL_GROUPS};

use crate::config::{self, DiametersConfig, EstimateConfig, SurfaceConfig};
use crate::output;
use crate::AppError;

pub fn cmd_surface(cfg: &SurfaceConfig, out_dir: &Path) -> Result<(), AppError> {
    let channel = Channel::from_index(cfg.channel)?;
    let grid = GridSpec::new(
        (cfg.beta_range[0], cfg.beta_range[1]),
        (cfg.phi_range[0], cfg.phi_range[1]),
        cfg.nodes,
        cfg.nodes,
    )?;
    let rows = probability_surface(&grid, cfg.n, cfg.eta, channel)?;

    let mut csv = String::from("beta,phi_minus,P\n");
    for row in &rows {
        let _ = writeln!(csv, "{},{},{}", row.beta, row.phi_minus, row.p);
    }
    output::write_atomic(out_dir, "surface.csv", &csv)?;
    output::write_manifest(
        out_dir,
        "surface",
        config::digest(cfg)?,
        cfg.seed,
        &["surface.csv"],
    )?;
    println!(
        "wrote {} surface rows to {}",
        rows.len(),
        out_dir.join("surface.csv").display()
    );
    Ok(())
}

/// Mirror of a slope fit for serialization.
#[derive(Debug, Serialize)]
struct SlopeJson {
    slope: f64,
    intercept: f64,
    rms_residual: f64,
    points: usize,
}

impl From<SlopeFit> for SlopeJson {
    fn from(fit: SlopeFit) -> Self {
        SlopeJson {
            slope: fit.slope,
            intercept: fit.intercept,
            rms_residual: fit.rms_residual,
            points: fit.points,
        }
    }
}

#[derive(Debug, Serialize)]
struct SlopesJson {
    beta_star: SlopeJson,
    phi_star: SlopeJson,
}

pub fn cmd_diameters(cfg: &DiametersConfig, out_dir: &Path) -> Result<(), AppError> {
    let n_values =
        log_spaced_photon_numbers(cfg.n_log_range[0], cfg.n_log_range[1], cfg.per_decade)?;
    // The offset rule only matters for variance studies; the level-curve
    // scan never evaluates it, so any positive coefficient satisfies the
    // constructor.
    let study = ScalingStudy::new(n_values, cfg.eta, cfg.p0, DeltaRule::COverN(0.5))?;
    let rows = diameter_scaling(&study);
    // The run succeeds when at least two rows carry diameters; rows whose
    // level curve leaves the fundamental domain only fill the error column.
    let (beta_fit, phi_fit) = diameter_slopes(&rows)?;

    let mut csv = String::from("N,beta_star,phi_star,error\n");
    for row in &rows {
        let star = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            row.n_photons,
            star(row.beta_star),
            star(row.phi_star),
            row.error.as_deref().unwrap_or_default()
        );
    }
    output::write_atomic(out_dir, "diameters.csv", &csv)?;
    output::write_json(
        out_dir,
        "slopes.json",
        &SlopesJson {
            beta_star: beta_fit.into(),
            phi_star: phi_fit.into(),
        },
    )?;
    output::write_manifest(
        out_dir,
        "diameters",
        config::digest(cfg)?,
        cfg.seed,
        &["diameters.csv", "slopes.json"],
    )?;
    let flagged = rows.iter().filter(|r| r.error.is_some()).count();
    println!(
        "wrote {} diameter rows ({} flagged); slopes beta_star {:.4}, phi_star {:.4}",
        rows.len(),
        flagged,
        beta_fit.slope,
        phi_fit.slope
    );
    Ok(())
}

/// Campaign summary as persisted: every aggregate the library reports plus
/// the loss rescale factor of the variance relative to the lossless
/// protocol, 1 / (eta (2 - eta)).
#[derive(Debug, Serialize)]
struct McSummaryJson {
    target: &'static str,
    true_offset: f64,
    p_true: f64,
    trials_per_experiment: u64,
    experiments: u64,
    master_seed: u64,
    mean_estimate: f64,
    sample_variance: f64,
    predicted_variance: f64,
    variance_ratio: f64,
    limit_variance: f64,
    limit_ratio: f64,
    clamped_low: u64,
    clamped_high: u64,
    clamp_warning: bool,
    loss_factor: f64,
}

pub fn cmd_estimate(cfg: &EstimateConfig, out_dir: &Path) -> Result<(), AppError> {
    let target = Target::from_str(&cfg.target)?;
    let base = ProtocolConfig::new(cfg.n, 0.0, 0.0, 0.0, 0.0, cfg.eta, Channel::One)?;

    // Quadratic error propagation is only trustworthy when the estimator
    // does not pile up against the probability maximum: require the true
    // offset to sit at least five predicted standard deviations away.
    let predicted = match target {
        Target::Beta => {
            variance_error_propagation(cfg.delta, 0.0, cfg.n, cfg.eta, cfg.trials, target)?
        }
        Target::PhiMinus => {
            variance_error_propagation(0.0, cfg.delta, cfg.n, cfg.eta, cfg.trials, target)?
        }
    };
    let floor = 5.0 * predicted.sqrt();
    if cfg.delta < floor && !cfg.unsafe_offset {
        return Err(AppError::Run(format!(
            "offset delta = {} is below five predicted standard deviations of the \
             estimator ({floor:e}); estimates would clamp against the maximum. \
             Increase --delta or pass --unsafe-offset to run anyway",
            cfg.delta
        )));
    }

    let campaign = mc_campaign(&base, cfg.delta, cfg.trials, cfg.experiments, cfg.seed, target)?;
    let summary = &campaign.summary;

    let mut csv = String::from("experiment_id,estimate,observed_fraction,status\n");
    for (id, result) in campaign.results.iter().enumerate() {
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            id,
            result.estimate,
            result.observed_fraction,
            result.status.as_str()
        );
    }
    output::write_atomic(out_dir, "mc.csv", &csv)?;
    let eta_tilde = cfg.eta * (2.0 - cfg.eta);
    output::write_json(
        out_dir,
        "mc_summary.json",
        &McSummaryJson {
            target: summary.target.as_str(),
            true_offset: summary.true_offset,
            p_true: summary.p_true,
            trials_per_experiment: summary.trials_per_experiment,
            experiments: summary.experiments,
            master_seed: summary.master_seed,
            mean_estimate: summary.mean_estimate,
            sample_variance: summary.sample_variance,
            predicted_variance: summary.predicted_variance,
            variance_ratio: summary.variance_ratio,
            limit_variance: summary.limit_variance,
            limit_ratio: summary.limit_ratio,
            clamped_low: summary.clamped_low,
            clamped_high: summary.clamped_high,
            clamp_warning: summary.clamp_warning,
            loss_factor: 1.0 / eta_tilde,
        },
    )?;
    output::write_manifest(
        out_dir,
        "estimate",
        config::digest(cfg)?,
        cfg.seed,
        &["mc.csv", "mc_summary.json"],
    )?;
    println!(
        "{} experiments of {} trials at {} offset {}: sample variance {:e}, \
         predicted {:e}, ratio {:.4}",
        summary.experiments,
        summary.trials_per_experiment,
        cfg.target,
        summary.true_offset,
        summary.sample_variance,
        summary.predicted_variance,
        summary.variance_ratio
    );
    if summary.clamp_warning {
        eprintln!(
            "warning: {} of {} experiments clamped at a branch end; the offset \
             is too small for the trial count",
            summary.clamped_low + summary.clamped_high,
            summary.experiments
        );
    }
    Ok(())
}

pub fn cmd_verify(names: &[String]) -> Result<(), AppError> {
    let groups: Vec<VerifyGroup> = if names.is_empty() {
        ALL_GROUPS.to_vec()
    } else {
        names
            .iter()
            .map(|name| VerifyGroup::from_str(name))
            .collect::<Result<_, _>>()?
    };

    println!(
        "{:<20} {:>6} {:>14} {:>10} {:>7}",
        "group", "cases", "max deviation", "tolerance", "result"
    );
    let mut failed = 0;
    for &group in &groups {
        let report = run_group(group);
        println!(
            "{:<20} {:>6} {:>14.3e} {:>10.0e} {:>7}",
            report.group.name(),
            report.cases,
            report.max_deviation,
            report.tolerance,
            if report.passed { "pass" } else { "FAIL" }
        );
        if !report.passed {
            failed += 1;
        }
    }
    if failed > 0 {
        return Err(AppError::Verification(failed));
    }
    Ok(())
}
