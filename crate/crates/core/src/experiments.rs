//! Desk-scale quantitative studies: probability surfaces, level-curve
//! diameter scaling with log-log slope fits, rescaled-variance surfaces,
//! and seeded Monte Carlo estimation campaigns.
//!
//! Every table is a deterministic function of (parameters, master seed);
//! parallel evaluation collects results keyed by node or experiment index,
//! so output ordering never depends on scheduling.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimation::{
    mle_beta, mle_phi_minus, simulate_trials, sql_variance, variance_error_propagation,
    EstimationResult, InversionStatus, StreamId, Target,
};
use crate::phase_space::Channel;
use crate::protocol::{
    build_pipeline, detection_probability_closed, detection_probability_det,
    level_curve_diameters, ProtocolConfig,
};

/// Inclusive rectangular grid over (beta, phi_minus).
///
/// A degenerate axis (a single node) is allowed only when its endpoints
/// coincide, so pointwise studies can reuse the grid plumbing.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    beta_range: (f64, f64),
    phi_range: (f64, f64),
    n_beta: usize,
    n_phi: usize,
}

fn validate_axis(name: &str, range: (f64, f64), count: usize) -> Result<()> {
    let (lo, hi) = range;
    if !lo.is_finite() || !hi.is_finite() {
        return Err(Error::argument(format!("{name} range must be finite")));
    }
    match count {
        0 => Err(Error::argument(format!("{name} count must be positive"))),
        1 if lo == hi => Ok(()),
        1 => Err(Error::argument(format!(
            "{name} range must be a single point when the count is 1"
        ))),
        _ if lo < hi => Ok(()),
        _ => Err(Error::argument(format!(
            "{name} range must satisfy lo < hi, got [{lo}, {hi}]"
        ))),
    }
}

/// Evenly spaced nodes with exact endpoints (convex-combination form).
fn linspace(range: (f64, f64), count: usize) -> Vec<f64> {
    let (lo, hi) = range;
    if count == 1 {
        return vec![lo];
    }
    (0..count)
        .map(|k| {
            let t = k as f64 / (count - 1) as f64;
            lo * (1.0 - t) + hi * t
        })
        .collect()
}

impl GridSpec {
    pub fn new(
        beta_range: (f64, f64),
        phi_range: (f64, f64),
        n_beta: usize,
        n_phi: usize,
    ) -> Result<Self> {
        validate_axis("beta", beta_range, n_beta)?;
        validate_axis("phi_minus", phi_range, n_phi)?;
        Ok(GridSpec {
            beta_range,
            phi_range,
            n_beta,
            n_phi,
        })
    }

    pub fn beta_nodes(&self) -> Vec<f64> {
        linspace(self.beta_range, self.n_beta)
    }

    pub fn phi_nodes(&self) -> Vec<f64> {
        linspace(self.phi_range, self.n_phi)
    }

    pub fn node_count(&self) -> usize {
        self.n_beta * self.n_phi
    }
}

/// Offset rule for scaling studies: delta = c / N or c / sqrt(N).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DeltaRule {
    COverN(f64),
    COverSqrtN(f64),
}

impl DeltaRule {
    pub fn coefficient(self) -> f64 {
        match self {
            DeltaRule::COverN(c) | DeltaRule::COverSqrtN(c) => c,
        }
    }

    pub fn delta(self, n_photons: f64) -> f64 {
        match self {
            DeltaRule::COverN(c) => c / n_photons,
            DeltaRule::COverSqrtN(c) => c / n_photons.sqrt(),
        }
    }
}

/// Parameters of a study swept over mean photon number.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingStudy {
    n_values: Vec<f64>,
    eta: f64,
    p0: f64,
    delta_rule: DeltaRule,
}

impl ScalingStudy {
    pub fn new(n_values: Vec<f64>, eta: f64, p0: f64, delta_rule: DeltaRule) -> Result<Self> {
        if n_values.is_empty() {
            return Err(Error::argument("N values must be non-empty"));
        }
        if !n_values.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::argument("N values must be strictly increasing"));
        }
        if n_values.iter().any(|n| !(*n > 0.0)) {
            return Err(Error::argument("N values must be positive"));
        }
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::argument(format!(
                "quantum efficiency must lie in (0, 1], got {eta}"
            )));
        }
        if !(p0 > 0.0 && p0 < 1.0) {
            return Err(Error::argument(format!(
                "level value must lie in (0, 1), got {p0}"
            )));
        }
        if !(delta_rule.coefficient() > 0.0) {
            return Err(Error::argument("offset coefficient must be positive"));
        }
        Ok(ScalingStudy {
            n_values,
            eta,
            p0,
            delta_rule,
        })
    }

    pub fn n_values(&self) -> &[f64] {
        &self.n_values
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn p0(&self) -> f64 {
        self.p0
    }

    pub fn delta_rule(&self) -> DeltaRule {
        self.delta_rule
    }
}

/// Logarithmically spaced photon numbers, `per_decade` intervals per decade
/// of 10, endpoints inclusive.
pub fn log_spaced_photon_numbers(
    log10_lo: f64,
    log10_hi: f64,
    per_decade: usize,
) -> Result<Vec<f64>> {
    if !(log10_lo < log10_hi) {
        return Err(Error::argument(format!(
            "log range must satisfy lo < hi, got [{log10_lo}, {log10_hi}]"
        )));
    }
    if per_decade == 0 {
        return Err(Error::argument("per-decade count must be positive"));
    }
    let count = ((log10_hi - log10_lo) * per_decade as f64).round() as usize + 1;
    Ok(linspace((log10_lo, log10_hi), count)
        .into_iter()
        .map(|e| 10f64.powf(e))
        .collect())
}

/// One node of a probability surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceRow {
    pub beta: f64,
    pub phi_minus: f64,
    pub p: f64,
}

/// Closed-form detection probability over the grid, row-major with beta as
/// the outer axis.
pub fn probability_surface(
    grid: &GridSpec,
    n_photons: f64,
    eta: f64,
    channel: Channel,
) -> Result<Vec<SurfaceRow>> {
    if !(n_photons >= 0.0 && n_photons.is_finite()) {
        return Err(Error::argument(format!(
            "mean photon number must be non-negative, got {n_photons}"
        )));
    }
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::argument(format!(
            "quantum efficiency must lie in (0, 1], got {eta}"
        )));
    }
    let betas = grid.beta_nodes();
    let phis = grid.phi_nodes();
    let rows = betas
        .par_iter()
        .flat_map_iter(|&beta| {
            phis.iter().map(move |&phi_minus| SurfaceRow {
                beta,
                phi_minus,
                p: detection_probability_closed(beta, phi_minus, n_photons, eta, channel),
            })
        })
        .collect();
    Ok(rows)
}

/// One row of a diameter-scaling table. Rows where the level curve leaves
/// the fundamental domain carry the error text instead of diameters.
#[derive(Debug, Clone, PartialEq)]
pub struct DiameterRow {
    pub n_photons: f64,
    pub beta_star: Option<f64>,
    pub phi_star: Option<f64>,
    pub error: Option<String>,
}

/// Level-curve diameters for every N in the study. Domain failures are
/// recorded per row, not fatal.
pub fn diameter_scaling(study: &ScalingStudy) -> Vec<DiameterRow> {
    study
        .n_values()
        .iter()
        .map(|&n| match level_curve_diameters(study.p0(), n, study.eta()) {
            Ok((beta_star, phi_star)) => DiameterRow {
                n_photons: n,
                beta_star: Some(beta_star),
                phi_star: Some(phi_star),
                error: None,
            },
            Err(e) => DiameterRow {
                n_photons: n,
                beta_star: None,
                phi_star: None,
                error: Some(e.to_string()),
            },
        })
        .collect()
}

/// Ordinary least-squares line fit on log-log data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub rms_residual: f64,
    pub points: usize,
}

/// Fits log y = slope log x + intercept by least squares.
pub fn fit_loglog_slope(xs: &[f64], ys: &[f64]) -> Result<SlopeFit> {
    if xs.len() != ys.len() {
        return Err(Error::argument("x and y lengths differ"));
    }
    if xs.len() < 2 {
        return Err(Error::argument("slope fit needs at least 2 points"));
    }
    if xs.iter().chain(ys.iter()).any(|v| !(*v > 0.0)) {
        return Err(Error::argument("log-log fit needs positive data"));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::numeric("slope fit is degenerate: zero x variance"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| {
            let r = y - (slope * x + intercept);
            r * r
        })
        .sum();
    Ok(SlopeFit {
        slope,
        intercept,
        rms_residual: (ss / n).sqrt(),
        points: lx.len(),
    })
}

/// Log-log slope fits of beta_star(N) and phi_star(N) over the valid rows.
pub fn diameter_slopes(rows: &[DiameterRow]) -> Result<(SlopeFit, SlopeFit)> {
    let valid: Vec<&DiameterRow> = rows.iter().filter(|r| r.error.is_none()).collect();
    if valid.len() < 2 {
        return Err(Error::domain(
            "slope fit needs at least 2 valid diameter rows",
        ));
    }
    let ns: Vec<f64> = valid.iter().map(|r| r.n_photons).collect();
    let betas: Vec<f64> = valid.iter().map(|r| r.beta_star.unwrap()).collect();
    let phis: Vec<f64> = valid.iter().map(|r| r.phi_star.unwrap()).collect();
    Ok((
        fit_loglog_slope(&ns, &betas)?,
        fit_loglog_slope(&ns, &phis)?,
    ))
}

/// One node of a rescaled inverse-variance surface. Singular nodes (at or
/// within 1e-9 of a probability extremum) carry NaN and the flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RescaledVarianceRow {
    pub beta: f64,
    pub phi_minus: f64,
    pub value: f64,
    pub singular: bool,
}

/// Distance from `x` to the nearest integer multiple of `period`.
fn dist_to_lattice(x: f64, period: f64) -> f64 {
    let r = (x / period).round();
    (x - r * period).abs()
}

/// Rescaled inverse variance over the grid: 1 / (N^2 Var) for target beta,
/// 1 / (N Var) for target phi_minus, from the error-propagation formula.
pub fn rescaled_variance_surface(
    grid: &GridSpec,
    n_photons: f64,
    eta: f64,
    n: u64,
    target: Target,
) -> Result<Vec<RescaledVarianceRow>> {
    if !(n_photons > 0.0) {
        return Err(Error::argument(format!(
            "mean photon number must be positive, got {n_photons}"
        )));
    }
    let scale = match target {
        Target::Beta => n_photons * n_photons,
        Target::PhiMinus => n_photons,
    };
    let betas = grid.beta_nodes();
    let phis = grid.phi_nodes();
    let rows = betas
        .par_iter()
        .flat_map_iter(|&beta| {
            phis.iter().map(move |&phi_minus| {
                // Lattice lines where the derivative vanishes identically:
                // the beta derivative carries sin(2 beta) cos^2(phi_minus),
                // zero at beta = k pi/2 and at phi_minus = pi/2 + k pi; the
                // phi_minus derivative carries sin(2 phi_minus), zero at
                // phi_minus = k pi/2.
                let near_lattice = match target {
                    Target::Beta => {
                        dist_to_lattice(beta, std::f64::consts::FRAC_PI_2) < 1e-9
                            || dist_to_lattice(
                                phi_minus - std::f64::consts::FRAC_PI_2,
                                std::f64::consts::PI,
                            ) < 1e-9
                    }
                    Target::PhiMinus => {
                        dist_to_lattice(phi_minus, std::f64::consts::FRAC_PI_2) < 1e-9
                    }
                };
                let var = if near_lattice {
                    None
                } else {
                    variance_error_propagation(beta, phi_minus, n_photons, eta, n, target).ok()
                };
                match var {
                    Some(v) => RescaledVarianceRow {
                        beta,
                        phi_minus,
                        value: 1.0 / (scale * v),
                        singular: false,
                    },
                    None => RescaledVarianceRow {
                        beta,
                        phi_minus,
                        value: f64::NAN,
                        singular: true,
                    },
                }
            })
        })
        .collect();
    Ok(rows)
}

/// Derives the config that places the target parameter at offset `delta`
/// from its lattice maximum while keeping the nuisance fixed: for beta the
/// input squeezer angle absorbs the offset, for phi_minus the arm phases
/// split symmetrically about phi_plus.
pub fn effective_config(
    config: &ProtocolConfig,
    delta: f64,
    target: Target,
) -> Result<ProtocolConfig> {
    if !delta.is_finite() {
        return Err(Error::argument("offset must be finite"));
    }
    match target {
        Target::Beta => ProtocolConfig::new(
            config.n_photons(),
            delta - config.phi_plus() + config.theta_out(),
            config.theta_out(),
            config.phi1(),
            config.phi2(),
            config.eta(),
            config.anti_squeeze_channel(),
        ),
        Target::PhiMinus => ProtocolConfig::new(
            config.n_photons(),
            config.theta_in(),
            config.theta_out(),
            config.phi_plus() + delta,
            config.phi_plus() - delta,
            config.eta(),
            config.anti_squeeze_channel(),
        ),
    }
}

/// Aggregate statistics of a Monte Carlo campaign.
#[derive(Debug, Clone, PartialEq)]
pub struct McSummary {
    pub target: Target,
    pub true_offset: f64,
    pub p_true: f64,
    pub trials_per_experiment: u64,
    pub experiments: u64,
    pub master_seed: u64,
    pub mean_estimate: f64,
    pub sample_variance: f64,
    /// Error-propagation prediction at the true parameter point.
    pub predicted_variance: f64,
    pub variance_ratio: f64,
    /// The named scaling-limit constant: Heisenberg for beta, SQL for
    /// phi_minus.
    pub limit_variance: f64,
    pub limit_ratio: f64,
    pub clamped_low: u64,
    pub clamped_high: u64,
    /// Set when more than 1% of experiments clamped.
    pub clamp_warning: bool,
}

/// Per-experiment results plus the summary.
#[derive(Debug, Clone, PartialEq)]
pub struct McCampaign {
    pub results: Vec<EstimationResult>,
    pub summary: McSummary,
}

/// Runs M independent batches of n trials at the true parameter (offset
/// `delta` from the maximum), inverts each, and compares the sample variance
/// with the error-propagation prediction.
///
/// The true probability is computed through the covariance pipeline
/// (determinant form) while the inversion uses the closed form, so the two
/// independent routes cross-validate in every experiment.
pub fn mc_campaign(
    config: &ProtocolConfig,
    delta: f64,
    n: u64,
    experiments: u64,
    master_seed: u64,
    target: Target,
) -> Result<McCampaign> {
    if n == 0 {
        return Err(Error::argument("trial count must be positive"));
    }
    if experiments < 2 {
        return Err(Error::argument(
            "campaign needs at least 2 experiments for a sample variance",
        ));
    }
    if config.anti_squeeze_channel() != Channel::One {
        return Err(Error::argument(
            "campaigns estimate on detection channel 1; configure anti-squeezing there",
        ));
    }
    let eff = effective_config(config, delta, target)?;
    let n_photons = eff.n_photons();
    let eta = eff.eta();
    let state = build_pipeline(&eff);
    let p_true = detection_probability_det(&state, eta)?;
    let (true_value, nuisance) = match target {
        Target::Beta => (eff.beta(), eff.phi_minus()),
        Target::PhiMinus => (eff.phi_minus(), eff.beta()),
    };
    let predicted_variance = match target {
        Target::Beta => {
            variance_error_propagation(true_value, nuisance, n_photons, eta, n, target)?
        }
        Target::PhiMinus => {
            variance_error_propagation(nuisance, true_value, n_photons, eta, n, target)?
        }
    };
    let results: Vec<EstimationResult> = (0..experiments)
        .into_par_iter()
        .map(|i| {
            let batch = simulate_trials(p_true, n, StreamId::new(master_seed, i))?;
            Ok(match target {
                Target::Beta => mle_beta(&batch, nuisance, n_photons, eta),
                Target::PhiMinus => mle_phi_minus(&batch, nuisance, n_photons, eta),
            })
        })
        .collect::<Result<_>>()?;
    let m = experiments as f64;
    let mean_estimate = results.iter().map(|r| r.estimate).sum::<f64>() / m;
    let sample_variance = results
        .iter()
        .map(|r| (r.estimate - mean_estimate).powi(2))
        .sum::<f64>()
        / (m - 1.0);
    let clamped_low = results
        .iter()
        .filter(|r| r.status == InversionStatus::ClampedLow)
        .count() as u64;
    let clamped_high = results
        .iter()
        .filter(|r| r.status == InversionStatus::ClampedHigh)
        .count() as u64;
    let limit_variance = match target {
        Target::Beta => crate::estimation::heisenberg_variance(n_photons, eta, n),
        Target::PhiMinus => sql_variance(n_photons, eta, n),
    };
    let summary = McSummary {
        target,
        true_offset: delta,
        p_true,
        trials_per_experiment: n,
        experiments,
        master_seed,
        mean_estimate,
        sample_variance,
        predicted_variance,
        variance_ratio: sample_variance / predicted_variance,
        limit_variance,
        limit_ratio: sample_variance / limit_variance,
        clamped_low,
        clamped_high,
        clamp_warning: (clamped_low + clamped_high) as f64 > 0.01 * m,
    };
    Ok(McCampaign { results, summary })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_validation() {
        assert!(GridSpec::new((-1.0, 1.0), (-1.0, 1.0), 5, 5).is_ok());
        assert!(GridSpec::new((1.0, -1.0), (-1.0, 1.0), 5, 5).is_err());
        assert!(GridSpec::new((-1.0, 1.0), (-1.0, 1.0), 0, 5).is_err());
        // Degenerate single-node axis only at coincident endpoints.
        assert!(GridSpec::new((0.3, 0.3), (0.0, 0.0), 1, 1).is_ok());
        assert!(GridSpec::new((0.0, 1.0), (0.0, 0.0), 1, 1).is_err());
    }

    #[test]
    fn linspace_hits_endpoints_exactly() {
        let g = GridSpec::new((-0.75, 0.75), (0.0, 0.0), 101, 1).unwrap();
        let nodes = g.beta_nodes();
        assert_eq!(nodes.len(), 101);
        assert_eq!(nodes[0], -0.75);
        assert_eq!(nodes[100], 0.75);
        assert_eq!(nodes[50], 0.0);
    }

    #[test]
    fn log_spacing_count() {
        let ns = log_spaced_photon_numbers(1.0, 4.0, 8).unwrap();
        assert_eq!(ns.len(), 25);
        assert!((ns[0] - 10.0).abs() < 1e-12);
        assert!((ns[24] - 10_000.0).abs() < 1e-8);
    }

    #[test]
    fn slope_fit_recovers_power_law() {
        let xs: Vec<f64> = (1..=20).map(|k| k as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x.powf(-1.5)).collect();
        let fit = fit_loglog_slope(&xs, &ys).unwrap();
        assert!((fit.slope + 1.5).abs() < 1e-12);
        assert!(fit.rms_residual < 1e-12);
    }

    #[test]
    fn scaling_study_validation() {
        assert!(ScalingStudy::new(vec![1.0, 2.0], 1.0, 0.9, DeltaRule::COverN(0.5)).is_ok());
        assert!(ScalingStudy::new(vec![2.0, 1.0], 1.0, 0.9, DeltaRule::COverN(0.5)).is_err());
        assert!(ScalingStudy::new(vec![1.0, 2.0], 1.0, 0.9, DeltaRule::COverN(0.0)).is_err());
        assert!(ScalingStudy::new(vec![], 1.0, 0.9, DeltaRule::COverN(0.5)).is_err());
    }
}
