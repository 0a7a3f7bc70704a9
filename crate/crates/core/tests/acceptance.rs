//! Acceptance suite: one test per release criterion. Each test prints a
//! single PASS/FAIL line carrying the measured values (run with
//! `-- --nocapture` to see the lines for passing criteria too), then asserts.
//!
//! Three criteria are known not to hold and fail honestly: the
//! inverse-square variance constant (a06), the loss-ratio value 4/3 (a09),
//! and the photon-number loss compensation of the probability surface (a10).
//! Their FAIL lines report the measured values.

use std::time::Instant;

use mzmetry::estimation::{variance_error_propagation, Target};
use mzmetry::experiments::{
    diameter_scaling, diameter_slopes, log_spaced_photon_numbers, mc_campaign,
    probability_surface, rescaled_variance_surface, DeltaRule, GridSpec, ScalingStudy,
};
use mzmetry::phase_space::Channel;
use mzmetry::protocol::{detection_probability_closed, ProtocolConfig};
use mzmetry::verify::{run_group, VerifyGroup};

fn report(id: &str, pass: bool, detail: String) {
    println!("{id} {}: {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "{id}: {detail}");
}

fn eta_tilde(eta: f64) -> f64 {
    eta * (2.0 - eta)
}

#[test]
fn a01_closed_form_agrees_with_determinant_route() {
    let t0 = Instant::now();
    let r = run_group(VerifyGroup::ClosedVsDet);
    let dt = t0.elapsed().as_secs_f64();
    report(
        "a01",
        r.passed && dt < 1.0,
        format!(
            "closed form vs determinant route over {} cases: max |dP| = {:.3e} \
             (tol {:.0e}), {:.2} s (limit 1 s)",
            r.cases, r.max_deviation, r.tolerance, dt
        ),
    );
}

#[test]
fn a02_overlap_matches_wigner_quadrature() {
    let t0 = Instant::now();
    let r = run_group(VerifyGroup::OverlapQuadrature);
    let dt = t0.elapsed().as_secs_f64();
    report(
        "a02",
        r.passed && dt < 10.0,
        format!(
            "analytic overlap vs numerical Wigner integration over {} random \
             configs: max deviation = {:.3e} (tol {:.0e}), {:.2} s (limit 10 s)",
            r.cases, r.max_deviation, r.tolerance, dt
        ),
    );
}

#[test]
fn a03_interferometer_matrix_is_symplectic_and_lifts_the_unitary() {
    let r = run_group(VerifyGroup::Symplectic);
    report(
        "a03",
        r.passed,
        format!(
            "orthogonality, symplectic form preservation, and unitary lift \
             over {} random phase pairs: max deviation = {:.3e} (tol {:.0e})",
            r.cases, r.max_deviation, r.tolerance
        ),
    );
}

#[test]
fn a04_marginal_semi_axes_match_their_closed_form() {
    let r = run_group(VerifyGroup::SemiAxes);
    report(
        "a04",
        r.passed,
        format!(
            "marginal covariance eigenvalues vs 1 + cos^2(phi_minus) (N +- \
             sqrt(N(1+N))) over {} cases: max deviation = {:.3e} (tol {:.0e})",
            r.cases, r.max_deviation, r.tolerance
        ),
    );
}

#[test]
fn a05_level_curve_diameters_scale_as_inverse_n_and_inverse_sqrt_n() {
    let study = ScalingStudy::new(
        log_spaced_photon_numbers(2.0, 4.0, 8).unwrap(),
        1.0,
        0.9,
        DeltaRule::COverN(0.5),
    )
    .unwrap();
    let rows = diameter_scaling(&study);
    let mut worst_residual = 0.0f64;
    for row in &rows {
        let b = row.beta_star.expect("level curve defined on this N range");
        let f = row.phi_star.expect("level curve defined on this N range");
        let rb = detection_probability_closed(b, 0.0, row.n_photons, 1.0, Channel::One) - 0.9;
        let rf = detection_probability_closed(0.0, f, row.n_photons, 1.0, Channel::One) - 0.9;
        worst_residual = worst_residual.max(rb.abs()).max(rf.abs());
    }
    let (beta_fit, phi_fit) = diameter_slopes(&rows).unwrap();
    let pass = (beta_fit.slope + 1.0).abs() <= 0.02
        && (phi_fit.slope + 0.5).abs() <= 0.02
        && worst_residual < 1e-10;
    report(
        "a05",
        pass,
        format!(
            "90% level curve over N in [1e2, 1e4]: beta slope {:.4} (required \
             -1.00 +- 0.02), phi slope {:.4} (required -0.50 +- 0.02), worst \
             on-curve residual {:.2e} (tol 1e-10)",
            beta_fit.slope, phi_fit.slope, worst_residual
        ),
    );
}

#[test]
fn a06_difference_phase_variance_matches_the_inverse_square_constant() {
    let n_trials = 1000u64;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &n_ph in &[10.0, 100.0, 1000.0] {
        for &eta in &[0.2, 0.6, 1.0] {
            let v = variance_error_propagation(0.5 / n_ph, 0.0, n_ph, eta, n_trials, Target::Beta)
                .unwrap();
            let c = v * 32.0 * eta_tilde(eta) * n_trials as f64 * n_ph * n_ph;
            lo = lo.min(c);
            hi = hi.max(c);
        }
    }
    report(
        "a06",
        lo >= 0.95 && hi <= 1.10,
        format!(
            "variance x 32 etat n N^2 at offset 0.5/N spans [{lo:.3}, {hi:.3}] \
             over N in {{10, 100, 1000}} x eta in {{0.2, 0.6, 1.0}}, required \
             within [0.95, 1.10]"
        ),
    );
}

#[test]
fn a07_arm_phase_variance_matches_the_shot_noise_constant() {
    let n_trials = 1000u64;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &n_ph in &[10.0, 100.0, 1000.0] {
        for &eta in &[0.2, 0.6, 1.0] {
            let v = variance_error_propagation(
                0.0,
                0.5 / n_ph,
                n_ph,
                eta,
                n_trials,
                Target::PhiMinus,
            )
            .unwrap();
            let c = v * 4.0 * eta_tilde(eta) * n_trials as f64 * n_ph;
            lo = lo.min(c);
            hi = hi.max(c);
        }
    }
    report(
        "a07",
        lo >= 0.9 && hi <= 1.1,
        format!(
            "variance x 4 etat n N at offset 0.5/N spans [{lo:.4}, {hi:.4}] \
             over N in {{10, 100, 1000}} x eta in {{0.2, 0.6, 1.0}}, required \
             within [0.9, 1.1]"
        ),
    );
}

#[test]
fn a08_monte_carlo_campaigns_match_predictions_at_the_pinned_seed() {
    let t0 = Instant::now();
    let config = ProtocolConfig::new(20.0, 0.0, 0.0, 0.0, 0.0, 1.0, Channel::One).unwrap();
    let beta = mc_campaign(&config, 0.01, 10_000, 500, 1, Target::Beta).unwrap();
    let phi = mc_campaign(&config, 0.05, 10_000, 500, 1, Target::PhiMinus).unwrap();
    let dt = t0.elapsed().as_secs_f64();
    let bs = beta.summary;
    let ps = phi.summary;
    let pass = bs.variance_ratio >= 0.85
        && bs.variance_ratio <= 1.15
        && ps.limit_ratio >= 0.85
        && ps.limit_ratio <= 1.15
        && !bs.clamp_warning
        && !ps.clamp_warning
        && dt < 30.0;
    report(
        "a08",
        pass,
        format!(
            "master seed 1, N = 20, 500 experiments x 10^4 trials: beta \
             campaign sample/predicted = {:.5} (required [0.85, 1.15], {} \
             clamps), phi campaign sample/shot-noise = {:.5} (required [0.85, \
             1.15], {} clamps), {:.1} s (limit 30 s)",
            bs.variance_ratio,
            bs.clamped_low + bs.clamped_high,
            ps.limit_ratio,
            ps.clamped_low + ps.clamped_high,
            dt
        ),
    );
}

#[test]
fn a09_loss_rescales_the_variance_by_the_constant_factor() {
    let expected = 4.0 / 3.0;
    let delta = 0.5 / 1000.0;
    let lossy_v =
        variance_error_propagation(delta, 0.0, 1000.0, 0.5, 1000, Target::Beta).unwrap();
    let ideal_v =
        variance_error_propagation(delta, 0.0, 1000.0, 1.0, 1000, Target::Beta).unwrap();
    let analytic = lossy_v / ideal_v;
    let cfg = |eta| ProtocolConfig::new(1000.0, 0.0, 0.0, 0.0, 0.0, eta, Channel::One).unwrap();
    let lossy = mc_campaign(&cfg(0.5), delta, 10_000, 500, 1, Target::Beta).unwrap();
    let ideal = mc_campaign(&cfg(1.0), delta, 10_000, 500, 1, Target::Beta).unwrap();
    let mc = lossy.summary.sample_variance / ideal.summary.sample_variance;
    let pass = (analytic - expected).abs() <= 0.05 * expected
        && (mc - expected).abs() <= 0.15 * expected;
    report(
        "a09",
        pass,
        format!(
            "variance ratio eta = 0.5 vs 1.0 at N = 1000, offset 0.5/N: \
             analytic {analytic:.5} (required 4/3 +- 5%, i.e. [1.267, 1.400]), \
             Monte Carlo {mc:.5} at master seed 1 (required 4/3 +- 15%, i.e. \
             [1.133, 1.533])"
        ),
    );
}

#[test]
fn a10_loss_compensates_by_rescaling_the_photon_number() {
    let grid = GridSpec::new((-0.3, 0.3), (-0.3, 0.3), 61, 61).unwrap();
    let ideal = probability_surface(&grid, 4.0, 1.0, Channel::One).unwrap();
    let scaled_n = 4.0 / eta_tilde(0.2).sqrt();
    let compensated = probability_surface(&grid, scaled_n, 0.2, Channel::One).unwrap();
    let mut sup = 0.0f64;
    let mut at = (0.0f64, 0.0f64);
    let mut axis_sup = 0.0f64;
    for (a, b) in ideal.iter().zip(&compensated) {
        let d = (a.p - b.p).abs();
        if d > sup {
            sup = d;
            at = (a.beta, a.phi_minus);
        }
        if a.phi_minus == 0.0 {
            axis_sup = axis_sup.max(d);
        }
    }
    report(
        "a10",
        sup < 0.02,
        format!(
            "sup |P(N = 4, eta = 1) - P(N = 4/sqrt(etat) = {scaled_n:.4}, eta \
             = 0.2)| over [-0.3, 0.3]^2 = {sup:.5} at (beta, phi) = ({:.2}, \
             {:.2}), required < 0.02; restricted to phi = 0 the sup is \
             {axis_sup:.5}",
            at.0, at.1
        ),
    );
}

#[test]
fn a11_rescaled_inverse_variances_agree_across_photon_numbers() {
    let n_trials = 1000u64;
    let value = |n_ph: f64, target: Target| {
        let grid = match target {
            Target::Beta => {
                let d = 0.3 / n_ph;
                GridSpec::new((d, d), (0.0, 0.0), 1, 1).unwrap()
            }
            Target::PhiMinus => {
                let d = 0.3 / n_ph.sqrt();
                GridSpec::new((0.0, 0.0), (d, d), 1, 1).unwrap()
            }
        };
        rescaled_variance_surface(&grid, n_ph, 1.0, n_trials, target).unwrap()[0].value
    };
    let beta_ratio = value(2.0, Target::Beta) / value(20.0, Target::Beta);
    let phi_ratio = value(2.0, Target::PhiMinus) / value(20.0, Target::PhiMinus);
    let pass = (beta_ratio - 1.0).abs() <= 0.2 && (phi_ratio - 1.0).abs() <= 0.2;
    report(
        "a11",
        pass,
        format!(
            "rescaled inverse variance, N = 2 vs N = 20 at matched offsets: \
             beta ratio {beta_ratio:.4} (offset 0.3/N), phi ratio \
             {phi_ratio:.4} (offset 0.3/sqrt(N)), required within 20% of 1"
        ),
    );
}
