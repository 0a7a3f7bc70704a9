//! The interferometric protocol: squeezed vacuum into a Mach-Zehnder network,
//! anti-squeezing at the output, lossy on-off detection.
//!
//! The estimable parameter is beta = phi_plus + theta_in - theta_out, the
//! angle between the state's squeeze ellipse and the measurement's. The
//! no-click probability P is available both as a determinant over the
//! pipeline covariances and as a closed form in (beta, phi_minus, N, eta);
//! their agreement is one of the library's central cross-checks.

use nalgebra::{Matrix2, Matrix4};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::phase_space::{
    apply_network, gaussian_overlap, rotation_matrix, single_mode_squeezed_cov, Channel,
    CovMatrix, SqueezeParam, Symplectic4, TwoModeUnitary,
};

/// Full parameterization of one experiment.
///
/// The pipeline is always driven by the physical inputs (squeezer angles and
/// arm phases); beta is derived, never supplied directly.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolConfig {
    n_photons: f64,
    theta_in: f64,
    theta_out: f64,
    phi1: f64,
    phi2: f64,
    eta: f64,
    anti_squeeze_channel: Channel,
}

impl ProtocolConfig {
    /// N = 0 is admitted only so oracle tests can exercise the vacuum limit.
    pub fn new(
        n_photons: f64,
        theta_in: f64,
        theta_out: f64,
        phi1: f64,
        phi2: f64,
        eta: f64,
        anti_squeeze_channel: Channel,
    ) -> Result<Self> {
        for (name, v) in [
            ("N", n_photons),
            ("theta_in", theta_in),
            ("theta_out", theta_out),
            ("phi1", phi1),
            ("phi2", phi2),
        ] {
            if !v.is_finite() {
                return Err(Error::argument(format!("{name} must be finite, got {v}")));
            }
        }
        if n_photons < 0.0 {
            return Err(Error::argument(format!(
                "mean photon number must be non-negative, got {n_photons}"
            )));
        }
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::argument(format!(
                "quantum efficiency must lie in (0, 1], got {eta}"
            )));
        }
        Ok(ProtocolConfig {
            n_photons,
            theta_in,
            theta_out,
            phi1,
            phi2,
            eta,
            anti_squeeze_channel,
        })
    }

    pub fn n_photons(&self) -> f64 {
        self.n_photons
    }

    pub fn theta_in(&self) -> f64 {
        self.theta_in
    }

    pub fn theta_out(&self) -> f64 {
        self.theta_out
    }

    pub fn phi1(&self) -> f64 {
        self.phi1
    }

    pub fn phi2(&self) -> f64 {
        self.phi2
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn anti_squeeze_channel(&self) -> Channel {
        self.anti_squeeze_channel
    }

    /// Half-sum of the arm phases.
    pub fn phi_plus(&self) -> f64 {
        (self.phi1 + self.phi2) / 2.0
    }

    /// Half-difference of the arm phases.
    pub fn phi_minus(&self) -> f64 {
        (self.phi1 - self.phi2) / 2.0
    }

    /// The estimable angle beta = phi_plus + theta_in - theta_out.
    pub fn beta(&self) -> f64 {
        self.phi_plus() + self.theta_in - self.theta_out
    }

    /// Effective efficiency factor eta (2 - eta) entering all lossy formulas.
    pub fn eta_tilde(&self) -> f64 {
        self.eta * (2.0 - self.eta)
    }

    /// Squeezing magnitude r = asinh(sqrt(N)).
    pub fn squeeze_magnitude(&self) -> f64 {
        self.n_photons.sqrt().asinh()
    }

    pub fn squeeze_in(&self) -> SqueezeParam {
        SqueezeParam::new(self.squeeze_magnitude(), self.theta_in)
            .expect("validated at construction")
    }

    pub fn squeeze_out(&self) -> SqueezeParam {
        SqueezeParam::new(self.squeeze_magnitude(), self.theta_out)
            .expect("validated at construction")
    }
}

/// Covariance matrices at the three stages of the pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineState {
    pub sigma_in: CovMatrix,
    pub sigma_mz: CovMatrix,
    pub sigma_out: CovMatrix,
}

/// Complex unitary of the Mach-Zehnder network: balanced beam splitter,
/// arm phases phi1 and phi2, balanced beam splitter.
pub fn mz_unitary(phi1: f64, phi2: f64) -> TwoModeUnitary {
    let inv_sqrt2 = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let i = Complex64::i();
    let bs_out = Matrix2::new(
        inv_sqrt2,
        -i * inv_sqrt2,
        -i * inv_sqrt2,
        inv_sqrt2,
    );
    let bs_in = Matrix2::new(inv_sqrt2, i * inv_sqrt2, i * inv_sqrt2, inv_sqrt2);
    let phases = Matrix2::new(
        (i * phi1).exp(),
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 0.0),
        (i * phi2).exp(),
    );
    TwoModeUnitary::new(bs_out * phases * bs_in).expect("product of unitaries is unitary")
}

/// Phase-space action of the Mach-Zehnder network: the 2x2 rotation blocks
/// R(phi_plus) weighted by cos(phi_minus) on the diagonal and
/// -+ sin(phi_minus) off the diagonal. Equals the lift of `mz_unitary`.
pub fn mz_symplectic(phi1: f64, phi2: f64) -> Symplectic4 {
    let phi_plus = (phi1 + phi2) / 2.0;
    let phi_minus = (phi1 - phi2) / 2.0;
    let r = rotation_matrix(phi_plus);
    let (s, c) = phi_minus.sin_cos();
    let mut m = Matrix4::zeros();
    m.view_mut((0, 0), (2, 2)).copy_from(&(r * c));
    m.view_mut((0, 2), (2, 2)).copy_from(&(r * -s));
    m.view_mut((2, 0), (2, 2)).copy_from(&(r * s));
    m.view_mut((2, 2), (2, 2)).copy_from(&(r * c));
    Symplectic4::new(m).expect("rotation blocks are orthogonal and symplectic")
}

/// Builds the three pipeline covariances: squeezed vacuum on channel 1,
/// its image under the network, and the measurement covariance (the
/// anti-squeezer's inverse image of vacuum on the configured channel).
pub fn build_pipeline(config: &ProtocolConfig) -> PipelineState {
    let sigma_in = single_mode_squeezed_cov(config.squeeze_in(), Channel::One);
    let o = mz_symplectic(config.phi1, config.phi2);
    let sigma_mz = apply_network(&o, &sigma_in);
    let sigma_out =
        single_mode_squeezed_cov(config.squeeze_out(), config.anti_squeeze_channel);
    PipelineState {
        sigma_in,
        sigma_mz,
        sigma_out,
    }
}

/// No-click probability from the pipeline covariances,
/// P = det(eta sigma_MZ + (2 - eta) sigma_out)^(-1/2).
///
/// At eta = 1 this is exactly the Gaussian overlap of sigma_MZ and sigma_out.
pub fn detection_probability_det(state: &PipelineState, eta: f64) -> Result<f64> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::argument(format!(
            "quantum efficiency must lie in (0, 1], got {eta}"
        )));
    }
    if eta == 1.0 {
        return gaussian_overlap(&state.sigma_mz, &state.sigma_out);
    }
    let m = state.sigma_mz.matrix() * eta + state.sigma_out.matrix() * (2.0 - eta);
    Ok(1.0 / crate::phase_space::spd_determinant4(&m)?.sqrt())
}

/// The quantity 1 + eta_tilde [ 2N + (2 c^2 + eta_tilde s^4) N^2 -
/// 2 c^2 cos(2 beta) N (1 + N) ], whose inverse square root is P.
/// Channel 2 swaps the roles of cos(phi_minus) and sin(phi_minus).
fn closed_form_bracket(
    beta: f64,
    phi_minus: f64,
    n_photons: f64,
    eta: f64,
    channel: Channel,
) -> f64 {
    let et = eta * (2.0 - eta);
    let n = n_photons;
    let (sin_pm, cos_pm) = phi_minus.sin_cos();
    let (c2, s2) = match channel {
        Channel::One => (cos_pm * cos_pm, sin_pm * sin_pm),
        Channel::Two => (sin_pm * sin_pm, cos_pm * cos_pm),
    };
    // 1 - c2 cos(2 beta) = s2 + 2 c2 sin^2(beta) and
    // 2 c2 (1 - cos(2 beta)) = 4 c2 sin^2(beta): every term is non-negative,
    // so P <= 1 holds in floating point with equality exactly at the
    // representable lattice nodes, and no subtractive cancellation degrades
    // small angles even when N amplifies the bracket.
    let sin_b = beta.sin();
    let sb2 = sin_b * sin_b;
    let bracket = 2.0 * n * (s2 + 2.0 * c2 * sb2)
        + n * n * (4.0 * c2 * sb2 + et * s2 * s2);
    1.0 + et * bracket
}

fn check_closed_form_args(n_photons: f64, eta: f64) {
    assert!(
        n_photons.is_finite() && n_photons >= 0.0,
        "mean photon number must be non-negative, got {n_photons}"
    );
    assert!(
        eta > 0.0 && eta <= 1.0,
        "quantum efficiency must lie in (0, 1], got {eta}"
    );
}

/// Closed-form no-click probability on the given detection channel.
///
/// The channel-2 form equals the channel-1 form with phi_minus shifted by
/// -pi/2. Maximal (P = 1) exactly on the lattice beta = h pi,
/// phi_minus = k pi (channel 1).
pub fn detection_probability_closed(
    beta: f64,
    phi_minus: f64,
    n_photons: f64,
    eta: f64,
    channel: Channel,
) -> f64 {
    check_closed_form_args(n_photons, eta);
    1.0 / closed_form_bracket(beta, phi_minus, n_photons, eta, channel).sqrt()
}

/// Analytic gradient (dP/dbeta, dP/dphi_minus) of the closed form.
///
/// Validated against central finite differences; used by the error
/// propagation formula, whose denominator is a squared derivative and would
/// otherwise amplify finite-difference noise.
pub fn detection_probability_gradient(
    beta: f64,
    phi_minus: f64,
    n_photons: f64,
    eta: f64,
    channel: Channel,
) -> (f64, f64) {
    check_closed_form_args(n_photons, eta);
    let et = eta * (2.0 - eta);
    let n = n_photons;
    let f = closed_form_bracket(beta, phi_minus, n_photons, eta, channel);
    let (sin_pm, cos_pm) = phi_minus.sin_cos();
    let sin_2pm = 2.0 * sin_pm * cos_pm;
    let (c2, d_c2, d_s4) = match channel {
        // d/dphi of cos^2, sin^4 (channel 1) or sin^2, cos^4 (channel 2).
        Channel::One => (
            cos_pm * cos_pm,
            -sin_2pm,
            2.0 * sin_pm * sin_pm * sin_2pm,
        ),
        Channel::Two => (
            sin_pm * sin_pm,
            sin_2pm,
            -2.0 * cos_pm * cos_pm * sin_2pm,
        ),
    };
    let cos_2b = (2.0 * beta).cos();
    let sin_2b = (2.0 * beta).sin();
    let df_dbeta = et * 4.0 * c2 * n * (1.0 + n) * sin_2b;
    let df_dphi = et * ((2.0 * d_c2 + et * d_s4) * n * n - 2.0 * d_c2 * cos_2b * n * (1.0 + n));
    let common = -0.5 / (f * f.sqrt());
    (common * df_dbeta, common * df_dphi)
}

/// Half-widths of the level curve P = P0 along the two axes:
/// beta_star solves P(beta, 0) = P0 and phi_star solves P(0, phi) = P0,
/// in closed form on channel 1.
pub fn level_curve_diameters(p0: f64, n_photons: f64, eta: f64) -> Result<(f64, f64)> {
    if !(p0 > 0.0 && p0 < 1.0) {
        return Err(Error::argument(format!(
            "level value must lie in (0, 1), got {p0}"
        )));
    }
    if !(n_photons > 0.0) {
        return Err(Error::argument(format!(
            "mean photon number must be positive, got {n_photons}"
        )));
    }
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::argument(format!(
            "quantum efficiency must lie in (0, 1], got {eta}"
        )));
    }
    let et = eta * (2.0 - eta);
    let n = n_photons;
    // P(beta, 0) = (1 + 4 et N (1+N) sin^2 beta)^(-1/2) and
    // P(0, phi)  = (1 + et N sin^2 phi)^(-1), both exact reductions of the
    // closed form, inverted for sin^2 of the half-widths.
    let beta_arg = (1.0 - p0 * p0) / (4.0 * et * n * (1.0 + n) * p0 * p0);
    let phi_arg = (1.0 - p0) / (et * n * p0);
    if beta_arg > 1.0 || phi_arg > 1.0 {
        return Err(Error::domain("level curve exceeds fundamental domain"));
    }
    Ok((beta_arg.sqrt().asin(), phi_arg.sqrt().asin()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        let ok = ProtocolConfig::new(4.0, 0.0, 0.0, 0.1, -0.1, 1.0, Channel::One);
        assert!(ok.is_ok());
        assert!(ProtocolConfig::new(-1.0, 0.0, 0.0, 0.0, 0.0, 1.0, Channel::One).is_err());
        assert!(ProtocolConfig::new(4.0, 0.0, 0.0, 0.0, 0.0, 0.0, Channel::One).is_err());
        assert!(ProtocolConfig::new(4.0, 0.0, 0.0, 0.0, 0.0, 1.5, Channel::One).is_err());
        assert!(ProtocolConfig::new(f64::NAN, 0.0, 0.0, 0.0, 0.0, 1.0, Channel::One).is_err());
    }

    #[test]
    fn derived_quantities() {
        let c = ProtocolConfig::new(4.0, 0.3, 0.1, 0.5, 0.2, 0.8, Channel::One).unwrap();
        assert!((c.phi_plus() - 0.35).abs() < 1e-15);
        assert!((c.phi_minus() - 0.15).abs() < 1e-15);
        assert!((c.beta() - (0.35 + 0.3 - 0.1)).abs() < 1e-15);
        assert!((c.eta_tilde() - 0.8 * 1.2).abs() < 1e-15);
        assert!((c.squeeze_in().photon_number() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn level_curve_rejects_bad_level() {
        assert!(level_curve_diameters(0.0, 4.0, 1.0).is_err());
        assert!(level_curve_diameters(1.0, 4.0, 1.0).is_err());
        assert!(level_curve_diameters(0.9, 0.0, 1.0).is_err());
    }

    #[test]
    fn level_curve_domain_error_message() {
        // At tiny N the 90% level curve does not close inside the
        // fundamental domain.
        let err = level_curve_diameters(0.9, 1e-3, 1.0).unwrap_err();
        assert_eq!(
            err.to_string(),
            "domain error: level curve exceeds fundamental domain"
        );
    }
}
