//! Self-verification suites: independent oracles for the library's central
//! identities, grouped for selective execution.
//!
//! The quadrature oracle integrates the Wigner product directly on a
//! truncated grid; everything else cross-checks two independent code paths
//! (closed form vs determinant, explicit network matrix vs unitary lift,
//! marginal eigenvalues vs published semi-axis expressions).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::phase_space::{
    gaussian_overlap, marginal_semi_axes, spd_determinant4, unitary_to_symplectic, Channel,
    CovMatrix,
};
use crate::protocol::{
    build_pipeline, detection_probability_closed, detection_probability_det, mz_symplectic,
    mz_unitary, ProtocolConfig,
};

/// The verification groups, in report order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerifyGroup {
    ClosedVsDet,
    OverlapQuadrature,
    Symplectic,
    SemiAxes,
}

pub const ALL_GROUPS: [VerifyGroup; 4] = [
    VerifyGroup::ClosedVsDet,
    VerifyGroup::OverlapQuadrature,
    VerifyGroup::Symplectic,
    VerifyGroup::SemiAxes,
];

impl VerifyGroup {
    pub fn name(self) -> &'static str {
        match self {
            VerifyGroup::ClosedVsDet => "closed-form-vs-det",
            VerifyGroup::OverlapQuadrature => "overlap-quadrature",
            VerifyGroup::Symplectic => "symplectic",
            VerifyGroup::SemiAxes => "semi-axes",
        }
    }
}

impl std::str::FromStr for VerifyGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ALL_GROUPS
            .into_iter()
            .find(|g| g.name() == s)
            .ok_or_else(|| {
                Error::argument(format!(
                    "unknown verification group '{s}'; known groups: {}",
                    ALL_GROUPS.map(|g| g.name()).join(", ")
                ))
            })
    }
}

/// Outcome of one verification group.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupReport {
    pub group: VerifyGroup,
    pub cases: usize,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl GroupReport {
    fn from_deviations(group: VerifyGroup, cases: usize, max_deviation: f64, tolerance: f64) -> Self {
        GroupReport {
            group,
            cases,
            max_deviation,
            tolerance,
            passed: max_deviation.is_finite() && max_deviation <= tolerance,
        }
    }
}

/// Direct numerical integration of (2 pi)^2 W_a W_b over a truncated
/// tensor-product grid with the trapezoid rule, the independent oracle for
/// `gaussian_overlap`. Resolves squeezing up to r = 1 at the default
/// half-width 6 and 81 nodes per axis.
pub fn overlap_quadrature(
    sigma_a: &CovMatrix,
    sigma_b: &CovMatrix,
    half_width: f64,
    nodes_per_axis: usize,
) -> Result<f64> {
    if !(half_width > 0.0 && half_width.is_finite()) {
        return Err(Error::argument("half width must be positive"));
    }
    if nodes_per_axis < 2 {
        return Err(Error::argument("need at least 2 nodes per axis"));
    }
    let a = sigma_a.matrix();
    let b = sigma_b.matrix();
    let inv_a = a
        .try_inverse()
        .ok_or_else(|| Error::numeric("covariance matrix is not invertible"))?;
    let inv_b = b
        .try_inverse()
        .ok_or_else(|| Error::numeric("covariance matrix is not invertible"))?;
    let m = inv_a + inv_b;
    let det_a = spd_determinant4(a)?;
    let det_b = spd_determinant4(b)?;
    let two_pi = 2.0 * std::f64::consts::PI;
    let norm = 1.0 / (two_pi * two_pi * (det_a * det_b).sqrt());

    let nn = nodes_per_axis;
    let h = 2.0 * half_width / (nn - 1) as f64;
    let xs: Vec<f64> = (0..nn)
        .map(|k| {
            let t = k as f64 / (nn - 1) as f64;
            -half_width * (1.0 - t) + half_width * t
        })
        .collect();
    let weight = |idx: usize| if idx == 0 || idx == nn - 1 { 0.5 } else { 1.0 };

    let (m00, m01, m02, m03) = (m[(0, 0)], m[(0, 1)], m[(0, 2)], m[(0, 3)]);
    let (m11, m12, m13) = (m[(1, 1)], m[(1, 2)], m[(1, 3)]);
    let (m22, m23) = (m[(2, 2)], m[(2, 3)]);
    let m33 = m[(3, 3)];
    let t0 = -half_width;
    // exp(-q/2) along the innermost axis follows a two-term geometric
    // recurrence because q is quadratic in the node index; this replaces an
    // exponential per node with one per (i, j, k) triple.
    let v = (-m33 * h * h).exp();

    // Parallel over the outer axis; partial sums are reduced in index order,
    // so the result does not depend on the thread count.
    let partials: Vec<f64> = (0..nn)
        .into_par_iter()
        .map(|i| {
            let x0 = xs[i];
            let wi = weight(i);
            let mut sum_i = 0.0;
            for (j, &x1) in xs.iter().enumerate() {
                let wj = weight(j);
                for (k, &x2) in xs.iter().enumerate() {
                    let wk = weight(k);
                    let q3 = m00 * x0 * x0
                        + m11 * x1 * x1
                        + m22 * x2 * x2
                        + 2.0 * (m01 * x0 * x1 + m02 * x0 * x2 + m12 * x1 * x2);
                    let g = m03 * x0 + m13 * x1 + m23 * x2;
                    let q_start = q3 + 2.0 * g * t0 + m33 * t0 * t0;
                    let mut e = (-0.5 * q_start).exp();
                    let mut u = (-(g * h + m33 * t0 * h + 0.5 * m33 * h * h)).exp();
                    let first = e;
                    let mut inner = 0.0;
                    for _ in 0..nn - 1 {
                        inner += e;
                        e *= u;
                        u *= v;
                    }
                    inner += e;
                    inner -= 0.5 * (first + e);
                    sum_i += wj * wk * inner;
                }
            }
            wi * sum_i
        })
        .collect();
    let total: f64 = partials.iter().sum();
    let result = total * h.powi(4) * norm;
    if !result.is_finite() {
        return Err(Error::numeric(format!(
            "quadrature produced a non-finite value: {result}"
        )));
    }
    Ok(result)
}

/// Config used by the grid-based oracle groups: phi_plus = 0, theta_out = 0,
/// so beta is carried entirely by the input squeezer angle.
fn grid_config(beta: f64, phi_minus: f64, n_photons: f64, eta: f64, channel: Channel) -> ProtocolConfig {
    ProtocolConfig::new(n_photons, beta, 0.0, phi_minus, -phi_minus, eta, channel)
        .expect("oracle grid parameters are valid")
}

/// Closed form vs determinant form over a 21x21 angle grid, three photon
/// numbers, three efficiencies, both detection channels.
pub fn verify_closed_vs_det() -> GroupReport {
    let half_pi = std::f64::consts::FRAC_PI_2;
    let angles: Vec<f64> = (0..21)
        .map(|k| {
            let t = k as f64 / 20.0;
            -half_pi * (1.0 - t) + half_pi * t
        })
        .collect();
    let mut max_dev: f64 = 0.0;
    let mut cases = 0;
    for &n in &[1.0, 4.0, 20.0] {
        for &eta in &[0.2, 0.6, 1.0] {
            for &channel in &[Channel::One, Channel::Two] {
                for &beta in &angles {
                    for &phi_minus in &angles {
                        let config = grid_config(beta, phi_minus, n, eta, channel);
                        let state = build_pipeline(&config);
                        let det = detection_probability_det(&state, eta)
                            .expect("pipeline covariances are positive definite");
                        let closed =
                            detection_probability_closed(beta, phi_minus, n, eta, channel);
                        max_dev = max_dev.max((det - closed).abs());
                        cases += 1;
                    }
                }
            }
        }
    }
    GroupReport::from_deviations(VerifyGroup::ClosedVsDet, cases, max_dev, 1e-12)
}

/// Gaussian overlap vs direct quadrature for 20 seeded random configs with
/// r <= 1.
pub fn verify_overlap_quadrature() -> GroupReport {
    let mut rng = ChaCha12Rng::seed_from_u64(20_240_601);
    let pi = std::f64::consts::PI;
    let mut max_dev: f64 = 0.0;
    let cases = 20;
    for _ in 0..cases {
        let r: f64 = rng.gen_range(0.05..=1.0);
        let n_photons = r.sinh().powi(2);
        let theta_in = rng.gen_range(-pi..=pi);
        let theta_out = rng.gen_range(-pi..=pi);
        let phi1 = rng.gen_range(-pi..=pi);
        let phi2 = rng.gen_range(-pi..=pi);
        let config = ProtocolConfig::new(
            n_photons, theta_in, theta_out, phi1, phi2, 1.0, Channel::One,
        )
        .expect("random oracle config is valid");
        let state = build_pipeline(&config);
        let exact = gaussian_overlap(&state.sigma_mz, &state.sigma_out)
            .expect("pipeline covariances are positive definite");
        let quad = overlap_quadrature(&state.sigma_mz, &state.sigma_out, 6.0, 81)
            .expect("quadrature oracle parameters are valid");
        max_dev = max_dev.max((exact - quad).abs());
    }
    GroupReport::from_deviations(VerifyGroup::OverlapQuadrature, cases, max_dev, 1e-3)
}

/// Orthogonality and symplecticity of the network matrix for 100 seeded
/// random phase pairs, plus agreement with the unitary lift.
pub fn verify_symplectic() -> GroupReport {
    let mut rng = ChaCha12Rng::seed_from_u64(20_240_602);
    let two_pi = 2.0 * std::f64::consts::PI;
    let omega = crate::phase_space::symplectic_form();
    let identity = nalgebra::Matrix4::<f64>::identity();
    let mut max_dev: f64 = 0.0;
    let cases = 100;
    for _ in 0..cases {
        let phi1 = rng.gen_range(-two_pi..=two_pi);
        let phi2 = rng.gen_range(-two_pi..=two_pi);
        let o = mz_symplectic(phi1, phi2);
        let m = o.matrix();
        let ortho = (m.transpose() * m - identity).norm();
        let sympl = (m.transpose() * omega * m - omega).norm();
        let lift = unitary_to_symplectic(&mz_unitary(phi1, phi2));
        let lift_dev = (m - lift.matrix()).norm();
        max_dev = max_dev.max(ortho).max(sympl).max(lift_dev);
    }
    GroupReport::from_deviations(VerifyGroup::Symplectic, cases, max_dev, 1e-12)
}

/// Detection-ellipse semi-axes of both post-network marginals vs the
/// published expressions 1 + cos^2(phi_minus) (N +- sqrt(N(1+N))) (channel 1;
/// sin^2 for channel 2) over a seeded random parameter grid.
pub fn verify_semi_axes() -> GroupReport {
    let mut rng = ChaCha12Rng::seed_from_u64(20_240_603);
    let pi = std::f64::consts::PI;
    let mut max_dev: f64 = 0.0;
    let cases = 200;
    for _ in 0..cases {
        let r: f64 = rng.gen_range(0.05..=2.0);
        let n = r.sinh().powi(2);
        let theta_in = rng.gen_range(-pi..=pi);
        let phi1 = rng.gen_range(-pi..=pi);
        let phi2 = rng.gen_range(-pi..=pi);
        let config = ProtocolConfig::new(n, theta_in, 0.0, phi1, phi2, 1.0, Channel::One)
            .expect("random oracle config is valid");
        let state = build_pipeline(&config);
        let phi_minus = config.phi_minus();
        let root = (n * (1.0 + n)).sqrt();
        for channel in [Channel::One, Channel::Two] {
            let trig2 = match channel {
                Channel::One => phi_minus.cos().powi(2),
                Channel::Two => phi_minus.sin().powi(2),
            };
            let expected_major = 1.0 + trig2 * (n + root);
            let expected_minor = 1.0 + trig2 * (n - root);
            let (major, minor) = marginal_semi_axes(&state.sigma_mz, channel);
            max_dev = max_dev
                .max((major - expected_major).abs())
                .max((minor - expected_minor).abs());
        }
    }
    GroupReport::from_deviations(VerifyGroup::SemiAxes, cases, max_dev, 1e-9)
}

/// Runs one group.
pub fn run_group(group: VerifyGroup) -> GroupReport {
    match group {
        VerifyGroup::ClosedVsDet => verify_closed_vs_det(),
        VerifyGroup::OverlapQuadrature => verify_overlap_quadrature(),
        VerifyGroup::Symplectic => verify_symplectic(),
        VerifyGroup::SemiAxes => verify_semi_axes(),
    }
}

/// Runs all groups in report order.
pub fn run_all() -> Vec<GroupReport> {
    ALL_GROUPS.into_iter().map(run_group).collect()
}
