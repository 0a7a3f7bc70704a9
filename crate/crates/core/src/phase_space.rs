//! Gaussian phase-space algebra for two optical modes.
//!
//! States are zero-mean Gaussians represented by their covariance matrix in
//! quadrature units where the vacuum variance is 1/2 per quadrature. Passive
//! linear networks act as 4x4 matrices that are simultaneously orthogonal and
//! symplectic, obtained by lifting 2x2 complex unitaries. The attenuator
//! channel models detection loss as a convex combination with vacuum noise.

use nalgebra::{Matrix2, Matrix4};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Vacuum variance per quadrature.
pub const VACUUM_VARIANCE: f64 = 0.5;

/// Tolerance for algebraic identities checked on directly constructed values.
pub const TOL_ALGEBRAIC: f64 = 1e-12;

/// Tolerance for identities checked on composed (multi-step) results.
pub const TOL_COMPOSED: f64 = 1e-9;

/// One of the two optical modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    One,
    Two,
}

impl Channel {
    /// Parses a 1-based channel index.
    pub fn from_index(index: u8) -> Result<Self> {
        match index {
            1 => Ok(Channel::One),
            2 => Ok(Channel::Two),
            other => Err(Error::argument(format!(
                "channel index must be 1 or 2, got {other}"
            ))),
        }
    }

    pub fn index(self) -> u8 {
        match self {
            Channel::One => 1,
            Channel::Two => 2,
        }
    }

    /// Offset of this channel's 2x2 block inside a 4x4 two-mode matrix.
    fn block_offset(self) -> usize {
        match self {
            Channel::One => 0,
            Channel::Two => 2,
        }
    }

    pub fn other(self) -> Self {
        match self {
            Channel::One => Channel::Two,
            Channel::Two => Channel::One,
        }
    }
}

/// Complex squeezing parameter z = r e^{i theta} stored as magnitude and angle.
///
/// The angle is kept unreduced; every consumer is 2 pi periodic in it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqueezeParam {
    r: f64,
    theta: f64,
}

impl SqueezeParam {
    pub fn new(r: f64, theta: f64) -> Result<Self> {
        if !r.is_finite() || !theta.is_finite() {
            return Err(Error::argument("squeeze parameter must be finite"));
        }
        if r < 0.0 {
            return Err(Error::argument(format!(
                "squeezing magnitude must be non-negative, got {r}"
            )));
        }
        Ok(SqueezeParam { r, theta })
    }

    /// Squeezing magnitude that yields the given mean photon number,
    /// r = asinh(sqrt(N)).
    pub fn from_photon_number(n: f64, theta: f64) -> Result<Self> {
        if !n.is_finite() || n < 0.0 {
            return Err(Error::argument(format!(
                "mean photon number must be non-negative, got {n}"
            )));
        }
        SqueezeParam::new(n.sqrt().asinh(), theta)
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Mean photon number of the squeezed vacuum, sinh(r)^2.
    pub fn photon_number(&self) -> f64 {
        self.r.sinh().powi(2)
    }

    /// Same magnitude, opposite sign of r (the inverse squeezer).
    pub fn inverted(&self) -> SqueezeParam {
        SqueezeParam {
            r: self.r,
            theta: self.theta + std::f64::consts::FRAC_PI_2,
        }
    }
}

/// Counterclockwise rotation of the (x, p) plane by `theta`.
pub fn rotation_matrix(theta: f64) -> Matrix2<f64> {
    let (s, c) = theta.sin_cos();
    Matrix2::new(c, -s, s, c)
}

/// Single-mode squeezer in phase space,
/// S(z) = R(theta) diag(e^r, e^-r) R(-theta).
pub fn squeezer_matrix(z: SqueezeParam) -> Matrix2<f64> {
    let d = Matrix2::new(z.r.exp(), 0.0, 0.0, (-z.r).exp());
    rotation_matrix(z.theta) * d * rotation_matrix(-z.theta)
}

/// The 4x4 symplectic form, block-diagonal of two 2x2 antisymmetric units.
pub fn symplectic_form() -> Matrix4<f64> {
    let mut o = Matrix4::zeros();
    let j = Matrix2::new(0.0, -1.0, 1.0, 0.0);
    o.fixed_view_mut::<2, 2>(0, 0).copy_from(&j);
    o.fixed_view_mut::<2, 2>(2, 2).copy_from(&j);
    o
}

/// Two-mode covariance matrix: 4x4, symmetric, positive definite, and
/// physically admissible (sigma + i Omega / 2 positive semidefinite).
#[derive(Debug, Clone, PartialEq)]
pub struct CovMatrix {
    m: Matrix4<f64>,
}

impl CovMatrix {
    /// Validates and stores a covariance matrix. The input is symmetrized
    /// before the checks; gross asymmetry is rejected.
    pub fn new(m: Matrix4<f64>) -> Result<Self> {
        let asym = (m - m.transpose()).norm();
        if !m.iter().all(|x| x.is_finite()) {
            return Err(Error::numeric("covariance matrix has non-finite entries"));
        }
        if asym > TOL_COMPOSED {
            return Err(Error::argument(format!(
                "covariance matrix is not symmetric, asymmetry norm {asym:.3e}"
            )));
        }
        let sym = (m + m.transpose()) * 0.5;
        let eig_min = sym
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        if eig_min <= -TOL_ALGEBRAIC {
            return Err(Error::argument(format!(
                "covariance matrix is not positive definite, smallest eigenvalue {eig_min:.3e}"
            )));
        }
        let nu_min = min_symplectic_eigenvalue(&sym);
        if nu_min < VACUUM_VARIANCE - TOL_COMPOSED {
            return Err(Error::argument(format!(
                "covariance matrix violates the uncertainty bound, \
                 smallest symplectic eigenvalue {nu_min:.6}"
            )));
        }
        Ok(CovMatrix { m: sym })
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.m
    }
}

/// Marginal covariance of one mode: 2x2, symmetric, positive definite.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalCov {
    m: Matrix2<f64>,
}

impl MarginalCov {
    pub fn new(m: Matrix2<f64>) -> Result<Self> {
        let asym = (m - m.transpose()).norm();
        if asym > TOL_COMPOSED {
            return Err(Error::argument(format!(
                "marginal covariance is not symmetric, asymmetry norm {asym:.3e}"
            )));
        }
        let sym = (m + m.transpose()) * 0.5;
        let eig_min = sym
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        if eig_min <= -TOL_ALGEBRAIC {
            return Err(Error::argument(format!(
                "marginal covariance is not positive definite, smallest eigenvalue {eig_min:.3e}"
            )));
        }
        Ok(MarginalCov { m: sym })
    }

    pub fn matrix(&self) -> &Matrix2<f64> {
        &self.m
    }

    /// Eigenvalues sorted ascending.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let e = self.m.symmetric_eigen().eigenvalues;
        if e[0] <= e[1] {
            (e[0], e[1])
        } else {
            (e[1], e[0])
        }
    }
}

/// Phase-space action of a passive two-mode network: simultaneously
/// orthogonal and symplectic.
#[derive(Debug, Clone, PartialEq)]
pub struct Symplectic4 {
    m: Matrix4<f64>,
}

impl Symplectic4 {
    pub fn new(m: Matrix4<f64>) -> Result<Self> {
        let ortho = (m.transpose() * m - Matrix4::identity()).norm();
        if ortho > TOL_ALGEBRAIC {
            return Err(Error::argument(format!(
                "matrix is not orthogonal, deviation {ortho:.3e}"
            )));
        }
        let omega = symplectic_form();
        let sympl = (m.transpose() * omega * m - omega).norm();
        if sympl > TOL_ALGEBRAIC {
            return Err(Error::argument(format!(
                "matrix is not symplectic, deviation {sympl:.3e}"
            )));
        }
        Ok(Symplectic4 { m })
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.m
    }
}

/// 2x2 complex unitary describing a passive two-mode network.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoModeUnitary {
    m: Matrix2<Complex64>,
}

impl TwoModeUnitary {
    /// Rejects matrices farther than 1e-9 from unitarity; values built by
    /// this library satisfy the bound to 1e-12.
    pub fn new(m: Matrix2<Complex64>) -> Result<Self> {
        let dev = (m.adjoint() * m - Matrix2::identity()).norm();
        if dev > 1e-9 {
            return Err(Error::argument(format!(
                "matrix is not unitary, deviation {dev:.3e}"
            )));
        }
        Ok(TwoModeUnitary { m })
    }

    pub fn matrix(&self) -> &Matrix2<Complex64> {
        &self.m
    }
}

/// Covariance matrix of the two-mode vacuum, I/2.
pub fn vacuum_cov() -> CovMatrix {
    CovMatrix {
        m: Matrix4::identity() * VACUUM_VARIANCE,
    }
}

/// Squeezed vacuum in one channel, vacuum in the other:
/// the chosen channel's block is S(z)^2 / 2, the other I/2.
pub fn single_mode_squeezed_cov(z: SqueezeParam, channel: Channel) -> CovMatrix {
    let s = squeezer_matrix(z);
    let block = s * s.transpose() * VACUUM_VARIANCE;
    let mut m = Matrix4::identity() * VACUUM_VARIANCE;
    let off = channel.block_offset();
    m.view_mut((off, off), (2, 2)).copy_from(&block);
    CovMatrix { m }
}

/// Lifts a 2x2 complex unitary to its 4x4 phase-space action: block (j, k)
/// is Re(U_jk) I + Im(U_jk) J with J the antisymmetric unit.
pub fn unitary_to_symplectic(u: &TwoModeUnitary) -> Symplectic4 {
    let j = Matrix2::new(0.0, -1.0, 1.0, 0.0);
    let id = Matrix2::identity();
    let mut m = Matrix4::zeros();
    for row in 0..2 {
        for col in 0..2 {
            let e = u.m[(row, col)];
            let block = id * e.re + j * e.im;
            m.view_mut((2 * row, 2 * col), (2, 2)).copy_from(&block);
        }
    }
    Symplectic4 { m }
}

/// Conjugates a state by a network action: O sigma O^T.
pub fn apply_network(o: &Symplectic4, sigma: &CovMatrix) -> CovMatrix {
    let m = o.m * sigma.m * o.m.transpose();
    CovMatrix {
        m: (m + m.transpose()) * 0.5,
    }
}

/// Detection-loss channel with quantum efficiency `eta`: convex combination
/// of the state with vacuum noise, eta sigma + (1 - eta) I / 2.
pub fn attenuator(sigma: &CovMatrix, eta: f64) -> Result<CovMatrix> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::argument(format!(
            "quantum efficiency must lie in (0, 1], got {eta}"
        )));
    }
    let m = sigma.m * eta + Matrix4::identity() * ((1.0 - eta) * VACUUM_VARIANCE);
    Ok(CovMatrix { m })
}

/// Determinant of a symmetric positive-definite 4x4 matrix via Cholesky,
/// which is stabler than LU for the near-singular sums that arise at large
/// squeezing and fails loudly when positivity is lost.
pub(crate) fn spd_determinant4(m: &Matrix4<f64>) -> Result<f64> {
    let chol = nalgebra::Cholesky::new(*m).ok_or_else(|| {
        Error::numeric("determinant is not positive: matrix is not positive definite")
    })?;
    let l = chol.l();
    let mut det = 1.0;
    for k in 0..4 {
        det *= l[(k, k)] * l[(k, k)];
    }
    if !det.is_finite() {
        return Err(Error::numeric(format!("determinant is not finite: {det}")));
    }
    Ok(det)
}

/// Overlap of two zero-mean Gaussian states, det(sigma_a + sigma_b)^{-1/2}.
pub fn gaussian_overlap(sigma_a: &CovMatrix, sigma_b: &CovMatrix) -> Result<f64> {
    let d = spd_determinant4(&(sigma_a.m + sigma_b.m))?;
    Ok(1.0 / d.sqrt())
}

/// Marginal of one mode: the corresponding 2x2 diagonal block.
pub fn marginal(sigma: &CovMatrix, channel: Channel) -> MarginalCov {
    let off = channel.block_offset();
    MarginalCov {
        m: sigma.m.fixed_view::<2, 2>(off, off).into_owned(),
    }
}

/// Semi-axes of the detection ellipse of one mode, largest first. These are
/// the marginal's eigenvalues shifted by the vacuum half-unit added when the
/// mode is read out against vacuum.
pub fn marginal_semi_axes(sigma: &CovMatrix, channel: Channel) -> (f64, f64) {
    let (lo, hi) = marginal(sigma, channel).eigenvalues();
    (hi + VACUUM_VARIANCE, lo + VACUUM_VARIANCE)
}

/// Mean photon number of the two-mode state, tr(sigma) / 2 - 1.
pub fn mean_photon_number(sigma: &CovMatrix) -> f64 {
    sigma.m.trace() / 2.0 - 1.0
}

/// Smallest symplectic eigenvalue of a symmetric 4x4 matrix. The symplectic
/// spectrum is read off the imaginary parts of eig(Omega sigma).
fn min_symplectic_eigenvalue(sym: &Matrix4<f64>) -> f64 {
    let prod = symplectic_form() * sym;
    prod.complex_eigenvalues()
        .iter()
        .map(|l| l.im.abs())
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_unphysical_covariance() {
        // Below-vacuum noise in both quadratures of a mode violates the
        // uncertainty bound even though the matrix is positive definite.
        let m = Matrix4::from_diagonal(&nalgebra::Vector4::new(0.1, 0.1, 0.5, 0.5));
        assert!(matches!(CovMatrix::new(m), Err(Error::Argument(_))));
    }

    #[test]
    fn rejects_asymmetric_covariance() {
        let mut m = Matrix4::identity();
        m[(0, 1)] = 0.5;
        assert!(CovMatrix::new(m).is_err());
    }

    #[test]
    fn channel_index_round_trip() {
        assert_eq!(Channel::from_index(1).unwrap(), Channel::One);
        assert_eq!(Channel::from_index(2).unwrap(), Channel::Two);
        assert!(Channel::from_index(0).is_err());
        assert!(Channel::from_index(3).is_err());
    }

    #[test]
    fn squeeze_param_validation() {
        assert!(SqueezeParam::new(-0.1, 0.0).is_err());
        assert!(SqueezeParam::new(f64::NAN, 0.0).is_err());
        assert!(SqueezeParam::from_photon_number(-1.0, 0.0).is_err());
        let z = SqueezeParam::from_photon_number(4.0, 0.3).unwrap();
        assert!((z.photon_number() - 4.0).abs() < 1e-12);
    }
}
