//! Single-qubit error-channel algebra.
//!
//! A qubit is exposed for a duration `tau` to a channel composed of a
//! coherent rotation and stochastic Pauli noise. Syndrome extraction
//! discretizes the combined action, so everything downstream needs only
//! the effective probabilities with which the qubit commits to `I`, `X`,
//! `Y`, or `Z`. This module provides those probabilities along three
//! routes that must agree:
//!
//! * closed forms for the bit-flip + `x`-rotation channel ([`composite_coeffs`])
//!   and for the anisotropic channel ([`anisotropic_effective`]);
//! * the Bloch transfer-matrix / process-matrix route
//!   ([`choi_of_unital`], [`flip_probs_of_choi`]);
//! * direct integration of the Bloch equation when rotation and
//!   decoherence act simultaneously ([`bloch_ode_solve`]).

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("decoherence rate must be nonnegative, got {0}")]
    NegativeRate(f64),
    #[error("duration must be nonnegative, got {0}")]
    NegativeDuration(f64),
    #[error("frequency must be nonnegative, got {0}")]
    NegativeFrequency(f64),
    #[error("rotation axis must be a unit vector, got |n| = {0}")]
    NonUnitAxis(f64),
    #[error("flip probabilities must be nonnegative with sum at most 1")]
    InvalidFlipProbabilities,
    #[error("process-matrix diagonal {index} is {value}, below the physical tolerance")]
    NonphysicalDiagonal { index: usize, value: f64 },
    #[error("integration requires at least one step")]
    ZeroSteps,
}

/// Tolerance for the unit-axis invariant.
pub const AXIS_TOLERANCE: f64 = 1e-12;

/// Negative process-matrix diagonals above this magnitude are treated as
/// genuine bugs rather than float noise.
pub const CHOI_DIAGONAL_TOLERANCE: f64 = 1e-9;

/// Parameters of the bit-flip + rotation channel for one round.
///
/// `omega` is the systematic rotation frequency about the Bloch `x` axis,
/// `gamma` the decoherence rate, `tau` the duration over which the channel
/// acts, and `omega_c` the applied counter-rotation frequency. The
/// counter-rotation enters every likelihood as the shift
/// `omega -> omega - omega_c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    pub omega: f64,
    pub gamma: f64,
    pub tau: f64,
    pub omega_c: f64,
}

impl ChannelParams {
    pub fn new(omega: f64, gamma: f64, tau: f64) -> Result<Self, ChannelError> {
        if !(omega >= 0.0) {
            return Err(ChannelError::NegativeFrequency(omega));
        }
        if !(gamma >= 0.0) {
            return Err(ChannelError::NegativeRate(gamma));
        }
        if !(tau >= 0.0) {
            return Err(ChannelError::NegativeDuration(tau));
        }
        Ok(Self { omega, gamma, tau, omega_c: 0.0 })
    }

    /// Sets the counter-rotation frequency; unrestricted in sign.
    pub fn with_counter_rotation(mut self, omega_c: f64) -> Self {
        self.omega_c = omega_c;
        self
    }

    /// Residual rotation frequency seen by the syndrome statistics.
    pub fn effective_omega(&self) -> f64 {
        self.omega - self.omega_c
    }
}

/// Coefficients of the composite bit-flip channel over one round:
/// flip probability `p`, no-flip probability `q = 1 - p`, and the
/// coherence coefficient `c` that syndrome extraction discards.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompositeCoeffs {
    pub p: f64,
    pub q: f64,
    pub c: f64,
}

/// Probability that a bit flip has been committed after exposing a qubit
/// to pure decoherence at rate `gamma` for a time `tau`:
/// `p = (1 - exp(-4 gamma tau)) / 2`, always in `[0, 1/2)`.
pub fn p_of_tau(gamma: f64, tau: f64) -> Result<f64, ChannelError> {
    if !(gamma >= 0.0) {
        return Err(ChannelError::NegativeRate(gamma));
    }
    if !(tau >= 0.0) {
        return Err(ChannelError::NegativeDuration(tau));
    }
    Ok(0.5 * (1.0 - (-4.0 * gamma * tau).exp()))
}

/// Composite coefficients for a signed effective frequency. The public
/// entry point restricts `omega >= 0`, but the likelihoods are even in the
/// effective frequency, so counter-rotations may drive it negative.
pub(crate) fn composite_coeffs_raw(omega_eff: f64, gamma: f64, tau: f64) -> CompositeCoeffs {
    let damping = (-4.0 * gamma * tau).exp();
    let angle = omega_eff * tau;
    let p = 0.5 * (1.0 - damping * angle.cos());
    CompositeCoeffs { p, q: 1.0 - p, c: 0.5 * damping * angle.sin() }
}

/// Flip/no-flip/coherence coefficients of the composite channel:
/// `p = (1 - exp(-4 gamma tau) cos(omega_eff tau)) / 2` with
/// `omega_eff = omega - omega_c`, `q = 1 - p`, and
/// `c = exp(-4 gamma tau) sin(omega_eff tau) / 2`.
pub fn composite_coeffs(params: &ChannelParams) -> CompositeCoeffs {
    composite_coeffs_raw(params.effective_omega(), params.gamma, params.tau)
}

/// Single-qubit flip probability of the composite channel.
pub fn flip_probability(omega: f64, gamma: f64, tau: f64, omega_c: f64) -> f64 {
    composite_coeffs_raw(omega - omega_c, gamma, tau).p
}

/// Anisotropic Pauli noise followed by a rotation about an arbitrary axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnisotropicParams {
    pub p_x: f64,
    pub p_y: f64,
    pub p_z: f64,
    /// Unit rotation axis.
    pub axis: [f64; 3],
    /// Rotation angle `theta = omega tau` in radians.
    pub theta: f64,
}

fn check_axis(axis: &[f64; 3]) -> Result<(), ChannelError> {
    let norm = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
    if (norm - 1.0).abs() > AXIS_TOLERANCE {
        return Err(ChannelError::NonUnitAxis(norm));
    }
    Ok(())
}

fn check_flip_parts(p_x: f64, p_y: f64, p_z: f64) -> Result<(), ChannelError> {
    let sum = p_x + p_y + p_z;
    if !(p_x >= 0.0 && p_y >= 0.0 && p_z >= 0.0 && sum <= 1.0 + 1e-12) {
        return Err(ChannelError::InvalidFlipProbabilities);
    }
    Ok(())
}

impl AnisotropicParams {
    pub fn new(
        p_x: f64,
        p_y: f64,
        p_z: f64,
        axis: [f64; 3],
        theta: f64,
    ) -> Result<Self, ChannelError> {
        check_flip_parts(p_x, p_y, p_z)?;
        check_axis(&axis)?;
        Ok(Self { p_x, p_y, p_z, axis, theta })
    }

    /// Total stochastic error probability `q = p_x + p_y + p_z`.
    pub fn total_flip(&self) -> f64 {
        self.p_x + self.p_y + self.p_z
    }
}

/// Effective per-round Pauli commitment probabilities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlipProbs {
    pub q: f64,
    pub p_x: f64,
    pub p_y: f64,
    pub p_z: f64,
}

impl FlipProbs {
    /// Sum of the four probabilities must be 1 within 1e-12.
    pub fn new(q: f64, p_x: f64, p_y: f64, p_z: f64) -> Result<Self, ChannelError> {
        let sum = q + p_x + p_y + p_z;
        let ok = q >= 0.0 && p_x >= 0.0 && p_y >= 0.0 && p_z >= 0.0 && (sum - 1.0).abs() <= 1e-12;
        if !ok {
            return Err(ChannelError::InvalidFlipProbabilities);
        }
        Ok(Self { q, p_x, p_y, p_z })
    }

    /// Builds from the three flip probabilities, with `q = 1 - sum`.
    pub fn from_flip_parts(p_x: f64, p_y: f64, p_z: f64) -> Result<Self, ChannelError> {
        check_flip_parts(p_x, p_y, p_z)?;
        Ok(Self { q: 1.0 - p_x - p_y - p_z, p_x, p_y, p_z })
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.q, self.p_x, self.p_y, self.p_z]
    }
}

/// Effective Pauli probabilities after the rotation, with
/// `c = cos(theta/2)` and `s = sin(theta/2)`:
///
/// ```text
/// Q   = (1-q) c^2 + (p_x n_x^2 + p_y n_y^2 + p_z n_z^2) s^2
/// P_x = p_x c^2 + [(1-q) n_x^2 + p_y n_z^2 + p_z n_y^2] s^2
/// ```
///
/// and cyclic permutations for `P_y`, `P_z`.
pub fn anisotropic_effective(params: &AnisotropicParams) -> FlipProbs {
    let q = params.total_flip();
    let (nx2, ny2, nz2) = (
        params.axis[0] * params.axis[0],
        params.axis[1] * params.axis[1],
        params.axis[2] * params.axis[2],
    );
    let c2 = (params.theta / 2.0).cos().powi(2);
    let s2 = (params.theta / 2.0).sin().powi(2);
    let (px, py, pz) = (params.p_x, params.p_y, params.p_z);

    FlipProbs {
        q: (1.0 - q) * c2 + (px * nx2 + py * ny2 + pz * nz2) * s2,
        p_x: px * c2 + ((1.0 - q) * nx2 + py * nz2 + pz * ny2) * s2,
        p_y: py * c2 + ((1.0 - q) * ny2 + px * nz2 + pz * nx2) * s2,
        p_z: pz * c2 + ((1.0 - q) * nz2 + px * ny2 + py * nx2) * s2,
    }
}

/// 3x3 real matrix acting on Bloch vectors, `S' = B S`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PauliTransferMatrix(pub Matrix3<f64>);

impl PauliTransferMatrix {
    pub fn identity() -> Self {
        Self(Matrix3::identity())
    }

    /// Composition `self` after `other`.
    pub fn compose(&self, other: &Self) -> Self {
        Self(self.0 * other.0)
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    /// Largest singular value; at most 1 for physical unital channels.
    pub fn max_singular_value(&self) -> f64 {
        self.0.singular_values().max()
    }
}

fn levi_civita(j: usize, k: usize, l: usize) -> f64 {
    match (j, k, l) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

/// Diagonal Bloch transfer matrix of the anisotropic error channel,
/// `E_jj = 1 - 2 q + 2 p_j` with `q = p_x + p_y + p_z`.
pub fn transfer_matrix_of_anisotropic(
    p_x: f64,
    p_y: f64,
    p_z: f64,
) -> Result<PauliTransferMatrix, ChannelError> {
    check_flip_parts(p_x, p_y, p_z)?;
    let q = p_x + p_y + p_z;
    Ok(PauliTransferMatrix(Matrix3::from_diagonal(&Vector3::new(
        1.0 - 2.0 * q + 2.0 * p_x,
        1.0 - 2.0 * q + 2.0 * p_y,
        1.0 - 2.0 * q + 2.0 * p_z,
    ))))
}

/// Rotation of the Bloch sphere by `theta` about the unit `axis`:
/// `R_jk = cos(theta) d_jk + n_j n_k (1 - cos(theta)) - sin(theta) e_jkl n_l`.
///
/// With this sign convention `rotation_matrix([0,0,1], pi/2)` maps the `x`
/// axis onto `+y`, matching the Bloch action of `exp(-i theta n.sigma / 2)`;
/// a golden test pins this handedness for the whole crate.
pub fn rotation_matrix(axis: [f64; 3], theta: f64) -> Result<PauliTransferMatrix, ChannelError> {
    check_axis(&axis)?;
    let c = theta.cos();
    let s = theta.sin();
    let mut r = Matrix3::zeros();
    for j in 0..3 {
        for k in 0..3 {
            let mut v = axis[j] * axis[k] * (1.0 - c);
            if j == k {
                v += c;
            }
            for l in 0..3 {
                v -= s * levi_civita(j, k, l) * axis[l];
            }
            r[(j, k)] = v;
        }
    }
    Ok(PauliTransferMatrix(r))
}

/// Process matrix of a qubit channel in the Pauli basis `{I, X, Y, Z}`.
/// Hermitian; for trace-preserving unital channels the diagonal is real
/// with trace 2, and halving it yields the Pauli commitment probabilities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProcessMatrix {
    chi: [[Complex64; 4]; 4],
}

impl ProcessMatrix {
    pub fn element(&self, row: usize, col: usize) -> Complex64 {
        self.chi[row][col]
    }

    pub fn trace(&self) -> Complex64 {
        self.chi[0][0] + self.chi[1][1] + self.chi[2][2] + self.chi[3][3]
    }

    /// Largest deviation from Hermiticity, for diagnostics and tests.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for a in 0..4 {
            for b in 0..4 {
                worst = worst.max((self.chi[a][b] - self.chi[b][a].conj()).norm());
            }
        }
        worst
    }
}

/// Process matrix of a unital channel with Bloch transfer matrix `B`:
///
/// ```text
/// chi_00 = (1 + tr B) / 2
/// chi_0j = -chi_j0 = -(i/2) e_jkl B_kl
/// chi_jk = (d_jk (1 - tr B) + B_jk + B_kj) / 2
/// ```
///
/// The trace term carries the Kronecker delta: expanding
/// `tr(s_j s_l s_k s_m) = 2 (d_jl d_km - d_jk d_lm + d_jm d_kl)` in the
/// Choi reduction puts `-tr B` on the diagonal only, and only then is the
/// identity channel's process matrix `diag(2, 0, 0, 0)`.
pub fn choi_of_unital(b: &PauliTransferMatrix) -> ProcessMatrix {
    let m = &b.0;
    let tr = m.trace();
    let mut chi = [[Complex64::new(0.0, 0.0); 4]; 4];
    chi[0][0] = Complex64::new(0.5 * (1.0 + tr), 0.0);
    for j in 0..3 {
        let mut sum = 0.0;
        for k in 0..3 {
            for l in 0..3 {
                sum += levi_civita(j, k, l) * m[(k, l)];
            }
        }
        let off = Complex64::new(0.0, -0.5 * sum);
        chi[0][j + 1] = off;
        chi[j + 1][0] = -off;
        for k in 0..3 {
            let delta = if j == k { 1.0 - tr } else { 0.0 };
            chi[j + 1][k + 1] = Complex64::new(0.5 * (delta + m[(j, k)] + m[(k, j)]), 0.0);
        }
    }
    ProcessMatrix { chi }
}

/// Pauli commitment probabilities from the process-matrix diagonal,
/// `Q = chi_00 / 2`, `P_j = chi_jj / 2`.
///
/// Diagonals in `[-1e-9, 0)` are clamped to zero with a warning; anything
/// more negative signals a nonphysical input and is rejected.
pub fn flip_probs_of_choi(chi: &ProcessMatrix) -> Result<FlipProbs, ChannelError> {
    let mut diag = [0.0; 4];
    for (index, d) in diag.iter_mut().enumerate() {
        let value = 0.5 * chi.element(index, index).re;
        if value < -CHOI_DIAGONAL_TOLERANCE {
            return Err(ChannelError::NonphysicalDiagonal { index, value });
        }
        if value < 0.0 {
            log::warn!("clamping process-matrix diagonal {index} = {value:e} to 0");
            *d = 0.0;
        } else {
            *d = value;
        }
    }
    Ok(FlipProbs { q: diag[0], p_x: diag[1], p_y: diag[2], p_z: diag[3] })
}

/// Independent rates for `X`, `Y`, and `Z` flips in the generalized
/// master equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateTriple {
    pub gamma_x: f64,
    pub gamma_y: f64,
    pub gamma_z: f64,
}

impl RateTriple {
    pub fn new(gamma_x: f64, gamma_y: f64, gamma_z: f64) -> Result<Self, ChannelError> {
        for g in [gamma_x, gamma_y, gamma_z] {
            if !(g >= 0.0) {
                return Err(ChannelError::NegativeRate(g));
            }
        }
        Ok(Self { gamma_x, gamma_y, gamma_z })
    }
}

/// Default step count for [`bloch_ode_solve`]: `max(1000, ceil(1000 tau))`.
pub fn default_ode_steps(tau: f64) -> usize {
    1000.0_f64.max((1000.0 * tau).ceil()) as usize
}

/// Bloch transfer matrix for simultaneous rotation and Pauli decoherence,
/// integrating `dS/dt = omega n x S - 4 Gamma S` with classical
/// fixed-step fourth-order Runge-Kutta applied to the three basis vectors.
/// `Gamma = diag(g_y + g_z, g_x + g_z, g_x + g_y)`. Deterministic for a
/// fixed step count.
pub fn bloch_ode_solve(
    omega: f64,
    axis: [f64; 3],
    rates: &RateTriple,
    tau: f64,
    steps: usize,
) -> Result<PauliTransferMatrix, ChannelError> {
    check_axis(&axis)?;
    if !(tau >= 0.0) {
        return Err(ChannelError::NegativeDuration(tau));
    }
    if steps == 0 {
        return Err(ChannelError::ZeroSteps);
    }
    if tau == 0.0 {
        return Ok(PauliTransferMatrix::identity());
    }

    // generator A = omega [n]_x - 4 Gamma, constant in time
    let cross = Matrix3::new(
        0.0, -axis[2], axis[1],
        axis[2], 0.0, -axis[0],
        -axis[1], axis[0], 0.0,
    );
    let damping = Matrix3::from_diagonal(&Vector3::new(
        rates.gamma_y + rates.gamma_z,
        rates.gamma_x + rates.gamma_z,
        rates.gamma_x + rates.gamma_y,
    ));
    let generator = omega * cross - 4.0 * damping;

    let h = tau / steps as f64;
    let mut b = Matrix3::identity();
    for _ in 0..steps {
        let k1 = generator * b;
        let k2 = generator * (b + 0.5 * h * k1);
        let k3 = generator * (b + 0.5 * h * k2);
        let k4 = generator * (b + h * k3);
        b += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    Ok(PauliTransferMatrix(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_flip_parts<R: Rng>(rng: &mut R) -> (f64, f64, f64) {
        // Dirichlet(1,1,1,1) via normalized exponentials keeps q >= 0
        let draw = |rng: &mut R| -> f64 { -(1.0 - rng.random::<f64>()).ln() };
        let e = [draw(rng), draw(rng), draw(rng), draw(rng)];
        let total: f64 = e.iter().sum();
        (e[1] / total, e[2] / total, e[3] / total)
    }

    fn random_axis<R: Rng>(rng: &mut R) -> [f64; 3] {
        loop {
            let v = [
                rng.random::<f64>() * 2.0 - 1.0,
                rng.random::<f64>() * 2.0 - 1.0,
                rng.random::<f64>() * 2.0 - 1.0,
            ];
            let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            if norm > 1e-3 && norm <= 1.0 {
                return [v[0] / norm, v[1] / norm, v[2] / norm];
            }
        }
    }

    #[test]
    fn p_of_tau_zero_duration() {
        assert_eq!(p_of_tau(17.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn p_of_tau_saturates_at_half() {
        let p = p_of_tau(1e6, 1.0).unwrap();
        assert!(p <= 0.5 && p > 0.5 - 1e-12);
    }

    #[test]
    fn p_of_tau_scalar_value() {
        let p = p_of_tau(0.01, 10.0).unwrap();
        assert_relative_eq!(p, 0.5 * (1.0 - (-0.4_f64).exp()), max_relative = 1e-15);
    }

    #[test]
    fn p_of_tau_rejects_negative_inputs() {
        assert!(p_of_tau(-1.0, 1.0).is_err());
        assert!(p_of_tau(1.0, -1.0).is_err());
        assert!(p_of_tau(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn p_of_tau_matches_master_equation_integration() {
        // independent oracle: RK4 on dp/dt = 2 gamma (1 - 2p), p(0) = 0
        let gamma = 0.01;
        let tau = 10.0;
        let steps = 4000;
        let h = tau / steps as f64;
        let rhs = |p: f64| 2.0 * gamma * (1.0 - 2.0 * p);
        let mut p = 0.0;
        for _ in 0..steps {
            let k1 = rhs(p);
            let k2 = rhs(p + 0.5 * h * k1);
            let k3 = rhs(p + 0.5 * h * k2);
            let k4 = rhs(p + h * k3);
            p += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        assert_relative_eq!(p, p_of_tau(gamma, tau).unwrap(), epsilon = 1e-12);
    }

    #[test]
    fn composite_identity_channel() {
        let params = ChannelParams::new(0.0, 0.0, 3.7).unwrap();
        let cc = composite_coeffs(&params);
        assert_eq!((cc.p, cc.q, cc.c), (0.0, 1.0, 0.0));
    }

    #[test]
    fn composite_counter_rotation_cancels_unitary_part() {
        // omega_eff = 0 reduces p to the pure-decoherence form
        let params = ChannelParams::new(1.0, 0.01, 0.72).unwrap().with_counter_rotation(1.0);
        let cc = composite_coeffs(&params);
        assert_eq!(cc.p, p_of_tau(0.01, 0.72).unwrap());
        assert_eq!(cc.c, 0.0);
    }

    #[test]
    fn composite_small_tau_contributions() {
        // near tau = 0.72 the unitary part contributes ~0.13 and the
        // decoherence part ~0.014
        let tau = 0.72_f64;
        let unitary = 0.25 * tau * tau;
        let decoherence = 2.0 * 0.01 * tau;
        assert!((unitary - 0.13).abs() < 0.01);
        assert!((decoherence - 0.014).abs() < 0.002);
        let p = composite_coeffs(&ChannelParams::new(1.0, 0.01, tau).unwrap()).p;
        assert!((p - (unitary + decoherence)).abs() < 0.01);
    }

    #[test]
    fn composite_small_tau_expansion_order() {
        // |p - (omega^2 tau^2 / 4 + 2 gamma tau)| = O(tau^3) on [0.01, 0.1]
        let (omega, gamma) = (1.0, 0.01);
        for i in 0..=50 {
            let tau = 0.01 + 0.09 * i as f64 / 50.0;
            let p = composite_coeffs(&ChannelParams::new(omega, gamma, tau).unwrap()).p;
            let approx = 0.25 * (omega * tau).powi(2) + 2.0 * gamma * tau;
            assert!(
                (p - approx).abs() <= 0.1 * tau.powi(3),
                "residual {} at tau={tau}",
                p - approx
            );
        }
    }

    #[test]
    fn composite_is_even_in_effective_frequency() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let omega = rng.random::<f64>() * 4.0;
            let gamma = rng.random::<f64>() * 0.2;
            let tau = rng.random::<f64>() * 5.0;
            let a = composite_coeffs_raw(omega, gamma, tau);
            let b = composite_coeffs_raw(-omega, gamma, tau);
            assert_eq!(a.p, b.p);
            assert_eq!(a.q, b.q);
        }
    }

    #[test]
    fn composite_probability_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..2000 {
            let omega = rng.random::<f64>() * 6.0;
            let gamma = rng.random::<f64>() * 0.5;
            let tau = rng.random::<f64>() * 10.0;
            let cc = composite_coeffs_raw(omega, gamma, tau);
            assert_eq!(cc.p + cc.q, 1.0);
            let cap = 0.5 * (1.0 + (-4.0 * gamma * tau).exp());
            assert!(cc.p >= 0.0 && cc.p <= cap + 1e-15);
            if (omega * tau).cos() >= 0.0 {
                assert!(cc.p <= 0.5 + 1e-15);
            }
            assert!(cc.c.abs() <= 0.5 + 1e-15);
        }
    }

    #[test]
    fn anisotropic_identity() {
        let params = AnisotropicParams::new(0.0, 0.0, 0.0, [0.0, 0.0, 1.0], 0.0).unwrap();
        let fp = anisotropic_effective(&params);
        assert_eq!((fp.q, fp.p_x, fp.p_y, fp.p_z), (1.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn anisotropic_rejects_non_unit_axis() {
        assert!(AnisotropicParams::new(0.1, 0.0, 0.0, [0.0, 0.0, 2.0], 1.0).is_err());
    }

    #[test]
    fn anisotropic_reduces_to_composite_on_x_axis() {
        // p_x = p, axis = x: P_x = p c^2 + (1-p) s^2 = sin^2(t/2) + p cos t
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..100 {
            let gamma = rng.random::<f64>() * 0.2;
            let tau = rng.random::<f64>() * 3.0;
            let omega = rng.random::<f64>() * 3.0;
            let p = p_of_tau(gamma, tau).unwrap();
            let theta = omega * tau;
            let fp = anisotropic_effective(
                &AnisotropicParams::new(p, 0.0, 0.0, [1.0, 0.0, 0.0], theta).unwrap(),
            );
            let cc = composite_coeffs_raw(omega, gamma, tau);
            assert_relative_eq!(fp.p_x, cc.p, epsilon = 1e-13);
            assert_relative_eq!(fp.q, cc.q, epsilon = 1e-13);
            assert_eq!(fp.p_y, 0.0);
            assert_eq!(fp.p_z, 0.0);
        }
    }

    #[test]
    fn anisotropic_depolarizing_is_rotation_invariant() {
        // the depolarizing error channel commutes with every rotation:
        // conjugating its transfer matrix leaves it unchanged, and with
        // the rotation absent the effective probabilities are axis-free.
        // The composite with theta != 0 is not invariant, since the
        // rotation itself contributes discretized error:
        // P_x = P/3 + (1 - 4P/3) n_x^2 sin^2(theta/2).
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for _ in 0..300 {
            let p = rng.random::<f64>() * 0.75;
            let axis = random_axis(&mut rng);
            let theta = rng.random::<f64>() * 20.0 - 10.0;

            let fp = anisotropic_effective(
                &AnisotropicParams::new(p / 3.0, p / 3.0, p / 3.0, axis, 0.0).unwrap(),
            );
            assert_relative_eq!(fp.p_x, p / 3.0, epsilon = 1e-12);
            assert_relative_eq!(fp.p_y, p / 3.0, epsilon = 1e-12);
            assert_relative_eq!(fp.p_z, p / 3.0, epsilon = 1e-12);
            assert_relative_eq!(fp.q, 1.0 - p, epsilon = 1e-12);

            let e = transfer_matrix_of_anisotropic(p / 3.0, p / 3.0, p / 3.0).unwrap();
            let r = rotation_matrix(axis, theta).unwrap();
            let conjugated = r.0 * e.0 * r.0.transpose();
            assert!((conjugated - e.0).abs().max() < 1e-12);

            let composite = anisotropic_effective(
                &AnisotropicParams::new(p / 3.0, p / 3.0, p / 3.0, axis, theta).unwrap(),
            );
            let s2 = (theta / 2.0).sin().powi(2);
            let expect = p / 3.0 + (1.0 - 4.0 * p / 3.0) * axis[0] * axis[0] * s2;
            assert_relative_eq!(composite.p_x, expect, epsilon = 1e-12);
        }
    }

    #[test]
    fn anisotropic_sums_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        for _ in 0..10_000 {
            let (px, py, pz) = random_flip_parts(&mut rng);
            let axis = random_axis(&mut rng);
            let theta = rng.random::<f64>() * 30.0 - 15.0;
            let fp = anisotropic_effective(
                &AnisotropicParams::new(px, py, pz, axis, theta).unwrap(),
            );
            let arr = fp.as_array();
            assert!(arr.iter().all(|&v| v >= -1e-15));
            assert!((arr.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn transfer_matrix_examples() {
        let id = transfer_matrix_of_anisotropic(0.0, 0.0, 0.0).unwrap();
        assert_eq!(id.0, Matrix3::identity());

        let p = 0.3;
        let bf = transfer_matrix_of_anisotropic(p, 0.0, 0.0).unwrap();
        assert_eq!(bf.0.diagonal(), Vector3::new(1.0, 1.0 - 2.0 * p, 1.0 - 2.0 * p));

        // fully depolarizing point maps every Bloch vector to the origin
        let dep = transfer_matrix_of_anisotropic(0.25, 0.25, 0.25).unwrap();
        assert_eq!(dep.0, Matrix3::zeros());
    }

    #[test]
    fn rotation_golden_handedness() {
        // fixed convention for the whole crate: quarter turn about +z
        // carries +x onto +y
        let r = rotation_matrix([0.0, 0.0, 1.0], std::f64::consts::FRAC_PI_2).unwrap();
        let image = r.0 * Vector3::new(1.0, 0.0, 0.0);
        assert_relative_eq!(image.x, 0.0, epsilon = 1e-15);
        assert_relative_eq!(image.y, 1.0, epsilon = 1e-15);
        assert_relative_eq!(image.z, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn rotation_is_special_orthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        for _ in 0..200 {
            let axis = random_axis(&mut rng);
            let theta = rng.random::<f64>() * 20.0 - 10.0;
            let r = rotation_matrix(axis, theta).unwrap();
            let gram = r.0.transpose() * r.0;
            assert!((gram - Matrix3::identity()).abs().max() < 1e-12);
            assert_relative_eq!(r.0.determinant(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn rotation_composition_adds_angles() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..100 {
            let axis = random_axis(&mut rng);
            let a = rng.random::<f64>() * 6.0 - 3.0;
            let b = rng.random::<f64>() * 6.0 - 3.0;
            let lhs = rotation_matrix(axis, a).unwrap().compose(&rotation_matrix(axis, b).unwrap());
            let rhs = rotation_matrix(axis, a + b).unwrap();
            assert!((lhs.0 - rhs.0).abs().max() < 1e-12);
        }
    }

    #[test]
    fn choi_identity_channel() {
        let chi = choi_of_unital(&PauliTransferMatrix::identity());
        assert_eq!(chi.element(0, 0), Complex64::new(2.0, 0.0));
        for a in 0..4 {
            for b in 0..4 {
                if (a, b) != (0, 0) {
                    assert_eq!(chi.element(a, b), Complex64::new(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn choi_bit_flip_diagonal() {
        let p = 0.2;
        let b = transfer_matrix_of_anisotropic(p, 0.0, 0.0).unwrap();
        let chi = choi_of_unital(&b);
        assert_relative_eq!(chi.element(0, 0).re, 2.0 * (1.0 - p), epsilon = 1e-15);
        assert_relative_eq!(chi.element(1, 1).re, 2.0 * p, epsilon = 1e-15);
        assert!(chi.element(2, 2).norm() < 1e-15);
        assert!(chi.element(3, 3).norm() < 1e-15);
    }

    #[test]
    fn choi_coherence_term_matches_composite() {
        // B = R_x(theta) E has Im chi_0x = (1 - 2p) sin(theta) = 2C
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        for _ in 0..100 {
            let gamma = rng.random::<f64>() * 0.3;
            let tau = rng.random::<f64>() * 4.0;
            let omega = rng.random::<f64>() * 3.0;
            let p = p_of_tau(gamma, tau).unwrap();
            let b = rotation_matrix([1.0, 0.0, 0.0], omega * tau)
                .unwrap()
                .compose(&transfer_matrix_of_anisotropic(p, 0.0, 0.0).unwrap());
            let chi = choi_of_unital(&b);
            let c = composite_coeffs_raw(omega, gamma, tau).c;
            assert_relative_eq!(chi.element(0, 1).im, 2.0 * c, epsilon = 1e-12);
            assert_relative_eq!(chi.element(0, 1).re, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn choi_is_hermitian_with_trace_two() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for _ in 0..200 {
            let (px, py, pz) = random_flip_parts(&mut rng);
            let axis = random_axis(&mut rng);
            let theta = rng.random::<f64>() * 10.0 - 5.0;
            let b = rotation_matrix(axis, theta)
                .unwrap()
                .compose(&transfer_matrix_of_anisotropic(px, py, pz).unwrap());
            assert!(b.max_singular_value() <= 1.0 + 1e-9);
            let chi = choi_of_unital(&b);
            assert!(chi.hermiticity_defect() < 1e-12);
            assert_relative_eq!(chi.trace().re, 2.0, epsilon = 1e-12);
            assert_relative_eq!(chi.trace().im, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn flip_probs_of_choi_examples() {
        let id = flip_probs_of_choi(&choi_of_unital(&PauliTransferMatrix::identity())).unwrap();
        assert_eq!(id.as_array(), [1.0, 0.0, 0.0, 0.0]);

        let p = 0.13;
        let b = transfer_matrix_of_anisotropic(p, 0.0, 0.0).unwrap();
        let fp = flip_probs_of_choi(&choi_of_unital(&b)).unwrap();
        assert_relative_eq!(fp.q, 1.0 - p, epsilon = 1e-15);
        assert_relative_eq!(fp.p_x, p, epsilon = 1e-15);
        assert_eq!(fp.p_y, 0.0);
        assert_eq!(fp.p_z, 0.0);
    }

    #[test]
    fn flip_probs_of_choi_rejects_nonphysical_input() {
        // singular value above 1 pushes a diagonal well below -1e-9
        let b = PauliTransferMatrix(Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, 1.5)));
        match flip_probs_of_choi(&choi_of_unital(&b)) {
            Err(ChannelError::NonphysicalDiagonal { .. }) => {}
            other => panic!("expected nonphysical-diagonal error, got {other:?}"),
        }
    }

    #[test]
    fn choi_route_matches_anisotropic_effective() {
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        for _ in 0..1000 {
            let (px, py, pz) = random_flip_parts(&mut rng);
            let axis = random_axis(&mut rng);
            let theta = rng.random::<f64>() * 12.0 - 6.0;
            let b = rotation_matrix(axis, theta)
                .unwrap()
                .compose(&transfer_matrix_of_anisotropic(px, py, pz).unwrap());
            let via_choi = flip_probs_of_choi(&choi_of_unital(&b)).unwrap();
            let direct = anisotropic_effective(
                &AnisotropicParams::new(px, py, pz, axis, theta).unwrap(),
            );
            for (a, b) in via_choi.as_array().iter().zip(direct.as_array()) {
                assert!((a - b).abs() < 1e-10, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn bloch_ode_zero_duration_is_identity() {
        let rates = RateTriple::new(0.3, 0.2, 0.1).unwrap();
        let b = bloch_ode_solve(2.0, [0.0, 1.0, 0.0], &rates, 0.0, 10).unwrap();
        assert_eq!(b.0, Matrix3::identity());
    }

    #[test]
    fn bloch_ode_pure_decay_closed_form() {
        let rates = RateTriple::new(0.05, 0.02, 0.08).unwrap();
        let tau = 2.5;
        let b = bloch_ode_solve(0.0, [0.0, 0.0, 1.0], &rates, tau, default_ode_steps(tau))
            .unwrap();
        let expect = Vector3::new(
            (-4.0 * (rates.gamma_y + rates.gamma_z) * tau).exp(),
            (-4.0 * (rates.gamma_x + rates.gamma_z) * tau).exp(),
            (-4.0 * (rates.gamma_x + rates.gamma_y) * tau).exp(),
        );
        assert!((b.0 - Matrix3::from_diagonal(&expect)).abs().max() < 1e-10);
    }

    #[test]
    fn bloch_ode_commuting_case_matches_composite() {
        // rotation about x with only an x rate: the simultaneous channel
        // equals the composed channel
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..25 {
            let omega = rng.random::<f64>() * 2.0;
            let gamma = rng.random::<f64>() * 0.05;
            let tau = 0.1 + rng.random::<f64>() * 3.0;
            let rates = RateTriple::new(gamma, 0.0, 0.0).unwrap();
            let b = bloch_ode_solve(omega, [1.0, 0.0, 0.0], &rates, tau, default_ode_steps(tau))
                .unwrap();
            let fp = flip_probs_of_choi(&choi_of_unital(&b)).unwrap();
            let cc = composite_coeffs_raw(omega, gamma, tau);
            assert!((fp.q - cc.q).abs() < 1e-6);
            assert!((fp.p_x - cc.p).abs() < 1e-6);
            assert!(fp.p_y.abs() < 1e-6 && fp.p_z.abs() < 1e-6);
        }
    }

    #[test]
    fn bloch_ode_integrator_order() {
        // halving the step size should shrink the defect by about 2^4
        let rates = RateTriple::new(0.04, 0.01, 0.02).unwrap();
        let axis = [0.6, 0.0, 0.8];
        let (omega, tau) = (1.7, 1.3);
        let b1 = bloch_ode_solve(omega, axis, &rates, tau, 50).unwrap();
        let b2 = bloch_ode_solve(omega, axis, &rates, tau, 100).unwrap();
        let b4 = bloch_ode_solve(omega, axis, &rates, tau, 200).unwrap();
        let d12 = (b1.0 - b2.0).abs().max();
        let d24 = (b2.0 - b4.0).abs().max();
        let ratio = d12 / d24;
        assert!((8.0..64.0).contains(&ratio), "order ratio {ratio}");
    }
}
