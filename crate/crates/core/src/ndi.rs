//! Nonlinear dynamic inversion baseline controller.
//!
//! The rate loop inverts the rotational dynamics
//! `ω̇ = I⁻¹(T_a − ω×Iω) + I⁻¹T_δ` so that each body axis behaves as
//! `ω̇ = K_ω(ω_ref − ω)`. The angle loop inverts the small-angle kinematics
//! `Φ̇ = Λω + f_Φ` of `Φ = [φ, θ, β]` in the same way. Both loops use the
//! stabilizing error sign `K(ref − state)`.

use thiserror::Error;

use crate::tensor::Mat;

/// Standard gravity (m/s²).
pub const G0: f64 = 9.80665;

/// Smallest `|cos φ|` the angle loop accepts.
pub const SINGULARITY_MARGIN: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NdiError {
    #[error("angle-loop inversion singular: |cos(phi)| = {cos_phi:e} at or below margin")]
    Singular { cos_phi: f64 },
    #[error("invalid gains: {0}")]
    InvalidGains(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NdiGains {
    /// Rate loop `(k_p, k_q, k_r)`, 1/s.
    pub k_omega: [f64; 3],
    /// Angle loop `(k_φ, k_θ, k_β)`, 1/s.
    pub k_phi: [f64; 3],
    /// Pre-filter time constants `(τ_φ, τ_θ, τ_β)`, s.
    pub tau: [f64; 3],
}

impl Default for NdiGains {
    fn default() -> Self {
        Self {
            k_omega: [10.0, 10.0, 10.0],
            k_phi: [2.0, 2.0, 2.0],
            tau: [0.7, 1.0, 0.7],
        }
    }
}

impl NdiGains {
    pub fn validate(&self) -> Result<(), NdiError> {
        let all = self.k_omega.iter().chain(&self.k_phi).chain(&self.tau);
        if let Some(bad) = all.into_iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(NdiError::InvalidGains(format!("{bad} is not a positive gain")));
        }
        Ok(())
    }
}

/// Attitude-loop state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttitudeState {
    pub phi: f64,
    pub theta: f64,
    pub beta: f64,
    /// Body rates `(p, q, r)`.
    pub omega: [f64; 3],
    /// Airspeed (m/s).
    pub v: f64,
    pub g0: f64,
}

impl AttitudeState {
    pub fn attitude(&self) -> [f64; 3] {
        [self.phi, self.theta, self.beta]
    }
}

pub fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn mat3_vec(m: &Mat, v: &[f64; 3]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (r, o) in out.iter_mut().enumerate() {
        *o = (0..3).map(|c| m.get(r, c) * v[c]).sum();
    }
    out
}

/// `T_dem = I K_ω (ω_ref − ω) − T_a + ω × Iω`.
pub fn rate_loop(
    gains: &NdiGains,
    inertia: &Mat,
    omega: &[f64; 3],
    omega_ref: &[f64; 3],
    t_a: &[f64; 3],
) -> [f64; 3] {
    let desired: [f64; 3] = std::array::from_fn(|i| gains.k_omega[i] * (omega_ref[i] - omega[i]));
    let i_desired = mat3_vec(inertia, &desired);
    let gyro = cross(omega, &mat3_vec(inertia, omega));
    std::array::from_fn(|i| i_desired[i] - t_a[i] + gyro[i])
}

/// `Λ = diag(1, cos φ, −1)`.
pub fn lambda_diag(phi: f64) -> [f64; 3] {
    [1.0, phi.cos(), -1.0]
}

/// `f_Φ = [q sinφ tanθ + r cosφ tanθ, −r sinφ, (ḡ₀/V) cosθ sinφ]`.
pub fn f_phi(state: &AttitudeState) -> [f64; 3] {
    let (sp, cp) = state.phi.sin_cos();
    let tt = state.theta.tan();
    let [_, q, r] = state.omega;
    [
        q * sp * tt + r * cp * tt,
        -r * sp,
        state.g0 / state.v * state.theta.cos() * sp,
    ]
}

/// Small-angle attitude kinematics `Φ̇ = Λω + f_Φ`.
pub fn attitude_rates(state: &AttitudeState) -> [f64; 3] {
    let l = lambda_diag(state.phi);
    let f = f_phi(state);
    std::array::from_fn(|i| l[i] * state.omega[i] + f[i])
}

/// `ω_ref = Λ⁻¹ (K_Φ (Φ_ref − Φ) − f_Φ)`.
pub fn angle_loop(
    gains: &NdiGains,
    state: &AttitudeState,
    phi_ref: &[f64; 3],
) -> Result<[f64; 3], NdiError> {
    let l = lambda_diag(state.phi);
    if l[1].abs() <= SINGULARITY_MARGIN {
        return Err(NdiError::Singular { cos_phi: l[1] });
    }
    let att = state.attitude();
    let f = f_phi(state);
    Ok(std::array::from_fn(|i| {
        (gains.k_phi[i] * (phi_ref[i] - att[i]) - f[i]) / l[i]
    }))
}

/// Exact discrete step of `ẋ = (x_ref − x)/τ` with `x_ref` held over `dt`.
pub fn prefilter_step(x_pf: f64, x_ref: f64, tau: f64, dt: f64) -> f64 {
    debug_assert!(tau > 0.0 && dt > 0.0);
    x_ref + (x_pf - x_ref) * (-dt / tau).exp()
}
