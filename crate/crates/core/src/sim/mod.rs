//! Closed-loop rotational simulation of the synthetic flying wing.
//!
//! Airspeed, dynamic pressure and angle of attack are frozen at trim; body
//! rates and the attitude triple `(φ, θ, β)` are integrated with RK4 at the
//! control rate. Each frame runs pre-filters → angle loop → rate loop →
//! incremental allocation in the ganged (virtual) effector space, then
//! advances the plant with moments from the truth tables.

use thiserror::Error;

use crate::airframe::{
    airframe_moment, angular_acceleration, control_moment, gang_contract, gang_expand, gang_project,
    virtual_limits, AeroParams, Airframe, AirframeError, GangMode, ModelKind, SurfaceSuite, FLAP_COUNT,
    SURFACE_COUNT,
};
use crate::alloc::{increment_limits, rpi_allocate, AllocError, AllocationProblem};
use crate::config::{Config, ConfigError};
use crate::linalg::Lu;
use crate::ndi::{angle_loop, attitude_rates, prefilter_step, rate_loop, AttitudeState, NdiError, NdiGains, G0};
use crate::tensor::Mat;

mod trace;

pub use trace::{error_metrics, write_csv, ErrorMetrics, SimTrace};

/// Rates above this (rad/s) abort the run.
pub const DIVERGENCE_RATE: f64 = 20.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("state diverged at t = {t:.3} s: body rates {omega:?} rad/s")]
    Diverged { t: f64, omega: [f64; 3] },
    #[error("no pitch trim within flap limits (pitch coefficient {low:e} .. {high:e})")]
    NoTrim { low: f64, high: f64 },
    #[error("empty trace")]
    EmptyTrace,
    #[error(transparent)]
    Ndi(#[from] NdiError),
    #[error(transparent)]
    Alloc(#[from] AllocError),
    #[error(transparent)]
    Airframe(#[from] AirframeError),
}

impl From<ConfigError> for SimError {
    fn from(e: ConfigError) -> Self {
        SimError::Config(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, SimError>;

/// International Standard Atmosphere density in the troposphere (kg/m³).
pub fn isa_density(altitude_m: f64) -> f64 {
    let t = 288.15 - 0.0065 * altitude_m;
    1.225 * (t / 288.15).powf(G0 / (287.053 * 0.0065) - 1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    pub duration: f64,
    /// Frozen airspeed (m/s).
    pub velocity: f64,
    /// Altitude for the air density (m).
    pub altitude: f64,
    pub model_kind: ModelKind,
    pub gang: GangMode,
    pub gains: NdiGains,
    pub seed: u64,
    /// Roll-angle pulse amplitude (deg) and its on/off times (s).
    pub pulse_deg: f64,
    pub pulse_on: f64,
    pub pulse_off: f64,
    /// Surface rate limit (deg/s).
    pub rate_limit_deg_s: f64,
    /// Diagonal of the allocation weights over the virtual effectors;
    /// identity when absent.
    pub weights: Option<Vec<f64>>,
    /// Preferred virtual increment (deg); zero when absent.
    pub preference_deg: Option<Vec<f64>>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 0.01,
            duration: 20.0,
            velocity: 25.0,
            altitude: 500.0,
            model_kind: ModelKind::Pmlr,
            gang: GangMode::SplitAileronRuddervator,
            gains: NdiGains::default(),
            seed: 1,
            pulse_deg: 50.0,
            pulse_on: 1.0,
            pulse_off: 11.0,
            rate_limit_deg_s: crate::airframe::DEFAULT_RATE_LIMIT_DEG,
            weights: None,
            preference_deg: None,
        }
    }
}

impl SimConfig {
    /// Keys accepted in a simulation config file. `dataset` names an
    /// optional table file and is resolved by the caller.
    pub const KEYS: &'static [&'static str] = &[
        "dt",
        "duration",
        "velocity",
        "altitude",
        "model",
        "gang",
        "seed",
        "k_p",
        "k_q",
        "k_r",
        "k_phi",
        "k_theta",
        "k_beta",
        "tau_phi",
        "tau_theta",
        "tau_beta",
        "pulse_deg",
        "pulse_on",
        "pulse_off",
        "rate_limit",
        "weights",
        "preference",
        "dataset",
    ];

    pub fn from_config(c: &Config) -> Result<Self> {
        c.check_keys(Self::KEYS)?;
        let d = Self::default();
        let g = d.gains;
        let gang = match c.get::<u32>("gang")? {
            None => d.gang,
            Some(i) => GangMode::from_index(i).ok_or_else(|| SimError::Config(format!("gang must be 1 or 2, got {i}")))?,
        };
        let model_kind = match c.raw("model") {
            None => d.model_kind,
            Some(s) => s.parse().map_err(SimError::Config)?,
        };
        let cfg = Self {
            dt: c.get_or("dt", d.dt)?,
            duration: c.get_or("duration", d.duration)?,
            velocity: c.get_or("velocity", d.velocity)?,
            altitude: c.get_or("altitude", d.altitude)?,
            model_kind,
            gang,
            gains: NdiGains {
                k_omega: [c.get_or("k_p", g.k_omega[0])?, c.get_or("k_q", g.k_omega[1])?, c.get_or("k_r", g.k_omega[2])?],
                k_phi: [c.get_or("k_phi", g.k_phi[0])?, c.get_or("k_theta", g.k_phi[1])?, c.get_or("k_beta", g.k_phi[2])?],
                tau: [c.get_or("tau_phi", g.tau[0])?, c.get_or("tau_theta", g.tau[1])?, c.get_or("tau_beta", g.tau[2])?],
            },
            seed: c.get_or("seed", d.seed)?,
            pulse_deg: c.get_or("pulse_deg", d.pulse_deg)?,
            pulse_on: c.get_or("pulse_on", d.pulse_on)?,
            pulse_off: c.get_or("pulse_off", d.pulse_off)?,
            rate_limit_deg_s: c.get_or("rate_limit", d.rate_limit_deg_s)?,
            weights: c.list("weights")?,
            preference_deg: c.list("preference")?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(SimError::Config(m));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.duration >= self.dt && self.duration.is_finite()) {
            return bad(format!("duration must be at least dt, got {}", self.duration));
        }
        if !(self.velocity > 0.0 && self.velocity.is_finite()) {
            return bad("velocity must be positive".into());
        }
        if !(self.altitude.is_finite() && (-500.0..=11_000.0).contains(&self.altitude)) {
            return bad("altitude must lie in the troposphere (-500 .. 11000 m)".into());
        }
        if !(self.rate_limit_deg_s > 0.0 && self.rate_limit_deg_s.is_finite()) {
            return bad("rate_limit must be positive".into());
        }
        if ![self.pulse_deg, self.pulse_on, self.pulse_off].iter().all(|v| v.is_finite()) {
            return bad("pulse settings must be finite".into());
        }
        self.gains.validate()?;
        let n = self.gang.virtual_dim();
        if let Some(w) = &self.weights {
            if w.len() != n || w.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
                return bad(format!("weights must be {n} positive numbers for gang mode {}", self.gang.index()));
            }
        }
        if let Some(p) = &self.preference_deg {
            if p.len() != n || p.iter().any(|x| !x.is_finite()) {
                return bad(format!("preference must be {n} numbers for gang mode {}", self.gang.index()));
            }
        }
        Ok(())
    }

    pub fn frames(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }

    /// Commanded roll angle (rad) at time `t`.
    pub fn roll_command(&self, t: f64) -> f64 {
        if t >= self.pulse_on && t < self.pulse_off {
            self.pulse_deg.to_radians()
        } else {
            0.0
        }
    }
}

/// Level-flight trim at the frozen flight condition.
#[derive(Debug, Clone, PartialEq)]
pub struct Trim {
    pub alpha: f64,
    pub theta: f64,
    /// Common flap deflection nulling the pitch moment (rad).
    pub flap: f64,
    pub delta: Vec<f64>,
}

/// Angle of attack from the lift balance, then bisection on a common flap
/// deflection until the truth pitch moment vanishes.
pub fn find_trim(suite: &SurfaceSuite, airframe: &Airframe, q_inf: f64) -> Result<Trim> {
    let alpha = airframe.trim_alpha(q_inf, G0);
    let base = suite.c_a_truth(alpha, 0.0)?[1];
    let pitch = |d: f64| -> Result<f64> {
        let mut delta = vec![0.0; SURFACE_COUNT];
        delta[..FLAP_COUNT].iter_mut().for_each(|x| *x = d);
        Ok(base + suite.cdelta_truth(alpha, 0.0, &delta)?[1])
    };
    let limits = suite.limits();
    let (mut lo, mut hi) = (limits.delta_min[0], limits.delta_max[0]);
    let (mut f_lo, f_hi) = (pitch(lo)?, pitch(hi)?);
    if f_lo.signum() == f_hi.signum() {
        return Err(SimError::NoTrim { low: f_lo, high: f_hi });
    }
    while hi - lo > 1e-15 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = pitch(mid)?;
        if f_mid == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    let flap = 0.5 * (lo + hi);
    let mut delta = vec![0.0; SURFACE_COUNT];
    delta[..FLAP_COUNT].iter_mut().for_each(|x| *x = flap);
    Ok(Trim {
        alpha,
        theta: alpha,
        flap,
        delta,
    })
}

/// Integrated state: body rates, attitude, pre-filter outputs and the
/// current surface deflections.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub omega: [f64; 3],
    /// `(φ, θ, β)`.
    pub attitude: [f64; 3],
    pub prefilter: [f64; 3],
    pub delta: Vec<f64>,
}

/// One recorded control frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub t: f64,
    pub attitude: [f64; 3],
    pub attitude_ref: [f64; 3],
    pub omega: [f64; 3],
    pub omega_ref: [f64; 3],
    /// Deflections commanded this frame.
    pub delta: Vec<f64>,
    pub t_dem: [f64; 3],
    /// Truth control moment at the commanded deflections.
    pub t_delta: [f64; 3],
    /// Onboard and truth control moments at the previous deflections.
    pub onboard_effect: [f64; 3],
    pub truth_effect: [f64; 3],
    pub demand_increment: [f64; 3],
    /// `G Δv` in the virtual space.
    pub achieved_increment: [f64; 3],
    pub saturated: bool,
}

impl Frame {
    /// `ℰ = T_dem − T_δ`.
    pub fn error(&self) -> [f64; 3] {
        std::array::from_fn(|i| self.t_dem[i] - self.t_delta[i])
    }
}

pub struct Simulator<'a> {
    config: SimConfig,
    suite: &'a SurfaceSuite,
    params: AeroParams,
    inertia_inv: Mat,
    trim: Trim,
    weights: Mat,
    preference: Vec<f64>,
    state: SimState,
}

impl<'a> Simulator<'a> {
    pub fn new(config: SimConfig, suite: &'a SurfaceSuite) -> Result<Self> {
        config.validate()?;
        let airframe = Airframe::synthetic();
        let q_inf = 0.5 * isa_density(config.altitude) * config.velocity * config.velocity;
        let params = airframe.params(q_inf, config.velocity, [0.0; 3]);
        params.validate()?;
        let inertia_inv = Lu::factor(&params.inertia)
            .map_err(|_| SimError::Config("singular inertia".into()))?
            .inverse();
        let trim = find_trim(suite, &airframe, q_inf)?;
        let n = config.gang.virtual_dim();
        let weights = match &config.weights {
            Some(w) => Mat::diag(w).map_err(|e| SimError::Config(e.to_string()))?,
            None => Mat::identity(n),
        };
        let preference = match &config.preference_deg {
            Some(p) => p.iter().map(|x| x.to_radians()).collect(),
            None => vec![0.0; n],
        };
        let state = SimState {
            t: 0.0,
            omega: [0.0; 3],
            attitude: [0.0, trim.theta, 0.0],
            prefilter: [0.0, trim.theta, 0.0],
            delta: trim.delta.clone(),
        };
        Ok(Self {
            config,
            suite,
            params,
            inertia_inv,
            trim,
            weights,
            preference,
            state,
        })
    }

    pub fn trim(&self) -> &Trim {
        &self.trim
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    pub fn params(&self) -> &AeroParams {
        &self.params
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    fn attitude_state(&self, omega: [f64; 3], att: [f64; 3]) -> AttitudeState {
        AttitudeState {
            phi: att[0],
            theta: att[1],
            beta: att[2],
            omega,
            v: self.config.velocity,
            g0: G0,
        }
    }

    /// Truth rigid-body derivatives `(ω̇, Φ̇)` with deflections held.
    pub fn rotational_rhs(&self, omega: [f64; 3], att: [f64; 3], delta: &[f64]) -> Result<([f64; 3], [f64; 3])> {
        let alpha = self.trim.alpha;
        let mut p = self.params.clone();
        p.c_a = self.suite.c_a_truth(alpha, att[2])?;
        let t_a = airframe_moment(&p, &omega);
        let t_delta = control_moment(&p, &self.suite.cdelta_truth(alpha, att[2], delta)?);
        let omega_dot = angular_acceleration(&self.inertia_inv, &p.inertia, &omega, &t_a, &t_delta);
        let att_dot = attitude_rates(&self.attitude_state(omega, att));
        Ok((omega_dot, att_dot))
    }

    /// One RK4 step of the plant over `dt` with `delta` held.
    pub fn propagate(&self, omega: [f64; 3], att: [f64; 3], delta: &[f64], dt: f64) -> Result<([f64; 3], [f64; 3])> {
        let shift = |x: &[f64; 3], dx: &[f64; 3], h: f64| -> [f64; 3] { std::array::from_fn(|i| x[i] + h * dx[i]) };
        let (k1w, k1a) = self.rotational_rhs(omega, att, delta)?;
        let (k2w, k2a) = self.rotational_rhs(shift(&omega, &k1w, dt / 2.0), shift(&att, &k1a, dt / 2.0), delta)?;
        let (k3w, k3a) = self.rotational_rhs(shift(&omega, &k2w, dt / 2.0), shift(&att, &k2a, dt / 2.0), delta)?;
        let (k4w, k4a) = self.rotational_rhs(shift(&omega, &k3w, dt), shift(&att, &k3a, dt), delta)?;
        let comb = |x: &[f64; 3], a: &[f64; 3], b: &[f64; 3], c: &[f64; 3], d: &[f64; 3]| -> [f64; 3] {
            std::array::from_fn(|i| x[i] + dt / 6.0 * (a[i] + 2.0 * b[i] + 2.0 * c[i] + d[i]))
        };
        Ok((comb(&omega, &k1w, &k2w, &k3w, &k4w), comb(&att, &k1a, &k2a, &k3a, &k4a)))
    }

    /// Runs one control frame and advances the plant by `dt`.
    pub fn step(&mut self) -> Result<Frame> {
        let cfg = &self.config;
        let dt = cfg.dt;
        let s = &self.state;
        let alpha = self.trim.alpha;
        let beta = s.attitude[2];

        let command = [cfg.roll_command(s.t), self.trim.theta, 0.0];
        let prefilter: [f64; 3] =
            std::array::from_fn(|i| prefilter_step(s.prefilter[i], command[i], cfg.gains.tau[i], dt));

        let omega_ref = angle_loop(&cfg.gains, &self.attitude_state(s.omega, s.attitude), &prefilter)?;
        let mut onboard = self.params.clone();
        onboard.c_a = self.suite.c_a(alpha, beta)?;
        let t_a = airframe_moment(&onboard, &s.omega);
        let t_dem = rate_loop(&cfg.gains, &onboard.inertia, &s.omega, &omega_ref, &t_a);

        let kind = cfg.model_kind;
        let onboard_effect = control_moment(&onboard, &self.suite.cdelta(kind, alpha, beta, &s.delta)?);
        let truth_effect = control_moment(&onboard, &self.suite.cdelta_truth(alpha, beta, &s.delta)?);
        let demand_increment: [f64; 3] = std::array::from_fn(|i| t_dem[i] - onboard_effect[i]);

        let v0 = gang_contract(cfg.gang, &s.delta);
        let vlim = virtual_limits(cfg.gang, self.suite.limits());
        let (lower, upper) = increment_limits(&vlim, &v0, dt);
        let m_full = self.suite.effectiveness_columns(kind, alpha, beta, &s.delta)?;
        let m_virtual = gang_project(cfg.gang, &m_full, &v0);
        let scale = onboard.moment_scale();
        let mut g = m_virtual;
        for (r, s) in scale.iter().enumerate() {
            for c in 0..g.cols() {
                g.set(r, c, g.get(r, c) * s);
            }
        }
        let problem = AllocationProblem::new(g, demand_increment.to_vec(), lower, upper)
            .with_weights(self.weights.clone())
            .with_preference(self.preference.clone());
        let result = rpi_allocate(&problem)?;
        let v1: Vec<f64> = v0.iter().zip(&result.delta_increment).map(|(a, b)| a + b).collect();
        let limits = self.suite.limits();
        let delta: Vec<f64> = gang_expand(cfg.gang, &v1)
            .into_iter()
            .enumerate()
            .map(|(i, d)| d.clamp(limits.delta_min[i], limits.delta_max[i]))
            .collect();

        let t_delta = control_moment(&onboard, &self.suite.cdelta_truth(alpha, beta, &delta)?);

        let frame = Frame {
            t: s.t,
            attitude: s.attitude,
            attitude_ref: prefilter,
            omega: s.omega,
            omega_ref,
            delta: delta.clone(),
            t_dem,
            t_delta,
            onboard_effect,
            truth_effect,
            demand_increment,
            achieved_increment: [result.achieved[0], result.achieved[1], result.achieved[2]],
            saturated: result.any_saturated(),
        };

        let (omega, attitude) = self.propagate(s.omega, s.attitude, &delta, dt)?;
        let t_next = s.t + dt;
        if omega.iter().chain(&attitude).any(|x| !x.is_finite()) || omega.iter().any(|w| w.abs() > DIVERGENCE_RATE) {
            return Err(SimError::Diverged { t: t_next, omega });
        }
        self.state = SimState {
            t: t_next,
            omega,
            attitude,
            prefilter,
            delta,
        };
        Ok(frame)
    }
}

/// Runs the roll-pulse turn: `φ_ref` pulse, `θ_ref` at trim, `β_ref = 0`.
pub fn run_maneuver(config: &SimConfig, suite: &SurfaceSuite) -> Result<SimTrace> {
    let mut sim = Simulator::new(config.clone(), suite)?;
    let n = config.frames();
    let mut frames = Vec::with_capacity(n);
    for k in 0..n {
        // keep sample times on the exact grid k·dt
        sim.state.t = k as f64 * config.dt;
        frames.push(sim.step()?);
    }
    Ok(SimTrace {
        model_kind: config.model_kind,
        gang: config.gang,
        dt: config.dt,
        trim: sim.trim.clone(),
        frames,
    })
}

/// Runs the same maneuver with both onboard model kinds, concurrently.
pub fn compare(config: &SimConfig, suite: &SurfaceSuite) -> Result<(SimTrace, SimTrace)> {
    let with = |kind| SimConfig {
        model_kind: kind,
        ..config.clone()
    };
    let (pmlr, poly) = std::thread::scope(|s| {
        let a = s.spawn(|| run_maneuver(&with(ModelKind::Pmlr), suite));
        let b = s.spawn(|| run_maneuver(&with(ModelKind::Poly), suite));
        (a.join().expect("simulation thread panicked"), b.join().expect("simulation thread panicked"))
    });
    Ok((pmlr?, poly?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn isa_density_at_500m() {
        assert!((isa_density(0.0) - 1.225).abs() < 1e-12);
        assert!((isa_density(500.0) - 1.1673).abs() < 1e-4);
    }

    #[test]
    fn config_parsing() {
        let c = Config::parse("dt = 0.005\nmodel = poly\ngang = 2\nk_p = 8\nweights = 1 2 3 4 5").unwrap();
        let s = SimConfig::from_config(&c).unwrap();
        assert_eq!(s.dt, 0.005);
        assert_eq!(s.model_kind, ModelKind::Poly);
        assert_eq!(s.gang, GangMode::ElevatorRudderon);
        assert_eq!(s.gains.k_omega, [8.0, 10.0, 10.0]);
        assert_eq!(s.weights, Some(vec![1.0, 2.0, 3.0, 4.0, 5.0]));
        assert!(SimConfig::from_config(&Config::parse("gang = 3").unwrap()).is_err());
        assert!(SimConfig::from_config(&Config::parse("dt = -1").unwrap()).is_err());
        assert!(SimConfig::from_config(&Config::parse("weights = 1 2").unwrap()).is_err());
        assert!(SimConfig::from_config(&Config::parse("colour = red").unwrap()).is_err());
    }

    #[test]
    fn pulse_timing() {
        let c = SimConfig::default();
        assert_eq!(c.roll_command(0.99), 0.0);
        assert_eq!(c.roll_command(1.0), 50f64.to_radians());
        assert_eq!(c.roll_command(11.0), 0.0);
        assert_eq!(c.frames(), 2000);
    }
}
