//! Flying-wing aerodynamic moment model and onboard effector models.
//!
//! The aircraft has ten control surfaces, ordered
//! `[δ1 … δ6, δ7L, δ7U, δ8L, δ8U]`: six trailing-edge flaps (1–3 port,
//! 4–6 starboard, flap `i` mirrors flap `7 − i`) and two split clamshells
//! (7 port, 8 starboard), each with a lower and an upper half. Positive
//! deflection is trailing edge down, so lower halves deflect in `[0, 60°]`
//! and upper halves in `[−60°, 0]`.
//!
//! Flap tables take `(δ_i, α)`, clamshell tables `(δ_U, δ_L, β, α)` and the
//! bare-airframe table `(α, β)`. Each table yields `(C_l, C_m, C_n)`
//! increments. The truth model interpolates the tables directly; the onboard
//! model is either the PMLR fit of the same tables or a least-squares
//! polynomial fit.

use thiserror::Error;

use crate::alloc::EffectorLimits;
use crate::ndi::{cross, mat3_vec};
use crate::pmlr::io::NamedDataset;
use crate::pmlr::{fit_regression, interpolate, GriddedDataset, PmlrError, PmlrModel};
use crate::tensor::Mat;

pub mod gang;
pub mod poly;
pub mod synth;

pub use gang::{gang_contract, gang_expand, gang_project, virtual_limits, GangMode};
pub use poly::PolyModel;
pub use synth::synth_dataset;

pub const SURFACE_COUNT: usize = 10;
pub const FLAP_COUNT: usize = 6;
pub const CLAMSHELL_COUNT: usize = 2;

pub const S7L: usize = 6;
pub const S7U: usize = 7;
pub const S8L: usize = 8;
pub const S8U: usize = 9;

pub const SURFACE_NAMES: [&str; SURFACE_COUNT] =
    ["d1", "d2", "d3", "d4", "d5", "d6", "d7L", "d7U", "d8L", "d8U"];

/// Names of the table components in a dataset file.
pub const FLAP_COMPONENTS: [&str; FLAP_COUNT] = ["flap1", "flap2", "flap3", "flap4", "flap5", "flap6"];
pub const CLAMSHELL_COMPONENTS: [&str; CLAMSHELL_COUNT] = ["clamshell7", "clamshell8"];
pub const AIRFRAME_COMPONENT: &str = "airframe";

/// `(lower, upper)` surface indices of clamshell `c` (0 → 7, 1 → 8).
pub fn clamshell_surfaces(c: usize) -> (usize, usize) {
    (S7L + 2 * c, S7U + 2 * c)
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AirframeError {
    #[error("dataset has no component named {0:?}")]
    MissingComponent(String),
    #[error("component {name:?}: {msg}")]
    Component { name: String, msg: String },
    #[error("invalid aerodynamic parameters: {0}")]
    InvalidParams(String),
    #[error("expected {expected} surface deflections, got {got}")]
    SurfaceCount { expected: usize, got: usize },
    #[error(transparent)]
    Pmlr(#[from] PmlrError),
}

pub type Result<T> = std::result::Result<T, AirframeError>;

/// Which onboard effector model to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Pmlr,
    Poly,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Pmlr => "pmlr",
            ModelKind::Poly => "poly",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "pmlr" => Ok(ModelKind::Pmlr),
            "poly" => Ok(ModelKind::Poly),
            _ => Err(format!("unknown model kind {s:?} (expected pmlr or poly)")),
        }
    }
}

/// Flight condition and mass properties entering the moment equations.
#[derive(Debug, Clone, PartialEq)]
pub struct AeroParams {
    /// Dynamic pressure (Pa).
    pub q_inf: f64,
    /// Reference area (m²).
    pub s_ref: f64,
    /// Diagonal of `L_ref = diag(b, c̄, b)` (m).
    pub l_ref: [f64; 3],
    /// True airspeed (m/s).
    pub v: f64,
    pub inertia: Mat,
    /// Bare-airframe coefficients `C_A(α, β)` for the current frame.
    pub c_a: [f64; 3],
    /// Damping derivatives `C_ω`.
    pub c_omega: Mat,
}

impl AeroParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(AirframeError::InvalidParams(msg.into()));
        if !(self.q_inf > 0.0 && self.q_inf.is_finite()) {
            return bad("dynamic pressure must be positive");
        }
        if !(self.v > 0.0 && self.v.is_finite()) {
            return bad("airspeed must be positive");
        }
        if !(self.s_ref > 0.0) || self.l_ref.iter().any(|l| !(*l > 0.0)) {
            return bad("reference area and lengths must be positive");
        }
        if !crate::linalg::is_spd(&self.inertia) {
            return bad("inertia must be symmetric positive definite");
        }
        if self.c_omega.shape() != (3, 3) || !self.c_omega.is_finite() {
            return bad("damping derivatives must be a finite 3x3 matrix");
        }
        Ok(())
    }

    /// `q_∞ S L_ref`, the coefficient-to-moment scaling.
    pub fn moment_scale(&self) -> [f64; 3] {
        std::array::from_fn(|i| self.q_inf * self.s_ref * self.l_ref[i])
    }
}

/// `T_δ = q_∞ S L_ref C_δ`.
pub fn control_moment(params: &AeroParams, c_delta: &[f64; 3]) -> [f64; 3] {
    let s = params.moment_scale();
    std::array::from_fn(|i| s[i] * c_delta[i])
}

/// `T_a = q_∞ S L_ref (C_A + (1/2V) L_ref C_ω ω)`.
pub fn airframe_moment(params: &AeroParams, omega: &[f64; 3]) -> [f64; 3] {
    let damping = mat3_vec(&params.c_omega, omega);
    let s = params.moment_scale();
    std::array::from_fn(|i| {
        s[i] * (params.c_a[i] + params.l_ref[i] / (2.0 * params.v) * damping[i])
    })
}

/// Rigid-body rotational acceleration `I⁻¹(T_a + T_δ − ω × Iω)`.
pub fn angular_acceleration(inertia_inv: &Mat, inertia: &Mat, omega: &[f64; 3], t_a: &[f64; 3], t_delta: &[f64; 3]) -> [f64; 3] {
    let gyro = cross(omega, &mat3_vec(inertia, omega));
    let net: [f64; 3] = std::array::from_fn(|i| t_a[i] + t_delta[i] - gyro[i]);
    mat3_vec(inertia_inv, &net)
}

/// Geometry, mass properties and static derivatives of the synthetic
/// aircraft.
#[derive(Debug, Clone, PartialEq)]
pub struct Airframe {
    pub span: f64,
    pub chord: f64,
    pub area: f64,
    pub mass: f64,
    /// Lift-curve slope (1/rad) and zero-α lift coefficient.
    pub lift_slope: f64,
    pub lift_zero: f64,
    pub inertia: Mat,
    pub c_omega: Mat,
}

impl Airframe {
    pub fn synthetic() -> Self {
        Self {
            span: 2.0,
            chord: 0.45,
            area: 0.9,
            mass: 5.5,
            lift_slope: 2.52,
            lift_zero: 0.0,
            inertia: Mat::from_rows(&[&[0.45, 0.0, -0.02], &[0.0, 0.35, 0.0], &[-0.02, 0.0, 0.75]])
                .expect("finite constants"),
            c_omega: Mat::from_rows(&[&[-0.3, 0.0, 0.05], &[0.0, -1.2, 0.0], &[-0.03, 0.0, -0.1]])
                .expect("finite constants"),
        }
    }

    pub fn l_ref(&self) -> [f64; 3] {
        [self.span, self.chord, self.span]
    }

    /// Angle of attack for level flight, `(W/(q S) − C_L0)/C_Lα`.
    pub fn trim_alpha(&self, q_inf: f64, g0: f64) -> f64 {
        (self.mass * g0 / (q_inf * self.area) - self.lift_zero) / self.lift_slope
    }

    pub fn params(&self, q_inf: f64, v: f64, c_a: [f64; 3]) -> AeroParams {
        AeroParams {
            q_inf,
            s_ref: self.area,
            l_ref: self.l_ref(),
            v,
            inertia: self.inertia.clone(),
            c_a,
            c_omega: self.c_omega.clone(),
        }
    }
}

/// Tables, onboard models and limits of all ten surfaces plus the bare
/// airframe. Immutable once built; all angles in radians.
#[derive(Debug, Clone)]
pub struct SurfaceSuite {
    flap_tables: Vec<GriddedDataset>,
    clamshell_tables: Vec<GriddedDataset>,
    airframe_table: GriddedDataset,
    flap_models: Vec<PmlrModel>,
    clamshell_models: Vec<PmlrModel>,
    airframe_model: PmlrModel,
    flap_poly: Vec<PolyModel>,
    clamshell_poly: Vec<PolyModel>,
    limits: EffectorLimits,
}

/// Default surface rate limit (deg/s).
pub const DEFAULT_RATE_LIMIT_DEG: f64 = 100.0;

pub fn default_limits(rate_deg_s: f64) -> EffectorLimits {
    let r = 30f64.to_radians();
    let c = 60f64.to_radians();
    let mut lo = vec![-r; FLAP_COUNT];
    let mut hi = vec![r; FLAP_COUNT];
    // lower halves open downward, upper halves upward
    lo.extend([0.0, -c, 0.0, -c]);
    hi.extend([c, 0.0, c, 0.0]);
    EffectorLimits::new(lo, hi, vec![rate_deg_s.to_radians(); SURFACE_COUNT])
        .expect("static limits are valid")
}

fn find<'a>(items: &'a [NamedDataset], name: &str) -> Result<&'a GriddedDataset> {
    items
        .iter()
        .find(|d| d.name == name)
        .map(|d| &d.data)
        .ok_or_else(|| AirframeError::MissingComponent(name.to_string()))
}

fn check_shape(name: &str, d: &GriddedDataset, k: usize) -> Result<()> {
    if d.k() != k || d.m() != 3 {
        return Err(AirframeError::Component {
            name: name.to_string(),
            msg: format!("expected {k} inputs and 3 outputs, got {} and {}", d.k(), d.m()),
        });
    }
    Ok(())
}

impl SurfaceSuite {
    /// Deterministic synthetic suite.
    pub fn synthetic(seed: u64) -> Result<Self> {
        Self::from_datasets(&synth_dataset(seed), DEFAULT_RATE_LIMIT_DEG)
    }

    /// Builds the suite from tables whose breakpoints are in degrees, fitting
    /// both onboard model kinds.
    pub fn from_datasets(items: &[NamedDataset], rate_deg_s: f64) -> Result<Self> {
        let to_rad = |name: &str, k: usize| -> Result<GriddedDataset> {
            let d = find(items, name)?;
            check_shape(name, d, k)?;
            Ok(d.map_axes(f64::to_radians, "rad")?)
        };
        let flap_tables = FLAP_COMPONENTS
            .iter()
            .map(|n| to_rad(n, 2))
            .collect::<Result<Vec<_>>>()?;
        let clamshell_tables = CLAMSHELL_COMPONENTS
            .iter()
            .map(|n| to_rad(n, 4))
            .collect::<Result<Vec<_>>>()?;
        let airframe_table = to_rad(AIRFRAME_COMPONENT, 2)?;

        let flap_models = flap_tables.iter().map(fit_regression).collect::<std::result::Result<Vec<_>, _>>()?;
        let clamshell_models = clamshell_tables
            .iter()
            .map(fit_regression)
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let airframe_model = fit_regression(&airframe_table)?;

        let flap_poly = flap_tables
            .iter()
            .enumerate()
            .map(|(i, t)| PolyModel::fit(t, &synth::flap_poly_degrees(i)))
            .collect();
        let clamshell_poly = clamshell_tables
            .iter()
            .map(|t| PolyModel::fit(t, &synth::clamshell_poly_degrees()))
            .collect();

        Ok(Self {
            flap_tables,
            clamshell_tables,
            airframe_table,
            flap_models,
            clamshell_models,
            airframe_model,
            flap_poly,
            clamshell_poly,
            limits: default_limits(rate_deg_s),
        })
    }

    pub fn limits(&self) -> &EffectorLimits {
        &self.limits
    }

    pub fn set_rate_limit_deg(&mut self, rate_deg_s: f64) {
        self.limits = default_limits(rate_deg_s);
    }

    pub fn flap_tables(&self) -> &[GriddedDataset] {
        &self.flap_tables
    }

    pub fn clamshell_tables(&self) -> &[GriddedDataset] {
        &self.clamshell_tables
    }

    pub fn airframe_table(&self) -> &GriddedDataset {
        &self.airframe_table
    }

    pub fn flap_models(&self) -> &[PmlrModel] {
        &self.flap_models
    }

    pub fn clamshell_models(&self) -> &[PmlrModel] {
        &self.clamshell_models
    }

    pub fn airframe_model(&self) -> &PmlrModel {
        &self.airframe_model
    }

    pub fn flap_poly(&self) -> &[PolyModel] {
        &self.flap_poly
    }

    pub fn clamshell_poly(&self) -> &[PolyModel] {
        &self.clamshell_poly
    }

    /// Onboard bare-airframe coefficients (PMLR for both model kinds).
    pub fn c_a(&self, alpha: f64, beta: f64) -> Result<[f64; 3]> {
        Ok(to3(self.airframe_model.evaluate(&[alpha, beta])?))
    }

    pub fn c_a_truth(&self, alpha: f64, beta: f64) -> Result<[f64; 3]> {
        Ok(to3(interpolate(&self.airframe_table, &[alpha, beta])?))
    }

    /// Onboard `C_δ`: sum of the six flap and two clamshell contributions.
    pub fn cdelta(&self, kind: ModelKind, alpha: f64, beta: f64, delta: &[f64]) -> Result<[f64; 3]> {
        check_count(delta)?;
        let mut sum = [0.0; 3];
        for (i, &d) in delta[..FLAP_COUNT].iter().enumerate() {
            let z = [d, alpha];
            let c = match kind {
                ModelKind::Pmlr => self.flap_models[i].evaluate(&z)?,
                ModelKind::Poly => self.flap_poly[i].evaluate(&z),
            };
            add3(&mut sum, &c);
        }
        for c in 0..CLAMSHELL_COUNT {
            let z = clamshell_point(c, alpha, beta, delta);
            let v = match kind {
                ModelKind::Pmlr => self.clamshell_models[c].evaluate(&z)?,
                ModelKind::Poly => self.clamshell_poly[c].evaluate(&z),
            };
            add3(&mut sum, &v);
        }
        Ok(sum)
    }

    /// `C_δ` from direct interpolation of the tables.
    pub fn cdelta_truth(&self, alpha: f64, beta: f64, delta: &[f64]) -> Result<[f64; 3]> {
        check_count(delta)?;
        let mut sum = [0.0; 3];
        for (i, t) in self.flap_tables.iter().enumerate() {
            add3(&mut sum, &interpolate(t, &[delta[i], alpha])?);
        }
        for (c, t) in self.clamshell_tables.iter().enumerate() {
            add3(&mut sum, &interpolate(t, &clamshell_point(c, alpha, beta, delta))?);
        }
        Ok(sum)
    }

    /// `∂C_δ/∂δ` as a 3×10 matrix. PMLR columns use the nested
    /// block-Kronecker derivative; polynomial columns the analytic partials.
    pub fn effectiveness_columns(&self, kind: ModelKind, alpha: f64, beta: f64, delta: &[f64]) -> Result<Mat> {
        check_count(delta)?;
        let mut m = Mat::zeros(3, SURFACE_COUNT);
        let mut put = |col: usize, v: &[f64]| {
            for (r, x) in v.iter().enumerate() {
                m.set(r, col, *x);
            }
        };
        for (i, &d) in delta[..FLAP_COUNT].iter().enumerate() {
            let z = [d, alpha];
            let col = match kind {
                ModelKind::Pmlr => self.flap_models[i].partial_nested(&z, 0)?,
                ModelKind::Poly => self.flap_poly[i].partial(&z, 0),
            };
            put(i, &col);
        }
        for c in 0..CLAMSHELL_COUNT {
            let (lower, upper) = clamshell_surfaces(c);
            let z = clamshell_point(c, alpha, beta, delta);
            // input 0 is the upper half, input 1 the lower half
            for (axis, surface) in [(0, upper), (1, lower)] {
                let col = match kind {
                    ModelKind::Pmlr => self.clamshell_models[c].partial_nested(&z, axis)?,
                    ModelKind::Poly => self.clamshell_poly[c].partial(&z, axis),
                };
                put(surface, &col);
            }
        }
        Ok(m)
    }
}

/// Clamshell table input `(δ_U, δ_L, β, α)`.
pub fn clamshell_point(c: usize, alpha: f64, beta: f64, delta: &[f64]) -> [f64; 4] {
    let (lower, upper) = clamshell_surfaces(c);
    [delta[upper], delta[lower], beta, alpha]
}

/// Surface vector of the mirror-image aircraft: flaps `i ↔ 7 − i`,
/// clamshell 7 ↔ 8.
pub fn mirror_surfaces(delta: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; SURFACE_COUNT];
    for i in 0..FLAP_COUNT {
        out[FLAP_COUNT - 1 - i] = delta[i];
    }
    out[S7L] = delta[S8L];
    out[S7U] = delta[S8U];
    out[S8L] = delta[S7L];
    out[S8U] = delta[S7U];
    out
}

fn check_count(delta: &[f64]) -> Result<()> {
    if delta.len() != SURFACE_COUNT {
        return Err(AirframeError::SurfaceCount {
            expected: SURFACE_COUNT,
            got: delta.len(),
        });
    }
    Ok(())
}

fn add3(sum: &mut [f64; 3], v: &[f64]) {
    for (s, x) in sum.iter_mut().zip(v) {
        *s += x;
    }
}

fn to3(v: Vec<f64>) -> [f64; 3] {
    [v[0], v[1], v[2]]
}
