//! Deterministic synthetic aerodynamic tables.
//!
//! Starboard surfaces are generated from closed-form shapes whose
//! coefficients are perturbed by up to ±10% from the seed; port surfaces are
//! their mirror images (roll and yaw negate, pitch is kept, β negates).
//! Every control table is zero at zero deflection. Features that a smooth
//! polynomial cannot follow are deliberate: trailing-edge-down deflection is
//! more effective than trailing-edge-up, flap yaw grows quadratically with a
//! different rate on either side of zero, and clamshell effectiveness
//! saturates with opening, with an upper/lower interaction term in yaw.
//!
//! Breakpoints are stored in degrees; coefficients are dimensionless.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{AIRFRAME_COMPONENT, CLAMSHELL_COMPONENTS, FLAP_COMPONENTS};
use crate::pmlr::io::NamedDataset;
use crate::pmlr::{AxisBreakpoints, GriddedDataset, Labels};

const OUTPUTS: [&str; 3] = ["dCl", "dCm", "dCn"];

pub fn flap_axes() -> Vec<AxisBreakpoints> {
    vec![linspace(-30.0, 30.0, 7), linspace(-5.0, 25.0, 7)]
}

pub fn clamshell_axes() -> Vec<AxisBreakpoints> {
    vec![
        linspace(-60.0, 0.0, 5),
        linspace(0.0, 60.0, 5),
        linspace(-10.0, 10.0, 5),
        linspace(-5.0, 25.0, 5),
    ]
}

pub fn airframe_axes() -> Vec<AxisBreakpoints> {
    vec![linspace(-5.0, 25.0, 7), linspace(-10.0, 10.0, 5)]
}

fn linspace(lo: f64, hi: f64, n: usize) -> AxisBreakpoints {
    AxisBreakpoints::linspace(lo, hi, n).expect("static grid")
}

/// Polynomial degrees `(δ, α)` per output of flap `i` (0-based); inner,
/// middle and outer flaps get different term counts.
pub fn flap_poly_degrees(i: usize) -> Vec<Vec<u32>> {
    let position = if i < 3 { 2 - i } else { i - 3 };
    match position {
        0 => vec![vec![3, 2], vec![3, 2], vec![4, 3]],
        1 => vec![vec![4, 3], vec![3, 3], vec![4, 3]],
        _ => vec![vec![3, 3], vec![3, 2], vec![3, 3]],
    }
}

/// Polynomial degrees `(δ_U, δ_L, β, α)` per clamshell output.
pub fn clamshell_poly_degrees() -> Vec<Vec<u32>> {
    vec![vec![2, 2, 2, 3], vec![3, 3, 2, 4], vec![3, 3, 2, 3]]
}

#[derive(Debug, Clone, Copy)]
struct FlapShape {
    span: f64,
    arm: f64,
    roll: f64,
    pitch: f64,
    yaw_linear: f64,
    yaw_down: f64,
    yaw_up: f64,
}

#[derive(Debug, Clone, Copy)]
struct ClamshellShape {
    roll: f64,
    pitch: f64,
    yaw: f64,
    interaction: f64,
}

const MAX_FLAP: f64 = std::f64::consts::FRAC_PI_6;
const ALPHA_SCALE: f64 = 0.436;

fn flap_coefficients(s: &FlapShape, delta_deg: f64, alpha_deg: f64) -> [f64; 3] {
    let d = delta_deg.to_radians();
    let a = alpha_deg.to_radians();
    // trailing edge down is more effective, and effectiveness fades at large deflection
    let lift = d * (1.0 + 0.25 * d.signum()) * (1.0 - 0.25 * (d / MAX_FLAP).powi(2));
    let quad = if d > 0.0 { s.yaw_down } else { s.yaw_up };
    [
        -s.roll * s.span * lift * (1.0 - 0.3 * a / ALPHA_SCALE),
        -s.pitch * s.arm * lift * (1.0 - 0.2 * a / ALPHA_SCALE),
        s.span * (s.yaw_linear * d * (1.0 + 2.0 * a) + quad * d * d),
    ]
}

/// Effectiveness saturating with opening angle.
fn opening(x: f64) -> f64 {
    (1.0 - (-2.5 * x).exp()) / 2.5
}

fn clamshell_coefficients(s: &ClamshellShape, upper_deg: f64, lower_deg: f64, beta_deg: f64, alpha_deg: f64) -> [f64; 3] {
    let u = -upper_deg.to_radians();
    let l = lower_deg.to_radians();
    let b = beta_deg.to_radians();
    let a = alpha_deg.to_radians();
    let (gu, gl) = (opening(u), opening(l));
    [
        s.roll * (gu - gl) * (1.0 - 0.4 * a) * (1.0 + 0.5 * b),
        s.pitch * (gu - gl) * (1.0 - 0.3 * a),
        s.yaw * (0.4 * (gl + gu) + 0.3 * (l * l + u * u) + s.interaction * l * u)
            * (1.0 + 0.8 * b)
            * (1.0 + 0.5 * a),
    ]
}

/// Roll and yaw negate under the left/right mirror.
fn mirror([l, m, n]: [f64; 3]) -> [f64; 3] {
    [-l, m, -n]
}

/// Bare-airframe `(C_l, C_m, C_n)` over `(α, β)`: weathercock-stable,
/// positive dihedral effect, mildly nose-up at zero α.
fn airframe_coefficients(alpha_deg: f64, beta_deg: f64) -> [f64; 3] {
    let a = alpha_deg.to_radians();
    let b = beta_deg.to_radians();
    [
        -0.08 * b * (1.0 + a),
        0.03 - 0.3 * a + 0.2 * a * a,
        0.06 * b + 0.1 * b * b.abs(),
    ]
}

/// Flap tables 1–6, clamshell tables 7–8 and the bare-airframe table.
pub fn synth_dataset(seed: u64) -> Vec<NamedDataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut jitter = move || 1.0 + rng.gen_range(-0.1..0.1);

    // starboard flaps 4, 5, 6, inboard to outboard
    let spans = [0.25, 0.55, 0.85];
    let arms = [0.6, 0.8, 1.0];
    let starboard: Vec<FlapShape> = (0..3)
        .map(|p| FlapShape {
            span: spans[p],
            arm: arms[p],
            roll: 0.12 * jitter(),
            pitch: 0.10 * jitter(),
            yaw_linear: 0.02 * jitter(),
            yaw_down: 0.06 * jitter(),
            yaw_up: 0.015 * jitter(),
        })
        .collect();
    let clam = ClamshellShape {
        roll: 0.04 * jitter(),
        pitch: 0.012 * jitter(),
        yaw: 0.02 * jitter(),
        interaction: 0.6 * jitter(),
    };

    let flap_labels = Labels::new(&[("delta", "deg"), ("alpha", "deg")], &OUTPUTS);
    let clam_labels = Labels::new(
        &[("delta_u", "deg"), ("delta_l", "deg"), ("beta", "deg"), ("alpha", "deg")],
        &OUTPUTS,
    );

    let mut out = Vec::new();
    for (i, name) in FLAP_COMPONENTS.iter().enumerate() {
        let port = i < 3;
        let shape = starboard[if port { 2 - i } else { i - 3 }];
        let data = GriddedDataset::from_fn(flap_axes(), 3, flap_labels.clone(), |p| {
            let c = flap_coefficients(&shape, p[0], p[1]);
            (if port { mirror(c) } else { c }).to_vec()
        })
        .expect("finite synthetic table");
        out.push(NamedDataset {
            name: name.to_string(),
            data,
        });
    }
    for (c, name) in CLAMSHELL_COMPONENTS.iter().enumerate() {
        let port = c == 0;
        let data = GriddedDataset::from_fn(clamshell_axes(), 3, clam_labels.clone(), |p| {
            if port {
                mirror(clamshell_coefficients(&clam, p[0], p[1], -p[2], p[3])).to_vec()
            } else {
                clamshell_coefficients(&clam, p[0], p[1], p[2], p[3]).to_vec()
            }
        })
        .expect("finite synthetic table");
        out.push(NamedDataset {
            name: name.to_string(),
            data,
        });
    }
    let airframe = GriddedDataset::from_fn(
        airframe_axes(),
        3,
        Labels::new(&[("alpha", "deg"), ("beta", "deg")], &["Cl", "Cm", "Cn"]),
        |p| airframe_coefficients(p[0], p[1]).to_vec(),
    )
    .expect("finite synthetic table");
    out.push(NamedDataset {
        name: AIRFRAME_COMPONENT.to_string(),
        data: airframe,
    });
    out
}
