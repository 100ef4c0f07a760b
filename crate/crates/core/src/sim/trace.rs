use std::fmt::Write as _;

use super::{Frame, Result, SimError, Trim};
use crate::airframe::{GangMode, ModelKind, SURFACE_NAMES};
use crate::pmlr::io::format_f64;

/// Uniformly sampled record of a closed-loop run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    pub model_kind: ModelKind,
    pub gang: GangMode,
    pub dt: f64,
    pub trim: Trim,
    pub frames: Vec<Frame>,
}

impl SimTrace {
    pub fn errors(&self) -> Vec<[f64; 3]> {
        self.frames.iter().map(Frame::error).collect()
    }

    pub fn metrics(&self) -> Result<ErrorMetrics> {
        error_metrics(&self.errors())
    }

    /// Largest roll angle reached (rad).
    pub fn peak_roll(&self) -> f64 {
        self.frames.iter().map(|f| f.attitude[0]).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Per-axis RMS and peak absolute allocation error (N·m).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorMetrics {
    pub rms: [f64; 3],
    pub peak: [f64; 3],
}

pub fn error_metrics(errors: &[[f64; 3]]) -> Result<ErrorMetrics> {
    if errors.is_empty() {
        return Err(SimError::EmptyTrace);
    }
    let n = errors.len() as f64;
    let rms = std::array::from_fn(|i| (errors.iter().map(|e| e[i] * e[i]).sum::<f64>() / n).sqrt());
    let peak = std::array::from_fn(|i| errors.iter().map(|e| e[i].abs()).fold(0.0, f64::max));
    Ok(ErrorMetrics { rms, peak })
}

const ANGLES: [&str; 3] = ["phi", "theta", "beta"];
const RATES: [&str; 3] = ["p", "q", "r"];
const AXES: [&str; 3] = ["l", "m", "n"];

/// CSV with a `#` metadata line, then one row per frame. Angles, rates and
/// deflections are given in radians followed by a parallel set in degrees.
pub fn write_csv(trace: &SimTrace) -> String {
    let mut out = String::new();
    let trim = &trace.trim;
    let _ = writeln!(
        out,
        "# model={} gang={} dt_s={} trim_alpha_rad={} trim_alpha_deg={} trim_theta_rad={} trim_theta_deg={} trim_flap_deg={}",
        trace.model_kind.name(),
        trace.gang.index(),
        format_f64(trace.dt),
        format_f64(trim.alpha),
        format_f64(trim.alpha.to_degrees()),
        format_f64(trim.theta),
        format_f64(trim.theta.to_degrees()),
        format_f64(trim.flap.to_degrees()),
    );

    let mut cols: Vec<String> = vec!["t_s".into()];
    let angle_cols = |suffix: &str| -> Vec<String> {
        let mut v: Vec<String> = ANGLES.iter().map(|a| format!("{a}_{suffix}")).collect();
        v.extend(ANGLES.iter().map(|a| format!("{a}_ref_{suffix}")));
        v.extend(RATES.iter().map(|a| format!("{a}_{suffix}_s")));
        v.extend(RATES.iter().map(|a| format!("{a}_ref_{suffix}_s")));
        v.extend(SURFACE_NAMES.iter().map(|s| format!("{s}_{suffix}")));
        v
    };
    cols.extend(angle_cols("rad"));
    for name in ["Tdem", "Tdelta", "E"] {
        cols.extend(AXES.iter().map(|a| format!("{name}_{a}_Nm")));
    }
    cols.push("saturated".into());
    cols.extend(angle_cols("deg"));
    out.push_str(&cols.join(","));
    out.push('\n');

    for f in &trace.frames {
        let mut angular: Vec<f64> = Vec::with_capacity(22);
        angular.extend(f.attitude);
        angular.extend(f.attitude_ref);
        angular.extend(f.omega);
        angular.extend(f.omega_ref);
        angular.extend(&f.delta);

        let mut row: Vec<String> = vec![format_f64(f.t)];
        row.extend(angular.iter().map(|v| format_f64(*v)));
        row.extend(f.t_dem.iter().chain(&f.t_delta).chain(&f.error()).map(|v| format_f64(*v)));
        row.push(u8::from(f.saturated).to_string());
        row.extend(angular.iter().map(|v| format_f64(v.to_degrees())));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}
