//! Surface ganging: maps between a reduced virtual command vector and the
//! ten physical deflections.
//!
//! * Split aileron / ruddervator (7 virtual effectors): the six flaps pass
//!   through and the clamshells act as one split aileron
//!   `δ_a = ½[(δ7L − δ8U) + (δ7U − δ8L)]`. For `δ_a ≥ 0` the diagonal pair
//!   `(7L, 8U)` opens with `δ7L = δ_a`, `δ8U = −δ_a`; for `δ_a < 0` the
//!   pair `(7U, 8L)` opens with `δ7U = δ_a`, `δ8L = −δ_a`. The idle pair
//!   stays closed.
//! * Elevator / rudderon (5 virtual effectors): all flaps move together as
//!   an elevator `δ_e = (1/6)Σδ_i` and the four clamshell halves pass
//!   through.

use super::{FLAP_COUNT, S7L, S7U, S8L, S8U, SURFACE_COUNT};
use crate::alloc::EffectorLimits;
use crate::tensor::Mat;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GangMode {
    SplitAileronRuddervator,
    ElevatorRudderon,
}

impl GangMode {
    /// Mode from its number: 1 or 2.
    pub fn from_index(i: u32) -> Option<Self> {
        match i {
            1 => Some(GangMode::SplitAileronRuddervator),
            2 => Some(GangMode::ElevatorRudderon),
            _ => None,
        }
    }

    pub fn index(self) -> u32 {
        match self {
            GangMode::SplitAileronRuddervator => 1,
            GangMode::ElevatorRudderon => 2,
        }
    }

    pub fn virtual_dim(self) -> usize {
        match self {
            GangMode::SplitAileronRuddervator => FLAP_COUNT + 1,
            GangMode::ElevatorRudderon => 5,
        }
    }

    pub fn virtual_names(self) -> Vec<&'static str> {
        match self {
            GangMode::SplitAileronRuddervator => vec!["d1", "d2", "d3", "d4", "d5", "d6", "da"],
            GangMode::ElevatorRudderon => vec!["de", "d7L", "d7U", "d8L", "d8U"],
        }
    }
}

const CLAMSHELL_HALVES: [usize; 4] = [S7L, S7U, S8L, S8U];

/// Physical deflections of a virtual command.
pub fn gang_expand(mode: GangMode, v: &[f64]) -> Vec<f64> {
    assert_eq!(v.len(), mode.virtual_dim(), "virtual command length");
    let mut d = vec![0.0; SURFACE_COUNT];
    match mode {
        GangMode::SplitAileronRuddervator => {
            d[..FLAP_COUNT].copy_from_slice(&v[..FLAP_COUNT]);
            let da = v[FLAP_COUNT];
            if da >= 0.0 {
                d[S7L] = da;
                d[S8U] = -da;
            } else {
                d[S7U] = da;
                d[S8L] = -da;
            }
        }
        GangMode::ElevatorRudderon => {
            d[..FLAP_COUNT].iter_mut().for_each(|x| *x = v[0]);
            for (j, &s) in CLAMSHELL_HALVES.iter().enumerate() {
                d[s] = v[1 + j];
            }
        }
    }
    d
}

/// Virtual command of a physical deflection vector (`δ_a` and `δ_e`
/// averages).
pub fn gang_contract(mode: GangMode, delta: &[f64]) -> Vec<f64> {
    assert_eq!(delta.len(), SURFACE_COUNT, "surface vector length");
    match mode {
        GangMode::SplitAileronRuddervator => {
            let mut v = delta[..FLAP_COUNT].to_vec();
            v.push(0.5 * ((delta[S7L] - delta[S8U]) + (delta[S7U] - delta[S8L])));
            v
        }
        GangMode::ElevatorRudderon => {
            let mut v = vec![delta[..FLAP_COUNT].iter().sum::<f64>() / FLAP_COUNT as f64];
            v.extend(CLAMSHELL_HALVES.iter().map(|&s| delta[s]));
            v
        }
    }
}

/// Virtual effectiveness `[M₁ | M₂]` from the 3×10 physical columns. In the
/// split-aileron mode the aileron column depends on the sign of the current
/// aileron command `virtual_now[6]` (zero counts as positive).
pub fn gang_project(mode: GangMode, m_full: &Mat, virtual_now: &[f64]) -> Mat {
    assert_eq!(m_full.shape(), (3, SURFACE_COUNT), "physical effectiveness shape");
    let mut m = Mat::zeros(3, mode.virtual_dim());
    match mode {
        GangMode::SplitAileronRuddervator => {
            for r in 0..3 {
                for c in 0..FLAP_COUNT {
                    m.set(r, c, m_full.get(r, c));
                }
                let aileron = if virtual_now[FLAP_COUNT] >= 0.0 {
                    m_full.get(r, S7L) - m_full.get(r, S8U)
                } else {
                    m_full.get(r, S7U) - m_full.get(r, S8L)
                };
                m.set(r, FLAP_COUNT, aileron);
            }
        }
        GangMode::ElevatorRudderon => {
            for r in 0..3 {
                m.set(r, 0, (0..FLAP_COUNT).map(|c| m_full.get(r, c)).sum());
                for (j, &s) in CLAMSHELL_HALVES.iter().enumerate() {
                    m.set(r, 1 + j, m_full.get(r, s));
                }
            }
        }
    }
    m
}

/// Limits of the virtual effectors implied by the physical ones.
pub fn virtual_limits(mode: GangMode, limits: &EffectorLimits) -> EffectorLimits {
    let (lo, hi, rate) = (&limits.delta_min, &limits.delta_max, &limits.rate_max);
    let flap_min = lo[..FLAP_COUNT].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let flap_max = hi[..FLAP_COUNT].iter().copied().fold(f64::INFINITY, f64::min);
    let flap_rate = rate[..FLAP_COUNT].iter().copied().fold(f64::INFINITY, f64::min);
    let (vmin, vmax, vrate) = match mode {
        GangMode::SplitAileronRuddervator => {
            let mut vmin = lo[..FLAP_COUNT].to_vec();
            let mut vmax = hi[..FLAP_COUNT].to_vec();
            let mut vrate = rate[..FLAP_COUNT].to_vec();
            // δ_a ≥ 0 needs δ7L = δ_a ≤ max and δ8U = −δ_a ≥ min; likewise below zero
            vmax.push(hi[S7L].min(-lo[S8U]));
            vmin.push(lo[S7U].max(-hi[S8L]));
            vrate.push(CLAMSHELL_HALVES.iter().map(|&s| rate[s]).fold(f64::INFINITY, f64::min));
            (vmin, vmax, vrate)
        }
        GangMode::ElevatorRudderon => {
            let mut vmin = vec![flap_min];
            let mut vmax = vec![flap_max];
            let mut vrate = vec![flap_rate];
            for &s in &CLAMSHELL_HALVES {
                vmin.push(lo[s]);
                vmax.push(hi[s]);
                vrate.push(rate[s]);
            }
            (vmin, vmax, vrate)
        }
    };
    EffectorLimits::new(vmin, vmax, vrate).expect("virtual limits inherit valid physical limits")
}
