//! Incremental (frame-wise) control allocation.
//!
//! Each frame the nonlinear effector model is replaced by its local affine
//! approximation `G Δδ = ΔT_dem`, where `ΔT_dem = T_dem − g(x₀, δ₀)`, and the
//! increment is found with the redistributed weighted pseudo-inverse (RPI):
//! solve unconstrained, clamp and freeze every effector that leaves its
//! incremental bounds, then re-allocate the remaining demand over the
//! effectors that are still free.

use thiserror::Error;

use crate::linalg::{is_spd, Lu, MAX_CONDITION};
use crate::tensor::Mat;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AllocError {
    #[error("{what}: expected length {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("weighting matrix is not symmetric positive definite")]
    WeightsNotSpd,
    #[error("G W⁻¹ Gᵀ condition estimate {condition:e} exceeds limit (rank deficient G)")]
    RankDeficient { condition: f64 },
    #[error("invalid effector limits: {0}")]
    InvalidLimits(String),
    #[error("non-finite {0}")]
    NonFinite(&'static str),
}

pub type Result<T> = std::result::Result<T, AllocError>;

/// Position and rate limits per effector (radians, radians/second).
#[derive(Debug, Clone, PartialEq)]
pub struct EffectorLimits {
    pub delta_min: Vec<f64>,
    pub delta_max: Vec<f64>,
    pub rate_max: Vec<f64>,
}

impl EffectorLimits {
    pub fn new(delta_min: Vec<f64>, delta_max: Vec<f64>, rate_max: Vec<f64>) -> Result<Self> {
        let n = delta_min.len();
        for (what, v) in [("delta_max", &delta_max), ("rate_max", &rate_max)] {
            if v.len() != n {
                return Err(AllocError::Dimension {
                    what,
                    expected: n,
                    got: v.len(),
                });
            }
        }
        for i in 0..n {
            if !(delta_min[i] < delta_max[i]) {
                return Err(AllocError::InvalidLimits(format!(
                    "effector {i}: min {} not below max {}",
                    delta_min[i], delta_max[i]
                )));
            }
            if !(rate_max[i] > 0.0) || !rate_max[i].is_finite() {
                return Err(AllocError::InvalidLimits(format!(
                    "effector {i}: rate limit {} must be positive",
                    rate_max[i]
                )));
            }
        }
        Ok(Self {
            delta_min,
            delta_max,
            rate_max,
        })
    }

    pub fn len(&self) -> usize {
        self.delta_min.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delta_min.is_empty()
    }

    pub fn contains(&self, delta: &[f64]) -> bool {
        delta
            .iter()
            .enumerate()
            .all(|(i, d)| *d >= self.delta_min[i] && *d <= self.delta_max[i])
    }
}

/// Incremental bounds `(lower, upper)` for one frame of length `dt`.
///
/// `upper = min(δ_max − δ₀, δ̇_max Δt)` and `lower = max(δ_min − δ₀, −δ̇_max Δt)`.
/// When `δ₀` lies outside its position limits by more than one rate step the
/// two bounds would cross; they are then both pinned to the rate step
/// pointing back inside.
pub fn increment_limits(limits: &EffectorLimits, delta0: &[f64], dt: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(dt > 0.0, "dt must be positive");
    assert_eq!(delta0.len(), limits.len(), "deflection length mismatch");
    let mut lower = Vec::with_capacity(delta0.len());
    let mut upper = Vec::with_capacity(delta0.len());
    for (i, &d0) in delta0.iter().enumerate() {
        let step = limits.rate_max[i] * dt;
        let up = (limits.delta_max[i] - d0).min(step);
        let lo = (limits.delta_min[i] - d0).max(-step);
        upper.push(up.max(-step));
        lower.push(lo.min(step));
    }
    (lower, upper)
}

/// `ΔT_dem = T_dem − g(x₀, δ₀)`.
pub fn incremental_demand(t_dem: &[f64], onboard_effect: &[f64]) -> Result<Vec<f64>> {
    if t_dem.len() != onboard_effect.len() {
        return Err(AllocError::Dimension {
            what: "onboard effect",
            expected: t_dem.len(),
            got: onboard_effect.len(),
        });
    }
    Ok(t_dem.iter().zip(onboard_effect).map(|(t, g)| t - g).collect())
}

/// Weighted pseudo-inverse `G† = W⁻¹Gᵀ(GW⁻¹Gᵀ)⁻¹`.
pub fn weighted_pinv(g: &Mat, w: &Mat) -> Result<Mat> {
    let kappa = g.cols();
    if w.shape() != (kappa, kappa) {
        return Err(AllocError::Dimension {
            what: "weights",
            expected: kappa,
            got: w.rows(),
        });
    }
    if !g.is_finite() {
        return Err(AllocError::NonFinite("effectiveness matrix"));
    }
    if !is_spd(w) {
        return Err(AllocError::WeightsNotSpd);
    }
    let winv_gt = winv_gt(g, w)?;
    let s = g.matmul(&winv_gt).expect("shapes checked");
    let lu = Lu::factor(&s).map_err(|_| AllocError::RankDeficient {
        condition: f64::INFINITY,
    })?;
    let condition = lu.condition_estimate();
    if !(condition <= MAX_CONDITION) {
        return Err(AllocError::RankDeficient { condition });
    }
    Ok(right_solve(&winv_gt, &lu))
}

/// `W⁻¹ Gᵀ`, column by column.
fn winv_gt(g: &Mat, w: &Mat) -> Result<Mat> {
    let lu = Lu::factor(w).map_err(|_| AllocError::WeightsNotSpd)?;
    let (d, kappa) = g.shape();
    let mut out = Mat::zeros(kappa, d);
    for r in 0..d {
        for (i, v) in lu.solve(g.row_slice(r)).into_iter().enumerate() {
            out.set(i, r, v);
        }
    }
    Ok(out)
}

/// `B S⁻¹` given the LU factors of `S` (`B S⁻¹ = (S⁻ᵀ Bᵀ)ᵀ`).
fn right_solve(b: &Mat, s: &Lu) -> Mat {
    let mut out = Mat::zeros(b.rows(), b.cols());
    for r in 0..b.rows() {
        for (c, v) in s.solve_transpose(b.row_slice(r)).into_iter().enumerate() {
            out.set(r, c, v);
        }
    }
    out
}

/// Pseudo-inverse used inside redistribution: falls back to the ridge form
/// `W⁻¹Gᵀ(GW⁻¹Gᵀ + εI)⁻¹`, `ε = 1e-10·trace`, when the free columns lose
/// rank. Returns `None` when `G` has no effect at all.
fn pinv_with_ridge(g: &Mat, w: &Mat) -> Option<Mat> {
    let winv_gt = winv_gt(g, w).ok()?;
    let mut s = g.matmul(&winv_gt).expect("shapes checked");
    let well_posed = Lu::factor(&s)
        .ok()
        .filter(|lu| lu.condition_estimate() <= MAX_CONDITION);
    let lu = match well_posed {
        Some(lu) => lu,
        None => {
            let trace: f64 = (0..s.rows()).map(|i| s.get(i, i)).sum();
            if !(trace > 0.0) {
                return None;
            }
            let eps = 1e-10 * trace;
            for i in 0..s.rows() {
                s.set(i, i, s.get(i, i) + eps);
            }
            Lu::factor(&s).ok()?
        }
    };
    Some(right_solve(&winv_gt, &lu))
}

/// One frame of the incremental allocation problem.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationProblem {
    pub g_matrix: Mat,
    pub delta_t_dem: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub weights: Mat,
    pub preference: Vec<f64>,
}

impl AllocationProblem {
    /// Problem with `W = I` and `δ_p = 0`.
    pub fn new(g_matrix: Mat, delta_t_dem: Vec<f64>, lower: Vec<f64>, upper: Vec<f64>) -> Self {
        let kappa = g_matrix.cols();
        Self {
            g_matrix,
            delta_t_dem,
            lower,
            upper,
            weights: Mat::identity(kappa),
            preference: vec![0.0; kappa],
        }
    }

    pub fn with_weights(mut self, weights: Mat) -> Self {
        self.weights = weights;
        self
    }

    pub fn with_preference(mut self, preference: Vec<f64>) -> Self {
        self.preference = preference;
        self
    }

    pub fn effector_count(&self) -> usize {
        self.g_matrix.cols()
    }

    fn validate(&self) -> Result<()> {
        let (d, kappa) = self.g_matrix.shape();
        let check = |what, got: usize, expected| {
            if got == expected {
                Ok(())
            } else {
                Err(AllocError::Dimension {
                    what,
                    expected,
                    got,
                })
            }
        };
        check("demand", self.delta_t_dem.len(), d)?;
        check("lower bounds", self.lower.len(), kappa)?;
        check("upper bounds", self.upper.len(), kappa)?;
        check("preference", self.preference.len(), kappa)?;
        check("weights", self.weights.rows(), kappa)?;
        check("weights", self.weights.cols(), kappa)?;
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        if !self.g_matrix.is_finite() {
            return Err(AllocError::NonFinite("effectiveness matrix"));
        }
        if !finite(&self.delta_t_dem) || !finite(&self.preference) {
            return Err(AllocError::NonFinite("demand or preference"));
        }
        if !finite(&self.lower) || !finite(&self.upper) {
            return Err(AllocError::NonFinite("bounds"));
        }
        if let Some(i) = (0..kappa).find(|&i| self.lower[i] > self.upper[i]) {
            return Err(AllocError::InvalidLimits(format!(
                "effector {i}: lower bound {} above upper bound {}",
                self.lower[i], self.upper[i]
            )));
        }
        if !is_spd(&self.weights) {
            return Err(AllocError::WeightsNotSpd);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AllocationResult {
    pub delta_increment: Vec<f64>,
    /// `G Δδ`.
    pub achieved: Vec<f64>,
    /// Effectors clamped to a bound during redistribution.
    pub saturated: Vec<bool>,
    /// Number of pseudo-inverse passes, the first included.
    pub iterations: usize,
}

impl AllocationResult {
    /// `ΔT_dem − G Δδ`.
    pub fn residual(&self, delta_t_dem: &[f64]) -> Vec<f64> {
        delta_t_dem
            .iter()
            .zip(&self.achieved)
            .map(|(d, a)| d - a)
            .collect()
    }

    pub fn any_saturated(&self) -> bool {
        self.saturated.iter().any(|s| *s)
    }
}

fn sub_matrix(m: &Mat, rows: &[usize], cols: &[usize]) -> Mat {
    let mut out = Mat::zeros(rows.len(), cols.len());
    for (i, &r) in rows.iter().enumerate() {
        for (j, &c) in cols.iter().enumerate() {
            out.set(i, j, m.get(r, c));
        }
    }
    out
}

/// Redistributed pseudo-inverse allocation.
///
/// Every pass solves `Δδ_F = δ_p,F + G_F†(v − G_F δ_p,F)` over the free set
/// `F`, where `v` is the demand left after the frozen effectors. Effectors
/// outside `[lower, upper]` are clamped and frozen together; the loop stops
/// when a pass clamps nothing, the free set is empty, or after `κ` passes.
/// Infeasible demand is not an error: the leftover shows up in
/// [`AllocationResult::residual`].
pub fn rpi_allocate(problem: &AllocationProblem) -> Result<AllocationResult> {
    problem.validate()?;
    let g = &problem.g_matrix;
    let (d, kappa) = g.shape();
    let all_rows: Vec<usize> = (0..d).collect();

    let mut delta = vec![0.0; kappa];
    let mut frozen = vec![false; kappa];
    let mut iterations = 0;

    for _ in 0..kappa {
        let free: Vec<usize> = (0..kappa).filter(|&i| !frozen[i]).collect();
        if free.is_empty() {
            break;
        }
        iterations += 1;

        let mut v = problem.delta_t_dem.clone();
        for i in (0..kappa).filter(|&i| frozen[i]) {
            for (r, vr) in v.iter_mut().enumerate() {
                *vr -= g.get(r, i) * delta[i];
            }
        }
        let g_f = sub_matrix(g, &all_rows, &free);
        let w_f = sub_matrix(&problem.weights, &free, &free);
        let pref_f: Vec<f64> = free.iter().map(|&i| problem.preference[i]).collect();
        let g_pref = g_f.mul_vec(&pref_f).expect("shapes checked");
        let rhs: Vec<f64> = v.iter().zip(&g_pref).map(|(a, b)| a - b).collect();

        let correction = match pinv_with_ridge(&g_f, &w_f) {
            Some(pinv) => pinv.mul_vec(&rhs).expect("shapes checked"),
            None => vec![0.0; free.len()],
        };

        let mut clamped_any = false;
        for (slot, &i) in free.iter().enumerate() {
            let x = pref_f[slot] + correction[slot];
            if x > problem.upper[i] {
                delta[i] = problem.upper[i];
                frozen[i] = true;
                clamped_any = true;
            } else if x < problem.lower[i] {
                delta[i] = problem.lower[i];
                frozen[i] = true;
                clamped_any = true;
            } else {
                delta[i] = x;
            }
        }
        if !clamped_any {
            break;
        }
    }

    let achieved = g.mul_vec(&delta).expect("shapes checked");
    Ok(AllocationResult {
        delta_increment: delta,
        achieved,
        saturated: frozen,
        iterations,
    })
}

/// `δ = δ₀ + Δδ`.
pub fn apply_increment(delta0: &[f64], result: &AllocationResult) -> Vec<f64> {
    assert_eq!(
        delta0.len(),
        result.delta_increment.len(),
        "deflection length mismatch"
    );
    delta0
        .iter()
        .zip(&result.delta_increment)
        .map(|(a, b)| a + b)
        .collect()
}
