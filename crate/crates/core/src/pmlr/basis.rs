//! Canonical piecewise-linear basis of a single axis.

use super::grid::AxisBreakpoints;

/// `[1, z, |z − μ⁽²⁾|, …, |z − μ⁽ᴸ⁻¹⁾|]`.
pub fn basis_vector(z: f64, axis: &AxisBreakpoints) -> Vec<f64> {
    let mut out = Vec::with_capacity(axis.len());
    out.push(1.0);
    out.push(z);
    out.extend(axis.interior().iter().map(|mu| (z - mu).abs()));
    out
}

/// Derivative of [`basis_vector`] in `z`: `[0, 1, sign(z − μ⁽²⁾), …]`
/// with `sign(0) = 0`.
pub fn basis_derivative(z: f64, axis: &AxisBreakpoints) -> Vec<f64> {
    let mut out = Vec::with_capacity(axis.len());
    out.push(0.0);
    out.push(1.0);
    out.extend(axis.interior().iter().map(|mu| sign(z - mu)));
    out
}

/// Basis vectors at every breakpoint, as columns of an `L×L` matrix
/// (row-major storage).
pub fn node_basis_matrix(axis: &AxisBreakpoints) -> crate::tensor::Mat {
    let l = axis.len();
    let mut z = crate::tensor::Mat::zeros(l, l);
    for (c, &mu) in axis.values().iter().enumerate() {
        for (r, v) in basis_vector(mu, axis).into_iter().enumerate() {
            z.set(r, c, v);
        }
    }
    z
}

#[inline]
fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}
