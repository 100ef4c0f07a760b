//! Direct multilinear interpolation of a gridded dataset.
//!
//! This is the lookup-table path used as the simulation truth model. It
//! shares no code with PMLR evaluation: it locates the enclosing cell on each
//! axis and blends the `2^k` corner values. Outside the grid the boundary
//! cell is extended linearly.

use super::grid::{AxisBreakpoints, GriddedDataset};
use super::{PmlrError, Result};

/// Cell index `c` (so that the cell is `[μ_c, μ_{c+1}]`) and the local
/// coordinate `t`, which leaves `[0, 1]` only when extrapolating.
pub fn locate(axis: &AxisBreakpoints, z: f64) -> (usize, f64) {
    let mu = axis.values();
    let last_cell = mu.len() - 2;
    // index of first breakpoint strictly greater than z
    let upper = mu.partition_point(|m| *m <= z);
    let c = upper.saturating_sub(1).min(last_cell);
    let t = (z - mu[c]) / (mu[c + 1] - mu[c]);
    (c, t)
}

pub fn interpolate(data: &GriddedDataset, z: &[f64]) -> Result<Vec<f64>> {
    let k = data.k();
    if z.len() != k {
        return Err(PmlrError::Arity {
            expected: k,
            got: z.len(),
        });
    }
    if z.iter().any(|v| !v.is_finite()) {
        return Err(PmlrError::NonFinite("query point".into()));
    }
    let shape = data.shape();
    let cells: Vec<(usize, f64)> = data
        .axes()
        .iter()
        .zip(z)
        .map(|(a, v)| locate(a, *v))
        .collect();

    let m = data.m();
    let mut out = vec![0.0; m];
    for corner in 0..(1usize << k) {
        let mut weight = 1.0;
        let mut flat = 0;
        for (j, &(c, t)) in cells.iter().enumerate() {
            let hi = (corner >> (k - 1 - j)) & 1 == 1;
            weight *= if hi { t } else { 1.0 - t };
            flat = flat * shape[j] + c + usize::from(hi);
        }
        if weight == 0.0 {
            continue;
        }
        for (o, v) in out.iter_mut().zip(data.node_value(flat)) {
            *o += weight * v;
        }
    }
    Ok(out)
}
