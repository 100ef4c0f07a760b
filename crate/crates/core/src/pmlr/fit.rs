//! Exact fitting of PMLR coefficients from gridded data.
//!
//! Two independent routes compute the same `Γ`:
//!
//! * [`fit_regression`] assembles the `n×n` regressor matrix whose columns
//!   are the basis Kronecker chains at every node and solves `Y = Γ X`
//!   directly. Cubic in the node count.
//! * [`fit_iterative`] peels one axis at a time with the reshaping
//!   transformation and the block Kronecker product, inverting only the
//!   per-axis `L_j × L_j` node-basis matrices.

use super::basis::node_basis_matrix;
use super::grid::GriddedDataset;
use super::model::PmlrModel;
use super::{PmlrError, Result};
use crate::linalg::{Lu, LuFailure, MAX_CONDITION};
use crate::tensor::{block_kron, kron, reshape_t, Mat};

/// Node budget above which [`fit_regression`] refuses to build the dense
/// regressor.
pub const DEFAULT_NODE_BUDGET: usize = 200_000;

#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    pub node_budget: usize,
    pub max_condition: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            node_budget: DEFAULT_NODE_BUDGET,
            max_condition: MAX_CONDITION,
        }
    }
}

/// Which fitting route to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitMethod {
    Regression,
    Iterative,
}

pub fn fit(data: &GriddedDataset, method: FitMethod) -> Result<PmlrModel> {
    match method {
        FitMethod::Regression => fit_regression(data),
        FitMethod::Iterative => fit_iterative(data),
    }
}

pub fn fit_regression(data: &GriddedDataset) -> Result<PmlrModel> {
    fit_regression_with(data, FitOptions::default())
}

/// Solves `Γ X = Y` with `X = Ẑ_1 ⊗ … ⊗ Ẑ_k` by LU with partial pivoting.
pub fn fit_regression_with(data: &GriddedDataset, opts: FitOptions) -> Result<PmlrModel> {
    let n = data.node_count();
    if n > opts.node_budget {
        return Err(PmlrError::NodeBudget {
            nodes: n,
            budget: opts.node_budget,
        });
    }
    // Column c of X is the basis chain at node c (row-major node order).
    let mut x = node_basis_matrix(&data.axes()[0]);
    for axis in &data.axes()[1..] {
        x = kron(&x, &node_basis_matrix(axis))?;
    }
    let lu = Lu::factor(&x).map_err(|e| match e {
        LuFailure::ZeroPivot(_) | LuFailure::NotSquare => PmlrError::Singular { axis: None },
    })?;
    let cond = lu.condition_estimate();
    if !(cond <= opts.max_condition) {
        return Err(PmlrError::IllConditioned { condition: cond });
    }
    let m = data.m();
    let mut gamma = Vec::with_capacity(m * n);
    for o in 0..m {
        // Γ_o X = y_o  ⇔  Xᵀ Γ_oᵀ = y_oᵀ
        gamma.extend(lu.solve_transpose(&data.output_slice(o)));
    }
    let gamma = Mat::new(m, n, gamma).map_err(|_| PmlrError::NonFinite("gamma".into()))?;
    PmlrModel::with_labels(gamma, data.axes().to_vec(), data.labels().clone())
}

/// Axis-by-axis recursion `Q_j = 𝒯_{λ_j}(Q_{j−1}) ⊠ Ẑ_j⁻¹` starting from
/// the axis-reversed, vectorized data of each output.
pub fn fit_iterative(data: &GriddedDataset) -> Result<PmlrModel> {
    let axes = data.axes();
    let k = axes.len();
    let shape = data.shape();
    let mut inverses = Vec::with_capacity(k);
    for (j, axis) in axes.iter().enumerate() {
        let z = node_basis_matrix(axis);
        let lu = Lu::factor(&z).map_err(|_| PmlrError::Singular { axis: Some(j) })?;
        if !(lu.condition_estimate() <= MAX_CONDITION) {
            return Err(PmlrError::Singular { axis: Some(j) });
        }
        inverses.push(lu.inverse());
    }

    let mut rows = Vec::with_capacity(data.m());
    for o in 0..data.m() {
        // Reversing the axis order and vectorizing column-major lists the
        // nodes with the last axis fastest, which is the row-major flat order.
        let mut q = Mat::col(&data.output_slice(o))?;
        for j in 0..k {
            let lambda: usize = shape[j + 1..].iter().product();
            q = block_kron(&reshape_t(lambda, &q)?, &inverses[j])?;
        }
        rows.push(q);
    }
    let gamma = Mat::vstack(&rows)?;
    PmlrModel::with_labels(gamma, axes.to_vec(), data.labels().clone())
}

#[cfg(test)]
mod tests {
    use super::super::grid::{AxisBreakpoints, Labels};
    use super::*;

    fn axis(mu: &[f64]) -> AxisBreakpoints {
        AxisBreakpoints::new(mu.to_vec()).unwrap()
    }

    fn abs_data() -> GriddedDataset {
        GriddedDataset::new(vec![axis(&[-1.0, 0.0, 1.0])], 1, vec![1.0, 0.0, 1.0]).unwrap()
    }

    fn product_data() -> GriddedDataset {
        GriddedDataset::from_fn(
            vec![axis(&[0.0, 1.0]), axis(&[0.0, 1.0])],
            1,
            Labels::generic(2, 1),
            |p| vec![p[0] * p[1]],
        )
        .unwrap()
    }

    fn assert_gamma(model: &PmlrModel, want: &[f64]) {
        let got = model.gamma().as_slice();
        assert_eq!(got.len(), want.len());
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() < 1e-14, "{got:?} vs {want:?}");
        }
    }

    #[test]
    fn one_dimensional_abs_fit() {
        assert_gamma(&fit_regression(&abs_data()).unwrap(), &[0.0, 0.0, 1.0]);
        assert_gamma(&fit_iterative(&abs_data()).unwrap(), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn bilinear_fit() {
        assert_gamma(&fit_regression(&product_data()).unwrap(), &[0.0, 0.0, 0.0, 1.0]);
        assert_gamma(&fit_iterative(&product_data()).unwrap(), &[0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn constant_fit() {
        let axes = vec![axis(&[0.0, 1.0, 3.0]), axis(&[-2.0, 5.0])];
        let d = GriddedDataset::from_fn(axes, 1, Labels::generic(2, 1), |_| vec![4.5]).unwrap();
        let mut want = vec![0.0; 6];
        want[0] = 4.5;
        assert_gamma(&fit_regression(&d).unwrap(), &want);
        assert_gamma(&fit_iterative(&d).unwrap(), &want);
    }

    #[test]
    fn outputs_fit_independently() {
        let ax = || vec![axis(&[-1.0, 0.0, 1.0])];
        let two = GriddedDataset::new(ax(), 2, vec![1.0, 2.0, 0.0, -1.0, 1.0, 5.0]).unwrap();
        let first = GriddedDataset::new(ax(), 1, vec![1.0, 0.0, 1.0]).unwrap();
        let second = GriddedDataset::new(ax(), 1, vec![2.0, -1.0, 5.0]).unwrap();
        let g = fit_iterative(&two).unwrap();
        assert_eq!(g.m(), 2);
        assert_eq!(g.gamma().row_slice(0), fit_iterative(&first).unwrap().gamma().row_slice(0));
        assert_eq!(g.gamma().row_slice(1), fit_iterative(&second).unwrap().gamma().row_slice(0));
    }

    #[test]
    fn node_budget_is_enforced() {
        let opts = FitOptions {
            node_budget: 3,
            ..FitOptions::default()
        };
        assert_eq!(
            fit_regression_with(&product_data(), opts),
            Err(PmlrError::NodeBudget {
                nodes: 4,
                budget: 3
            })
        );
    }

    #[test]
    fn clustered_breakpoints_are_rejected() {
        let d = GriddedDataset::new(
            vec![axis(&[0.0, 1e-15, 1.0])],
            1,
            vec![0.0, 1.0, 0.0],
        )
        .unwrap();
        assert!(fit_regression(&d).is_err());
        assert_eq!(fit_iterative(&d), Err(PmlrError::Singular { axis: Some(0) }));
    }
}
