use super::basis::{basis_derivative, basis_vector};
use super::grid::{AxisBreakpoints, Labels};
use super::{PmlrError, Result};
use crate::tensor::{block_kron, dot, kron_vec, Mat};

/// Fitted piecewise multi-linear representation.
///
/// `gamma` is `m × ∏L_j`. Its columns follow the ordering of
/// `ẑ_1 ⊗ ẑ_2 ⊗ … ⊗ ẑ_k`, so axis 1 is outermost and axis `k` varies
/// fastest. Axis order is part of the model.
#[derive(Debug, Clone, PartialEq)]
pub struct PmlrModel {
    gamma: Mat,
    axes: Vec<AxisBreakpoints>,
    labels: Labels,
}

impl PmlrModel {
    pub fn new(gamma: Mat, axes: Vec<AxisBreakpoints>) -> Result<Self> {
        let labels = Labels::generic(axes.len(), gamma.rows());
        Self::with_labels(gamma, axes, labels)
    }

    pub fn with_labels(gamma: Mat, axes: Vec<AxisBreakpoints>, labels: Labels) -> Result<Self> {
        if axes.is_empty() {
            return Err(PmlrError::Shape("model needs at least one axis".into()));
        }
        let n: usize = axes.iter().map(AxisBreakpoints::len).product();
        if gamma.cols() != n {
            return Err(PmlrError::Shape(format!(
                "gamma has {} columns, axes need {n}",
                gamma.cols()
            )));
        }
        if !gamma.is_finite() {
            return Err(PmlrError::NonFinite("gamma".into()));
        }
        labels.check(axes.len(), gamma.rows())?;
        Ok(Self {
            gamma,
            axes,
            labels,
        })
    }

    pub fn gamma(&self) -> &Mat {
        &self.gamma
    }

    pub fn axes(&self) -> &[AxisBreakpoints] {
        &self.axes
    }

    pub fn labels(&self) -> &Labels {
        &self.labels
    }

    pub fn set_labels(&mut self, labels: Labels) -> Result<()> {
        labels.check(self.k(), self.m())?;
        self.labels = labels;
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.axes.len()
    }

    pub fn m(&self) -> usize {
        self.gamma.rows()
    }

    pub fn coefficient_count(&self) -> usize {
        self.gamma.rows() * self.gamma.cols()
    }

    /// Whether `z` lies inside the grid hull.
    pub fn in_hull(&self, z: &[f64]) -> bool {
        z.len() == self.k() && z.iter().zip(&self.axes).all(|(v, a)| a.contains(*v))
    }

    fn check_arity(&self, z: &[f64]) -> Result<()> {
        if z.len() != self.k() {
            return Err(PmlrError::Arity {
                expected: self.k(),
                got: z.len(),
            });
        }
        if z.iter().any(|v| !v.is_finite()) {
            return Err(PmlrError::NonFinite("query point".into()));
        }
        Ok(())
    }

    /// `Γ (ẑ_1 ⊗ … ⊗ ẑ_k)`.
    pub fn evaluate(&self, z: &[f64]) -> Result<Vec<f64>> {
        self.check_arity(z)?;
        let chain = self.kron_chain(z, None);
        Ok(self.apply_gamma(&chain))
    }

    /// `((Γ ⊠ ẑ_k) ⊠ ẑ_{k−1} … ⊠ ẑ_2) ẑ_1`, evaluated with block Kronecker
    /// products. Equal to [`evaluate`](Self::evaluate) up to rounding.
    pub fn evaluate_nested(&self, z: &[f64]) -> Result<Vec<f64>> {
        self.check_arity(z)?;
        let mut acc = self.gamma.clone();
        for j in (1..self.k()).rev() {
            let zj = Mat::col(&basis_vector(z[j], &self.axes[j]))?;
            acc = block_kron(&acc, &zj)?;
        }
        Ok(acc.mul_vec(&basis_vector(z[0], &self.axes[0]))?)
    }

    /// Partial derivative along `axis` in the nested block-Kronecker form:
    /// the basis vector of that axis is replaced by its derivative inside
    /// `((Γ ⊠ ẑ_k) ⊠ …) ẑ_1`.
    pub fn partial_nested(&self, z: &[f64], axis: usize) -> Result<Vec<f64>> {
        self.check_arity(z)?;
        if axis >= self.k() {
            return Err(PmlrError::Arity {
                expected: self.k(),
                got: axis + 1,
            });
        }
        let factor = |j: usize| {
            if j == axis {
                basis_derivative(z[j], &self.axes[j])
            } else {
                basis_vector(z[j], &self.axes[j])
            }
        };
        let mut acc = self.gamma.clone();
        for j in (1..self.k()).rev() {
            acc = block_kron(&acc, &Mat::col(&factor(j))?)?;
        }
        Ok(acc.mul_vec(&factor(0))?)
    }

    /// `m×k` Jacobian; column `j` uses the basis derivative on axis `j`.
    pub fn jacobian(&self, z: &[f64]) -> Result<Mat> {
        self.check_arity(z)?;
        let mut jac = Mat::zeros(self.m(), self.k());
        for j in 0..self.k() {
            let chain = self.kron_chain(z, Some(j));
            for (r, v) in self.apply_gamma(&chain).into_iter().enumerate() {
                jac.set(r, j, v);
            }
        }
        Ok(jac)
    }

    /// Value together with the partial derivative along one axis.
    pub fn evaluate_with_partial(&self, z: &[f64], axis: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_arity(z)?;
        if axis >= self.k() {
            return Err(PmlrError::Arity {
                expected: self.k(),
                got: axis + 1,
            });
        }
        let value = self.apply_gamma(&self.kron_chain(z, None));
        let partial = self.apply_gamma(&self.kron_chain(z, Some(axis)));
        Ok((value, partial))
    }

    fn kron_chain(&self, z: &[f64], differentiate: Option<usize>) -> Vec<f64> {
        let factor = |j: usize| {
            if differentiate == Some(j) {
                basis_derivative(z[j], &self.axes[j])
            } else {
                basis_vector(z[j], &self.axes[j])
            }
        };
        let mut chain = factor(0);
        for j in 1..self.k() {
            chain = kron_vec(&chain, &factor(j));
        }
        chain
    }

    fn apply_gamma(&self, chain: &[f64]) -> Vec<f64> {
        (0..self.m())
            .map(|r| dot(self.gamma.row_slice(r), chain))
            .collect()
    }
}
