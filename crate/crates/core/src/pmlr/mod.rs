//! Piecewise multi-linear representation (PMLR) of gridded vector-valued
//! functions.
//!
//! Each axis contributes the canonical piecewise-linear basis
//! `ẑ_j = [1, z_j, |z_j − μ_j⁽²⁾|, …, |z_j − μ_j⁽ᴸ⁻¹⁾|]` and the model is
//! `g(z) = Γ (ẑ_1 ⊗ … ⊗ ẑ_k)`. Fitted on a rectilinear grid, `g` reproduces
//! the multilinear interpolant of the data exactly, including its analytic
//! Jacobian.

use thiserror::Error;

use crate::tensor::TensorError;

pub mod basis;
pub mod fit;
pub mod grid;
pub mod interp;
pub mod io;
pub mod model;

pub use basis::{basis_derivative, basis_vector};
pub use fit::{fit, fit_iterative, fit_regression, fit_regression_with, FitMethod, FitOptions};
pub use grid::{AxisBreakpoints, GriddedDataset, Labels};
pub use interp::interpolate;
pub use model::PmlrModel;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PmlrError {
    #[error("expected a {expected}-dimensional point, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("invalid axis: {0}")]
    InvalidAxis(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("non-finite {0}")]
    NonFinite(String),
    #[error("singular node-basis matrix{}", axis.map(|a| format!(" on axis {}", a + 1)).unwrap_or_default())]
    Singular { axis: Option<usize> },
    #[error("regressor condition estimate {condition:e} exceeds limit")]
    IllConditioned { condition: f64 },
    #[error("{nodes} grid nodes exceed the regression budget of {budget}; use the iterative fit")]
    NodeBudget { nodes: usize, budget: usize },
    #[error("line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

pub type Result<T> = std::result::Result<T, PmlrError>;
