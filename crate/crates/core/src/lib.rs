//! Piecewise multi-linear effector models and incremental nonlinear control
//! allocation.
//!
//! * [`tensor`]: dense matrices, block Kronecker and Kronecker products,
//!   vectorization and reshaping.
//! * [`pmlr`]: fitting, evaluation and differentiation of piecewise
//!   multi-linear representations of gridded data.
//! * [`alloc`]: frame-wise allocation with the redistributed weighted
//!   pseudo-inverse.
//! * [`airframe`]: synthetic flying-wing aerodynamic tables, onboard
//!   effector models and surface ganging.
//! * [`ndi`]: nonlinear dynamic inversion rate and attitude loops.
//! * [`sim`]: closed-loop rotational simulation, maneuvers and metrics.

// `!(x > 0.0)` style checks are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod airframe;
pub mod alloc;
pub mod config;
pub mod linalg;
pub mod ndi;
pub mod pmlr;
pub mod sim;
pub mod tensor;
