//! Error-inhibiting block finite difference (BFD) scheme for the periodic
//! transport equation `u_t + u_x = 0`.
//!
//! The crate builds the two-node-per-block operator `Q(c1, c2)`, analyses it
//! through its closed-form 2x2 symbols, propagates solutions exactly through
//! that eigendecomposition or with a sixth-order Runge-Kutta method, filters
//! the oscillatory high band, and reproduces the operator as a penalised
//! `p = 1` nodal discontinuous Galerkin scheme.
//!
//! All numerics are generic over [`Real`]; the aliases below fix `f64`.

pub mod dg;
pub mod error;
pub mod fit;
pub mod grid;
pub mod linalg;
pub mod operators;
pub mod postproc;
pub mod propagation;
pub mod scalar;
pub mod symbol;

pub use error::{BfdError, Result};
pub use fit::LogLogFit;
pub use scalar::{DoubleDouble, Real, SpectralReal};

pub type BlockGrid = grid::BlockGrid<f64>;
pub type GridFunction = grid::GridFunction<f64>;
pub type SchemeParams = operators::SchemeParams<f64>;
pub type BlockOperator = operators::BlockOperator<f64>;
pub type StencilOperator = operators::StencilOperator<f64>;
pub type DenseMatrix = linalg::DenseMatrix<f64>;
pub type SymbolDecomposition = symbol::SymbolDecomposition<f64>;
pub type ModePair = symbol::ModePair<f64>;
pub type ModalExpansion = propagation::ModalExpansion<f64>;
pub type PenaltyCoefficients = dg::PenaltyCoefficients<f64>;
pub type DgBlocks = dg::DgBlocks<f64>;
