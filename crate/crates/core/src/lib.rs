//! Minimax (minimum enclosing ball) centers for collections of subspaces of
//! mixed dimension, with duality-gap certificates and order selection.

// `!(x > 0.0)` style checks are deliberate: they reject NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod datagen;
pub mod error;
pub mod experiments;
pub mod fixtures;
pub mod grassmann;
pub mod order;
pub mod solver;

pub use error::{GmebError, Result};
pub use grassmann::{Basis, SubspaceCollection};
pub use solver::{solve, DualWeights, SolverConfig, SolverResult, StepMode};
