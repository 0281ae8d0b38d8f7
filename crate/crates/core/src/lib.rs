//! Syndrome-statistics simulation and inference for quantum error
//! correction: single-qubit channel algebra, syndrome likelihoods for the
//! repetition and five-qubit codes, sequential Bayesian estimation of the
//! channel parameters under control policies, and Bayesian model
//! selection between correlated and uncorrelated noise.

// negated comparisons on floats are deliberate: `!(x >= 0.0)` rejects NaN
// where `x < 0.0` would let it through
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// index loops over the 3 Bloch axes mirror the tensor formulas
#![allow(clippy::needless_range_loop)]

pub mod channel;
pub mod codes;
pub mod estimation;
pub mod model_select;
pub mod stats;
