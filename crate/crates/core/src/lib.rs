//! Numerical laboratory for the two-component Camassa–Holm system on the
//! circle and on a truncated line: Green-kernel Helmholtz inversion, RK4
//! evolution, and diagnostics for energy conservation, the flux identities
//! and the loss of compact support.

// `!(a < b)` style guards are used on purpose so NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod dynamics;
pub mod grid;
pub mod helmholtz;
