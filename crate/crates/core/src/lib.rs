// `!(x > 0.0)` is used on purpose to reject NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod base;
pub mod cocycle;
pub mod error;
pub mod exec;
pub mod fiber;
pub mod holonomy;
pub mod rigidity;
pub mod scenario;
