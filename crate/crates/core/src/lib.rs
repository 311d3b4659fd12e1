// Negated float comparisons (`!(x > 0.0)`) are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dynamics;
pub mod estimation;
pub mod fixtures;
pub mod model;
pub mod motor;
pub mod sim;
pub mod wbc;
