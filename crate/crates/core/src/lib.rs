// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bundle;
pub mod cauchy;
pub mod cli;
pub mod fields;
pub mod report;
pub mod solver;
