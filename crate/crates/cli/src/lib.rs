//! Library half of the batch front-end: scenario parsing and the binary
//! snapshot format, shared by the `esbgk` binary and its tests.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod scenario;
pub mod snapshot;
