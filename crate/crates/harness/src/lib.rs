//! File formats, Monte Carlo evaluation and command-line plumbing around
//! `cascade-core`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod evalbench;
pub mod fixtures;
pub mod io;
