//! Numerical laboratory for δ-discretized circular averages against fractal
//! measures.
//!
//! The crate provides dyadic grids and discrete measures ([`grid`]), annulus
//! geometry and tangency incidences ([`geometry`]), Katz–Tao sets and slicing
//! ([`slicing`], [`cantor`]), the averaging operator A_δ ([`averaging`]),
//! weighted mixed norms ([`mixed_norm`]), the five extremal examples
//! ([`extremal`]), multi-scale sweeps with log-log slope fits ([`scaling`]),
//! wave-equation regularity via the Abel transform ([`wave`]), and text/binary
//! output formats ([`io`]).
//!
//! Data-parallel kernels run on rayon when the `parallel` feature is enabled
//! (the default); [`exec::ExecPolicy`] selects the path at run time.

// `!(x > 0.0)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod averaging;
pub mod cantor;
pub mod error;
pub mod exec;
pub mod extremal;
pub mod geometry;
pub mod grid;
pub mod io;
pub mod mixed_norm;
pub mod scaling;
pub mod slicing;
pub mod wave;

pub use error::{Error, Result};
pub use exec::ExecPolicy;
