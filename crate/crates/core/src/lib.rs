//! First-order Sobolev calculus on finite metric measure spaces.
//!
//! The crate builds δ-scale partitions of a finite space, evaluates the
//! discrete gradient energies defined on them, computes the exact Hopf-Lax
//! semigroup, and provides numerical checks for the structural inequalities
//! that tie these objects together (energy sandwich, Clarkson inequalities,
//! discrete weak upper gradients, Poincaré and telescoping estimates, and the
//! conservation laws of the implicit Euler gradient flow).
//!
//! Everything operates on a [`MetricMeasureSpace`]: a list of points, a
//! symmetric distance table and a nonnegative mass per point.

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod curves;
pub mod diagnostics;
pub mod energy;
mod error;
pub mod experiments;
pub mod fields;
pub mod flow;
pub mod generate;
pub mod hopf_lax;
pub mod io;
mod linalg;
mod par;
pub mod partition;
pub mod report;
pub mod slopes;
pub mod space;

pub use error::{Error, Result};
pub use space::{Ball, MetricMeasureSpace, ScalarField};
