//! Reproducible experiment recipes on top of the simulation core.
//!
//! A recipe is a pure function of an [`config::ExperimentConfig`]: identical
//! config hash implies identical CSV bytes. [`recipes::write_bundle`] runs a
//! recipe, writes its tables and charts, and records a manifest that
//! suffices to regenerate every table bit for bit
//! ([`recipes::regenerate`]).

// Validators write `!(x > 0.0)` on purpose: unlike `x <= 0.0` it also
// rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod manifest;
pub mod recipes;
pub mod showcase;
pub mod svg;
pub mod table;

pub use mazesim_core::{Result, SimError};
