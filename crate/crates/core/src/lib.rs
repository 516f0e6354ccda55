//! Recovering spatially varying thermal conductivity on periodic domains from
//! moving-sensor temperature readings.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod exec;
pub mod field;
pub mod forward;
pub mod grid;
pub mod image;
pub mod inverse;
pub mod pipeline;
pub mod plot;
pub mod sensing;
pub mod spectral;

pub use error::{Error, Result};
