//! Soil moisture retrieval from three-band (P/L/C) SAR reflectivity.
//!
//! The crate is organised bottom-up:
//!
//! - [`soil`]: gravimetric/volumetric moisture and the moisture/dielectric mixing model.
//! - [`forward`]: the adjusted Dubois forward model (crop-height and wavelength terms).
//! - [`nn`]: a small multilayer perceptron with a Levenberg–Marquardt trainer.
//! - [`lm`]: the damped least-squares engine shared by network training and calibration.
//! - [`synth`]: synthetic sample generation from the forward model.
//! - [`calibration`]: crop-height linear model, Dubois constant fitting, residual diagnostics.
//! - [`pipeline`]: per-point and per-raster retrieval with height gating between the
//!   bare-soil and vegetated-surface networks.
//! - [`raster`]: ESRI ASCII grids, speckle filtering, window sampling and ground-point tables.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod error;
pub mod forward;
mod kv;
pub mod lm;
pub mod nn;
pub mod pipeline;
pub mod raster;
pub mod soil;
pub mod synth;

pub use error::{Error, Result};
