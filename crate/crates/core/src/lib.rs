//! Spatial likelihood maps for multi-speaker sound source localization, with
//! calibrated prediction regions and detection thresholds.
//!
//! The crate is organised bottom-up:
//!
//! * [`scene`] renders multichannel microphone signals for rectangular rooms
//!   using an image-source model.
//! * [`spectral`] computes STFTs and phase-transformed pair cross-spectra.
//! * [`srp`] steers those cross-spectra over an azimuth/elevation grid to
//!   produce likelihood maps, and reads/writes the map-exchange format.
//! * [`detect`] runs iterative peak detection with suppression and
//!   exclusion zones.
//! * [`regions`] grows contiguous prediction regions on a map.
//! * [`riskctl`] holds the losses, conformal risk control, p-values,
//!   multiple-testing procedures and Pareto-Testing.

pub mod detect;
pub mod doa;
pub mod error;
pub mod io;
pub mod regions;
pub mod riskctl;
pub mod rng;
pub mod scene;
pub mod spectral;
pub mod srp;

pub use doa::{doa_unit_vector, Doa};
pub use error::{Error, Result};
