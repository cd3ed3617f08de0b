//! Minimal bandpass filter selection for multispectral classification.
//!
//! Filters are chosen to maximize the minimum pairwise spectral angle of their
//! responses, optionally after pruning low-SNR bands, and then shrunk to the
//! smallest subset whose cross-validated accuracy meets a target.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cfbs;
pub mod classify;
pub mod dataset;
pub mod error;
pub mod report;
pub mod response;
pub mod selection;
pub mod snr;
pub mod spectral;

pub use error::{Error, Result};
