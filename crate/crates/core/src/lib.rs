//! Particle image velocimetry toolkit.
//!
//! - [`fieldcore`]: grid types, sampling, warping, smoothing, `.flo`/PGM I/O
//! - [`synthgen`]: synthetic particle-image pairs with ground-truth flow
//! - [`xcorr`]: multi-pass window-deformation cross-correlation estimator
//! - [`hsflow`]: coarse-to-fine Horn–Schunck optical flow
//! - [`turbdiag`]: spectra, divergence, structure functions, gradient invariants, flux, RMSE

// `!(x >= 0.0)` style guards are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fieldcore;
pub mod hsflow;
pub mod synthgen;
pub mod turbdiag;
pub mod xcorr;

pub use error::{PivError, Result};
pub use fieldcore::{BoundaryMode, GridSpec, ScalarField2D, VectorField2D};

pub use synthgen::{make_pair, FlowSynthParams, GenParams, ParticleSet};
pub use xcorr::{estimate_widim, MultipassConfig, WindowSpec};

pub use hsflow::{estimate_hs, HsConfig, Regularizer};
pub use turbdiag::rmse;
