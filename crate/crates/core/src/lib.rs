//! Near-field analog-only beamforming for multiuser MIMO.
//!
//! The crate is `no_std` (it needs `alloc`) and carries the numerical core:
//! array geometry and near-field steering vectors, spherical-wave multipath
//! channels, link metrics, the polar-domain codebook with beam sweeping and
//! auxiliary points, the majorization-minimization (MM) analog beamformer for
//! perfect and codeword-level CSI, and the hybrid ZF/WMMSE baselines.
//!
//! IO, configuration files and the Monte Carlo runner live in the `nfbf`
//! companion crate.

#![cfg_attr(not(test), no_std)]
// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod channel;
pub mod codebook;
mod error;
pub mod geometry;
pub mod hbf;
pub mod linalg;
pub mod metrics;
pub mod mm;
pub mod scheme;

pub use error::{Error, Result};

/// Complex baseband sample.
pub type C64 = num_complex::Complex64;

pub use channel::{PathComponent, Scenario, UserChannel};
pub use codebook::{AuxiliaryGrid, CodewordIndex, PolarCodebook};
pub use geometry::{ArrayConfig, CartesianCoord, PolarCoord, SteeringVector};
pub use hbf::{EffectiveChannel, HybridBeamformer};
pub use metrics::{BeamformerKind, BeamformerMatrix, PowerModel};
pub use mm::{MMConfig, MMReport, MuMode};
pub use scheme::Scheme;
