//! Simulation and analysis of quantum information transfer through noisy
//! polarization-maintaining (PM) fiber channels.
//!
//! The crate is organised bottom-up:
//!
//! - [`qstate`]: small dense complex matrices, density matrices, entropy,
//!   fidelity, purification and partial trace.
//! - [`channel`]: χ-matrix and Kraus representations of qubit channels, the
//!   fiber dephasing model and frequency quadrature.
//! - [`interferometer`]: element-by-element propagation of a photon through
//!   the paired-fiber Mach-Zehnder network in unidirectional and
//!   bidirectional configurations.
//! - [`tomography`]: probe states, Poisson count simulation and
//!   maximum-likelihood χ reconstruction.
//! - [`capacity`]: coherent information, entropy exchange and the
//!   single-use capacity grid scan.
//! - [`chsh`]: entangled inputs, polarizer correlations and CHSH values.
//! - [`stats`]: Poisson sampling and bootstrap error bars.

// `!(x > 0.0)` rejects NaN on purpose; index loops mirror the matrix notation
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod capacity;
pub mod channel;
pub mod chsh;
mod error;
pub mod interferometer;
pub mod optim;
pub mod qstate;
pub mod stats;
pub mod tomography;

pub use error::{Error, Result};
