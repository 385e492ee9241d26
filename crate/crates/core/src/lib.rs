//! Numerical core of a digital twin for a reconfigurable two-qubit
//! linear-optical processor.
//!
//! The chip is six waveguide modes carrying two dual-rail qubits
//! (qubit 1 on modes 2–3, qubit 2 on modes 4–5, modes 1 and 6 ancillary).
//! Four Mach-Zehnder single-qubit gates surround a post-selected
//! linear-optical CNOT built from 1/3 couplers.
//!
//! The crate is `no_std` with `alloc`: every operation is a pure function on
//! values, randomness is always supplied by the caller, and nothing touches
//! the filesystem. File formats and the command-line runner live in the
//! `photon-twin` crate.
//!
//! Module map:
//!
//! - [`optics`]: component matrices, the 6×6 chip unitary, the matrix
//!   fidelity metric and Sinkhorn-Knopp scaling.
//! - [`sampler`]: matrix permanents, two-photon transition probabilities
//!   with partial distinguishability, coincidence sampling and HOM curves.
//! - [`calibration`]: thermo-optic cross-talk model, current solving,
//!   DAC quantization and calibration-sweep fitting.
//! - [`tomography`]: χ-matrix process tomography by least-squares
//!   maximum likelihood.
//! - [`gates`]: realizable single-qubit gate fidelity.
//! - [`vqe`]: the two-qubit H₂ variational eigensolver loop.

#![no_std]
#![forbid(unsafe_code)]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod calibration;
pub mod error;
pub mod gates;
pub mod linalg;
mod math;
pub mod optics;
pub mod optimize;
pub mod sampler;
pub mod tomography;
pub mod vqe;

pub use error::{Error, Result};
pub use linalg::{CMatrix, RMatrix, C64};

/// Seedable generator used for every stochastic routine in the workspace.
pub type Rng = rand_chacha::ChaCha8Rng;

/// Builds the workspace generator from a 64-bit seed.
pub fn seeded_rng(seed: u64) -> Rng {
    use rand::SeedableRng;
    Rng::seed_from_u64(seed)
}
