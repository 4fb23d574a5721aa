//! Quaternion one-time-pad quantum homomorphic encryption, simulated at desk scale.
//!
//! Layering, bottom up: [`su2core`] and [`eulerconv`] hold the SU(2) algebra and
//! fixed-point numerics; [`lattice`] is a toy GSW-style scheme with a gadget
//! trapdoor; [`hebackend`] wraps it (or a plaintext-tracking mock) behind a
//! bit-level interface; [`crot`] implements encrypted conditional rotations on
//! simulated qubits; [`qfhe`] assembles the full scheme; [`cli`] drives it.

pub mod circuit;
pub mod cli;
pub mod codec;
pub mod crot;
pub mod error;
pub mod eulerconv;
pub mod hebackend;
pub mod lattice;
pub mod qfhe;
pub mod qsim;
pub mod su2core;

pub use error::{Error, Result};
