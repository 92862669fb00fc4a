//! Multi-channel time series analysed with two simulated quantum
//! techniques and rendered as audio.
//!
//! * [`statevector`]: dense simulator with RX, RZ, CNOT and RZZ gates.
//! * [`qpam`]: rolling statistical moments of amplitude-encoded windows.
//! * [`ising`]: trotterized evolution of a time-dependent transverse-field
//!   Ising chain and a dense-exponential reference.
//! * [`pipeline`]: CSV ingestion, reductions, schedule construction and a
//!   synthetic seizure generator.
//! * [`sonify`]: pitch mapping, sine/FM voices, filtering, WAV and
//!   spectrogram output.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod ising;
pub mod pipeline;
pub mod qpam;
pub mod sonify;
pub mod statevector;

pub use error::{Error, Result};
