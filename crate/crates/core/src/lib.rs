//! Complement-coded digital over-the-air computation.
//!
//! Every device quantizes its value onto a signed `b`-bit lattice, encodes it
//! in two's complement and sends bit `l` as a BPSK symbol on subcarrier `l`.
//! The multiple-access channel adds the symbols up, so subcarrier `l` carries
//! the number of devices whose bit `l` is set. A linear decoder weighting the
//! planes by `2^(l-1)` (and the sign plane by `-2^(L-1)`) then recovers the
//! exact sum of the quantized values.
//!
//! The crate is split along the signal path:
//!
//! * [`codec`]: quantizer, two's-complement encoder and plane-sum decoder.
//! * [`channel`]: multipath Rayleigh subcarrier gains, CSI perturbation,
//!   MAC superposition and MIMO scalarization.
//! * [`transceiver`]: geometric power allocation, truncated channel
//!   inversion, LMMSE and ML plane detectors.
//! * [`selection`]: greedy active-set selection and its exhaustive oracle.
//! * [`sim`]: end-to-end trials, baselines, NMSE and SNR sweeps.
//!
//! The crate is `no_std` and only needs `alloc`.
#![no_std]
#![forbid(unsafe_code)]
// `!(x > 0.0)` guards deliberately reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod channel;
pub mod codec;
mod error;
pub mod rng;
pub mod selection;
pub mod sim;
pub mod transceiver;

pub use error::{Error, Result};
pub use num_complex::Complex64;
