//! Complex-baseband simulation of a C-band VSAT satellite link.
//!
//! The crate is organised along the signal path:
//!
//! * [`modem`]: Bernoulli bit source, Gray-coded square M-QAM and
//!   root-raised-cosine pulse shaping / matched filtering.
//! * [`channel`]: Saleh TWTA, antenna gains, free-space attenuation,
//!   phase/Doppler rotation, receiver thermal noise and I/Q imbalance.
//! * [`receiver`]: DC offset removal, automatic gain control and
//!   data-aided phase/frequency correction.
//! * [`linkbudget`]: antenna gain, free-space path loss and per-leg
//!   power balance.
//! * [`analysis`]: BER measurement, delay alignment, Welch PSD and
//!   constellation snapshots.
//!
//! All blocks operate on [`ComplexFrame`]s. Blocks that carry state across
//! frames (sample counters, noise streams, loop filters) are structs with a
//! `process` method; everything else is a free function.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod channel;
mod error;
pub mod linkbudget;
pub mod modem;
pub mod receiver;
mod signal;

pub use error::{Error, Result};
pub use signal::{db_to_amplitude, db_to_power, power_to_db, ComplexFrame, BOLTZMANN};

pub use num_complex::Complex64;
