//! Likelihood-ascent-search detection for the large multiuser MIMO uplink.
//!
//! A base station with `N` antennas receives `y = Hx + n` from `K`
//! single-antenna users transmitting constellation symbols. This crate
//! provides:
//!
//! - [`constellation`]: square Gray-coded QAM alphabets, slicing, and the
//!   per-symbol replacement-difference sets consumed by the search engine;
//! - [`channel`]: i.i.d. Rayleigh channel / noise generation with
//!   counter-derived random streams so every trial is reproducible
//!   independently of scheduling;
//! - [`detect`]: the shared Gram cache plus the linear baselines (matched
//!   filter, ZF, MMSE, ordered MMSE-SIC) and an exhaustive ML oracle for
//!   small systems;
//! - [`las`]: greedy one-symbol-update likelihood-ascent search driven by
//!   O(1) cost differences;
//! - [`rlb`]: the random-list restart controller with its standardized-cost
//!   stop rule;
//! - [`harness`]: a deterministic, parallel Monte Carlo BER/complexity
//!   runner with instrumented flop accounting and CSV/plot-data output.
//!
//! All numeric kernels are generic over the scalar type through
//! [`scalar::Scalar`] (`f32` or `f64`); the aliases below fix the default
//! double-precision instantiation used by the CLI and the test suites.

// Indexed loops mirror the matrix subscripts throughout the numeric
// kernels, and negated partial-order comparisons are the NaN-rejecting
// validity checks (`!(x > 0)` must fail NaN where `x <= 0` would not).
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod constellation;
pub mod detect;
pub mod error;
pub mod flops;
pub mod harness;
pub mod las;
pub mod linalg;
pub mod rlb;
pub mod scalar;

pub use error::{Error, Result};
pub use flops::FlopLedger;
pub use scalar::Scalar;

// Consumers that pin worker pools (CLI, acceptance suite) reuse our rayon.
pub use rayon;

/// Complex sample in the default double precision.
pub type C64 = num_complex::Complex<f64>;
/// Complex sample in single precision.
pub type C32 = num_complex::Complex<f32>;

pub type Constellation64 = constellation::Constellation<f64>;
pub type CMat64 = linalg::CMat<f64>;
pub type GramCache64 = detect::GramCache<f64>;
pub type LasState64 = las::LasState<f64>;
pub type RlbConfig64 = rlb::RlbConfig<f64>;
pub type DetectionReport64 = rlb::DetectionReport<f64>;
pub type RunConfig64 = harness::RunConfig<f64>;
pub type BerRecord64 = harness::BerRecord<f64>;
