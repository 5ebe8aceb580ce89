//! Real-time path-integral propagation of a two-level system coupled to a
//! general (`σ_z`) bath, a pure-dephasing (`σ_x`) bath, or both at once.
//!
//! The crate is organised around four layers:
//!
//! * [`bath`] — spectral densities, bath correlation functions and the
//!   discretised influence coefficients with all boundary cases, plus the
//!   integral diagnostics `L(t)` and `L̇(t)`.
//! * [`tls`] — two-level-system algebra: eigenbases, exact segment
//!   propagators and density-matrix utilities.
//! * [`analytic`] — closed-form pure-dephasing solutions (exact and
//!   memory-truncated) used as ground truth for the engine.
//! * [`engine`] — the hash-keyed path ensemble: spawning, mask-assisted
//!   merging, amplitude filtering, sharp memory cut-off and extended
//!   (full-history) memory.
//!
//! The [`harness`] module drives the engine for the shipped experiments
//! (dynamics, filter sweeps, memory sweeps, exhaustive mask search) and is
//! what the `quapi` binary wraps.

pub mod analytic;
pub mod bath;
pub mod engine;
pub mod harness;
pub mod quad;
pub mod tls;

pub use num_complex::Complex64;
