//! Exact discrepancy statistics of the base-`b` van der Corput sequence.
//!
//! The crate is organised bottom-up:
//!
//! * [`radix_core`]: bases, digit vectors, the radical inverse and exact rationals.
//! * [`discrepancy`]: the piecewise-linear discrepancy function `Δ_N` and its exact integrals.
//! * [`digit_formula`]: `S(N)` from the digits of `N`, exact moments over digit blocks,
//!   and the weakly dependent family machinery with its moment bound.
//! * [`norms`]: `L^p` and sup norms of `Δ_N`.
//! * [`limit_stats`]: scans over `0 ≤ N < M`: normal approximation and tail frequencies.
//! * [`harmonic`]: exponential sums, Fourier coefficients of `Δ_N`, and the
//!   quasi-Monte-Carlo error decomposition.
//! * [`cli`]: the command-line front end.

pub mod cli;
pub mod digit_formula;
pub mod discrepancy;
pub mod error;
pub mod harmonic;
pub mod limit_stats;
pub mod norms;
pub mod numeric;
pub mod radix_core;

pub use error::{Error, Result};
pub use radix_core::{Base, DigitVec, ExactRational};
