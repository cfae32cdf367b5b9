//! Centralized coded caching for nonuniform file popularities.
//!
//! * [`combinatorics`]: nested-chain subfile labels and sub-packetization.
//! * [`placement`]: cache contents for the nonuniform scheme and the grouping
//!   baseline.
//! * [`delivery`]: XOR messages, GF(2) decodability certificates, and
//!   table-driven, greedy and exhaustive schedulers.
//! * [`rates`]: expected delivery rates, closed forms, memory-rate envelopes
//!   and curve export.

pub mod cli;
pub mod combinatorics;
pub mod config;
pub mod delivery;
pub mod error;
pub mod exact;
pub mod gf2;
pub mod placement;
pub mod rates;

pub use error::{Error, Result};
