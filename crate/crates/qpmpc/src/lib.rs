//! Exact simulation of quantum multiparty protocols that jointly compute
//! a sum, a unanimous vote, and a least common multiple without revealing
//! the parties' inputs.
//!
//! The crate is organized bottom-up:
//!
//! - [`numtheory`]: gcd/lcm, inverses modulo powers of two,
//!   continued-fraction recovery, and a brute-force period oracle.
//! - [`qsim`]: an exact sparse state engine over named registers, with a
//!   dense reference backend for cross-validation.
//! - [`qpa`]: the quantum period-finding loop and its round statistics.
//! - [`protocols`]: the summation, vote, and LCM protocols as party state
//!   machines that produce replayable transcripts.
//! - [`adversary`]: semi-honest attack probes and vote-leakage analysis.
//! - [`harness`]: seeded trial batches, distance metrics, cost accounting,
//!   and bit-stable report emission.
//!
//! Every random choice flows from a 64-bit seed (see [`seeds`]), so any
//! run is reproducible exactly.

pub mod adversary;
pub mod harness;
pub mod numtheory;
pub mod protocols;
pub mod qpa;
pub mod qsim;
pub mod seeds;

#[cfg(doctest)]
mod book;
