//! Exact sparse simulation of the register-level quantum operations the
//! protocols are built from.
//!
//! States are kept as a map from basis assignments to exact phase sums
//! (integer numerators over a power-of-two denominator), so protocol
//! amplitudes never touch floating point until a measurement probability
//! is evaluated. A dense reference backend implements every operation a
//! second time by an independent route for cross-validation.

mod dense;
mod layout;
mod phase;
mod sparse;

pub use dense::{backend_deviation, dense_mirror, DenseState};
pub use layout::{RegisterLayout, RegisterSpec};
pub use phase::{PhaseSum, PhaseTable};
pub use sparse::SparseState;

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

/// Maximum packed width of a sparse layout in bits.
pub const MAX_SPARSE_BITS: u32 = 63;
/// Maximum packed width the dense backend will materialize.
pub const MAX_DENSE_BITS: u32 = 20;
/// Widest register a distribution can be tabulated over.
pub const MAX_MEASURE_BITS: u32 = 24;
/// Hard ceiling on sparse term count, guarding against runaway fan-out.
pub const MAX_TERMS: usize = 1 << 22;

/// Measurement basis for a register readout.
///
/// `Fourier` and `FourierInverse` denote measuring after the forward or
/// inverse Fourier transform of the register; the transform is fused into
/// the readout and never materialized as a state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    Computational,
    Fourier,
    FourierInverse,
}

impl std::fmt::Display for Basis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Basis::Computational => "computational",
            Basis::Fourier => "fourier",
            Basis::FourierInverse => "fourier_inverse",
        };
        f.write_str(s)
    }
}

/// Errors raised by the state engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("layout has no registers")]
    EmptyLayout,
    #[error("register {0:?} declared twice")]
    DuplicateRegister(String),
    #[error("register {0:?} has zero width")]
    ZeroWidth(String),
    #[error("register {register:?} initial value {value} does not fit {width} bits")]
    InitTooWide {
        register: String,
        value: u64,
        width: u32,
    },
    #[error("layout is {bits} bits wide, over the {limit}-bit limit")]
    LayoutTooWide { bits: u32, limit: u32 },
    #[error("no register named {0:?}")]
    UnknownRegister(String),
    #[error("registers {src:?} ({src_width} bits) and {dst:?} ({dst_width} bits) differ in width")]
    WidthMismatch {
        src: String,
        src_width: u32,
        dst: String,
        dst_width: u32,
    },
    #[error("register {register:?} must be |0> in every term for the uniform fan-out")]
    HadamardRequiresZero { register: String },
    #[error("operation needs two distinct registers, got {0:?} twice")]
    SameRegister(String),
    #[error("outcome {outcome} has zero probability and cannot be collapsed onto")]
    ImpossibleOutcome { outcome: u64 },
    #[error("phase modulus 2^{m} exceeds the state's denominator 2^{phase_bits}")]
    PhaseTooFine { m: u32, phase_bits: u32 },
    #[error("multiplier {0} is even and not invertible modulo a power of two")]
    EvenMultiplier(u64),
    #[error("oracle returned {value}, which does not fit {width} bits")]
    OracleRange { value: u64, width: u32 },
    #[error("operation would create {would_be} terms, over the {MAX_TERMS}-term budget")]
    TermBudget { would_be: usize },
    #[error("register is {bits} bits wide; distributions are limited to {MAX_MEASURE_BITS} bits")]
    MeasureTooWide { bits: u32 },
    #[error("fourier measurement requires a fourier basis, got {0}")]
    NotAFourierBasis(Basis),
    #[error("probability mass sums to {sum}, outside tolerance of 1")]
    NormBroken { sum: f64 },
    #[error("state is {bits} bits wide; the dense backend is limited to {MAX_DENSE_BITS} bits")]
    DenseTooWide { bits: u32 },
}

/// Exact outcome law for measuring one register in a chosen basis.
#[derive(Debug, Clone, Serialize)]
pub struct MeasurementDistribution {
    /// Register the law describes.
    pub register: String,
    /// Basis the register would be read out in.
    pub basis: Basis,
    /// probabilities[k] is the chance of outcome k.
    pub probabilities: Vec<f64>,
}

impl MeasurementDistribution {
    /// Probability of outcome `k` (zero outside the table).
    pub fn prob(&self, k: u64) -> f64 {
        self.probabilities.get(k as usize).copied().unwrap_or(0.0)
    }

    /// Number of representable outcomes (2^width).
    pub fn support_size(&self) -> usize {
        self.probabilities.len()
    }

    /// Draws one outcome by inverse transform sampling.
    ///
    /// The cumulative walk is over the table in outcome order, so a given
    /// generator state always yields the same outcome.
    pub fn sample(&self, rng: &mut impl Rng) -> u64 {
        let total: f64 = self.probabilities.iter().sum();
        let mut target = rng.gen::<f64>() * total;
        let mut last_nonzero = 0u64;
        for (k, &p) in self.probabilities.iter().enumerate() {
            if p > 0.0 {
                last_nonzero = k as u64;
                if target < p {
                    return k as u64;
                }
                target -= p;
            }
        }
        // Floating residue walked past the end; the final nonzero bucket
        // is the only consistent answer.
        last_nonzero
    }

    /// Largest absolute probability difference against another law on the
    /// same support.
    pub fn max_abs_diff(&self, other: &MeasurementDistribution) -> Option<f64> {
        if self.probabilities.len() != other.probabilities.len() {
            return None;
        }
        Some(
            self.probabilities
                .iter()
                .zip(&other.probabilities)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max),
        )
    }

    /// Precomputes the cumulative table for repeated draws.
    pub fn sampler(&self) -> DistributionSampler {
        let mut cum = Vec::with_capacity(self.probabilities.len());
        let mut acc = 0.0f64;
        for &p in &self.probabilities {
            acc += p;
            cum.push(acc);
        }
        DistributionSampler { cum }
    }
}

/// Cumulative form of a [`MeasurementDistribution`] for O(log n) draws.
///
/// [`MeasurementDistribution::sample`] walks the table on every call;
/// loops that draw thousands of outcomes from a wide law (protocol rounds
/// re-measuring an identical state, empirical rate estimates) should build
/// one of these instead. For the same generator state, `draw` returns the
/// same outcome `sample` would.
#[derive(Debug, Clone)]
pub struct DistributionSampler {
    cum: Vec<f64>,
}

impl DistributionSampler {
    /// Draws one outcome by binary search over the cumulative table.
    pub fn draw(&self, rng: &mut impl Rng) -> u64 {
        let total = *self.cum.last().expect("laws are never empty");
        let target = rng.gen::<f64>() * total;
        let k = self.cum.partition_point(|&c| c <= target);
        // Floating residue can walk past the end; clamp to the last bucket
        // with mass.
        if k == self.cum.len() {
            let mut k = self.cum.len() - 1;
            while k > 0 && self.cum[k] == self.cum[k - 1] {
                k -= 1;
            }
            return k as u64;
        }
        k as u64
    }
}
