//! The three multiparty protocols, as sequential state machines over the
//! engine.
//!
//! - [`run_smqs`]: joint summation modulo a power of two. A traveling
//!   register visits every party; each adds its input as a phase.
//! - [`run_qov`]: one-vote-down voting. A summation of masked values,
//!   scrambled by a random odd multiplier, whose outcome is zero exactly
//!   when everyone voted yes.
//! - [`run_smqlcmc`]: least common multiple of private numbers, by
//!   period finding on the concatenation of everyone's residue function,
//!   each candidate checked by a vote round.
//!
//! Every run returns its result together with a [`Transcript`] that
//! replays the execution event by event and passes the ownership
//! discipline of [`Transcript::validate`].

mod lcm;
mod summation;
mod transcript;
mod vote;

pub use lcm::{run_smqlcmc, run_smqlcmc_forced, LcmOutcome};
pub(crate) use lcm::{qpa_round, PassInstant};
pub use summation::run_smqs;
pub use transcript::{Event, Transcript, TranscriptError};
pub use vote::{run_qov, vote_mask_bits, VoteOutcome};

use serde::Serialize;
use thiserror::Error;

use crate::numtheory::NumTheoryError;
use crate::qsim::EngineError;
use crate::seeds::{derive_seed, rng_from_seed, SeedRng};

/// Largest control width the LCM protocol accepts without forcing:
/// `2nm+1` beyond this means more than 131072 simultaneous terms.
pub const LCM_GUARD_BITS: u32 = 17;

/// Mask range for vote rounds embedded in the LCM protocol. Any value
/// at least 2 works; larger ranges shrink the chance that a no-voter's
/// mask sum lands on an unlucky value (see the adversary module's
/// leakage probes).
pub const DEFAULT_VOTE_MASK: u64 = 16;

/// Default cap on LCM candidate rounds.
pub const DEFAULT_MAX_ROUNDS: u32 = 64;

/// Run parameters shared by the protocol entry points. The convenience
/// constructors derive the dependent fields.
#[derive(Debug, Clone, Serialize)]
pub struct ProtocolConfig {
    /// Number of parties.
    pub n: usize,
    /// Input bit width (summation and LCM).
    pub m: u32,
    /// Vote mask range: no-voters draw masks from `[1, vote_mask]`.
    pub vote_mask: u64,
    /// Control register width for the LCM period finding: `2nm + 1`.
    pub control_bits: u32,
    /// Master seed; all party and measurement randomness derives from it.
    pub seed: u64,
    /// Cap on LCM candidate rounds.
    pub max_rounds: u32,
    /// Permit control widths beyond [`LCM_GUARD_BITS`].
    pub force: bool,
}

impl ProtocolConfig {
    /// Parameters for an LCM run over `n` inputs of `m` bits.
    pub fn for_lcm(n: usize, m: u32, seed: u64, max_rounds: u32) -> Self {
        Self {
            n,
            m,
            vote_mask: DEFAULT_VOTE_MASK,
            control_bits: 2 * (n as u32) * m + 1,
            seed,
            max_rounds,
            force: false,
        }
    }
}

/// One protocol participant: an id, a secret, the registers currently
/// held, and a private randomness stream.
///
/// Parties draw their secret choices (vote masks, the odd multiplier)
/// from their own stream, derived from the run seed and the party id, so
/// outcomes never depend on another party's draw count.
#[derive(Debug)]
pub struct Party {
    pub id: usize,
    pub secret: u64,
    pub registers: Vec<String>,
    pub rng: SeedRng,
}

impl Party {
    pub fn new(id: usize, secret: u64, run_seed: u64) -> Self {
        Self {
            id,
            secret,
            registers: Vec::new(),
            rng: rng_from_seed(derive_seed(run_seed, 0x5041_5254_5900 | id as u64)),
        }
    }
}

/// Randomness stream for measurement outcomes, separate from every
/// party's private stream.
pub(crate) fn measurement_rng(run_seed: u64) -> SeedRng {
    rng_from_seed(derive_seed(run_seed, 0x4d45_4153_5552_45))
}

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("protocol needs at least {needed} parties, got {got}")]
    TooFewParties { needed: usize, got: usize },
    #[error("input width must be at least 1 bit")]
    ZeroWidth,
    #[error("party {party}'s input {value} does not fit {m} bits")]
    InputTooWide { party: usize, value: u64, m: u32 },
    #[error("party {party}'s input must be at least 1")]
    InputZero { party: usize },
    #[error("vote mask range must be at least 2, got {0}")]
    MaskTooSmall(u64),
    #[error(
        "control register would need {control_bits} qubits, over the default guard of {limit} (use the forced entry point to override)"
    )]
    GuardTripped { control_bits: u32, limit: u32 },
    #[error("max_rounds must be at least 1")]
    NoRounds,
    #[error("traveling register measured {outcome} at the uncompute check: tampering")]
    TamperDetected { outcome: u64 },
    #[error("no candidate passed the vote in {rounds} rounds; candidates: {history:?}")]
    RoundsExhausted { rounds: u32, history: Vec<u64> },
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Arith(#[from] NumTheoryError),
}

/// Shared input validation: at least two parties, a positive width,
/// every input in range, and (where the protocol needs it) nonzero.
pub(crate) fn validate_inputs(
    inputs: &[u64],
    m: u32,
    require_nonzero: bool,
) -> Result<(), ProtocolError> {
    if inputs.len() < 2 {
        return Err(ProtocolError::TooFewParties {
            needed: 2,
            got: inputs.len(),
        });
    }
    if m == 0 {
        return Err(ProtocolError::ZeroWidth);
    }
    for (party, &value) in inputs.iter().enumerate() {
        if require_nonzero && value == 0 {
            return Err(ProtocolError::InputZero { party });
        }
        if m < 64 && value >> m != 0 {
            return Err(ProtocolError::InputTooWide { party, value, m });
        }
    }
    Ok(())
}

/// Whether a party with private number `x` approves candidate `t1`:
/// yes exactly when `x` divides `t1`.
pub fn vote_bit(x: u64, t1: u64) -> bool {
    assert!(x >= 1, "divisor must be positive");
    t1 % x == 0
}

/// The joint residue function of all parties: `m`-bit fields
/// `j mod xs[0], j mod xs[1], ...` concatenated with the first party's
/// field most significant. Its period is the least common multiple of
/// the moduli, which is what the LCM protocol's period finding exploits.
pub fn connected_function(xs: &[u64], m: u32) -> impl Fn(u64) -> u64 + Clone {
    let xs = xs.to_vec();
    move |j: u64| {
        xs.iter().fold(0u64, |acc, &x| (acc << m) | (j % x))
    }
}
