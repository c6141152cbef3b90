//! Least common multiple of private inputs, by period finding plus voting.
//!
//! The parties' joint residue function `j -> (j mod x_0, ..., j mod x_n-1)`
//! is periodic with period `lcm(x_0, ..., x_n-1)`. Each round runs one
//! distributed period-finding pass over that function: a traveling
//! register carries the superposed argument around the ring while every
//! party folds its own residue into a private register, and a continued
//! fraction turns the measured phase into a period candidate. The
//! candidate is accepted exactly when every party confirms divisibility
//! through a one-vote-down vote; otherwise the next round starts fresh.

use serde::Serialize;

use super::transcript::{Event, Transcript};
use super::vote::run_qov;
use super::{
    measurement_rng, validate_inputs, vote_bit, ProtocolConfig, ProtocolError, LCM_GUARD_BITS,
};
use crate::numtheory::cf_recover;
use crate::qsim::{
    Basis, DistributionSampler, EngineError, RegisterLayout, RegisterSpec, SparseState,
};
use crate::seeds::{derive_seed, SeedRng};

/// Result of an accepted LCM run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LcmOutcome {
    /// The accepted candidate: the least common multiple of the inputs,
    /// since every party vouched that its input divides it.
    pub y: u64,
    /// Rounds consumed, counting the accepting round.
    pub rounds: u32,
    /// Every candidate put to a vote, in round order; the last is `y`.
    pub candidate_history: Vec<u64>,
}

/// Runs the LCM protocol over the parties' inputs and returns
/// `(outcome, transcript)`.
///
/// Party `i` holds `inputs[i]`, which must fit `m` bits and be at least
/// 1. The traveling registers need `2nm + 1` qubits; this entry point
/// refuses configurations past [`LCM_GUARD_BITS`] — use
/// [`run_smqlcmc_forced`] to simulate larger ones anyway.
pub fn run_smqlcmc(
    inputs: &[u64],
    m: u32,
    seed: u64,
    max_rounds: u32,
) -> Result<(LcmOutcome, Transcript), ProtocolError> {
    run_rounds(
        inputs,
        &ProtocolConfig::for_lcm(inputs.len(), m, seed, max_rounds),
    )
}

/// [`run_smqlcmc`] without the width guard: simulates any configuration
/// the engine itself can hold, however slowly.
pub fn run_smqlcmc_forced(
    inputs: &[u64],
    m: u32,
    seed: u64,
    max_rounds: u32,
) -> Result<(LcmOutcome, Transcript), ProtocolError> {
    let mut cfg = ProtocolConfig::for_lcm(inputs.len(), m, seed, max_rounds);
    cfg.force = true;
    run_rounds(inputs, &cfg)
}

/// Instants inside one period-finding pass where an observer may inspect
/// (or, for a semi-honest attacker, copy from) the live state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum PassInstant {
    /// Superposition prepared and traveler entangled; no oracles yet.
    Start,
    /// `party` has applied its residue oracle and still holds the traveler.
    TravelerAt { party: usize },
    /// All oracles applied; the traveler is back with the first party,
    /// not yet uncomputed.
    Returned,
    /// Traveler checked and the phase register read out as `phi`.
    Measured { phi: u64 },
}

/// What one period-finding pass produced.
pub(crate) struct PassRun {
    /// Traveler reading at the uncompute check; nonzero means the round
    /// was disturbed and carries no phase.
    pub t_out: u64,
    /// The measured phase, when the check passed.
    pub phi: Option<u64>,
    /// The post-pass state: phase register collapsed, residue registers
    /// still live.
    pub state: SparseState,
}

/// One distributed period-finding pass, shared between the protocol
/// proper and the attack simulations, which observe it through the
/// `observe` callback instead of forking the circuit.
///
/// Registers are named `r{round}.*` in the transcript so successive
/// rounds never recreate a used-up name. `extra_specs` lets an observer
/// smuggle in its own register (an attacker's private copy target).
/// `phase_law` caches the phase-outcome law across rounds: the circuit
/// up to the measurement is deterministic, so the law from round one
/// stays exact — unless the observer mutates the state, in which case
/// the caller must pass a fresh cache every round.
#[allow(clippy::too_many_arguments)]
pub(crate) fn qpa_round(
    inputs: &[u64],
    m: u32,
    u: u32,
    round: u32,
    extra_specs: Vec<RegisterSpec>,
    tr: &mut Transcript,
    rng: &mut SeedRng,
    phase_law: &mut Option<DistributionSampler>,
    observe: &mut dyn FnMut(PassInstant, &mut SparseState) -> Result<(), EngineError>,
) -> Result<PassRun, ProtocolError> {
    let n = inputs.len();
    let name = |base: &str| format!("r{round}.{base}");

    let mut specs = vec![
        RegisterSpec::new("h", u, 0, 0),
        RegisterSpec::new("t", u, 0, 0),
    ];
    for i in 0..n {
        specs.push(RegisterSpec::new(&format!("e{i}"), m, i, 0));
    }
    specs.extend(extra_specs);
    let mut state = SparseState::new(RegisterLayout::new(specs)?)?;

    // First party: superpose the argument and entangle the traveler.
    tr.push(Event::Create {
        party: 0,
        register: name("h"),
        qubits: u,
    });
    tr.push(Event::Create {
        party: 0,
        register: name("t"),
        qubits: u,
    });
    state.apply_hadamard_uniform("h")?;
    tr.push(Event::Apply {
        party: 0,
        op: "hadamard".into(),
        registers: vec![name("h")],
    });
    state.apply_cnot_copy("h", "t")?;
    tr.push(Event::Apply {
        party: 0,
        op: "cnot_copy".into(),
        registers: vec![name("h"), name("t")],
    });
    observe(PassInstant::Start, &mut state)?;

    // First party folds in its residue, then hands the traveler around
    // the ring; every other party does the same on its turn.
    for i in 0..n {
        let e = format!("e{i}");
        tr.push(Event::Create {
            party: i,
            register: name(&e),
            qubits: m,
        });
        let xi = inputs[i];
        state.apply_oracle("t", &e, move |j| j % xi)?;
        tr.push(Event::Apply {
            party: i,
            op: "oracle".into(),
            registers: vec![name("t"), name(&e)],
        });
        observe(PassInstant::TravelerAt { party: i }, &mut state)?;
        if i == 0 {
            tr.push(Event::Transfer {
                from: 0,
                to: 0,
                register: name("t"),
                qubits: u,
            });
        }
        tr.push(Event::Transfer {
            from: i,
            to: (i + 1) % n,
            register: name("t"),
            qubits: u,
        });
    }
    observe(PassInstant::Returned, &mut state)?;

    // Uncompute and check the traveler.
    state.apply_cnot_copy("h", "t")?;
    tr.push(Event::Apply {
        party: 0,
        op: "cnot_copy".into(),
        registers: vec![name("h"), name("t")],
    });
    let t_out = state.measure_register("t", rng)?;
    tr.push(Event::Measure {
        party: 0,
        register: name("t"),
        outcome: t_out,
    });
    if t_out != 0 {
        return Ok(PassRun {
            t_out,
            phi: None,
            state,
        });
    }

    // Phase measurement, from the cached law after round one.
    let phi = match &phase_law {
        Some(law) => law.draw(rng),
        None => {
            let law = state.distribution_of("h", Basis::FourierInverse)?.sampler();
            let phi = law.draw(rng);
            *phase_law = Some(law);
            phi
        }
    };
    state.collapse_fourier_outcome("h", Basis::FourierInverse, phi)?;
    tr.push(Event::Apply {
        party: 0,
        op: "qft_inverse".into(),
        registers: vec![name("h")],
    });
    tr.push(Event::Measure {
        party: 0,
        register: name("h"),
        outcome: phi,
    });
    observe(PassInstant::Measured { phi }, &mut state)?;

    Ok(PassRun {
        t_out: 0,
        phi: Some(phi),
        state,
    })
}

fn run_rounds(
    inputs: &[u64],
    cfg: &ProtocolConfig,
) -> Result<(LcmOutcome, Transcript), ProtocolError> {
    let n = inputs.len();
    validate_inputs(inputs, cfg.m, true)?;
    if cfg.vote_mask < 2 {
        return Err(ProtocolError::MaskTooSmall(cfg.vote_mask));
    }
    if cfg.max_rounds == 0 {
        return Err(ProtocolError::NoRounds);
    }
    let u = cfg.control_bits;
    if u > LCM_GUARD_BITS && !cfg.force {
        return Err(ProtocolError::GuardTripped {
            control_bits: u,
            limit: LCM_GUARD_BITS,
        });
    }

    let mut rng = measurement_rng(cfg.seed);
    let mut tr = Transcript::new("lcm");
    let mut history: Vec<u64> = Vec::new();
    let mut phase_law: Option<DistributionSampler> = None;

    for round in 1..=cfg.max_rounds {
        let run = qpa_round(
            inputs,
            cfg.m,
            u,
            round,
            Vec::new(),
            &mut tr,
            &mut rng,
            &mut phase_law,
            &mut |_, _| Ok(()),
        )?;
        let name = |base: &str| format!("r{round}.{base}");
        let Some(phi) = run.phi else {
            // Disturbed round: discard it and start over.
            tr.push(Event::Broadcast {
                party: 0,
                label: "reject".into(),
                value: run.t_out,
            });
            continue;
        };
        let mut state = run.state;
        // The layout fit, so both shifts are in range.
        let candidate = cf_recover(phi, 1u64 << u, 1u64 << (n as u32 * cfg.m))?.denominator;
        history.push(candidate);
        tr.push(Event::Broadcast {
            party: 0,
            label: "qpa_done".into(),
            value: u64::from(round),
        });

        // Everyone clears their residue register and confirms before the
        // candidate goes public.
        for i in 0..n {
            let e = format!("e{i}");
            let outcome = state.measure_register(&e, &mut rng)?;
            tr.push(Event::Measure {
                party: i,
                register: name(&e),
                outcome,
            });
            tr.push(Event::Broadcast {
                party: i,
                label: "e_done".into(),
                value: 1,
            });
        }

        tr.push(Event::Broadcast {
            party: 0,
            label: "candidate".into(),
            value: candidate,
        });

        // Divisibility vote over the candidate.
        let votes: Vec<bool> = inputs.iter().map(|&x| vote_bit(x, candidate)).collect();
        let vote_seed = derive_seed(cfg.seed, 0x564f_5445_0000_0000 | u64::from(round));
        let (vote, vote_tr) = run_qov(&votes, cfg.vote_mask, vote_seed)?;
        tr.children.push(vote_tr);
        tr.push(Event::Broadcast {
            party: 0,
            label: "vote_result".into(),
            value: u64::from(vote.y),
        });

        if vote.y {
            return Ok((
                LcmOutcome {
                    y: candidate,
                    rounds: round,
                    candidate_history: history,
                },
                tr,
            ));
        }
    }
    Err(ProtocolError::RoundsExhausted {
        rounds: cfg.max_rounds,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numtheory::lcm_many;

    #[test]
    fn pinned_lcms_come_out_right() {
        let (out, _) = run_smqlcmc(&[2, 3], 2, 0, 64).unwrap();
        assert_eq!(out.y, 6);
        let (out, _) = run_smqlcmc(&[4, 6], 3, 0, 64).unwrap();
        assert_eq!(out.y, 12);
        // Constant residue function: period one, accepted immediately.
        let (out, _) = run_smqlcmc(&[1, 1], 2, 0, 64).unwrap();
        assert_eq!(out.y, 1);
        assert_eq!(out.rounds, 1);
    }

    #[test]
    fn accepted_candidates_equal_the_lcm_on_small_pairs() {
        for &(a, b) in &[(2u64, 3u64), (3, 4), (6, 4), (5, 7), (7, 7)] {
            for seed in 0..3 {
                let (out, _) = run_smqlcmc(&[a, b], 3, seed, 64).unwrap();
                assert_eq!(out.y, lcm_many(&[a, b]).unwrap(), "({a}, {b}) seed {seed}");
                assert_eq!(out.candidate_history.last(), Some(&out.y));
                assert_eq!(out.candidate_history.len(), out.rounds as usize);
            }
        }
    }

    #[test]
    fn forced_three_party_run_finds_thirty() {
        let (out, tr) = run_smqlcmc_forced(&[2, 3, 5], 3, 0, 64).unwrap();
        assert_eq!(out.y, 30);
        tr.validate().unwrap();
    }

    #[test]
    fn the_width_guard_trips_without_force() {
        // Three 3-bit inputs need 2*9 + 1 = 19 control qubits.
        assert!(matches!(
            run_smqlcmc(&[2, 3, 5], 3, 0, 64),
            Err(ProtocolError::GuardTripped {
                control_bits: 19,
                limit: 17,
            })
        ));
        // 2*8 + 1 = 17 sits exactly on the guard and passes.
        let (out, _) = run_smqlcmc(&[3, 3], 4, 0, 64).unwrap();
        assert_eq!(out.y, 3);
    }

    #[test]
    fn transcript_structure_reflects_the_rounds() {
        let (out, tr) = run_smqlcmc(&[2, 3], 2, 1, 64).unwrap();
        tr.validate().unwrap();
        let rounds = out.rounds as usize;
        assert_eq!(tr.children.len(), rounds);
        assert_eq!(tr.broadcast_count("candidate"), rounds);
        assert_eq!(tr.broadcast_count("qpa_done"), rounds);
        assert_eq!(tr.broadcast_count("vote_result"), rounds);
        assert_eq!(tr.broadcast_count("e_done"), 2 * rounds);
        // Per round: the traveler check, the phase readout, two residues.
        assert_eq!(tr.measure_count(), 4 * rounds);
        // Per round: provisioning plus the two ring edges.
        assert_eq!(tr.transfer_count(), 3 * rounds);
        for child in &tr.children {
            assert_eq!(child.protocol, "vote");
        }
        let back = Transcript::from_tsv(&tr.to_tsv()).unwrap();
        assert_eq!(tr, back);
    }

    #[test]
    fn equal_seeds_reproduce_equal_runs() {
        let a = run_smqlcmc(&[5, 3], 3, 7, 64).unwrap();
        let b = run_smqlcmc(&[5, 3], 3, 7, 64).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1.to_tsv(), b.1.to_tsv());
    }

    #[test]
    fn bad_inputs_are_rejected() {
        assert!(matches!(
            run_smqlcmc(&[4], 3, 0, 64),
            Err(ProtocolError::TooFewParties { needed: 2, got: 1 })
        ));
        assert!(matches!(
            run_smqlcmc(&[1, 0], 2, 0, 64),
            Err(ProtocolError::InputZero { party: 1 })
        ));
        assert!(matches!(
            run_smqlcmc(&[1, 9], 3, 0, 64),
            Err(ProtocolError::InputTooWide {
                party: 1,
                value: 9,
                m: 3
            })
        ));
        assert!(matches!(
            run_smqlcmc(&[1, 2], 0, 0, 64),
            Err(ProtocolError::ZeroWidth)
        ));
        assert!(matches!(
            run_smqlcmc(&[2, 3], 2, 0, 0),
            Err(ProtocolError::NoRounds)
        ));
    }
}
