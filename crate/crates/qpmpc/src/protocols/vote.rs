//! One-vote-down voting.
//!
//! Every party votes yes or no; the tally is a single bit that is `true`
//! exactly when everyone voted yes. A yes becomes the value `0`, a no a
//! random nonzero mask, and the masked values ride the summation circuit
//! blinded by an odd multiplier known only to one party, so the announcer
//! learns whether the masked sum is zero but not who dissented.

use rand::Rng;

use super::transcript::{Event, Transcript};
use super::{measurement_rng, Party, ProtocolError};
use crate::numtheory::mod_inverse;
use crate::qsim::{Basis, RegisterLayout, RegisterSpec, SparseState};

/// The tally of a vote run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct VoteOutcome {
    /// Masked sum read by the announcing party: the blinded sum of the
    /// parties' mask values modulo `2^m`. Zero exactly when all voted yes.
    pub z: u64,
    /// The published tally: `true` when the vote was unanimous yes.
    pub y: bool,
}

/// Register width used by a vote: the bit length of `n * vote_mask`,
/// wide enough that a sum of `n` masks from `[0, vote_mask]` cannot wrap.
pub fn vote_mask_bits(n: usize, vote_mask: u64) -> u32 {
    let top = n as u64 * vote_mask;
    64 - top.leading_zeros()
}

/// Runs the vote and returns `(outcome, transcript)`.
///
/// `votes[i]` is party `i`'s vote (`true` = yes). `vote_mask` bounds the
/// random masks drawn for no votes and must be at least 2. At least two
/// parties are required; a single party can tally its own vote without
/// any protocol. The outcome is exact: `y` is the AND of the votes on
/// every run, not merely with high probability.
pub fn run_qov(
    votes: &[bool],
    vote_mask: u64,
    seed: u64,
) -> Result<(VoteOutcome, Transcript), ProtocolError> {
    let n = votes.len();
    if n < 2 {
        return Err(ProtocolError::TooFewParties { needed: 2, got: n });
    }
    if vote_mask < 2 {
        return Err(ProtocolError::MaskTooSmall(vote_mask));
    }
    let m = vote_mask_bits(n, vote_mask);

    // Yes votes contribute 0; no votes a uniform nonzero mask.
    let mut parties: Vec<Party> = (0..n).map(|i| Party::new(i, u64::from(votes[i]), seed)).collect();
    let masks: Vec<u64> = parties
        .iter_mut()
        .zip(votes)
        .map(|(p, &yes)| if yes { 0 } else { p.rng.gen_range(1..=vote_mask) })
        .collect();
    // Blinding multiplier: odd, so it is invertible modulo 2^m.
    let q = parties[1].rng.gen_range(0..(1u64 << m)) | 1;
    let q_inv = mod_inverse(q, 1u64 << m)?;

    let mut specs = vec![
        RegisterSpec::new("h", m, 0, 0),
        RegisterSpec::new("t", m, 0, 0),
    ];
    for (i, &mask) in masks.iter().enumerate() {
        specs.push(RegisterSpec::new(&format!("e{i}"), m, i, mask));
    }
    let mut state = SparseState::new(RegisterLayout::new(specs)?)?;
    let mut rng = measurement_rng(seed);
    let mut tr = Transcript::new("vote");

    let phase = |state: &mut SparseState, tr: &mut Transcript, i: usize| {
        let e = format!("e{i}");
        tr.push(Event::Create {
            party: i,
            register: e.clone(),
            qubits: m,
        });
        let r = state.apply_phase_mul("t", &e, m);
        tr.push(Event::Apply {
            party: i,
            op: "phase_add".into(),
            registers: vec!["t".into(), e],
        });
        r
    };
    let send = |tr: &mut Transcript, from: usize, to: usize| {
        tr.push(Event::Transfer {
            from,
            to,
            register: "t".into(),
            qubits: m,
        });
    };

    // Announcer: superpose, entangle the traveler, hand it to the blinder.
    tr.push(Event::Create {
        party: 0,
        register: "h".into(),
        qubits: m,
    });
    tr.push(Event::Create {
        party: 0,
        register: "t".into(),
        qubits: m,
    });
    state.apply_qft("h", Basis::Fourier)?;
    tr.push(Event::Apply {
        party: 0,
        op: "qft".into(),
        registers: vec!["h".into()],
    });
    state.apply_cnot_copy("h", "t")?;
    tr.push(Event::Apply {
        party: 0,
        op: "cnot_copy".into(),
        registers: vec!["h".into(), "t".into()],
    });
    send(&mut tr, 0, 0);
    send(&mut tr, 0, 1);

    // Blinder: multiply the traveler by the secret odd q, add its own
    // mask, and return the traveler to the announcer.
    state.apply_mod_mult("t", q)?;
    tr.push(Event::Apply {
        party: 1,
        op: "mod_mult".into(),
        registers: vec!["t".into()],
    });
    phase(&mut state, &mut tr, 1)?;
    send(&mut tr, 1, 0);

    // Announcer adds its own mask mid-ring, then the remaining parties
    // take their turns; with two parties the traveler goes straight back.
    phase(&mut state, &mut tr, 0)?;
    send(&mut tr, 0, if n >= 3 { 2 } else { 1 });
    for i in 2..n {
        phase(&mut state, &mut tr, i)?;
        send(&mut tr, i, if i <= n - 2 { i + 1 } else { 1 });
    }

    // Blinder unblinds; announcer uncomputes, checks, and reads the tally.
    state.apply_mod_mult("t", q_inv)?;
    tr.push(Event::Apply {
        party: 1,
        op: "mod_mult_inverse".into(),
        registers: vec!["t".into()],
    });
    send(&mut tr, 1, 0);

    state.apply_cnot_copy("h", "t")?;
    tr.push(Event::Apply {
        party: 0,
        op: "cnot_copy".into(),
        registers: vec!["h".into(), "t".into()],
    });
    let t_out = state.measure_register("t", &mut rng)?;
    tr.push(Event::Measure {
        party: 0,
        register: "t".into(),
        outcome: t_out,
    });
    if t_out != 0 {
        return Err(ProtocolError::TamperDetected { outcome: t_out });
    }
    tr.push(Event::Apply {
        party: 0,
        op: "qft_inverse".into(),
        registers: vec!["h".into()],
    });
    let z = state.fourier_measure("h", Basis::FourierInverse, &mut rng)?;
    tr.push(Event::Measure {
        party: 0,
        register: "h".into(),
        outcome: z,
    });
    let y = z == 0;
    tr.push(Event::Broadcast {
        party: 0,
        label: "tally".into(),
        value: u64::from(y),
    });
    Ok((VoteOutcome { z, y }, tr))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn register_width_matches_the_bound() {
        assert_eq!(vote_mask_bits(4, 16), 7);
        assert_eq!(vote_mask_bits(2, 8), 5);
        assert_eq!(vote_mask_bits(3, 4), 4);
    }

    #[test]
    fn unanimous_yes_tallies_yes() {
        let (out, _) = run_qov(&[true, true, true], 8, 0).unwrap();
        assert!(out.y);
        assert_eq!(out.z, 0);
    }

    #[test]
    fn any_no_tallies_no_on_every_seed() {
        for seed in 0..25 {
            let (out, _) = run_qov(&[true, false, true], 8, seed).unwrap();
            assert!(!out.y, "seed {seed}");
            assert_ne!(out.z, 0);
            let (out, _) = run_qov(&[false, false], 8, seed).unwrap();
            assert!(!out.y, "seed {seed}");
        }
    }

    #[test]
    fn the_tally_is_the_and_of_the_votes() {
        for bits in 0..8u32 {
            let votes: Vec<bool> = (0..3).map(|i| bits >> i & 1 == 1).collect();
            let expect = votes.iter().all(|&v| v);
            let (out, tr) = run_qov(&votes, 4, u64::from(bits)).unwrap();
            assert_eq!(out.y, expect, "votes {votes:?}");
            tr.validate().unwrap();
        }
    }

    #[test]
    fn two_party_route_skips_the_middle_leg() {
        let (_, tr) = run_qov(&[true, false], 8, 3).unwrap();
        let hops: Vec<(usize, usize)> = tr
            .events
            .iter()
            .filter_map(|e| match e {
                Event::Transfer { from, to, .. } => Some((*from, *to)),
                _ => None,
            })
            .collect();
        assert_eq!(hops, vec![(0, 0), (0, 1), (1, 0), (0, 1), (1, 0)]);
    }

    #[test]
    fn ring_route_visits_everyone_once() {
        let (_, tr) = run_qov(&[true, true, true, true], 4, 5).unwrap();
        let hops: Vec<(usize, usize)> = tr
            .events
            .iter()
            .filter_map(|e| match e {
                Event::Transfer { from, to, .. } => Some((*from, *to)),
                _ => None,
            })
            .collect();
        assert_eq!(
            hops,
            vec![(0, 0), (0, 1), (1, 0), (0, 2), (2, 3), (3, 1), (1, 0)]
        );
    }

    #[test]
    fn equal_seeds_reproduce_equal_runs() {
        let a = run_qov(&[false, true, false], 16, 9).unwrap();
        let b = run_qov(&[false, true, false], 16, 9).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1.to_tsv(), b.1.to_tsv());
    }

    #[test]
    fn bad_inputs_are_rejected() {
        assert!(matches!(
            run_qov(&[true], 8, 0),
            Err(ProtocolError::TooFewParties { needed: 2, got: 1 })
        ));
        assert!(matches!(
            run_qov(&[true, false], 1, 0),
            Err(ProtocolError::MaskTooSmall(1))
        ));
    }
}
