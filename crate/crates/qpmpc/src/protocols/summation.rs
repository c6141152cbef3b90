//! Joint summation modulo `2^m`.
//!
//! The first party encodes its input as the Fourier phases of a register
//! pair, then a traveling register visits every other party, each adding
//! its own input as a phase twist. When the traveler returns, the first
//! party uncomputes it, checks it reads zero, and reads the sum out of
//! the inverse Fourier basis. No party ever sees another's input: the
//! traveler is maximally mixed on its own at every hop.

use super::transcript::{Event, Transcript};
use super::{measurement_rng, ProtocolError};
use crate::qsim::{Basis, RegisterLayout, RegisterSpec, SparseState};

/// Runs the summation over the parties' inputs and returns
/// `(sum mod 2^m, transcript)`.
///
/// Party `i` holds `inputs[i]`; all inputs must fit `m` bits and there
/// must be at least two parties. The measurement outcomes are drawn from
/// a stream derived from `seed`, so equal calls produce byte-identical
/// transcripts.
///
/// # Errors
///
/// [`ProtocolError::TamperDetected`] reports a nonzero traveler at the
/// uncompute check; honest executions never trigger it.
pub fn run_smqs(inputs: &[u64], m: u32, seed: u64) -> Result<(u64, Transcript), ProtocolError> {
    let n = inputs.len();
    super::validate_inputs(inputs, m, false)?;

    let mut specs = vec![
        RegisterSpec::new("h", m, 0, inputs[0]),
        RegisterSpec::new("t", m, 0, 0),
    ];
    for (i, &value) in inputs.iter().enumerate().skip(1) {
        specs.push(RegisterSpec::new(&format!("e{i}"), m, i, value));
    }
    let mut state = SparseState::new(RegisterLayout::new(specs)?)?;
    let mut rng = measurement_rng(seed);
    let mut tr = Transcript::new("summation");

    // First party: encode the input in Fourier phases, entangle the
    // traveler, and hand it into the ring.
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
    tr.push(Event::Transfer {
        from: 0,
        to: 0,
        register: "t".into(),
        qubits: m,
    });
    tr.push(Event::Transfer {
        from: 0,
        to: 1,
        register: "t".into(),
        qubits: m,
    });

    // Ring pass: each party phases its input onto the traveler.
    for i in 1..n {
        let e = format!("e{i}");
        tr.push(Event::Create {
            party: i,
            register: e.clone(),
            qubits: m,
        });
        state.apply_phase_mul("t", &e, m)?;
        tr.push(Event::Apply {
            party: i,
            op: "phase_add".into(),
            registers: vec!["t".into(), e.clone()],
        });
        tr.push(Event::Transfer {
            from: i,
            to: (i + 1) % n,
            register: "t".into(),
            qubits: m,
        });
    }

    // First party again: uncompute the traveler, verify it, read the sum.
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
    let sum = state.fourier_measure("h", Basis::FourierInverse, &mut rng)?;
    tr.push(Event::Measure {
        party: 0,
        register: "h".into(),
        outcome: sum,
    });
    tr.push(Event::Broadcast {
        party: 0,
        label: "sum".into(),
        value: sum,
    });
    Ok((sum, tr))
}
