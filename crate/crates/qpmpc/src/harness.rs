//! Monte Carlo orchestration, distribution metrics, cost accounting, and
//! report emission.
//!
//! A [`TrialBatch`] runs one protocol many times under independently
//! derived seeds and aggregates the outcomes into [`BatchStats`]:
//! success rate, mean rounds, an outcome histogram, and summed
//! transcript costs. [`tv_distance`] is the total-variation metric used
//! to compare measurement laws. [`cost_summary`] and [`cost_scaling`]
//! turn transcripts into communication/operation tallies so the linear
//! scaling of transfer counts can be checked exactly. [`emit_report`]
//! renders any serializable result as byte-stable JSON or CSV.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::protocols::{
    run_qov, run_smqlcmc, run_smqlcmc_forced, run_smqs, vote_mask_bits, ProtocolError, Transcript,
    TranscriptError,
};
use crate::qsim::MeasurementDistribution;
use crate::seeds::trial_seed;

/// Errors from batch orchestration, metrics, and report emission.
#[derive(Debug, Error)]
pub enum HarnessError {
    /// A batch must run at least one trial.
    #[error("batch needs at least one trial")]
    EmptyBatch,
    /// A trial hit a non-statistical error (bad inputs, engine fault).
    #[error("trial {index} failed: {source}")]
    Trial {
        /// Index of the failing trial within the batch.
        index: u64,
        /// The underlying protocol error.
        #[source]
        source: ProtocolError,
    },
    /// A protocol run outside a batch failed.
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    /// The two distributions live on different outcome spaces.
    #[error("distributions have different outcome spaces ({left} vs {right})")]
    SupportMismatch {
        /// Support size of the first distribution.
        left: usize,
        /// Support size of the second distribution.
        right: usize,
    },
    /// The transcript fails its own consistency check.
    #[error(transparent)]
    Transcript(#[from] TranscriptError),
    /// The result's shape has no defined CSV rendering.
    #[error("cannot render this value as CSV: {0}")]
    CsvShape(&'static str),
    /// A report float was NaN or infinite.
    #[error("non-finite number in report")]
    NonFinite,
    /// The destination rejected a write.
    #[error(transparent)]
    Io(#[from] std::io::Error),
    /// The result failed to serialize.
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// One protocol run specification: which protocol and its parameters.
///
/// The per-trial seed is supplied by the batch, so a spec is reusable
/// across trials.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "protocol", rename_all = "snake_case")]
pub enum RunSpec {
    /// Modular summation of the parties' inputs.
    Summation {
        /// One private input per party.
        inputs: Vec<u64>,
        /// Register width; the sum is reported modulo `2^m`.
        m: u32,
    },
    /// One-vote-down unanimous vote.
    Vote {
        /// One ballot per party, `true` for yes.
        votes: Vec<bool>,
        /// Upper bound of the no-vote mask range (the protocol's `M`).
        vote_mask: u64,
    },
    /// Least-common-multiple computation.
    Lcm {
        /// One positive input per party.
        inputs: Vec<u64>,
        /// Bit width each input must fit in.
        m: u32,
        /// Round cap before the run reports exhaustion.
        max_rounds: u32,
        /// Bypass the control-width guard (large exact simulations).
        force: bool,
    },
}

impl RunSpec {
    /// Number of participating parties.
    pub fn parties(&self) -> usize {
        match self {
            RunSpec::Summation { inputs, .. } | RunSpec::Lcm { inputs, .. } => inputs.len(),
            RunSpec::Vote { votes, .. } => votes.len(),
        }
    }

    /// Width of the protocol's dominant register, used as the per-gate
    /// cost factor in the modeled elementary-gate count: `m` for
    /// summation, the tally width for votes, and the control width
    /// `2nm + 1` for LCM rounds.
    pub fn gate_width(&self) -> u32 {
        match self {
            RunSpec::Summation { m, .. } => *m,
            RunSpec::Vote { votes, vote_mask } => vote_mask_bits(votes.len(), *vote_mask),
            RunSpec::Lcm { inputs, m, .. } => 2 * (inputs.len() as u32) * m + 1,
        }
    }
}

/// A reproducible batch of independent protocol trials.
///
/// Trial `i` runs under [`TrialBatch::seed_for`]`(i)`, a pure mix of the
/// master seed and the trial index, so identical batches reproduce
/// identical statistics and trials can execute in any order or in
/// parallel.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialBatch {
    /// The protocol and parameters every trial runs.
    pub spec: RunSpec,
    /// Number of independent trials.
    pub trials: u32,
    /// Seed from which every per-trial seed is derived.
    pub master_seed: u64,
}

impl TrialBatch {
    /// Batch of `trials` runs of `spec` under `master_seed`.
    pub fn new(spec: RunSpec, trials: u32, master_seed: u64) -> Self {
        Self {
            spec,
            trials,
            master_seed,
        }
    }

    /// The derived seed for one trial.
    pub fn seed_for(&self, index: u64) -> u64 {
        trial_seed(self.master_seed, index)
    }

    /// All per-trial seeds, in trial order.
    pub fn trial_seeds(&self) -> Vec<u64> {
        (0..u64::from(self.trials))
            .map(|i| self.seed_for(i))
            .collect()
    }
}

/// Exact event tallies of one transcript scope.
///
/// Counts cover the transcript's own events; embedded subprotocol runs
/// (for example the vote inside each LCM round) keep separate books.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CostSummary {
    /// Operator applications (gate-level `apply` events).
    pub operator_applications: u64,
    /// Register transfer events.
    pub transfers: u64,
    /// Total qubits moved across all transfers.
    pub qubits_transferred: u64,
    /// Protocol rounds the transcript records (1 for single-pass runs).
    pub rounds: u64,
}

impl CostSummary {
    /// Modeled elementary-gate count: measured operator applications
    /// times the square of the dominant register width. The protocols
    /// apply whole-register operators; compiling each to controlled
    /// rotations costs a factor of `width²`, which this reflects
    /// analytically instead of by gate-level compilation.
    pub fn modeled_gates(&self, width_bits: u32) -> u64 {
        self.operator_applications * u64::from(width_bits) * u64::from(width_bits)
    }

    /// Accumulates another summary into this one (commutative).
    pub fn absorb(&mut self, other: &CostSummary) {
        self.operator_applications += other.operator_applications;
        self.transfers += other.transfers;
        self.qubits_transferred += other.qubits_transferred;
        self.rounds += other.rounds;
    }
}

/// Tallies one transcript's own events into a [`CostSummary`].
///
/// The transcript is validated first, so a structurally inconsistent
/// log is an error rather than a silent miscount. Rounds are read from
/// the per-round `qpa_done` broadcasts where present; any other
/// non-empty transcript counts as one round, and an empty transcript
/// as zero.
///
/// # Errors
///
/// [`HarnessError::Transcript`] when the log violates the ownership or
/// structure rules.
pub fn cost_summary(t: &Transcript) -> Result<CostSummary, HarnessError> {
    t.validate()?;
    let rounds = match t.broadcast_count("qpa_done") {
        0 if t.events.is_empty() => 0,
        0 => 1,
        r => r,
    };
    Ok(CostSummary {
        operator_applications: t.apply_count() as u64,
        transfers: t.transfer_count() as u64,
        qubits_transferred: t.transfer_qubits(),
        rounds: rounds as u64,
    })
}

/// Protocol family swept by [`cost_scaling`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingProtocol {
    /// Full summation runs; expected transfer volume `(n+1)·m` qubits.
    Summation,
    /// Single LCM rounds; expected transfer volume `(n+1)·(2nm+1)`
    /// qubits per round.
    LcmRound,
}

/// One row of a [`cost_scaling`] table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ScalingRow {
    /// Number of parties.
    pub n: u64,
    /// Input register width in bits.
    pub m: u64,
    /// Operator applications per run (LCM: per round).
    pub operator_applications: u64,
    /// Transfers per run (LCM: per round).
    pub transfers: u64,
    /// Qubits transferred per run (LCM: per round).
    pub qubits_transferred: u64,
}

/// Runs one seeded instance per `(n, m)` size and tabulates its
/// transcript costs, for checking how communication grows with the
/// party count and register width.
///
/// Summation rows use all-zero inputs; LCM rows use all-one inputs
/// (which accept in a single round, so per-round and total costs
/// coincide and the sweep stays exact). LCM rows are normalized per
/// round in any case.
///
/// # Errors
///
/// Propagates protocol errors — notably the LCM control-width guard
/// when an `(n, m)` pair is too large for the default entry point.
pub fn cost_scaling(
    protocol: ScalingProtocol,
    sizes: &[(usize, u32)],
    seed: u64,
) -> Result<Vec<ScalingRow>, HarnessError> {
    sizes
        .iter()
        .map(|&(n, m)| {
            let transcript = match protocol {
                ScalingProtocol::Summation => {
                    let inputs = vec![0u64; n];
                    run_smqs(&inputs, m, seed)?.1
                }
                ScalingProtocol::LcmRound => {
                    let inputs = vec![1u64; n];
                    run_smqlcmc(&inputs, m, seed, 8)?.1
                }
            };
            let cost = cost_summary(&transcript)?;
            let rounds = cost.rounds.max(1);
            Ok(ScalingRow {
                n: n as u64,
                m: u64::from(m),
                operator_applications: cost.operator_applications / rounds,
                transfers: cost.transfers / rounds,
                qubits_transferred: cost.qubits_transferred / rounds,
            })
        })
        .collect()
}

/// Aggregate statistics of one [`TrialBatch`].
///
/// A trial is a success when the protocol accepts and reports an
/// output; the statistical failure modes — vote-rejection exhausting
/// the round cap, or a tamper check firing — count as rejections and
/// lower the success rate instead of aborting the batch.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchStats {
    /// Trials attempted.
    pub trials: u32,
    /// Trials that produced an output.
    pub successes: u32,
    /// Trials rejected by the protocol (round cap, tamper check).
    pub rejections: u32,
    /// `successes / trials`.
    pub success_rate: f64,
    /// Mean rounds per successful trial (0 when nothing succeeded).
    pub mean_rounds: f64,
    /// Histogram of outputs over successful trials. Summation reports
    /// the sum, votes report the tally bit, LCM reports the accepted
    /// multiple.
    pub outcomes: BTreeMap<u64, u32>,
    /// Transcript costs summed over successful trials.
    pub cost_total: CostSummary,
    /// Modeled elementary gates for the summed costs: operator
    /// applications times the squared dominant register width.
    pub modeled_gate_total: u64,
}

struct TrialRecord {
    outcome: Option<u64>,
    rounds: u64,
    cost: CostSummary,
}

fn run_trial(spec: &RunSpec, seed: u64) -> Result<TrialRecord, ProtocolError> {
    let done = match spec {
        RunSpec::Summation { inputs, m } => run_smqs(inputs, *m, seed).map(|(sum, t)| (sum, 1, t)),
        RunSpec::Vote { votes, vote_mask } => {
            run_qov(votes, *vote_mask, seed).map(|(out, t)| (u64::from(out.y), 1, t))
        }
        RunSpec::Lcm {
            inputs,
            m,
            max_rounds,
            force,
        } => {
            let runner = if *force {
                run_smqlcmc_forced
            } else {
                run_smqlcmc
            };
            runner(inputs, *m, seed, *max_rounds)
                .map(|(out, t)| (out.y, u64::from(out.rounds), t))
        }
    };
    match done {
        Ok((outcome, rounds, transcript)) => {
            let cost =
                cost_summary(&transcript).expect("a protocol-produced transcript validates");
            Ok(TrialRecord {
                outcome: Some(outcome),
                rounds,
                cost,
            })
        }
        // Statistical rejections are data, not faults: record and move on.
        Err(ProtocolError::RoundsExhausted { rounds, .. }) => Ok(TrialRecord {
            outcome: None,
            rounds: u64::from(rounds),
            cost: CostSummary::default(),
        }),
        Err(ProtocolError::TamperDetected { .. }) => Ok(TrialRecord {
            outcome: None,
            rounds: 0,
            cost: CostSummary::default(),
        }),
        Err(other) => Err(other),
    }
}

/// Runs every trial of the batch and aggregates the results.
///
/// Trials execute in parallel under their derived seeds; aggregation
/// folds the per-trial records in index order, so the statistics are
/// identical however the trials were scheduled.
///
/// # Errors
///
/// [`HarnessError::EmptyBatch`] for zero trials, and
/// [`HarnessError::Trial`] — tagged with the trial index — when a trial
/// fails for a non-statistical reason such as invalid inputs.
pub fn run_batch(batch: &TrialBatch) -> Result<BatchStats, HarnessError> {
    if batch.trials == 0 {
        return Err(HarnessError::EmptyBatch);
    }
    let records: Vec<(u64, Result<TrialRecord, ProtocolError>)> = (0..u64::from(batch.trials))
        .into_par_iter()
        .map(|index| (index, run_trial(&batch.spec, batch.seed_for(index))))
        .collect();

    let mut successes = 0u32;
    let mut rejections = 0u32;
    let mut rounds_total = 0u64;
    let mut outcomes = BTreeMap::new();
    let mut cost_total = CostSummary::default();
    for (index, record) in records {
        let record = record.map_err(|source| HarnessError::Trial { index, source })?;
        match record.outcome {
            Some(value) => {
                successes += 1;
                rounds_total += record.rounds;
                *outcomes.entry(value).or_insert(0u32) += 1;
                cost_total.absorb(&record.cost);
            }
            None => rejections += 1,
        }
    }
    let width = batch.spec.gate_width();
    Ok(BatchStats {
        trials: batch.trials,
        successes,
        rejections,
        success_rate: f64::from(successes) / f64::from(batch.trials),
        mean_rounds: if successes == 0 {
            0.0
        } else {
            rounds_total as f64 / f64::from(successes)
        },
        outcomes,
        modeled_gate_total: cost_total.modeled_gates(width),
        cost_total,
    })
}

/// Total-variation distance `(1/2)·Σ|p_k − q_k|` between two
/// measurement laws on the same outcome space.
///
/// # Errors
///
/// [`HarnessError::SupportMismatch`] when the outcome spaces differ in
/// size.
pub fn tv_distance(
    p: &MeasurementDistribution,
    q: &MeasurementDistribution,
) -> Result<f64, HarnessError> {
    if p.probabilities.len() != q.probabilities.len() {
        return Err(HarnessError::SupportMismatch {
            left: p.probabilities.len(),
            right: q.probabilities.len(),
        });
    }
    Ok(p.probabilities
        .iter()
        .zip(&q.probabilities)
        .map(|(a, b)| (a - b).abs())
        .sum::<f64>()
        / 2.0)
}

/// Output encodings understood by [`emit_report`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    /// Pretty-printed JSON with sorted keys and fixed float formatting.
    Json,
    /// Comma-separated values for histogram- or table-shaped results.
    Csv,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(format!("unknown format {other:?} (expected json or csv)")),
        }
    }
}

/// Renders `results` to `out` in the requested format.
///
/// Output is byte-stable: keys are emitted in sorted order, and every
/// float is written in fixed decimal notation with 12 significant
/// digits (falling back to exponent notation outside `1e-4..1e15`), so
/// rerunning with identical inputs reproduces identical bytes.
///
/// CSV is defined for two shapes: a map from outcomes to numbers
/// (rendered under the header `outcome,probability` in numeric key
/// order) and an array of flat records sharing one key set (rendered
/// with a sorted header row). Anything else is a
/// [`HarnessError::CsvShape`] error; use JSON for nested results.
///
/// # Errors
///
/// Serialization failures, non-finite floats, unsupported CSV shapes,
/// and write errors on `out`.
pub fn emit_report(
    results: &impl Serialize,
    format: ReportFormat,
    out: &mut dyn Write,
) -> Result<(), HarnessError> {
    let value = serde_json::to_value(results)?;
    let mut text = String::new();
    match format {
        ReportFormat::Json => write_json(&value, &mut text, 0)?,
        ReportFormat::Csv => write_csv(&value, &mut text)?,
    }
    text.push('\n');
    out.write_all(text.as_bytes())?;
    Ok(())
}

/// Formats a float with 12 significant digits, deterministically.
///
/// Values in the fixed-notation band `1e-4..1e15` (and zero) render as
/// plain decimals with trailing zeros trimmed but at least one
/// fractional digit kept, so floats stay float-typed in JSON; values
/// outside the band keep exponent notation.
fn fmt_f64(x: f64) -> Result<String, HarnessError> {
    if !x.is_finite() {
        return Err(HarnessError::NonFinite);
    }
    if x == 0.0 {
        return Ok("0.0".to_owned());
    }
    // 12 significant digits: one lead digit plus 11 decimals.
    let sci = format!("{x:.11e}");
    let epos = sci.find('e').expect("{:e} always places an exponent");
    let exp: i32 = sci[epos + 1..].parse().expect("exponent is an integer");
    let negative = x < 0.0;
    let digits: String = sci[..epos].chars().filter(|c| c.is_ascii_digit()).collect();
    debug_assert_eq!(digits.len(), 12);

    if !(-4..15).contains(&exp) {
        let trimmed = digits[1..].trim_end_matches('0');
        let mantissa = if trimmed.is_empty() {
            format!("{}.0", &digits[..1])
        } else {
            format!("{}.{}", &digits[..1], trimmed)
        };
        return Ok(format!("{}{mantissa}e{exp}", if negative { "-" } else { "" }));
    }

    let mut body = String::new();
    if exp < 0 {
        body.push_str("0.");
        for _ in 0..(-exp - 1) {
            body.push('0');
        }
        body.push_str(&digits);
    } else {
        let point = (exp + 1) as usize;
        if point >= digits.len() {
            body.push_str(&digits);
            for _ in 0..(point - digits.len()) {
                body.push('0');
            }
            body.push_str(".0");
        } else {
            body.push_str(&digits[..point]);
            body.push('.');
            body.push_str(&digits[point..]);
        }
    }
    if let Some(stripped) = body.trim_end_matches('0').strip_suffix('.') {
        body = format!("{stripped}.0");
    } else {
        body = body.trim_end_matches('0').to_owned();
    }
    Ok(format!("{}{body}", if negative { "-" } else { "" }))
}

fn write_number(n: &serde_json::Number, out: &mut String) -> Result<(), HarnessError> {
    if let Some(i) = n.as_i64() {
        out.push_str(&i.to_string());
    } else if let Some(u) = n.as_u64() {
        out.push_str(&u.to_string());
    } else {
        out.push_str(&fmt_f64(n.as_f64().ok_or(HarnessError::NonFinite)?)?);
    }
    Ok(())
}

fn write_json(value: &serde_json::Value, out: &mut String, depth: usize) -> Result<(), HarnessError> {
    use serde_json::Value;
    let pad = |out: &mut String, depth: usize| {
        out.push('\n');
        for _ in 0..depth {
            out.push_str("  ");
        }
    };
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => write_number(n, out)?,
        Value::String(s) => out.push_str(&serde_json::to_string(s)?),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
            } else {
                out.push('[');
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    pad(out, depth + 1);
                    write_json(item, out, depth + 1)?;
                }
                pad(out, depth);
                out.push(']');
            }
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
            } else {
                out.push('{');
                // serde_json's map is key-sorted, giving stable order.
                for (i, (key, item)) in map.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    pad(out, depth + 1);
                    out.push_str(&serde_json::to_string(key)?);
                    out.push_str(": ");
                    write_json(item, out, depth + 1)?;
                }
                pad(out, depth);
                out.push('}');
            }
        }
    }
    Ok(())
}

fn csv_scalar(value: &serde_json::Value) -> Result<String, HarnessError> {
    use serde_json::Value;
    match value {
        Value::Number(n) => {
            let mut s = String::new();
            write_number(n, &mut s)?;
            Ok(s)
        }
        Value::Bool(b) => Ok(if *b { "true" } else { "false" }.to_owned()),
        Value::String(s) if !s.contains([',', '"', '\n']) => Ok(s.clone()),
        Value::String(_) => Err(HarnessError::CsvShape(
            "string fields must not contain commas, quotes, or newlines",
        )),
        _ => Err(HarnessError::CsvShape("nested values have no CSV cell form")),
    }
}

fn write_csv(value: &serde_json::Value, out: &mut String) -> Result<(), HarnessError> {
    use serde_json::Value;
    match value {
        Value::Object(map) => {
            out.push_str("outcome,probability");
            // Outcome keys sort numerically when they all parse.
            let mut rows: Vec<(&String, &Value)> = map.iter().collect();
            if map.keys().all(|k| k.parse::<u64>().is_ok()) {
                rows.sort_by_key(|(k, _)| k.parse::<u64>().expect("checked just above"));
            }
            for (key, item) in rows {
                out.push('\n');
                out.push_str(key);
                out.push(',');
                out.push_str(&csv_scalar(item)?);
            }
            Ok(())
        }
        Value::Array(items) => {
            let Some(Value::Object(first)) = items.first() else {
                return Err(HarnessError::CsvShape(
                    "CSV tables need a non-empty array of records",
                ));
            };
            let headers: Vec<&String> = first.keys().collect();
            out.push_str(
                &headers
                    .iter()
                    .map(|h| h.as_str())
                    .collect::<Vec<_>>()
                    .join(","),
            );
            for item in items {
                let Value::Object(record) = item else {
                    return Err(HarnessError::CsvShape("CSV table rows must be records"));
                };
                if record.len() != headers.len()
                    || !headers.iter().all(|h| record.contains_key(*h))
                {
                    return Err(HarnessError::CsvShape(
                        "CSV table rows must share one key set",
                    ));
                }
                out.push('\n');
                for (i, header) in headers.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    out.push_str(&csv_scalar(&record[*header])?);
                }
            }
            Ok(())
        }
        _ => Err(HarnessError::CsvShape(
            "CSV is defined for outcome maps and record tables",
        )),
    }
}
