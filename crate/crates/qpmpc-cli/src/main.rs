//! Command-line driver for the protocol simulator.
//!
//! Every subcommand resolves an explicit seed (flag, then config file,
//! then the `QPMPC_SEED` environment variable, then 0 with a warning),
//! prints its effective configuration and a human summary to standard
//! error, and writes a machine-readable report — byte-stable JSON or
//! CSV — to standard output or `--out`.
//!
//! Exit codes: 0 success; 1 usage or configuration error; 2 protocol
//! rejection (tamper check); 3 round cap exhausted; 4 internal
//! invariant breach.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::json;

use qpmpc::adversary::{
    attack_direct, attack_post_period, attack_pre_period, estimate_leak_probability,
    leakage_probe, AdversaryError, DirectAttack, PrePeriodInstant,
};
use qpmpc::harness::{
    cost_scaling, cost_summary, emit_report, HarnessError, ReportFormat, ScalingProtocol,
};
use qpmpc::protocols::{
    run_qov, run_smqlcmc, run_smqlcmc_forced, run_smqs, vote_mask_bits, ProtocolError,
};
use qpmpc::qpa::{choose_u, run_qpa, QpaConfig, QpaError};

#[derive(Parser)]
#[command(
    name = "qpmpc",
    version,
    about = "Exact simulator for multiparty quantum summation, voting, and LCM protocols"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sum private inputs modulo 2^bits.
    Sum(SumArgs),
    /// Run the one-vote-down unanimous vote.
    Vote(VoteArgs),
    /// Compute the least common multiple of private inputs.
    Lcm(LcmArgs),
    /// Recover the period of j mod modulus by quantum period finding.
    Qpa(QpaArgs),
    /// Replay an LCM round under a semi-honest attacker and report the
    /// attacker's measurement law against the exact reference.
    Attack(AttackArgs),
    /// Monte Carlo estimate of the vote's mask-sum leak probability.
    Leakage(LeakageArgs),
    /// Sweep protocol sizes and tabulate transcript costs.
    Bench(BenchArgs),
}

/// Flags shared by every subcommand.
#[derive(Args)]
struct Common {
    /// Seed for all randomness. Falls back to the config file, then the
    /// QPMPC_SEED environment variable, then 0 (with a warning).
    #[arg(long)]
    seed: Option<u64>,
    /// Report encoding: json or csv.
    #[arg(long, default_value = "json")]
    format: String,
    /// Write the report to this file instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON file whose keys mirror the long flags; explicit flags win.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct SumArgs {
    /// Comma-separated private inputs, one per party.
    #[arg(long, value_delimiter = ',')]
    inputs: Option<Vec<u64>>,
    /// Register width; the sum is reported modulo 2^bits.
    #[arg(long)]
    bits: Option<u32>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct VoteArgs {
    /// Comma-separated ballots, 1 for yes and 0 for no.
    #[arg(long, value_delimiter = ',')]
    votes: Option<Vec<u8>>,
    /// Upper bound of the no-vote mask range.
    #[arg(long = "M")]
    vote_mask: Option<u64>,
    /// Also print the raw tally z and its leakage analysis.
    #[arg(long)]
    debug: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct LcmArgs {
    /// Comma-separated positive inputs, one per party.
    #[arg(long, value_delimiter = ',')]
    inputs: Option<Vec<u64>>,
    /// Bit width each input must fit in.
    #[arg(long)]
    bits: Option<u32>,
    /// Round cap before giving up.
    #[arg(long)]
    max_rounds: Option<u32>,
    /// Bypass the control-register width guard.
    #[arg(long)]
    force: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct QpaArgs {
    /// The function is j mod modulus; its period is recovered.
    #[arg(long)]
    modulus: Option<u64>,
    /// Value register width; the period must fit below 2^v.
    #[arg(long)]
    v: Option<u32>,
    /// Round cap before giving up.
    #[arg(long)]
    max_rounds: Option<u32>,
    #[command(flatten)]
    common: Common,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum AttackKind {
    /// Measure a legitimately held register in the computational basis.
    Direct,
    /// Measure the phase or traveling register before the period is
    /// fixed; the law is exactly flat.
    Pre,
    /// Keep a coherent copy of the traveling register past the phase
    /// readout; the law is an exact comb around the announced outcome.
    Post,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum AttackInstant {
    /// Direct: own residue register during the ring pass.
    Before,
    /// Direct: own residue register after the phase readout.
    After,
    /// Direct: the traveling register while holding it.
    Traveler,
    /// Pre: the phase register before any oracle (attacker 0 only).
    Start,
    /// Pre: the traveling register right after the attacker's oracle.
    OwnTurn,
    /// Pre: the traveling register back home, before the uncompute
    /// (attacker 0 only).
    FinalReturn,
}

#[derive(Args)]
struct AttackArgs {
    /// Which attack to replay.
    #[arg(long, value_enum)]
    kind: Option<AttackKind>,
    /// Comma-separated positive inputs, one per party.
    #[arg(long, value_delimiter = ',')]
    inputs: Option<Vec<u64>>,
    /// Bit width each input must fit in.
    #[arg(long)]
    bits: Option<u32>,
    /// Index of the semi-honest party.
    #[arg(long)]
    attacker: Option<usize>,
    /// When the attacker measures (defaults: direct=after, pre=final-return).
    #[arg(long, value_enum)]
    instant: Option<AttackInstant>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct LeakageArgs {
    /// Number of voting parties.
    #[arg(long)]
    n: Option<usize>,
    /// Upper bound of the no-vote mask range.
    #[arg(long = "M")]
    vote_mask: Option<u64>,
    /// Number of no-voters per trial.
    #[arg(long)]
    lambda: Option<u64>,
    /// Monte Carlo trial count.
    #[arg(long)]
    trials: Option<u32>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct BenchArgs {
    /// Size sweep, e.g. "sum:n=2..6:m=1..5" or "lcm-round:n=2..4:m=1..2".
    #[arg(long)]
    sweep: Option<String>,
    #[command(flatten)]
    common: Common,
}

/// Optional JSON file mirroring the long flags. Explicit flags override
/// whatever the file supplies.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    inputs: Option<Vec<u64>>,
    bits: Option<u32>,
    votes: Option<Vec<u8>>,
    #[serde(rename = "M")]
    vote_mask: Option<u64>,
    max_rounds: Option<u32>,
    force: Option<bool>,
    modulus: Option<u64>,
    v: Option<u32>,
    attacker: Option<usize>,
    n: Option<usize>,
    lambda: Option<u64>,
    trials: Option<u32>,
    sweep: Option<String>,
    seed: Option<u64>,
}

/// A failed invocation, carrying the process exit code.
enum Failure {
    /// Bad flags, bad config, or violated preconditions (exit 1).
    Usage(String),
    /// The protocol itself rejected the run (exit 2).
    Reject(String),
    /// The round cap ran out before acceptance (exit 3).
    Exhausted(String),
    /// An internal invariant broke (exit 4).
    Internal(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Reject(_) => 2,
            Failure::Exhausted(_) => 3,
            Failure::Internal(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Reject(m) | Failure::Exhausted(m) | Failure::Internal(m) => m,
        }
    }
}

impl From<ProtocolError> for Failure {
    fn from(e: ProtocolError) -> Self {
        match e {
            ProtocolError::TamperDetected { .. } => Failure::Reject(e.to_string()),
            ProtocolError::RoundsExhausted { .. } => Failure::Exhausted(e.to_string()),
            ProtocolError::Engine(_) | ProtocolError::Arith(_) => Failure::Internal(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

impl From<QpaError> for Failure {
    fn from(e: QpaError) -> Self {
        match e {
            QpaError::RoundsExhausted { .. } => Failure::Exhausted(e.to_string()),
            QpaError::Engine(_) | QpaError::Arith(_) => Failure::Internal(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

impl From<AdversaryError> for Failure {
    fn from(e: AdversaryError) -> Self {
        match e {
            AdversaryError::Protocol(inner) => inner.into(),
            AdversaryError::Engine(_) | AdversaryError::Arith(_) => {
                Failure::Internal(e.to_string())
            }
            _ => Failure::Usage(e.to_string()),
        }
    }
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Trial { source, .. } => source.into(),
            HarnessError::Protocol(inner) => inner.into(),
            HarnessError::EmptyBatch
            | HarnessError::SupportMismatch { .. }
            | HarnessError::CsvShape(_)
            | HarnessError::Io(_) => Failure::Usage(e.to_string()),
            HarnessError::Transcript(_) | HarnessError::NonFinite | HarnessError::Json(_) => {
                Failure::Internal(e.to_string())
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version are successful outcomes, not usage errors.
            let usage = !matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            );
            let _ = e.print();
            return if usage {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message());
            ExitCode::from(failure.code())
        }
    }
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::Sum(args) => cmd_sum(args),
        Command::Vote(args) => cmd_vote(args),
        Command::Lcm(args) => cmd_lcm(args),
        Command::Qpa(args) => cmd_qpa(args),
        Command::Attack(args) => cmd_attack(args),
        Command::Leakage(args) => cmd_leakage(args),
        Command::Bench(args) => cmd_bench(args),
    }
}

/// Loads the optional `--config` file.
fn load_config(common: &Common) -> Result<ConfigFile, Failure> {
    let Some(path) = &common.config else {
        return Ok(ConfigFile::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Failure::Usage(format!("bad config {}: {e}", path.display())))
}

/// Resolves the seed: flag, then config file, then `QPMPC_SEED`, then 0
/// with a warning — never silent time-based seeding.
fn resolve_seed(flag: Option<u64>, config: &ConfigFile) -> Result<u64, Failure> {
    if let Some(seed) = flag.or(config.seed) {
        return Ok(seed);
    }
    match std::env::var("QPMPC_SEED") {
        Ok(text) => text
            .trim()
            .parse()
            .map_err(|_| Failure::Usage(format!("QPMPC_SEED must be a 64-bit integer, got {text:?}"))),
        Err(_) => {
            eprintln!("warning: no seed given; using --seed 0 (set --seed or QPMPC_SEED to silence this)");
            Ok(0)
        }
    }
}

fn parse_format(common: &Common) -> Result<ReportFormat, Failure> {
    common.format.parse().map_err(Failure::Usage)
}

fn require<T>(value: Option<T>, flag: &str) -> Result<T, Failure> {
    value.ok_or_else(|| Failure::Usage(format!("missing required flag --{flag}")))
}

/// Prints the effective configuration line on standard error.
fn print_config(value: &serde_json::Value) {
    eprintln!("config: {value}");
}

/// Writes the report to `--out` or standard output.
fn write_report(
    results: &impl serde::Serialize,
    format: ReportFormat,
    out: &Option<PathBuf>,
) -> Result<(), Failure> {
    match out {
        Some(path) => {
            let mut file = std::fs::File::create(path).map_err(|e| {
                Failure::Usage(format!("cannot write report to {}: {e}", path.display()))
            })?;
            emit_report(results, format, &mut file)?;
            file.flush()
                .map_err(|e| Failure::Usage(format!("cannot write report: {e}")))?;
        }
        None => {
            let stdout = std::io::stdout();
            emit_report(results, format, &mut stdout.lock())?;
        }
    }
    Ok(())
}

fn cmd_sum(args: SumArgs) -> Result<(), Failure> {
    let config = load_config(&args.common)?;
    let seed = resolve_seed(args.common.seed, &config)?;
    let format = parse_format(&args.common)?;
    let inputs = require(args.inputs.or(config.inputs), "inputs")?;
    let bits = require(args.bits.or(config.bits), "bits")?;
    print_config(&json!({
        "cmd": "sum", "inputs": inputs, "bits": bits, "seed": seed,
    }));

    let (sum, transcript) = run_smqs(&inputs, bits, seed)?;
    let cost = cost_summary(&transcript).map_err(Failure::from)?;
    eprintln!("sum = {sum} (mod 2^{bits})");
    write_report(
        &json!({ "protocol": "summation", "sum": sum, "cost": cost }),
        format,
        &args.common.out,
    )
}

fn cmd_vote(args: VoteArgs) -> Result<(), Failure> {
    let config = load_config(&args.common)?;
    let seed = resolve_seed(args.common.seed, &config)?;
    let format = parse_format(&args.common)?;
    let ballots = require(args.votes.or(config.votes), "votes")?;
    let vote_mask = args.vote_mask.or(config.vote_mask).unwrap_or(16);
    let votes: Vec<bool> = ballots
        .iter()
        .map(|&b| match b {
            0 => Ok(false),
            1 => Ok(true),
            other => Err(Failure::Usage(format!(
                "ballots must be 0 or 1, got {other}"
            ))),
        })
        .collect::<Result<_, _>>()?;
    let m_vote = vote_mask_bits(votes.len(), vote_mask);
    print_config(&json!({
        "cmd": "vote", "votes": ballots, "M": vote_mask, "m_vote": m_vote, "seed": seed,
    }));

    let (outcome, transcript) = run_qov(&votes, vote_mask, seed)?;
    let cost = cost_summary(&transcript).map_err(Failure::from)?;
    eprintln!(
        "y = {} ({})",
        u8::from(outcome.y),
        if outcome.y { "unanimous yes" } else { "vote failed" }
    );
    let mut report = json!({
        "protocol": "vote", "y": u8::from(outcome.y), "cost": cost,
    });
    if args.debug {
        let leakage = leakage_probe(outcome.z, m_vote, vote_mask, votes.len())?;
        eprintln!("z = {} (leakage: {:?})", outcome.z, leakage);
        report["z"] = json!(outcome.z);
        report["leakage"] = serde_json::to_value(&leakage)
            .map_err(|e| Failure::Internal(e.to_string()))?;
    }
    write_report(&report, format, &args.common.out)
}

fn cmd_lcm(args: LcmArgs) -> Result<(), Failure> {
    let config = load_config(&args.common)?;
    let seed = resolve_seed(args.common.seed, &config)?;
    let format = parse_format(&args.common)?;
    let inputs = require(args.inputs.or(config.inputs), "inputs")?;
    let bits = require(args.bits.or(config.bits), "bits")?;
    let max_rounds = args.max_rounds.or(config.max_rounds).unwrap_or(64);
    let force = args.force || config.force.unwrap_or(false);
    let u = 2 * (inputs.len() as u32) * bits + 1;
    print_config(&json!({
        "cmd": "lcm", "inputs": inputs, "bits": bits, "u": u,
        "max_rounds": max_rounds, "force": force, "seed": seed,
    }));

    let runner = if force { run_smqlcmc_forced } else { run_smqlcmc };
    let (outcome, transcript) = runner(&inputs, bits, seed, max_rounds)?;
    let cost = cost_summary(&transcript).map_err(Failure::from)?;
    eprintln!(
        "y = {} in {} round(s); candidates tried: {:?}",
        outcome.y, outcome.rounds, outcome.candidate_history
    );
    write_report(
        &json!({
            "protocol": "lcm", "y": outcome.y, "rounds": outcome.rounds,
            "candidate_history": outcome.candidate_history, "cost": cost,
        }),
        format,
        &args.common.out,
    )
}

fn cmd_qpa(args: QpaArgs) -> Result<(), Failure> {
    let config = load_config(&args.common)?;
    let seed = resolve_seed(args.common.seed, &config)?;
    let format = parse_format(&args.common)?;
    let modulus = require(args.modulus.or(config.modulus), "modulus")?;
    let value_bits = require(args.v.or(config.v), "v")?;
    let max_rounds = args.max_rounds.or(config.max_rounds).unwrap_or(64);
    if modulus == 0 {
        return Err(Failure::Usage("--modulus must be at least 1".into()));
    }
    let qpa_config = QpaConfig {
        value_bits,
        control_bits: choose_u(value_bits),
        max_rounds,
        seed,
    };
    print_config(&json!({
        "cmd": "qpa", "modulus": modulus, "v": value_bits,
        "u": qpa_config.control_bits, "max_rounds": max_rounds, "seed": seed,
    }));

    let result = run_qpa(|j| j % modulus, &qpa_config)?;
    eprintln!("period = {} in {} round(s)", result.period, result.rounds_used);
    write_report(
        &json!({
            "protocol": "qpa", "period": result.period,
            "rounds_used": result.rounds_used, "phi_samples": result.phi_samples,
        }),
        format,
        &args.common.out,
    )
}

fn cmd_attack(args: AttackArgs) -> Result<(), Failure> {
    let config = load_config(&args.common)?;
    let seed = resolve_seed(args.common.seed, &config)?;
    let format = parse_format(&args.common)?;
    let kind = require(args.kind, "kind")?;
    let inputs = require(args.inputs.or(config.inputs), "inputs")?;
    let bits = require(args.bits.or(config.bits), "bits")?;
    let attacker = args.attacker.or(config.attacker).unwrap_or(0);
    let u = 2 * (inputs.len() as u32) * bits + 1;
    print_config(&json!({
        "cmd": "attack",
        "kind": match kind { AttackKind::Direct => "direct", AttackKind::Pre => "pre", AttackKind::Post => "post" },
        "inputs": inputs, "bits": bits, "u": u, "attacker": attacker, "seed": seed,
    }));

    let report = match kind {
        AttackKind::Direct => {
            let mode = match args.instant.unwrap_or(AttackInstant::After) {
                AttackInstant::Before => DirectAttack::ResidueBefore,
                AttackInstant::After => DirectAttack::ResidueAfter,
                AttackInstant::Traveler => DirectAttack::Traveler,
                other => {
                    return Err(Failure::Usage(format!(
                        "--instant {other:?} belongs to --kind pre; direct attacks take before, after, or traveler"
                    )))
                }
            };
            attack_direct(&inputs, bits, attacker, mode, seed)?
        }
        AttackKind::Pre => {
            let instant = match args.instant.unwrap_or(AttackInstant::FinalReturn) {
                AttackInstant::Start => PrePeriodInstant::Start,
                AttackInstant::OwnTurn => PrePeriodInstant::OwnTurn,
                AttackInstant::FinalReturn => PrePeriodInstant::FinalReturn,
                other => {
                    return Err(Failure::Usage(format!(
                        "--instant {other:?} belongs to --kind direct; pre-period attacks take start, own-turn, or final-return"
                    )))
                }
            };
            attack_pre_period(&inputs, bits, attacker, instant, seed)?
        }
        AttackKind::Post => {
            if args.instant.is_some() {
                return Err(Failure::Usage(
                    "--instant does not apply to --kind post".into(),
                ));
            }
            attack_post_period(&inputs, bits, attacker, seed)?
        }
    };
    eprintln!(
        "max deviation = {:.3e}; tv distance = {:.3e}",
        report.max_deviation, report.tv_distance
    );
    match format {
        ReportFormat::Json => write_report(&report, format, &args.common.out),
        ReportFormat::Csv => {
            // CSV carries the observed law as an outcome histogram.
            let histogram: BTreeMap<u64, f64> = report
                .observed
                .probabilities
                .iter()
                .enumerate()
                .map(|(k, &p)| (k as u64, p))
                .collect();
            write_report(&histogram, format, &args.common.out)
        }
    }
}

fn cmd_leakage(args: LeakageArgs) -> Result<(), Failure> {
    let config = load_config(&args.common)?;
    let seed = resolve_seed(args.common.seed, &config)?;
    let format = parse_format(&args.common)?;
    let n = require(args.n.or(config.n), "n")?;
    let vote_mask = args.vote_mask.or(config.vote_mask).unwrap_or(16);
    let lambda = require(args.lambda.or(config.lambda), "lambda")?;
    let trials = require(args.trials.or(config.trials), "trials")?;
    print_config(&json!({
        "cmd": "leakage", "n": n, "M": vote_mask, "lambda": lambda,
        "m_vote": vote_mask_bits(n, vote_mask), "trials": trials, "seed": seed,
    }));

    let frequency = estimate_leak_probability(n, vote_mask, lambda, trials, seed)?;
    let rate = 1.0 / vote_mask as f64;
    let bound = rate + 3.0 * (rate * (1.0 - rate) / f64::from(trials)).sqrt();
    eprintln!(
        "leak frequency = {frequency:.6} vs bound {bound:.6} — {}",
        if frequency < bound { "within bound" } else { "ABOVE BOUND" }
    );
    write_report(
        &json!({
            "n": n, "M": vote_mask, "lambda": lambda, "trials": trials,
            "leak_frequency": frequency, "bound": bound, "below_bound": frequency < bound,
        }),
        format,
        &args.common.out,
    )
}

/// Parses a sweep spec like `sum:n=2..6:m=1..5`.
fn parse_sweep(spec: &str) -> Result<(ScalingProtocol, Vec<(usize, u32)>), Failure> {
    let usage = || {
        Failure::Usage(format!(
            "bad --sweep {spec:?}; expected <sum|lcm-round>:n=<a>..<b>:m=<c>..<d>"
        ))
    };
    let mut parts = spec.split(':');
    let protocol = match parts.next() {
        Some("sum") => ScalingProtocol::Summation,
        Some("lcm-round") => ScalingProtocol::LcmRound,
        _ => return Err(usage()),
    };
    let mut range = |prefix: &str| -> Result<std::ops::RangeInclusive<u64>, Failure> {
        let part = parts.next().ok_or_else(usage)?;
        let body = part.strip_prefix(prefix).ok_or_else(usage)?;
        let (lo, hi) = body.split_once("..").ok_or_else(usage)?;
        let lo: u64 = lo.parse().map_err(|_| usage())?;
        let hi: u64 = hi.parse().map_err(|_| usage())?;
        if lo > hi || lo == 0 {
            return Err(usage());
        }
        Ok(lo..=hi)
    };
    let ns = range("n=")?;
    let ms = range("m=")?;
    if parts.next().is_some() {
        return Err(usage());
    }
    let sizes = ns
        .flat_map(|n| ms.clone().map(move |m| (n as usize, m as u32)))
        .collect();
    Ok((protocol, sizes))
}

fn cmd_bench(args: BenchArgs) -> Result<(), Failure> {
    let config = load_config(&args.common)?;
    let seed = resolve_seed(args.common.seed, &config)?;
    let format = parse_format(&args.common)?;
    let sweep = require(args.sweep.or(config.sweep), "sweep")?;
    let (protocol, sizes) = parse_sweep(&sweep)?;
    print_config(&json!({
        "cmd": "bench", "sweep": sweep, "configurations": sizes.len(), "seed": seed,
    }));

    let rows = cost_scaling(protocol, &sizes, seed)?;
    eprintln!("{} configuration(s) measured", rows.len());
    write_report(&rows, format, &args.common.out)
}
