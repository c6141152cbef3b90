//! Semi-honest attack simulations and vote-leakage analysis.
//!
//! The attack functions replay the distributed period-finding pass with
//! an observer attached — the same circuit the LCM protocol runs, not a
//! forked variant — and record what a curious-but-honest party would see
//! if it measured (or quietly copied) the registers in its custody. Each
//! produces an [`AttackReport`] comparing the observed outcome law with
//! the reference law the protocol's security argument predicts.
//!
//! The leakage functions quantify the one piece of information the vote
//! announcer does learn: the two-adic structure of the masked sum `z`,
//! which occasionally narrows down how many parties voted no.

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::numtheory::{lcm_many, NumTheoryError};
use crate::protocols::{
    measurement_rng, qpa_round, validate_inputs, vote_mask_bits, PassInstant, ProtocolError,
    Transcript, LCM_GUARD_BITS,
};
use crate::qsim::{
    Basis, EngineError, MeasurementDistribution, RegisterSpec, SparseState,
};
use crate::seeds::{derive_seed, rng_from_seed, trial_seed};

/// What a simulated attacker observed, next to what the security
/// argument says it should observe.
#[derive(Debug, Clone, Serialize)]
pub struct AttackReport {
    /// Attack class: `direct`, `pre_period`, or `post_period`.
    pub kind: String,
    /// The curious party's id.
    pub attacker: usize,
    /// Which instant and register the attacker examined.
    pub detail: String,
    /// The phase readout `k` of the period-finding pass, where the attack
    /// happens after it. Test-only knowledge: in the protocol only the
    /// first party sees `k`; it is reported so tests can locate the
    /// predicted support.
    pub qpa_outcome: Option<u64>,
    /// Exact outcome law of the attacker's measurement.
    pub observed: MeasurementDistribution,
    /// Predicted law, over the same outcome support.
    pub reference: Vec<f64>,
    /// `max_y |observed(y) - reference(y)|`.
    pub max_deviation: f64,
    /// Total-variation distance between observed and reference.
    pub tv_distance: f64,
}

impl AttackReport {
    fn new(
        kind: &str,
        attacker: usize,
        detail: &str,
        qpa_outcome: Option<u64>,
        observed: MeasurementDistribution,
        reference: Vec<f64>,
    ) -> Self {
        assert_eq!(
            observed.probabilities.len(),
            reference.len(),
            "deviations need identical outcome supports"
        );
        let max_deviation = observed
            .probabilities
            .iter()
            .zip(&reference)
            .map(|(p, q)| (p - q).abs())
            .fold(0.0, f64::max);
        let tv_distance = 0.5
            * observed
                .probabilities
                .iter()
                .zip(&reference)
                .map(|(p, q)| (p - q).abs())
                .sum::<f64>();
        Self {
            kind: kind.to_string(),
            attacker,
            detail: detail.to_string(),
            qpa_outcome,
            observed,
            reference,
            max_deviation,
            tv_distance,
        }
    }
}

/// What the vote announcer can deduce from one masked sum `z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LeakageReport {
    /// The masked sum itself.
    pub z: u64,
    /// `z == 0`: the vote passed and nothing is there to leak.
    pub vote_passed: bool,
    /// Exponent of the largest power of two dividing `z` (0 when the
    /// vote passed).
    pub m1: u32,
    /// Whether `2^m1 > vote_mask`, the condition under which `z` narrows
    /// the number of no-voters beyond the trivial bound.
    pub leak_flag: bool,
    /// Implied interval for the number of no-voters. `(0, 0)` when the
    /// vote passed; otherwise a subinterval of `[1, n]` (clamped there
    /// even for a `z` no honest run can produce).
    pub lambda_bounds: (u64, u64),
}

#[derive(Debug, Error)]
pub enum AdversaryError {
    #[error("attacker id {attacker} out of range for {parties} parties")]
    BadAttacker { attacker: usize, parties: usize },
    #[error("attacker {attacker} cannot attack at this instant: {needed}")]
    WrongPhase {
        attacker: usize,
        needed: &'static str,
    },
    #[error("masked sum {z} does not fit the {m_vote}-bit vote register")]
    ZOutOfRange { z: u64, m_vote: u32 },
    #[error("negative-vote count {lambda} not in [1, {n}]")]
    BadLambda { lambda: u64, n: usize },
    #[error("trials must be at least 1")]
    NoTrials,
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Arith(#[from] NumTheoryError),
}

/// Direct measurement attacks: the attacker reads a register in the
/// computational basis instead of following the protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DirectAttack {
    /// Measure the own residue register during the ring pass.
    ResidueBefore,
    /// Measure the own residue register after the phase readout.
    ResidueAfter,
    /// Measure the traveling register while holding it.
    Traveler,
}

/// Instants at which a pre-period-finding attack can read a register in
/// the inverse Fourier basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrePeriodInstant {
    /// The phase register, before any oracle (first party only).
    Start,
    /// The traveling register, right after the attacker's own oracle.
    OwnTurn,
    /// The traveling register, back home after every oracle but before
    /// the uncompute (first party only).
    FinalReturn,
}

fn checked_width(inputs: &[u64], m: u32, attacker: usize) -> Result<u32, AdversaryError> {
    validate_inputs(inputs, m, true)?;
    if attacker >= inputs.len() {
        return Err(AdversaryError::BadAttacker {
            attacker,
            parties: inputs.len(),
        });
    }
    let u = 2 * inputs.len() as u32 * m + 1;
    if u > LCM_GUARD_BITS {
        return Err(ProtocolError::GuardTripped {
            control_bits: u,
            limit: LCM_GUARD_BITS,
        }
        .into());
    }
    Ok(u)
}

/// One observed period-finding pass over the inputs.
fn run_observed_pass(
    inputs: &[u64],
    m: u32,
    u: u32,
    seed: u64,
    extra_specs: Vec<RegisterSpec>,
    observe: &mut dyn FnMut(PassInstant, &mut SparseState) -> Result<(), EngineError>,
) -> Result<(), AdversaryError> {
    let mut tr = Transcript::new("attack");
    let mut rng = measurement_rng(seed);
    let mut phase_law = None;
    qpa_round(
        inputs, m, u, 1, extra_specs, &mut tr, &mut rng, &mut phase_law, observe,
    )?;
    Ok(())
}

/// The exact law of the attacker's residue register mid-pass: residue
/// `y` of modulus `x` has exactly `ceil((2^u - y) / x)` preimages among
/// the `2^u` superposed arguments.
fn residue_reference(x: u64, m: u32, u: u32) -> Vec<f64> {
    let domain = 1u64 << u;
    let mut law = vec![0.0; 1usize << m];
    for (y, slot) in law.iter_mut().enumerate().take(x as usize) {
        let count = (domain - y as u64).div_ceil(x);
        *slot = count as f64 / domain as f64;
    }
    law
}

/// Simulates a direct measurement by `attacker` and reports the outcome
/// law next to the predicted one: the truncated-preimage residue law for
/// its own register, the flat law over all `2^u` arguments for the
/// traveler. Either way the attacker learns nothing about the other
/// parties' inputs.
pub fn attack_direct(
    inputs: &[u64],
    m: u32,
    attacker: usize,
    mode: DirectAttack,
    seed: u64,
) -> Result<AttackReport, AdversaryError> {
    let u = checked_width(inputs, m, attacker)?;
    let e_name = format!("e{attacker}");
    let mut observed: Option<MeasurementDistribution> = None;
    run_observed_pass(inputs, m, u, seed, Vec::new(), &mut |instant, state| {
        let grab = match (mode, instant) {
            (DirectAttack::ResidueBefore, PassInstant::TravelerAt { party })
                if party == attacker =>
            {
                Some(e_name.as_str())
            }
            (DirectAttack::Traveler, PassInstant::TravelerAt { party })
                if party == attacker =>
            {
                Some("t")
            }
            (DirectAttack::ResidueAfter, PassInstant::Measured { .. }) => Some(e_name.as_str()),
            _ => None,
        };
        if let Some(reg) = grab {
            observed = Some(state.distribution_of(reg, Basis::Computational)?);
        }
        Ok(())
    })?;
    let observed = observed.expect("an honest pass reaches every instant");

    let (detail, reference) = match mode {
        DirectAttack::ResidueBefore => (
            "own residue register during the ring pass",
            residue_reference(inputs[attacker], m, u),
        ),
        DirectAttack::ResidueAfter => (
            "own residue register after the phase readout",
            residue_reference(inputs[attacker], m, u),
        ),
        DirectAttack::Traveler => (
            "traveling register during the ring pass",
            vec![1.0 / (1u64 << u) as f64; 1usize << u],
        ),
    };
    Ok(AttackReport::new(
        "direct", attacker, detail, None, observed, reference,
    ))
}

/// Simulates an attack on the phase or traveling register before the
/// period finding completes, in the inverse Fourier basis. The observed
/// law is exactly flat — the attacker sees pure noise.
pub fn attack_pre_period(
    inputs: &[u64],
    m: u32,
    attacker: usize,
    instant: PrePeriodInstant,
    seed: u64,
) -> Result<AttackReport, AdversaryError> {
    let u = checked_width(inputs, m, attacker)?;
    if attacker != 0
        && matches!(
            instant,
            PrePeriodInstant::Start | PrePeriodInstant::FinalReturn
        )
    {
        return Err(AdversaryError::WrongPhase {
            attacker,
            needed: "only the first party holds a register at this instant",
        });
    }
    let mut observed: Option<MeasurementDistribution> = None;
    run_observed_pass(inputs, m, u, seed, Vec::new(), &mut |at, state| {
        let grab = match (instant, at) {
            (PrePeriodInstant::Start, PassInstant::Start) => Some("h"),
            (PrePeriodInstant::OwnTurn, PassInstant::TravelerAt { party })
                if party == attacker =>
            {
                Some("t")
            }
            (PrePeriodInstant::FinalReturn, PassInstant::Returned) => Some("t"),
            _ => None,
        };
        if let Some(reg) = grab {
            observed = Some(state.distribution_of(reg, Basis::FourierInverse)?);
        }
        Ok(())
    })?;
    let observed = observed.expect("an honest pass reaches every instant");

    let detail = match instant {
        PrePeriodInstant::Start => "phase register before any oracle",
        PrePeriodInstant::OwnTurn => "traveling register after the own oracle",
        PrePeriodInstant::FinalReturn => "traveling register before the uncompute",
    };
    let reference = vec![1.0 / (1u64 << u) as f64; 1usize << u];
    Ok(AttackReport::new(
        "pre_period",
        attacker,
        detail,
        None,
        observed,
        reference,
    ))
}

/// Simulates the copy-and-wait attack: the attacker clones the traveling
/// register (in the computational basis) during its turn, lets the
/// protocol finish its phase readout `k`, and then measures the copy in
/// the Fourier basis. The copy's law has exactly one peak per period
/// residue — `T` points spaced `2^u / T`, offset by `k` — so the
/// attacker learns nothing beyond the period itself.
pub fn attack_post_period(
    inputs: &[u64],
    m: u32,
    attacker: usize,
    seed: u64,
) -> Result<AttackReport, AdversaryError> {
    let u = checked_width(inputs, m, attacker)?;
    let extra = vec![RegisterSpec::new("spy", u, attacker, 0)];
    let mut observed: Option<MeasurementDistribution> = None;
    let mut outcome: Option<u64> = None;
    run_observed_pass(inputs, m, u, seed, extra, &mut |at, state| {
        match at {
            PassInstant::TravelerAt { party } if party == attacker => {
                state.apply_cnot_copy("t", "spy")?;
            }
            PassInstant::Measured { phi } => {
                outcome = Some(phi);
                observed = Some(state.distribution_of("spy", Basis::Fourier)?);
            }
            _ => {}
        }
        Ok(())
    })?;
    let observed = observed.expect("an honest pass reaches every instant");
    let k = outcome.expect("an honest pass reaches every instant");

    // Idealized reference: mass 1/T at the T evenly spaced points offset
    // by k, rounded to the grid when T does not divide 2^u.
    let period = lcm_many(inputs)?;
    let domain = 1u64 << u;
    let mut reference = vec![0.0; domain as usize];
    for r in 0..period {
        let ideal = (r as f64) * (domain as f64) / (period as f64);
        let idx = (k + ideal.round() as u64) % domain;
        reference[idx as usize] += 1.0 / period as f64;
    }
    Ok(AttackReport::new(
        "post_period",
        attacker,
        "fourier readout of the copied traveler",
        Some(k),
        observed,
        reference,
    ))
}

/// What the announcer learns from the masked vote sum `z` read out of an
/// `m_vote`-bit register when no-voters masked with values in
/// `[1, vote_mask]`: the two-adic valuation `m1` of `z`, whether it
/// exceeds the mask range (the leak condition), and the implied bounds
/// on the number of no-voters among the `n` parties.
pub fn leakage_probe(
    z: u64,
    m_vote: u32,
    vote_mask: u64,
    n: usize,
) -> Result<LeakageReport, AdversaryError> {
    if m_vote == 0 || m_vote > 63 || z >> m_vote != 0 {
        return Err(AdversaryError::ZOutOfRange { z, m_vote });
    }
    if vote_mask < 2 {
        return Err(ProtocolError::MaskTooSmall(vote_mask).into());
    }
    if n == 0 {
        return Err(ProtocolError::TooFewParties { needed: 1, got: 0 }.into());
    }
    if z == 0 {
        return Ok(LeakageReport {
            z,
            vote_passed: true,
            m1: 0,
            leak_flag: false,
            lambda_bounds: (0, 0),
        });
    }
    let m1 = z.trailing_zeros();
    let power = 1u64 << m1;
    let low = power.div_ceil(vote_mask).clamp(1, n as u64);
    Ok(LeakageReport {
        z,
        vote_passed: false,
        m1,
        leak_flag: power > vote_mask,
        lambda_bounds: (low, n as u64),
    })
}

/// Monte Carlo estimate of how often a vote with `lambda` no-voters
/// (out of `n`, masks drawn from `[1, vote_mask]`) produces a leaking
/// `z`. The probability stays below `1 / vote_mask`.
pub fn estimate_leak_probability(
    n: usize,
    vote_mask: u64,
    lambda: u64,
    trials: u32,
    seed: u64,
) -> Result<f64, AdversaryError> {
    if n < 2 {
        return Err(ProtocolError::TooFewParties { needed: 2, got: n }.into());
    }
    if vote_mask < 2 {
        return Err(ProtocolError::MaskTooSmall(vote_mask).into());
    }
    if lambda < 1 || lambda > n as u64 {
        return Err(AdversaryError::BadLambda { lambda, n });
    }
    if trials == 0 {
        return Err(AdversaryError::NoTrials);
    }
    let m_vote = vote_mask_bits(n, vote_mask);
    let mut leaks = 0u64;
    for t in 0..trials {
        let mut rng = rng_from_seed(trial_seed(seed, u64::from(t)));
        let sum: u64 = (0..lambda).map(|_| rng.gen_range(1..=vote_mask)).sum();
        let q = rng.gen_range(0..(1u64 << m_vote)) | 1;
        let z = ((u128::from(q) * u128::from(sum)) % (1u128 << m_vote)) as u64;
        let report = leakage_probe(z, m_vote, vote_mask, n)?;
        debug_assert!(
            report.lambda_bounds.0 <= lambda && lambda <= report.lambda_bounds.1,
            "the implied bounds must contain the true count"
        );
        if report.leak_flag {
            leaks += 1;
        }
    }
    Ok(leaks as f64 / f64::from(trials))
}

/// Diagnostic probe with every mask forced to 1, so the masked sum is
/// exactly `q * lambda`: the leak condition then depends only on the
/// two-adic valuation of `lambda` itself.
pub fn probe_with_unit_masks(
    n: usize,
    vote_mask: u64,
    lambda: u64,
    seed: u64,
) -> Result<LeakageReport, AdversaryError> {
    if n < 2 {
        return Err(ProtocolError::TooFewParties { needed: 2, got: n }.into());
    }
    if vote_mask < 2 {
        return Err(ProtocolError::MaskTooSmall(vote_mask).into());
    }
    if lambda < 1 || lambda > n as u64 {
        return Err(AdversaryError::BadLambda { lambda, n });
    }
    let m_vote = vote_mask_bits(n, vote_mask);
    let mut rng = rng_from_seed(derive_seed(seed, 0x4449_4147));
    let q = rng.gen_range(0..(1u64 << m_vote)) | 1;
    let z = ((u128::from(q) * u128::from(lambda)) % (1u128 << m_vote)) as u64;
    leakage_probe(z, m_vote, vote_mask, n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn direct_residue_law_is_the_truncated_preimage_count() {
        // x = 5 does not divide 2^13, so the counts are uneven.
        let report = attack_direct(&[3, 5], 3, 1, DirectAttack::ResidueBefore, 0).unwrap();
        assert_eq!(report.kind, "direct");
        assert_eq!(report.attacker, 1);
        let domain = (1u64 << 13) as f64;
        for y in 0..5u64 {
            let count = ((1u64 << 13) - y).div_ceil(5);
            let got = report.observed.probabilities[y as usize];
            assert!(
                (got - count as f64 / domain).abs() < 1e-12,
                "residue {y}: {got}"
            );
        }
        assert!(report.max_deviation < 1e-12);
        assert!(report.tv_distance < 1e-12);
    }

    #[test]
    fn direct_residue_is_flat_for_a_power_of_two_modulus() {
        let report = attack_direct(&[3, 4], 3, 1, DirectAttack::ResidueBefore, 0).unwrap();
        for y in 0..4 {
            assert!((report.observed.probabilities[y] - 0.25).abs() < 1e-9);
        }
        assert!(report.max_deviation < 1e-9);
    }

    #[test]
    fn direct_unit_input_gives_a_point_mass() {
        let report = attack_direct(&[2, 1], 2, 1, DirectAttack::ResidueBefore, 0).unwrap();
        assert!((report.observed.probabilities[0] - 1.0).abs() < 1e-12);
        assert!(report.max_deviation < 1e-12);
    }

    #[test]
    fn direct_traveler_reads_uniform_noise() {
        let report = attack_direct(&[2, 3], 2, 1, DirectAttack::Traveler, 0).unwrap();
        assert_eq!(report.observed.probabilities.len(), 512);
        assert!(report.max_deviation < 1e-9, "{}", report.max_deviation);
    }

    #[test]
    fn direct_residue_after_collapse_is_flat_when_the_period_divides() {
        // T = lcm(2, 4) = 4 divides 2^13, so the collapse symmetrizes the
        // residues exactly.
        let report = attack_direct(&[2, 4], 3, 1, DirectAttack::ResidueAfter, 0).unwrap();
        assert!(report.max_deviation < 1e-9, "{}", report.max_deviation);
    }

    #[test]
    fn pre_period_laws_are_exactly_uniform() {
        for (attacker, instant) in [
            (0, PrePeriodInstant::Start),
            (0, PrePeriodInstant::OwnTurn),
            (1, PrePeriodInstant::OwnTurn),
            (0, PrePeriodInstant::FinalReturn),
        ] {
            let report = attack_pre_period(&[2, 3], 2, attacker, instant, 0).unwrap();
            assert_eq!(report.kind, "pre_period");
            assert!(
                report.max_deviation < 1e-9,
                "attacker {attacker}, {instant:?}: {}",
                report.max_deviation
            );
        }
    }

    #[test]
    fn pre_period_instants_belong_to_the_first_party() {
        assert!(matches!(
            attack_pre_period(&[2, 3], 2, 1, PrePeriodInstant::Start, 0),
            Err(AdversaryError::WrongPhase { attacker: 1, .. })
        ));
        assert!(matches!(
            attack_pre_period(&[2, 3], 2, 1, PrePeriodInstant::FinalReturn, 0),
            Err(AdversaryError::WrongPhase { attacker: 1, .. })
        ));
    }

    #[test]
    fn post_period_support_is_t_points_spaced_evenly() {
        // T = 4 divides 2^13: support is exactly {k + r * 2048}.
        let report = attack_post_period(&[2, 4], 3, 1, 0).unwrap();
        let k = report.qpa_outcome.unwrap();
        let mut on_support = 0.0;
        for r in 0..4u64 {
            let idx = ((k + r * 2048) % 8192) as usize;
            let p = report.observed.probabilities[idx];
            assert!((p - 0.25).abs() < 1e-9, "point {idx}: {p}");
            on_support += p;
        }
        assert!((on_support - 1.0).abs() < 1e-9);
        assert!(report.max_deviation < 1e-9);
    }

    #[test]
    fn post_period_trivial_period_is_a_point_mass() {
        // The coherent copy destroys the phase register's interference,
        // so k itself is uniform noise — but the copy's law still has
        // its single peak exactly at k.
        let report = attack_post_period(&[1, 1], 2, 0, 3).unwrap();
        let k = report.qpa_outcome.unwrap();
        assert!((report.observed.probabilities[k as usize] - 1.0).abs() < 1e-9);
        assert!(report.max_deviation < 1e-9);
    }

    #[test]
    fn post_period_rough_case_concentrates_near_the_ideal_points() {
        // T = 6 does not divide 2^9, so the comb smears into Dirichlet
        // tails around the six ideal points.
        let report = attack_post_period(&[2, 3], 2, 1, 1).unwrap();
        let k = report.qpa_outcome.unwrap();
        let domain = 512i64;
        let mass_within = |w: i64| {
            let mut near = 0.0;
            for (idx, p) in report.observed.probabilities.iter().enumerate() {
                let close = (0..6u64).any(|r| {
                    let ideal = (k as f64 + r as f64 * 512.0 / 6.0).round() as i64;
                    let d = (idx as i64 - ideal).rem_euclid(domain);
                    d <= w || d >= domain - w
                });
                if close {
                    near += p;
                }
            }
            near
        };
        // Exact masses (computed, frozen): the rounded points alone hold
        // 0.7893, the +-1 windows 0.9318; the remainder decays like the
        // square of the distance, so +-1 never reaches 0.99.
        let on_points = mass_within(0);
        assert!((on_points - 0.7893).abs() < 5e-4, "{on_points}");
        let near = mass_within(1);
        assert!((near - 0.9318).abs() < 5e-4, "{near}");
        assert!(mass_within(8) > 0.988);
    }

    #[test]
    fn leakage_probe_pins() {
        // z = 24 = 2^3 * 3 with mask 16: 8 <= 16, nothing leaks.
        let r = leakage_probe(24, 7, 16, 4).unwrap();
        assert_eq!(r.m1, 3);
        assert!(!r.leak_flag && !r.vote_passed);
        assert_eq!(r.lambda_bounds, (1, 4));

        // z = 64 = 2^6: 64 > 16 leaks, and at least ceil(64/16) = 4
        // parties voted no.
        let r = leakage_probe(64, 7, 16, 8).unwrap();
        assert_eq!(r.m1, 6);
        assert!(r.leak_flag);
        assert_eq!(r.lambda_bounds, (4, 8));

        // Odd z carries no information.
        let r = leakage_probe(77, 7, 16, 4).unwrap();
        assert_eq!(r.m1, 0);
        assert!(!r.leak_flag);
        assert_eq!(r.lambda_bounds, (1, 4));

        // z = 0: the vote passed.
        let r = leakage_probe(0, 7, 16, 4).unwrap();
        assert!(r.vote_passed && !r.leak_flag);
        assert_eq!(r.lambda_bounds, (0, 0));

        assert!(matches!(
            leakage_probe(200, 7, 16, 4),
            Err(AdversaryError::ZOutOfRange { z: 200, m_vote: 7 })
        ));
    }

    #[test]
    fn leak_probability_stays_under_the_mask_bound() {
        // Paper bound: P(leak) < 1 / vote_mask. Allow 3 sigma of Monte
        // Carlo noise on top.
        for &(n, mask, lambda, seed) in &[(8usize, 16u64, 3u64, 1u64), (4, 4, 1, 2)] {
            let trials = 10_000;
            let p = estimate_leak_probability(n, mask, lambda, trials, seed).unwrap();
            let bound = 1.0 / mask as f64;
            let sigma = (bound * (1.0 - bound) / f64::from(trials)).sqrt();
            assert!(
                p < bound + 3.0 * sigma,
                "n={n} mask={mask} lambda={lambda}: {p} vs {bound}"
            );
        }
    }

    #[test]
    fn unit_mask_diagnostic_depends_only_on_lambda() {
        // The masked sum is q * lambda, so the valuation is lambda's own.
        let r = probe_with_unit_masks(8, 2, 4, 0).unwrap();
        assert!(r.leak_flag, "2^2 = 4 > 2");
        let r = probe_with_unit_masks(8, 16, 4, 0).unwrap();
        assert!(!r.leak_flag, "4 <= 16");
        let r = probe_with_unit_masks(8, 2, 3, 0).unwrap();
        assert!(!r.leak_flag, "odd lambda has valuation 0");
        let r = probe_with_unit_masks(8, 4, 8, 0).unwrap();
        assert!(r.leak_flag, "2^3 = 8 > 4");
    }

    #[test]
    fn bad_parameters_are_rejected() {
        assert!(matches!(
            attack_direct(&[2, 3], 2, 5, DirectAttack::Traveler, 0),
            Err(AdversaryError::BadAttacker {
                attacker: 5,
                parties: 2
            })
        ));
        assert!(matches!(
            attack_direct(&[2, 3, 5], 3, 0, DirectAttack::Traveler, 0),
            Err(AdversaryError::Protocol(ProtocolError::GuardTripped { .. }))
        ));
        assert!(matches!(
            estimate_leak_probability(4, 8, 0, 10, 0),
            Err(AdversaryError::BadLambda { lambda: 0, n: 4 })
        ));
        assert!(matches!(
            estimate_leak_probability(4, 8, 5, 10, 0),
            Err(AdversaryError::BadLambda { lambda: 5, n: 4 })
        ));
        assert!(matches!(
            estimate_leak_probability(4, 8, 1, 0, 0),
            Err(AdversaryError::NoTrials)
        ));
    }

    #[test]
    fn reports_serialize_with_snake_case_fields() {
        let report = attack_pre_period(&[2, 3], 2, 0, PrePeriodInstant::Start, 0).unwrap();
        let json = serde_json::to_value(&report).unwrap();
        for key in [
            "kind",
            "attacker",
            "detail",
            "qpa_outcome",
            "observed",
            "reference",
            "max_deviation",
            "tv_distance",
        ] {
            assert!(json.get(key).is_some(), "missing {key}");
        }
        let leak = serde_json::to_value(leakage_probe(24, 7, 16, 4).unwrap()).unwrap();
        for key in ["z", "vote_passed", "m1", "leak_flag", "lambda_bounds"] {
            assert!(leak.get(key).is_some(), "missing {key}");
        }
    }
}
