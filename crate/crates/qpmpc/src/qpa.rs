//! Quantum period finding with continued-fraction post-processing.
//!
//! One round prepares a control register in uniform superposition, writes
//! `f(control)` into a target register through the reversible oracle,
//! reads the control register in the inverse Fourier basis, and feeds the
//! outcome to [`cf_recover`]. The recovered denominator is accepted as the
//! period when `f(candidate) = f(0)`; rounds repeat up to a cap.
//!
//! Every round rebuilds the identical circuit on fresh registers, so the
//! rounds are independent draws from one outcome law. [`run_qpa`]
//! therefore tabulates the law once through the engine and samples it per
//! round, which is observationally the same process.

use serde::Serialize;
use thiserror::Error;

use crate::numtheory::{cf_recover, NumTheoryError};
use crate::qsim::{Basis, EngineError, RegisterLayout, RegisterSpec, SparseState};
use crate::seeds::rng_from_seed;

/// Default cap on rounds per run. Expected rounds grow like the inverse
/// coprimality density, a handful even for wide periods, so exhausting
/// this cap signals a function that breaks the collision precondition.
pub const DEFAULT_MAX_ROUNDS: u32 = 64;

/// Control register width guaranteeing unambiguous recovery: `2v + 1`
/// bits, so the control space squares the value space (times two).
pub fn choose_u(value_bits: u32) -> u32 {
    2 * value_bits + 1
}

/// Parameters of one period-finding run.
#[derive(Debug, Clone, Serialize)]
pub struct QpaConfig {
    /// Width of the function's output register; the period must fit here.
    pub value_bits: u32,
    /// Width of the control register that indexes function arguments.
    pub control_bits: u32,
    /// Hard cap on measurement rounds before giving up.
    pub max_rounds: u32,
    /// Seed for the round outcome draws.
    pub seed: u64,
}

impl QpaConfig {
    /// Config with the canonical control width [`choose_u`] and the
    /// default round cap.
    pub fn for_value_bits(value_bits: u32, seed: u64) -> Self {
        Self {
            value_bits,
            control_bits: choose_u(value_bits),
            max_rounds: DEFAULT_MAX_ROUNDS,
            seed,
        }
    }

    /// Checks the width and round-cap invariants.
    pub fn validate(&self) -> Result<(), QpaError> {
        if self.value_bits == 0 {
            return Err(QpaError::ZeroValueBits);
        }
        let need = choose_u(self.value_bits);
        if self.control_bits < need {
            return Err(QpaError::ControlTooNarrow {
                value_bits: self.value_bits,
                control_bits: self.control_bits,
                need,
            });
        }
        if self.max_rounds == 0 {
            return Err(QpaError::NoRounds);
        }
        Ok(())
    }
}

/// Outcome of a successful period-finding run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QpaResult {
    /// The verified period: `f(period) = f(0)`.
    pub period: u64,
    /// Rounds consumed, including the accepting one.
    pub rounds_used: u32,
    /// Every measured control outcome, in round order.
    pub phi_samples: Vec<u64>,
}

#[derive(Debug, Error)]
pub enum QpaError {
    #[error("value width must be at least 1 bit")]
    ZeroValueBits,
    #[error(
        "control register needs at least {need} bits for {value_bits} value bits, got {control_bits}"
    )]
    ControlTooNarrow {
        value_bits: u32,
        control_bits: u32,
        need: u32,
    },
    #[error("max_rounds must be at least 1")]
    NoRounds,
    #[error("period {period} does not fit below 2^{value_bits}")]
    PeriodOutOfRange { period: u64, value_bits: u32 },
    #[error("trials must be at least 1")]
    NoTrials,
    #[error("no candidate verified within {rounds} rounds (best unverified candidate: {best:?})")]
    RoundsExhausted {
        rounds: u32,
        best: Option<u64>,
        phi_samples: Vec<u64>,
    },
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Arith(#[from] NumTheoryError),
}

/// Builds the post-oracle state and returns the inverse-Fourier outcome
/// law of the control register.
fn control_law(
    f: &impl Fn(u64) -> u64,
    control_bits: u32,
    value_bits: u32,
) -> Result<crate::qsim::MeasurementDistribution, QpaError> {
    let layout = RegisterLayout::new(vec![
        RegisterSpec::new("control", control_bits, 0, 0),
        RegisterSpec::new("target", value_bits, 0, 0),
    ])?;
    let mut state = SparseState::new(layout)?;
    state.apply_hadamard_uniform("control")?;
    state.apply_oracle("control", "target", f)?;
    Ok(state.distribution_of("control", Basis::FourierInverse)?)
}

/// Finds the period of `f` by repeated quantum rounds.
///
/// `f` must satisfy the collision property `f(j) = f(j')` only when
/// `j = j' (mod T)` for its period `T < 2^value_bits`; that property is
/// what makes the `f(candidate) = f(0)` check reject proper divisors. A
/// candidate of 1 from outcome 0 is a legitimate guess (correct exactly
/// for constant `f`) and gets no special casing; verification filters it.
///
/// # Errors
///
/// [`QpaError::RoundsExhausted`] carries the largest unverified candidate
/// after `max_rounds` failures, which with the default cap indicates `f`
/// violates the precondition.
pub fn run_qpa(f: impl Fn(u64) -> u64, config: &QpaConfig) -> Result<QpaResult, QpaError> {
    config.validate()?;
    let law = control_law(&f, config.control_bits, config.value_bits)?;
    let sampler = law.sampler();
    let mut rng = rng_from_seed(config.seed);
    let f0 = f(0);
    let mut phi_samples = Vec::new();
    let mut best: Option<u64> = None;
    for round in 1..=config.max_rounds {
        let phi = sampler.draw(&mut rng);
        phi_samples.push(phi);
        let frac = cf_recover(phi, 1u64 << config.control_bits, 1u64 << config.value_bits)?;
        let candidate = frac.denominator;
        if f(candidate) == f0 {
            return Ok(QpaResult {
                period: candidate,
                rounds_used: round,
                phi_samples,
            });
        }
        best = Some(best.map_or(candidate, |b| b.max(candidate)));
    }
    Err(QpaError::RoundsExhausted {
        rounds: config.max_rounds,
        best,
        phi_samples,
    })
}

/// Empirical chance that a single round recovers `period` exactly, over
/// `trials` independent draws for the function `j mod period`.
///
/// The recovered denominator equals the period precisely when the
/// measured outcome lands by a peak whose index is coprime to the period,
/// so for wide enough registers this estimates the coprimality density
/// `phi_euler(period) / period`.
pub fn single_round_success_rate(
    period: u64,
    value_bits: u32,
    trials: u32,
    seed: u64,
) -> Result<f64, QpaError> {
    if value_bits == 0 {
        return Err(QpaError::ZeroValueBits);
    }
    if period == 0 || (value_bits < 64 && period >= 1u64 << value_bits) {
        return Err(QpaError::PeriodOutOfRange { period, value_bits });
    }
    if trials == 0 {
        return Err(QpaError::NoTrials);
    }
    let control_bits = choose_u(value_bits);
    let law = control_law(&|j| j % period, control_bits, value_bits)?;
    let sampler = law.sampler();
    let mut rng = rng_from_seed(seed);
    let mut hits = 0u64;
    for _ in 0..trials {
        let phi = sampler.draw(&mut rng);
        let frac = cf_recover(phi, 1u64 << control_bits, 1u64 << value_bits)?;
        if frac.denominator == period {
            hits += 1;
        }
    }
    Ok(hits as f64 / trials as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numtheory::brute_force_period;

    #[test]
    fn control_width_rule_is_pinned() {
        assert_eq!(choose_u(3), 7);
        assert_eq!(choose_u(1), 3);
        assert_eq!(choose_u(6), 13);
    }

    #[test]
    fn config_invariants_are_enforced() {
        assert!(matches!(
            QpaConfig { value_bits: 0, control_bits: 1, max_rounds: 1, seed: 0 }.validate(),
            Err(QpaError::ZeroValueBits)
        ));
        assert!(matches!(
            QpaConfig { value_bits: 3, control_bits: 6, max_rounds: 1, seed: 0 }.validate(),
            Err(QpaError::ControlTooNarrow { need: 7, .. })
        ));
        assert!(matches!(
            QpaConfig { value_bits: 3, control_bits: 7, max_rounds: 0, seed: 0 }.validate(),
            Err(QpaError::NoRounds)
        ));
        assert!(QpaConfig::for_value_bits(3, 0).validate().is_ok());
    }

    #[test]
    fn constant_function_accepts_period_one_immediately() {
        let result = run_qpa(|_| 0, &QpaConfig::for_value_bits(2, 9)).unwrap();
        assert_eq!(result.period, 1);
        assert_eq!(result.rounds_used, 1);
        assert_eq!(result.phi_samples, vec![0]);
    }

    #[test]
    fn recovers_a_period_that_does_not_divide_the_control_space() {
        for seed in 0..10 {
            let result = run_qpa(|j| j % 3, &QpaConfig::for_value_bits(2, seed)).unwrap();
            assert_eq!(result.period, 3, "seed {seed}");
        }
    }

    #[test]
    fn power_of_two_period_peaks_are_exact() {
        // 4 divides the 2^7 control space, so outcomes sit exactly on the
        // four peak multiples of 32.
        for seed in 0..10 {
            let result = run_qpa(|j| j % 4, &QpaConfig::for_value_bits(3, seed)).unwrap();
            assert_eq!(result.period, 4, "seed {seed}");
            for &phi in &result.phi_samples {
                assert_eq!(phi % 32, 0, "seed {seed}, phi {phi}");
            }
        }
    }

    #[test]
    fn dividing_periods_have_flat_peak_laws() {
        for t in [1u64, 2, 4, 8] {
            let law = control_law(&|j| j % t, 9, 4).unwrap();
            let spacing = 512 / t;
            for k in 0..512u64 {
                let p = law.prob(k);
                if k % spacing == 0 {
                    assert!((p - 1.0 / t as f64).abs() < 1e-9, "t = {t}, k = {k}");
                } else {
                    assert!(p < 1e-9, "t = {t}, k = {k}");
                }
            }
        }
    }

    #[test]
    fn agrees_with_the_classical_scan_for_every_small_period() {
        for t in 1..=15u64 {
            let f = move |j: u64| j % t;
            let scan = brute_force_period(f, 16).unwrap();
            let result = run_qpa(f, &QpaConfig::for_value_bits(4, 1000 + t)).unwrap();
            assert_eq!(result.period, scan.period, "t = {t}");
            assert!(scan.verified);
        }
    }

    #[test]
    fn runs_are_reproducible_by_seed() {
        let a = run_qpa(|j| j % 5, &QpaConfig::for_value_bits(3, 77)).unwrap();
        let b = run_qpa(|j| j % 5, &QpaConfig::for_value_bits(3, 77)).unwrap();
        assert_eq!(a, b);
        let c = run_qpa(|j| j % 5, &QpaConfig::for_value_bits(3, 78)).unwrap();
        assert_eq!(c.period, 5);
    }

    #[test]
    fn collision_breaking_functions_exhaust_rounds() {
        // f(0) = 3 occurs nowhere else, so no candidate can ever verify.
        let f = |j: u64| if j == 0 { 3 } else { j & 1 };
        let config = QpaConfig {
            max_rounds: 4,
            ..QpaConfig::for_value_bits(2, 5)
        };
        match run_qpa(f, &config) {
            Err(QpaError::RoundsExhausted {
                rounds,
                phi_samples,
                ..
            }) => {
                assert_eq!(rounds, 4);
                assert_eq!(phi_samples.len(), 4);
            }
            other => panic!("expected exhaustion, got {other:?}"),
        }
    }

    #[test]
    fn success_rate_matches_the_coprimality_density() {
        assert_eq!(single_round_success_rate(1, 2, 100, 0).unwrap(), 1.0);
        // Half the outcomes for period 2 recover denominator 2 exactly.
        let rate = single_round_success_rate(2, 3, 4000, 1).unwrap();
        assert!((rate - 0.5).abs() < 0.04, "rate {rate}");
        assert!(matches!(
            single_round_success_rate(16, 4, 10, 0),
            Err(QpaError::PeriodOutOfRange { .. })
        ));
        assert!(matches!(
            single_round_success_rate(3, 2, 0, 0),
            Err(QpaError::NoTrials)
        ));
    }
}
