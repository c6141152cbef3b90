//! Integer routines backing period recovery: gcd/lcm, inverses modulo a
//! power of two, continued-fraction recovery of a rational from a phase
//! estimate, and a brute-force period scan used as ground truth in tests.

use rand::Rng;
use thiserror::Error;

/// Errors for the integer helpers in this module.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NumTheoryError {
    /// gcd(0, 0) has no meaningful value.
    #[error("gcd(0, 0) is undefined")]
    GcdBothZero,
    /// lcm over an empty slice has no meaningful value.
    #[error("lcm of an empty input is undefined")]
    LcmEmpty,
    /// lcm with a zero operand has no meaningful value here.
    #[error("lcm with a zero operand is undefined")]
    LcmZero,
    /// The running lcm left the u64 range.
    #[error("lcm does not fit in 64 bits")]
    LcmOverflow,
    /// Inverses modulo 2^m exist only for odd operands.
    #[error("{0} is even and has no inverse modulo a power of two")]
    EvenOperand(u64),
    /// The modulus must be a power of two (and at least 2).
    #[error("modulus {0} is not a power of two >= 2")]
    BadModulus(u64),
    /// Euler's totient needs n >= 1.
    #[error("euler_phi(0) is undefined")]
    PhiZero,
    /// cf_recover arguments out of range.
    #[error("invalid continued-fraction query: phi={phi}, denom={denom}, bound={bound}")]
    BadFractionQuery { phi: u64, denom: u64, bound: u64 },
    /// No period strictly smaller than the domain size exists.
    #[error("no period shorter than the domain was found")]
    NoPeriod,
}

/// Greatest common divisor. Errors when both arguments are zero.
pub fn gcd(a: u64, b: u64) -> Result<u64, NumTheoryError> {
    if a == 0 && b == 0 {
        return Err(NumTheoryError::GcdBothZero);
    }
    Ok(gcd_raw(a, b))
}

/// Euclid's algorithm with gcd(x, 0) = x; callers guarantee not both zero.
fn gcd_raw(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a
}

/// Least common multiple of a nonempty slice of nonzero integers.
///
/// The result is exact; intermediate products are checked so silent
/// wraparound cannot produce a bogus lcm.
pub fn lcm_many(xs: &[u64]) -> Result<u64, NumTheoryError> {
    if xs.is_empty() {
        return Err(NumTheoryError::LcmEmpty);
    }
    let mut acc: u64 = 1;
    for &x in xs {
        if x == 0 {
            return Err(NumTheoryError::LcmZero);
        }
        let g = gcd_raw(acc, x);
        acc = (acc / g)
            .checked_mul(x)
            .ok_or(NumTheoryError::LcmOverflow)?;
    }
    Ok(acc)
}

/// Euler's totient: the count of integers in [1, n] coprime to n.
pub fn euler_phi(n: u64) -> Result<u64, NumTheoryError> {
    if n == 0 {
        return Err(NumTheoryError::PhiZero);
    }
    let mut remaining = n;
    let mut phi = n;
    let mut p = 2;
    while p * p <= remaining {
        if remaining % p == 0 {
            while remaining % p == 0 {
                remaining /= p;
            }
            phi -= phi / p;
        }
        p += 1;
    }
    if remaining > 1 {
        phi -= phi / remaining;
    }
    Ok(phi)
}

/// Multiplicative inverse of an odd `q` modulo a power of two.
///
/// Odd residues form a group modulo 2^m, so the inverse always exists;
/// even operands are rejected.
///
/// # Examples
///
/// ```
/// use qpmpc::numtheory::mod_inverse;
/// assert_eq!(mod_inverse(3, 16).unwrap(), 11);
/// assert_eq!(mod_inverse(5, 8).unwrap(), 5);
/// ```
pub fn mod_inverse(q: u64, modulus: u64) -> Result<u64, NumTheoryError> {
    if modulus < 2 || !modulus.is_power_of_two() {
        return Err(NumTheoryError::BadModulus(modulus));
    }
    if q % 2 == 0 {
        return Err(NumTheoryError::EvenOperand(q));
    }
    // Newton-Hensel lifting: x <- x * (2 - q * x) doubles the number of
    // correct low bits each step; five steps cover 64 bits.
    let q = q & (modulus - 1);
    let mut x: u64 = q; // correct to 3 bits for odd q
    for _ in 0..5 {
        x = x.wrapping_mul(2u64.wrapping_sub(q.wrapping_mul(x)));
    }
    Ok(x & (modulus - 1))
}

/// A reduced nonnegative fraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fraction {
    pub numerator: u64,
    pub denominator: u64,
}

impl std::fmt::Display for Fraction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}", self.numerator, self.denominator)
    }
}

/// Recovers a rational approximation of `phi / denom` by continued
/// fractions: the last convergent whose denominator is strictly below
/// `denom_bound`.
///
/// A phase estimate phi measured from a 2^u-point transform sits within
/// 1/2^(u+1) of some l/T; when u >= 2v+1 and T < 2^v the convergent
/// returned here is exactly l/T in lowest terms. `phi = 0` recovers 0/1.
///
/// # Examples
///
/// ```
/// use qpmpc::numtheory::cf_recover;
/// let f = cf_recover(1365, 2048, 8).unwrap();
/// assert_eq!((f.numerator, f.denominator), (2, 3));
/// ```
pub fn cf_recover(phi: u64, denom: u64, denom_bound: u64) -> Result<Fraction, NumTheoryError> {
    if denom == 0 || phi >= denom || denom_bound < 2 {
        return Err(NumTheoryError::BadFractionQuery {
            phi,
            denom,
            bound: denom_bound,
        });
    }
    // Convergent recurrences h_k = a_k h_{k-1} + h_{k-2} (same for k_k),
    // seeded so the k = 0 convergent is a_0 / 1.
    let (mut h_prev, mut h) = (0u64, 1u64);
    let (mut k_prev, mut k) = (1u64, 0u64);
    let mut best = Fraction {
        numerator: 0,
        denominator: 1,
    };
    let (mut num, mut den) = (phi, denom);
    loop {
        let a = num / den;
        let h_next = a * h + h_prev;
        let k_next = a * k + k_prev;
        h_prev = h;
        h = h_next;
        k_prev = k;
        k = k_next;
        if k < denom_bound {
            best = Fraction {
                numerator: h,
                denominator: k,
            };
        } else {
            break;
        }
        let rem = num % den;
        if rem == 0 {
            break;
        }
        num = den;
        den = rem;
    }
    Ok(best)
}

/// Result of the exhaustive period scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PeriodScan {
    /// Smallest T >= 1 with f(j) = f(j mod T) across the whole domain.
    pub period: u64,
    /// Whether f(period) = f(0); the acceptance test period finding uses.
    pub verified: bool,
}

/// Finds the period of `f` over the domain [0, 2^domain_bits) by direct
/// scan. Serves as the ground-truth oracle for the quantum period finder.
///
/// Errors when no T strictly smaller than the domain satisfies the
/// periodicity condition (for example when `f` is injective).
pub fn brute_force_period(
    f: impl Fn(u64) -> u64,
    domain_bits: u32,
) -> Result<PeriodScan, NumTheoryError> {
    assert!(
        domain_bits >= 1 && domain_bits <= 30,
        "domain_bits must be in [1, 30], got {domain_bits}"
    );
    let size = 1u64 << domain_bits;
    'candidates: for t in 1..size {
        for j in t..size {
            if f(j) != f(j % t) {
                continue 'candidates;
            }
        }
        return Ok(PeriodScan {
            period: t,
            verified: f(t) == f(0),
        });
    }
    Err(NumTheoryError::NoPeriod)
}

/// Draws an odd integer uniformly from [1, 2^bits).
///
/// # Panics
///
/// Panics when `bits` is 0 or exceeds 63.
pub fn random_odd(bits: u32, rng: &mut impl Rng) -> u64 {
    assert!(bits >= 1 && bits <= 63, "bits must be in [1, 63], got {bits}");
    2 * rng.gen_range(0..1u64 << (bits - 1)) + 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn gcd_matches_pinned_cases() {
        assert_eq!(gcd(12, 18).unwrap(), 6);
        assert_eq!(gcd(1, 97).unwrap(), 1);
        assert_eq!(gcd(0, 5).unwrap(), 5);
        assert_eq!(gcd(5, 0).unwrap(), 5);
        assert_eq!(gcd(0, 0), Err(NumTheoryError::GcdBothZero));
    }

    #[test]
    fn lcm_many_matches_pinned_cases() {
        assert_eq!(lcm_many(&[4, 6]).unwrap(), 12);
        assert_eq!(lcm_many(&[1]).unwrap(), 1);
        assert_eq!(lcm_many(&[3, 5, 7]).unwrap(), 105);
        assert_eq!(lcm_many(&[]), Err(NumTheoryError::LcmEmpty));
        assert_eq!(lcm_many(&[4, 0]), Err(NumTheoryError::LcmZero));
    }

    #[test]
    fn lcm_order_and_duplicates_do_not_matter() {
        let xs = [6u64, 10, 15, 6];
        let mut perm = xs;
        perm.reverse();
        assert_eq!(lcm_many(&xs).unwrap(), lcm_many(&perm).unwrap());
        assert_eq!(lcm_many(&[6, 10, 15]).unwrap(), lcm_many(&xs).unwrap());
    }

    #[test]
    fn lcm_overflow_is_reported() {
        assert_eq!(
            lcm_many(&[u64::MAX, u64::MAX - 1]),
            Err(NumTheoryError::LcmOverflow)
        );
    }

    #[test]
    fn euler_phi_small_values() {
        // 1, 1, 2, 2, 4, 2, 6, 4, 6, 4 for n = 1..=10.
        let expect = [1u64, 1, 2, 2, 4, 2, 6, 4, 6, 4];
        for (i, &e) in expect.iter().enumerate() {
            assert_eq!(euler_phi(i as u64 + 1).unwrap(), e);
        }
        assert_eq!(euler_phi(0), Err(NumTheoryError::PhiZero));
    }

    /// Independent oracle: find the inverse by scanning all residues.
    fn scan_inverse(q: u64, modulus: u64) -> Option<u64> {
        (0..modulus).find(|&x| (q * x) % modulus == 1)
    }

    #[test]
    fn mod_inverse_matches_exhaustive_scan() {
        assert_eq!(mod_inverse(1, 16).unwrap(), 1);
        assert_eq!(mod_inverse(3, 16).unwrap(), 11);
        assert_eq!(mod_inverse(5, 8).unwrap(), 5);
        for m_exp in 1..=10u32 {
            let modulus = 1u64 << m_exp;
            for q in (1..modulus).step_by(2) {
                let inv = mod_inverse(q, modulus).unwrap();
                assert_eq!(Some(inv), scan_inverse(q, modulus), "q={q} mod {modulus}");
            }
        }
    }

    #[test]
    fn mod_inverse_rejects_bad_input() {
        assert_eq!(mod_inverse(2, 16), Err(NumTheoryError::EvenOperand(2)));
        assert_eq!(mod_inverse(3, 12), Err(NumTheoryError::BadModulus(12)));
        assert_eq!(mod_inverse(3, 1), Err(NumTheoryError::BadModulus(1)));
    }

    /// Independent oracle: enumerate every convergent of num/den.
    fn all_convergents(mut num: u64, mut den: u64) -> Vec<(u64, u64)> {
        let mut out = Vec::new();
        let (mut h_prev, mut h, mut k_prev, mut k) = (0u64, 1u64, 1u64, 0u64);
        loop {
            let a = num / den;
            let (h_next, k_next) = (a * h + h_prev, a * k + k_prev);
            h_prev = h;
            h = h_next;
            k_prev = k;
            k = k_next;
            out.push((h, k));
            let rem = num % den;
            if rem == 0 {
                return out;
            }
            num = den;
            den = rem;
        }
    }

    #[test]
    fn cf_recover_matches_pinned_cases() {
        let f = cf_recover(1024, 2048, 8).unwrap();
        assert_eq!((f.numerator, f.denominator), (1, 2));
        let f = cf_recover(1365, 2048, 8).unwrap();
        assert_eq!((f.numerator, f.denominator), (2, 3));
        // The recovered fraction sits within 1/2^(u+1) of the phase ratio
        // scaled by the bound guarantee: |1365/2048 - 2/3| <= 1/2^12.
        let diff = (1365.0 / 2048.0f64 - 2.0 / 3.0).abs();
        assert!(diff <= 1.0 / 4096.0, "diff {diff}");
        let f = cf_recover(0, 2048, 8).unwrap();
        assert_eq!((f.numerator, f.denominator), (0, 1));
    }

    #[test]
    fn cf_recover_equals_last_small_convergent_everywhere() {
        for bound in [2u64, 8, 16] {
            for phi in 0..2048u64 {
                let got = cf_recover(phi, 2048, bound).unwrap();
                let expect = all_convergents(phi, 2048)
                    .into_iter()
                    .filter(|&(_, k)| k < bound)
                    .last()
                    .unwrap_or((0, 1));
                assert_eq!(
                    (got.numerator, got.denominator),
                    expect,
                    "phi={phi} bound={bound}"
                );
            }
        }
    }

    #[test]
    fn cf_recover_exact_phase_recovery() {
        // For every true fraction l/T with T < 2^v and u = 2v+1, the
        // rounded phase round(2^u * l / T) recovers l/T in lowest terms.
        for v in 1..=5u32 {
            let u = 2 * v + 1;
            let denom = 1u64 << u;
            for t in 1..(1u64 << v) {
                for l in 0..t {
                    let phi = ((denom as u128 * l as u128 + (t / 2) as u128) / t as u128) as u64;
                    let phi = phi % denom;
                    let f = cf_recover(phi, denom, t + 1).unwrap();
                    let g = gcd(l.max(1), t).unwrap_or(1);
                    let (le, te) = if l == 0 { (0, 1) } else { (l / g, t / g) };
                    assert_eq!(
                        (f.numerator, f.denominator),
                        (le, te),
                        "v={v} t={t} l={l} phi={phi}"
                    );
                }
            }
        }
    }

    #[test]
    fn cf_recover_rejects_bad_queries() {
        assert!(cf_recover(5, 4, 8).is_err());
        assert!(cf_recover(0, 0, 8).is_err());
        assert!(cf_recover(0, 8, 1).is_err());
    }

    #[test]
    fn brute_force_period_matches_pinned_cases() {
        let scan = brute_force_period(|j| j % 5, 6).unwrap();
        assert_eq!(scan.period, 5);
        assert!(scan.verified);
        let scan = brute_force_period(|_| 7, 4).unwrap();
        assert_eq!(scan.period, 1);
        assert!(scan.verified);
        // Two residue fields side by side repeat with the lcm.
        let scan = brute_force_period(|j| (j % 2) << 3 | (j % 3), 6).unwrap();
        assert_eq!(scan.period, 6);
        assert_eq!(brute_force_period(|j| j, 4), Err(NumTheoryError::NoPeriod));
    }

    #[test]
    fn random_odd_is_odd_in_range_and_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        assert_eq!(random_odd(1, &mut rng), 1);
        let mut counts = [0u64; 8];
        let trials = 10_000u64;
        for _ in 0..trials {
            let q = random_odd(4, &mut rng);
            assert!(q % 2 == 1 && q < 16);
            counts[(q / 2) as usize] += 1;
        }
        // Chi-square against the uniform law over 8 cells; 26.12 is the
        // 99.9% point of chi-square with 7 degrees of freedom.
        let expect = trials as f64 / 8.0;
        let chi2: f64 = counts
            .iter()
            .map(|&c| {
                let d = c as f64 - expect;
                d * d / expect
            })
            .sum();
        assert!(chi2 < 26.12, "chi2 = {chi2}, counts = {counts:?}");
        // Per-cell 5-sigma cross-check of the same draws.
        let p = 1.0 / 8.0;
        let sigma = (p * (1.0 - p) / trials as f64).sqrt();
        for &c in &counts {
            let freq = c as f64 / trials as f64;
            assert!((freq - p).abs() < 5.0 * sigma, "freq {freq}");
        }
    }

    #[test]
    fn random_odd_is_deterministic_given_seed() {
        let mut a = ChaCha8Rng::seed_from_u64(42);
        let mut b = ChaCha8Rng::seed_from_u64(42);
        let xs: Vec<u64> = (0..32).map(|_| random_odd(9, &mut a)).collect();
        let ys: Vec<u64> = (0..32).map(|_| random_odd(9, &mut b)).collect();
        assert_eq!(xs, ys);
    }
}
