//! Exact amplitude arithmetic: sums of roots of unity over a fixed
//! power-of-two denominator.
//!
//! Every amplitude the engine tracks is `global_scale` times a
//! [`PhaseSum`], a multiset of integer numerators `a` standing for
//! `sum_a exp(2*pi*i * a / 2^phase_bits)`. Multiplying by a root of unity
//! is an integer shift of every numerator; adding amplitudes is a multiset
//! union. No rounding happens until a probability is needed.

use num_complex::Complex64;

/// Lookup table of the `2^phase_bits` complex roots of unity.
#[derive(Debug, Clone)]
pub struct PhaseTable {
    phase_bits: u32,
    roots: Vec<Complex64>,
}

impl PhaseTable {
    pub fn new(phase_bits: u32) -> Self {
        assert!(phase_bits <= 26, "phase table of 2^{phase_bits} entries");
        let d = 1usize << phase_bits;
        let step = std::f64::consts::TAU / d as f64;
        let roots = (0..d)
            .map(|a| Complex64::from_polar(1.0, a as f64 * step))
            .collect();
        Self { phase_bits, roots }
    }

    pub fn phase_bits(&self) -> u32 {
        self.phase_bits
    }

    /// exp(2*pi*i * a / 2^phase_bits); `a` is reduced automatically.
    pub fn root(&self, a: u64) -> Complex64 {
        self.roots[(a & (self.roots.len() as u64 - 1)) as usize]
    }
}

/// An exact sum of roots of unity: numerators over denominator
/// `2^phase_bits`.
///
/// The numerator list is kept sorted so equal sums compare equal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhaseSum {
    phase_bits: u32,
    numerators: Vec<u64>,
}

impl PhaseSum {
    /// The single root at angle zero, i.e. the amplitude 1.
    pub fn unit(phase_bits: u32) -> Self {
        Self {
            phase_bits,
            numerators: vec![0],
        }
    }

    /// An empty sum, i.e. the amplitude 0.
    pub fn zero(phase_bits: u32) -> Self {
        Self {
            phase_bits,
            numerators: Vec::new(),
        }
    }

    pub fn phase_bits(&self) -> u32 {
        self.phase_bits
    }

    /// Denominator of the sum, `2^phase_bits`.
    pub fn denominator(&self) -> u64 {
        1u64 << self.phase_bits
    }

    /// Sorted numerator multiset.
    pub fn numerators(&self) -> &[u64] {
        &self.numerators
    }

    pub fn len(&self) -> usize {
        self.numerators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.numerators.is_empty()
    }

    /// Multiplies by `exp(2*pi*i * delta / 2^phase_bits)`: every numerator
    /// shifts by `delta` modulo the denominator.
    pub fn shift(&mut self, delta: u64) {
        let mask = self.denominator() - 1;
        let delta = delta & mask;
        if delta == 0 {
            return;
        }
        for a in &mut self.numerators {
            *a = (*a + delta) & mask;
        }
        self.numerators.sort_unstable();
    }

    /// Copy of this sum shifted by `delta`.
    pub fn shifted(&self, delta: u64) -> Self {
        let mut out = self.clone();
        out.shift(delta);
        out
    }

    /// Adds another sum into this one (multiset union). Denominators must
    /// match; the engine fixes one denominator per state.
    pub fn merge(&mut self, other: &PhaseSum) {
        assert_eq!(
            self.phase_bits, other.phase_bits,
            "phase sums with different denominators"
        );
        self.numerators.extend_from_slice(&other.numerators);
        self.numerators.sort_unstable();
    }

    /// Numeric value of the sum.
    pub fn eval(&self, table: &PhaseTable) -> Complex64 {
        debug_assert_eq!(table.phase_bits(), self.phase_bits);
        self.numerators.iter().map(|&a| table.root(a)).sum()
    }

    /// Numeric value without a precomputed table (for small sums).
    pub fn eval_direct(&self) -> Complex64 {
        let step = std::f64::consts::TAU / self.denominator() as f64;
        self.numerators
            .iter()
            .map(|&a| Complex64::from_polar(1.0, a as f64 * step))
            .sum()
    }
}
