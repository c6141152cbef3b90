//! The exact sparse state engine.
//!
//! A state is a map from packed basis assignments to [`PhaseSum`]
//! amplitudes plus one real `global_scale`. The protocol operators either
//! permute keys (copies, modular multiplications, oracles), shift phase
//! numerators (controlled phases), or fan keys out with a scale change
//! (uniform superposition, Fourier transform of a near-classical
//! register). Fourier readout is fused with measurement: the outcome law
//! is computed class by class over the registers not being measured, so
//! the full transformed state is never materialized.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;
use rustfft::FftPlanner;

use super::layout::RegisterLayout;
use super::phase::{PhaseSum, PhaseTable};
use super::{Basis, EngineError, MeasurementDistribution, MAX_MEASURE_BITS, MAX_TERMS};

/// Amplitude magnitude below which a fully interfered term is dropped
/// during measurement collapse. Exact cancellations evaluate to around
/// 1e-13 times the numerator count, far below this threshold relative to
/// any surviving amplitude.
const COLLAPSE_PRUNE: f64 = 1e-10;

/// An exact sparse superposition over the registers of a layout.
#[derive(Debug, Clone)]
pub struct SparseState {
    layout: RegisterLayout,
    phase_bits: u32,
    global_scale: f64,
    terms: BTreeMap<u64, PhaseSum>,
}

impl SparseState {
    /// Creates the basis state declared by the layout's initial values.
    ///
    /// The phase denominator is fixed at `2^w` for the widest register
    /// `w` in the layout, which covers every phase the supported
    /// operators can introduce.
    pub fn new(layout: RegisterLayout) -> Result<Self, EngineError> {
        let bits = layout.max_width();
        Self::with_phase_bits(layout, bits)
    }

    /// Creates the initial basis state with an explicit phase denominator
    /// exponent. Operators introducing phases finer than `2^phase_bits`
    /// are rejected at call time.
    pub fn with_phase_bits(layout: RegisterLayout, phase_bits: u32) -> Result<Self, EngineError> {
        if phase_bits > 26 {
            return Err(EngineError::MeasureTooWide { bits: phase_bits });
        }
        let mut terms = BTreeMap::new();
        terms.insert(layout.initial_key(), PhaseSum::unit(phase_bits));
        Ok(Self {
            layout,
            phase_bits,
            global_scale: 1.0,
            terms,
        })
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn phase_bits(&self) -> u32 {
        self.phase_bits
    }

    pub fn global_scale(&self) -> f64 {
        self.global_scale
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    /// Iterates terms as (packed key, phase sum), in key order.
    pub fn terms(&self) -> impl Iterator<Item = (u64, &PhaseSum)> {
        self.terms.iter().map(|(&k, ps)| (k, ps))
    }

    /// Amplitude of one joint assignment, given per-register values in
    /// declaration order. Test helper; panics on a wrong value count.
    pub fn amplitude_of(&self, values: &[u64]) -> Complex64 {
        assert_eq!(values.len(), self.layout.len(), "one value per register");
        let key = values
            .iter()
            .enumerate()
            .fold(0u64, |k, (i, &v)| self.layout.with_value(k, i, v));
        match self.terms.get(&key) {
            Some(ps) => ps.eval(&PhaseTable::new(self.phase_bits)) * self.global_scale,
            None => Complex64::new(0.0, 0.0),
        }
    }

    /// Total probability mass; 1 within floating tolerance for any state
    /// produced by the supported operators.
    pub fn probability_norm(&self) -> f64 {
        let table = PhaseTable::new(self.phase_bits);
        let s2 = self.global_scale * self.global_scale;
        self.terms.values().map(|ps| ps.eval(&table).norm_sqr() * s2).sum()
    }

    fn resolve(&self, name: &str) -> Result<usize, EngineError> {
        self.layout.index_of(name)
    }

    /// Fans a register known to be |0> out into the uniform superposition
    /// over all its values (the all-qubits Hadamard on a zeroed register).
    ///
    /// # Errors
    ///
    /// Any term holding a nonzero value in `reg` is rejected: on a general
    /// state the Hadamard interferes terms, which the sparse map does not
    /// represent. The dense backend handles the general case.
    pub fn apply_hadamard_uniform(&mut self, reg: &str) -> Result<(), EngineError> {
        let idx = self.resolve(reg)?;
        let w = self.layout.width(idx);
        if self.terms.keys().any(|&k| self.layout.extract(k, idx) != 0) {
            return Err(EngineError::HadamardRequiresZero {
                register: reg.to_string(),
            });
        }
        let would_be = (self.terms.len() as u128) << w;
        if would_be > MAX_TERMS as u128 {
            return Err(EngineError::TermBudget {
                would_be: would_be.min(usize::MAX as u128) as usize,
            });
        }
        let offset = self.layout.offset(idx);
        let mut next = BTreeMap::new();
        for (&key, ps) in &self.terms {
            for j in 0..(1u64 << w) {
                next.insert(key | (j << offset), ps.clone());
            }
        }
        self.terms = next;
        self.global_scale *= ((1u64 << w) as f64).sqrt().recip();
        Ok(())
    }

    /// Applies the Fourier transform (or its inverse) to a register,
    /// merging any colliding fan-out terms exactly.
    ///
    /// Cost is `O(terms * 2^w)`, so this is meant for registers holding
    /// near-classical values (protocol senders transform a definite
    /// input); wide entangled registers should use the fused
    /// [`fourier_measure`](Self::fourier_measure) instead.
    pub fn apply_qft(&mut self, reg: &str, direction: Basis) -> Result<(), EngineError> {
        if direction == Basis::Computational {
            return Err(EngineError::NotAFourierBasis(direction));
        }
        let idx = self.resolve(reg)?;
        let w = self.layout.width(idx);
        if w > self.phase_bits {
            return Err(EngineError::PhaseTooFine {
                m: w,
                phase_bits: self.phase_bits,
            });
        }
        let would_be = (self.terms.len() as u128) << w;
        if would_be > MAX_TERMS as u128 {
            return Err(EngineError::TermBudget {
                would_be: would_be.min(usize::MAX as u128) as usize,
            });
        }
        let offset = self.layout.offset(idx);
        let mask = self.layout.mask(idx);
        let size = 1u64 << w;
        let shift = self.phase_bits - w;
        let mut next: BTreeMap<u64, PhaseSum> = BTreeMap::new();
        for (&key, ps) in &self.terms {
            let v = self.layout.extract(key, idx);
            let base = key & !mask;
            for j in 0..size {
                let units = ((v as u128 * j as u128) & (size as u128 - 1)) as u64;
                let units = match direction {
                    Basis::Fourier => units,
                    Basis::FourierInverse => (size - units) & (size - 1),
                    Basis::Computational => unreachable!(),
                };
                let shifted = ps.shifted(units << shift);
                next.entry(base | (j << offset))
                    .and_modify(|acc| acc.merge(&shifted))
                    .or_insert(shifted);
            }
        }
        self.terms = next;
        self.global_scale *= (size as f64).sqrt().recip();
        Ok(())
    }

    /// XORs `src` into `dst` term by term (the transversal CNOT copy).
    pub fn apply_cnot_copy(&mut self, src: &str, dst: &str) -> Result<(), EngineError> {
        let (si, di) = (self.resolve(src)?, self.resolve(dst)?);
        if si == di {
            return Err(EngineError::SameRegister(src.to_string()));
        }
        let (sw, dw) = (self.layout.width(si), self.layout.width(di));
        if sw != dw {
            return Err(EngineError::WidthMismatch {
                src: src.to_string(),
                src_width: sw,
                dst: dst.to_string(),
                dst_width: dw,
            });
        }
        let s_off = self.layout.offset(si);
        let s_mask = self.layout.mask(si);
        let d_off = self.layout.offset(di);
        self.permute_keys(|key| key ^ (((key & s_mask) >> s_off) << d_off));
        Ok(())
    }

    /// Multiplies every amplitude whose control register holds `v` by
    /// `exp(2*pi*i * x * v / 2^m)`.
    pub fn apply_phase_power(&mut self, ctrl: &str, x: u64, m: u32) -> Result<(), EngineError> {
        let idx = self.resolve(ctrl)?;
        if m > self.phase_bits {
            return Err(EngineError::PhaseTooFine {
                m,
                phase_bits: self.phase_bits,
            });
        }
        let shift = self.phase_bits - m;
        let modulus = 1u128 << m;
        let offset = self.layout.offset(idx);
        let key_mask = self.layout.mask(idx);
        for (&key, ps) in self.terms.iter_mut() {
            let v = (key & key_mask) >> offset;
            let units = ((x as u128 * v as u128) & (modulus - 1)) as u64;
            ps.shift(units << shift);
        }
        Ok(())
    }

    /// Multiplies each amplitude by `exp(2*pi*i * a * b / 2^m)` where `a`
    /// and `b` are the values of two registers in that term.
    ///
    /// This is the protocol parties' phase operator: one register is the
    /// traveling one, the other holds the party's private value, and the
    /// phase couples them without changing either.
    pub fn apply_phase_mul(&mut self, reg_a: &str, reg_b: &str, m: u32) -> Result<(), EngineError> {
        let (ai, bi) = (self.resolve(reg_a)?, self.resolve(reg_b)?);
        if ai == bi {
            return Err(EngineError::SameRegister(reg_a.to_string()));
        }
        if m > self.phase_bits {
            return Err(EngineError::PhaseTooFine {
                m,
                phase_bits: self.phase_bits,
            });
        }
        let shift = self.phase_bits - m;
        let modulus = 1u128 << m;
        let (a_off, a_mask) = (self.layout.offset(ai), self.layout.mask(ai));
        let (b_off, b_mask) = (self.layout.offset(bi), self.layout.mask(bi));
        for (&key, ps) in self.terms.iter_mut() {
            let va = (key & a_mask) >> a_off;
            let vb = (key & b_mask) >> b_off;
            let units = ((va as u128 * vb as u128) & (modulus - 1)) as u64;
            ps.shift(units << shift);
        }
        Ok(())
    }

    /// Sends each register value `v` to `v * q mod 2^w` for an odd `q`.
    pub fn apply_mod_mult(&mut self, reg: &str, q: u64) -> Result<(), EngineError> {
        if q % 2 == 0 {
            return Err(EngineError::EvenMultiplier(q));
        }
        let idx = self.resolve(reg)?;
        let w = self.layout.width(idx);
        let val_mask = (1u128 << w) - 1;
        let offset = self.layout.offset(idx);
        let key_mask = self.layout.mask(idx);
        self.permute_keys(|key| {
            let v = (key & key_mask) >> offset;
            let next = ((v as u128 * q as u128) & val_mask) as u64;
            (key & !key_mask) | (next << offset)
        });
        Ok(())
    }

    /// XORs `f(input)` into `output` term by term (the reversible oracle).
    ///
    /// # Errors
    ///
    /// Rejects oracle values that do not fit the output register, and
    /// `input == output` (not a reversible circuit).
    pub fn apply_oracle(
        &mut self,
        input: &str,
        output: &str,
        f: impl Fn(u64) -> u64,
    ) -> Result<(), EngineError> {
        let (ii, oi) = (self.resolve(input)?, self.resolve(output)?);
        if ii == oi {
            return Err(EngineError::SameRegister(input.to_string()));
        }
        let w_out = self.layout.width(oi);
        let o_off = self.layout.offset(oi);
        let mut next = BTreeMap::new();
        for (&key, ps) in &self.terms {
            let v = self.layout.extract(key, ii);
            let fv = f(v);
            if w_out < 64 && fv >> w_out != 0 {
                return Err(EngineError::OracleRange {
                    value: fv,
                    width: w_out,
                });
            }
            next.insert(key ^ (fv << o_off), ps.clone());
        }
        self.terms = next;
        Ok(())
    }

    /// Rebuilds the term map through a key bijection.
    fn permute_keys(&mut self, f: impl Fn(u64) -> u64) {
        let mut next = BTreeMap::new();
        for (&key, ps) in &self.terms {
            next.insert(f(key), ps.clone());
        }
        debug_assert_eq!(next.len(), self.terms.len(), "key map must be 1:1");
        self.terms = next;
    }

    /// Exact outcome law for reading `reg` in `basis`.
    ///
    /// Fourier bases group terms into classes by the joint value of all
    /// other registers and transform each class on its own: single-term
    /// classes contribute a flat `|amp|^2 / 2^w`, small classes are summed
    /// directly against exact roots of unity, and larger ones go through
    /// an FFT of the class vector. The full transformed state is never
    /// built.
    pub fn distribution_of(
        &self,
        reg: &str,
        basis: Basis,
    ) -> Result<MeasurementDistribution, EngineError> {
        let idx = self.resolve(reg)?;
        let w = self.layout.width(idx);
        if w > MAX_MEASURE_BITS {
            return Err(EngineError::MeasureTooWide { bits: w });
        }
        let size = 1usize << w;
        let table = PhaseTable::new(self.phase_bits);
        let s2 = self.global_scale * self.global_scale;
        let mut probs = vec![0.0f64; size];

        match basis {
            Basis::Computational => {
                for (&key, ps) in &self.terms {
                    let v = self.layout.extract(key, idx) as usize;
                    probs[v] += ps.eval(&table).norm_sqr() * s2;
                }
            }
            Basis::Fourier | Basis::FourierInverse => {
                if w > self.phase_bits {
                    return Err(EngineError::PhaseTooFine {
                        m: w,
                        phase_bits: self.phase_bits,
                    });
                }
                let mask = self.layout.mask(idx);
                let mut classes: BTreeMap<u64, Vec<(u64, Complex64)>> = BTreeMap::new();
                for (&key, ps) in &self.terms {
                    let j = self.layout.extract(key, idx);
                    classes
                        .entry(key & !mask)
                        .or_default()
                        .push((j, ps.eval(&table)));
                }
                let inv_n = 1.0 / size as f64;
                let mut flat = 0.0f64;
                let mut planner = FftPlanner::<f64>::new();
                let fft = match basis {
                    // The forward quantum transform uses exp(+2*pi*i*jk/N),
                    // which is the FFT library's "inverse" direction.
                    Basis::Fourier => planner.plan_fft_inverse(size),
                    _ => planner.plan_fft_forward(size),
                };
                let mut buf = vec![Complex64::new(0.0, 0.0); size];
                let shift = self.phase_bits - w;
                for members in classes.values() {
                    if members.len() == 1 {
                        // One term spreads evenly over every outcome.
                        flat += members[0].1.norm_sqr();
                    } else if members.len() <= 2 * w as usize {
                        for (k, slot) in probs.iter_mut().enumerate() {
                            let mut acc = Complex64::new(0.0, 0.0);
                            for &(j, amp) in members {
                                let units =
                                    ((j as u128 * k as u128) & (size as u128 - 1)) as u64;
                                let units = match basis {
                                    Basis::Fourier => units,
                                    _ => (size as u64 - units) & (size as u64 - 1),
                                };
                                acc += amp * table.root(units << shift);
                            }
                            *slot += acc.norm_sqr() * s2 * inv_n;
                        }
                    } else {
                        buf.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
                        for &(j, amp) in members {
                            buf[j as usize] += amp;
                        }
                        fft.process(&mut buf);
                        for (slot, c) in probs.iter_mut().zip(&buf) {
                            *slot += c.norm_sqr() * s2 * inv_n;
                        }
                    }
                }
                if flat > 0.0 {
                    let add = flat * s2 * inv_n;
                    probs.iter_mut().for_each(|p| *p += add);
                }
            }
        }

        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(EngineError::NormBroken { sum });
        }
        Ok(MeasurementDistribution {
            register: reg.to_string(),
            basis,
            probabilities: probs,
        })
    }

    /// Measures `reg` after the forward or inverse Fourier transform,
    /// collapsing the state. Returns the outcome.
    ///
    /// The outcome is drawn from [`distribution_of`](Self::distribution_of)
    /// by inverse transform sampling; the collapsed residue keeps exact
    /// phase sums (the per-class interference is a numerator multiset
    /// union, not a float).
    pub fn fourier_measure(
        &mut self,
        reg: &str,
        direction: Basis,
        rng: &mut impl Rng,
    ) -> Result<u64, EngineError> {
        let dist = self.distribution_of(reg, direction)?;
        let outcome = dist.sample(rng);
        self.collapse_fourier_outcome(reg, direction, outcome)?;
        Ok(outcome)
    }

    /// Collapses the state onto Fourier-basis outcome `k` of `reg`.
    ///
    /// Exposed separately so callers that already tabulated the outcome
    /// law (protocol rounds re-measuring identical states) can sample
    /// from it and collapse without recomputing the law.
    pub fn collapse_fourier_outcome(
        &mut self,
        reg: &str,
        direction: Basis,
        k: u64,
    ) -> Result<(), EngineError> {
        if direction == Basis::Computational {
            return Err(EngineError::NotAFourierBasis(direction));
        }
        let idx = self.resolve(reg)?;
        let w = self.layout.width(idx);
        if w > self.phase_bits {
            return Err(EngineError::PhaseTooFine {
                m: w,
                phase_bits: self.phase_bits,
            });
        }
        let size = 1u64 << w;
        if k >= size {
            return Err(EngineError::ImpossibleOutcome { outcome: k });
        }
        let mask = self.layout.mask(idx);
        let offset = self.layout.offset(idx);
        let shift = self.phase_bits - w;
        let mut merged: BTreeMap<u64, PhaseSum> = BTreeMap::new();
        for (&key, ps) in &self.terms {
            let j = self.layout.extract(key, idx);
            let units = ((j as u128 * k as u128) & (size as u128 - 1)) as u64;
            let units = match direction {
                Basis::Fourier => units,
                _ => (size - units) & (size - 1),
            };
            let shifted = ps.shifted(units << shift);
            merged
                .entry((key & !mask) | (k << offset))
                .and_modify(|acc| acc.merge(&shifted))
                .or_insert(shifted);
        }
        let table = PhaseTable::new(self.phase_bits);
        let mut kept = BTreeMap::new();
        let mut raw_norm = 0.0f64;
        for (key, ps) in merged {
            let mag2 = ps.eval(&table).norm_sqr();
            if mag2 > COLLAPSE_PRUNE * COLLAPSE_PRUNE {
                raw_norm += mag2;
                kept.insert(key, ps);
            }
        }
        if kept.is_empty() {
            return Err(EngineError::ImpossibleOutcome { outcome: k });
        }
        self.terms = kept;
        // New amplitudes are the merged sums; scaling them by the inverse
        // of their own norm restores total probability 1 exactly.
        self.global_scale = raw_norm.sqrt().recip();
        Ok(())
    }

    /// Measures `reg` in the computational basis, collapsing the state.
    pub fn measure_register(
        &mut self,
        reg: &str,
        rng: &mut impl Rng,
    ) -> Result<u64, EngineError> {
        let dist = self.distribution_of(reg, Basis::Computational)?;
        let outcome = dist.sample(rng);
        let idx = self.resolve(reg)?;
        let table = PhaseTable::new(self.phase_bits);
        let mut raw_norm = 0.0f64;
        self.terms.retain(|&key, ps| {
            if self.layout.extract(key, idx) == outcome {
                raw_norm += ps.eval(&table).norm_sqr();
                true
            } else {
                false
            }
        });
        if self.terms.is_empty() {
            return Err(EngineError::ImpossibleOutcome { outcome });
        }
        self.global_scale = raw_norm.sqrt().recip();
        Ok(outcome)
    }

    /// Full amplitude vector indexed by packed key, for the dense mirror.
    pub fn to_dense_vector(&self) -> Result<Vec<Complex64>, EngineError> {
        let bits = self.layout.total_width();
        if bits > super::MAX_DENSE_BITS {
            return Err(EngineError::DenseTooWide { bits });
        }
        let table = PhaseTable::new(self.phase_bits);
        let mut out = vec![Complex64::new(0.0, 0.0); 1 << bits];
        for (&key, ps) in &self.terms {
            out[key as usize] += ps.eval(&table) * self.global_scale;
        }
        Ok(out)
    }
}
