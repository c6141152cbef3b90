//! Dense reference backend.
//!
//! Implements every operator a second time over a full amplitude vector,
//! by routes independent of the sparse engine: Hadamards are per-qubit
//! butterflies on arbitrary states, and the Fourier transform is the
//! textbook gate circuit (Hadamard, controlled phase rotations, bit
//! reversal) rather than a fan-out or an FFT. Small enough states from
//! both backends are compared amplitude by amplitude in tests.

use num_complex::Complex64;
use rand::Rng;

use super::layout::RegisterLayout;
use super::sparse::SparseState;
use super::{Basis, EngineError, MeasurementDistribution, MAX_DENSE_BITS};

/// Full amplitude vector over a layout's packed keys.
#[derive(Debug, Clone)]
pub struct DenseState {
    layout: RegisterLayout,
    amps: Vec<Complex64>,
}

/// One gate of the Fourier circuit.
enum Gate {
    H(u32),
    /// Phase `exp(2*pi*i * turns)` when both bits are 1.
    CPhase(u32, u32, f64),
    Swap(u32, u32),
}

impl DenseState {
    /// Creates the basis state declared by the layout's initial values.
    pub fn new(layout: RegisterLayout) -> Result<Self, EngineError> {
        let bits = layout.total_width();
        if bits > MAX_DENSE_BITS {
            return Err(EngineError::DenseTooWide { bits });
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << bits];
        amps[layout.initial_key() as usize] = Complex64::new(1.0, 0.0);
        Ok(Self { layout, amps })
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn probability_norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    fn resolve(&self, name: &str) -> Result<usize, EngineError> {
        self.layout.index_of(name)
    }

    /// Hadamard on every qubit of `reg`. Unlike the sparse engine this
    /// handles arbitrary input states.
    pub fn apply_hadamard_uniform(&mut self, reg: &str) -> Result<(), EngineError> {
        let idx = self.resolve(reg)?;
        let offset = self.layout.offset(idx);
        for b in 0..self.layout.width(idx) {
            self.hadamard_bit(offset + b);
        }
        Ok(())
    }

    fn hadamard_bit(&mut self, bit: u32) {
        let stride = 1usize << bit;
        let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
        let n = self.amps.len();
        let mut i = 0;
        while i < n {
            for j in i..i + stride {
                let lo = self.amps[j];
                let hi = self.amps[j + stride];
                self.amps[j] = (lo + hi) * inv_sqrt2;
                self.amps[j + stride] = (lo - hi) * inv_sqrt2;
            }
            i += 2 * stride;
        }
    }

    fn controlled_phase(&mut self, bit_a: u32, bit_b: u32, turns: f64) {
        let mask = (1u64 << bit_a) | (1u64 << bit_b);
        let phase = Complex64::from_polar(1.0, std::f64::consts::TAU * turns);
        for (i, amp) in self.amps.iter_mut().enumerate() {
            if i as u64 & mask == mask {
                *amp *= phase;
            }
        }
    }

    fn swap_bits(&mut self, bit_a: u32, bit_b: u32) {
        let (a, b) = (1usize << bit_a, 1usize << bit_b);
        for i in 0..self.amps.len() {
            let ia = i & a != 0;
            let ib = i & b != 0;
            if ia && !ib {
                let j = (i & !a) | b;
                self.amps.swap(i, j);
            }
        }
    }

    /// Gate list of the forward Fourier transform on a register: for each
    /// target from the most significant qubit down, a Hadamard followed by
    /// controlled rotations from every lower qubit, then a bit reversal.
    fn qft_gates(&self, idx: usize) -> Vec<Gate> {
        let w = self.layout.width(idx);
        let offset = self.layout.offset(idx);
        // Qubit p counts from the most significant end: absolute bit
        // offset + (w - 1 - p).
        let abs = |p: u32| offset + (w - 1 - p);
        let mut gates = Vec::new();
        for p in 0..w {
            gates.push(Gate::H(abs(p)));
            for q in p + 1..w {
                // Controlled R_{q-p+1}: a 1/2^(q-p+1) turn.
                gates.push(Gate::CPhase(
                    abs(p),
                    abs(q),
                    1.0 / (1u64 << (q - p + 1)) as f64,
                ));
            }
        }
        for p in 0..w / 2 {
            gates.push(Gate::Swap(abs(p), abs(w - 1 - p)));
        }
        gates
    }

    /// Fourier transform of a register as the explicit gate circuit.
    pub fn apply_qft(&mut self, reg: &str, direction: Basis) -> Result<(), EngineError> {
        if direction == Basis::Computational {
            return Err(EngineError::NotAFourierBasis(direction));
        }
        let idx = self.resolve(reg)?;
        let gates = self.qft_gates(idx);
        match direction {
            Basis::Fourier => {
                for g in &gates {
                    self.run_gate(g, 1.0);
                }
            }
            Basis::FourierInverse => {
                for g in gates.iter().rev() {
                    self.run_gate(g, -1.0);
                }
            }
            Basis::Computational => unreachable!(),
        }
        Ok(())
    }

    fn run_gate(&mut self, gate: &Gate, sign: f64) {
        match *gate {
            Gate::H(b) => self.hadamard_bit(b),
            Gate::CPhase(a, b, turns) => self.controlled_phase(a, b, sign * turns),
            Gate::Swap(a, b) => self.swap_bits(a, b),
        }
    }

    /// XORs `src` into `dst` (transversal CNOT copy), as an index map.
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
        let layout = self.layout.clone();
        let d_off = layout.offset(di);
        self.permute(|key| key ^ (layout.extract(key, si) << d_off));
        Ok(())
    }

    /// Phase `exp(2*pi*i * x * v / 2^m)` on amplitudes whose control
    /// register holds `v`.
    pub fn apply_phase_power(&mut self, ctrl: &str, x: u64, m: u32) -> Result<(), EngineError> {
        let idx = self.resolve(ctrl)?;
        let modulus = 1u128 << m;
        for (i, amp) in self.amps.iter_mut().enumerate() {
            let v = self.layout.extract(i as u64, idx);
            let units = ((x as u128 * v as u128) & (modulus - 1)) as u64;
            let turns = units as f64 / modulus as f64;
            *amp *= Complex64::from_polar(1.0, std::f64::consts::TAU * turns);
        }
        Ok(())
    }

    /// Phase `exp(2*pi*i * a * b / 2^m)` coupling the values of two
    /// registers, as a pointwise diagonal.
    pub fn apply_phase_mul(&mut self, reg_a: &str, reg_b: &str, m: u32) -> Result<(), EngineError> {
        let (ai, bi) = (self.resolve(reg_a)?, self.resolve(reg_b)?);
        if ai == bi {
            return Err(EngineError::SameRegister(reg_a.to_string()));
        }
        let modulus = 1u128 << m;
        for (i, amp) in self.amps.iter_mut().enumerate() {
            let va = self.layout.extract(i as u64, ai);
            let vb = self.layout.extract(i as u64, bi);
            let units = ((va as u128 * vb as u128) & (modulus - 1)) as u64;
            let turns = units as f64 / modulus as f64;
            *amp *= Complex64::from_polar(1.0, std::f64::consts::TAU * turns);
        }
        Ok(())
    }

    /// Sends register values to `v * q mod 2^w` for odd `q`.
    pub fn apply_mod_mult(&mut self, reg: &str, q: u64) -> Result<(), EngineError> {
        if q % 2 == 0 {
            return Err(EngineError::EvenMultiplier(q));
        }
        let idx = self.resolve(reg)?;
        let w = self.layout.width(idx);
        let val_mask = (1u128 << w) - 1;
        let layout = self.layout.clone();
        self.permute(|key| {
            let v = layout.extract(key, idx);
            let next = ((v as u128 * q as u128) & val_mask) as u64;
            layout.with_value(key, idx, next)
        });
        Ok(())
    }

    /// XORs `f(input)` into `output`.
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
        // Validate the oracle over the input range before permuting.
        let w_in = self.layout.width(ii);
        for v in 0..(1u64 << w_in) {
            let fv = f(v);
            if w_out < 64 && fv >> w_out != 0 {
                return Err(EngineError::OracleRange {
                    value: fv,
                    width: w_out,
                });
            }
        }
        let layout = self.layout.clone();
        self.permute(|key| key ^ (f(layout.extract(key, ii)) << o_off));
        Ok(())
    }

    fn permute(&mut self, f: impl Fn(u64) -> u64) {
        let mut next = vec![Complex64::new(0.0, 0.0); self.amps.len()];
        for (i, &amp) in self.amps.iter().enumerate() {
            next[f(i as u64) as usize] = amp;
        }
        self.amps = next;
    }

    /// Exact outcome law for reading `reg` in `basis`, by transforming a
    /// copy of the full state and marginalizing.
    pub fn distribution_of(
        &self,
        reg: &str,
        basis: Basis,
    ) -> Result<MeasurementDistribution, EngineError> {
        let idx = self.resolve(reg)?;
        let mut work = self.clone();
        if basis != Basis::Computational {
            work.apply_qft(reg, basis)?;
        }
        let w = work.layout.width(idx);
        let mut probs = vec![0.0f64; 1 << w];
        for (i, amp) in work.amps.iter().enumerate() {
            probs[work.layout.extract(i as u64, idx) as usize] += amp.norm_sqr();
        }
        Ok(MeasurementDistribution {
            register: reg.to_string(),
            basis,
            probabilities: probs,
        })
    }

    /// Measures `reg` in the computational basis, collapsing the state.
    pub fn measure_register(
        &mut self,
        reg: &str,
        rng: &mut impl Rng,
    ) -> Result<u64, EngineError> {
        let dist = self.distribution_of(reg, Basis::Computational)?;
        let outcome = dist.sample(rng);
        self.project(reg, outcome)?;
        Ok(outcome)
    }

    /// Measures `reg` after a Fourier transform: the transform is applied
    /// for real, then the register is read out computationally.
    pub fn fourier_measure(
        &mut self,
        reg: &str,
        direction: Basis,
        rng: &mut impl Rng,
    ) -> Result<u64, EngineError> {
        self.apply_qft(reg, direction)?;
        self.measure_register(reg, rng)
    }

    /// Projects `reg` onto `outcome` and renormalizes.
    pub fn project(&mut self, reg: &str, outcome: u64) -> Result<(), EngineError> {
        let idx = self.resolve(reg)?;
        let mut norm = 0.0f64;
        for (i, amp) in self.amps.iter_mut().enumerate() {
            if self.layout.extract(i as u64, idx) == outcome {
                norm += amp.norm_sqr();
            } else {
                *amp = Complex64::new(0.0, 0.0);
            }
        }
        if norm <= 0.0 {
            return Err(EngineError::ImpossibleOutcome { outcome });
        }
        let scale = norm.sqrt().recip();
        self.amps.iter_mut().for_each(|a| *a *= scale);
        Ok(())
    }
}

/// Renders a sparse state on the dense backend (at most
/// [`MAX_DENSE_BITS`] packed bits).
pub fn dense_mirror(state: &SparseState) -> Result<DenseState, EngineError> {
    let amps = state.to_dense_vector()?;
    Ok(DenseState {
        layout: state.layout().clone(),
        amps,
    })
}

/// Largest absolute amplitude difference between the two backends after
/// aligning global phase.
///
/// The dense vector is rotated so its largest-magnitude sparse amplitude
/// matches in phase; equal states then differ only by floating error.
pub fn backend_deviation(sparse: &SparseState, dense: &DenseState) -> Result<f64, EngineError> {
    let sv = sparse.to_dense_vector()?;
    assert_eq!(
        sparse.layout(),
        dense.layout(),
        "backend comparison requires identical layouts"
    );
    let (i_max, _) = sv
        .iter()
        .enumerate()
        .fold((0usize, 0.0f64), |(bi, bm), (i, a)| {
            let m = a.norm_sqr();
            if m > bm {
                (i, m)
            } else {
                (bi, bm)
            }
        });
    let align = if sv[i_max].norm() > 1e-15 && dense.amps[i_max].norm() > 1e-15 {
        let ratio = dense.amps[i_max] / sv[i_max];
        ratio / ratio.norm()
    } else {
        Complex64::new(1.0, 0.0)
    };
    Ok(sv
        .iter()
        .zip(&dense.amps)
        .map(|(s, d)| (d - s * align).norm())
        .fold(0.0, f64::max))
}
