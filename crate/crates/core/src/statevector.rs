//! Dense statevector simulation.
//!
//! Qubit 0 is the least-significant bit of a basis index, so the basis state
//! `|q_{m-1} … q_1 q_0⟩` lives at index `Σ q_i 2^i`.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default ceiling on the register size.
pub const DEFAULT_MAX_QUBITS: usize = 24;

/// Norm drift tolerated after unitaries and renormalized measurements.
pub const NORM_TOLERANCE: f64 = 1e-10;

/// Drift in the summed outcome probabilities of a PVM before we refuse to sample.
pub const PVM_CONSISTENCY_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StateError {
    #[error("cannot allocate {requested} qubits (supported range 1..={max})")]
    Capacity { requested: usize, max: usize },
    #[error("qubit index {index} out of range for a {num_qubits}-qubit register")]
    QubitIndex { index: usize, num_qubits: usize },
    #[error("basis index {index} out of range for a {num_qubits}-qubit register")]
    BasisIndex { index: usize, num_qubits: usize },
    #[error("invalid gate: {0}")]
    InvalidGate(String),
    #[error("invalid projector: {0}")]
    InvalidProjector(String),
    #[error("measurement probabilities sum to {0}, expected 1")]
    Inconsistent(f64),
    #[error("amplitude vector of length {0} is not a power of two")]
    BadLength(usize),
}

/// A control line of a multi-controlled gate. `on == false` is a
/// control-on-zero (open) control.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Control {
    pub qubit: usize,
    pub on: bool,
}

impl Control {
    pub fn one(qubit: usize) -> Self {
        Control { qubit, on: true }
    }

    pub fn zero(qubit: usize) -> Self {
        Control { qubit, on: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum GateOp {
    H(usize),
    X(usize),
    T(usize),
    Tdg(usize),
    Cx { control: usize, target: usize },
    /// Multi-controlled X; fires iff every control matches its polarity.
    Mcx { controls: Vec<Control>, target: usize },
    /// Relative-phase Toffoli (Margolus form). Equal to CCX up to a diagonal
    /// phase on the control/target subspace and self-inverse.
    Rccx { c0: usize, c1: usize, target: usize },
    /// Multi-controlled Y rotation, used only for general state preparation.
    Ry { theta: f64, target: usize, controls: Vec<Control> },
}

impl GateOp {
    pub fn mcx(controls: Vec<Control>, target: usize) -> Self {
        GateOp::Mcx { controls, target }
    }

    pub fn ccx(c0: usize, c1: usize, target: usize) -> Self {
        GateOp::Mcx { controls: vec![Control::one(c0), Control::one(c1)], target }
    }

    /// Every qubit the gate touches, target last.
    pub fn qubits(&self) -> Vec<usize> {
        match self {
            GateOp::H(q) | GateOp::X(q) | GateOp::T(q) | GateOp::Tdg(q) => vec![*q],
            GateOp::Cx { control, target } => vec![*control, *target],
            GateOp::Mcx { controls, target } | GateOp::Ry { controls, target, .. } => {
                let mut qs: Vec<usize> = controls.iter().map(|c| c.qubit).collect();
                qs.push(*target);
                qs
            }
            GateOp::Rccx { c0, c1, target } => vec![*c0, *c1, *target],
        }
    }

    pub fn is_two_qubit(&self) -> bool {
        self.qubits().len() == 2
    }

    pub fn validate(&self, num_qubits: usize) -> Result<(), StateError> {
        let qs = self.qubits();
        for &q in &qs {
            if q >= num_qubits {
                return Err(StateError::QubitIndex { index: q, num_qubits });
            }
        }
        for (i, a) in qs.iter().enumerate() {
            if qs[i + 1..].contains(a) {
                return Err(StateError::InvalidGate(format!(
                    "qubit {a} appears more than once in {self:?}"
                )));
            }
        }
        Ok(())
    }
}

/// The three outcomes of the pair PVM {Π+, Π−, Π0}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PvmOutcome {
    Plus,
    Minus,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    pub two_qubit_depolarizing_p: f64,
    pub rng_seed: u64,
}

impl NoiseConfig {
    pub fn new(p: f64, rng_seed: u64) -> Result<Self, StateError> {
        let cfg = NoiseConfig { two_qubit_depolarizing_p: p, rng_seed };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn noiseless() -> Self {
        NoiseConfig { two_qubit_depolarizing_p: 0.0, rng_seed: 0 }
    }

    pub fn validate(&self) -> Result<(), StateError> {
        let p = self.two_qubit_depolarizing_p;
        if !(0.0..=1.0).contains(&p) || p.is_nan() {
            return Err(StateError::InvalidGate(format!("depolarizing probability {p} not in [0, 1]")));
        }
        Ok(())
    }

    pub fn is_noiseless(&self) -> bool {
        self.two_qubit_depolarizing_p == 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    num_qubits: usize,
    amps: Vec<Complex64>,
}

impl QuantumState {
    /// `|0…0⟩` on `m` qubits, `1 ≤ m ≤ DEFAULT_MAX_QUBITS`.
    pub fn new(m: usize) -> Result<Self, StateError> {
        Self::with_limit(m, DEFAULT_MAX_QUBITS)
    }

    pub fn with_limit(m: usize, max: usize) -> Result<Self, StateError> {
        if m == 0 || m > max {
            return Err(StateError::Capacity { requested: m, max });
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << m];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(QuantumState { num_qubits: m, amps })
    }

    pub fn basis(m: usize, index: usize) -> Result<Self, StateError> {
        let mut s = Self::new(m)?;
        s.check_basis(index)?;
        s.amps[0] = Complex64::new(0.0, 0.0);
        s.amps[index] = Complex64::new(1.0, 0.0);
        Ok(s)
    }

    /// Wraps an amplitude vector as-is (no renormalization).
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self, StateError> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(StateError::BadLength(len));
        }
        Ok(QuantumState { num_qubits: len.trailing_zeros() as usize, amps })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitude(&self, index: usize) -> Complex64 {
        self.amps[index]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalize(&mut self) {
        let n = self.norm_sqr().sqrt();
        if n > 0.0 {
            let inv = 1.0 / n;
            self.amps.iter_mut().for_each(|a| *a *= inv);
        }
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &QuantumState) -> Complex64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    /// Largest elementwise deviation after removing the global phase that
    /// best aligns `other` with `self`.
    pub fn distance_up_to_phase(&self, other: &QuantumState) -> f64 {
        let overlap = other.inner(self);
        let phase = if overlap.norm() > 1e-300 { overlap / overlap.norm() } else { Complex64::new(1.0, 0.0) };
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b * phase).norm())
            .fold(0.0, f64::max)
    }

    pub fn probability(&self, index: usize) -> f64 {
        self.amps[index].norm_sqr()
    }

    fn check_qubit(&self, q: usize) -> Result<(), StateError> {
        if q >= self.num_qubits {
            return Err(StateError::QubitIndex { index: q, num_qubits: self.num_qubits });
        }
        Ok(())
    }

    fn check_basis(&self, i: usize) -> Result<(), StateError> {
        if i >= self.amps.len() {
            return Err(StateError::BasisIndex { index: i, num_qubits: self.num_qubits });
        }
        Ok(())
    }

    pub fn apply(&mut self, op: &GateOp) -> Result<(), StateError> {
        op.validate(self.num_qubits)?;
        match op {
            GateOp::H(q) => {
                let s = FRAC_1_SQRT_2;
                self.apply_1q(*q, |a, b| ((a + b) * s, (a - b) * s));
            }
            GateOp::X(q) => self.apply_1q(*q, |a, b| (b, a)),
            GateOp::T(q) => self.phase(*q, Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4)),
            GateOp::Tdg(q) => self.phase(*q, Complex64::from_polar(1.0, -std::f64::consts::FRAC_PI_4)),
            GateOp::Cx { control, target } => self.controlled_x(&[Control::one(*control)], *target),
            GateOp::Mcx { controls, target } => self.controlled_x(controls, *target),
            GateOp::Rccx { c0, c1, target } => self.rccx(*c0, *c1, *target),
            GateOp::Ry { theta, target, controls } => self.controlled_ry(*theta, controls, *target),
        }
        Ok(())
    }

    pub fn apply_all<'a>(&mut self, ops: impl IntoIterator<Item = &'a GateOp>) -> Result<(), StateError> {
        for op in ops {
            self.apply(op)?;
        }
        Ok(())
    }

    fn apply_1q(&mut self, q: usize, f: impl Fn(Complex64, Complex64) -> (Complex64, Complex64)) {
        let bit = 1usize << q;
        for i in 0..self.amps.len() {
            if i & bit == 0 {
                let j = i | bit;
                let (a, b) = f(self.amps[i], self.amps[j]);
                self.amps[i] = a;
                self.amps[j] = b;
            }
        }
    }

    fn phase(&mut self, q: usize, w: Complex64) {
        let bit = 1usize << q;
        for (i, a) in self.amps.iter_mut().enumerate() {
            if i & bit != 0 {
                *a *= w;
            }
        }
    }

    fn control_mask(controls: &[Control]) -> (usize, usize) {
        controls.iter().fold((0, 0), |(m, v), c| {
            let b = 1usize << c.qubit;
            (m | b, if c.on { v | b } else { v })
        })
    }

    fn controlled_x(&mut self, controls: &[Control], target: usize) {
        let (mask, val) = Self::control_mask(controls);
        let t = 1usize << target;
        for i in 0..self.amps.len() {
            if i & t == 0 && i & mask == val {
                self.amps.swap(i, i | t);
            }
        }
    }

    fn controlled_ry(&mut self, theta: f64, controls: &[Control], target: usize) {
        let (mask, val) = Self::control_mask(controls);
        let t = 1usize << target;
        let (s, c) = (theta / 2.0).sin_cos();
        for i in 0..self.amps.len() {
            if i & t == 0 && i & mask == val {
                let (a, b) = (self.amps[i], self.amps[i | t]);
                self.amps[i] = a * c - b * s;
                self.amps[i | t] = a * s + b * c;
            }
        }
    }

    fn rccx(&mut self, c0: usize, c1: usize, t: usize) {
        let s = FRAC_1_SQRT_2;
        let tp = Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4);
        let tm = tp.conj();
        let h = |st: &mut Self| st.apply_1q(t, |a, b| ((a + b) * s, (a - b) * s));
        h(self);
        self.phase(t, tp);
        self.controlled_x(&[Control::one(c1)], t);
        self.phase(t, tm);
        self.controlled_x(&[Control::one(c0)], t);
        self.phase(t, tp);
        self.controlled_x(&[Control::one(c1)], t);
        self.phase(t, tm);
        h(self);
    }

    pub fn apply_pauli(&mut self, q: usize, p: Pauli) -> Result<(), StateError> {
        self.check_qubit(q)?;
        let bit = 1usize << q;
        match p {
            Pauli::I => {}
            Pauli::X => self.apply_1q(q, |a, b| (b, a)),
            Pauli::Z => self.phase(q, Complex64::new(-1.0, 0.0)),
            Pauli::Y => {
                // Y|0⟩ = i|1⟩, Y|1⟩ = −i|0⟩
                let i_ = Complex64::new(0.0, 1.0);
                for i in 0..self.amps.len() {
                    if i & bit == 0 {
                        let j = i | bit;
                        let (a, b) = (self.amps[i], self.amps[j]);
                        self.amps[i] = -i_ * b;
                        self.amps[j] = i_ * a;
                    }
                }
            }
        }
        Ok(())
    }

    /// Two-qubit depolarizing trajectory step: with probability `p` apply one
    /// of the 15 non-identity Paulis on `(q1, q2)`, chosen uniformly.
    /// Returns the pair that was applied, if any.
    pub fn inject_depolarizing<R: Rng + ?Sized>(
        &mut self,
        q1: usize,
        q2: usize,
        p: f64,
        rng: &mut R,
    ) -> Result<Option<(Pauli, Pauli)>, StateError> {
        self.check_qubit(q1)?;
        self.check_qubit(q2)?;
        if q1 == q2 {
            return Err(StateError::InvalidGate("depolarizing pair must be two distinct qubits".into()));
        }
        if p <= 0.0 || rng.gen::<f64>() >= p {
            return Ok(None);
        }
        let k = rng.gen_range(1..16);
        let pair = (Pauli::ALL[k / 4], Pauli::ALL[k % 4]);
        self.apply_pauli(q1, pair.0)?;
        self.apply_pauli(q2, pair.1)?;
        Ok(Some(pair))
    }

    /// `⟨ψ|φ⟩⟨φ|ψ⟩` for `|φ⟩ = Σ_i s_i |b_i⟩ / √len`, with `s_i = ±1`.
    pub fn projector_probability(&self, basis: &[usize], signs: &[i8]) -> Result<f64, StateError> {
        if basis.is_empty() || basis.len() != signs.len() {
            return Err(StateError::InvalidProjector("basis and sign lists must be nonempty and equal length".into()));
        }
        for (i, &b) in basis.iter().enumerate() {
            self.check_basis(b)?;
            if basis[..i].contains(&b) {
                return Err(StateError::InvalidProjector(format!("basis index {b} repeated")));
            }
        }
        if signs.iter().any(|s| s.abs() != 1) {
            return Err(StateError::InvalidProjector("signs must be ±1".into()));
        }
        let overlap: Complex64 = basis.iter().zip(signs).map(|(&b, &s)| self.amps[b] * f64::from(s)).sum();
        Ok(overlap.norm_sqr() / basis.len() as f64)
    }

    /// Outcome probabilities `(p+, p−, p0)` of the PVM onto
    /// `(|a⟩ ± |b⟩)/√2` and the complement.
    pub fn pvm_probabilities(&self, a: usize, b: usize) -> Result<(f64, f64, f64), StateError> {
        if a == b {
            return Err(StateError::InvalidProjector("pair PVM needs a ≠ b".into()));
        }
        let plus = self.projector_probability(&[a, b], &[1, 1])?;
        let minus = self.projector_probability(&[a, b], &[1, -1])?;
        let total = self.norm_sqr();
        let zero = (total - plus - minus).max(0.0);
        let sum = plus + minus + zero;
        if (sum - 1.0).abs() > PVM_CONSISTENCY_TOLERANCE {
            return Err(StateError::Inconsistent(sum));
        }
        Ok((plus, minus, zero))
    }

    /// Collapses the state onto the outcome's projector and renormalizes.
    pub fn project_pvm(&mut self, a: usize, b: usize, outcome: PvmOutcome) {
        match outcome {
            PvmOutcome::Zero => {
                self.amps[a] = Complex64::new(0.0, 0.0);
                self.amps[b] = Complex64::new(0.0, 0.0);
            }
            PvmOutcome::Plus | PvmOutcome::Minus => {
                let sign = if outcome == PvmOutcome::Plus { 1.0 } else { -1.0 };
                let c = (self.amps[a] + self.amps[b] * sign) * 0.5;
                self.amps.iter_mut().for_each(|x| *x = Complex64::new(0.0, 0.0));
                self.amps[a] = c;
                self.amps[b] = c * sign;
            }
        }
        self.normalize();
    }

    /// Samples the pair PVM with Born probabilities and collapses the state.
    pub fn measure_pvm<R: Rng + ?Sized>(&mut self, a: usize, b: usize, rng: &mut R) -> Result<PvmOutcome, StateError> {
        let (plus, minus, _) = self.pvm_probabilities(a, b)?;
        let r: f64 = rng.gen();
        let outcome = if r < plus {
            PvmOutcome::Plus
        } else if r < plus + minus {
            PvmOutcome::Minus
        } else {
            PvmOutcome::Zero
        };
        self.project_pvm(a, b, outcome);
        Ok(outcome)
    }

    pub fn qubit_one_probability(&self, q: usize) -> Result<f64, StateError> {
        self.check_qubit(q)?;
        let bit = 1usize << q;
        Ok(self.amps.iter().enumerate().filter(|(i, _)| i & bit != 0).map(|(_, a)| a.norm_sqr()).sum())
    }

    /// Z-basis measurement of one qubit with collapse.
    pub fn measure_qubit<R: Rng + ?Sized>(&mut self, q: usize, rng: &mut R) -> Result<bool, StateError> {
        let p1 = self.qubit_one_probability(q)?;
        let one = rng.gen::<f64>() < p1;
        self.collapse_qubit(q, one);
        Ok(one)
    }

    fn collapse_qubit(&mut self, q: usize, one: bool) {
        let bit = 1usize << q;
        for (i, a) in self.amps.iter_mut().enumerate() {
            if (i & bit != 0) != one {
                *a = Complex64::new(0.0, 0.0);
            }
        }
        self.normalize();
    }

    /// Measures `q` and returns it to `|0⟩`; yields the measured bit.
    pub fn measure_and_reset<R: Rng + ?Sized>(&mut self, q: usize, rng: &mut R) -> Result<bool, StateError> {
        let one = self.measure_qubit(q, rng)?;
        if one {
            self.apply_1q(q, |a, b| (b, a));
        }
        Ok(one)
    }
}
