//! Quantum pair sketch over `k`-bit elements.
//!
//! Register layout: sketch qubits `0..k`, two measurement ancillas at `k` and
//! `k + 1`, then `k − 2` scratch qubits when running at the physical level.
//! Elements are `u64` bitstrings with bit `i` stored on qubit `i`.

use std::collections::BTreeSet;

use num_complex::Complex64;
use thiserror::Error;

use crate::circuit::{scratch_needed, CircuitError, CircuitLevel, Executor, MeasureMode, Tally};
use crate::rng::SimRng;
use crate::statevector::{Control, GateOp, PvmOutcome, QuantumState, StateError};

pub type SketchElement = u64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SketchError {
    #[error("element {element:#b} does not fit in {k} bits")]
    ElementWidth { element: u64, k: usize },
    #[error("sketch elements must be distinct")]
    SameElement,
    #[error("cannot create a sketch of an empty set")]
    EmptySet,
    #[error("sketch width {0} is not supported")]
    Width(usize),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

impl From<StateError> for SketchError {
    fn from(e: StateError) -> Self {
        SketchError::Circuit(CircuitError::State(e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairQuery {
    pub outcome: PvmOutcome,
    /// Flag probabilities read off the ancillas just before measuring.
    pub p_plus: f64,
    pub p_minus: f64,
}

#[derive(Debug, Clone)]
pub struct PairSketch {
    k: usize,
    exec: Executor,
    /// Basis change `(pivot, a ⊕ b)` still to be undone before the next operation.
    pending_restore: Option<(usize, u64)>,
}

impl PairSketch {
    /// Sketch register in `|0…0⟩`.
    pub fn new(k: usize, level: CircuitLevel, noise_p: f64, rng: SimRng) -> Result<Self, SketchError> {
        if k == 0 || k > 62 {
            return Err(SketchError::Width(k));
        }
        let scratch_len = if level == CircuitLevel::Physical { scratch_needed(k) } else { 0 };
        let state = QuantumState::new(k + 2 + scratch_len)?;
        let scratch = (k + 2..k + 2 + scratch_len).collect();
        Ok(PairSketch { k, exec: Executor::new(state, level, scratch, noise_p, rng), pending_restore: None })
    }

    /// `create`: the uniform superposition over `elements`.
    pub fn create(
        k: usize,
        elements: &[SketchElement],
        level: CircuitLevel,
        noise_p: f64,
        rng: SimRng,
    ) -> Result<Self, SketchError> {
        let mut s = PairSketch::new(k, level, noise_p, rng)?;
        s.prepare(elements)?;
        Ok(s)
    }

    pub fn width(&self) -> usize {
        self.k
    }

    pub fn ancillas(&self) -> (usize, usize) {
        (self.k, self.k + 1)
    }

    pub fn tally(&self) -> &Tally {
        self.exec.tally()
    }

    pub fn set_measure_mode(&mut self, mode: MeasureMode) {
        self.exec.set_mode(mode);
    }

    /// Full register state. Call [`settle`](Self::settle) first to see the
    /// sketch in the element basis after a `query_pair`.
    pub fn state(&self) -> &QuantumState {
        self.exec.state()
    }

    /// Amplitudes of the sketch qubits with ancillas and scratch in `|0⟩`.
    pub fn sketch_amplitudes(&self) -> &[Complex64] {
        &self.exec.state().amplitudes()[..1 << self.k]
    }

    /// Replaces the sketch contents; ancillas and scratch go to `|0⟩`.
    pub fn load_sketch_amplitudes(&mut self, amps: &[Complex64]) -> Result<(), SketchError> {
        if amps.len() != 1 << self.k {
            return Err(SketchError::Width(amps.len()));
        }
        let mut full = vec![Complex64::new(0.0, 0.0); self.exec.state().dim()];
        full[..amps.len()].copy_from_slice(amps);
        *self.exec.state_mut() = QuantumState::from_amplitudes(full)?;
        self.pending_restore = None;
        Ok(())
    }

    fn check(&self, e: SketchElement) -> Result<(), SketchError> {
        if e >> self.k != 0 {
            return Err(SketchError::ElementWidth { element: e, k: self.k });
        }
        Ok(())
    }

    fn polarity(&self, e: SketchElement) -> Vec<Control> {
        (0..self.k).map(|i| Control { qubit: i, on: e >> i & 1 == 1 }).collect()
    }

    /// Undoes the basis change left behind by the last `query_pair`.
    pub fn settle(&mut self) -> Result<(), SketchError> {
        if let Some((p, d)) = self.pending_restore.take() {
            self.exec.apply(&GateOp::H(p))?;
            self.fan(p, d)?;
        }
        Ok(())
    }

    /// CX slots `p → i` for every sketch qubit; fires where `d` has a 1 other than at `p`.
    fn fan(&mut self, p: usize, d: u64) -> Result<(), SketchError> {
        for i in 0..self.k {
            let op = GateOp::Cx { control: p, target: i };
            if i != p && d >> i & 1 == 1 {
                self.exec.apply(&op)?;
            } else {
                self.exec.reserve(&op);
            }
        }
        Ok(())
    }

    fn prepare(&mut self, elements: &[SketchElement]) -> Result<(), SketchError> {
        let set: BTreeSet<u64> = elements.iter().copied().collect();
        if set.is_empty() {
            return Err(SketchError::EmptySet);
        }
        for &e in &set {
            self.check(e)?;
        }
        let full = (1u64 << self.k) - 1;
        let ones = set.iter().fold(full, |acc, e| acc & e);
        let zeros = set.iter().fold(full, |acc, e| acc & !e);
        let free = full & !(ones | zeros);
        if set.len() as u64 == 1u64 << free.count_ones() {
            for i in 0..self.k {
                if free >> i & 1 == 1 {
                    self.exec.apply(&GateOp::H(i))?;
                } else if ones >> i & 1 == 1 {
                    self.exec.apply(&GateOp::X(i))?;
                }
            }
            return Ok(());
        }
        // Amplitude-splitting tree from the top bit down.
        for j in (0..self.k).rev() {
            let mut prefix_counts: std::collections::BTreeMap<u64, (u64, u64)> = Default::default();
            for &e in &set {
                let entry = prefix_counts.entry(e >> (j + 1)).or_default();
                if e >> j & 1 == 0 {
                    entry.0 += 1;
                } else {
                    entry.1 += 1;
                }
            }
            for (prefix, (n0, n1)) in prefix_counts {
                let controls: Vec<Control> =
                    (j + 1..self.k).map(|i| Control { qubit: i, on: prefix >> (i - j - 1) & 1 == 1 }).collect();
                if n0 > 0 && n1 > 0 {
                    let theta = 2.0 * ((n0 as f64) / ((n0 + n1) as f64)).sqrt().acos();
                    self.exec.apply(&GateOp::Ry { theta, target: j, controls })?;
                } else if n1 > 0 {
                    let op = if controls.is_empty() { GateOp::X(j) } else { GateOp::mcx(controls, j) };
                    self.exec.apply(&op)?;
                }
            }
        }
        Ok(())
    }

    /// `query_one`: projects onto `|a⟩` or its complement. `true` means `|a⟩`.
    pub fn query_one(&mut self, a: SketchElement) -> Result<bool, SketchError> {
        self.check(a)?;
        self.settle()?;
        let anc = self.k;
        self.exec.apply(&GateOp::mcx(self.polarity(a), anc))?;
        Ok(self.exec.measure_reset(anc)?)
    }

    /// `query_pair`: three-outcome PVM onto `(|a⟩ ± |b⟩)/√2` and the rest.
    ///
    /// The basis change `V` maps `(|a⟩+|b⟩)/√2` to `|r⟩` and `(|a⟩−|b⟩)/√2`
    /// to `±|r ⊕ e_p⟩`, where `p` is the lowest bit in which `a` and `b`
    /// differ. Two flag gates copy those basis states onto the ancillas.
    /// `V†` is applied lazily by the next operation on the sketch.
    pub fn query_pair(&mut self, a: SketchElement, b: SketchElement) -> Result<PairQuery, SketchError> {
        self.check(a)?;
        self.check(b)?;
        if a == b {
            return Err(SketchError::SameElement);
        }
        self.settle()?;
        let d = a ^ b;
        let p = d.trailing_zeros() as usize;
        let s = if a >> p & 1 == 1 { a ^ (d & !(1 << p)) } else { a };
        let r = s & !(1u64 << p);

        self.fan(p, d)?;
        self.exec.apply(&GateOp::H(p))?;
        let (anc0, anc1) = self.ancillas();
        self.exec.apply(&GateOp::mcx(self.polarity(r), anc0))?;
        self.exec.apply(&GateOp::mcx(self.polarity(r | 1 << p), anc1))?;
        self.pending_restore = Some((p, d));

        let p_plus = self.exec.one_probability(anc0)?;
        let p_minus = self.exec.one_probability(anc1)?;
        let plus = self.exec.measure_reset(anc0)?;
        let minus = self.exec.measure_reset(anc1)?;
        let outcome = match (plus, minus) {
            (true, _) => PvmOutcome::Plus,
            (false, true) => PvmOutcome::Minus,
            (false, false) => PvmOutcome::Zero,
        };
        Ok(PairQuery { outcome, p_plus, p_minus })
    }

    /// Swaps the amplitudes of `|a⟩` and `|b⟩` using the first ancilla.
    pub fn update_transposition(&mut self, a: SketchElement, b: SketchElement) -> Result<(), SketchError> {
        self.check(a)?;
        self.check(b)?;
        if a == b {
            return Err(SketchError::SameElement);
        }
        self.settle()?;
        let k = self.k;
        let anc = k;
        let d = a ^ b;
        let all_ones: Vec<Control> = (0..k).map(Control::one).collect();
        let flips = |mask: u64, ex: &mut Executor| -> Result<(), CircuitError> {
            for i in 0..k {
                if mask >> i & 1 == 1 {
                    ex.apply(&GateOp::X(i))?;
                }
            }
            Ok(())
        };
        let full = (1u64 << k) - 1;
        let cx_layer = |ex: &mut Executor| -> Result<(), CircuitError> {
            for i in 0..k {
                if d >> i & 1 == 1 {
                    ex.apply(&GateOp::Cx { control: anc, target: i })?;
                }
            }
            Ok(())
        };

        self.exec.apply(&GateOp::H(anc))?;
        cx_layer(&mut self.exec)?;
        flips(!a & full, &mut self.exec)?;
        self.exec.apply(&GateOp::mcx(all_ones.clone(), anc))?;
        // inner layer X^{a_i⊕1} X^{b_i⊕1} collapses to X^{a_i⊕b_i}
        flips(d, &mut self.exec)?;
        self.exec.apply(&GateOp::mcx(all_ones, anc))?;
        flips(!b & full, &mut self.exec)?;
        cx_layer(&mut self.exec)?;
        self.exec.apply(&GateOp::H(anc))?;
        Ok(())
    }

    /// `update`: applies the transpositions in list order.
    pub fn update(&mut self, transpositions: &[(SketchElement, SketchElement)]) -> Result<(), SketchError> {
        for &(a, b) in transpositions {
            self.update_transposition(a, b)?;
        }
        Ok(())
    }

    /// X on sketch qubit `target` conditioned on the other qubits listed in
    /// `controls`, as a program slot that only fires when `enabled`.
    pub fn conditional_flip(&mut self, controls: Vec<Control>, target: usize, enabled: bool) -> Result<(), SketchError> {
        self.settle()?;
        let op = GateOp::mcx(controls, target);
        if target >= self.k || op.qubits().iter().any(|&q| q >= self.k) {
            return Err(SketchError::Circuit(CircuitError::Domain("flip must stay inside the sketch register".into())));
        }
        self.exec.apply_if(&op, enabled)?;
        Ok(())
    }

    /// Applies a single gate on the sketch register (e.g. state preparation).
    pub fn apply(&mut self, op: &GateOp) -> Result<(), SketchError> {
        self.settle()?;
        self.exec.apply(op)?;
        Ok(())
    }
}
