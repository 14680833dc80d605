//! Multi-controlled X decomposition, Clifford+T lowering, gate tallies and
//! the gate executor shared by every sketch.
//!
//! An MCX with `c ≥ 3` controls is realized as a V-chain over `c − 2` clean
//! scratch qubits: `c − 2` relative-phase Toffolis compute the running AND,
//! one exact Toffoli hits the target, and the same relative-phase Toffolis
//! uncompute. Open (zero-polarity) controls are conjugated with X.
//!
//! The executor keeps two kinds of tallies. *Program* counts describe the
//! data-oblivious compiled circuit: a classically conditioned gate is counted
//! whether or not its condition fires, and each X conjugation of a control is
//! a conditioned slot. *Executed* counts only include gates that were applied.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::SimRng;
use crate::statevector::{Control, GateOp, QuantumState, StateError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CircuitError {
    #[error("MCX with {controls} controls needs {needed} scratch qubits, {available} available")]
    InsufficientAncillas { controls: usize, needed: usize, available: usize },
    #[error("{0}")]
    Domain(String),
    #[error(transparent)]
    State(#[from] StateError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CircuitLevel {
    /// MCX gates are applied as single permutations.
    Logical,
    /// MCX gates are compiled to {H, T, T†, CX, X} before execution.
    Physical,
}

/// Gate tallies by family. `t` includes T†. `mcx` is keyed by control count
/// and holds every multi-controlled X with at least two controls; a
/// single-control X is a CX.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateCounts {
    pub h: u64,
    pub x: u64,
    pub t: u64,
    pub cx: u64,
    pub rccx: u64,
    pub ry: u64,
    pub mcx: BTreeMap<usize, u64>,
}

impl GateCounts {
    pub fn record(&mut self, op: &GateOp) {
        match op {
            GateOp::H(_) => self.h += 1,
            GateOp::X(_) => self.x += 1,
            GateOp::T(_) | GateOp::Tdg(_) => self.t += 1,
            GateOp::Cx { .. } => self.cx += 1,
            GateOp::Mcx { controls, .. } if controls.len() == 1 => self.cx += 1,
            GateOp::Mcx { controls, .. } => *self.mcx.entry(controls.len()).or_default() += 1,
            GateOp::Rccx { .. } => self.rccx += 1,
            GateOp::Ry { .. } => self.ry += 1,
        }
    }

    pub fn of<'a>(ops: impl IntoIterator<Item = &'a GateOp>) -> Self {
        let mut c = GateCounts::default();
        ops.into_iter().for_each(|op| c.record(op));
        c
    }

    pub fn add(&mut self, other: &GateCounts) {
        self.h += other.h;
        self.x += other.x;
        self.t += other.t;
        self.cx += other.cx;
        self.rccx += other.rccx;
        self.ry += other.ry;
        for (&k, &v) in &other.mcx {
            *self.mcx.entry(k).or_default() += v;
        }
    }

    pub fn mcx_with_controls(&self, controls: usize) -> u64 {
        self.mcx.get(&controls).copied().unwrap_or(0)
    }

    pub fn mcx_total(&self) -> u64 {
        self.mcx.values().sum()
    }

    /// Componentwise `self ≤ other`.
    pub fn within(&self, other: &GateCounts) -> bool {
        self.h <= other.h
            && self.x <= other.x
            && self.t <= other.t
            && self.cx <= other.cx
            && self.rccx <= other.rccx
            && self.ry <= other.ry
            && self.mcx.iter().all(|(k, &v)| v <= other.mcx_with_controls(*k))
    }
}

/// Scratch qubits the V-chain needs for `c` controls.
pub fn scratch_needed(controls: usize) -> usize {
    controls.saturating_sub(2)
}

/// `decompose_mcx_on` with controls `0..k`, target `k`, scratch `k+1..`.
pub fn decompose_mcx(k: usize, ancilla_budget: usize) -> Result<Vec<GateOp>, CircuitError> {
    if k == 0 {
        return Err(CircuitError::Domain("MCX needs at least one control".into()));
    }
    let controls: Vec<Control> = (0..k).map(Control::one).collect();
    let scratch: Vec<usize> = (k + 1..k + 1 + ancilla_budget).collect();
    decompose_mcx_on(&controls, k, &scratch)
}

/// Rewrites an MCX into X, CX, exact CCX (`Mcx` with two controls) and
/// `Rccx`. Scratch qubits must be `|0⟩` on entry and are `|0⟩` on exit.
pub fn decompose_mcx_on(controls: &[Control], target: usize, scratch: &[usize]) -> Result<Vec<GateOp>, CircuitError> {
    let c = controls.len();
    if c == 0 {
        return Err(CircuitError::Domain("MCX needs at least one control".into()));
    }
    let needed = scratch_needed(c);
    if scratch.len() < needed {
        return Err(CircuitError::InsufficientAncillas { controls: c, needed, available: scratch.len() });
    }
    let open: Vec<GateOp> = controls.iter().filter(|q| !q.on).map(|q| GateOp::X(q.qubit)).collect();
    let q: Vec<usize> = controls.iter().map(|q| q.qubit).collect();

    let mut ops = open.clone();
    match c {
        1 => ops.push(GateOp::Cx { control: q[0], target }),
        2 => ops.push(GateOp::ccx(q[0], q[1], target)),
        _ => {
            let s = &scratch[..needed];
            let mut chain = vec![GateOp::Rccx { c0: q[0], c1: q[1], target: s[0] }];
            for i in 1..needed {
                chain.push(GateOp::Rccx { c0: s[i - 1], c1: q[i + 1], target: s[i] });
            }
            ops.extend(chain.iter().cloned());
            ops.push(GateOp::ccx(s[needed - 1], q[c - 1], target));
            ops.extend(chain.into_iter().rev());
        }
    }
    ops.extend(open);
    Ok(ops)
}

/// Clifford+T expansion of CCX and RCCX; other gates pass through.
pub fn lower(op: &GateOp) -> Vec<GateOp> {
    use GateOp::*;
    match op {
        Mcx { controls, target } if controls.len() == 2 && controls.iter().all(|c| c.on) => {
            let (a, b, t) = (controls[0].qubit, controls[1].qubit, *target);
            vec![
                H(t),
                Cx { control: b, target: t },
                Tdg(t),
                Cx { control: a, target: t },
                T(t),
                Cx { control: b, target: t },
                Tdg(t),
                Cx { control: a, target: t },
                T(b),
                T(t),
                H(t),
                Cx { control: a, target: b },
                T(a),
                Tdg(b),
                Cx { control: a, target: b },
            ]
        }
        Mcx { controls, target } if controls.len() == 1 && controls[0].on => {
            vec![Cx { control: controls[0].qubit, target: *target }]
        }
        Rccx { c0, c1, target: t } => vec![
            H(*t),
            T(*t),
            Cx { control: *c1, target: *t },
            Tdg(*t),
            Cx { control: *c0, target: *t },
            T(*t),
            Cx { control: *c1, target: *t },
            Tdg(*t),
            H(*t),
        ],
        other => vec![other.clone()],
    }
}

/// Full physical sequence for one logical gate.
pub fn compile_physical(op: &GateOp, scratch: &[usize]) -> Result<Vec<GateOp>, CircuitError> {
    let parts = match op {
        GateOp::Mcx { controls, target } => decompose_mcx_on(controls, *target, scratch)?,
        other => vec![other.clone()],
    };
    Ok(parts.iter().flat_map(lower).collect())
}

/// Physical cost of one logical gate. With `program = true` every control
/// carries an X-conjugation slot pair; otherwise only open controls do.
pub fn physical_cost(op: &GateOp, program: bool) -> GateCounts {
    let mut g = GateCounts::default();
    match op {
        GateOp::Mcx { controls, .. } => {
            let c = controls.len() as u64;
            let open = controls.iter().filter(|q| !q.on).count() as u64;
            g.x = 2 * if program { c } else { open };
            if c == 1 {
                g.cx = 1;
            } else {
                g.h = 4 * c - 6;
                g.t = 8 * c - 9;
                g.cx = 6 * c - 6;
            }
        }
        GateOp::Rccx { .. } => {
            g.h = 2;
            g.t = 4;
            g.cx = 3;
        }
        other => g.record(other),
    }
    g
}

pub fn ceil_log2(n: u64) -> u32 {
    if n <= 1 {
        0
    } else {
        64 - (n - 1).leading_zeros()
    }
}

fn hm_log(n: u64) -> Result<u64, CircuitError> {
    if n < 4 || !n.is_power_of_two() {
        return Err(CircuitError::Domain(format!("n = {n} must be a power of two ≥ 4")));
    }
    Ok(u64::from(n.trailing_zeros()))
}

/// Worst-case logical counts of one HM sketch run over a quarter-density
/// matching where every PVM lands in the null branch.
pub fn logical_counts_hm(n: u64) -> Result<GateCounts, CircuitError> {
    let l = hm_log(n)?;
    let mut g = GateCounts { h: 2 * n + l, cx: (2 * n - 1) * (l + 2), ..Default::default() };
    g.mcx.insert(l as usize, n);
    g.mcx.insert(l as usize + 2, 2 * n);
    Ok(g)
}

/// Physical counts of the same worst-case program after decomposition.
pub fn physical_counts_hm(n: u64) -> Result<GateCounts, CircuitError> {
    let logical = logical_counts_hm(n)?;
    let mut g = GateCounts { h: logical.h, cx: logical.cx, ..Default::default() };
    for (&c, &count) in &logical.mcx {
        let mut one = physical_cost(&GateOp::mcx((0..c).map(Control::one).collect(), c), true);
        one.h *= count;
        one.t *= count;
        one.cx *= count;
        one.x *= count;
        g.add(&one);
    }
    Ok(g)
}

/// Reference CNOT interval `[20n·log n + 8n − log n − 2, … + 2n]`.
pub fn physical_cnot_interval(n: u64) -> Result<(u64, u64), CircuitError> {
    let l = hm_log(n)?;
    let lo = 20 * n * l + 8 * n - l - 2;
    Ok((lo, lo + 2 * n))
}

/// Toffolis per copy when each `C^cX` costs `c − 1` Toffolis:
/// `3n⌈log₂n⌉ + 4n`.
pub fn toffoli_per_copy(n: u64) -> u128 {
    let l = u128::from(ceil_log2(n));
    let n = u128::from(n);
    3 * n * l + 4 * n
}

pub fn toffoli_count_hm(n: u64, copies: u64) -> u128 {
    u128::from(copies) * toffoli_per_copy(n)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub program: GateCounts,
    pub program_physical: GateCounts,
    pub executed: GateCounts,
    pub executed_physical: GateCounts,
}

/// Outcome of a measurement request when post-selection is on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasureMode {
    Sample,
    /// Project onto `|0⟩` without renormalizing, so a run is a linear map.
    PostselectZero,
}

/// Applies logical gates to a state at the configured level, injects
/// depolarizing noise after every executed CX, and tallies everything.
#[derive(Debug, Clone)]
pub struct Executor {
    state: QuantumState,
    level: CircuitLevel,
    scratch: Vec<usize>,
    noise_p: f64,
    mode: MeasureMode,
    rng: SimRng,
    tally: Tally,
}

impl Executor {
    pub fn new(state: QuantumState, level: CircuitLevel, scratch: Vec<usize>, noise_p: f64, rng: SimRng) -> Self {
        Executor { state, level, scratch, noise_p, mode: MeasureMode::Sample, rng, tally: Tally::default() }
    }

    pub fn state(&self) -> &QuantumState {
        &self.state
    }

    pub fn state_mut(&mut self) -> &mut QuantumState {
        &mut self.state
    }

    pub fn rng(&mut self) -> &mut SimRng {
        &mut self.rng
    }

    pub fn level(&self) -> CircuitLevel {
        self.level
    }

    pub fn tally(&self) -> &Tally {
        &self.tally
    }

    pub fn set_mode(&mut self, mode: MeasureMode) {
        self.mode = mode;
    }

    pub fn mode(&self) -> MeasureMode {
        self.mode
    }

    /// Counts `op` in the program tallies without applying it.
    pub fn reserve(&mut self, op: &GateOp) {
        self.tally.program.record(op);
        self.tally.program_physical.add(&physical_cost(op, true));
    }

    pub fn apply(&mut self, op: &GateOp) -> Result<(), CircuitError> {
        op.validate(self.state.num_qubits())?;
        self.reserve(op);
        self.tally.executed.record(op);
        match (self.level, op) {
            (CircuitLevel::Physical, GateOp::Mcx { .. } | GateOp::Rccx { .. }) => {
                let seq = compile_physical(op, &self.scratch)?;
                for prim in &seq {
                    self.tally.executed_physical.record(prim);
                    self.primitive(prim)?;
                }
            }
            _ => {
                self.tally.executed_physical.add(&physical_cost(op, false));
                self.primitive(op)?;
            }
        }
        Ok(())
    }

    /// Applies `op` when `enabled`, otherwise only reserves its program slot.
    pub fn apply_if(&mut self, op: &GateOp, enabled: bool) -> Result<(), CircuitError> {
        if enabled {
            self.apply(op)
        } else {
            self.reserve(op);
            Ok(())
        }
    }

    fn primitive(&mut self, op: &GateOp) -> Result<(), CircuitError> {
        self.state.apply(op)?;
        if let GateOp::Cx { control, target } = op {
            if self.noise_p > 0.0 {
                self.state.inject_depolarizing(*control, *target, self.noise_p, &mut self.rng)?;
            }
        }
        Ok(())
    }

    pub fn one_probability(&self, q: usize) -> Result<f64, CircuitError> {
        Ok(self.state.qubit_one_probability(q)?)
    }

    /// Z-measures `q` and leaves it in `|0⟩`.
    pub fn measure_reset(&mut self, q: usize) -> Result<bool, CircuitError> {
        match self.mode {
            MeasureMode::Sample => Ok(self.state.measure_and_reset(q, &mut self.rng)?),
            MeasureMode::PostselectZero => {
                self.state.qubit_one_probability(q)?;
                let bit = 1usize << q;
                let amps = self.state.amplitudes().to_vec();
                let kept = amps
                    .into_iter()
                    .enumerate()
                    .map(|(i, a)| if i & bit != 0 { num_complex::Complex64::new(0.0, 0.0) } else { a })
                    .collect();
                self.state = QuantumState::from_amplitudes(kept)?;
                Ok(false)
            }
        }
    }
}
