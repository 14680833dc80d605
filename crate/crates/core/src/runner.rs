//! Shot runners for the HM sketch and the classical sampling baseline, plus
//! the exact outcome distribution by walking the null branch.
//!
//! Sketch elements are `v | label << L | parity << (L + 1)` with `L = log₂ n`.

use num_complex::Complex64;
use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{CircuitLevel, MeasureMode, Tally};
use crate::instance::{Alpha, Case, HmInstance, SourceError, StreamUpdate, UpdateSource};
use crate::rng::SimRng;
use crate::sketch::{PairSketch, SketchError};
use crate::statevector::{Control, GateOp, PvmOutcome, QuantumState, StateError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Yes,
    No,
    Null,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SketchOutcome {
    pub verdict: Verdict,
    /// 1-based index of the measurement that decided the shot, or the total
    /// number of measurements for a null outcome. Edges for the classical run.
    pub terminating_step: u64,
}

impl SketchOutcome {
    /// `None` for a null verdict.
    pub fn is_correct(&self, case: Case) -> Option<bool> {
        match self.verdict {
            Verdict::Yes => Some(case == Case::Yes),
            Verdict::No => Some(case == Case::No),
            Verdict::Null => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutcomeDistribution {
    pub p_correct: f64,
    pub p_wrong: f64,
    pub p_null: f64,
}

impl OutcomeDistribution {
    pub fn new(p_correct: f64, p_wrong: f64, p_null: f64) -> Result<Self, RunError> {
        let d = OutcomeDistribution { p_correct, p_wrong, p_null };
        let ok = [p_correct, p_wrong, p_null].iter().all(|p| (-1e-12..=1.0 + 1e-12).contains(p))
            && (p_correct + p_wrong + p_null - 1.0).abs() <= 1e-10;
        if !ok {
            return Err(RunError::Distribution(d));
        }
        Ok(d)
    }

    pub fn gap(&self) -> f64 {
        self.p_correct - self.p_wrong
    }

    /// `γ·self + (1−γ)·other`.
    pub fn mix(&self, gamma: f64, other: &OutcomeDistribution) -> OutcomeDistribution {
        let m = |a: f64, b: f64| gamma * a + (1.0 - gamma) * b;
        OutcomeDistribution {
            p_correct: m(self.p_correct, other.p_correct),
            p_wrong: m(self.p_wrong, other.p_wrong),
            p_null: m(self.p_null, other.p_null),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RunError {
    #[error("stream: {0}")]
    Source(#[from] SourceError),
    #[error("protocol: {0}")]
    Protocol(String),
    #[error(transparent)]
    Sketch(#[from] SketchError),
    #[error("{0}")]
    Domain(String),
    #[error("probabilities {0:?} do not form a distribution")]
    Distribution(OutcomeDistribution),
}

impl From<StateError> for RunError {
    fn from(e: StateError) -> Self {
        RunError::Sketch(e.into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShotConfig {
    pub noise_p: f64,
    /// Defaults to physical when noisy and logical otherwise.
    pub level: Option<CircuitLevel>,
}

impl ShotConfig {
    pub fn noiseless() -> Self {
        ShotConfig { noise_p: 0.0, level: None }
    }

    pub fn noisy(p: f64) -> Self {
        ShotConfig { noise_p: p, level: None }
    }

    pub fn effective_level(&self) -> CircuitLevel {
        self.level.unwrap_or(if self.noise_p > 0.0 { CircuitLevel::Physical } else { CircuitLevel::Logical })
    }
}

/// The four PVM label pairs per edge, in the order they are tried.
pub const PAIR_ORDER: [(u64, u64); 4] = [(0, 0), (0, 1), (1, 0), (1, 1)];

pub fn hm_element(v: u64, label: u64, parity: u64, log_n: u32) -> u64 {
    v | label << log_n | parity << (log_n + 1)
}

fn log_n_of(n: u64) -> Result<u32, RunError> {
    if n < 4 || !n.is_power_of_two() {
        return Err(RunError::Domain(format!("n = {n} must be a power of two ≥ 4")));
    }
    Ok(n.trailing_zeros())
}

/// One live HM sketch consuming a vertices-first stream.
#[derive(Debug, Clone)]
pub struct HmSketch {
    n: u64,
    log_n: u32,
    sketch: PairSketch,
    seen_edge: bool,
    measurements: u64,
    outcome: Option<SketchOutcome>,
}

impl HmSketch {
    /// Allocates the register and prepares `Σ_{v,b} |v, 0, b⟩ / √(2n)`.
    pub fn new(n: u64, cfg: &ShotConfig, rng: SimRng) -> Result<Self, RunError> {
        let log_n = log_n_of(n)?;
        let l = log_n as usize;
        let mut sketch = PairSketch::new(l + 2, cfg.effective_level(), cfg.noise_p, rng)?;
        for q in (0..l).chain([l + 1]) {
            sketch.apply(&GateOp::H(q))?;
        }
        Ok(HmSketch { n, log_n, sketch, seen_edge: false, measurements: 0, outcome: None })
    }

    /// Starts from an arbitrary sketch state instead of the uniform one.
    pub fn with_state(n: u64, cfg: &ShotConfig, rng: SimRng, amps: &[Complex64]) -> Result<Self, RunError> {
        let log_n = log_n_of(n)?;
        let mut sketch = PairSketch::new(log_n as usize + 2, cfg.effective_level(), cfg.noise_p, rng)?;
        sketch.load_sketch_amplitudes(amps)?;
        Ok(HmSketch { n, log_n, sketch, seen_edge: false, measurements: 0, outcome: None })
    }

    pub fn sketch(&self) -> &PairSketch {
        &self.sketch
    }

    pub fn sketch_mut(&mut self) -> &mut PairSketch {
        &mut self.sketch
    }

    pub fn tally(&self) -> &Tally {
        self.sketch.tally()
    }

    pub fn outcome(&self) -> Option<SketchOutcome> {
        self.outcome
    }

    /// Feeds one update. Returns the outcome once the shot has decided.
    pub fn process(&mut self, update: StreamUpdate) -> Result<Option<SketchOutcome>, RunError> {
        if self.outcome.is_some() {
            return Err(RunError::Protocol("update after the shot terminated".into()));
        }
        let l = self.log_n as usize;
        match update {
            StreamUpdate::Vertex { v, label } => {
                if self.seen_edge {
                    return Err(RunError::Protocol(format!("vertex {v} arrived after an edge")));
                }
                self.check_vertex(v)?;
                let controls = (0..l).map(|i| Control { qubit: i, on: v >> i & 1 == 1 }).collect();
                self.sketch.conditional_flip(controls, l, label)?;
            }
            StreamUpdate::Edge { u, v, label } => {
                self.seen_edge = true;
                self.check_vertex(u)?;
                self.check_vertex(v)?;
                if u == v {
                    return Err(RunError::Protocol(format!("edge ({u}, {v}) is a self-loop")));
                }
                for (a, b) in PAIR_ORDER {
                    let ea = hm_element(u, a, a ^ b, self.log_n);
                    let eb = hm_element(v, b, a ^ b, self.log_n);
                    self.measurements += 1;
                    let verdict = match self.sketch.query_pair(ea, eb)?.outcome {
                        PvmOutcome::Plus if a ^ b ^ u64::from(label) == 0 => Verdict::Yes,
                        PvmOutcome::Plus => Verdict::No,
                        PvmOutcome::Minus => Verdict::Null,
                        PvmOutcome::Zero => continue,
                    };
                    return Ok(self.finish(verdict));
                }
            }
            StreamUpdate::End => return Ok(self.finish(Verdict::Null)),
        }
        Ok(None)
    }

    fn finish(&mut self, verdict: Verdict) -> Option<SketchOutcome> {
        self.outcome = Some(SketchOutcome { verdict, terminating_step: self.measurements });
        self.outcome
    }

    fn check_vertex(&self, v: u64) -> Result<(), RunError> {
        if v >= self.n {
            return Err(RunError::Protocol(format!("vertex {v} out of range for n = {}", self.n)));
        }
        Ok(())
    }
}

/// Runs one quantum shot, pulling updates until the sketch decides.
pub fn run_quantum_shot(source: &mut dyn UpdateSource, cfg: &ShotConfig, rng: SimRng) -> Result<SketchOutcome, RunError> {
    let mut hm = HmSketch::new(source.n(), cfg, rng)?;
    loop {
        let update = source.next_update()?;
        if let Some(outcome) = hm.process(update)? {
            return Ok(outcome);
        }
    }
}

/// An instance whose run never terminates early under post-selection:
/// every label is 1 so every vertex slot fires.
pub fn worst_case_instance(n: u64) -> Result<HmInstance, RunError> {
    let mut inst = HmInstance::generate(n, Alpha::QUARTER, Case::Yes, 0).map_err(|e| RunError::Domain(e.to_string()))?;
    inst.x = vec![true; n as usize];
    inst.z = vec![false; inst.edges.len()];
    Ok(inst)
}

/// Runs the whole stream with every measurement post-selected onto the null
/// branch (unnormalized), starting from `start` or the uniform sketch state.
pub fn run_postselected(
    instance: &HmInstance,
    level: CircuitLevel,
    start: Option<&[Complex64]>,
) -> Result<HmSketch, RunError> {
    let cfg = ShotConfig { noise_p: 0.0, level: Some(level) };
    let rng = crate::rng::rng_from_seed(0);
    let mut hm = match start {
        Some(amps) => HmSketch::with_state(instance.n, &cfg, rng, amps)?,
        None => HmSketch::new(instance.n, &cfg, rng)?,
    };
    hm.sketch_mut().set_measure_mode(MeasureMode::PostselectZero);
    for update in instance.to_stream() {
        hm.process(update)?;
    }
    Ok(hm)
}

fn sketch_basis_state(log_n: u32, index: usize) -> Result<QuantumState, RunError> {
    Ok(QuantumState::basis(log_n as usize + 2, index)?)
}

fn apply_labels(state: &mut QuantumState, instance: &HmInstance) -> Result<(), RunError> {
    let l = instance.log_n() as usize;
    for (v, &label) in instance.x.iter().enumerate() {
        if label {
            let controls = (0..l).map(|i| Control { qubit: i, on: v >> i & 1 == 1 }).collect();
            state.apply(&GateOp::mcx(controls, l))?;
        }
    }
    Ok(())
}

/// Raw `(correct, wrong, null)` weights of the measurement chain started
/// from `state` (after the label updates).
fn chain(instance: &HmInstance, mut state: QuantumState) -> Result<(f64, f64, f64), RunError> {
    let l = instance.log_n();
    let (mut correct, mut wrong, mut null) = (0.0, 0.0, 0.0);
    let mut w = 1.0;
    for (&(u, v), &z) in instance.edges.iter().zip(&instance.z) {
        for (a, b) in PAIR_ORDER {
            let ea = hm_element(u, a, a ^ b, l) as usize;
            let eb = hm_element(v, b, a ^ b, l) as usize;
            let (plus, minus, zero) = state.pvm_probabilities(ea, eb)?;
            let says_yes = a ^ b ^ u64::from(z) == 0;
            if says_yes == (instance.case == Case::Yes) {
                correct += w * plus;
            } else {
                wrong += w * plus;
            }
            null += w * minus;
            w *= zero;
            if zero <= 0.0 {
                return Ok((correct, wrong, null));
            }
            state.project_pvm(ea, eb, PvmOutcome::Zero);
        }
    }
    Ok((correct, wrong, null + w))
}

/// Exact single-sketch outcome probabilities for the ideal circuit.
pub fn exact_distribution(instance: &HmInstance) -> Result<OutcomeDistribution, RunError> {
    let l = instance.log_n();
    let mut state = QuantumState::new(l as usize + 2)?;
    for q in (0..l as usize).chain([l as usize + 1]) {
        state.apply(&GateOp::H(q))?;
    }
    apply_labels(&mut state, instance)?;
    let (c, w, n) = chain(instance, state)?;
    OutcomeDistribution::new(c, w, n)
}

/// Outcome probabilities when the sketch is maximally mixed.
pub fn mixed_distribution(instance: &HmInstance) -> Result<OutcomeDistribution, RunError> {
    let l = instance.log_n();
    let dim = 1usize << (l + 2);
    let (mut c, mut w, mut n) = (0.0, 0.0, 0.0);
    for i in 0..dim {
        let (ci, wi, ni) = chain(instance, sketch_basis_state(l, i)?)?;
        c += ci;
        w += wi;
        n += ni;
    }
    let d = dim as f64;
    OutcomeDistribution::new(c / d, w / d, n / d)
}

/// Global depolarization heuristic: the state is `γρ + (1−γ)I/2^m`.
pub fn depolarized_distribution(instance: &HmInstance, gamma: f64) -> Result<OutcomeDistribution, RunError> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(RunError::Domain(format!("gamma = {gamma} not in [0, 1]")));
    }
    let ideal = exact_distribution(instance)?;
    let mixed = mixed_distribution(instance)?;
    Ok(ideal.mix(gamma, &mixed))
}

/// Classical baseline: keep `k` uniformly chosen vertex labels and answer on
/// the first edge with both endpoints kept; otherwise flip a fair coin.
pub fn run_classical_shot(source: &mut dyn UpdateSource, k: u64, rng: &mut SimRng) -> Result<SketchOutcome, RunError> {
    let n = source.n();
    if k > n {
        return Err(RunError::Domain(format!("sketch size {k} exceeds n = {n}")));
    }
    let mut chosen = vec![false; n as usize];
    for i in sample(rng, n as usize, k as usize) {
        chosen[i] = true;
    }
    let mut labels: std::collections::HashMap<u64, bool> = Default::default();
    let mut edges = 0u64;
    loop {
        match source.next_update()? {
            StreamUpdate::Vertex { v, label } => {
                if v >= n {
                    return Err(RunError::Protocol(format!("vertex {v} out of range")));
                }
                if chosen[v as usize] {
                    labels.insert(v, label);
                }
            }
            StreamUpdate::Edge { u, v, label } => {
                edges += 1;
                if let (Some(&xu), Some(&xv)) = (labels.get(&u), labels.get(&v)) {
                    let verdict = if xu ^ xv == label { Verdict::Yes } else { Verdict::No };
                    return Ok(SketchOutcome { verdict, terminating_step: edges });
                }
            }
            StreamUpdate::End => {
                let verdict = if rng.gen::<bool>() { Verdict::Yes } else { Verdict::No };
                return Ok(SketchOutcome { verdict, terminating_step: edges });
            }
        }
    }
}

/// Outcome counts over many shots.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotCounts {
    pub yes: u64,
    pub no: u64,
    pub null: u64,
    pub aborted: u64,
}

impl ShotCounts {
    pub fn record(&mut self, outcome: &SketchOutcome) {
        match outcome.verdict {
            Verdict::Yes => self.yes += 1,
            Verdict::No => self.no += 1,
            Verdict::Null => self.null += 1,
        }
    }

    pub fn completed(&self) -> u64 {
        self.yes + self.no + self.null
    }

    /// `(correct, wrong, null)` counts for an instance of the given case.
    pub fn by_correctness(&self, case: Case) -> (u64, u64, u64) {
        match case {
            Case::Yes => (self.yes, self.no, self.null),
            Case::No => (self.no, self.yes, self.null),
        }
    }

    pub fn merge(&mut self, other: &ShotCounts) {
        self.yes += other.yes;
        self.no += other.no;
        self.null += other.null;
        self.aborted += other.aborted;
    }
}
