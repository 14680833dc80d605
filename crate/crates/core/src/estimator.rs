//! Fault-tolerant resource estimates for running the HM sketch copies on a
//! surface-code or bivariate-bicycle architecture with one CCZ factory.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{ceil_log2, toffoli_per_copy};
use crate::classical::{classical_lower_bound, classical_sketch_size};

pub const SURFACE_THRESHOLD: f64 = 0.01;
pub const DEFAULT_GAMMA: f64 = 0.9975;
pub const DEFAULT_COPIES: u64 = 7;

/// Logical qubits per two-gross module.
pub const LOGICAL_PER_MODULE: u64 = 12;
/// Data block, logical processing unit and code-code adapter.
pub const TWO_GROSS_MODULE_QUBITS: u64 = 576 + 158 + 34;
/// Largest n the two-gross code covers before switching to the 360-qubit block.
pub const TWO_GROSS_MAX_N: u64 = 10_000_000_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimateError {
    #[error("physical error rate {p} is not below the threshold {p_th}")]
    NoThreshold { p: f64, p_th: f64 },
    #[error("{0}")]
    Domain(String),
    #[error("factory config: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CodeFamily {
    Surface,
    TwoGross,
    Bb360,
}

impl std::str::FromStr for CodeFamily {
    type Err = EstimateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "surface" => Ok(CodeFamily::Surface),
            "two-gross" => Ok(CodeFamily::TwoGross),
            "bb360" => Ok(CodeFamily::Bb360),
            _ => Err(EstimateError::Domain(format!("unknown code family '{s}'"))),
        }
    }
}

impl std::fmt::Display for CodeFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CodeFamily::Surface => "surface",
            CodeFamily::TwoGross => "two-gross",
            CodeFamily::Bb360 => "bb360",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistanceRule {
    /// `⌈2 log₁₀(1/ε) / log₁₀(p_th/p)⌉`.
    #[default]
    Fitted,
    /// `⌈2 (1 + log₁₀(1/ε)) / log₁₀(p_th/p)⌉`.
    WithOffset,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CodeSpec {
    pub family: CodeFamily,
    pub p: f64,
    pub p_th: f64,
    pub distance_rule: DistanceRule,
}

impl CodeSpec {
    pub fn new(family: CodeFamily, p: f64) -> Self {
        CodeSpec { family, p, p_th: SURFACE_THRESHOLD, distance_rule: DistanceRule::Fitted }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceFactory {
    pub p: f64,
    pub qubits: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfidelityFactory {
    /// Applies to targets at or above this infidelity.
    pub min_infidelity: f64,
    pub qubits: u64,
}

/// Factory footprints, including their adapters. These are configuration,
/// not derived quantities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactoryConfig {
    /// Surface-code factories by physical error rate; the nearest rate in
    /// log scale is used.
    pub surface: Vec<SurfaceFactory>,
    /// Factories for the bivariate-bicycle layouts by CCZ infidelity target.
    pub bivariate_bicycle: Vec<InfidelityFactory>,
    /// Module size of the 360-qubit block relative to a two-gross module.
    pub bb360_module_scale: f64,
}

impl Default for FactoryConfig {
    fn default() -> Self {
        FactoryConfig {
            surface: vec![SurfaceFactory { p: 1e-3, qubits: 16_500 }, SurfaceFactory { p: 1e-4, qubits: 12_400 }],
            bivariate_bicycle: vec![
                InfidelityFactory { min_infidelity: 1e-14, qubits: 14_400 },
                InfidelityFactory { min_infidelity: 1e-18, qubits: 15_500 },
                InfidelityFactory { min_infidelity: 0.0, qubits: 25_300 },
            ],
            bb360_module_scale: 360.0 / 288.0,
        }
    }
}

impl FactoryConfig {
    pub fn from_json(text: &str) -> Result<Self, EstimateError> {
        let cfg: FactoryConfig = serde_json::from_str(text).map_err(|e| EstimateError::Config(e.to_string()))?;
        if cfg.surface.is_empty() || cfg.bivariate_bicycle.is_empty() {
            return Err(EstimateError::Config("both factory tables need at least one entry".into()));
        }
        if !(cfg.bb360_module_scale > 0.0) {
            return Err(EstimateError::Config("bb360_module_scale must be positive".into()));
        }
        Ok(cfg)
    }

    pub fn surface_factory(&self, p: f64) -> u64 {
        self.surface
            .iter()
            .min_by(|a, b| (a.p.ln() - p.ln()).abs().total_cmp(&(b.p.ln() - p.ln()).abs()))
            .map_or(0, |f| f.qubits)
    }

    pub fn bb_factory(&self, infidelity: f64) -> u64 {
        let mut table = self.bivariate_bicycle.clone();
        table.sort_by(|a, b| b.min_infidelity.total_cmp(&a.min_infidelity));
        table
            .iter()
            .find(|f| infidelity >= f.min_infidelity)
            .or(table.last())
            .map_or(0, |f| f.qubits)
    }

    pub fn bb360_module_qubits(&self) -> u64 {
        (TWO_GROSS_MODULE_QUBITS as f64 * self.bb360_module_scale).round() as u64
    }
}

/// `copies · (2(⌈log₂n⌉ + 2) − 1)`: sketch qubits plus workspace per copy.
pub fn logical_qubits(n: u64, copies: u64) -> u64 {
    copies * (2 * (u64::from(ceil_log2(n)) + 2) - 1)
}

/// Required CCZ infidelity `(1 − γ) / N`, with `N` the Toffolis of one copy.
pub fn ccz_infidelity_target(n: u64, gamma: f64) -> f64 {
    (1.0 - gamma) / toffoli_per_copy(n) as f64
}

pub fn surface_distance(infidelity: f64, p: f64, p_th: f64, rule: DistanceRule) -> Result<u32, EstimateError> {
    if !(p > 0.0 && p < p_th) {
        return Err(EstimateError::NoThreshold { p, p_th });
    }
    let digits = (1.0 / infidelity).log10();
    let num = match rule {
        DistanceRule::Fitted => 2.0 * digits,
        DistanceRule::WithOffset => 2.0 * (1.0 + digits),
    };
    let d = (num / (p_th / p).log10()).ceil();
    Ok((d as u32).max(3))
}

/// Data blocks at `2d²` physical qubits per logical qubit, plus the factory.
pub fn surface_physical_qubits(logical: u64, d: u32, factory: u64) -> u64 {
    logical * 2 * u64::from(d) * u64::from(d) + factory
}

pub fn modules(logical: u64) -> u64 {
    logical.div_ceil(LOGICAL_PER_MODULE)
}

pub fn two_gross_physical_qubits(logical: u64, factory: u64) -> u64 {
    modules(logical) * TWO_GROSS_MODULE_QUBITS + factory
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResourceEstimate {
    pub n: u64,
    pub family: CodeFamily,
    pub p: f64,
    pub copies: u64,
    pub logical_qubits: u64,
    pub toffoli_per_copy: u128,
    pub toffoli_total: u128,
    pub ccz_infidelity_target: f64,
    pub distance: Option<u32>,
    pub modules: Option<u64>,
    pub factory_qubits: u64,
    pub physical_qubits: u64,
    pub classical_best_known_bits: f64,
    pub classical_lower_bound_bits: f64,
    /// Module overheads of the 360-qubit block are not pinned down.
    pub approximate: bool,
}

pub fn estimate(
    n: u64,
    code: &CodeSpec,
    gamma: f64,
    copies: u64,
    factories: &FactoryConfig,
) -> Result<ResourceEstimate, EstimateError> {
    if n < 4 {
        return Err(EstimateError::Domain(format!("n must be at least 4, got {n}")));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(EstimateError::Domain(format!("gamma = {gamma} must lie in (0, 1)")));
    }
    if copies == 0 {
        return Err(EstimateError::Domain("copies must be positive".into()));
    }
    let logical = logical_qubits(n, copies);
    let eps = ccz_infidelity_target(n, gamma);
    let family = match code.family {
        CodeFamily::TwoGross if n > TWO_GROSS_MAX_N => CodeFamily::Bb360,
        f => f,
    };
    let (distance, mods, factory, physical) = match family {
        CodeFamily::Surface => {
            let d = surface_distance(eps, code.p, code.p_th, code.distance_rule)?;
            let f = factories.surface_factory(code.p);
            (Some(d), None, f, surface_physical_qubits(logical, d, f))
        }
        CodeFamily::TwoGross => {
            let f = factories.bb_factory(eps);
            (None, Some(modules(logical)), f, two_gross_physical_qubits(logical, f))
        }
        CodeFamily::Bb360 => {
            let f = factories.bb_factory(eps);
            let m = modules(logical);
            (None, Some(m), f, m * factories.bb360_module_qubits() + f)
        }
    };
    let nf = n as f64;
    Ok(ResourceEstimate {
        n,
        family,
        p: code.p,
        copies,
        logical_qubits: logical,
        toffoli_per_copy: toffoli_per_copy(n),
        toffoli_total: u128::from(copies) * toffoli_per_copy(n),
        ccz_infidelity_target: eps,
        distance,
        modules: mods,
        factory_qubits: factory,
        physical_qubits: physical,
        classical_best_known_bits: classical_sketch_size(nf, 0.25) as f64,
        classical_lower_bound_bits: classical_lower_bound(nf, 0.25, 1.0 / 3.0)
            .map_err(|e| EstimateError::Domain(e.to_string()))?,
        approximate: family == CodeFamily::Bb360,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClassicalReference {
    BestKnown,
    LowerBound,
}

/// First pair of consecutive rows where the quantum total drops below the
/// classical reference. Rows must be sorted by `n`.
pub fn break_even(rows: &[ResourceEstimate], reference: ClassicalReference) -> Option<(u64, u64)> {
    let classical = |r: &ResourceEstimate| match reference {
        ClassicalReference::BestKnown => r.classical_best_known_bits,
        ClassicalReference::LowerBound => r.classical_lower_bound_bits,
    };
    rows.windows(2)
        .find(|w| w[0].physical_qubits as f64 >= classical(&w[0]) && (w[1].physical_qubits as f64) < classical(&w[1]))
        .map(|w| (w[0].n, w[1].n))
}

/// Powers of ten `10^4 … 10^15`.
pub fn decade_grid() -> Vec<u64> {
    (4..=15).map(|e| 10u64.pow(e)).collect()
}
