use std::fs;
use std::path::PathBuf;

use clap::Args;
use hm_core::boosting::{max_tolerable_infidelity, min_copies, min_copies_with, noisy_failure, total_quantum_space, vote_success};
use hm_core::circuit::{logical_counts_hm, physical_cnot_interval, physical_counts_hm, toffoli_per_copy, CircuitLevel, GateCounts};
use hm_core::classical::{classical_lower_bound, classical_sketch_size};
use hm_core::estimator::{
    break_even, decade_grid, estimate, ClassicalReference, CodeFamily, CodeSpec, DistanceRule, FactoryConfig,
    DEFAULT_COPIES, DEFAULT_GAMMA, SURFACE_THRESHOLD,
};
use hm_core::runner::{depolarized_distribution, run_postselected, worst_case_instance};
use hm_core::{Case, OutcomeDistribution};

use crate::error::{domain, usage, Result};
use crate::output::{csv, emit};
use crate::parse;
use crate::run::Results;

pub const FIGURE2B_HEADER: [&str; 10] =
    ["n", "source", "noise_p", "gamma", "p_correct", "p_wrong", "p_null", "copies", "qubits_per_copy", "total_qubits"];
pub const COUNTS_HEADER: [&str; 13] = [
    "n", "space", "h", "cx", "mcx_l", "mcx_l2", "physical_t", "physical_h", "physical_cx", "physical_cx_lo",
    "physical_cx_hi", "toffoli_per_copy", "source",
];
pub const VOTE_HEADER: [&str; 7] = ["alpha", "target", "min_copies", "vote_success", "copies", "gamma", "noisy_failure"];
pub const INFIDELITY_HEADER: [&str; 5] = ["alpha", "k", "failure_budget", "vote_success", "max_infidelity"];
pub const BOUND_HEADER: [&str; 5] = ["n", "alpha", "epsilon", "best_known_bits", "lower_bound_bits"];
pub const ESTIMATE_HEADER: [&str; 15] = [
    "n", "code", "p", "copies", "logical_qubits", "toffoli_per_copy", "toffoli_total", "ccz_infidelity_target",
    "distance", "modules", "factory_qubits", "physical_qubits", "classical_best_known_bits",
    "classical_lower_bound_bits", "approximate",
];

const UNBOUNDED: &str = "unbounded";

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

#[derive(Args, Debug)]
pub struct Figure2bCmd {
    /// Results files written by `hmq run`.
    #[arg(long, num_args = 1..)]
    pub results: Vec<PathBuf>,
    /// Sizes for exact distributions.
    #[arg(long, value_parser = parse::count, value_delimiter = ',')]
    pub exact_n_list: Option<Vec<u64>>,
    /// Fidelities applied to the exact distributions.
    #[arg(long, value_parser = parse::real, value_delimiter = ',', default_value = "1")]
    pub gamma_list: Vec<f64>,
    #[arg(long, default_value = "1/4")]
    pub alpha: String,
    #[arg(long, default_value = "yes")]
    pub case: Case,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_parser = parse::real, default_value = "2/3")]
    pub target: f64,
    /// Largest number of copies tried before a row is marked unbounded.
    #[arg(long, default_value_t = 200)]
    pub k_max: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

struct Input {
    n: u64,
    source: &'static str,
    noise_p: Option<f64>,
    gamma: Option<f64>,
    dist: OutcomeDistribution,
}

fn figure_row(input: &Input, target: f64, k_max: u64) -> Vec<String> {
    let d = input.dist;
    let copies = min_copies_with(d.p_correct, d.p_wrong, target, k_max);
    let width = total_quantum_space(input.n, 1);
    vec![
        input.n.to_string(),
        input.source.into(),
        opt(input.noise_p),
        opt(input.gamma),
        d.p_correct.to_string(),
        d.p_wrong.to_string(),
        d.p_null.to_string(),
        copies.map_or(UNBOUNDED.into(), |k| k.to_string()),
        width.to_string(),
        copies.map_or(UNBOUNDED.into(), |k| total_quantum_space(input.n, k).to_string()),
    ]
}

pub fn cmd_figure2b(cmd: Figure2bCmd) -> Result<()> {
    let mut inputs = vec![];
    for path in &cmd.results {
        let text = fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
        let r: Results = serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
        let dist = OutcomeDistribution { p_correct: r.p_hat.correct.value, p_wrong: r.p_hat.wrong.value, p_null: r.p_hat.null.value };
        inputs.push(Input { n: r.instance.n, source: "measured", noise_p: Some(r.noise.p), gamma: None, dist });
    }
    for &n in cmd.exact_n_list.iter().flatten() {
        let alpha = cmd.alpha.parse().map_err(domain)?;
        let inst = hm_core::HmInstance::generate(n, alpha, cmd.case, cmd.seed).map_err(|e| domain(format!("n = {n}: {e}")))?;
        for &gamma in &cmd.gamma_list {
            let dist = depolarized_distribution(&inst, gamma).map_err(|e| domain(format!("n = {n}: {e}")))?;
            inputs.push(Input { n, source: "exact", noise_p: None, gamma: Some(gamma), dist });
        }
    }
    if inputs.is_empty() {
        return Err(usage("figure2b needs --results files or --exact-n-list"));
    }
    let rows: Vec<_> = inputs.iter().map(|i| figure_row(i, cmd.target, cmd.k_max)).collect();
    emit(cmd.out.as_deref(), &csv(&FIGURE2B_HEADER, &rows))
}

#[derive(Args, Debug)]
pub struct CountsCmd {
    #[arg(long, value_parser = parse::count, value_delimiter = ',', default_value = "4,8,16,32,64")]
    pub n_list: Vec<u64>,
    /// Tally the gates emitted by simulating the worst-case run instead of
    /// evaluating the closed forms.
    #[arg(long)]
    pub tally: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn counts_row(n: u64, logical: &GateCounts, physical: &GateCounts, source: &str) -> Result<Vec<String>> {
    let l = u64::from(n.trailing_zeros());
    let (lo, hi) = physical_cnot_interval(n).map_err(domain)?;
    Ok(vec![
        n.to_string(),
        (l + 2).to_string(),
        logical.h.to_string(),
        logical.cx.to_string(),
        logical.mcx_with_controls(l as usize).to_string(),
        logical.mcx_with_controls(l as usize + 2).to_string(),
        physical.t.to_string(),
        physical.h.to_string(),
        physical.cx.to_string(),
        lo.to_string(),
        hi.to_string(),
        toffoli_per_copy(n).to_string(),
        source.into(),
    ])
}

pub fn cmd_counts(cmd: CountsCmd) -> Result<()> {
    let mut rows = vec![];
    for &n in &cmd.n_list {
        let ctx = |e: &dyn std::fmt::Display| domain(format!("n = {n}: {e}"));
        let row = if cmd.tally {
            let inst = worst_case_instance(n).map_err(|e| ctx(&e))?;
            let logical = run_postselected(&inst, CircuitLevel::Logical, None).map_err(|e| ctx(&e))?;
            let physical = run_postselected(&inst, CircuitLevel::Physical, None).map_err(|e| ctx(&e))?;
            counts_row(n, &logical.tally().program, &physical.tally().program_physical, "tally")?
        } else {
            let logical = logical_counts_hm(n).map_err(|e| ctx(&e))?;
            let physical = physical_counts_hm(n).map_err(|e| ctx(&e))?;
            counts_row(n, &logical, &physical, "formula")?
        };
        rows.push(row);
    }
    emit(cmd.out.as_deref(), &csv(&COUNTS_HEADER, &rows))
}

#[derive(Args, Debug)]
pub struct VoteCmd {
    #[arg(long, value_parser = parse::real, value_delimiter = ',', default_value = "1/4")]
    pub alpha: Vec<f64>,
    #[arg(long, value_parser = parse::real, default_value = "2/3")]
    pub target: f64,
    /// Copies at which the noisy failure budget is evaluated.
    #[arg(long, default_value_t = DEFAULT_COPIES)]
    pub copies: u64,
    #[arg(long, value_parser = parse::real, default_value_t = DEFAULT_GAMMA)]
    pub gamma: f64,
    /// Emit the largest tolerable per-copy infidelity for k = 1..=k-max instead.
    #[arg(long)]
    pub infidelity: bool,
    #[arg(long, default_value_t = 15)]
    pub k_max: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn cmd_vote(cmd: VoteCmd) -> Result<()> {
    if cmd.copies == 0 || !(0.0..=1.0).contains(&cmd.gamma) {
        return Err(domain("need copies ≥ 1 and gamma in [0, 1]"));
    }
    let mut rows = vec![];
    for &alpha in &cmd.alpha {
        if !(alpha > 0.0 && alpha <= 0.25) {
            return Err(domain(format!("alpha = {alpha} must lie in (0, 1/4]")));
        }
        if cmd.infidelity {
            let budget = 1.0 - cmd.target;
            for k in 1..=cmd.k_max {
                let tol = max_tolerable_infidelity(k, alpha, budget);
                rows.push(vec![
                    alpha.to_string(),
                    k.to_string(),
                    budget.to_string(),
                    vote_success(k, alpha).to_string(),
                    if tol.feasible { tol.infidelity.to_string() } else { "infeasible".into() },
                ]);
            }
            continue;
        }
        let k = min_copies(alpha, cmd.target);
        rows.push(vec![
            alpha.to_string(),
            cmd.target.to_string(),
            k.map_or(UNBOUNDED.into(), |k| k.to_string()),
            opt(k.map(|k| vote_success(k, alpha))),
            cmd.copies.to_string(),
            cmd.gamma.to_string(),
            noisy_failure(cmd.copies, alpha, cmd.gamma).to_string(),
        ]);
    }
    let header: &[&str] = if cmd.infidelity { &INFIDELITY_HEADER } else { &VOTE_HEADER };
    emit(cmd.out.as_deref(), &csv(header, &rows))
}

#[derive(Args, Debug)]
pub struct BoundCmd {
    #[arg(long = "n", alias = "n-list", value_parser = parse::count, value_delimiter = ',', default_value = "1e6")]
    pub n: Vec<u64>,
    #[arg(long, value_parser = parse::real, default_value = "1/4")]
    pub alpha: f64,
    #[arg(long, value_parser = parse::real, default_value = "1/3")]
    pub epsilon: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn cmd_bound(cmd: BoundCmd) -> Result<()> {
    if !(cmd.alpha > 0.0 && cmd.alpha <= 0.25) {
        return Err(domain(format!("alpha = {} must lie in (0, 1/4]", cmd.alpha)));
    }
    let mut rows = vec![];
    for &n in &cmd.n {
        let nf = n as f64;
        let lower = classical_lower_bound(nf, cmd.alpha, cmd.epsilon).map_err(|e| domain(format!("n = {n}: {e}")))?;
        rows.push(vec![
            n.to_string(),
            cmd.alpha.to_string(),
            cmd.epsilon.to_string(),
            classical_sketch_size(nf, cmd.alpha).to_string(),
            lower.to_string(),
        ]);
    }
    emit(cmd.out.as_deref(), &csv(&BOUND_HEADER, &rows))
}

#[derive(Args, Debug)]
pub struct EstimateCmd {
    /// Graph sizes; the decades 1e4 to 1e15 when absent.
    #[arg(long, value_parser = parse::count, value_delimiter = ',')]
    pub n_list: Option<Vec<u64>>,
    /// surface, two-gross or bb360.
    #[arg(long, default_value = "surface")]
    pub code: CodeFamily,
    #[arg(long, value_parser = parse::real, default_value = "1e-3")]
    pub p: f64,
    #[arg(long, value_parser = parse::real, default_value_t = SURFACE_THRESHOLD)]
    pub p_th: f64,
    #[arg(long, value_parser = parse::real, default_value_t = DEFAULT_GAMMA)]
    pub gamma: f64,
    #[arg(long, default_value_t = DEFAULT_COPIES)]
    pub copies: u64,
    /// fitted or with-offset.
    #[arg(long, default_value = "fitted", value_parser = parse_rule)]
    pub distance_rule: DistanceRule,
    /// JSON factory footprints replacing the built-in ones.
    #[arg(long)]
    pub factory_config: Option<PathBuf>,
    /// Report where the quantum total first drops below each classical column.
    #[arg(long)]
    pub break_even: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_rule(s: &str) -> std::result::Result<DistanceRule, String> {
    match s {
        "fitted" => Ok(DistanceRule::Fitted),
        "with-offset" => Ok(DistanceRule::WithOffset),
        _ => Err(format!("'{s}' is not fitted or with-offset")),
    }
}

pub fn cmd_estimate(cmd: EstimateCmd) -> Result<()> {
    let factories = match &cmd.factory_config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| usage(format!("cannot read {}: {e}", p.display())))?;
            FactoryConfig::from_json(&text).map_err(|e| domain(format!("{}: {e}", p.display())))?
        }
        None => FactoryConfig::default(),
    };
    let spec = CodeSpec { family: cmd.code, p: cmd.p, p_th: cmd.p_th, distance_rule: cmd.distance_rule };
    let grid = cmd.n_list.clone().unwrap_or_else(decade_grid);
    let mut estimates = vec![];
    for &n in &grid {
        let e = estimate(n, &spec, cmd.gamma, cmd.copies, &factories).map_err(|e| domain(format!("n = {n}: {e}")))?;
        estimates.push(e);
    }
    let rows: Vec<_> = estimates
        .iter()
        .map(|e| {
            vec![
                e.n.to_string(),
                e.family.to_string(),
                e.p.to_string(),
                e.copies.to_string(),
                e.logical_qubits.to_string(),
                e.toffoli_per_copy.to_string(),
                e.toffoli_total.to_string(),
                format!("{:.6e}", e.ccz_infidelity_target),
                opt(e.distance),
                opt(e.modules),
                e.factory_qubits.to_string(),
                e.physical_qubits.to_string(),
                e.classical_best_known_bits.to_string(),
                format!("{:.6e}", e.classical_lower_bound_bits),
                e.approximate.to_string(),
            ]
        })
        .collect();
    if cmd.break_even {
        let mut sorted = estimates.clone();
        sorted.sort_by_key(|e| e.n);
        for (name, r) in [("best-known", ClassicalReference::BestKnown), ("lower-bound", ClassicalReference::LowerBound)] {
            match break_even(&sorted, r) {
                Some((lo, hi)) => eprintln!("break-even vs {name}: between n = {lo:e} and n = {hi:e}"),
                None => eprintln!("break-even vs {name}: not within the grid"),
            }
        }
    }
    emit(cmd.out.as_deref(), &csv(&ESTIMATE_HEADER, &rows))
}
