use std::path::PathBuf;
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use clap::Args;
use hm_core::circuit::CircuitLevel;
use hm_core::instance::{LocalStream, SourceError, UpdateSource};
use hm_core::rng::{derive_seed, rng_from_seed};
use hm_core::runner::{exact_distribution, run_quantum_shot, RunError, ShotConfig, ShotCounts};
use hm_core::stats::{wilson_interval, Z95};
use hm_core::wire::{ClientError, StreamClient};
use hm_core::{Case, HmInstance, OutcomeDistribution, SketchOutcome};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, usage, CliError, Result};
use crate::{config, instance, output};

pub const DEFAULT_ENDPOINT: &str = "127.0.0.1:9000";
const CONNECT_TIMEOUT: Duration = Duration::from_secs(10);

/// Flags of `hmq run`; every key may also come from `--config`.
#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case", deny_unknown_fields)]
pub struct RunArgs {
    /// Graph size (power of two). Describes the served instance for scoring.
    #[arg(long)]
    pub n: Option<u64>,
    /// Matching density as `num/den`.
    #[arg(long)]
    pub alpha: Option<String>,
    #[arg(long)]
    pub case: Option<Case>,
    /// Instance seed; shot `i` uses a seed derived from it and `i`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Archived instance JSON instead of `n`/`alpha`/`case`/`seed`.
    #[arg(long)]
    pub instance: Option<PathBuf>,
    #[arg(long)]
    pub shots: Option<u64>,
    /// Two-qubit depolarizing probability after every CX.
    #[arg(long)]
    pub noise_p: Option<f64>,
    /// `logical` or `physical`; defaults to physical when noisy.
    #[arg(long)]
    pub level: Option<String>,
    #[arg(long, env = "HM_STREAM_ENDPOINT")]
    pub endpoint: Option<String>,
    /// Stream in-process instead of over the network.
    #[arg(long)]
    pub local: bool,
    /// Also report the exact outcome distribution.
    #[arg(long)]
    pub exact: bool,
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Connection attempts per shot after the first one fails.
    #[arg(long)]
    pub retries: Option<u32>,
    /// Results file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct ExperimentConfig {
    pub n: u64,
    pub alpha: String,
    pub case: Case,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub instance: Option<PathBuf>,
    pub shots: u64,
    pub noise_p: f64,
    pub level: CircuitLevel,
    pub endpoint: String,
    pub local: bool,
    pub exact: bool,
    pub jobs: usize,
    pub retries: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn resolve(args: RunArgs) -> Result<Self> {
        let shots = args.shots.unwrap_or(2000);
        if shots == 0 {
            return Err(usage("--shots must be at least 1"));
        }
        let noise_p = args.noise_p.unwrap_or(0.0);
        if !(0.0..=1.0).contains(&noise_p) {
            return Err(usage(format!("--noise-p {noise_p} is not a probability")));
        }
        let level = match args.level.as_deref() {
            None if noise_p > 0.0 => CircuitLevel::Physical,
            None | Some("logical") => CircuitLevel::Logical,
            Some("physical") => CircuitLevel::Physical,
            Some(other) => return Err(usage(format!("--level must be logical or physical, not '{other}'"))),
        };
        let jobs = args.jobs.unwrap_or(1);
        if jobs == 0 {
            return Err(usage("--jobs must be at least 1"));
        }
        Ok(ExperimentConfig {
            n: args.n.unwrap_or(instance::DEFAULT_N),
            alpha: args.alpha.unwrap_or_else(|| instance::DEFAULT_ALPHA.into()),
            case: args.case.unwrap_or(Case::Yes),
            seed: args.seed.unwrap_or(0),
            instance: args.instance,
            shots,
            noise_p,
            level,
            endpoint: args.endpoint.unwrap_or_else(|| DEFAULT_ENDPOINT.into()),
            local: args.local,
            exact: args.exact,
            jobs,
            retries: args.retries.unwrap_or(3),
            out: args.out,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Estimate {
    fn of(k: u64, total: u64) -> Self {
        let (lo, hi) = wilson_interval(k, total, Z95);
        Estimate { value: if total == 0 { 0.0 } else { k as f64 / total as f64 }, lo, hi }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceDescriptor {
    pub n: u64,
    pub alpha: String,
    pub case: Case,
    pub seed: u64,
    pub num_edges: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counts {
    pub yes: u64,
    pub no: u64,
    pub null: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PHat {
    pub correct: Estimate,
    pub wrong: Estimate,
    pub null: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Noise {
    pub p: f64,
    pub level: CircuitLevel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub wall_ms: f64,
    pub unix_time: u64,
    pub version: String,
    pub jobs: usize,
}

/// Everything except `metadata` is a function of the config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Results {
    pub instance: InstanceDescriptor,
    pub mode: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
    pub shots: u64,
    pub completed: u64,
    pub aborted: u64,
    pub counts: Counts,
    pub p_hat: PHat,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact: Option<OutcomeDistribution>,
    pub seed: u64,
    pub noise: Noise,
    pub metadata: Metadata,
}

enum ShotError {
    /// Worth another connection.
    Transient(String),
    Fatal(CliError),
}

fn network_shot(cfg: &ExperimentConfig, shot: &ShotConfig, inst: &HmInstance, seed: u64) -> std::result::Result<SketchOutcome, ShotError> {
    let mut client = StreamClient::connect(cfg.endpoint.as_str(), CONNECT_TIMEOUT).map_err(|e| match e {
        ClientError::Handshake(m) => ShotError::Fatal(CliError::Transport(m)),
        other => ShotError::Transient(other.to_string()),
    })?;
    if (client.n(), client.num_edges()) != (inst.n, inst.num_edges()) {
        return Err(ShotError::Fatal(domain(format!(
            "server streams n = {} with {} edges, expected n = {} with {}; describe the served instance with --n/--alpha/--case/--seed or --instance",
            client.n(),
            client.num_edges(),
            inst.n,
            inst.num_edges()
        ))));
    }
    let outcome = run_quantum_shot(&mut client, shot, rng_from_seed(seed)).map_err(|e| match e {
        RunError::Source(SourceError::Transport(m)) => ShotError::Transient(m),
        RunError::Source(other) => ShotError::Fatal(CliError::Transport(other.to_string())),
        other => ShotError::Fatal(domain(other)),
    })?;
    // the verdict stands even if the server never hears about it
    if let Err(e) = client.report(&outcome) {
        eprintln!("result not delivered: {e}");
    }
    Ok(outcome)
}

/// Outcome of one shot, or `None` when every attempt hit a transport error.
fn one_shot(cfg: &ExperimentConfig, shot: &ShotConfig, inst: &HmInstance, i: u64) -> Result<Option<SketchOutcome>> {
    let seed = derive_seed(cfg.seed, i);
    if cfg.local {
        let out = run_quantum_shot(&mut LocalStream::new(inst), shot, rng_from_seed(seed)).map_err(domain)?;
        return Ok(Some(out));
    }
    let mut last = String::new();
    for _ in 0..=cfg.retries {
        match network_shot(cfg, shot, inst, seed) {
            Ok(out) => return Ok(Some(out)),
            Err(ShotError::Fatal(e)) => return Err(e),
            Err(ShotError::Transient(m)) => last = m,
        }
    }
    eprintln!("shot {i} aborted after {} attempts: {last}", cfg.retries + 1);
    Ok(None)
}

pub fn execute(cfg: &ExperimentConfig) -> Result<Results> {
    let started = Instant::now();
    let inst = instance::resolve(cfg.instance.as_deref(), cfg.n, &cfg.alpha, cfg.case, cfg.seed)?;
    let shot = ShotConfig { noise_p: cfg.noise_p, level: Some(cfg.level) };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cfg.jobs).build().map_err(domain)?;
    let counts = pool.install(|| {
        (0..cfg.shots)
            .into_par_iter()
            .map(|i| {
                let mut c = ShotCounts::default();
                match one_shot(cfg, &shot, &inst, i)? {
                    Some(out) => c.record(&out),
                    None => c.aborted += 1,
                }
                Ok(c)
            })
            .try_reduce(ShotCounts::default, |mut a, b| {
                a.merge(&b);
                Ok(a)
            })
    })?;
    if counts.completed() == 0 {
        return Err(CliError::Transport(format!("no shot reached {}", cfg.endpoint)));
    }
    let exact = if cfg.exact { Some(exact_distribution(&inst).map_err(domain)?) } else { None };
    let (c, w, nl) = counts.by_correctness(inst.case);
    let total = counts.completed();
    Ok(Results {
        instance: InstanceDescriptor {
            n: inst.n,
            alpha: inst.alpha.to_string(),
            case: inst.case,
            seed: inst.seed,
            num_edges: inst.num_edges(),
        },
        mode: if cfg.local { "local" } else { "network" }.into(),
        endpoint: (!cfg.local).then(|| cfg.endpoint.clone()),
        shots: cfg.shots,
        completed: total,
        aborted: counts.aborted,
        counts: Counts { yes: counts.yes, no: counts.no, null: counts.null },
        p_hat: PHat { correct: Estimate::of(c, total), wrong: Estimate::of(w, total), null: Estimate::of(nl, total) },
        exact,
        seed: cfg.seed,
        noise: Noise { p: cfg.noise_p, level: cfg.level },
        metadata: Metadata {
            wall_ms: started.elapsed().as_secs_f64() * 1e3,
            unix_time: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
            version: env!("CARGO_PKG_VERSION").into(),
            jobs: cfg.jobs,
        },
    })
}

#[derive(Args, Debug)]
pub struct RunCmd {
    /// Flat TOML file with the same keys as the flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Print the resolved config and exit.
    #[arg(long)]
    pub print_config: bool,
    #[command(flatten)]
    pub args: RunArgs,
}

pub fn cmd_run(cmd: RunCmd) -> Result<()> {
    let args = config::merge(&cmd.args, cmd.config.as_deref())?;
    let cfg = ExperimentConfig::resolve(args)?;
    if cmd.print_config {
        print!("{}", config::render(&cfg));
        return Ok(());
    }
    let results = execute(&cfg)?;
    if results.aborted > 0 {
        eprintln!("{} of {} shots aborted", results.aborted, results.shots);
    }
    let text = serde_json::to_string_pretty(&results).expect("results serialize") + "\n";
    output::emit(cfg.out.as_deref(), &text)
}
