use std::fs::{self, File};
use std::io::{self, Write};
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use clap::Args;
use hm_core::wire::{LogSink, ServerConfig, StreamServer, WriterLog};
use hm_core::Case;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{domain, usage, CliError, Result};
use crate::{config, instance};

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case", deny_unknown_fields)]
pub struct ServeArgs {
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long)]
    pub alpha: Option<String>,
    #[arg(long)]
    pub case: Option<Case>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Serve this archived instance instead of generating one.
    #[arg(long)]
    pub instance: Option<PathBuf>,
    /// Archive the served instance here before listening.
    #[arg(long)]
    pub save_instance: Option<PathBuf>,
    #[arg(long)]
    pub host: Option<String>,
    /// 0 picks a free port; the chosen address is announced on stdout.
    #[arg(long)]
    pub port: Option<u16>,
    /// Session log as JSON lines; stdout when absent.
    #[arg(long)]
    pub log: Option<PathBuf>,
    /// Idle seconds before a session is dropped.
    #[arg(long)]
    pub idle_timeout: Option<u64>,
}

#[derive(Args, Debug)]
pub struct ServeCmd {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub args: ServeArgs,
}

pub fn cmd_serve(cmd: ServeCmd) -> Result<()> {
    let a = config::merge(&cmd.args, cmd.config.as_deref())?;
    let inst = instance::resolve(
        a.instance.as_deref(),
        a.n.unwrap_or(instance::DEFAULT_N),
        a.alpha.as_deref().unwrap_or(instance::DEFAULT_ALPHA),
        a.case.unwrap_or(Case::Yes),
        a.seed.unwrap_or(0),
    )?;
    inst.validate().map_err(domain)?;
    if let Some(p) = &a.save_instance {
        fs::write(p, inst.to_json()).map_err(|e| usage(format!("cannot write {}: {e}", p.display())))?;
    }
    let sink: Arc<dyn LogSink> = match &a.log {
        Some(p) => {
            let f = File::create(p).map_err(|e| usage(format!("cannot create {}: {e}", p.display())))?;
            Arc::new(WriterLog::new(f))
        }
        None => Arc::new(WriterLog::new(io::stdout())),
    };
    let host = a.host.as_deref().unwrap_or("127.0.0.1");
    let port = a.port.unwrap_or(9000);
    let cfg = ServerConfig { read_timeout: Some(Duration::from_secs(a.idle_timeout.unwrap_or(30))) };
    let (n, edges) = (inst.n, inst.num_edges());
    let server = StreamServer::bind((host, port), Arc::new(inst), sink, cfg)
        .map_err(|e| CliError::Transport(format!("cannot listen on {host}:{port}: {e}")))?;
    let handle = server.shutdown_handle();
    ctrlc::set_handler(move || handle.trigger()).map_err(|e| domain(format!("signal handler: {e}")))?;
    let ready = json!({"event": "listening", "addr": server.local_addr().to_string(), "n": n, "num_edges": edges});
    {
        let mut out = io::stdout().lock();
        let _ = writeln!(out, "{ready}").and_then(|_| out.flush());
    }
    server.wait();
    Ok(())
}
