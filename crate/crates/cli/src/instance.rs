use std::fs;
use std::path::Path;

use hm_core::{Alpha, Case, HmInstance};

use crate::error::{domain, usage, Result};

pub const DEFAULT_N: u64 = 32;
pub const DEFAULT_ALPHA: &str = "1/4";

/// Loads an archived instance, or generates one from the flags.
pub fn resolve(path: Option<&Path>, n: u64, alpha: &str, case: Case, seed: u64) -> Result<HmInstance> {
    match path {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| usage(format!("cannot read {}: {e}", p.display())))?;
            HmInstance::from_json(&text).map_err(|e| domain(format!("{}: {e}", p.display())))
        }
        None => {
            let alpha: Alpha = alpha.parse().map_err(domain)?;
            HmInstance::generate(n, alpha, case, seed).map_err(domain)
        }
    }
}
