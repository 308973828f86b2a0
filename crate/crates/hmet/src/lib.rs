//! Experiment harness for `hmet-core`: TOML configuration, seeded runs and
//! CSV output with a JSON manifest per run directory.

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;

use std::path::{Path, PathBuf};

pub use config::{Config, SchemeChoice};
pub use error::{HarnessError, Result};
pub use experiments::{Context, Options};

use output::{Provenance, RunDir};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Converge,
    Sweep,
    Timevary,
    DumpCodebook,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Converge => "converge",
            Command::Sweep => "sweep",
            Command::Timevary => "timevary",
            Command::DumpCodebook => "dump-codebook",
        }
    }
}

/// Name of the resolved-config echo inside every run directory.
pub const RESOLVED_CONFIG: &str = "config.resolved.toml";

/// Run `command` with a resolved config, writing everything under `out`.
/// Returns the manifest path.
pub fn execute(command: Command, cfg: Config, out: &Path, opts: Options) -> Result<PathBuf> {
    let provenance = Provenance {
        seed: cfg.seed,
        config_sha256: cfg.sha256(),
    };
    let mut run = RunDir::create(out, provenance)?;
    run.write_text(RESOLVED_CONFIG, &cfg.to_toml())?;
    let ctx = Context::new(cfg)?;
    match command {
        Command::Converge => {
            for r in experiments::converge(&ctx, &mut run, opts)? {
                let v = r.state.final_objective().unwrap_or(0.0);
                println!("{:<12} final objective {v:.6} bps/Hz", r.scheme.to_string());
            }
        }
        Command::Sweep => {
            for r in experiments::sweep(&ctx, &mut run, opts)? {
                println!(
                    "{:<12} eta {:<5} {:.6} bps/Hz",
                    r.scheme.to_string(),
                    r.eta,
                    r.final_objective
                );
            }
        }
        Command::Timevary => {
            let res = experiments::timevary(&ctx, &mut run, opts)?;
            for (j, s) in res.schemes.iter().enumerate() {
                println!("{:<12} mean sum rate {:.6} bps/Hz", s.to_string(), res.mean_rate(j));
            }
        }
        Command::DumpCodebook => {
            experiments::dump_codebook(&ctx, &mut run)?;
            println!("{} modes", ctx.codebook.mode_count());
        }
    }
    run.finish(command.as_str())
}
