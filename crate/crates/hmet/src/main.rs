use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hmet::{execute, Command, Config, HarnessError, Options, SchemeChoice};

#[derive(Parser)]
#[command(
    name = "hmet",
    version,
    about = "Seeded experiments for rail-mounted reconfigurable antenna arrays"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve each scheme once and write per-update objective traces.
    Converge,
    /// Final objective of each scheme over the configured sparsity values.
    Sweep,
    /// Two-timescale run on the time-varying user model.
    Timevary,
    /// Write the calibrated pattern codebook.
    DumpCodebook,
}

#[derive(Args)]
struct Common {
    /// TOML configuration; omitted means all defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Run directory.
    #[arg(long, global = true, default_value = "hmet-out")]
    out: PathBuf,
    /// Overrides the config scheme list (comma separated).
    #[arg(long, global = true, value_delimiter = ',')]
    scheme: Vec<String>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Record wall-clock times (makes sweep output non-reproducible).
    #[arg(long, global = true)]
    timing: bool,
    /// Also write the generated user samples.
    #[arg(long, global = true)]
    samples: bool,
}

fn load(common: &Common) -> Result<Config, HarnessError> {
    let mut cfg = match &common.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if !common.scheme.is_empty() {
        for s in &common.scheme {
            s.parse::<SchemeChoice>()
                .map_err(|e| HarnessError::invalid("--scheme", e))?;
        }
        cfg.schemes = common.scheme.clone();
    }
    cfg.resolve()
}

fn run(cli: Cli) -> Result<PathBuf, HarnessError> {
    let cfg = load(&cli.common)?;
    if let Some(n) = cli.common.threads {
        if n == 0 {
            return Err(HarnessError::invalid("--threads", "must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| HarnessError::invalid("--threads", e.to_string()))?;
    }
    let command = match cli.command {
        Cmd::Converge => Command::Converge,
        Cmd::Sweep => Command::Sweep,
        Cmd::Timevary => Command::Timevary,
        Cmd::DumpCodebook => Command::DumpCodebook,
    };
    let opts = Options {
        timing: cli.common.timing,
        write_samples: cli.common.samples,
    };
    execute(command, cfg, &cli.common.out, opts)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(manifest) => {
            eprintln!("wrote {}", manifest.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error ({}): {e}", e.category());
            ExitCode::from(e.exit_code())
        }
    }
}
