use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use mcasim_core::config::{validate_config, ConfigError, Mechanism};
use mcasim_core::runner::{config_hash, run_replications, RunManifest};

#[derive(Parser, Debug)]
#[command(name = "mcasim", version, about = "Run seeded replications of a multi-channel access scenario")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// PDCP duplication with and without the duplication status report
    Dupstat(RunArgs),
    /// Component-carrier selection, RSRP-only vs RSRQ + load
    Ccselect(RunArgs),
    /// Coupled vs computation-aware decoupled MEC association
    Mecassoc(RunArgs),
    /// Two-gNB cooperation for low-latency users
    Compcoord(RunArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    /// JSON scenario file, or `defaults`
    #[arg(long, value_name = "PATH|defaults")]
    config: String,
    /// Master seed (overrides the config)
    #[arg(long)]
    seed: Option<u64>,
    /// Number of replications (overrides the config)
    #[arg(long)]
    runs: Option<u32>,
    /// Output directory
    #[arg(long, env = "MCASIM_OUT")]
    out: PathBuf,
    /// Sample budget per replication: packets, UEs or episodes
    #[arg(long)]
    samples: Option<u64>,
    /// Worker threads; 0 uses every available core
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    #[arg(long)]
    quiet: bool,
}

enum Failure {
    Config(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

fn config_failure(source: &str, e: ConfigError) -> Failure {
    Failure::Config(format!("config {source}: {e}"))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (mechanism, args) = match cli.command {
        Command::Dupstat(a) => (Mechanism::Dupstat, a),
        Command::Ccselect(a) => (Mechanism::Ccselect, a),
        Command::Mecassoc(a) => (Mechanism::Mecassoc, a),
        Command::Compcoord(a) => (Mechanism::Compcoord, a),
    };
    match execute(mechanism, &args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn execute(mechanism: Mechanism, args: &RunArgs) -> Result<(), Failure> {
    let raw = if args.config == "defaults" {
        "{}".to_string()
    } else {
        fs::read_to_string(&args.config)
            .map_err(|e| Failure::Config(format!("cannot read {}: {e}", args.config)))?
    };
    let loaded = validate_config(&raw, Some(mechanism)).map_err(|e| config_failure(&args.config, e))?;
    let mut cfg = loaded.config;
    let mut defaulted = loaded.defaulted;
    let mut overridden = Vec::new();
    if let Some(s) = args.seed {
        cfg.master_seed = s;
        overridden.push("master_seed");
    }
    if let Some(n) = args.runs {
        cfg.run_count = n;
        overridden.push("run_count");
    }
    if let Some(n) = args.samples {
        cfg.sample_budget = Some(n);
        overridden.push("sample_budget");
    }
    defaulted.retain(|k| !overridden.contains(&k.as_str()));
    cfg.validate().map_err(|e| config_failure("after command-line overrides", e))?;

    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let manifest = RunManifest {
        mechanism,
        config_path: args.config.clone(),
        config_hash: config_hash(&cfg),
        master_seed: cfg.master_seed,
        run_count: cfg.run_count,
        output_dir: args.out.display().to_string(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
    };
    write(&args.out, "manifest.json", manifest.to_json().as_bytes())?;

    if !args.quiet {
        eprintln!(
            "{mechanism}: {} run(s), master seed {}, config {}",
            cfg.run_count,
            cfg.master_seed,
            &manifest.config_hash[..12]
        );
    }
    let started = Instant::now();
    let rep = run_replications(&cfg, args.jobs).map_err(|e| {
        if e.is_config() {
            Failure::Config(format!("config {}: {e}", args.config))
        } else {
            Failure::Runtime(anyhow::Error::new(e).context("simulation failed"))
        }
    })?;

    let m = mechanism.as_str();
    let results = rep.results_table();
    write(&args.out, &format!("{m}_results.csv"), &results.to_csv_bytes())?;
    write(&args.out, &format!("{m}_runs.csv"), &rep.runs_table().to_csv_bytes())?;
    for (suffix, t) in rep.extra_tables() {
        write(&args.out, &format!("{m}_{suffix}.csv"), &t.to_csv_bytes())?;
    }
    let summary = rep.summary(&cfg, &defaulted, &manifest.hash());
    let text = serde_json::to_string_pretty(&summary).context("serializing summary")? + "\n";
    write(&args.out, "summary.json", text.as_bytes())?;

    if !args.quiet {
        print!("{}", String::from_utf8_lossy(&results.to_csv_bytes()).replace("\r\n", "\n"));
        eprintln!("done in {:.1?}, outputs in {}", started.elapsed(), args.out.display());
    }
    Ok(())
}

fn write(dir: &Path, name: &str, bytes: &[u8]) -> anyhow::Result<()> {
    let p = dir.join(name);
    fs::write(&p, bytes).with_context(|| format!("writing {}", p.display()))
}
