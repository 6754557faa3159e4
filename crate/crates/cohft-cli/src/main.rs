//! `cohft`: batch front end for the cohft engine.
//!
//! Every command reads a JSON config, writes `result.json` (and `table.json`
//! where a table is produced) plus `manifest.json` into the output directory.
//! Exit status: 0 ok, 2 malformed input, 3 failed mathematical precondition.
//! Errors go to stderr as one JSON object.

mod config;
mod error;
mod output;
mod run;

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use cohft::scalar::{self, Complex, Rational};
use serde_json::json;

use config::{AlgebraSource, Backend, RunConfig, SCHEMA_VERSION};
use error::CliError;
use output::{render, sha256_hex, Manifest};
use run::Command;

#[derive(Parser)]
#[command(name = "cohft", version, about = "Semi-simple CohFT computations")]
struct Cli {
    /// print the JSON schemas of the config and table formats and exit
    #[arg(long, global = true)]
    dump_schema: bool,
    #[command(subcommand)]
    command: Option<Cmd>,
}

#[derive(Subcommand)]
enum Cmd {
    /// propagators of the closed TFT, optionally checked against sewing
    Tft(Overrides),
    /// series-level classification data of an R-matrix
    Nodal(Overrides),
    /// Witten-Kontsevich intersection numbers
    Oracle(Overrides),
    /// correlator table of the CohFT of an R-matrix
    Build(Overrides),
    /// genus-zero quantum product along a direction
    Deform(Overrides),
    /// solve for the homogeneous R-matrix
    Rmatrix(Overrides),
    /// reconstruct the homogeneous theory from genus-zero data
    Reconstruct(Overrides),
    /// verify a correlator table
    Check(Overrides),
}

/// Flags override the matching config entries.
#[derive(Args, Clone, Default)]
struct Overrides {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    backend: Option<Backend>,
    #[arg(long)]
    precision_bits: Option<usize>,
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_genus: Option<usize>,
    #[arg(long)]
    max_points: Option<usize>,
    #[arg(long)]
    order: Option<usize>,
    /// table to verify (`check`)
    #[arg(long)]
    table: Option<PathBuf>,
}

fn split(cmd: Cmd) -> (Command, Overrides) {
    match cmd {
        Cmd::Tft(o) => (Command::Tft, o),
        Cmd::Nodal(o) => (Command::Nodal, o),
        Cmd::Oracle(o) => (Command::Oracle, o),
        Cmd::Build(o) => (Command::Build, o),
        Cmd::Deform(o) => (Command::Deform, o),
        Cmd::Rmatrix(o) => (Command::Rmatrix, o),
        Cmd::Reconstruct(o) => (Command::Reconstruct, o),
        Cmd::Check(o) => (Command::Check, o),
    }
}

fn read(path: &PathBuf) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| CliError::io(path, e))
}

fn effective_config(o: &Overrides) -> Result<RunConfig, CliError> {
    let mut cfg = match &o.config {
        Some(p) => serde_json::from_slice::<RunConfig>(&read(p)?)
            .map_err(|e| CliError::schema(format!("{}: {e}", p.display())))?,
        None => RunConfig::default(),
    };
    if cfg.schema_version != SCHEMA_VERSION {
        return Err(CliError::schema(format!(
            "schema_version {} is not supported (expected {SCHEMA_VERSION})",
            cfg.schema_version
        )));
    }
    if let Some(v) = &o.out {
        cfg.output_dir = v.clone();
    }
    if let Some(v) = o.backend {
        cfg.backend = v;
    }
    if let Some(v) = o.precision_bits {
        cfg.precision_bits = v;
    }
    if let Some(v) = o.tolerance {
        cfg.tolerance = v;
    }
    if let Some(v) = o.seed {
        cfg.seed = v;
    }
    if let Some(v) = o.max_genus {
        cfg.bounds.max_genus = v;
    }
    if let Some(v) = o.max_points {
        cfg.bounds.max_points = v;
    }
    if let Some(v) = o.order {
        cfg.order = Some(v);
    }
    if let Some(v) = &o.table {
        cfg.options.table = Some(v.clone());
    }
    Ok(cfg)
}

fn setup_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("COHFT_THREADS") else { return Ok(()) };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::schema(format!("COHFT_THREADS must be a positive integer, got '{raw}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::schema(format!("thread pool: {e}")))
}

fn execute(cmd: Command, o: Overrides) -> Result<(), CliError> {
    let start = Instant::now();
    setup_threads()?;
    let cfg = effective_config(&o)?;

    // referenced input files are read once, here, so their bytes enter the hash
    let mut paths = Vec::new();
    if let Some(AlgebraSource::File { path }) = &cfg.algebra {
        paths.push(path.clone());
    }
    if cmd == Command::Check {
        if let Some(p) = &cfg.options.table {
            paths.push(p.clone());
        }
    }
    let mut files = Vec::new();
    for p in paths {
        let bytes = read(&p)?;
        files.push((p.display().to_string(), bytes));
    }

    // the output directory does not change the computation
    let mut hashed = serde_json::to_value(&cfg).expect("serializable config");
    hashed.as_object_mut().expect("object").remove("output_dir");
    let inputs = json!({
        "command": cmd.name(),
        "config": hashed,
        "files": files.iter().map(|(n, b)| json!([n, sha256_hex(b)])).collect::<Vec<_>>(),
    });

    let outcome = match cfg.backend {
        Backend::Rational => run::run::<Rational>(cmd, &cfg, &files)?,
        Backend::Complex => {
            scalar::set_precision(cfg.precision_bits).map_err(|e| CliError::schema(e.to_string()))?;
            scalar::set_tolerance(cfg.tolerance).map_err(|e| CliError::schema(e.to_string()))?;
            run::run::<Complex>(cmd, &cfg, &files)?
        }
    };

    let manifest = Manifest {
        command: cmd.name().to_string(),
        inputs_hash: sha256_hex(&render(&inputs)),
        seed: cfg.seed,
        backend: match cfg.backend {
            Backend::Rational => "rational".into(),
            Backend::Complex => "complex".into(),
        },
        threads: rayon::current_num_threads(),
        outputs: Default::default(),
        elapsed: start.elapsed(),
    };
    let summary = json!({
        "command": cmd.name(),
        "output_dir": cfg.output_dir,
        "files": outcome.artifacts.names().cloned().collect::<Vec<_>>(),
        "passed": outcome.failure.is_none(),
    });
    outcome.artifacts.commit(&cfg.output_dir, manifest)?;
    // a closed stdout is not an error of the run
    let _ = writeln!(std::io::stdout(), "{summary}");
    match outcome.failure {
        Some(f) => Err(f),
        None => Ok(()),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(std::io::stdout(), "{e}");
                std::process::exit(0);
            }
            let err = CliError::schema(e.to_string().trim_end().to_string());
            eprintln!("{}", err.to_json());
            std::process::exit(err.exit_code());
        }
    };
    let result = if cli.dump_schema {
        let text = serde_json::to_string_pretty(&config::schemas()).expect("serializable");
        let _ = writeln!(std::io::stdout(), "{text}");
        Ok(())
    } else {
        match cli.command {
            Some(c) => {
                let (cmd, o) = split(c);
                execute(cmd, o)
            }
            None => Err(CliError::schema("missing subcommand; see --help")),
        }
    };
    if let Err(e) = result {
        eprintln!("{}", e.to_json());
        std::process::exit(e.exit_code());
    }
}
