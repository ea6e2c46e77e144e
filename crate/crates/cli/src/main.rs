use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use lattice_spectra_cli::{execute, parse_config, write_outputs, CliError, Command};

/// Band structures, densities of states and finite-lattice spectra of resonator lattices.
#[derive(Parser, Debug)]
#[command(name = "lattice-spectra", version)]
struct Args {
    command: Command,
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: `run.out`, then `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: `run.workers`, then all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Single worker.
    #[arg(long)]
    deterministic: bool,
}

fn init_logging() {
    let level = match std::env::var("LATTICE_SPECTRA_LOG") {
        Ok(v) if ["error", "warn", "info", "debug"].contains(&v.as_str()) => v,
        Ok(v) => {
            eprintln!("warning: ignoring LATTICE_SPECTRA_LOG={v}; expected error, warn, info or debug");
            "warn".into()
        }
        Err(_) => "warn".into(),
    };
    env_logger::Builder::new()
        .parse_filters(&level)
        .format_timestamp(None)
        .init();
}

fn run(args: Args) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.config).map_err(|source| CliError::Io {
        path: args.config.clone(),
        source,
    })?;
    let config = parse_config(&text)?;
    let workers = if args.deterministic {
        1
    } else {
        args.workers
            .or(config.run.workers)
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
    };
    if workers == 0 {
        return Err(CliError::Validation {
            key: "--workers".into(),
            message: "must be at least 1".into(),
        });
    }
    let out = args
        .out
        .or_else(|| config.run.out.clone())
        .unwrap_or_else(|| PathBuf::from("out"));

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .expect("thread pool");
    log::info!("{} with {workers} workers", args.command);
    let outputs = pool.install(|| execute(args.command, &config))?;
    write_outputs(&out, &outputs)?;
    for o in &outputs {
        log::info!("wrote {}", out.join(&o.name).display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    init_logging();
    match run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
