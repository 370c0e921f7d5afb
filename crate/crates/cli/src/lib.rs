//! Command-line driver: figure data, config-driven runs and validation.

pub mod config;
pub mod experiments;
pub mod figs;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use spinmetro::table::{write_table, TableFormat};
use spinmetro::Error;

use crate::config::{ConfigError, ExperimentConfig, Kind};
use crate::experiments::Tables;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl From<Format> for TableFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => TableFormat::Csv,
            Format::Json => TableFormat::Json,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "spinmetro", version, about = "Spin-ensemble phase estimation workbench")]
struct Cli {
    /// Base seed for every random stream.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker thread cap.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    #[arg(long, global = true, value_enum, default_value = "csv")]
    format: Format,
    /// Record wall-clock time in the metadata (breaks byte-identical reruns).
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Reproduce the data behind figure 1..9.
    Fig {
        #[arg(value_parser = clap::value_parser!(u8).range(1..=9))]
        number: u8,
    },
    /// Run an experiment described by a config file.
    Run { config: PathBuf },
    /// Check a config file without running it.
    Validate { config: PathBuf },
    /// List experiment kinds and figures.
    ListExperiments,
}

enum Failure {
    Config(String),
    Core(Error),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.0)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn exit_code(f: &Failure) -> i32 {
    match f {
        Failure::Config(_) => EXIT_CONFIG,
        Failure::Core(e) if e.is_numerical() => EXIT_NUMERICAL,
        Failure::Core(Error::Io { .. }) => EXIT_IO,
        Failure::Core(_) => EXIT_CONFIG,
    }
}

/// Parses `argv` (program name first), runs the command and returns the exit code.
pub fn run_cli<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    if let Some(t) = cli.threads {
        // A second call in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t.max(1)).build_global();
    }
    match dispatch(&cli) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            match &f {
                Failure::Config(m) => eprintln!("config error: {m}"),
                Failure::Core(e) => eprintln!("error: {e}"),
            }
            exit_code(&f)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<(), Failure> {
    let format = TableFormat::from(cli.format);
    match &cli.command {
        Command::ListExperiments => {
            let mut o = std::io::stdout().lock();
            let _ = writeln!(o, "experiment kinds (for `run`):");
            for k in Kind::ALL {
                let _ = writeln!(o, "  {:<16} {}  [sections: {}]", k.name(), k.summary(), k.sections().join(", "));
            }
            let _ = writeln!(o, "figures (for `fig`):");
            for (n, d) in figs::FIGURES {
                let _ = writeln!(o, "  {n:<16} {d}");
            }
            Ok(())
        }
        Command::Validate { config } => {
            let cfg = ExperimentConfig::load(config)?;
            println!("ok {} {}", cfg.kind.name(), cfg.hash());
            Ok(())
        }
        Command::Run { config } => {
            let mut cfg = ExperimentConfig::load(config)?;
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            let start = Instant::now();
            let tables = experiments::run(&cfg)?;
            let hash = cfg.hash();
            let stem = cfg.output.clone().unwrap_or_else(|| PathBuf::from(cfg.kind.name()));
            emit(tables, &cli.out.join(stem), format, cli.timing.then(|| start.elapsed().as_secs_f64()), Some(&hash))
        }
        Command::Fig { number } => {
            let start = Instant::now();
            let tables = figs::figure(*number, cli.seed.unwrap_or(0))?;
            emit(tables, &cli.out.join(format!("fig{number}")), format, cli.timing.then(|| start.elapsed().as_secs_f64()), None)
        }
    }
}

fn emit(tables: Tables, stem: &Path, format: TableFormat, wall: Option<f64>, hash: Option<&str>) -> Result<(), Failure> {
    for (suffix, mut t) in tables {
        if let Some(h) = hash {
            t.set_meta("config_hash", h);
        }
        t.set_meta("version", env!("CARGO_PKG_VERSION"));
        t.wall_time_s = wall;
        let mut name = stem.as_os_str().to_owned();
        if !suffix.is_empty() {
            name.push("-");
            name.push(&suffix);
        }
        name.push(".");
        name.push(format.extension());
        let path = PathBuf::from(name);
        write_table(&t, &path, format)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
