//! Command-line front end for `sphint-core`: config ingestion, experiment
//! dispatch and result files.

pub mod commands;
pub mod config;
pub mod output;
pub mod params;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::Path;

use clap::{Arg, ArgAction, ArgMatches};

use config::{Command, ConfigFile, Format, Origins, Overrides, RunConfig};
use output::Report;
use params::Params;

pub use output::emit_plot_data;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure in {op}: {source}")]
    Numerical { op: &'static str, source: sphint_core::Error },
    #[error("i/o error: {0}")]
    Io(String),
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_CHECK_FAILED: i32 = 4;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numerical { .. } => EXIT_NUMERICAL,
            // an unwritable output path is a bad configuration too
            CliError::Config(_) | CliError::Io(_) => EXIT_CONFIG,
        }
    }
}

/// Per-command flags, as `(name, help)`. Each becomes `--name` on the command
/// line and `name = ...` in a config file.
const SCHEMA: [(Command, &[(&str, &str)]); 6] = [
    (
        Command::JEval,
        &[
            ("theta", "temperature(s), comma separated"),
            ("lambda", "eigenvalue location(s), comma separated"),
            ("measure", "semicircle | dirac:x | atoms:x@w,... | uniform:x,... | JSON"),
            ("tol", "root-finding tolerance"),
        ],
    ),
    (
        Command::Rate,
        &[
            ("kind", "i | i-theta | extremal | deformed"),
            ("x-grid", "a:b:step or a list"),
            ("theta", "temperature for i-theta"),
            ("tol", "minimization tolerance for i-theta"),
            ("nu", "measure for extremal / deformed"),
            ("xi", "deformation measure for deformed"),
        ],
    ),
    (
        Command::Simulate,
        &[
            ("kind", "spectrum | bbp | cov"),
            ("n", "matrix dimension"),
            ("beta", "1 (real) or 2 (complex)"),
            ("law", "gaussian | rademacher | uniform"),
            ("theta", "spike temperature(s)"),
            ("k", "extremal measure size for an unspiked spectrum"),
            ("replicates", "number of replicates"),
        ],
    ),
    (
        Command::Verify,
        &[
            ("suite", "annealed | limit | decomposition | variational | exact-n2"),
            ("n", "dimension (limit: comma-separated list)"),
            ("k", "rank, must match the number of temperatures"),
            ("theta", "temperature(s)"),
            ("lambda", "eigenvalues (variational, exact-n2)"),
            ("measure", "bulk measure for variational"),
            ("p", "first spectrum for decomposition"),
            ("q", "second spectrum for decomposition"),
            ("planted", "outliers for limit: top:x,bottom:y,..."),
            ("beta", "1 or 2"),
            ("law", "entry law for annealed"),
            ("joint", "annealed: sample the disorder too"),
            ("samples", "Monte Carlo samples"),
            ("restarts", "variational restarts"),
            ("tol", "pass tolerance"),
        ],
    ),
    (
        Command::Spinglass,
        &[
            ("kind", "sk | vector"),
            ("theta-grid", "sk: a:b:step or a list"),
            ("theta", "vector: temperatures"),
            ("q", "vector: overlap matrix, rows separated by ';'"),
            ("mc-n", "vector: dimension of a Monte Carlo check"),
            ("samples", "Monte Carlo samples"),
            ("tol", "Monte Carlo pass tolerance"),
        ],
    ),
    (
        Command::Denoise,
        &[
            ("theta", "spike strength(s)"),
            ("gamma-grid", "a:b:step or a list"),
            ("h", "finite-difference step for mmse_fd"),
        ],
    ),
];

pub fn cli() -> clap::Command {
    let global = |name: &'static str, help: &'static str| Arg::new(name).long(name).help(help).global(true);
    let mut app = clap::Command::new("sphint")
        .version(sphint_core::VERSION)
        .about("Spherical integrals, rate functions and their applications")
        .arg(global("config", "flat key = value config file; flags override it"))
        .arg(
            global("seed", "RNG seed")
                .env("SPHINT_SEED")
                .value_parser(clap::value_parser!(u64)),
        )
        .arg(
            global("workers", "worker threads")
                .env("SPHINT_WORKERS")
                .value_parser(clap::value_parser!(usize)),
        )
        .arg(global("output", "output file (default: stdout)"))
        .arg(global("format", "json | csv").value_parser(["json", "csv"]))
        .arg(global("plot-data", "also write a plain CSV for plotting to this file"))
        .arg(global("plot-columns", "comma-separated columns for --plot-data"))
        .arg(global("save-config", "write the resolved config to this file"));
    for (cmd, flags) in SCHEMA {
        let mut sub = clap::Command::new(cmd.name());
        for (name, help) in flags {
            sub = sub.arg(Arg::new(*name).long(*name).help(*help).action(ArgAction::Set).allow_hyphen_values(true));
        }
        app = app.subcommand(sub);
    }
    app
}

/// What one invocation asked for beyond the [`RunConfig`].
#[derive(Clone, Debug)]
pub struct Invocation {
    pub config: RunConfig,
    pub origins: Origins,
    pub workers: Option<usize>,
    pub plot_data: Option<String>,
    pub plot_columns: Option<Vec<String>>,
    pub save_config: Option<String>,
}

fn read(path: &str) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{path}: {e}")))
}

fn write(path: &str, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{path}: {e}")))
}

pub fn resolve(m: &ArgMatches) -> Result<Invocation, CliError> {
    let file = match m.get_one::<String>("config") {
        Some(path) => Some(ConfigFile::parse(path, &read(path)?)?),
        None => None,
    };
    let mut over = Overrides {
        seed: m.get_one::<u64>("seed").copied(),
        output: m.get_one::<String>("output").cloned(),
        format: m.get_one::<String>("format").map(|f| f.parse::<Format>().expect("validated by clap")),
        ..Default::default()
    };
    if let Some((name, sub)) = m.subcommand() {
        let cmd: Command = name.parse().map_err(CliError::Config)?;
        over.command = Some(cmd);
        let flags = SCHEMA.iter().find(|(c, _)| *c == cmd).map(|(_, f)| *f).unwrap_or_default();
        let mut params = BTreeMap::new();
        for (flag, _) in flags {
            if let Some(v) = sub.get_one::<String>(flag) {
                params.insert(flag.to_string(), v.clone());
            }
        }
        over.params = params;
    }
    let (config, origins) = RunConfig::resolve(file.as_ref(), over)?;
    Ok(Invocation {
        config,
        origins,
        workers: m.get_one::<usize>("workers").copied(),
        plot_data: m.get_one::<String>("plot-data").cloned(),
        plot_columns: m.get_one::<String>("plot-columns").map(|s| s.split(',').map(|c| c.trim().to_string()).collect()),
        save_config: m.get_one::<String>("save-config").cloned(),
    })
}

/// Output of [`run`]: the table and its rendering in the configured format.
pub struct Artifacts {
    pub report: Report,
    pub rendered: String,
}

/// Runs one configuration. Parameter errors name where the value came from
/// (`file:line` or `--flag`); numerical errors name the failing operation.
pub fn run(config: &RunConfig, origins: &Origins) -> Result<Artifacts, CliError> {
    let p = Params::new(&config.params, origins);
    let report = commands::dispatch(config, &p)?;
    p.finish()?;
    let rendered = match config.format {
        Format::Json => output::to_json(&report, config)?,
        Format::Csv => output::to_csv(&report, config)?,
    };
    Ok(Artifacts { report, rendered })
}

fn execute(inv: &Invocation) -> Result<i32, CliError> {
    let config = &inv.config;
    if let Some(w) = inv.workers {
        // fails only if a pool already exists, which is harmless
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(w).build_global() {
            log::debug!("worker pool not reconfigured: {e}");
        }
    }
    if let Some(path) = &inv.save_config {
        write(path, &config.to_ini())?;
    }
    let art = run(config, &inv.origins)?;
    match &config.output_path {
        Some(path) => write(path, &art.rendered)?,
        None => print!("{}", art.rendered),
    }
    if let Some(path) = &inv.plot_data {
        let cols = inv.plot_columns.clone().unwrap_or_else(|| {
            if art.report.plot_columns.is_empty() {
                art.report.columns.clone()
            } else {
                art.report.plot_columns.clone()
            }
        });
        write(path, &emit_plot_data(&art.report, &cols)?)?;
    }
    Ok(match art.report.passed {
        Some(false) => {
            log::warn!("check failed");
            EXIT_CHECK_FAILED
        }
        _ => EXIT_OK,
    })
}

/// Entry point shared by the binary and tests; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let m = match cli().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match resolve(&m).and_then(|inv| execute(&inv)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("sphint: {e}");
            e.exit_code()
        }
    }
}

/// Reads a saved config back; used to replay a run.
pub fn load_config(path: &Path) -> Result<(RunConfig, Origins), CliError> {
    let name = path.display().to_string();
    RunConfig::from_ini(&name, &read(&name)?)
}
