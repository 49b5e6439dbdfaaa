//! `nng-lab`: command-line front end for `nng-core`.
//!
//! Every run resolves a [`Scenario`] from defaults, an optional
//! `--config` file and flags, computes one CSV table, and with `--out`
//! writes the table next to a replayable manifest.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Arg, ArgAction, ArgMatches};

pub mod commands;
pub mod error;
pub mod manifest;
pub mod scenario;

pub use error::{CliError, Result};
pub use scenario::{load_scenario, Command, Scenario};

/// Environment variable capping sweep parallelism.
pub const THREADS_ENV: &str = "NNG_LAB_THREADS";

fn flag(key: &str) -> String {
    key.replace('_', "-")
}

fn cli() -> clap::Command {
    let mut root = clap::Command::new("nng-lab")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Replica metastates, gravitational state reduction and no-signalling checks")
        .subcommand_required(true);
    for c in Command::ALL {
        let mut sub = clap::Command::new(c.name())
            .about(c.about())
            .arg(
                Arg::new("config")
                    .long("config")
                    .value_name("FILE")
                    .help("scenario or manifest file (`key = value` lines)"),
            )
            .arg(
                Arg::new("out")
                    .long("out")
                    .value_name("CSV")
                    .help("write the table here and a manifest to <CSV>.manifest"),
            );
        for spec in c.schema() {
            let help = match spec.default {
                Some(d) => format!("{} [default: {d}]", spec.help),
                None => format!("{} [required]", spec.help),
            };
            sub = sub.arg(
                Arg::new(spec.name)
                    .long(flag(spec.name))
                    .value_name("VALUE")
                    .action(ArgAction::Set)
                    .allow_hyphen_values(true)
                    .help(help),
            );
        }
        root = root.subcommand(sub);
    }
    root
}

struct Invocation {
    scenario: Scenario,
    out: Option<PathBuf>,
}

fn invocation(command: Command, m: &ArgMatches) -> Result<Invocation> {
    let mut raw = match m.get_one::<String>("config") {
        Some(path) => {
            let (named, pairs) = scenario::read_scenario_file(Path::new(path))?;
            if let Some(c) = named.filter(|c| *c != command) {
                return Err(CliError::key(
                    "command",
                    format!("{path} is for `{}`, not `{}`", c.name(), command.name()),
                ));
            }
            pairs
        }
        None => Vec::new(),
    };
    // flags override the file
    for spec in command.schema() {
        if let Some(v) = m.get_one::<String>(spec.name) {
            raw.retain(|(k, _)| k != spec.name);
            raw.push((spec.name.to_string(), v.clone()));
        }
    }
    Ok(Invocation {
        scenario: Scenario::resolve(command, &raw)?,
        out: m.get_one::<String>("out").map(PathBuf::from),
    })
}

fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got `{v}`")))?;
        b = b.num_threads(n);
    }
    b.build().map_err(|e| CliError::Internal(e.to_string()))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn execute(inv: &Invocation, stdout: &mut dyn Write) -> Result<()> {
    let pool = thread_pool()?;
    let output = pool.install(|| commands::execute(&inv.scenario))?;
    let io = |e: std::io::Error| CliError::Io {
        path: "<stdout>".into(),
        source: e,
    };
    match &inv.out {
        Some(path) => {
            write_file(path, &output.csv)?;
            let m = manifest::render(&inv.scenario, output.seed, path, &output.csv);
            let mpath = manifest::path_for(path);
            write_file(&mpath, &m)?;
            writeln!(stdout, "{}", output.summary).map_err(io)?;
            writeln!(stdout, "wrote {} and {}", path.display(), mpath.display()).map_err(io)?;
        }
        None => {
            writeln!(stdout, "{}", output.summary).map_err(io)?;
            write!(stdout, "{}", output.csv).map_err(io)?;
        }
    }
    Ok(())
}

/// Run with explicit output streams; returns the process exit code.
pub fn run_with<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match cli().try_get_matches_from(argv) {
        Ok(m) => m,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let text = e.render().to_string();
            if code == 0 {
                let _ = write!(stdout, "{text}");
            } else {
                // keep the diagnostic to one line
                let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("error: bad arguments");
                let _ = writeln!(stderr, "{first}");
            }
            return code;
        }
    };
    let (name, sub) = matches.subcommand().expect("subcommand is required");
    let command = Command::parse(name).expect("subcommands come from Command::ALL");
    match invocation(command, sub).and_then(|inv| execute(&inv, stdout)) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(argv, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}
