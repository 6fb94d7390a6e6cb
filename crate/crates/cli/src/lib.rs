//! Command-line harness for the purification library: trajectory
//! ensembles, Fokker–Planck evolutions, first-passage tables, the scaling
//! study and the exact-update self-check, all written as CSV files that
//! carry their own configuration.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod settings;

use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

pub use commands::{Command, Outcome};
pub use error::{CliError, Result};

use crate::config::{parse_config, parse_header};
use crate::output::{sibling_path, write_file, META_KEYS};
use crate::settings::Settings;

#[derive(Debug, Parser)]
#[command(name = "purify", version, about = "Qubit purification under continuous weak measurement")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Run a trajectory ensemble of one protocol
    Simulate(RunArgs),
    /// Tabulate mean first-passage times over a (delta, epsilon) grid
    Mtfp(RunArgs),
    /// Write the small-a and large-a scaling tables
    Scaling(RunArgs),
    /// Compare the analytic timescales of the protocols
    Protocols(RunArgs),
    /// Evolve the purity distribution with the Fokker-Planck equation
    Fpe(RunArgs),
    /// Compare the SDE with the exact measurement update
    BayesCheck(RunArgs),
    /// Regenerate an output file from its header
    Replay(ReplayArgs),
}

/// Values shared by every run command. Any value may also come from
/// `--config`; a command rejects values it does not use.
#[derive(Debug, Args)]
pub struct RunArgs {
    /// key = value file; flags override it
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Primary output file; other tables go next to it (stdout if omitted)
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Worker threads (default: available cores)
    #[arg(long)]
    pub workers: Option<usize>,
    /// Measurement rate; times are in units of 1/gamma0
    #[arg(long)]
    pub gamma0: Option<String>,
    /// Detector efficiency (list for mtfp)
    #[arg(long, conflicts_with = "delta")]
    pub eta: Option<String>,
    /// Detector inefficiency 1 - eta (list for mtfp)
    #[arg(long)]
    pub delta: Option<String>,
    /// Target linear entropy (list for mtfp, scaling, protocols)
    #[arg(long)]
    pub epsilon: Option<String>,
    #[arg(long)]
    pub dt: Option<String>,
    #[arg(long)]
    pub horizon: Option<String>,
    #[arg(long)]
    pub trajectories: Option<String>,
    /// Run seed; required for stochastic runs
    #[arg(long)]
    pub seed: Option<String>,
    /// parallel, jacobs, wiseman-ralph or isotropic
    #[arg(long)]
    pub protocol: Option<String>,
    /// split or cartesian
    #[arg(long)]
    pub scheme: Option<String>,
    /// Output grid intervals
    #[arg(long)]
    pub points: Option<String>,
    /// Initial Bloch vector x,y,z
    #[arg(long, allow_hyphen_values = true)]
    pub initial: Option<String>,
    /// Initial purity
    #[arg(long)]
    pub p0: Option<String>,
    #[arg(long)]
    pub rel_tol: Option<String>,
    /// high-purity or full
    #[arg(long)]
    pub diffusion: Option<String>,
    /// Values of a = delta/epsilon for the small-a table
    #[arg(long)]
    pub a: Option<String>,
    /// Values of a for the large-a table
    #[arg(long)]
    pub large_a: Option<String>,
    #[arg(long)]
    pub large_a_epsilon: Option<String>,
    #[arg(long)]
    pub cells: Option<String>,
    #[arg(long)]
    pub floor: Option<String>,
    /// implicit or explicit
    #[arg(long)]
    pub stepping: Option<String>,
    /// Initial z of the exact-update check
    #[arg(long, allow_hyphen_values = true)]
    pub z0: Option<String>,
    /// Measurement window of the exact-update check
    #[arg(long)]
    pub tau: Option<String>,
    /// Add Monte Carlo and exact cross-checks to the protocol table
    #[arg(long)]
    pub check: bool,
}

impl RunArgs {
    fn flags(&self) -> Vec<(&'static str, &Option<String>)> {
        vec![
            ("gamma0", &self.gamma0),
            ("eta", &self.eta),
            ("delta", &self.delta),
            ("epsilon", &self.epsilon),
            ("dt", &self.dt),
            ("horizon", &self.horizon),
            ("trajectories", &self.trajectories),
            ("seed", &self.seed),
            ("protocol", &self.protocol),
            ("scheme", &self.scheme),
            ("points", &self.points),
            ("initial", &self.initial),
            ("p0", &self.p0),
            ("rel-tol", &self.rel_tol),
            ("diffusion", &self.diffusion),
            ("a", &self.a),
            ("large-a", &self.large_a),
            ("large-a-epsilon", &self.large_a_epsilon),
            ("cells", &self.cells),
            ("floor", &self.floor),
            ("stepping", &self.stepping),
            ("z0", &self.z0),
            ("tau", &self.tau),
        ]
    }
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    /// A file written by purify
    pub file: PathBuf,
    /// Where to write the regenerated table (stdout if omitted)
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub workers: Option<usize>,
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))
}

fn parse_workers(settings: &mut Settings, flag: Option<usize>) -> Result<Option<usize>> {
    let from_file = match settings.take_raw("workers") {
        Some((text, _)) => {
            Some(text.trim().parse::<usize>().map_err(|_| CliError::usage(format!("workers must be an integer, got `{text}`")))?)
        }
        None => None,
    };
    match flag.or(from_file) {
        Some(0) => Err(CliError::usage("workers must be at least 1")),
        w => Ok(w),
    }
}

fn run_args(command: Command, args: RunArgs) -> Result<()> {
    let mut settings = Settings::new();
    if let Some(path) = &args.config {
        let entries = parse_config(&read_text(path)?).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        settings.add_file_entries(&path.display().to_string(), entries);
    }
    for (key, value) in args.flags() {
        if let Some(v) = value {
            settings.set_flag(key, v.clone());
        }
    }
    if args.check {
        settings.set_flag("check", "true".into());
    }
    let workers = parse_workers(&mut settings, args.workers)?;
    let (config, outcome) = commands::run(command, settings, workers)?;
    emit(command, &config, &outcome, args.out.as_deref(), None)
}

fn replay(args: ReplayArgs) -> Result<()> {
    let text = read_text(&args.file)?;
    let entries = parse_header(&text).map_err(|e| CliError::usage(format!("{}: {e}", args.file.display())))?;
    let meta = |key: &str| entries.iter().find(|e| e.key == key).map(|e| e.value.clone());
    let name = meta("command").ok_or_else(|| CliError::usage("header has no command"))?;
    let command = Command::from_name(&name).ok_or_else(|| CliError::usage(format!("unknown command `{name}` in header")))?;
    let table = meta("table").ok_or_else(|| CliError::usage("header has no table"))?;
    if let Some(version) = meta("purify-version") {
        if version != purify_core::VERSION {
            eprintln!("warning: file written by version {version}, running {}", purify_core::VERSION);
        }
    }
    let mut settings = Settings::new();
    let path = args.file.display().to_string();
    settings.add_file_entries(&path, entries.into_iter().filter(|e| !META_KEYS.contains(&e.key.as_str())).collect());
    let (config, outcome) = commands::run(command, settings, args.workers)?;
    emit(command, &config, &outcome, args.out.as_deref(), Some(&table))
}

/// Writes the tables once all of them exist. With `only`, writes just that
/// table to `out`.
fn emit(command: Command, config: &[(&'static str, String)], outcome: &Outcome, out: Option<&Path>, only: Option<&str>) -> Result<()> {
    let rendered: Vec<(&str, String)> = outcome.tables.iter().map(|t| (t.name, t.render(command.name(), config))).collect();
    let selected: Vec<&(&str, String)> = match only {
        Some(name) => {
            let t = rendered
                .iter()
                .find(|(n, _)| *n == name)
                .ok_or_else(|| CliError::usage(format!("{} has no table `{name}`", command.name())))?;
            vec![t]
        }
        None => rendered.iter().collect(),
    };
    match out {
        Some(path) => {
            for (i, (name, text)) in selected.iter().enumerate() {
                let target = if i == 0 { path.to_path_buf() } else { sibling_path(path, name) };
                write_file(&target, text)?;
            }
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            let body = selected.iter().map(|(_, t)| t.as_str()).collect::<Vec<_>>().join("\n");
            lock.write_all(body.as_bytes()).map_err(|source| CliError::Io { path: "stdout".into(), source })?;
        }
    }
    for line in &outcome.report {
        eprintln!("{line}");
    }
    match &outcome.failure {
        Some(msg) => Err(CliError::Check(msg.clone())),
        None => Ok(()),
    }
}

/// Runs a parsed command line.
pub fn execute(cli: Cli) -> Result<()> {
    let command = match cli.command {
        CliCommand::Simulate(a) => (Command::Simulate, a),
        CliCommand::Mtfp(a) => (Command::Mtfp, a),
        CliCommand::Scaling(a) => (Command::Scaling, a),
        CliCommand::Protocols(a) => (Command::Protocols, a),
        CliCommand::Fpe(a) => (Command::Fpe, a),
        CliCommand::BayesCheck(a) => (Command::BayesCheck, a),
        CliCommand::Replay(a) => return replay(a),
    };
    run_args(command.0, command.1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn command_line_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn every_flag_is_a_config_key() {
        let args = RunArgs::parse_from_flags();
        for (key, _) in args.flags() {
            assert!(crate::config::parse_config(&format!("{key} = 1")).is_ok(), "{key}");
        }
    }

    impl RunArgs {
        fn parse_from_flags() -> Self {
            let cli = Cli::parse_from(["purify", "fpe"]);
            match cli.command {
                CliCommand::Fpe(a) => a,
                _ => unreachable!(),
            }
        }
    }
}
