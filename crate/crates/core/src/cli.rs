//! Command-line front end. [`run`] takes the argument list and output
//! streams explicitly so it can be driven from tests.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use thiserror::Error;

use crate::engine::{self, counterfactual_replay, simulate, Angles, EngineError, RunLog};
use crate::io::{self, IoError};
use crate::sica::{self, Condensed, SicaError};
use crate::stats::{self, StatsError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Sica(#[from] SicaError),
    #[error("{0}")]
    Usage(String),
    #[error("trace does not reproduce the log: {0}")]
    Mismatch(String),
}

#[derive(Debug, Parser)]
#[command(
    name = "wqm",
    version,
    about = "Vector hidden-variable Bell experiment simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a configuration; writes the slot series, a .summary file next to
    /// it and optionally the hidden-variable trace.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Coincidence rate N++/N against analyzer difference, with and without
    /// the contextual instruction.
    Scan {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated radians, e.g. `0,pi/16,pi/8`.
        #[arg(long, allow_hyphen_values = true)]
        deltas: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print counts, correlators, S, J and singles of a slot series.
    Chsh { tsfile: PathBuf },
    /// Re-run a logged experiment on its trace with new angles; writes the
    /// new series and a .diff report next to it.
    Replay {
        tsfile: PathBuf,
        #[arg(long)]
        trace: PathBuf,
        /// `alpha,alpha',beta,beta'` in radians.
        #[arg(long, allow_hyphen_values = true)]
        angles: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Reorder a block-schedule series into four aligned rows, or explain
    /// why that is impossible.
    Condense { tsfile: PathBuf },
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                2
            } else {
                let _ = write!(out, "{text}");
                0
            };
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<(), CliError> {
    match cmd {
        Command::Simulate {
            config,
            out: path,
            trace,
        } => cmd_simulate(&config, &path, trace.as_deref(), out),
        Command::Scan {
            config,
            deltas,
            out: path,
        } => cmd_scan(&config, &deltas, &path, out),
        Command::Chsh { tsfile } => {
            let records = io::read_tsv(&tsfile)?;
            write_out(out, &io::format_summary(&records))
        }
        Command::Replay {
            tsfile,
            trace,
            angles,
            out: path,
        } => cmd_replay(&tsfile, &trace, &angles, &path, out),
        Command::Condense { tsfile } => cmd_condense(&tsfile, out),
    }
}

fn write_out(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes()).map_err(|source| {
        CliError::Io(IoError::File {
            path: PathBuf::from("<stdout>"),
            source,
        })
    })
}

fn cmd_simulate(
    config: &Path,
    path: &Path,
    trace: Option<&Path>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let cfg = io::read_config(config)?;
    let log = engine::run(&cfg)?;
    let summary = io::format_summary(&log.records);
    io::write_atomic(path, &io::format_tsv(&log.records))?;
    io::write_atomic(&path.with_extension("summary"), &summary)?;
    if let Some(t) = trace {
        let hv = log.trace.as_ref().expect("run always records its trace");
        io::write_atomic(t, &io::format_trace(&cfg, hv)?)?;
    }
    write_out(out, &summary)
}

fn cmd_scan(config: &Path, deltas: &str, path: &Path, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = io::read_config(config)?;
    let deltas = io::parse_angle_list(deltas).map_err(CliError::Usage)?;
    let points = stats::curve_scan(&cfg, &deltas)?;
    let table = io::format_scan(&points);
    io::write_atomic(path, &table)?;
    write_out(out, &table)
}

fn cmd_replay(
    tsfile: &Path,
    trace: &Path,
    angles: &str,
    path: &Path,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let records = io::read_tsv(tsfile)?;
    let (cfg, hv) = io::read_trace(trace)?;
    let original: RunLog = simulate(&cfg, hv)?;
    if original.records != records {
        let detail = match original.records.iter().zip(&records).find(|(x, y)| x != y) {
            Some((x, _)) => format!("first difference at slot {}", x.slot),
            None => format!(
                "{} slots in trace, {} in log",
                original.records.len(),
                records.len()
            ),
        };
        return Err(CliError::Mismatch(detail));
    }
    let a = io::parse_angle_list(angles).map_err(CliError::Usage)?;
    let [alpha, alpha_prime, beta, beta_prime] = a[..] else {
        return Err(CliError::Usage(format!(
            "--angles needs 4 values, got {}",
            a.len()
        )));
    };
    let replay = counterfactual_replay(
        &original,
        Angles::new(alpha, alpha_prime, beta, beta_prime),
        None,
    )?;
    let diff = sica::sica_locality_diff(&original, &replay)?;
    let report = io::format_diff(&diff, &original.records, &replay.records);
    io::write_atomic(path, &io::format_tsv(&replay.records))?;
    io::write_atomic(&path.with_extension("diff"), &report)?;
    write_out(out, &report)
}

fn cmd_condense(tsfile: &Path, out: &mut dyn Write) -> Result<(), CliError> {
    let records = io::read_tsv(tsfile)?;
    let table = sica::build_table(&records)?;
    let c = sica::condense(&table)?;
    let text = match c.result {
        Condensed::Table(t) => {
            let s = sica::verify_chsh_bound(&t)?;
            let j = sica::verify_ch_bound(&t)?;
            format!(
                "CONDENSED\ncolumns = {}\ndropped_zero_slots = {}\n{t}s = {s}\nj_sum = {j}\nj = {}\n",
                t.len(),
                c.dropped_zero_slots,
                j as f64 / t.len() as f64
            )
        }
        Condensed::Infeasible(w) => format!(
            "INFEASIBLE\ndropped_zero_slots = {}\nwitness = {w}\n",
            c.dropped_zero_slots
        ),
    };
    write_out(out, &text)
}
