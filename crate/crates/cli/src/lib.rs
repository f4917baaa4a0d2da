//! Deterministic experiment drivers over the `umtp` library.
//!
//! Every subcommand writes one report: JSON by default, with the resolved
//! configuration, library version and PRNG name in the header, or a CSV
//! table with a fixed header. Exit codes: 0 on success, 2 when a
//! statistical test rejects, 1 on usage or data errors.

mod commands;
mod sampler;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Map, Value};
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

pub use commands::*;
pub use sampler::SamplerArgs;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid `{field}`: {reason}")]
    Data { field: &'static str, reason: String },
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn data(field: &'static str, reason: impl ToString) -> Self {
        CliError::Data { field, reason: reason.to_string() }
    }
}

impl From<umtp::Error> for CliError {
    fn from(e: umtp::Error) -> Self {
        CliError::data("data", e)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Parser, Debug)]
#[command(name = "umtp", version, about = "Samplers and verifiers for unimodular random rooted networks")]
pub struct Cli {
    /// Master seed
    #[arg(long, env = "UMTP_SEED", global = true)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    pub format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads [default: available cores]
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Draw rooted networks from a sampler.
    Sample(SampleArgs),
    /// Monte Carlo mass-transport test.
    MtpTest(MtpArgs),
    /// Configuration-model ball histograms against the UGW law.
    Converge(ConvergeArgs),
    /// Stationarity or reversibility test for a walk kernel.
    Walk(WalkArgs),
    /// Speed of simple random walk.
    Speed(SpeedArgs),
    /// Heat-kernel return probabilities at the root.
    Heat(HeatArgs),
    /// Return probabilities under coupled conductances.
    ReturnCompare(ReturnArgs),
    /// Wilson spanning trees on finite graphs.
    Ust(UstArgs),
    /// Wired minimal spanning forest on balls.
    Msf(MsfArgs),
    /// Percolation survival curves and the critical-point crossing.
    Perc(PercArgs),
    /// Isoperimetric boundary over a percolation grid.
    Iso(IsoArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Done,
    Accepted,
    Rejected,
}

/// What a subcommand produced, before serialization.
pub struct Outcome {
    /// Resolved settings added to the report's config.
    pub resolved: Map<String, Value>,
    pub result: Value,
    pub csv: String,
    pub verdict: Verdict,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Sample(_) => "sample",
            Command::MtpTest(_) => "mtp-test",
            Command::Converge(_) => "converge",
            Command::Walk(_) => "walk",
            Command::Speed(_) => "speed",
            Command::Heat(_) => "heat",
            Command::ReturnCompare(_) => "return-compare",
            Command::Ust(_) => "ust",
            Command::Msf(_) => "msf",
            Command::Perc(_) => "perc",
            Command::Iso(_) => "iso",
        }
    }

    fn args_json(&self) -> Value {
        let v = match self {
            Command::Sample(a) => serde_json::to_value(a),
            Command::MtpTest(a) => serde_json::to_value(a),
            Command::Converge(a) => serde_json::to_value(a),
            Command::Walk(a) => serde_json::to_value(a),
            Command::Speed(a) => serde_json::to_value(a),
            Command::Heat(a) => serde_json::to_value(a),
            Command::ReturnCompare(a) => serde_json::to_value(a),
            Command::Ust(a) => serde_json::to_value(a),
            Command::Msf(a) => serde_json::to_value(a),
            Command::Perc(a) => serde_json::to_value(a),
            Command::Iso(a) => serde_json::to_value(a),
        };
        v.expect("arguments serialize")
    }

    fn execute(&self, seed: u64) -> Result<Outcome, CliError> {
        match self {
            Command::Sample(a) => sample(a, seed),
            Command::MtpTest(a) => mtp_test(a, seed),
            Command::Converge(a) => converge(a, seed),
            Command::Walk(a) => walk_test(a, seed),
            Command::Speed(a) => speed(a, seed),
            Command::Heat(a) => heat(a, seed),
            Command::ReturnCompare(a) => return_compare(a, seed),
            Command::Ust(a) => ust(a, seed),
            Command::Msf(a) => msf(a, seed),
            Command::Perc(a) => perc(a, seed),
            Command::Iso(a) => iso(a, seed),
        }
    }
}

/// Runs one command line and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    match execute(&cli) {
        Ok(Verdict::Rejected) => 2,
        Ok(_) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

pub fn execute(cli: &Cli) -> Result<Verdict, CliError> {
    let seed = cli.seed.ok_or_else(|| CliError::data("seed", "pass --seed or set UMTP_SEED"))?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(w) = cli.workers {
        if w == 0 {
            return Err(CliError::data("workers", "must be at least 1"));
        }
        pool = pool.num_threads(w);
    }
    let pool = pool.build().map_err(|e| CliError::data("workers", e))?;
    let outcome = pool.install(|| cli.command.execute(seed))?;
    let text = match cli.format {
        Format::Json => {
            let mut config = Map::new();
            config.insert("seed".into(), json!(seed));
            if let Value::Object(args) = cli.command.args_json() {
                config.extend(args);
            }
            config.extend(outcome.resolved.clone());
            let verdict = match outcome.verdict {
                Verdict::Done => "done",
                Verdict::Accepted => "accepted",
                Verdict::Rejected => "rejected",
            };
            let report = json!({
                "command": cli.command.name(),
                "version": umtp::VERSION,
                "prng": umtp::rng::PRNG_NAME,
                "config": config,
                "outcome": verdict,
                "result": outcome.result,
            });
            serde_json::to_string_pretty(&report).expect("report serializes") + "\n"
        }
        Format::Csv => outcome.csv.clone(),
    };
    match &cli.out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(outcome.verdict)
}
