mod commands;
mod config;
mod render;

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use crate::commands::{Failure, Outcome};
use crate::config::FileConfig;

#[derive(Debug, Parser)]
#[command(name = "doflab", version, about = "Exact degrees-of-freedom analysis for broadcast channels with hybrid CSIT")]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Write transcripts (simulate) or violations (verify) as JSON.
    #[arg(long, global = true)]
    dump: Option<PathBuf>,
    /// Settings file of `key = value` lines; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, env = "DOFLAB_SEED")]
    seed: Option<u64>,
    #[arg(long, global = true)]
    trials: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Outer-bound region, sum-DoF and vertices for one configuration.
    Region {
        csit: Option<String>,
        #[arg(long = "csit", value_name = "CSIT")]
        csit_flag: Option<String>,
    },
    /// Sum-DoF of the ten three-receiver classes against the published values.
    Table1,
    /// Run an achievability scheme on a sampled channel.
    Simulate {
        #[arg(value_enum)]
        scheme: SchemeArg,
        #[arg(long = "csit", value_name = "CSIT")]
        csit: Option<String>,
        #[arg(long = "K", value_name = "K")]
        k: Option<usize>,
    },
    /// Randomized rank-inequality suite.
    Verify {
        csit: Option<String>,
        #[arg(long = "csit", value_name = "CSIT")]
        csit_flag: Option<String>,
        /// Comma-separated strategy kinds (default: all).
        #[arg(long, value_delimiter = ',')]
        kinds: Vec<String>,
    },
    /// Closed-form sum-DoF bounds for |P| instantaneous and |D| delayed receivers.
    Bounds {
        #[arg(long = "P", value_name = "P")]
        p: Option<usize>,
        #[arg(long = "D", value_name = "D")]
        d: Option<usize>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    Zf,
    Pdd,
    KuserD1,
}

/// Flags merged with the settings file.
#[derive(Debug, Clone)]
pub struct Settings {
    pub format: Format,
    pub out: Option<PathBuf>,
    pub dump: Option<PathBuf>,
    pub seed: u64,
    pub trials: Option<usize>,
    pub csit: Option<String>,
    pub k: Option<usize>,
    pub p: Option<usize>,
    pub d: Option<usize>,
    pub kinds: Vec<String>,
}

fn pick_csit(positional: Option<String>, flag: Option<String>) -> Result<Option<String>, Failure> {
    match (positional, flag) {
        (Some(a), Some(b)) if a != b => Err(Failure::Usage(format!("conflicting CSIT strings {a:?} and {b:?}"))),
        (a, b) => Ok(a.or(b)),
    }
}

fn settings(cli: &Cli) -> Result<Settings, Failure> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path).map_err(Failure::Usage)?,
        None => FileConfig::default(),
    };
    let format = match (cli.format, file.get("format")) {
        (Some(f), _) => f,
        (None, Some(s)) => Format::from_str(s, true).map_err(|_| Failure::Usage(format!("unknown format {s:?}")))?,
        (None, None) => Format::Text,
    };
    let (csit, k, p, d, kinds) = match &cli.command {
        Command::Region { csit, csit_flag } => (pick_csit(csit.clone(), csit_flag.clone())?, None, None, None, vec![]),
        Command::Table1 => (None, None, None, None, vec![]),
        Command::Simulate { csit, k, .. } => (csit.clone(), *k, None, None, vec![]),
        Command::Verify { csit, csit_flag, kinds } => (pick_csit(csit.clone(), csit_flag.clone())?, None, None, None, kinds.clone()),
        Command::Bounds { p, d } => (None, None, *p, *d, vec![]),
    };
    let kinds = if kinds.is_empty() {
        file.get("kinds").map(|s| s.split(',').map(|x| x.trim().to_string()).collect()).unwrap_or_default()
    } else {
        kinds
    };
    Ok(Settings {
        format,
        out: cli.out.clone().or_else(|| file.get("out").map(PathBuf::from)),
        dump: cli.dump.clone().or_else(|| file.get("dump").map(PathBuf::from)),
        seed: match cli.seed {
            Some(s) => s,
            None => file.get_parsed("seed").map_err(Failure::Usage)?.unwrap_or(0),
        },
        trials: match cli.trials {
            Some(t) => Some(t),
            None => file.get_parsed("trials").map_err(Failure::Usage)?,
        },
        csit: csit.or_else(|| file.get("csit").map(str::to_string)),
        k: match k {
            Some(k) => Some(k),
            None => file.get_parsed("K").map_err(Failure::Usage)?,
        },
        p: match p {
            Some(p) => Some(p),
            None => file.get_parsed("P").map_err(Failure::Usage)?,
        },
        d: match d {
            Some(d) => Some(d),
            None => file.get_parsed("D").map_err(Failure::Usage)?,
        },
        kinds,
    })
}

fn run(cli: &Cli) -> Result<Outcome, Failure> {
    let s = settings(cli)?;
    let outcome = match &cli.command {
        Command::Region { .. } => commands::region(&s),
        Command::Table1 => commands::table1(&s),
        Command::Simulate { scheme, .. } => commands::simulate(*scheme, &s),
        Command::Verify { .. } => commands::verify(&s),
        Command::Bounds { .. } => commands::bounds(&s),
    }?;
    emit(&s, &outcome)?;
    Ok(outcome)
}

fn write_json(path: &PathBuf, value: &serde_json::Value) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).expect("JSON values serialize");
    fs::write(path, text + "\n").map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))
}

fn emit(s: &Settings, outcome: &Outcome) -> Result<(), Failure> {
    match &s.out {
        Some(path) => fs::write(path, &outcome.body)
            .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))?,
        None => {
            let mut stdout = std::io::stdout().lock();
            // A closed pipe is not worth a failure exit.
            let _ = stdout.write_all(outcome.body.as_bytes());
        }
    }
    if let Some(dump) = &outcome.dump {
        match &s.dump {
            Some(path) => write_json(path, dump)?,
            None if outcome.code != 0 => {
                eprintln!("{}", serde_json::to_string_pretty(dump).expect("JSON values serialize"));
            }
            None => {}
        }
    }
    if let Some(msg) = &outcome.diagnostic {
        eprintln!("{msg}");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(outcome) => ExitCode::from(outcome.code),
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code())
        }
    }
}
