//! Report envelopes, output files and exit codes.

use serde::Serialize;
use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

/// Why a command failed; each variant has its own exit code.
#[derive(Debug)]
pub enum Failure {
    /// Domain errors and guard violations (exit 1).
    Domain(String),
    /// Unreadable or malformed input, unwritable output (exit 2).
    Input(String),
    /// A computed result broke an invariant that holds by theory (exit 3).
    Invariant(String),
}

impl Failure {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            Failure::Domain(_) => 1,
            Failure::Input(_) => 2,
            Failure::Invariant(_) => 3,
        })
    }

    pub fn message(&self) -> String {
        match self {
            Failure::Domain(m) => format!("error: {m}"),
            Failure::Input(m) => format!("input error: {m}"),
            Failure::Invariant(m) => format!("invariant violated: {m}"),
        }
    }
}

impl From<fsmac::Error> for Failure {
    fn from(e: fsmac::Error) -> Self {
        if e.is_input_error() {
            Failure::Input(e.to_string())
        } else {
            Failure::Domain(e.to_string())
        }
    }
}

pub type CmdResult<T = ()> = Result<T, Failure>;

/// Provenance of a report. Everything here may differ between reruns; the
/// payload next to it may not.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: &'static str,
    pub spec: Option<PathBuf>,
    pub config: Value,
    pub seed: Option<u64>,
    pub threads: usize,
    pub parallel_backend: bool,
    pub version: &'static str,
    pub started_unix_secs: u64,
    pub duration_secs: f64,
}

#[derive(Serialize)]
struct Envelope<'a, P: Serialize> {
    manifest: &'a RunManifest,
    payload: &'a P,
}

/// Collects a command's outputs and writes them in one place.
pub struct Reporter {
    command: &'static str,
    out: Option<PathBuf>,
    started: Instant,
    started_unix: u64,
    threads: usize,
}

impl Reporter {
    pub fn new(command: &'static str, out: Option<PathBuf>, threads: usize) -> Self {
        let started_unix = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        Self { command, out, started: Instant::now(), started_unix, threads }
    }

    pub fn manifest(&self, spec: Option<&Path>, config: Value, seed: Option<u64>) -> RunManifest {
        RunManifest {
            command: self.command,
            spec: spec.map(Path::to_path_buf),
            config,
            seed,
            threads: self.threads,
            parallel_backend: fsmac::par::is_parallel(),
            version: env!("CARGO_PKG_VERSION"),
            started_unix_secs: self.started_unix,
            duration_secs: self.started.elapsed().as_secs_f64(),
        }
    }

    fn ensure_dir(dir: &Path) -> CmdResult {
        std::fs::create_dir_all(dir).map_err(|e| Failure::Input(format!("cannot create {}: {e}", dir.display())))
    }

    /// Writes `<command>.json` into the output directory, or prints it when
    /// no directory was given. The summary goes to stdout in the first case
    /// and to stderr in the second, so stdout stays machine-readable.
    pub fn finish<P: Serialize>(&self, manifest: &RunManifest, payload: &P, summary: &str) -> CmdResult {
        let text = serde_json::to_string_pretty(&Envelope { manifest, payload })
            .map_err(|e| Failure::Invariant(format!("report is not serializable: {e}")))?;
        match &self.out {
            Some(dir) => {
                Self::ensure_dir(dir)?;
                let path = dir.join(format!("{}.json", self.command));
                write_file(&path, &(text + "\n"))?;
                println!("{summary}");
            }
            None => {
                println!("{text}");
                eprintln!("{summary}");
            }
        }
        Ok(())
    }

    /// Writes a CSV side file when an output directory is set.
    pub fn side_file(&self, name: &str, contents: &str) -> CmdResult {
        if let Some(dir) = &self.out {
            Self::ensure_dir(dir)?;
            write_file(&dir.join(name), contents)?;
        }
        Ok(())
    }
}

fn write_file(path: &Path, contents: &str) -> CmdResult {
    std::fs::write(path, contents).map_err(|e| Failure::Input(format!("cannot write {}: {e}", path.display())))
}
