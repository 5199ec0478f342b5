//! Result and error documents.

use std::path::Path;

use patchpeps::estimator::LadderStep;
use patchpeps::{Error, ErrorClass, VERSION};
use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize)]
pub struct Runtime {
    pub parallel: bool,
    pub threads: usize,
}

#[derive(Debug, Serialize)]
pub struct Timings {
    pub total_ms: f64,
}

#[derive(Debug, Serialize)]
pub struct ResultDocument<'a, C: Serialize, R: Serialize> {
    pub schema_version: u32,
    pub command: &'a str,
    pub version: &'a str,
    pub config: &'a C,
    pub runtime: Runtime,
    pub result: R,
    pub timings: Timings,
}

#[derive(Debug, Serialize)]
pub struct ErrorRecord {
    pub code: &'static str,
    pub class: &'static str,
    pub exit_code: i32,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ladder: Option<Vec<LadderStep>>,
}

#[derive(Debug, Serialize)]
pub struct ErrorDocument<'a, C: Serialize> {
    pub schema_version: u32,
    pub command: &'a str,
    pub version: &'a str,
    pub config: &'a C,
    pub error: ErrorRecord,
}

pub fn exit_code(e: &Error) -> i32 {
    match e.class() {
        ErrorClass::Input => 1,
        ErrorClass::Resource => 2,
        ErrorClass::Numerical => 3,
    }
}

impl ErrorRecord {
    pub fn from_error(e: &Error) -> Self {
        let class = match e.class() {
            ErrorClass::Input => "input",
            ErrorClass::Resource => "resource",
            ErrorClass::Numerical => "numerical",
        };
        let ladder = match e {
            Error::LadderExhausted { ladder, .. } => Some(ladder.clone()),
            _ => None,
        };
        ErrorRecord { code: e.code(), class, exit_code: exit_code(e), message: e.to_string(), ladder }
    }
}

pub fn result_doc<'a, C: Serialize, R: Serialize>(command: &'a str, config: &'a C, runtime: Runtime, result: R, total_ms: f64) -> ResultDocument<'a, C, R> {
    ResultDocument {
        schema_version: SCHEMA_VERSION,
        command,
        version: VERSION,
        config,
        runtime,
        result,
        timings: Timings { total_ms },
    }
}

pub fn error_doc<'a, C: Serialize>(command: &'a str, config: &'a C, e: &Error) -> ErrorDocument<'a, C> {
    ErrorDocument { schema_version: SCHEMA_VERSION, command, version: VERSION, config, error: ErrorRecord::from_error(e) }
}

/// Write `text` to `out`, or to stdout when no path is given.
pub fn emit(out: Option<&Path>, text: &str) -> patchpeps::Result<()> {
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => {
            use std::io::Write;
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(())
}
