use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};
use whopt::expr::ExprError;
use whopt::problem::ProblemSpec;
use whopt::Error;

pub const REPORT_VERSION: u32 = 1;

pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_BAD_INPUT: u8 = 3;

/// A failure that ends the run before or outside report emission.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn bad_input(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_BAD_INPUT,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    pub status: String,
    pub pass: bool,
    pub summary: String,
}

impl Verdict {
    pub fn new(status: impl Into<String>, pass: bool, summary: impl Into<String>) -> Self {
        Verdict {
            status: status.into(),
            pass,
            summary: summary.into(),
        }
    }
}

/// Inputs the user can fix exit with 3; a degree below the parametric
/// threshold and numerical failures count as validation failures.
pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Schema { .. } | Error::Precondition(_) | Error::ConePrecondition => EXIT_BAD_INPUT,
        Error::Expr(ExprError::Parse { .. } | ExprError::VariableOutOfRange { .. }) => EXIT_BAD_INPUT,
        _ => EXIT_VALIDATION,
    }
}

pub fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Expr(_) => "ExprError",
        Error::Geometry(_) => "GeometryError",
        Error::Schema { .. } => "SchemaError",
        Error::OracleFailure(_) => "OracleFailure",
        Error::NoSamples(_) => "NoSamples",
        Error::EmptyRaySet => "EmptyRaySet",
        Error::KernelEmpty => "KernelEmpty",
        Error::DegreeTooSmall { .. } => "DegreeTooSmall",
        Error::Precondition(_) => "Precondition",
        Error::ConePrecondition => "ConePrecondition",
        Error::NoFeasibleSeed => "NoFeasibleSeed",
        Error::NoFeasiblePoint => "NoFeasiblePoint",
        Error::SearchInconclusive { .. } => "SearchInconclusive",
    }
}

pub fn error_value(e: &Error) -> Value {
    let mut v = json!({"kind": error_kind(e), "message": e.to_string()});
    if let Error::Schema { pointer, .. } = e {
        v["pointer"] = json!(pointer);
    }
    v
}

pub fn problem_value(path: &Path, p: &ProblemSpec) -> Value {
    json!({
        "path": path.display().to_string(),
        "name": p.name,
        "n": p.n,
        "alpha": p.alpha_text,
        "seed": p.seed,
    })
}

pub struct Report<'a> {
    pub command: &'a str,
    pub problem: Value,
    pub config: Value,
}

impl Report<'_> {
    pub fn finish(&self, body: (&str, Value), verdict: Option<&Verdict>) -> Value {
        let mut r = json!({
            "report_version": REPORT_VERSION,
            "command": self.command,
            "problem": self.problem,
            "config": self.config,
        });
        r[body.0] = body.1;
        if let Some(v) = verdict {
            r["verdict"] = json!(v);
        }
        r
    }
}

/// Write the report to `out` (verdict line on stdout) or to stdout
/// (verdict line on stderr).
pub fn emit(out: Option<&Path>, report: &Value, line: &str) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(report).expect("reports serialize") + "\n";
    match out {
        Some(path) => {
            std::fs::write(path, text).map_err(|e| Failure {
                code: EXIT_BAD_INPUT,
                message: format!("cannot write {}: {e}", path.display()),
            })?;
            println!("{line}");
        }
        None => {
            print!("{text}");
            eprintln!("{line}");
        }
    }
    Ok(())
}
