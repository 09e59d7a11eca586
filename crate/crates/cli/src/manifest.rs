//! Run manifests: enough of a run to repeat it and compare the report.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::commands::{CliError, Context, Outcome};

#[derive(Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub args: Vec<String>,
    /// Input path to SHA-256 of its contents.
    pub inputs: BTreeMap<String, String>,
    pub tool_version: String,
    pub elapsed_ms: u128,
    pub exit_code: u8,
    pub result: Value,
}

/// Drops `--emit-manifest FILE` / `--emit-manifest=FILE` from a command line.
pub fn strip_emit_flag(args: &[String]) -> Vec<String> {
    let mut out = Vec::new();
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--emit-manifest" {
            it.next();
        } else if !a.starts_with("--emit-manifest=") {
            out.push(a.clone());
        }
    }
    out
}

pub fn write(path: &Path, args: &[String], ctx: &Context, out: &Outcome, elapsed: Duration) -> Result<(), CliError> {
    let m = RunManifest {
        command: args.first().cloned().unwrap_or_default(),
        args: args.to_vec(),
        inputs: ctx.inputs.clone(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        elapsed_ms: elapsed.as_millis(),
        exit_code: out.code,
        result: out.report.clone(),
    };
    let text = serde_json::to_string_pretty(&m).expect("manifest serializes");
    std::fs::write(path, text + "\n").map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn replay(
    path: &Path,
    run: impl Fn(&[String]) -> Result<(Outcome, Context), CliError>,
) -> Result<Outcome, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let m: RunManifest =
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: not a run manifest: {e}", path.display())))?;
    let (out, ctx) = run(&m.args)?;
    for (file, digest) in &m.inputs {
        match ctx.inputs.get(file) {
            Some(d) if d == digest => {}
            Some(_) => return Err(CliError::Input(format!("input {file} changed since the manifest was written"))),
            None => return Err(CliError::Input(format!("input {file} was not read on replay"))),
        }
    }
    let matches = out.report == m.result && out.code == m.exit_code;
    let report = json!({
        "command": "replay",
        "manifest": path.display().to_string(),
        "recorded_version": m.tool_version,
        "matches": matches,
        "exit_code": out.code,
        "report": out.report,
    });
    if matches {
        Ok(Outcome { report, summary: format!("replay matches: {}", out.summary), code: out.code })
    } else {
        Ok(Outcome { report, summary: "replay differs from the recorded report".into(), code: 3 })
    }
}
