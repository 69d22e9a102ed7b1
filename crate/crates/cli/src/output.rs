use std::io::Write;

use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use srmag_core::contact::SampleConfig;
use srmag_core::scenario::Scenario;

use crate::{CliError, OutputArgs};

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes `body` to `--out` or stdout, then the manifest if requested.
pub fn emit(
    out: &OutputArgs,
    body: &[u8],
    command: &str,
    scenario: &Scenario,
    source: &str,
    args: Value,
) -> Result<(), CliError> {
    match &out.out {
        Some(path) => std::fs::write(path, body).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?,
        None => std::io::stdout().write_all(body).map_err(|e| CliError::Input(e.to_string()))?,
    }
    if let Some(path) = &out.manifest {
        let m = manifest(command, scenario, source, args, body);
        let text = serde_json::to_string_pretty(&m).expect("manifest serializes") + "\n";
        std::fs::write(path, text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

/// Run manifest. Contains no timestamps, so identical runs give identical
/// bytes.
pub fn manifest(command: &str, scenario: &Scenario, source: &str, args: Value, body: &[u8]) -> Value {
    json!({
        "tool": "srmag",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "scenario": scenario.name,
        "scenario_sha256": sha256_hex(source.as_bytes()),
        "eval_mode": scenario.mode,
        "tolerances": scenario.tolerances,
        "seed": SampleConfig::default().seed,
        "args": args,
        "output_sha256": sha256_hex(body),
    })
}
