//! Run manifests: every report embeds the subcommand, its full parameter
//! set, the seed, the tool version, the wall clock, and a digest of the
//! numerical payload.  Two runs with the same manifest (minus wall clock)
//! produce byte-identical payloads.

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use unimod::Error;

#[derive(Serialize)]
struct Manifest {
    subcommand: &'static str,
    params: Value,
    seed: Option<u64>,
    version: &'static str,
    /// Excluded from the replay identity.
    wall_clock_unix: f64,
    /// SHA-256 of the canonical payload bytes.
    output_digest: String,
}

fn build(subcommand: &'static str, params: Value, seed: Option<u64>, payload: &[u8]) -> Manifest {
    let wall_clock_unix = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0);
    let digest = Sha256::digest(payload);
    let mut hex = String::with_capacity(64);
    for byte in digest {
        hex.push_str(&format!("{byte:02x}"));
    }
    Manifest {
        subcommand,
        params,
        seed,
        version: env!("CARGO_PKG_VERSION"),
        wall_clock_unix,
        output_digest: format!("sha256:{hex}"),
    }
}

/// Prints `{ "manifest": ..., "report": ... }`; the digest covers the
/// compact serialization of the report.
pub fn emit_json(
    subcommand: &'static str,
    params: Value,
    seed: Option<u64>,
    report: Value,
) -> Result<(), Error> {
    let canonical = serde_json::to_string(&report).expect("serializable report");
    let manifest = build(subcommand, params, seed, canonical.as_bytes());
    let doc = json!({
        "manifest": manifest,
        "report": report,
    });
    println!("{}", serde_json::to_string_pretty(&doc).expect("serializable document"));
    Ok(())
}

/// Prints the manifest as a `#` comment line followed by the CSV rows; the
/// digest covers the row bytes.
pub fn emit_csv(
    subcommand: &'static str,
    params: Value,
    seed: Option<u64>,
    rows: &str,
) -> Result<(), Error> {
    let manifest = build(subcommand, params, seed, rows.as_bytes());
    println!(
        "# unimod-manifest: {}",
        serde_json::to_string(&manifest).expect("serializable manifest")
    );
    print!("{rows}");
    Ok(())
}
