use std::fs;
use std::io::Write;
use std::path::PathBuf;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::commands::CliError;
use crate::Format;

/// Version of every JSON summary layout emitted by the CLI.
pub const SCHEMA_VERSION: u32 = 1;

pub struct Context {
    out: Option<PathBuf>,
    pub format: Option<Format>,
    pub seed: Option<u64>,
}

impl Context {
    pub fn new(out: Option<PathBuf>, format: Option<Format>, seed: Option<u64>) -> Result<Self, CliError> {
        if let Some(dir) = &out {
            fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        }
        Ok(Self { out, format, seed })
    }

    pub fn format_or(&self, default: Format) -> Format {
        self.format.unwrap_or(default)
    }

    /// Writes `body` to `<out>/<stem>.<ext>`, or to standard output.
    pub fn emit(&self, stem: &str, ext: &str, body: &str) -> Result<(), CliError> {
        match &self.out {
            Some(dir) => {
                let path = dir.join(format!("{stem}.{ext}"));
                fs::write(&path, body).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
            }
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout
                    .write_all(body.as_bytes())
                    .map_err(|e| CliError::Io(e.to_string()))
            }
        }
    }

    pub fn writes_files(&self) -> bool {
        self.out.is_some()
    }
}

/// SHA-256 of the canonical JSON form of the effective parameters.
pub fn config_hash(command: &str, params: &impl Serialize) -> String {
    let value = serde_json::json!({ "command": command, "params": params });
    let canonical = serde_json::to_string(&value).expect("parameters serialize");
    let digest = Sha256::digest(canonical.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// CSV text: a timestamp comment (not covered by the hash), the config hash
/// comment, a header row and the records.
pub fn csv_document<R: Serialize>(hash: &str, rows: &[R]) -> Result<String, CliError> {
    let mut w = csv::WriterBuilder::new().has_headers(true).from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| CliError::Io(e.to_string()))?;
    }
    let body =
        String::from_utf8(w.into_inner().map_err(|e| CliError::Io(e.to_string()))?).expect("csv output is UTF-8");
    Ok(format!(
        "# generated {}\n# config-hash sha256:{hash}\n{body}",
        chrono::Utc::now().format("%Y-%m-%dT%H:%M:%SZ")
    ))
}

#[derive(Serialize)]
struct Envelope<'a, P: Serialize, R: Serialize> {
    schema_version: u32,
    command: &'a str,
    config_hash: &'a str,
    params: &'a P,
    result: &'a R,
}

pub fn json_document(command: &str, hash: &str, params: &impl Serialize, result: &impl Serialize) -> String {
    let env = Envelope {
        schema_version: SCHEMA_VERSION,
        command,
        config_hash: hash,
        params,
        result,
    };
    let mut s = serde_json::to_string_pretty(&env).expect("summary serializes");
    s.push('\n');
    s
}

/// Two-column text table.
pub fn table(rows: &[(String, String)]) -> String {
    let width = rows.iter().map(|(k, _)| k.chars().count()).max().unwrap_or(0);
    rows.iter().map(|(k, v)| format!("{k:<width$}  {v}\n")).collect()
}
