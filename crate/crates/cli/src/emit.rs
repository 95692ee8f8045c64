//! Report envelopes and writers.

use std::collections::BTreeMap;
use std::io::Write;

use racg::report::{to_stable_json, SCHEMA_VERSION};
use serde::Serialize;
use serde_json::Value;

use crate::config::{Format, RunConfig};
use crate::CliError;

#[derive(Serialize)]
pub struct Envelope<'a> {
    pub schema_version: &'static str,
    pub tool_version: &'static str,
    pub command: &'a str,
    pub config: &'a RunConfig,
    pub seeds: &'a BTreeMap<String, u64>,
    pub result: Value,
}

/// A finished command: its JSON result and, where one exists, a CSV view.
pub struct Output {
    pub result: Value,
    pub csv: Option<String>,
    pub seeds: BTreeMap<String, u64>,
}

impl Output {
    pub fn json<T: Serialize>(r: &T) -> Result<Output, CliError> {
        let result = serde_json::to_value(r).map_err(|e| CliError::Domain(racg::Error::Diagnostic(e.to_string())))?;
        Ok(Output { result, csv: None, seeds: BTreeMap::new() })
    }

    pub fn with_csv(mut self, csv: String) -> Output {
        self.csv = Some(csv);
        self
    }

    pub fn seed(mut self, name: &str, v: u64) -> Output {
        self.seeds.insert(name.into(), v);
        self
    }
}

fn write_to(path: Option<&str>, text: &str) -> Result<(), CliError> {
    match path {
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).and_then(|_| out.flush()).map_err(|e| CliError::Io(format!("stdout: {}", e)))
        }
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Io(format!("cannot write {}: {}", p, e))),
    }
}

/// JSON goes to the output path or stdout. CSV starts with a `#` line naming
/// the schema; with an output path the full envelope goes to `<path>.meta.json`.
pub fn emit(command: &str, cfg: &RunConfig, out: Output) -> Result<(), CliError> {
    let env = Envelope {
        schema_version: SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION"),
        command,
        config: cfg,
        seeds: &out.seeds,
        result: out.result,
    };
    let json = to_stable_json(&env)?;
    match cfg.format {
        Format::Json => write_to(cfg.out.as_deref(), &json),
        Format::Csv => {
            let Some(csv) = out.csv else {
                return Err(CliError::Usage(format!("--format csv is not available for `{}`", command)));
            };
            let text = format!("# schema_version={} command={}\n{}", SCHEMA_VERSION, command, csv);
            write_to(cfg.out.as_deref(), &text)?;
            if let Some(p) = &cfg.out {
                write_to(Some(&format!("{}.meta.json", p)), &json)?;
            }
            Ok(())
        }
    }
}
