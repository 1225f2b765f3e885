//! Artifact writing, provenance headers and error records.

use std::io::Write;
use std::path::Path;
use std::process::ExitCode;

use rainbow_core::io::{write_bytes, Table};
use rainbow_core::qubism::QubismImage;
use rainbow_core::Error;
use serde_json::{json, Value};

use crate::{Cli, Format};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or flag combinations (exit 2).
    Usage(String),
    /// Failure reported by the numerical kernels (exit 2 for bad input, 3 otherwise).
    Core(Error),
    /// `validate` found violations (exit 1).
    Validation(usize),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

pub fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(e) if e.is_usage() => 2,
            CliError::Core(_) => 3,
            CliError::Validation(_) => 1,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Validation(_) => "validation",
            CliError::Core(e) => match e {
                Error::Domain(_) => "domain",
                Error::Contract(_) => "contract",
                Error::Numeric { .. } => "numeric",
                Error::DegenerateCoupling { .. } => "degenerate_coupling",
                Error::ZeroModes { .. } => "zero_modes",
                Error::RankDeficient { .. } => "rank_deficient",
                Error::Resource(_) => "resource",
                Error::Io { .. } => "io",
            },
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Usage(m) => m.clone(),
            CliError::Core(e) => e.to_string(),
            CliError::Validation(n) => format!("{n} check(s) failed"),
        }
    }
}

/// Prints a one-line JSON error record on stderr and maps it to the exit status.
pub fn fail(e: &CliError) -> ExitCode {
    let record = json!({
        "error": e.kind(),
        "message": e.message(),
        "exit_code": e.exit_code(),
    });
    eprintln!("{record}");
    ExitCode::from(e.exit_code())
}

/// Tool version plus the full parsed configuration.
pub struct Provenance {
    pub command: String,
    pub config: Value,
}

impl Provenance {
    pub fn new(cli: &Cli) -> Self {
        let config = serde_json::to_value(cli).expect("configuration serializes");
        let command = config["command"]["command"].as_str().unwrap_or("").to_string();
        Self { command, config }
    }

    pub fn lines(&self) -> Vec<String> {
        vec![
            format!("rainbow-lab {}", env!("CARGO_PKG_VERSION")),
            format!("config: {}", self.config),
        ]
    }

    pub fn json(&self) -> Value {
        json!({
            "tool": "rainbow-lab",
            "version": env!("CARGO_PKG_VERSION"),
            "config": self.config,
        })
    }

    pub fn write_table(&self, table: Table, path: &Path) -> Result<(), CliError> {
        Ok(stamp(self, table).write(path)?)
    }
}

/// Prepends the provenance lines to a table's own comments.
fn stamp(p: &Provenance, table: Table) -> Table {
    let mut comments = p.lines();
    comments.extend(table.comments);
    Table { comments, ..table }
}

/// What a command produced; `format` picks the rendering.
pub struct Output {
    pub table: Option<Table>,
    pub json: Option<Value>,
    pub image: Option<QubismImage>,
    pub default_format: Format,
}

impl Output {
    pub fn table(table: Table) -> Self {
        Self {
            table: Some(table),
            json: None,
            image: None,
            default_format: Format::Csv,
        }
    }

    pub fn with_json(mut self, json: Value) -> Self {
        self.json = Some(json);
        self
    }
}

/// Parses numeric cells so a table renders as a JSON array of records.
pub fn table_to_json(table: &Table) -> Value {
    let rows = table
        .rows
        .iter()
        .map(|r| {
            let obj = table
                .columns
                .iter()
                .zip(r)
                .map(|(c, v)| {
                    let value = match v.parse::<f64>() {
                        Ok(x) if x.is_finite() => json!(x),
                        _ => json!(v),
                    };
                    (c.clone(), value)
                })
                .collect::<serde_json::Map<_, _>>();
            Value::Object(obj)
        })
        .collect();
    Value::Array(rows)
}

pub fn emit(cli: &Cli, prov: &Provenance, out: Output) -> Result<(), CliError> {
    let format = cli.format.unwrap_or(out.default_format);
    let bytes = match format {
        Format::Csv => {
            let table = out
                .table
                .ok_or_else(|| usage(format!("{} has no CSV form", prov.command)))?;
            stamp(prov, table).render().into_bytes()
        }
        Format::Json => {
            let data = match (out.json, &out.table) {
                (Some(j), _) => j,
                (None, Some(t)) => table_to_json(t),
                (None, None) => return Err(usage(format!("{} has no JSON form", prov.command))),
            };
            let mut s = serde_json::to_string_pretty(&json!({ "provenance": prov.json(), "data": data }))
                .expect("artifacts serialize");
            s.push('\n');
            s.into_bytes()
        }
        Format::Ppm => {
            let image = out
                .image
                .ok_or_else(|| usage(format!("{} has no PPM form", prov.command)))?;
            image.to_ppm_bytes_with_comments(&prov.lines())
        }
    };
    match &cli.out {
        Some(path) => write_bytes(path, &bytes)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(&bytes)
                .and_then(|_| stdout.flush())
                .map_err(|source| Error::Io {
                    path: "<stdout>".into(),
                    source,
                })?;
        }
    }
    Ok(())
}
