use std::io::Write as _;
use std::path::Path;

use clap::ValueEnum;
use complement_forge::{Error, Result};
use serde_json::Value;

/// Version of the JSON documents printed by every subcommand.
pub const OUTPUT_SCHEMA: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

/// A rendered result in every format the command supports.
pub struct Output {
    pub command: &'static str,
    pub json: Value,
    pub text: String,
    pub csv: Option<String>,
}

pub fn emit(out: &Output, format: Format, path: Option<&Path>) -> Result<()> {
    let body = match format {
        Format::Text => out.text.clone(),
        Format::Json => {
            let mut doc = serde_json::Map::new();
            doc.insert("schema".into(), OUTPUT_SCHEMA.into());
            doc.insert("command".into(), out.command.into());
            doc.insert("result".into(), out.json.clone());
            serde_json::to_string_pretty(&Value::Object(doc))? + "\n"
        }
        Format::Csv => out.csv.clone().ok_or_else(|| {
            Error::InvalidInput(format!("{} has no CSV output", out.command))
        })?,
    };
    match path {
        Some(p) => std::fs::write(p, body)?,
        None => std::io::stdout().write_all(body.as_bytes())?,
    }
    Ok(())
}
