use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use clap::ValueEnum;
use serde::Serialize;

use crate::error::{CliError, CliResult, Stage};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl Format {
    fn name(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
            Format::Svg => "svg",
        }
    }
}

/// The requested format if `command` supports it, else its first format.
pub fn choose(requested: Option<Format>, allowed: &[Format], command: &str) -> CliResult<Format> {
    match requested {
        None => Ok(allowed[0]),
        Some(f) if allowed.contains(&f) => Ok(f),
        Some(f) => {
            let names: Vec<&str> = allowed.iter().map(|a| a.name()).collect();
            Err(CliError::usage(format!("`{command}` cannot write {}; use {}", f.name(), names.join(" or "))))
        }
    }
}

pub fn sink(out: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match out {
        None => Box::new(BufWriter::new(io::stdout())),
        Some(p) => Box::new(BufWriter::new(File::create(p).input(&p.display().to_string())?)),
    })
}

pub fn json<T: Serialize>(value: &T, out: Option<&Path>) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    text_out(&text, out)
}

pub fn text_out(text: &str, out: Option<&Path>) -> CliResult<()> {
    let mut w = sink(out)?;
    w.write_all(text.as_bytes()).stage("write")?;
    w.flush().stage("write")
}

/// Writes rows of already-formatted fields as CSV.
pub fn csv_rows<I, R>(header: &[&str], rows: I, out: Option<&Path>) -> CliResult<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut text = header.join(",");
    text.push('\n');
    for r in rows {
        let fields: Vec<String> = r.into_iter().collect();
        text.push_str(&fields.join(","));
        text.push('\n');
    }
    text_out(&text, out)
}
