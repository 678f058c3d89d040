//! Benchmark formats, the time-dependent instance generator and solution
//! files.

mod evaluate;
mod native;
mod solomon;
mod solution;
mod td;

pub use evaluate::{evaluate_under, EvaluationReport, SLACK_BUCKETS};
pub use native::{parse_native, write_native};
pub use solomon::{parse_homberger, parse_lilim, parse_solomon, BenchOptions};
pub use solution::{parse_solution, write_solution};
pub use td::{default_profiles, flatten, generate_td, parse_profiles, FlattenMode, SpeedProfile, TdOptions};

use std::path::Path;

use crate::solver::Instance;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(line: usize, column: usize, message: impl Into<String>) -> Self {
        ParseError { line, column, message: message.into() }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Parse { path: String, source: ParseError },
}

/// Whitespace-separated tokens with their 1-based columns.
pub(crate) fn tokens(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in line.char_indices() {
        match (ch.is_whitespace(), start) {
            (true, Some(s)) => {
                out.push((s + 1, &line[s..i]));
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s + 1, &line[s..]));
    }
    out
}

pub(crate) fn number(line: usize, (col, tok): (usize, &str)) -> Result<f64, ParseError> {
    tok.parse::<f64>()
        .map_err(|_| ParseError::new(line, col, format!("expected a number, found `{tok}`")))
}

pub(crate) fn index(line: usize, (col, tok): (usize, &str)) -> Result<usize, ParseError> {
    tok.parse::<usize>()
        .map_err(|_| ParseError::new(line, col, format!("expected an index, found `{tok}`")))
}

/// Reads an instance in the native, Solomon/Homberger or Li–Lim format,
/// chosen by the file's first line.
pub fn load_instance(path: &Path, opts: &BenchOptions) -> Result<Instance, LoadError> {
    let text = std::fs::read_to_string(path).map_err(|source| LoadError::Io { path: path.display().to_string(), source })?;
    let name = path.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
    parse_any(&text, &name, opts).map_err(|source| LoadError::Parse { path: path.display().to_string(), source })
}

pub fn parse_any(text: &str, name: &str, opts: &BenchOptions) -> Result<Instance, ParseError> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let first = lines.next().unwrap_or("");
    if first.starts_with(native::MAGIC) {
        parse_native(text)
    } else if lines.next().is_some_and(|l| l.eq_ignore_ascii_case("VEHICLE")) {
        parse_solomon(text, opts)
    } else {
        parse_lilim(text, name, opts)
    }
}
