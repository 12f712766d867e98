use std::path::PathBuf;

use thiserror::Error;

#[derive(Error, Debug)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}", config_message(.key, .line, .context, .message))]
    Config {
        key: String,
        line: Option<usize>,
        context: Option<String>,
        message: String,
    },
    #[error("{context}: {source}")]
    Core {
        context: String,
        source: rotkick_core::Error,
    },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("CSV error on {path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Usage(String),
}

fn config_message(
    key: &str,
    line: &Option<usize>,
    context: &Option<String>,
    message: &str,
) -> String {
    let mut out = format!("config key `{key}`: {message}");
    if let Some(line) = line {
        out.push_str(&format!("\n  --> line {line}"));
        if let Some(text) = context {
            out.push_str(&format!("\n   | {text}"));
        }
    }
    out
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Attaches scenario context to core errors.
pub trait Context<T> {
    fn context(self, what: impl FnOnce() -> String) -> CliResult<T>;
}

impl<T> Context<T> for rotkick_core::Result<T> {
    fn context(self, what: impl FnOnce() -> String) -> CliResult<T> {
        self.map_err(|source| CliError::Core {
            context: what(),
            source,
        })
    }
}
